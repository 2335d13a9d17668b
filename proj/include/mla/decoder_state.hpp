#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mla/attention.hpp"
#include "mla/matrix.hpp"

namespace mla {

/// Running per-head state for autoregressive linear attention: the K^T*V
/// accumulator and key-feature sum per feature part (one part for ReLU,
/// cos/sin pair for cosine re-weighting). Each step touches O(d_kh*d_vh)
/// work regardless of how many rows have been consumed.
struct DecoderBlockState {
    Mechanism mechanism = Mechanism::ReluLinear;
    std::size_t d_kh = 0;
    std::size_t d_vh = 0;

    /// One d_kh x d_vh accumulator per feature part (running K^T*V).
    std::vector<Matrix> kv_acc;
    /// One length-d_kh vector per feature part (running column sum of the
    /// transformed keys).
    std::vector<std::vector<double>> key_sum;
    /// Transformed keys retained per part when keep_k was requested.
    std::optional<std::vector<Matrix>> kept_keys;

    /// Key rows consumed so far.
    std::size_t steps_seen = 0;
    /// Number of accumulator updates applied (update flag honored).
    std::size_t update_count = 0;
    /// Scalar loop iterations executed by the most recent decode_step;
    /// instrumentation for the constant-per-step-work check.
    std::uint64_t ops_last_step = 0;

    std::size_t parts() const { return kv_acc.size(); }
};

/// One decoding step's inputs: the query row, an optional chunk of new
/// key/value rows with their positions, the update flag, the query's own
/// position, and the frozen re-weighting lengths.
struct StepInput {
    Matrix q_row;                        // 1 x d_kh
    Matrix new_k_rows;                   // chunk x d_kh (ignored when !update)
    Matrix new_v_rows;                   // chunk x d_vh
    bool update = true;                  // flag f
    std::vector<std::size_t> positions;  // positions of the new key rows
    std::size_t q_position = 0;          // query position for re-weighting
    ReweightLengths lengths;             // frozen predicted N / M
};

/// Zeroed accumulators for the given mechanism. Cosine re-weighting
/// allocates both the cos and sin pairs. Softmax has no O(1) reusable
/// state and is rejected.
DecoderBlockState init_state(Mechanism mech, std::size_t d_kh, std::size_t d_vh,
                             bool keep_k = false);

/// Advances the state by one step: folds the new chunk into the
/// accumulators exactly once when the update flag is set (leaves the state
/// untouched otherwise), then answers the query against everything
/// consumed so far. Returns the 1 x d_vh attention row.
Matrix decode_step(DecoderBlockState& state, const StepInput& input);

/// Streams q/k/v rows through decode_step one row per step (update flag
/// set, chunk size 1). Output row t attends to rows [0, t].
Matrix run_incremental_self_attention(const Matrix& q_rows, const Matrix& k_rows,
                                      const Matrix& v_rows, Mechanism mech,
                                      ReweightLengths lengths);

/// Builds the accumulators from the full encoder output once, then
/// answers every query row against the reused state.
Matrix run_incremental_cross_attention(const Matrix& q_rows, const Matrix& enc_k,
                                       const Matrix& enc_v, Mechanism mech,
                                       ReweightLengths lengths);

} // namespace mla
