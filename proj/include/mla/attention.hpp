#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "mla/matrix.hpp"

namespace mla {

/// The three attention mechanisms admitted per block: quadratic softmax,
/// ReLU-similarity linear attention (identity re-weighting), and
/// cosine-re-weighted linear attention.
enum class Mechanism { Softmax, ReluLinear, CosFormer };

const char* mechanism_name(Mechanism mech);
Mechanism mechanism_from_name(std::string_view name);

/// Multi-head split of the embedding space. Heads divide the embedding
/// evenly on both the key and value sides.
struct HeadGeometry {
    std::size_t num_heads = 1;
    std::size_t d_model = 1;
    std::size_t d_kh = 1;
    std::size_t d_vh = 1;

    /// Throws ConfigError unless num_heads*d_kh == d_model and
    /// num_heads*d_vh == d_model.
    void validate() const;
};

/// Sequence lengths used by cosine re-weighting: `query_len` (N) scales
/// query positions, `key_len` (M) scales key positions. Self-attention
/// uses query_len == key_len.
struct ReweightLengths {
    std::size_t query_len = 1; // N
    std::size_t key_len = 1;   // M
};

/// Denominators below this are clamped before dividing; an all-negative
/// query row maps to a zero feature vector and would otherwise divide by
/// zero.
inline constexpr double kDenomEpsilon = 1e-6;

/// Elementwise max(0, x).
Matrix relu_feature_map(const Matrix& m);

/// Cosine/sine-scaled ReLU feature pair. Row p of `cos_part` is
/// relu(m)_p * cos((pi/2) * positions[p]/length); `sin_part` uses sin.
/// Positions may exceed `length` (length-prediction undershoot); the
/// angle simply continues past pi/2.
struct CosFeatureMaps {
    Matrix cos_part;
    Matrix sin_part;
};

CosFeatureMaps cosformer_feature_maps(const Matrix& m,
                                      std::span<const std::size_t> positions,
                                      std::size_t length);

/// The cosine re-weighting multiplier cos((pi/2)(i/N - j/M)).
double cos_reweight_multiplier(std::size_t i, std::size_t j, ReweightLengths lengths);

/// Softmax attention scaled by 1/sqrt(q.cols()); with `causal`, score
/// (i, j) is masked for j > i.
Matrix scaled_dot_attention(const Matrix& q, const Matrix& k, const Matrix& v, bool causal);

/// Reordered linear attention over pre-computed feature maps. One feature
/// part for ReLU similarity, two (cos/sin) for cosine re-weighting; part
/// contributions are summed before normalization. Causal evaluation runs
/// prefix sums of K^T*V and the key-feature column sums.
Matrix linear_attention(std::span<const Matrix> q_features,
                        std::span<const Matrix> k_features,
                        const Matrix& v, bool causal);

/// Quadratic-order ground truth: row i is sum_j w(i,j) V_j / sum_j w(i,j)
/// with the mechanism's similarity weight w. Used as the oracle side of
/// every linear-vs-quadratic equivalence check.
Matrix similarity_attention_oracle(const Matrix& q, const Matrix& k, const Matrix& v,
                                   Mechanism mech, ReweightLengths lengths, bool causal);

/// Per-head projection weights plus the output projection.
struct MultiHeadWeights {
    std::vector<Matrix> wq; // each d_model x d_kh
    std::vector<Matrix> wk; // each d_model x d_kh
    std::vector<Matrix> wv; // each d_model x d_vh
    Matrix wo;              // (num_heads * d_vh) x d_model

    std::size_t num_heads() const { return wq.size(); }
    void validate(const HeadGeometry& geom) const;
};

/// Per-head attention with the selected mechanism, concatenated and
/// projected by wo. Feature maps are applied after the per-head
/// projections.
Matrix multi_head_attention(const Matrix& q, const Matrix& k, const Matrix& v,
                            const MultiHeadWeights& weights, Mechanism mech,
                            ReweightLengths lengths, bool causal);

} // namespace mla
