#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mla/attention.hpp"
#include "mla/length_predict.hpp"
#include "mla/matrix.hpp"

namespace mla {

/// Where the decoder's re-weighting target length comes from at inference.
enum class LengthSource { None, Fixed, Ratio, Lut };

/// Per-block mechanism assignment plus model geometry. The three block
/// roles (encoder self-attention, decoder self-attention, decoder
/// cross-attention) are configured independently.
struct MlaConfig {
    Mechanism esa = Mechanism::Softmax;
    Mechanism dsa = Mechanism::Softmax;
    Mechanism dca = Mechanism::Softmax;
    std::size_t layers_enc = 2;
    std::size_t layers_dec = 2;
    HeadGeometry geometry{4, 32, 8, 8};
    std::size_t ffn_dim = 64;

    LengthSource length_source = LengthSource::None;
    double alpha = 1.25;              // Ratio source
    std::size_t fixed_target_len = 1; // Fixed source
    LutPredictor lut;                 // Lut source

    /// Throws ConfigError when a cosine-re-weighted decoder block lacks a
    /// length source or the geometry is inconsistent.
    void validate() const;
};

struct LayerNormParams {
    std::vector<double> gain;
    std::vector<double> bias;
};

struct FfnWeights {
    Matrix w1; // d_model x ffn_dim
    std::vector<double> b1;
    Matrix w2; // ffn_dim x d_model
    std::vector<double> b2;
};

struct EncoderLayer {
    LayerNormParams ln_attn;
    MultiHeadWeights attn;
    LayerNormParams ln_ffn;
    FfnWeights ffn;
};

struct DecoderLayer {
    LayerNormParams ln_self;
    MultiHeadWeights self_attn;
    LayerNormParams ln_cross;
    MultiHeadWeights cross_attn;
    LayerNormParams ln_ffn;
    FfnWeights ffn;
};

/// Randomly initialized (or file-loaded) encoder-decoder stack with
/// pre-norm layer ordering. Weights depend only on (config geometry,
/// seed), never on the mechanism assignment.
struct ToyModel {
    MlaConfig config;
    std::uint64_t seed = 0;
    std::vector<EncoderLayer> encoder;
    std::vector<DecoderLayer> decoder;
};

ToyModel build_model(const MlaConfig& cfg, std::uint64_t seed);

/// Runs the encoder stack; output shape equals the input shape. A
/// zero-layer encoder is the identity.
Matrix encode(const ToyModel& model, const Matrix& src);

/// How greedy_decode evaluates decoder attention: the production path
/// (incremental states for linear mechanisms, cached keys/values for
/// softmax) or full per-step recomputation over the whole prefix.
enum class DecodeMode { Incremental, Recompute };

/// Autoregressive decode for exactly `max_steps` steps, one d_model row
/// per step; step t sees only steps < t and the encoder output. The first
/// step consumes a zero start frame.
Matrix greedy_decode(const ToyModel& model, const Matrix& enc_out, std::size_t max_steps,
                     DecodeMode mode = DecodeMode::Incremental);

/// Predicted target length per the config's length source; `src_rows` is
/// the source-side length the predictors map from.
std::size_t resolve_target_length(const MlaConfig& cfg, std::size_t src_rows);

/// Pre-norm layer normalization applied per row (eps 1e-5).
Matrix layer_norm_rows(const Matrix& m, const LayerNormParams& params);

/// Two-layer ReLU feed-forward: relu(x*w1 + b1)*w2 + b2.
Matrix ffn_forward(const Matrix& m, const FfnWeights& ffn);

/// Key-value text config: `key = value` lines, '#' comments. Documented
/// keys: esa/dsa/dca, layers_enc, layers_dec, d_model, heads, ffn_dim,
/// length_source (none|fixed|ratio|lut), fixed_target_len, alpha,
/// lut_file, lut_dampening.
MlaConfig load_model_config(const std::filesystem::path& path);
MlaConfig parse_model_config(const std::string& text, const std::filesystem::path& base_dir = {});

/// Binary weight container ("MLAW"): little-endian magic + version +
/// tensor count, then per tensor a named row-major double block.
/// Round-trips bit-exactly.
void save_weights(const ToyModel& model, const std::filesystem::path& path);

/// Loads weights into a model built with a matching geometry; throws
/// ConfigError when names or shapes disagree.
void load_weights(ToyModel& model, const std::filesystem::path& path);

} // namespace mla
