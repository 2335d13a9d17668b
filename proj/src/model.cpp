#include "mla/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "mla/decoder_state.hpp"
#include "mla/errors.hpp"

namespace mla {

namespace {

constexpr double kLayerNormEps = 1e-5;
constexpr char kWeightMagic[4] = {'M', 'L', 'A', 'W'};
constexpr std::uint32_t kWeightVersion = 1;

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

LayerNormParams make_ln(std::size_t d) {
    return {std::vector<double>(d, 1.0), std::vector<double>(d, 0.0)};
}

MultiHeadWeights make_attention_weights(const HeadGeometry& geom, Rng& rng) {
    MultiHeadWeights w;
    const double s_in = 1.0 / std::sqrt(static_cast<double>(geom.d_model));
    for (std::size_t h = 0; h < geom.num_heads; ++h) {
        w.wq.push_back(random_matrix(geom.d_model, geom.d_kh, rng, s_in));
        w.wk.push_back(random_matrix(geom.d_model, geom.d_kh, rng, s_in));
        w.wv.push_back(random_matrix(geom.d_model, geom.d_vh, rng, s_in));
    }
    w.wo = random_matrix(geom.num_heads * geom.d_vh, geom.d_model, rng, s_in);
    return w;
}

FfnWeights make_ffn_weights(std::size_t d_model, std::size_t ffn_dim, Rng& rng) {
    FfnWeights f;
    const double s1 = 1.0 / std::sqrt(static_cast<double>(d_model));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(ffn_dim));
    f.w1 = random_matrix(d_model, ffn_dim, rng, s1);
    f.b1.resize(ffn_dim);
    for (double& b : f.b1) b = rng.uniform(-0.05, 0.05);
    f.w2 = random_matrix(ffn_dim, d_model, rng, s2);
    f.b2.resize(d_model);
    for (double& b : f.b2) b = rng.uniform(-0.05, 0.05);
    return f;
}

// Quadratic-order multi-head attention used by DecodeMode::Recompute: the
// same projections, but similarity weights evaluated in their unreordered
// form so the incremental path is checked against an independent route.
Matrix multi_head_attention_quadratic(const Matrix& q, const Matrix& k, const Matrix& v,
                                      const MultiHeadWeights& weights, Mechanism mech,
                                      ReweightLengths lengths, bool causal) {
    const std::size_t heads = weights.num_heads();
    const std::size_t d_vh = weights.wv[0].cols();
    Matrix concat(q.rows(), heads * d_vh);
    for (std::size_t h = 0; h < heads; ++h) {
        const Matrix qh = matmul(q, weights.wq[h]);
        const Matrix kh = matmul(k, weights.wk[h]);
        const Matrix vh = matmul(v, weights.wv[h]);
        const Matrix ah = mech == Mechanism::Softmax
                              ? scaled_dot_attention(qh, kh, vh, causal)
                              : similarity_attention_oracle(qh, kh, vh, mech, lengths, causal);
        for (std::size_t i = 0; i < q.rows(); ++i)
            for (std::size_t b = 0; b < d_vh; ++b) concat(i, h * d_vh + b) = ah(i, b);
    }
    return matmul(concat, weights.wo);
}

// Per-layer decoding state for the production (incremental) path.
struct LayerSession {
    // Decoder self-attention: linear mechanisms reuse accumulators,
    // softmax keeps the projected key/value history per head.
    std::vector<DecoderBlockState> self_states;
    std::vector<Matrix> self_k_cache;
    std::vector<Matrix> self_v_cache;
    // Decoder cross-attention: accumulators (or projected encoder
    // keys/values) built once before the first step.
    std::vector<DecoderBlockState> cross_states;
    std::vector<Matrix> cross_k;
    std::vector<Matrix> cross_v;
};

Matrix single_row(std::span<const double> values) {
    Matrix m(0, values.size());
    m.append_row(values);
    return m;
}

} // namespace

void MlaConfig::validate() const {
    geometry.validate();
    if (ffn_dim == 0) throw ConfigError("model config: ffn_dim must be >= 1");
    if ((dsa == Mechanism::CosFormer || dca == Mechanism::CosFormer) &&
        length_source == LengthSource::None)
        throw ConfigError("model config: cosformer decoder blocks need a length source "
                          "(fixed, ratio, or lut)");
    if (length_source == LengthSource::Fixed && fixed_target_len == 0)
        throw ConfigError("model config: fixed_target_len must be >= 1");
    if (length_source == LengthSource::Ratio && alpha <= 0.0)
        throw ConfigError("model config: alpha must be > 0");
    if (length_source == LengthSource::Lut &&
        (lut.fallback <= 0.0 || lut.dampening <= 0.0))
        throw ConfigError("model config: lut predictor needs positive fallback/dampening");
}

ToyModel build_model(const MlaConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    ToyModel model;
    model.config = cfg;
    model.seed = seed;
    Rng rng(seed);
    // Draw order is fixed by geometry alone; the mechanism assignment never
    // consumes randomness, so eSA/dSA/dCA choices leave all weights bitwise
    // unchanged.
    for (std::size_t i = 0; i < cfg.layers_enc; ++i) {
        EncoderLayer layer;
        layer.ln_attn = make_ln(cfg.geometry.d_model);
        layer.attn = make_attention_weights(cfg.geometry, rng);
        layer.ln_ffn = make_ln(cfg.geometry.d_model);
        layer.ffn = make_ffn_weights(cfg.geometry.d_model, cfg.ffn_dim, rng);
        model.encoder.push_back(std::move(layer));
    }
    for (std::size_t i = 0; i < cfg.layers_dec; ++i) {
        DecoderLayer layer;
        layer.ln_self = make_ln(cfg.geometry.d_model);
        layer.self_attn = make_attention_weights(cfg.geometry, rng);
        layer.ln_cross = make_ln(cfg.geometry.d_model);
        layer.cross_attn = make_attention_weights(cfg.geometry, rng);
        layer.ln_ffn = make_ln(cfg.geometry.d_model);
        layer.ffn = make_ffn_weights(cfg.geometry.d_model, cfg.ffn_dim, rng);
        model.decoder.push_back(std::move(layer));
    }
    return model;
}

Matrix layer_norm_rows(const Matrix& m, const LayerNormParams& params) {
    if (params.gain.size() != m.cols() || params.bias.size() != m.cols())
        throw ShapeError("layer_norm_rows: parameter length " +
                         std::to_string(params.gain.size()) + " vs " +
                         std::to_string(m.cols()) + " columns");
    Matrix out(m.rows(), m.cols());
    const double n = static_cast<double>(m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double mean = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) mean += m(i, j);
        mean /= n;
        double var = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) {
            const double d = m(i, j) - mean;
            var += d * d;
        }
        var /= n;
        const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
        for (std::size_t j = 0; j < m.cols(); ++j)
            out(i, j) = (m(i, j) - mean) * inv * params.gain[j] + params.bias[j];
    }
    return out;
}

Matrix ffn_forward(const Matrix& m, const FfnWeights& ffn) {
    Matrix hidden = matmul(m, ffn.w1);
    for (std::size_t i = 0; i < hidden.rows(); ++i)
        for (std::size_t j = 0; j < hidden.cols(); ++j)
            hidden(i, j) = std::max(0.0, hidden(i, j) + ffn.b1[j]);
    Matrix out = matmul(hidden, ffn.w2);
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += ffn.b2[j];
    return out;
}

Matrix encode(const ToyModel& model, const Matrix& src) {
    if (src.cols() != model.config.geometry.d_model)
        throw ShapeError("encode: source has " + std::to_string(src.cols()) +
                         " columns, model d_model is " +
                         std::to_string(model.config.geometry.d_model));
    const ReweightLengths lengths{src.rows(), src.rows()};
    Matrix x = src;
    for (const EncoderLayer& layer : model.encoder) {
        const Matrix normed = layer_norm_rows(x, layer.ln_attn);
        x = x + multi_head_attention(normed, normed, normed, layer.attn,
                                     model.config.esa, lengths, /*causal=*/false);
        x = x + ffn_forward(layer_norm_rows(x, layer.ln_ffn), layer.ffn);
    }
    return x;
}

std::size_t resolve_target_length(const MlaConfig& cfg, std::size_t src_rows) {
    switch (cfg.length_source) {
        case LengthSource::Fixed:
            return cfg.fixed_target_len;
        case LengthSource::Ratio:
            return predict_ratio(src_rows, RatioPredictor{cfg.alpha});
        case LengthSource::Lut: {
            // The toy stream carries no token identities, so every source
            // row maps through the fallback entry.
            const double raw = cfg.lut.dampening * static_cast<double>(src_rows) *
                               cfg.lut.fallback;
            const double rounded = std::floor(raw + 0.5);
            return rounded < 1.0 ? 1 : static_cast<std::size_t>(rounded);
        }
        case LengthSource::None:
            throw ConfigError("resolve_target_length: no length source configured");
    }
    throw ConfigError("resolve_target_length: invalid length source");
}

Matrix greedy_decode(const ToyModel& model, const Matrix& enc_out, std::size_t max_steps,
                     DecodeMode mode) {
    const MlaConfig& cfg = model.config;
    if (enc_out.cols() != cfg.geometry.d_model)
        throw ShapeError("greedy_decode: encoder output has " +
                         std::to_string(enc_out.cols()) + " columns, model d_model is " +
                         std::to_string(cfg.geometry.d_model));
    if (max_steps == 0) throw ConfigError("greedy_decode: max_steps must be >= 1");

    const std::size_t d_model = cfg.geometry.d_model;
    const std::size_t heads = cfg.geometry.num_heads;
    const std::size_t d_kh = cfg.geometry.d_kh;
    const std::size_t d_vh = cfg.geometry.d_vh;
    const std::size_t predicted_len = cfg.length_source == LengthSource::None
                                          ? max_steps
                                          : resolve_target_length(cfg, enc_out.rows());
    const ReweightLengths self_lengths{predicted_len, predicted_len};
    const ReweightLengths cross_lengths{predicted_len, enc_out.rows()};

    Matrix outputs(0, d_model);

    if (mode == DecodeMode::Recompute) {
        // Oracle route: re-run the whole prefix through quadratic-order
        // attention at every step and keep the last row.
        Matrix inputs(0, d_model);
        inputs.append_row(std::vector<double>(d_model, 0.0)); // start frame
        for (std::size_t t = 0; t < max_steps; ++t) {
            Matrix x = inputs;
            for (const DecoderLayer& layer : model.decoder) {
                Matrix normed = layer_norm_rows(x, layer.ln_self);
                x = x + multi_head_attention_quadratic(normed, normed, normed,
                                                       layer.self_attn, cfg.dsa,
                                                       self_lengths, /*causal=*/true);
                normed = layer_norm_rows(x, layer.ln_cross);
                x = x + multi_head_attention_quadratic(normed, enc_out, enc_out,
                                                       layer.cross_attn, cfg.dca,
                                                       cross_lengths, /*causal=*/false);
                x = x + ffn_forward(layer_norm_rows(x, layer.ln_ffn), layer.ffn);
            }
            outputs.append_row(x.row(x.rows() - 1));
            if (t + 1 < max_steps) inputs.append_row(x.row(x.rows() - 1));
        }
        return outputs;
    }

    // Production route: per-layer incremental state.
    std::vector<LayerSession> sessions(model.decoder.size());
    for (std::size_t li = 0; li < model.decoder.size(); ++li) {
        const DecoderLayer& layer = model.decoder[li];
        LayerSession& ses = sessions[li];
        if (cfg.dsa == Mechanism::Softmax) {
            ses.self_k_cache.assign(heads, Matrix(0, d_kh));
            ses.self_v_cache.assign(heads, Matrix(0, d_vh));
        } else {
            for (std::size_t h = 0; h < heads; ++h)
                ses.self_states.push_back(init_state(cfg.dsa, d_kh, d_vh));
        }
        // Encoder keys/values are fixed for the whole decode; project them
        // once (and fold them into cross accumulators once).
        for (std::size_t h = 0; h < heads; ++h) {
            const Matrix kh = matmul(enc_out, layer.cross_attn.wk[h]);
            const Matrix vh = matmul(enc_out, layer.cross_attn.wv[h]);
            if (cfg.dca == Mechanism::Softmax) {
                ses.cross_k.push_back(kh);
                ses.cross_v.push_back(vh);
            } else {
                DecoderBlockState state = init_state(cfg.dca, d_kh, d_vh);
                StepInput fold;
                fold.q_row = Matrix(1, d_kh);
                fold.new_k_rows = kh;
                fold.new_v_rows = vh;
                fold.update = true;
                fold.positions.resize(enc_out.rows());
                for (std::size_t j = 0; j < enc_out.rows(); ++j) fold.positions[j] = j;
                fold.q_position = 0;
                fold.lengths = cross_lengths;
                decode_step(state, fold);
                ses.cross_states.push_back(std::move(state));
            }
        }
    }

    Matrix current(0, d_model);
    current.append_row(std::vector<double>(d_model, 0.0)); // start frame
    for (std::size_t t = 0; t < max_steps; ++t) {
        Matrix x = current;
        for (std::size_t li = 0; li < model.decoder.size(); ++li) {
            const DecoderLayer& layer = model.decoder[li];
            LayerSession& ses = sessions[li];

            // Decoder self-attention.
            Matrix normed = layer_norm_rows(x, layer.ln_self);
            Matrix concat(1, heads * d_vh);
            for (std::size_t h = 0; h < heads; ++h) {
                const Matrix qh = matmul(normed, layer.self_attn.wq[h]);
                const Matrix kh = matmul(normed, layer.self_attn.wk[h]);
                const Matrix vh = matmul(normed, layer.self_attn.wv[h]);
                Matrix ah;
                if (cfg.dsa == Mechanism::Softmax) {
                    ses.self_k_cache[h].append_row(kh.row(0));
                    ses.self_v_cache[h].append_row(vh.row(0));
                    ah = scaled_dot_attention(qh, ses.self_k_cache[h], ses.self_v_cache[h],
                                              /*causal=*/false);
                } else {
                    StepInput in;
                    in.q_row = qh;
                    in.new_k_rows = kh;
                    in.new_v_rows = vh;
                    in.update = true;
                    in.positions = {t};
                    in.q_position = t;
                    in.lengths = self_lengths;
                    ah = decode_step(ses.self_states[h], in);
                }
                for (std::size_t b = 0; b < d_vh; ++b) concat(0, h * d_vh + b) = ah(0, b);
            }
            x = x + matmul(concat, layer.self_attn.wo);

            // Decoder cross-attention over the reused encoder state.
            normed = layer_norm_rows(x, layer.ln_cross);
            for (std::size_t h = 0; h < heads; ++h) {
                const Matrix qh = matmul(normed, layer.cross_attn.wq[h]);
                Matrix ah;
                if (cfg.dca == Mechanism::Softmax) {
                    ah = scaled_dot_attention(qh, ses.cross_k[h], ses.cross_v[h],
                                              /*causal=*/false);
                } else {
                    StepInput in;
                    in.q_row = qh;
                    in.update = false;
                    in.q_position = t;
                    in.lengths = cross_lengths;
                    ah = decode_step(ses.cross_states[h], in);
                }
                for (std::size_t b = 0; b < d_vh; ++b) concat(0, h * d_vh + b) = ah(0, b);
            }
            x = x + matmul(concat, layer.cross_attn.wo);

            x = x + ffn_forward(layer_norm_rows(x, layer.ln_ffn), layer.ffn);
        }
        outputs.append_row(x.row(0));
        current = single_row(x.row(0));
    }
    return outputs;
}

MlaConfig parse_model_config(const std::string& text, const std::filesystem::path& base_dir) {
    MlaConfig cfg;
    std::size_t d_model = cfg.geometry.d_model;
    std::size_t heads = cfg.geometry.num_heads;
    std::istringstream stream(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(stream, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "esa") cfg.esa = mechanism_from_name(value);
            else if (key == "dsa") cfg.dsa = mechanism_from_name(value);
            else if (key == "dca") cfg.dca = mechanism_from_name(value);
            else if (key == "layers_enc") cfg.layers_enc = std::stoul(value);
            else if (key == "layers_dec") cfg.layers_dec = std::stoul(value);
            else if (key == "d_model") d_model = std::stoul(value);
            else if (key == "heads") heads = std::stoul(value);
            else if (key == "ffn_dim") cfg.ffn_dim = std::stoul(value);
            else if (key == "alpha") cfg.alpha = std::stod(value);
            else if (key == "fixed_target_len") cfg.fixed_target_len = std::stoul(value);
            else if (key == "lut_dampening") cfg.lut.dampening = std::stod(value);
            else if (key == "lut_file") cfg.lut = load_lut(base_dir / value);
            else if (key == "length_source") {
                if (value == "none") cfg.length_source = LengthSource::None;
                else if (value == "fixed") cfg.length_source = LengthSource::Fixed;
                else if (value == "ratio") cfg.length_source = LengthSource::Ratio;
                else if (value == "lut") cfg.length_source = LengthSource::Lut;
                else throw ConfigError("unknown length_source '" + value + "'");
            } else {
                throw ConfigError("unknown config key '" + key + "'");
            }
        } catch (const std::invalid_argument&) {
            throw ConfigError("config line " + std::to_string(lineno) + ": bad value '" +
                              value + "' for key '" + key + "'");
        }
    }
    if (heads == 0 || d_model % heads != 0)
        throw ConfigError("config: d_model (" + std::to_string(d_model) +
                          ") must divide evenly into heads (" + std::to_string(heads) + ")");
    cfg.geometry = HeadGeometry{heads, d_model, d_model / heads, d_model / heads};
    cfg.validate();
    return cfg;
}

MlaConfig load_model_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_model_config(buffer.str(), path.parent_path());
}

namespace {

// Walks every tensor in a fixed order; vectors are visited as one row.
void for_each_tensor(ToyModel& model,
                     const std::function<void(const std::string&, std::vector<double>&,
                                              std::size_t, std::size_t)>& visit) {
    auto visit_matrix = [&](const std::string& name, Matrix& m) {
        visit(name, m.data(), m.rows(), m.cols());
    };
    auto visit_vector = [&](const std::string& name, std::vector<double>& v) {
        visit(name, v, 1, v.size());
    };
    auto visit_ln = [&](const std::string& prefix, LayerNormParams& ln) {
        visit_vector(prefix + ".gain", ln.gain);
        visit_vector(prefix + ".bias", ln.bias);
    };
    auto visit_attn = [&](const std::string& prefix, MultiHeadWeights& w) {
        for (std::size_t h = 0; h < w.wq.size(); ++h) {
            const std::string hs = std::to_string(h);
            visit_matrix(prefix + ".wq." + hs, w.wq[h]);
            visit_matrix(prefix + ".wk." + hs, w.wk[h]);
            visit_matrix(prefix + ".wv." + hs, w.wv[h]);
        }
        visit_matrix(prefix + ".wo", w.wo);
    };
    auto visit_ffn = [&](const std::string& prefix, FfnWeights& f) {
        visit_matrix(prefix + ".w1", f.w1);
        visit_vector(prefix + ".b1", f.b1);
        visit_matrix(prefix + ".w2", f.w2);
        visit_vector(prefix + ".b2", f.b2);
    };
    for (std::size_t i = 0; i < model.encoder.size(); ++i) {
        const std::string prefix = "enc." + std::to_string(i);
        visit_ln(prefix + ".ln_attn", model.encoder[i].ln_attn);
        visit_attn(prefix + ".attn", model.encoder[i].attn);
        visit_ln(prefix + ".ln_ffn", model.encoder[i].ln_ffn);
        visit_ffn(prefix + ".ffn", model.encoder[i].ffn);
    }
    for (std::size_t i = 0; i < model.decoder.size(); ++i) {
        const std::string prefix = "dec." + std::to_string(i);
        visit_ln(prefix + ".ln_self", model.decoder[i].ln_self);
        visit_attn(prefix + ".self", model.decoder[i].self_attn);
        visit_ln(prefix + ".ln_cross", model.decoder[i].ln_cross);
        visit_attn(prefix + ".cross", model.decoder[i].cross_attn);
        visit_ln(prefix + ".ln_ffn", model.decoder[i].ln_ffn);
        visit_ffn(prefix + ".ffn", model.decoder[i].ffn);
    }
}

template <typename T>
void write_raw(std::ofstream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& in, const std::string& context) {
    T value{};
    if (!in.read(reinterpret_cast<char*>(&value), sizeof(T)))
        throw IoError("weight file truncated while reading " + context);
    return value;
}

} // namespace

void save_weights(const ToyModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    std::uint64_t count = 0;
    ToyModel& mutable_model = const_cast<ToyModel&>(model);
    for_each_tensor(mutable_model, [&](const std::string&, std::vector<double>&,
                                       std::size_t, std::size_t) { ++count; });
    out.write(kWeightMagic, sizeof(kWeightMagic));
    write_raw(out, kWeightVersion);
    write_raw(out, count);
    for_each_tensor(mutable_model, [&](const std::string& name, std::vector<double>& buf,
                                       std::size_t rows, std::size_t cols) {
        const std::uint32_t name_len = static_cast<std::uint32_t>(name.size());
        write_raw(out, name_len);
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_raw(out, static_cast<std::uint64_t>(rows));
        write_raw(out, static_cast<std::uint64_t>(cols));
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size() * sizeof(double)));
    });
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void load_weights(ToyModel& model, const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    char magic[4];
    if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kWeightMagic, 4) != 0)
        throw IoError("'" + path.string() + "' is not a weight container");
    const auto version = read_raw<std::uint32_t>(in, "version");
    if (version != kWeightVersion)
        throw IoError("unsupported weight container version " + std::to_string(version));
    const auto count = read_raw<std::uint64_t>(in, "tensor count");

    struct Entry {
        std::size_t rows, cols;
        std::vector<double> data;
    };
    std::map<std::string, Entry> entries;
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto name_len = read_raw<std::uint32_t>(in, "tensor name length");
        std::string name(name_len, '\0');
        if (!in.read(name.data(), name_len))
            throw IoError("weight file truncated while reading tensor name");
        Entry e;
        e.rows = read_raw<std::uint64_t>(in, name + " rows");
        e.cols = read_raw<std::uint64_t>(in, name + " cols");
        e.data.resize(e.rows * e.cols);
        if (!in.read(reinterpret_cast<char*>(e.data.data()),
                     static_cast<std::streamsize>(e.data.size() * sizeof(double))))
            throw IoError("weight file truncated while reading " + name);
        entries.emplace(std::move(name), std::move(e));
    }

    std::size_t assigned = 0;
    for_each_tensor(model, [&](const std::string& name, std::vector<double>& buf,
                               std::size_t rows, std::size_t cols) {
        const auto it = entries.find(name);
        if (it == entries.end())
            throw ConfigError("weight container is missing tensor '" + name + "'");
        if (it->second.rows != rows || it->second.cols != cols)
            throw ConfigError("tensor '" + name + "' is " + std::to_string(it->second.rows) +
                              "x" + std::to_string(it->second.cols) + ", model expects " +
                              std::to_string(rows) + "x" + std::to_string(cols));
        buf = it->second.data;
        ++assigned;
    });
    if (assigned != entries.size())
        throw ConfigError("weight container has " + std::to_string(entries.size()) +
                          " tensors, model expects " + std::to_string(assigned));
}

} // namespace mla
