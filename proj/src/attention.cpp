#include "mla/attention.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "mla/errors.hpp"

namespace mla {

namespace {

std::string shape_str(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void check_qkv_shapes(const Matrix& q, const Matrix& k, const Matrix& v) {
    if (q.cols() != k.cols())
        throw ShapeError("attention: q " + shape_str(q) + " and k " + shape_str(k) +
                         " differ in feature dimension");
    if (k.rows() != v.rows())
        throw ShapeError("attention: k " + shape_str(k) + " and v " + shape_str(v) +
                         " differ in row count");
}

} // namespace

const char* mechanism_name(Mechanism mech) {
    switch (mech) {
        case Mechanism::Softmax: return "softmax";
        case Mechanism::ReluLinear: return "relu";
        case Mechanism::CosFormer: return "cosformer";
    }
    return "unknown";
}

Mechanism mechanism_from_name(std::string_view name) {
    if (name == "softmax") return Mechanism::Softmax;
    if (name == "relu") return Mechanism::ReluLinear;
    if (name == "cosformer") return Mechanism::CosFormer;
    throw ConfigError("unknown mechanism '" + std::string(name) +
                      "' (expected softmax, relu, or cosformer)");
}

void HeadGeometry::validate() const {
    if (num_heads == 0 || d_model == 0 || d_kh == 0 || d_vh == 0)
        throw ConfigError("head geometry: all dimensions must be >= 1");
    if (num_heads * d_kh != d_model)
        throw ConfigError("head geometry: num_heads*d_kh (" +
                          std::to_string(num_heads * d_kh) + ") != d_model (" +
                          std::to_string(d_model) + ")");
    if (num_heads * d_vh != d_model)
        throw ConfigError("head geometry: num_heads*d_vh (" +
                          std::to_string(num_heads * d_vh) + ") != d_model (" +
                          std::to_string(d_model) + ")");
}

Matrix relu_feature_map(const Matrix& m) {
    Matrix out = m;
    for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
    return out;
}

CosFeatureMaps cosformer_feature_maps(const Matrix& m,
                                      std::span<const std::size_t> positions,
                                      std::size_t length) {
    if (positions.size() != m.rows())
        throw ShapeError("cosformer_feature_maps: " + std::to_string(positions.size()) +
                         " positions for " + std::to_string(m.rows()) + " rows");
    if (length == 0)
        throw ShapeError("cosformer_feature_maps: length must be >= 1");
    CosFeatureMaps out{Matrix(m.rows(), m.cols()), Matrix(m.rows(), m.cols())};
    const double half_pi = std::numbers::pi / 2.0;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const double angle = half_pi * static_cast<double>(positions[r]) /
                             static_cast<double>(length);
        const double c = std::cos(angle);
        const double s = std::sin(angle);
        for (std::size_t j = 0; j < m.cols(); ++j) {
            const double f = std::max(0.0, m(r, j));
            out.cos_part(r, j) = f * c;
            out.sin_part(r, j) = f * s;
        }
    }
    return out;
}

double cos_reweight_multiplier(std::size_t i, std::size_t j, ReweightLengths lengths) {
    const double half_pi = std::numbers::pi / 2.0;
    const double ratio = static_cast<double>(i) / static_cast<double>(lengths.query_len) -
                         static_cast<double>(j) / static_cast<double>(lengths.key_len);
    return std::cos(half_pi * ratio);
}

Matrix scaled_dot_attention(const Matrix& q, const Matrix& k, const Matrix& v, bool causal) {
    check_qkv_shapes(q, k, v);
    const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
    Matrix scores = matmul(q, transpose(k));
    for (std::size_t i = 0; i < scores.rows(); ++i) {
        for (std::size_t j = 0; j < scores.cols(); ++j) {
            scores(i, j) *= scale;
            if (causal && j > i)
                scores(i, j) = -std::numeric_limits<double>::infinity();
        }
    }
    return matmul(softmax_rows(scores), v);
}

Matrix linear_attention(std::span<const Matrix> q_features,
                        std::span<const Matrix> k_features,
                        const Matrix& v, bool causal) {
    if (q_features.empty() || q_features.size() > 2 || q_features.size() != k_features.size())
        throw ShapeError("linear_attention: expected 1 or 2 matching feature parts, got " +
                         std::to_string(q_features.size()) + " query and " +
                         std::to_string(k_features.size()) + " key parts");
    const std::size_t parts = q_features.size();
    const std::size_t n_q = q_features[0].rows();
    const std::size_t n_k = k_features[0].rows();
    const std::size_t d_f = q_features[0].cols();
    for (std::size_t p = 0; p < parts; ++p) {
        if (q_features[p].rows() != n_q || q_features[p].cols() != d_f ||
            k_features[p].rows() != n_k || k_features[p].cols() != d_f)
            throw ShapeError("linear_attention: feature parts disagree in shape");
    }
    if (v.rows() != n_k)
        throw ShapeError("linear_attention: v " + shape_str(v) + " vs " +
                         std::to_string(n_k) + " key rows");
    if (causal && n_q != n_k)
        throw ShapeError("linear_attention: causal evaluation needs equal query/key row "
                         "counts, got " + std::to_string(n_q) + " and " + std::to_string(n_k));

    const std::size_t d_v = v.cols();
    Matrix out(n_q, d_v);

    if (!causal) {
        // kv[p] = Kf_p^T V, ksum[p] = column sums of Kf_p, built once.
        std::vector<Matrix> kv(parts, Matrix(d_f, d_v));
        std::vector<std::vector<double>> ksum(parts, std::vector<double>(d_f, 0.0));
        for (std::size_t p = 0; p < parts; ++p) {
            for (std::size_t j = 0; j < n_k; ++j) {
                for (std::size_t a = 0; a < d_f; ++a) {
                    const double kf = k_features[p](j, a);
                    ksum[p][a] += kf;
                    if (kf == 0.0) continue;
                    for (std::size_t b = 0; b < d_v; ++b) kv[p](a, b) += kf * v(j, b);
                }
            }
        }
        for (std::size_t i = 0; i < n_q; ++i) {
            double den = 0.0;
            for (std::size_t p = 0; p < parts; ++p) {
                for (std::size_t a = 0; a < d_f; ++a) {
                    const double qf = q_features[p](i, a);
                    den += qf * ksum[p][a];
                    if (qf == 0.0) continue;
                    for (std::size_t b = 0; b < d_v; ++b) out(i, b) += qf * kv[p](a, b);
                }
            }
            const double inv = 1.0 / std::max(den, kDenomEpsilon);
            for (std::size_t b = 0; b < d_v; ++b) out(i, b) *= inv;
        }
        return out;
    }

    // Causal: prefix sums advance one row at a time so that row i only sees
    // key rows [0, i].
    std::vector<Matrix> kv(parts, Matrix(d_f, d_v));
    std::vector<std::vector<double>> ksum(parts, std::vector<double>(d_f, 0.0));
    for (std::size_t i = 0; i < n_q; ++i) {
        for (std::size_t p = 0; p < parts; ++p) {
            for (std::size_t a = 0; a < d_f; ++a) {
                const double kf = k_features[p](i, a);
                ksum[p][a] += kf;
                if (kf == 0.0) continue;
                for (std::size_t b = 0; b < d_v; ++b) kv[p](a, b) += kf * v(i, b);
            }
        }
        double den = 0.0;
        for (std::size_t p = 0; p < parts; ++p) {
            for (std::size_t a = 0; a < d_f; ++a) {
                const double qf = q_features[p](i, a);
                den += qf * ksum[p][a];
                if (qf == 0.0) continue;
                for (std::size_t b = 0; b < d_v; ++b) out(i, b) += qf * kv[p](a, b);
            }
        }
        const double inv = 1.0 / std::max(den, kDenomEpsilon);
        for (std::size_t b = 0; b < d_v; ++b) out(i, b) *= inv;
    }
    return out;
}

Matrix similarity_attention_oracle(const Matrix& q, const Matrix& k, const Matrix& v,
                                   Mechanism mech, ReweightLengths lengths, bool causal) {
    check_qkv_shapes(q, k, v);
    const std::size_t d = q.cols();
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    Matrix out(q.rows(), v.cols());
    for (std::size_t i = 0; i < q.rows(); ++i) {
        double den = 0.0;
        std::vector<double> num(v.cols(), 0.0);
        for (std::size_t j = 0; j < k.rows(); ++j) {
            if (causal && j > i) break;
            double w = 0.0;
            switch (mech) {
                case Mechanism::Softmax: {
                    double dot = 0.0;
                    for (std::size_t a = 0; a < d; ++a) dot += q(i, a) * k(j, a);
                    w = std::exp(dot * scale);
                    break;
                }
                case Mechanism::ReluLinear: {
                    for (std::size_t a = 0; a < d; ++a)
                        w += std::max(0.0, q(i, a)) * std::max(0.0, k(j, a));
                    break;
                }
                case Mechanism::CosFormer: {
                    double dot = 0.0;
                    for (std::size_t a = 0; a < d; ++a)
                        dot += std::max(0.0, q(i, a)) * std::max(0.0, k(j, a));
                    w = dot * cos_reweight_multiplier(i, j, lengths);
                    break;
                }
            }
            den += w;
            for (std::size_t b = 0; b < v.cols(); ++b) num[b] += w * v(j, b);
        }
        const double inv = 1.0 / std::max(den, kDenomEpsilon);
        for (std::size_t b = 0; b < v.cols(); ++b) out(i, b) = num[b] * inv;
    }
    return out;
}

void MultiHeadWeights::validate(const HeadGeometry& geom) const {
    geom.validate();
    if (wq.size() != geom.num_heads || wk.size() != geom.num_heads ||
        wv.size() != geom.num_heads)
        throw ConfigError("multi-head weights: expected " + std::to_string(geom.num_heads) +
                          " per-head matrices, got " + std::to_string(wq.size()) + "/" +
                          std::to_string(wk.size()) + "/" + std::to_string(wv.size()));
    for (std::size_t h = 0; h < geom.num_heads; ++h) {
        if (wq[h].rows() != geom.d_model || wq[h].cols() != geom.d_kh ||
            wk[h].rows() != geom.d_model || wk[h].cols() != geom.d_kh ||
            wv[h].rows() != geom.d_model || wv[h].cols() != geom.d_vh)
            throw ConfigError("multi-head weights: head " + std::to_string(h) +
                              " projection shape does not match geometry");
    }
    if (wo.rows() != geom.num_heads * geom.d_vh || wo.cols() != geom.d_model)
        throw ConfigError("multi-head weights: wo is " + shape_str(wo) + ", expected " +
                          std::to_string(geom.num_heads * geom.d_vh) + "x" +
                          std::to_string(geom.d_model));
}

Matrix multi_head_attention(const Matrix& q, const Matrix& k, const Matrix& v,
                            const MultiHeadWeights& weights, Mechanism mech,
                            ReweightLengths lengths, bool causal) {
    const std::size_t heads = weights.num_heads();
    if (heads == 0) throw ConfigError("multi_head_attention: no heads");
    if (weights.wk.size() != heads || weights.wv.size() != heads)
        throw ConfigError("multi_head_attention: " + std::to_string(heads) + "/" +
                          std::to_string(weights.wk.size()) + "/" +
                          std::to_string(weights.wv.size()) +
                          " per-head q/k/v matrices");
    const std::size_t d_vh = weights.wv[0].cols();
    if (weights.wo.rows() != heads * d_vh)
        throw ConfigError("multi_head_attention: head concat width " +
                          std::to_string(heads * d_vh) + " does not match wo rows " +
                          std::to_string(weights.wo.rows()));
    Matrix concat(q.rows(), heads * d_vh);
    std::vector<std::size_t> q_pos(q.rows()), k_pos(k.rows());
    for (std::size_t i = 0; i < q.rows(); ++i) q_pos[i] = i;
    for (std::size_t j = 0; j < k.rows(); ++j) k_pos[j] = j;

    for (std::size_t h = 0; h < heads; ++h) {
        const Matrix qh = matmul(q, weights.wq[h]);
        const Matrix kh = matmul(k, weights.wk[h]);
        const Matrix vh = matmul(v, weights.wv[h]);
        Matrix ah;
        switch (mech) {
            case Mechanism::Softmax:
                ah = scaled_dot_attention(qh, kh, vh, causal);
                break;
            case Mechanism::ReluLinear: {
                const Matrix qf[] = {relu_feature_map(qh)};
                const Matrix kf[] = {relu_feature_map(kh)};
                ah = linear_attention(qf, kf, vh, causal);
                break;
            }
            case Mechanism::CosFormer: {
                const CosFeatureMaps qm = cosformer_feature_maps(qh, q_pos, lengths.query_len);
                const CosFeatureMaps km = cosformer_feature_maps(kh, k_pos, lengths.key_len);
                const Matrix qf[] = {qm.cos_part, qm.sin_part};
                const Matrix kf[] = {km.cos_part, km.sin_part};
                ah = linear_attention(qf, kf, vh, causal);
                break;
            }
        }
        for (std::size_t i = 0; i < q.rows(); ++i)
            for (std::size_t b = 0; b < d_vh; ++b) concat(i, h * d_vh + b) = ah(i, b);
    }
    return matmul(concat, weights.wo);
}

} // namespace mla
