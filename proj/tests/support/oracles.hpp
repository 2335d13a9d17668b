#pragma once

// Test-side reference implementations, kept independent of the library's
// fast paths: scalar loops only, no reuse of linear_attention or the
// incremental decoder.

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "mla/attention.hpp"
#include "mla/matrix.hpp"
#include "mla/model.hpp"

namespace mla::testing {

inline Matrix matmul_oracle(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double sum = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) sum += a(i, k) * b(k, j);
            out(i, j) = sum;
        }
    return out;
}

// Masked scaled softmax attention as explicit per-row loops.
inline Matrix masked_softmax_attention_oracle(const Matrix& q, const Matrix& k,
                                              const Matrix& v, bool causal) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
    Matrix out(q.rows(), v.cols());
    for (std::size_t i = 0; i < q.rows(); ++i) {
        std::vector<double> scores(k.rows(), -std::numeric_limits<double>::infinity());
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < k.rows(); ++j) {
            if (causal && j > i) continue;
            double dot = 0.0;
            for (std::size_t a = 0; a < q.cols(); ++a) dot += q(i, a) * k(j, a);
            scores[j] = dot * scale;
            mx = std::max(mx, scores[j]);
        }
        double denom = 0.0;
        for (std::size_t j = 0; j < k.rows(); ++j) {
            scores[j] = std::exp(scores[j] - mx);
            denom += scores[j];
        }
        for (std::size_t j = 0; j < k.rows(); ++j) {
            const double w = scores[j] / denom;
            for (std::size_t b = 0; b < v.cols(); ++b) out(i, b) += w * v(j, b);
        }
    }
    return out;
}

// Hand-split multi-head attention: per-head projections via the scalar
// matmul oracle and quadratic-order attention per mechanism.
inline Matrix mha_oracle(const Matrix& q, const Matrix& k, const Matrix& v,
                         const MultiHeadWeights& w, Mechanism mech,
                         ReweightLengths lengths, bool causal) {
    const std::size_t heads = w.num_heads();
    const std::size_t d_vh = w.wv[0].cols();
    Matrix concat(q.rows(), heads * d_vh);
    for (std::size_t h = 0; h < heads; ++h) {
        const Matrix qh = matmul_oracle(q, w.wq[h]);
        const Matrix kh = matmul_oracle(k, w.wk[h]);
        const Matrix vh = matmul_oracle(v, w.wv[h]);
        const Matrix ah = mech == Mechanism::Softmax
                              ? masked_softmax_attention_oracle(qh, kh, vh, causal)
                              : similarity_attention_oracle(qh, kh, vh, mech, lengths, causal);
        for (std::size_t i = 0; i < q.rows(); ++i)
            for (std::size_t b = 0; b < d_vh; ++b) concat(i, h * d_vh + b) = ah(i, b);
    }
    return matmul_oracle(concat, w.wo);
}

inline Matrix encoder_forward_oracle(const ToyModel& model, const Matrix& src) {
    const ReweightLengths lengths{src.rows(), src.rows()};
    Matrix x = src;
    for (const EncoderLayer& layer : model.encoder) {
        const Matrix normed = layer_norm_rows(x, layer.ln_attn);
        x = x + mha_oracle(normed, normed, normed, layer.attn, model.config.esa, lengths,
                           false);
        x = x + ffn_forward(layer_norm_rows(x, layer.ln_ffn), layer.ffn);
    }
    return x;
}

// Full-prefix recomputation of the decoder at every step, with
// quadratic-order attention throughout.
inline Matrix decode_oracle(const ToyModel& model, const Matrix& enc_out,
                            std::size_t max_steps) {
    const MlaConfig& cfg = model.config;
    const std::size_t d_model = cfg.geometry.d_model;
    const std::size_t predicted = cfg.length_source == LengthSource::None
                                      ? max_steps
                                      : resolve_target_length(cfg, enc_out.rows());
    const ReweightLengths self_lengths{predicted, predicted};
    const ReweightLengths cross_lengths{predicted, enc_out.rows()};
    Matrix inputs(0, d_model);
    inputs.append_row(std::vector<double>(d_model, 0.0));
    Matrix outputs(0, d_model);
    for (std::size_t t = 0; t < max_steps; ++t) {
        Matrix x = inputs;
        for (const DecoderLayer& layer : model.decoder) {
            Matrix normed = layer_norm_rows(x, layer.ln_self);
            x = x + mha_oracle(normed, normed, normed, layer.self_attn, cfg.dsa,
                               self_lengths, true);
            normed = layer_norm_rows(x, layer.ln_cross);
            x = x + mha_oracle(normed, enc_out, enc_out, layer.cross_attn, cfg.dca,
                               cross_lengths, false);
            x = x + ffn_forward(layer_norm_rows(x, layer.ln_ffn), layer.ffn);
        }
        outputs.append_row(x.row(x.rows() - 1));
        if (t + 1 < max_steps) inputs.append_row(x.row(x.rows() - 1));
    }
    return outputs;
}

} // namespace mla::testing
