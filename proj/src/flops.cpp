#include "mla/flops.hpp"

#include "mla/errors.hpp"

namespace mla {

namespace {

using u64 = std::uint64_t;

// Dense (n x k) * (k x m) product: one op per multiply-accumulate.
u64 mm(u64 n, u64 k, u64 m) { return n * k * m; }

// Full quadratic softmax attention, one layer's worth of heads: scores,
// scaling, per-score softmax (max compare, subtract, exp, sum, divide),
// and the weighted sum over values.
u64 softmax_attention_full(u64 n_q, u64 n_k, u64 heads, u64 d_kh, u64 d_vh) {
    return heads * n_q * n_k * (d_kh + d_vh + 6);
}

// Autoregressive softmax self-attention with cached keys/values: step t
// scores against t rows.
u64 softmax_self_incremental(u64 steps, u64 heads, u64 d_kh, u64 d_vh) {
    const u64 pair_sum = steps * (steps + 1) / 2;
    return heads * pair_sum * (d_kh + d_vh + 6);
}

// ReLU feature map over n rows of width d: one comparison per element.
u64 relu_features(u64 n, u64 d) { return n * d; }

// Cosine/sine feature pair: ReLU, two trig evaluations per row, and two
// scaled copies per element.
u64 cos_features(u64 n, u64 d) { return n * d + 2 * n + 2 * n * d; }

// Non-causal linear attention evaluated in full (encoder self-attention):
// K^T*V and key sums once, then numerators/denominators per query row.
u64 linear_attention_full(u64 n_q, u64 n_k, u64 heads, u64 d_kh, u64 d_vh, u64 parts,
                          bool cos) {
    const u64 feats = cos ? cos_features(n_q, d_kh) + cos_features(n_k, d_kh)
                          : relu_features(n_q, d_kh) + relu_features(n_k, d_kh);
    u64 per_head = feats;
    per_head += parts * (mm(n_k, d_kh, d_vh) + n_k * d_kh);  // K^T*V + key sums
    per_head += parts * (mm(n_q, d_kh, d_vh) + n_q * d_kh);  // numerators + denominators
    if (parts == 2) per_head += n_q * (d_vh + 1);            // combine cos/sin parts
    per_head += n_q * d_vh;                                  // normalize
    return heads * per_head;
}

// Autoregressive linear self-attention with accumulator reuse: constant
// work per step.
u64 linear_self_reuse(u64 steps, u64 heads, u64 d_kh, u64 d_vh, u64 parts, bool cos) {
    const u64 feats = cos ? 2 * cos_features(1, d_kh) : 2 * relu_features(1, d_kh);
    u64 per_step = feats;
    per_step += parts * (d_kh * d_vh + d_kh);  // fold new row into accumulators
    per_step += parts * (d_kh * d_vh + d_kh);  // query against accumulators
    if (parts == 2) per_step += d_vh + 1;
    per_step += d_vh;
    return heads * steps * per_step;
}

// Naive linear self-attention: accumulators rebuilt from the whole prefix
// at every step.
u64 linear_self_naive(u64 steps, u64 heads, u64 d_kh, u64 d_vh, u64 parts, bool cos) {
    const u64 pair_sum = steps * (steps + 1) / 2;
    const u64 key_feats = cos ? cos_features(pair_sum, d_kh) : relu_features(pair_sum, d_kh);
    const u64 q_feats = steps * (cos ? cos_features(1, d_kh) : relu_features(1, d_kh));
    u64 total = key_feats + q_feats;
    total += parts * (mm(pair_sum, d_kh, d_vh) + pair_sum * d_kh); // rebuilt accumulators
    total += steps * parts * (d_kh * d_vh + d_kh);                 // query
    if (parts == 2) total += steps * (d_vh + 1);
    total += steps * d_vh;
    return heads * total;
}

// Cross-attention with a fixed encoder side of key_len rows.
u64 softmax_cross(u64 steps, u64 key_len, u64 heads, u64 d_kh, u64 d_vh) {
    return heads * steps * key_len * (d_kh + d_vh + 6);
}

u64 linear_cross_reuse(u64 steps, u64 key_len, u64 heads, u64 d_kh, u64 d_vh, u64 parts,
                       bool cos) {
    u64 setup = cos ? cos_features(key_len, d_kh) : relu_features(key_len, d_kh);
    setup += parts * (mm(key_len, d_kh, d_vh) + key_len * d_kh);
    u64 per_step = cos ? cos_features(1, d_kh) : relu_features(1, d_kh);
    per_step += parts * (d_kh * d_vh + d_kh);
    if (parts == 2) per_step += d_vh + 1;
    per_step += d_vh;
    return heads * (setup + steps * per_step);
}

u64 linear_cross_naive(u64 steps, u64 key_len, u64 heads, u64 d_kh, u64 d_vh, u64 parts,
                       bool cos) {
    u64 per_step = cos ? cos_features(key_len, d_kh) + cos_features(1, d_kh)
                       : relu_features(key_len, d_kh) + relu_features(1, d_kh);
    per_step += parts * (mm(key_len, d_kh, d_vh) + key_len * d_kh);
    per_step += parts * (d_kh * d_vh + d_kh);
    if (parts == 2) per_step += d_vh + 1;
    per_step += d_vh;
    return heads * steps * per_step;
}

u64 parts_of(Mechanism mech) { return mech == Mechanism::CosFormer ? 2 : 1; }
bool is_cos(Mechanism mech) { return mech == Mechanism::CosFormer; }

// Feed-forward over n rows: two projections, bias adds, and the hidden
// ReLU.
u64 ffn_flops(u64 n, u64 d_model, u64 ffn_dim) {
    return mm(n, d_model, ffn_dim) + 2 * n * ffn_dim + mm(n, ffn_dim, d_model) + n * d_model;
}

} // namespace

FlopsBreakdown estimate_flops_breakdown(const MlaConfig& cfg, std::size_t n_src,
                                        std::size_t n_tgt) {
    if (n_src == 0 || n_tgt == 0)
        throw ConfigError("estimate_flops: sequence lengths must be >= 1");
    const u64 S = n_src;
    const u64 T = n_tgt;
    const u64 H = cfg.geometry.num_heads;
    const u64 d = cfg.geometry.d_model;
    const u64 d_kh = cfg.geometry.d_kh;
    const u64 d_vh = cfg.geometry.d_vh;
    const u64 F = cfg.ffn_dim;

    FlopsBreakdown out;

    // Encoder: full-sequence pass per layer.
    {
        const u64 proj = 3 * mm(S, d, d) + mm(S, d, d); // q/k/v + output
        u64 attn = 0;
        switch (cfg.esa) {
            case Mechanism::Softmax:
                attn = softmax_attention_full(S, S, H, d_kh, d_vh);
                break;
            case Mechanism::ReluLinear:
                attn = linear_attention_full(S, S, H, d_kh, d_vh, 1, false);
                break;
            case Mechanism::CosFormer:
                attn = linear_attention_full(S, S, H, d_kh, d_vh, 2, true);
                break;
        }
        out.encoder_projections = cfg.layers_enc * proj;
        out.encoder_attention = cfg.layers_enc * attn;
        out.encoder_ffn = cfg.layers_enc * ffn_flops(S, d, F);
    }

    // Decoder: T autoregressive steps per layer. Self-attention projects
    // q/k/v for the new row each step; cross-attention projects the query
    // each step and the encoder keys/values once.
    {
        const u64 self_proj = T * (3 * mm(1, d, d) + mm(1, d, d));
        const u64 cross_proj = T * (mm(1, d, d) + mm(1, d, d)) + 2 * mm(S, d, d);
        u64 self_attn = 0;
        switch (cfg.dsa) {
            case Mechanism::Softmax:
                self_attn = softmax_self_incremental(T, H, d_kh, d_vh);
                break;
            case Mechanism::ReluLinear:
                self_attn = linear_self_reuse(T, H, d_kh, d_vh, 1, false);
                break;
            case Mechanism::CosFormer:
                self_attn = linear_self_reuse(T, H, d_kh, d_vh, 2, true);
                break;
        }
        u64 cross_attn = 0;
        switch (cfg.dca) {
            case Mechanism::Softmax:
                cross_attn = softmax_cross(T, S, H, d_kh, d_vh);
                break;
            case Mechanism::ReluLinear:
                cross_attn = linear_cross_reuse(T, S, H, d_kh, d_vh, 1, false);
                break;
            case Mechanism::CosFormer:
                cross_attn = linear_cross_reuse(T, S, H, d_kh, d_vh, 2, true);
                break;
        }
        out.decoder_projections = cfg.layers_dec * (self_proj + cross_proj);
        out.decoder_self_attention = cfg.layers_dec * self_attn;
        out.decoder_cross_attention = cfg.layers_dec * cross_attn;
        out.decoder_ffn = cfg.layers_dec * ffn_flops(T, d, F);
    }

    return out;
}

std::uint64_t estimate_flops(const MlaConfig& cfg, std::size_t n_src, std::size_t n_tgt) {
    return estimate_flops_breakdown(cfg, n_src, n_tgt).total();
}

std::uint64_t kernel_decode_flops(Mechanism mech, SweepVariant variant, AttentionRole role,
                                  std::size_t steps, std::size_t key_len, std::size_t d_kh,
                                  std::size_t d_vh) {
    const u64 parts = parts_of(mech);
    const bool cos = is_cos(mech);
    if (role == AttentionRole::DecoderSelf) {
        switch (mech) {
            case Mechanism::Softmax:
                return softmax_self_incremental(steps, 1, d_kh, d_vh);
            default:
                return variant == SweepVariant::Reuse
                           ? linear_self_reuse(steps, 1, d_kh, d_vh, parts, cos)
                           : linear_self_naive(steps, 1, d_kh, d_vh, parts, cos);
        }
    }
    switch (mech) {
        case Mechanism::Softmax:
            return softmax_cross(steps, key_len, 1, d_kh, d_vh);
        default:
            return variant == SweepVariant::Reuse
                       ? linear_cross_reuse(steps, key_len, 1, d_kh, d_vh, parts, cos)
                       : linear_cross_naive(steps, key_len, 1, d_kh, d_vh, parts, cos);
    }
}

} // namespace mla
