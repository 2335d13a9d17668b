#pragma once

#include <cstdint>

#include "mla/attention.hpp"
#include "mla/model.hpp"

namespace mla {

/// Closed-form operation counts for one full inference pass (encoder over
/// n_src rows, autoregressive decoder over n_tgt steps). Every scalar
/// operation weighs 1: a fused multiply-add, exponential, comparison,
/// division, or trig evaluation each count once. Scope is attention
/// blocks, feed-forward blocks, and projections; quadratic blocks are
/// counted with key/value caching, linear blocks with accumulator reuse.
struct FlopsBreakdown {
    std::uint64_t encoder_projections = 0;
    std::uint64_t encoder_attention = 0;
    std::uint64_t encoder_ffn = 0;
    std::uint64_t decoder_projections = 0;
    std::uint64_t decoder_self_attention = 0;
    std::uint64_t decoder_cross_attention = 0;
    std::uint64_t decoder_ffn = 0;

    std::uint64_t total() const {
        return encoder_projections + encoder_attention + encoder_ffn +
               decoder_projections + decoder_self_attention + decoder_cross_attention +
               decoder_ffn;
    }
};

FlopsBreakdown estimate_flops_breakdown(const MlaConfig& cfg, std::size_t n_src,
                                        std::size_t n_tgt);

std::uint64_t estimate_flops(const MlaConfig& cfg, std::size_t n_src, std::size_t n_tgt);

/// Whether a sweep decode recomputes linear-attention accumulators from
/// scratch every step (naive) or carries them across steps (reuse).
enum class SweepVariant { Naive, Reuse };

/// Which decoder attention role a sweep exercises.
enum class AttentionRole { DecoderSelf, DecoderCross };

/// Operation count for one single-head decode of a synthetic sequence:
/// `steps` autoregressive steps over `key_len` keys (key_len == steps for
/// self-attention). Mirrors the conventions of estimate_flops.
std::uint64_t kernel_decode_flops(Mechanism mech, SweepVariant variant, AttentionRole role,
                                  std::size_t steps, std::size_t key_len, std::size_t d_kh,
                                  std::size_t d_vh);

} // namespace mla
