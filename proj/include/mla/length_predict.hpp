#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace mla {

/// Maps a source length to a target length through a single ratio.
struct RatioPredictor {
    double alpha = 1.0; // target tokens per source token, > 0
};

/// Per-token average target-length mappings with a global fallback for
/// unknown tokens and a dampening factor that scales the total.
struct LutPredictor {
    std::map<std::string, double> table; // token -> average target length, > 0
    double fallback = 1.0;               // global average, > 0
    double dampening = 1.0;              // > 0
};

/// One (source length, target length) observation from a corpus.
struct CorpusPair {
    std::size_t src_len = 1;
    std::size_t tgt_len = 1;
};

enum class RatioFitMode { Average, Quantile };

/// round(alpha * src_len), clamped to >= 1. Rounding is half-up.
std::size_t predict_ratio(std::size_t src_len, const RatioPredictor& p);

/// Average mode: mean of per-pair tgt/src ratios. Quantile mode: the
/// q-th quantile of the per-pair ratios (linear interpolation between
/// order statistics). Throws on an empty corpus.
RatioPredictor fit_ratio(const std::vector<CorpusPair>& corpus, RatioFitMode mode,
                         double quantile = 0.9);

/// round(dampening * sum of per-token mappings), clamped to >= 1. Unknown
/// tokens use the fallback mapping.
std::size_t predict_lut(const std::vector<std::string>& tokens, const LutPredictor& p);

/// Per-token mean observed length; fallback is the global mean; dampening
/// starts at 1. Throws on empty input.
LutPredictor fit_lut(const std::vector<std::pair<std::string, std::size_t>>& alignments);

/// LUT file format: optional `#fallback<TAB>value` header, then one
/// `token<TAB>average_length` record per line. Non-positive values are
/// rejected.
void save_lut(const LutPredictor& p, const std::filesystem::path& path);
LutPredictor load_lut(const std::filesystem::path& path);

/// Ratio predictor file: a single `#alpha<TAB>value` line.
void save_ratio(const RatioPredictor& p, const std::filesystem::path& path);
RatioPredictor load_ratio(const std::filesystem::path& path);

/// Corpus file for ratio fitting: one `src_len<TAB>tgt_len` pair per line.
std::vector<CorpusPair> load_pair_corpus(const std::filesystem::path& path);

/// Corpus file for LUT fitting: one `token<TAB>len` record per line.
std::vector<std::pair<std::string, std::size_t>> load_token_corpus(
    const std::filesystem::path& path);

} // namespace mla
