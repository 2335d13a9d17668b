#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mla/attention.hpp"

namespace mla {

struct SuiteResult {
    std::string name;
    bool passed = false;
    double max_residual = 0.0;
    std::string detail;
};

/// Max absolute difference between the two-accumulator feature dot
/// product q_maps . k_maps and the directly evaluated re-weighted
/// similarity relu(q_i) . relu(k_j) * cos((pi/2)(i/N - j/M)) over all row
/// pairs. Exposed so corrupted feature maps can be checked to fail.
double cosformer_identity_residual(const Matrix& q, const Matrix& k,
                                   const CosFeatureMaps& q_maps,
                                   const CosFeatureMaps& k_maps,
                                   std::span<const std::size_t> q_positions,
                                   std::span<const std::size_t> k_positions,
                                   ReweightLengths lengths);

/// Linear-vs-quadratic equivalence over random cases for every mechanism,
/// self and cross, causal and non-causal.
SuiteResult verify_oracle_equivalence(std::uint64_t seed);

/// Future key/value rows must not influence earlier outputs of causal
/// kernels or the incremental decoder.
SuiteResult verify_causality(std::uint64_t seed);

/// Accumulators and outputs must not depend on the chunk sizes used to
/// deliver the key/value stream.
SuiteResult verify_chunking_invariance(std::uint64_t seed);

/// The cos/sin feature decomposition must reproduce the direct
/// re-weighting multiplier over a dense position grid.
SuiteResult verify_decomposition_identity(std::uint64_t seed);

/// The four reference block assignments must rank in the expected order
/// and land within a factor of two of the reference operation counts.
SuiteResult verify_flops_ordering();

/// Runs every suite; deterministic per seed, identical residuals across
/// runs.
std::vector<SuiteResult> verify_all(std::uint64_t seed);

bool all_passed(const std::vector<SuiteResult>& results);

} // namespace mla
