#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mla/flops.hpp"
#include "mla/matrix.hpp"

namespace mla {

/// One latency sweep over synthetic decoder workloads: a set of
/// mechanisms crossed with a list of sequence lengths, timed over
/// repeated single-thread decodes.
struct SweepSpec {
    std::vector<Mechanism> mechanisms{Mechanism::Softmax, Mechanism::ReluLinear,
                                      Mechanism::CosFormer};
    std::vector<std::size_t> lengths{128, 256, 512}; // ascending
    std::size_t d_kh = 64;
    std::size_t d_vh = 64;
    std::size_t batch = 1;
    std::size_t samples = 1;
    std::size_t repetitions = 3;
    SweepVariant variant = SweepVariant::Reuse;
    AttentionRole role = AttentionRole::DecoderSelf;
    std::size_t cross_target_len = 150;

    void validate() const;
};

/// One measured point. `flops` is the closed-form estimate for a single
/// sequence decode; throughput counts decode steps per second across the
/// whole repetition.
struct BenchRow {
    std::string config;
    std::size_t n1 = 0; // query-side length (decode steps)
    std::size_t n2 = 0; // key-side length
    double mean_s = 0.0;
    double std_s = 0.0;
    double throughput_itr_s = 0.0;
    std::uint64_t flops = 0;
};

struct BenchReport {
    std::vector<BenchRow> rows;
};

/// Times every (mechanism, length) point of the sweep. Workload matrices
/// are a pure function of (rng seed, point); one warm-up decode per point
/// is excluded from timing. Rows whose elapsed time is within 100x of the
/// measured clock granularity are flagged unreliable in their config id.
BenchReport run_sweep(const SweepSpec& spec, Rng& rng);

enum class ReportFormat { Csv, Json };

/// CSV header is fixed: config,n1,n2,mean_s,std_s,throughput_itr_s,flops.
/// JSON is an array of row objects with the same field names in the same
/// order. Doubles are written round-trip exact.
void write_report(const BenchReport& report, ReportFormat format,
                  const std::filesystem::path& path);

BenchReport read_report_csv(const std::filesystem::path& path);
BenchReport read_report_json(const std::filesystem::path& path);

inline constexpr const char* kReportCsvHeader =
    "config,n1,n2,mean_s,std_s,throughput_itr_s,flops";

/// Key-value sweep spec file; keys: mechanisms, lengths, d_kh, d_vh,
/// batch, samples, repetitions, variant (naive|reuse), role (self|cross),
/// cross_target_len.
SweepSpec load_sweep_spec(const std::filesystem::path& path);
SweepSpec parse_sweep_spec(const std::string& text);

} // namespace mla
