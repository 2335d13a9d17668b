// Acceptance suite: one pass/fail line per criterion, nonzero exit when
// any criterion fails. Criteria 1-6, 8, 9 are fast; criterion 7 runs the
// wall-clock sweep and dominates the runtime.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "mla/bench.hpp"
#include "mla/decoder_state.hpp"
#include "mla/errors.hpp"
#include "mla/length_predict.hpp"
#include "mla/model.hpp"
#include "mla/verify.hpp"

using namespace mla;

namespace {

int failures = 0;

void report(int criterion, const std::string& label, bool passed,
            const std::string& detail) {
    std::printf("[%s] criterion %d: %s (%s)\n", passed ? "PASS" : "FAIL", criterion,
                label.c_str(), detail.c_str());
    if (!passed) ++failures;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3e", v);
    return buf;
}

double elapsed_s(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void criterion_1_oracle_equivalence() {
    const auto start = std::chrono::steady_clock::now();
    const SuiteResult r = verify_oracle_equivalence(42);
    const double secs = elapsed_s(start);
    report(1, "oracle equivalence, 100 cases per mechanism",
           r.passed && secs < 10.0,
           "max relative error " + fmt(r.max_residual) + ", " + fmt(secs) + " s");
}

void criterion_2_decomposition() {
    const SuiteResult r = verify_decomposition_identity(42);
    report(2, "cos/sin decomposition identity over the position grid", r.passed,
           "max |residual| " + fmt(r.max_residual));
}

void criterion_3_incremental_correctness() {
    const Mechanism mechs[] = {Mechanism::Softmax, Mechanism::ReluLinear,
                               Mechanism::CosFormer};
    double worst = 0.0;
    Rng rng(42);
    const Matrix src = random_matrix(35, 32, rng);
    for (const Mechanism esa : mechs) {
        for (const Mechanism dsa : mechs) {
            for (const Mechanism dca : mechs) {
                MlaConfig cfg;
                cfg.esa = esa;
                cfg.dsa = dsa;
                cfg.dca = dca;
                cfg.layers_enc = 2;
                cfg.layers_dec = 2;
                cfg.geometry = HeadGeometry{4, 32, 8, 8};
                cfg.ffn_dim = 64;
                cfg.length_source = LengthSource::Fixed;
                cfg.fixed_target_len = 20;
                const ToyModel model = build_model(cfg, 42);
                const Matrix enc_out = encode(model, src);
                const Matrix incremental = greedy_decode(model, enc_out, 20);
                const Matrix recomputed =
                    greedy_decode(model, enc_out, 20, DecodeMode::Recompute);
                worst = std::max(worst, max_abs_diff(incremental, recomputed));
            }
        }
    }
    report(3, "incremental decode equals per-step recomputation over 27 configs",
           worst <= 1e-8, "max |diff| " + fmt(worst));
}

void criterion_4_causality() {
    const SuiteResult kernels = verify_causality(42);

    // Toy decoder: a longer run must reproduce the shorter run's prefix.
    MlaConfig cfg;
    cfg.esa = Mechanism::Softmax;
    cfg.dsa = Mechanism::CosFormer;
    cfg.dca = Mechanism::CosFormer;
    cfg.layers_enc = 2;
    cfg.layers_dec = 2;
    cfg.geometry = HeadGeometry{4, 32, 8, 8};
    cfg.ffn_dim = 64;
    cfg.length_source = LengthSource::Fixed;
    cfg.fixed_target_len = 20;
    const ToyModel model = build_model(cfg, 42);
    Rng rng(7);
    const Matrix enc_out = encode(model, random_matrix(35, 32, rng));
    const Matrix short_run = greedy_decode(model, enc_out, 12);
    const Matrix long_run = greedy_decode(model, enc_out, 20);
    const double decoder_residual = max_abs_diff(long_run.top_rows(12), short_run);

    const double worst = std::max(kernels.max_residual, decoder_residual);
    report(4, "future inputs never perturb earlier outputs", worst <= 1e-12,
           "max |diff| " + fmt(worst));
}

void criterion_5_chunking() {
    const SuiteResult r = verify_chunking_invariance(42);
    report(5, "chunked streaming is equivalent to row-by-row delivery", r.passed,
           "max |diff| " + fmt(r.max_residual));
}

void criterion_6_flops_ordering() {
    const SuiteResult r = verify_flops_ordering();
    report(6, "operation counts rank the four reference configs in order", r.passed,
           "worst factor vs reference " + fmt(r.max_residual));
}

void criterion_7_asymptotic_latency() {
    const auto start = std::chrono::steady_clock::now();
    SweepSpec spec;
    spec.mechanisms = {Mechanism::Softmax, Mechanism::ReluLinear, Mechanism::CosFormer};
    spec.lengths = {128, 256, 512, 1024};
    spec.d_kh = 64;
    spec.d_vh = 64;
    spec.repetitions = 5;
    spec.variant = SweepVariant::Reuse;
    spec.role = AttentionRole::DecoderSelf;
    Rng rng(42);
    const BenchReport reuse_report = run_sweep(spec, rng);

    SweepSpec naive_spec = spec;
    naive_spec.mechanisms = {Mechanism::ReluLinear};
    naive_spec.lengths = {1024};
    naive_spec.variant = SweepVariant::Naive;
    Rng naive_rng(42);
    const BenchReport naive_report = run_sweep(naive_spec, naive_rng);

    auto mean_of = [&](const BenchReport& report, const std::string& prefix,
                       std::size_t n) {
        for (const BenchRow& row : report.rows)
            if (row.n1 == n && row.config.rfind(prefix, 0) == 0) return row.mean_s;
        throw ConfigError("sweep row missing: " + prefix + " at " + std::to_string(n));
    };

    const double soft_ratio =
        mean_of(reuse_report, "softmax/self", 1024) / mean_of(reuse_report, "softmax/self", 512);
    const double relu_ratio = mean_of(reuse_report, "relu/self/reuse", 1024) /
                              mean_of(reuse_report, "relu/self/reuse", 512);
    const double cos_ratio = mean_of(reuse_report, "cosformer/self/reuse", 1024) /
                             mean_of(reuse_report, "cosformer/self/reuse", 512);
    const double reuse_1024 = mean_of(reuse_report, "relu/self/reuse", 1024);
    const double naive_1024 = mean_of(naive_report, "relu/self/naive", 1024);
    const double secs = elapsed_s(start);

    const bool passed = soft_ratio >= 3.0 && relu_ratio <= 2.6 && cos_ratio <= 2.6 &&
                        reuse_1024 < naive_1024 && secs < 300.0;
    char detail[256];
    std::snprintf(detail, sizeof(detail),
                  "softmax x%.2f, relu x%.2f, cosformer x%.2f, reuse %.4fs vs naive "
                  "%.4fs, total %.1fs",
                  soft_ratio, relu_ratio, cos_ratio, reuse_1024, naive_1024, secs);
    report(7, "quadratic vs linear growth and data reuse at N=1024", passed, detail);
}

void criterion_8_length_predictors() {
    bool passed = true;
    passed = passed && predict_ratio(100, {1.25}) == 125;
    passed = passed && predict_ratio(10, {0.6}) == 6;

    std::vector<CorpusPair> uniform;
    for (std::size_t src = 2; src <= 40; src += 2) uniform.push_back({src, src * 2});
    passed = passed && fit_ratio(uniform, RatioFitMode::Average).alpha == 2.0;

    LutPredictor lut;
    lut.table = {{"A", 3.0}, {"B", 5.0}};
    lut.fallback = 4.0;
    lut.dampening = 1.0;
    passed = passed && predict_lut({"A", "B"}, lut) == 8;
    passed = passed && predict_lut({"UNK"}, lut) == 4;
    lut.dampening = 0.9;
    passed = passed && predict_lut({"A", "B"}, lut) == 7;

    report(8, "ratio and lookup-table predictors hit their reference points", passed,
           passed ? "all exact" : "mismatch");
}

void criterion_9_determinism() {
    const auto first = verify_all(42);
    const auto second = verify_all(42);
    bool passed = all_passed(first) && first.size() == second.size();
    for (std::size_t i = 0; passed && i < first.size(); ++i)
        passed = first[i].passed == second[i].passed &&
                 first[i].max_residual == second[i].max_residual;

    // Report round trip: CSV -> parse -> JSON -> parse, value exact.
    SweepSpec spec;
    spec.mechanisms = {Mechanism::ReluLinear, Mechanism::CosFormer};
    spec.lengths = {8, 16};
    spec.d_kh = 8;
    spec.d_vh = 8;
    spec.repetitions = 3;
    Rng rng(42);
    const BenchReport report_rows = run_sweep(spec, rng);
    const auto dir = std::filesystem::temp_directory_path();
    const auto csv = dir / "mla_acceptance_report.csv";
    const auto json = dir / "mla_acceptance_report.json";
    write_report(report_rows, ReportFormat::Csv, csv);
    const BenchReport from_csv = read_report_csv(csv);
    write_report(from_csv, ReportFormat::Json, json);
    const BenchReport from_json = read_report_json(json);
    passed = passed && from_json.rows.size() == report_rows.rows.size();
    for (std::size_t i = 0; passed && i < report_rows.rows.size(); ++i) {
        const BenchRow& a = report_rows.rows[i];
        const BenchRow& b = from_json.rows[i];
        passed = a.config == b.config && a.n1 == b.n1 && a.n2 == b.n2 &&
                 a.mean_s == b.mean_s && a.std_s == b.std_s &&
                 a.throughput_itr_s == b.throughput_itr_s && a.flops == b.flops;
    }
    std::filesystem::remove(csv);
    std::filesystem::remove(json);

    report(9, "verification runs repeat identically and reports round-trip exactly",
           passed, passed ? "residuals and serialized values identical" : "drift detected");
}

} // namespace

int main() {
    criterion_1_oracle_equivalence();
    criterion_2_decomposition();
    criterion_3_incremental_correctness();
    criterion_4_causality();
    criterion_5_chunking();
    criterion_6_flops_ordering();
    criterion_7_asymptotic_latency();
    criterion_8_length_predictors();
    criterion_9_determinism();
    if (failures == 0)
        std::printf("acceptance: all 9 criteria passed\n");
    else
        std::printf("acceptance: %d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
