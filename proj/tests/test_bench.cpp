#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "mla/bench.hpp"
#include "mla/errors.hpp"
#include "mla/verify.hpp"

using namespace mla;

namespace {

MlaConfig reference_geometry(Mechanism esa, Mechanism dsa, Mechanism dca) {
    MlaConfig cfg;
    cfg.esa = esa;
    cfg.dsa = dsa;
    cfg.dca = dca;
    cfg.layers_enc = 6;
    cfg.layers_dec = 6;
    cfg.geometry = HeadGeometry{8, 256, 32, 32};
    cfg.ffn_dim = 1024;
    cfg.length_source = LengthSource::Fixed;
    cfg.fixed_target_len = 150;
    return cfg;
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("mla_test_" + name);
}

BenchReport tiny_report() {
    SweepSpec spec;
    spec.mechanisms = {Mechanism::ReluLinear};
    spec.lengths = {4, 8};
    spec.d_kh = 4;
    spec.d_vh = 4;
    spec.repetitions = 3;
    Rng rng(5);
    return run_sweep(spec, rng);
}

} // namespace

TEST_CASE("reference block assignments rank in the published order within factor two") {
    // Reference operation counts: 1.46G, 1.60G, 1.68G, 1.94G.
    const std::uint64_t full_linear = estimate_flops(
        reference_geometry(Mechanism::CosFormer, Mechanism::ReluLinear,
                           Mechanism::CosFormer),
        100, 150);
    const std::uint64_t cos_esa_dca = estimate_flops(
        reference_geometry(Mechanism::CosFormer, Mechanism::Softmax, Mechanism::CosFormer),
        100, 150);
    const std::uint64_t cos_dca_only = estimate_flops(
        reference_geometry(Mechanism::Softmax, Mechanism::Softmax, Mechanism::CosFormer),
        100, 150);
    const std::uint64_t all_softmax = estimate_flops(
        reference_geometry(Mechanism::Softmax, Mechanism::Softmax, Mechanism::Softmax),
        100, 150);

    CHECK(full_linear < cos_esa_dca);
    CHECK(cos_esa_dca < cos_dca_only);
    CHECK(cos_dca_only < all_softmax);

    const std::pair<std::uint64_t, double> expectations[] = {
        {full_linear, 1.46e9},
        {cos_esa_dca, 1.60e9},
        {cos_dca_only, 1.68e9},
        {all_softmax, 1.94e9},
    };
    for (const auto& [count, reference] : expectations) {
        CHECK(static_cast<double>(count) < 2.0 * reference);
        CHECK(static_cast<double>(count) > 0.5 * reference);
    }
}

TEST_CASE("estimate_flops is nondecreasing in both lengths") {
    const MlaConfig cfg = reference_geometry(Mechanism::CosFormer, Mechanism::ReluLinear,
                                             Mechanism::Softmax);
    std::uint64_t previous = 0;
    for (std::size_t n = 1; n <= 241; n += 40) {
        const std::uint64_t count = estimate_flops(cfg, n, 50);
        CHECK(count >= previous);
        previous = count;
    }
    previous = 0;
    for (std::size_t n = 1; n <= 241; n += 40) {
        const std::uint64_t count = estimate_flops(cfg, 50, n);
        CHECK(count >= previous);
        previous = count;
    }
}

TEST_CASE("softmax attention terms grow superlinearly, linear terms do not") {
    const MlaConfig softmax_cfg = reference_geometry(
        Mechanism::Softmax, Mechanism::Softmax, Mechanism::Softmax);
    const MlaConfig linear_cfg = reference_geometry(
        Mechanism::ReluLinear, Mechanism::ReluLinear, Mechanism::ReluLinear);
    for (const std::size_t n : {64UL, 128UL, 256UL}) {
        const auto soft_small = estimate_flops_breakdown(softmax_cfg, n, n);
        const auto soft_large = estimate_flops_breakdown(softmax_cfg, 2 * n, 2 * n);
        CHECK(soft_large.encoder_attention > 2 * soft_small.encoder_attention);
        CHECK(soft_large.decoder_self_attention > 2 * soft_small.decoder_self_attention);

        const auto lin_small = estimate_flops_breakdown(linear_cfg, n, n);
        const auto lin_large = estimate_flops_breakdown(linear_cfg, 2 * n, 2 * n);
        CHECK(lin_large.decoder_self_attention <= 2 * lin_small.decoder_self_attention);
    }
}

TEST_CASE("length-one attention counts differ only by per-token mechanism terms") {
    // Hand expansion of the closed forms at S = T = 1, H heads, head dims
    // d: softmax scores one key per head (d + d + 6 ops); the linear form
    // builds its d x d accumulator once and queries it (2d^2 + 4d + d
    // feature/normalize ops).
    MlaConfig soft = reference_geometry(Mechanism::Softmax, Mechanism::Softmax,
                                        Mechanism::Softmax);
    MlaConfig relu = reference_geometry(Mechanism::ReluLinear, Mechanism::Softmax,
                                        Mechanism::Softmax);
    const std::uint64_t H = 8, d = 32;
    const auto soft_b = estimate_flops_breakdown(soft, 1, 1);
    const auto relu_b = estimate_flops_breakdown(relu, 1, 1);
    const std::uint64_t softmax_block = H * (d + d + 6) * soft.layers_enc;
    const std::uint64_t relu_block = H * (2 * d + (d * d + d) + (d * d + d) + d) *
                                     relu.layers_enc;
    CHECK(soft_b.encoder_attention == softmax_block);
    CHECK(relu_b.encoder_attention == relu_block);
    // Everything outside the attention blocks is identical.
    CHECK(soft_b.encoder_projections == relu_b.encoder_projections);
    CHECK(soft_b.encoder_ffn == relu_b.encoder_ffn);
    CHECK(soft_b.decoder_self_attention == relu_b.decoder_self_attention);
}

TEST_CASE("kernel decode counts: reuse beats naive, quadratic dominates eventually") {
    const std::uint64_t reuse = kernel_decode_flops(
        Mechanism::ReluLinear, SweepVariant::Reuse, AttentionRole::DecoderSelf, 512, 512,
        64, 64);
    const std::uint64_t naive = kernel_decode_flops(
        Mechanism::ReluLinear, SweepVariant::Naive, AttentionRole::DecoderSelf, 512, 512,
        64, 64);
    const std::uint64_t softmax = kernel_decode_flops(
        Mechanism::Softmax, SweepVariant::Reuse, AttentionRole::DecoderSelf, 512, 512, 64,
        64);
    CHECK(reuse < naive);
    CHECK(reuse < softmax);

    // Reuse is linear in steps; softmax grows quadratically.
    const std::uint64_t reuse2 = kernel_decode_flops(
        Mechanism::ReluLinear, SweepVariant::Reuse, AttentionRole::DecoderSelf, 1024, 1024,
        64, 64);
    const std::uint64_t softmax2 = kernel_decode_flops(
        Mechanism::Softmax, SweepVariant::Reuse, AttentionRole::DecoderSelf, 1024, 1024,
        64, 64);
    CHECK(reuse2 == 2 * reuse);
    CHECK(softmax2 > 3 * softmax);
}

TEST_CASE("run_sweep produces deterministic workloads and consistent rows") {
    const BenchReport a = tiny_report();
    const BenchReport b = tiny_report();
    REQUIRE(a.rows.size() == 2);
    REQUIRE(b.rows.size() == 2);
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].n1 == b.rows[i].n1);
        CHECK(a.rows[i].n2 == b.rows[i].n2);
        CHECK(a.rows[i].flops == b.rows[i].flops);
        CHECK(a.rows[i].config.find("relu/self/reuse") == 0);
        // Throughput is definitionally calls / mean.
        const double calls = static_cast<double>(a.rows[i].n1);
        CHECK(a.rows[i].throughput_itr_s ==
              doctest::Approx(calls / a.rows[i].mean_s).epsilon(1e-9));
    }
}

TEST_CASE("sweep spec validation") {
    SweepSpec spec;
    spec.lengths = {8, 4};
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec.lengths = {4, 8};
    spec.repetitions = 2;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec.repetitions = 3;
    CHECK_NOTHROW(spec.validate());
}

TEST_CASE("sweep spec parsing") {
    const SweepSpec spec = parse_sweep_spec(
        "mechanisms = softmax, relu\nlengths = 16, 32, 64\nd_kh = 8\nd_vh = 8\n"
        "repetitions = 4\nvariant = naive\nrole = cross\ncross_target_len = 24\n");
    CHECK(spec.mechanisms.size() == 2);
    CHECK(spec.lengths.size() == 3);
    CHECK(spec.variant == SweepVariant::Naive);
    CHECK(spec.role == AttentionRole::DecoderCross);
    CHECK(spec.cross_target_len == 24);
    CHECK_THROWS_AS(parse_sweep_spec("role = sideways\n"), ConfigError);
    CHECK_THROWS_AS(parse_sweep_spec("lengths = 32, 16\n"), ConfigError);
}

TEST_CASE("report writing: golden header, round trip, errors") {
    const BenchReport report = tiny_report();
    const auto csv_path = temp_file("report.csv");
    const auto json_path = temp_file("report.json");

    write_report(report, ReportFormat::Csv, csv_path);
    {
        std::ifstream in(csv_path);
        std::string header;
        std::getline(in, header);
        CHECK(header == std::string(kReportCsvHeader));
        std::size_t data_lines = 0;
        std::string line;
        while (std::getline(in, line))
            if (!line.empty()) ++data_lines;
        CHECK(data_lines == report.rows.size());
    }

    // CSV -> parse -> JSON -> parse preserves every value exactly.
    const BenchReport from_csv = read_report_csv(csv_path);
    write_report(from_csv, ReportFormat::Json, json_path);
    const BenchReport from_json = read_report_json(json_path);
    REQUIRE(from_json.rows.size() == report.rows.size());
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        CHECK(from_json.rows[i].config == report.rows[i].config);
        CHECK(from_json.rows[i].n1 == report.rows[i].n1);
        CHECK(from_json.rows[i].n2 == report.rows[i].n2);
        CHECK(from_json.rows[i].mean_s == report.rows[i].mean_s);
        CHECK(from_json.rows[i].std_s == report.rows[i].std_s);
        CHECK(from_json.rows[i].throughput_itr_s == report.rows[i].throughput_itr_s);
        CHECK(from_json.rows[i].flops == report.rows[i].flops);
    }

    CHECK_THROWS_AS(write_report(BenchReport{}, ReportFormat::Csv, csv_path), ConfigError);
    CHECK_THROWS_AS(write_report(report, ReportFormat::Csv,
                                 std::filesystem::path("/nonexistent-dir/x.csv")),
                    IoError);
    std::filesystem::remove(csv_path);
    std::filesystem::remove(json_path);
}

TEST_CASE("one-row report serializes to header plus one line") {
    BenchReport report;
    report.rows.push_back({"softmax/self", 8, 8, 0.25, 0.01, 32.0, 1234});
    const auto path = temp_file("one_row.csv");
    write_report(report, ReportFormat::Csv, path);
    std::ifstream in(path);
    std::string line;
    std::size_t lines = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++lines;
    CHECK(lines == 2);
    std::filesystem::remove(path);
}

TEST_CASE("verification suites pass and are deterministic") {
    const auto first = verify_all(42);
    CHECK(all_passed(first));
    const auto second = verify_all(42);
    REQUIRE(first.size() == second.size());
    for (std::size_t i = 0; i < first.size(); ++i) {
        CHECK(first[i].name == second[i].name);
        CHECK(first[i].passed == second[i].passed);
        CHECK(first[i].max_residual == second[i].max_residual);
    }
}

TEST_CASE("a sign-flipped sin feature map breaks the decomposition identity") {
    Rng rng(15);
    const std::size_t rows = 8, d = 4;
    const Matrix q = random_matrix(rows, d, rng);
    const Matrix k = random_matrix(rows, d, rng);
    std::vector<std::size_t> pos(rows);
    for (std::size_t i = 0; i < rows; ++i) pos[i] = i;
    const ReweightLengths lengths{10, 12};
    const CosFeatureMaps qm = cosformer_feature_maps(q, pos, lengths.query_len);
    const CosFeatureMaps km = cosformer_feature_maps(k, pos, lengths.key_len);
    CHECK(cosformer_identity_residual(q, k, qm, km, pos, pos, lengths) <= 1e-9);

    CosFeatureMaps corrupted = qm;
    for (double& v : corrupted.sin_part.data()) v = -v;
    CHECK(cosformer_identity_residual(q, k, corrupted, km, pos, pos, lengths) > 1e-9);
}
