#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mla/bench.hpp"
#include "mla/errors.hpp"
#include "mla/length_predict.hpp"
#include "mla/model.hpp"
#include "mla/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailure = 1;
constexpr int kExitUsage = 2;

int run_verify(std::uint64_t seed) {
    const std::vector<mla::SuiteResult> results = mla::verify_all(seed);
    for (const mla::SuiteResult& r : results) {
        std::printf("%-24s %s  max-residual %.3e%s%s\n", r.name.c_str(),
                    r.passed ? "PASS" : "FAIL", r.max_residual,
                    r.detail.empty() ? "" : "  ", r.detail.c_str());
    }
    return mla::all_passed(results) ? kExitOk : kExitVerifyFailure;
}

int run_bench(const std::string& spec_path, const std::string& out_path,
              const std::string& format, std::uint64_t seed) {
    const mla::SweepSpec spec = mla::load_sweep_spec(spec_path);
    mla::Rng rng(seed);
    const mla::BenchReport report = mla::run_sweep(spec, rng);
    const mla::ReportFormat fmt =
        format == "json" ? mla::ReportFormat::Json : mla::ReportFormat::Csv;
    mla::write_report(report, fmt, out_path);
    bool any_unreliable = false;
    for (const mla::BenchRow& row : report.rows)
        if (row.config.find("[unreliable]") != std::string::npos) any_unreliable = true;
    if (any_unreliable)
        std::cerr << "warning: some rows ran too close to the timer granularity and are "
                     "flagged [unreliable]\n";
    std::cout << "wrote " << report.rows.size() << " rows to " << out_path << "\n";
    return kExitOk;
}

int run_flops(const std::string& config_path, std::size_t n_src, std::size_t n_tgt) {
    const mla::MlaConfig cfg = mla::load_model_config(config_path);
    const mla::FlopsBreakdown b = mla::estimate_flops_breakdown(cfg, n_src, n_tgt);
    std::printf("encoder projections      %12llu\n",
                static_cast<unsigned long long>(b.encoder_projections));
    std::printf("encoder attention        %12llu\n",
                static_cast<unsigned long long>(b.encoder_attention));
    std::printf("encoder ffn              %12llu\n",
                static_cast<unsigned long long>(b.encoder_ffn));
    std::printf("decoder projections      %12llu\n",
                static_cast<unsigned long long>(b.decoder_projections));
    std::printf("decoder self-attention   %12llu\n",
                static_cast<unsigned long long>(b.decoder_self_attention));
    std::printf("decoder cross-attention  %12llu\n",
                static_cast<unsigned long long>(b.decoder_cross_attention));
    std::printf("decoder ffn              %12llu\n",
                static_cast<unsigned long long>(b.decoder_ffn));
    std::printf("total                    %12llu\n",
                static_cast<unsigned long long>(b.total()));
    return kExitOk;
}

int run_fit_length(const std::string& kind, const std::string& corpus_path,
                   const std::string& out_path, double quantile, bool use_quantile) {
    if (kind == "ratio") {
        const auto corpus = mla::load_pair_corpus(corpus_path);
        const mla::RatioPredictor p = mla::fit_ratio(
            corpus, use_quantile ? mla::RatioFitMode::Quantile : mla::RatioFitMode::Average,
            quantile);
        mla::save_ratio(p, out_path);
        std::printf("alpha %.6f (%zu pairs) -> %s\n", p.alpha, corpus.size(),
                    out_path.c_str());
        return kExitOk;
    }
    const auto corpus = mla::load_token_corpus(corpus_path);
    const mla::LutPredictor p = mla::fit_lut(corpus);
    mla::save_lut(p, out_path);
    std::printf("lut with %zu tokens, fallback %.6f -> %s\n", p.table.size(), p.fallback,
                out_path.c_str());
    return kExitOk;
}

std::vector<std::string> read_tokens(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw mla::IoError("cannot open '" + path + "' for reading");
    std::vector<std::string> tokens;
    std::string tok;
    while (in >> tok) tokens.push_back(tok);
    if (tokens.empty()) throw mla::IoError("'" + path + "' contains no tokens");
    return tokens;
}

int run_predict_length(const std::string& predictor_path, const std::string& input_path,
                       double dampening, bool dampening_set) {
    const std::vector<std::string> tokens = read_tokens(input_path);
    // Predictor kind is detected from the file header.
    std::ifstream probe(predictor_path);
    if (!probe) throw mla::IoError("cannot open '" + predictor_path + "' for reading");
    std::string first_line;
    std::getline(probe, first_line);
    probe.close();
    std::size_t predicted = 0;
    if (first_line.rfind("#alpha", 0) == 0) {
        const mla::RatioPredictor p = mla::load_ratio(predictor_path);
        predicted = mla::predict_ratio(tokens.size(), p);
    } else {
        mla::LutPredictor p = mla::load_lut(predictor_path);
        if (dampening_set) p.dampening = dampening;
        predicted = mla::predict_lut(tokens, p);
    }
    std::printf("%zu\n", predicted);
    return kExitOk;
}

int run_decode_demo(const std::string& config_path, std::uint64_t seed,
                    std::size_t steps, std::size_t src_len, bool check_oracle) {
    const mla::MlaConfig cfg = mla::load_model_config(config_path);
    const mla::ToyModel model = mla::build_model(cfg, seed);
    mla::Rng rng(seed ^ 0x5eedULL);
    const mla::Matrix src =
        mla::random_matrix(src_len, cfg.geometry.d_model, rng, 1.0);
    const mla::Matrix enc_out = mla::encode(model, src);
    const mla::Matrix out = mla::greedy_decode(model, enc_out, steps);

    double norm = 0.0;
    for (double v : out.data()) norm += v * v;
    std::printf("decoded %zu steps, d_model %zu, output frobenius norm %.6f\n", out.rows(),
                out.cols(), std::sqrt(norm));
    for (std::size_t t = 0; t < std::min<std::size_t>(3, out.rows()); ++t) {
        std::printf("  step %zu:", t);
        for (std::size_t j = 0; j < std::min<std::size_t>(6, out.cols()); ++j)
            std::printf(" % .4f", out(t, j));
        std::printf("%s\n", out.cols() > 6 ? " ..." : "");
    }
    if (check_oracle) {
        const mla::Matrix recomputed =
            mla::greedy_decode(model, enc_out, steps, mla::DecodeMode::Recompute);
        const double residual = mla::max_abs_diff(out, recomputed);
        std::printf("incremental vs recompute max |diff| = %.3e\n", residual);
        if (residual > 1e-8) {
            std::printf("FAIL: decode paths disagree\n");
            return kExitVerifyFailure;
        }
        std::printf("PASS: decode paths agree within 1e-8\n");
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"modular linearized attention kernels and benchmarks"};
    app.require_subcommand(1);

    std::uint64_t seed = 42;
    std::string spec_path, out_path, config_path, corpus_path, predictor_path, input_path;
    std::string format = "csv";
    std::size_t n_src = 100, n_tgt = 150;
    std::size_t steps = 20, src_len = 35;
    double quantile = 0.9;
    double dampening = 1.0;
    bool check_oracle = false;

    CLI::App* verify = app.add_subcommand("verify", "run all verification suites");
    verify->add_option("--seed", seed, "rng seed");

    CLI::App* bench = app.add_subcommand("bench", "run a latency sweep");
    bench->add_option("--spec", spec_path, "sweep spec file")->required();
    bench->add_option("--out", out_path, "output report path")->required();
    bench->add_option("--format", format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    bench->add_option("--seed", seed, "workload seed");

    CLI::App* flops = app.add_subcommand("flops", "closed-form operation counts");
    flops->add_option("--config", config_path, "model config file")->required();
    flops->add_option("--n-src", n_src, "source length");
    flops->add_option("--n-tgt", n_tgt, "target length");

    CLI::App* fit = app.add_subcommand("fit-length", "fit a length predictor");
    std::string fit_kind;
    fit->add_option("kind", fit_kind, "ratio or lut")
        ->required()
        ->check(CLI::IsMember({"ratio", "lut"}));
    fit->add_option("--corpus", corpus_path, "corpus file")->required();
    fit->add_option("--out", out_path, "output predictor file")->required();
    CLI::Option* quantile_opt =
        fit->add_option("--quantile", quantile, "fit the q-th ratio quantile");

    CLI::App* predict = app.add_subcommand("predict-length", "apply a length predictor");
    predict->add_option("--predictor", predictor_path, "predictor file")->required();
    predict->add_option("--input", input_path, "token file (whitespace separated)")
        ->required();
    CLI::Option* damp_opt =
        predict->add_option("--dampening", dampening, "override lut dampening");

    CLI::App* demo = app.add_subcommand("decode-demo", "build a toy model and decode");
    demo->add_option("--config", config_path, "model config file")->required();
    demo->add_option("--seed", seed, "model/input seed");
    demo->add_option("--steps", steps, "decode steps");
    demo->add_option("--src-len", src_len, "synthetic source length");
    demo->add_flag("--check-oracle", check_oracle,
                   "compare against full per-step recomputation");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (app.got_subcommand(verify)) return run_verify(seed);
        if (app.got_subcommand(bench)) return run_bench(spec_path, out_path, format, seed);
        if (app.got_subcommand(flops)) return run_flops(config_path, n_src, n_tgt);
        if (app.got_subcommand(fit))
            return run_fit_length(fit_kind, corpus_path, out_path, quantile,
                                  quantile_opt->count() > 0);
        if (app.got_subcommand(predict))
            return run_predict_length(predictor_path, input_path, dampening,
                                      damp_opt->count() > 0);
        if (app.got_subcommand(demo))
            return run_decode_demo(config_path, seed, steps, src_len, check_oracle);
    } catch (const mla::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const mla::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitVerifyFailure;
    }
    return kExitUsage;
}
