#include "mla/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mla/decoder_state.hpp"
#include "mla/errors.hpp"

namespace mla {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// Smallest nonzero interval the clock resolves, measured once.
double clock_granularity_s() {
    static const double granularity = [] {
        double best = 1.0;
        for (int i = 0; i < 16; ++i) {
            const auto t0 = Clock::now();
            auto t1 = Clock::now();
            while (t1 == t0) t1 = Clock::now();
            best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
        }
        return best;
    }();
    return granularity;
}

struct Workload {
    Matrix q; // steps x d_kh
    Matrix k; // key_len x d_kh
    Matrix v; // key_len x d_vh
};

// Decodes one synthetic sequence; returns a checksum so the work cannot be
// optimized away.
double decode_once(const Workload& w, Mechanism mech, SweepVariant variant,
                   AttentionRole role, ReweightLengths lengths) {
    const std::size_t steps = w.q.rows();
    double checksum = 0.0;

    if (mech == Mechanism::Softmax) {
        // Quadratic reference path: each step scores the query against the
        // keys available so far (all keys for cross-attention).
        for (std::size_t t = 0; t < steps; ++t) {
            Matrix q_row(0, w.q.cols());
            q_row.append_row(w.q.row(t));
            const std::size_t visible = role == AttentionRole::DecoderSelf ? t + 1
                                                                           : w.k.rows();
            const Matrix out = scaled_dot_attention(q_row, w.k.top_rows(visible),
                                                    w.v.top_rows(visible), false);
            checksum += out(0, 0);
        }
        return checksum;
    }

    if (variant == SweepVariant::Reuse) {
        if (role == AttentionRole::DecoderSelf) {
            DecoderBlockState state = init_state(mech, w.q.cols(), w.v.cols());
            StepInput in;
            in.lengths = lengths;
            for (std::size_t t = 0; t < steps; ++t) {
                in.q_row = Matrix(0, w.q.cols());
                in.q_row.append_row(w.q.row(t));
                in.new_k_rows = Matrix(0, w.k.cols());
                in.new_k_rows.append_row(w.k.row(t));
                in.new_v_rows = Matrix(0, w.v.cols());
                in.new_v_rows.append_row(w.v.row(t));
                in.update = true;
                in.positions = {t};
                in.q_position = t;
                checksum += decode_step(state, in)(0, 0);
            }
            return checksum;
        }
        const Matrix out = run_incremental_cross_attention(w.q, w.k, w.v, mech, lengths);
        for (std::size_t t = 0; t < steps; ++t) checksum += out(t, 0);
        return checksum;
    }

    // Naive variant: rebuild the accumulators from the whole visible prefix
    // at every step.
    std::vector<std::size_t> positions(w.k.rows());
    for (std::size_t j = 0; j < positions.size(); ++j) positions[j] = j;
    for (std::size_t t = 0; t < steps; ++t) {
        const std::size_t visible = role == AttentionRole::DecoderSelf ? t + 1 : w.k.rows();
        DecoderBlockState state = init_state(mech, w.q.cols(), w.v.cols());
        StepInput in;
        in.q_row = Matrix(0, w.q.cols());
        in.q_row.append_row(w.q.row(t));
        in.new_k_rows = w.k.top_rows(visible);
        in.new_v_rows = w.v.top_rows(visible);
        in.update = true;
        in.positions.assign(positions.begin(), positions.begin() + visible);
        in.q_position = t;
        in.lengths = lengths;
        checksum += decode_step(state, in)(0, 0);
    }
    return checksum;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

void SweepSpec::validate() const {
    if (mechanisms.empty()) throw ConfigError("sweep spec: no mechanisms");
    if (lengths.empty()) throw ConfigError("sweep spec: no lengths");
    if (!std::is_sorted(lengths.begin(), lengths.end()))
        throw ConfigError("sweep spec: lengths must be sorted ascending");
    if (lengths.front() == 0) throw ConfigError("sweep spec: lengths must be >= 1");
    if (repetitions < 3) throw ConfigError("sweep spec: repetitions must be >= 3");
    if (d_kh == 0 || d_vh == 0) throw ConfigError("sweep spec: dims must be >= 1");
    if (batch == 0 || samples == 0)
        throw ConfigError("sweep spec: batch and samples must be >= 1");
    if (role == AttentionRole::DecoderCross && cross_target_len == 0)
        throw ConfigError("sweep spec: cross_target_len must be >= 1");
}

BenchReport run_sweep(const SweepSpec& spec, Rng& rng) {
    spec.validate();
    const double granularity = clock_granularity_s();
    BenchReport report;
    volatile double sink = 0.0;

    std::size_t point_id = 0;
    for (const Mechanism mech : spec.mechanisms) {
        for (const std::size_t length : spec.lengths) {
            const std::size_t steps =
                spec.role == AttentionRole::DecoderSelf ? length : spec.cross_target_len;
            const std::size_t key_len = length;
            const ReweightLengths lengths{steps, key_len};

            // Workload is a pure function of (seed, point); timing noise is
            // the only run-to-run variation.
            Rng point_rng = rng.fork(point_id++);
            std::vector<Workload> workloads;
            workloads.reserve(spec.samples * spec.batch);
            for (std::size_t s = 0; s < spec.samples * spec.batch; ++s) {
                Workload w;
                w.q = random_matrix(steps, spec.d_kh, point_rng);
                w.k = random_matrix(key_len, spec.d_kh, point_rng);
                w.v = random_matrix(key_len, spec.d_vh, point_rng);
                workloads.push_back(std::move(w));
            }

            // Warm-up decode, excluded from timing.
            sink = sink + decode_once(workloads[0], mech, spec.variant, spec.role, lengths);

            std::vector<double> times;
            times.reserve(spec.repetitions);
            for (std::size_t rep = 0; rep < spec.repetitions; ++rep) {
                const auto start = Clock::now();
                for (const Workload& w : workloads)
                    sink = sink + decode_once(w, mech, spec.variant, spec.role, lengths);
                times.push_back(seconds_since(start));
            }

            double mean = 0.0;
            for (double t : times) mean += t;
            mean /= static_cast<double>(times.size());
            double var = 0.0;
            for (double t : times) var += (t - mean) * (t - mean);
            var /= static_cast<double>(times.size() - 1);

            BenchRow row;
            row.config = std::string(mechanism_name(mech)) +
                         (spec.role == AttentionRole::DecoderSelf ? "/self" : "/cross");
            if (mech != Mechanism::Softmax)
                row.config += spec.variant == SweepVariant::Reuse ? "/reuse" : "/naive";
            if (mean < 100.0 * granularity) row.config += " [unreliable]";
            row.n1 = steps;
            row.n2 = key_len;
            row.mean_s = mean;
            row.std_s = std::sqrt(var);
            const double calls =
                static_cast<double>(steps * spec.samples * spec.batch);
            row.throughput_itr_s = calls / mean;
            row.flops = kernel_decode_flops(mech, spec.variant, spec.role, steps, key_len,
                                            spec.d_kh, spec.d_vh);
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

void write_report(const BenchReport& report, ReportFormat format,
                  const std::filesystem::path& path) {
    if (report.rows.empty()) throw ConfigError("write_report: empty report");
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    if (format == ReportFormat::Csv) {
        out << kReportCsvHeader << "\n";
        for (const BenchRow& row : report.rows) {
            out << row.config << "," << row.n1 << "," << row.n2 << ","
                << format_double(row.mean_s) << "," << format_double(row.std_s) << ","
                << format_double(row.throughput_itr_s) << "," << row.flops << "\n";
        }
    } else {
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (const BenchRow& row : report.rows) {
            nlohmann::ordered_json obj;
            obj["config"] = row.config;
            obj["n1"] = row.n1;
            obj["n2"] = row.n2;
            obj["mean_s"] = row.mean_s;
            obj["std_s"] = row.std_s;
            obj["throughput_itr_s"] = row.throughput_itr_s;
            obj["flops"] = row.flops;
            rows.push_back(std::move(obj));
        }
        out << rows.dump(2) << "\n";
    }
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

BenchReport read_report_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::string line;
    if (!std::getline(in, line) || line != kReportCsvHeader)
        throw IoError(path.string() + ": missing or unexpected CSV header");
    BenchReport report;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            fields.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (fields.size() != 7)
            throw IoError(path.string() + ": expected 7 fields, got " +
                          std::to_string(fields.size()));
        BenchRow row;
        row.config = fields[0];
        row.n1 = std::stoul(fields[1]);
        row.n2 = std::stoul(fields[2]);
        row.mean_s = std::stod(fields[3]);
        row.std_s = std::stod(fields[4]);
        row.throughput_itr_s = std::stod(fields[5]);
        row.flops = std::stoull(fields[6]);
        report.rows.push_back(std::move(row));
    }
    return report;
}

BenchReport read_report_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    nlohmann::json rows;
    try {
        in >> rows;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
    if (!rows.is_array()) throw IoError(path.string() + ": expected a JSON array");
    BenchReport report;
    for (const auto& obj : rows) {
        BenchRow row;
        row.config = obj.at("config").get<std::string>();
        row.n1 = obj.at("n1").get<std::size_t>();
        row.n2 = obj.at("n2").get<std::size_t>();
        row.mean_s = obj.at("mean_s").get<double>();
        row.std_s = obj.at("std_s").get<double>();
        row.throughput_itr_s = obj.at("throughput_itr_s").get<double>();
        row.flops = obj.at("flops").get<std::uint64_t>();
        report.rows.push_back(std::move(row));
    }
    return report;
}

SweepSpec parse_sweep_spec(const std::string& text) {
    SweepSpec spec;
    spec.mechanisms.clear();
    spec.lengths.clear();
    std::istringstream stream(text);
    std::string line;
    std::size_t lineno = 0;
    auto split_list = [](const std::string& value) {
        std::vector<std::string> items;
        std::size_t start = 0;
        while (start <= value.size()) {
            const auto comma = value.find(',', start);
            std::string item = value.substr(start, comma - start);
            const auto b = item.find_first_not_of(" \t");
            const auto e = item.find_last_not_of(" \t");
            if (b != std::string::npos) items.push_back(item.substr(b, e - b + 1));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        return items;
    };
    while (std::getline(stream, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto b = line.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) continue;
        const auto e = line.find_last_not_of(" \t\r\n");
        line = line.substr(b, e - b + 1);
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("sweep spec line " + std::to_string(lineno) +
                              ": expected key = value");
        auto trim_field = [](std::string s) {
            const auto fb = s.find_first_not_of(" \t");
            if (fb == std::string::npos) return std::string();
            const auto fe = s.find_last_not_of(" \t");
            return s.substr(fb, fe - fb + 1);
        };
        const std::string key = trim_field(line.substr(0, eq));
        const std::string value = trim_field(line.substr(eq + 1));
        try {
            if (key == "mechanisms") {
                for (const std::string& name : split_list(value))
                    spec.mechanisms.push_back(mechanism_from_name(name));
            } else if (key == "lengths") {
                for (const std::string& item : split_list(value))
                    spec.lengths.push_back(std::stoul(item));
            } else if (key == "d_kh") spec.d_kh = std::stoul(value);
            else if (key == "d_vh") spec.d_vh = std::stoul(value);
            else if (key == "batch") spec.batch = std::stoul(value);
            else if (key == "samples") spec.samples = std::stoul(value);
            else if (key == "repetitions") spec.repetitions = std::stoul(value);
            else if (key == "cross_target_len") spec.cross_target_len = std::stoul(value);
            else if (key == "variant") {
                if (value == "naive") spec.variant = SweepVariant::Naive;
                else if (value == "reuse") spec.variant = SweepVariant::Reuse;
                else throw ConfigError("unknown variant '" + value + "'");
            } else if (key == "role") {
                if (value == "self") spec.role = AttentionRole::DecoderSelf;
                else if (value == "cross") spec.role = AttentionRole::DecoderCross;
                else throw ConfigError("unknown role '" + value + "'");
            } else {
                throw ConfigError("unknown sweep spec key '" + key + "'");
            }
        } catch (const std::invalid_argument&) {
            throw ConfigError("sweep spec line " + std::to_string(lineno) +
                              ": bad value '" + value + "' for key '" + key + "'");
        }
    }
    spec.validate();
    return spec;
}

SweepSpec load_sweep_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_sweep_spec(buffer.str());
}

} // namespace mla
