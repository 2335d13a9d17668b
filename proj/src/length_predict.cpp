#include "mla/length_predict.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mla/errors.hpp"

namespace mla {

namespace {

std::size_t round_clamped(double value) {
    const double rounded = std::floor(value + 0.5); // half-up
    return rounded < 1.0 ? 1 : static_cast<std::size_t>(rounded);
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    return out;
}

// Splits `token<TAB>field` with a fallback to any run of whitespace.
bool split_record(const std::string& line, std::string& first, std::string& second) {
    const auto tab = line.find('\t');
    if (tab != std::string::npos) {
        first = line.substr(0, tab);
        second = line.substr(tab + 1);
        return !first.empty() && !second.empty();
    }
    std::istringstream ss(line);
    return static_cast<bool>(ss >> first >> second);
}

} // namespace

std::size_t predict_ratio(std::size_t src_len, const RatioPredictor& p) {
    if (p.alpha <= 0.0) throw ConfigError("ratio predictor: alpha must be > 0");
    if (src_len == 0) throw ConfigError("ratio predictor: src_len must be >= 1");
    return round_clamped(p.alpha * static_cast<double>(src_len));
}

RatioPredictor fit_ratio(const std::vector<CorpusPair>& corpus, RatioFitMode mode,
                         double quantile) {
    if (corpus.empty()) throw ConfigError("fit_ratio: empty corpus");
    std::vector<double> ratios;
    ratios.reserve(corpus.size());
    for (const CorpusPair& pair : corpus) {
        if (pair.src_len == 0 || pair.tgt_len == 0)
            throw ConfigError("fit_ratio: corpus lengths must be >= 1");
        ratios.push_back(static_cast<double>(pair.tgt_len) /
                         static_cast<double>(pair.src_len));
    }
    if (mode == RatioFitMode::Average) {
        double sum = 0.0;
        for (double r : ratios) sum += r;
        return {sum / static_cast<double>(ratios.size())};
    }
    if (quantile < 0.0 || quantile > 1.0)
        throw ConfigError("fit_ratio: quantile must be in [0, 1]");
    std::sort(ratios.begin(), ratios.end());
    const double pos = quantile * static_cast<double>(ratios.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    const double value = lo + 1 < ratios.size()
                             ? ratios[lo] + frac * (ratios[lo + 1] - ratios[lo])
                             : ratios[lo];
    return {value};
}

std::size_t predict_lut(const std::vector<std::string>& tokens, const LutPredictor& p) {
    if (tokens.empty()) throw ConfigError("lut predictor: empty token list");
    if (p.fallback <= 0.0 || p.dampening <= 0.0)
        throw ConfigError("lut predictor: fallback and dampening must be > 0");
    double sum = 0.0;
    for (const std::string& tok : tokens) {
        const auto it = p.table.find(tok);
        sum += it != p.table.end() ? it->second : p.fallback;
    }
    return round_clamped(p.dampening * sum);
}

LutPredictor fit_lut(const std::vector<std::pair<std::string, std::size_t>>& alignments) {
    if (alignments.empty()) throw ConfigError("fit_lut: no alignments");
    std::map<std::string, std::pair<double, std::size_t>> sums; // token -> (sum, count)
    double total = 0.0;
    for (const auto& [token, len] : alignments) {
        if (len == 0) throw ConfigError("fit_lut: observed lengths must be >= 1");
        auto& [sum, count] = sums[token];
        sum += static_cast<double>(len);
        ++count;
        total += static_cast<double>(len);
    }
    LutPredictor p;
    for (const auto& [token, agg] : sums)
        p.table[token] = agg.first / static_cast<double>(agg.second);
    p.fallback = total / static_cast<double>(alignments.size());
    p.dampening = 1.0;
    return p;
}

void save_lut(const LutPredictor& p, const std::filesystem::path& path) {
    std::ofstream out = open_output(path);
    out.precision(17);
    out << "#fallback\t" << p.fallback << "\n";
    for (const auto& [token, value] : p.table) out << token << "\t" << value << "\n";
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

LutPredictor load_lut(const std::filesystem::path& path) {
    std::ifstream in = open_input(path);
    LutPredictor p;
    bool saw_fallback = false;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::string key, value_str;
        if (!split_record(line, key, value_str))
            throw IoError(path.string() + ":" + std::to_string(lineno) +
                          ": expected token<TAB>value");
        double value = 0.0;
        try {
            value = std::stod(value_str);
        } catch (const std::exception&) {
            throw IoError(path.string() + ":" + std::to_string(lineno) +
                          ": '" + value_str + "' is not a number");
        }
        if (value <= 0.0)
            throw IoError(path.string() + ":" + std::to_string(lineno) +
                          ": non-positive mapping " + value_str);
        if (key == "#fallback") {
            p.fallback = value;
            saw_fallback = true;
        } else {
            p.table[key] = value;
        }
    }
    if (!saw_fallback && p.table.empty())
        throw IoError(path.string() + ": empty lookup table");
    if (!saw_fallback) {
        double sum = 0.0;
        for (const auto& [_, v] : p.table) sum += v;
        p.fallback = sum / static_cast<double>(p.table.size());
    }
    return p;
}

void save_ratio(const RatioPredictor& p, const std::filesystem::path& path) {
    std::ofstream out = open_output(path);
    out.precision(17);
    out << "#alpha\t" << p.alpha << "\n";
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

RatioPredictor load_ratio(const std::filesystem::path& path) {
    std::ifstream in = open_input(path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::string key, value_str;
        if (!split_record(line, key, value_str) || key != "#alpha")
            throw IoError(path.string() + ": expected a single '#alpha<TAB>value' line");
        const double alpha = std::stod(value_str);
        if (alpha <= 0.0) throw IoError(path.string() + ": alpha must be > 0");
        return {alpha};
    }
    throw IoError(path.string() + ": empty ratio predictor file");
}

std::vector<CorpusPair> load_pair_corpus(const std::filesystem::path& path) {
    std::ifstream in = open_input(path);
    std::vector<CorpusPair> corpus;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::string src_str, tgt_str;
        if (!split_record(line, src_str, tgt_str))
            throw IoError(path.string() + ":" + std::to_string(lineno) +
                          ": expected src_len<TAB>tgt_len");
        try {
            const long src = std::stol(src_str);
            const long tgt = std::stol(tgt_str);
            if (src < 1 || tgt < 1) throw std::invalid_argument("non-positive");
            corpus.push_back({static_cast<std::size_t>(src), static_cast<std::size_t>(tgt)});
        } catch (const std::exception&) {
            throw IoError(path.string() + ":" + std::to_string(lineno) +
                          ": lengths must be positive integers");
        }
    }
    return corpus;
}

std::vector<std::pair<std::string, std::size_t>> load_token_corpus(
    const std::filesystem::path& path) {
    std::ifstream in = open_input(path);
    std::vector<std::pair<std::string, std::size_t>> corpus;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::string token, len_str;
        if (!split_record(line, token, len_str))
            throw IoError(path.string() + ":" + std::to_string(lineno) +
                          ": expected token<TAB>len");
        try {
            const long len = std::stol(len_str);
            if (len < 1) throw std::invalid_argument("non-positive");
            corpus.emplace_back(token, static_cast<std::size_t>(len));
        } catch (const std::exception&) {
            throw IoError(path.string() + ":" + std::to_string(lineno) +
                          ": length must be a positive integer");
        }
    }
    return corpus;
}

} // namespace mla
