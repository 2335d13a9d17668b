#include "mla/decoder_state.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "mla/errors.hpp"

namespace mla {

namespace {

// Feature row of the query/key at `position`, per part. Part 0 carries the
// ReLU features (cos-scaled for cosine re-weighting); part 1 the sin-scaled
// ones.
void feature_row(Mechanism mech, std::span<const double> raw, std::size_t position,
                 std::size_t length, std::vector<std::vector<double>>& out) {
    const std::size_t d = raw.size();
    if (mech == Mechanism::ReluLinear) {
        out.resize(1);
        out[0].resize(d);
        for (std::size_t a = 0; a < d; ++a) out[0][a] = std::max(0.0, raw[a]);
        return;
    }
    const double angle = (std::numbers::pi / 2.0) * static_cast<double>(position) /
                         static_cast<double>(length);
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    out.resize(2);
    out[0].resize(d);
    out[1].resize(d);
    for (std::size_t a = 0; a < d; ++a) {
        const double f = std::max(0.0, raw[a]);
        out[0][a] = f * c;
        out[1][a] = f * s;
    }
}

} // namespace

DecoderBlockState init_state(Mechanism mech, std::size_t d_kh, std::size_t d_vh,
                             bool keep_k) {
    if (mech == Mechanism::Softmax)
        throw ConfigError("decoder state: softmax has no reusable K^T*V accumulator; "
                          "use full recomputation instead");
    if (d_kh == 0 || d_vh == 0)
        throw ConfigError("decoder state: dimensions must be >= 1");
    DecoderBlockState state;
    state.mechanism = mech;
    state.d_kh = d_kh;
    state.d_vh = d_vh;
    const std::size_t parts = mech == Mechanism::CosFormer ? 2 : 1;
    state.kv_acc.assign(parts, Matrix(d_kh, d_vh));
    state.key_sum.assign(parts, std::vector<double>(d_kh, 0.0));
    if (keep_k)
        state.kept_keys = std::vector<Matrix>(parts, Matrix(0, d_kh));
    return state;
}

Matrix decode_step(DecoderBlockState& state, const StepInput& input) {
    const std::size_t d_kh = state.d_kh;
    const std::size_t d_vh = state.d_vh;
    const std::size_t parts = state.parts();
    if (input.q_row.rows() != 1 || input.q_row.cols() != d_kh)
        throw ShapeError("decode_step: q_row is " + std::to_string(input.q_row.rows()) +
                         "x" + std::to_string(input.q_row.cols()) + ", expected 1x" +
                         std::to_string(d_kh));
    std::uint64_t ops = 0;

    if (input.update) {
        const std::size_t chunk = input.new_k_rows.rows();
        if (input.new_v_rows.rows() != chunk)
            throw ShapeError("decode_step: chunk has " +
                             std::to_string(input.new_k_rows.rows()) + " key rows but " +
                             std::to_string(input.new_v_rows.rows()) + " value rows");
        if (chunk > 0 && (input.new_k_rows.cols() != d_kh || input.new_v_rows.cols() != d_vh))
            throw ShapeError("decode_step: chunk dims " +
                             std::to_string(input.new_k_rows.cols()) + "/" +
                             std::to_string(input.new_v_rows.cols()) + " vs state dims " +
                             std::to_string(d_kh) + "/" + std::to_string(d_vh));
        if (input.positions.size() != chunk)
            throw ShapeError("decode_step: " + std::to_string(input.positions.size()) +
                             " positions for a chunk of " + std::to_string(chunk));

        // Rows are folded in one at a time in stream order, so accumulator
        // contents are independent of how the stream was chunked.
        std::vector<std::vector<double>> kf;
        for (std::size_t r = 0; r < chunk; ++r) {
            feature_row(state.mechanism, input.new_k_rows.row(r), input.positions[r],
                        input.lengths.key_len, kf);
            for (std::size_t p = 0; p < parts; ++p) {
                Matrix& kv = state.kv_acc[p];
                std::vector<double>& ks = state.key_sum[p];
                for (std::size_t a = 0; a < d_kh; ++a) {
                    const double f = kf[p][a];
                    ks[a] += f;
                    for (std::size_t b = 0; b < d_vh; ++b)
                        kv(a, b) += f * input.new_v_rows(r, b);
                    ops += d_vh + 1;
                }
                if (state.kept_keys) (*state.kept_keys)[p].append_row(kf[p]);
            }
        }
        state.steps_seen += chunk;
        if (chunk > 0) ++state.update_count;
    }

    std::vector<std::vector<double>> qf;
    feature_row(state.mechanism, input.q_row.row(0), input.q_position,
                input.lengths.query_len, qf);

    Matrix a_row(1, d_vh);
    double den = 0.0;
    for (std::size_t p = 0; p < parts; ++p) {
        const Matrix& kv = state.kv_acc[p];
        const std::vector<double>& ks = state.key_sum[p];
        for (std::size_t a = 0; a < d_kh; ++a) {
            const double f = qf[p][a];
            den += f * ks[a];
            for (std::size_t b = 0; b < d_vh; ++b) a_row(0, b) += f * kv(a, b);
            ops += d_vh + 1;
        }
    }
    const double inv = 1.0 / std::max(den, kDenomEpsilon);
    for (std::size_t b = 0; b < d_vh; ++b) a_row(0, b) *= inv;
    ops += d_vh;

    state.ops_last_step = ops;
    return a_row;
}

Matrix run_incremental_self_attention(const Matrix& q_rows, const Matrix& k_rows,
                                      const Matrix& v_rows, Mechanism mech,
                                      ReweightLengths lengths) {
    if (q_rows.rows() != k_rows.rows() || k_rows.rows() != v_rows.rows())
        throw ShapeError("incremental self-attention: q/k/v row counts differ (" +
                         std::to_string(q_rows.rows()) + "/" + std::to_string(k_rows.rows()) +
                         "/" + std::to_string(v_rows.rows()) + ")");
    if (mech == Mechanism::CosFormer && lengths.query_len != lengths.key_len)
        throw ConfigError("incremental self-attention: self-attention re-weighting needs "
                          "query_len == key_len");
    DecoderBlockState state = init_state(mech, k_rows.cols(), v_rows.cols());
    Matrix out(0, v_rows.cols());
    StepInput in;
    in.lengths = lengths;
    for (std::size_t t = 0; t < q_rows.rows(); ++t) {
        in.q_row = Matrix(0, q_rows.cols());
        in.q_row.append_row(q_rows.row(t));
        in.new_k_rows = Matrix(0, k_rows.cols());
        in.new_k_rows.append_row(k_rows.row(t));
        in.new_v_rows = Matrix(0, v_rows.cols());
        in.new_v_rows.append_row(v_rows.row(t));
        in.update = true;
        in.positions = {t};
        in.q_position = t;
        const Matrix a = decode_step(state, in);
        out.append_row(a.row(0));
    }
    return out;
}

Matrix run_incremental_cross_attention(const Matrix& q_rows, const Matrix& enc_k,
                                       const Matrix& enc_v, Mechanism mech,
                                       ReweightLengths lengths) {
    if (enc_k.rows() != enc_v.rows())
        throw ShapeError("incremental cross-attention: encoder k/v row counts differ (" +
                         std::to_string(enc_k.rows()) + "/" + std::to_string(enc_v.rows()) +
                         ")");
    DecoderBlockState state = init_state(mech, enc_k.cols(), enc_v.cols());

    // Whole encoder output folded in as one chunk; every query reuses it.
    std::vector<std::size_t> positions(enc_k.rows());
    for (std::size_t j = 0; j < positions.size(); ++j) positions[j] = j;
    StepInput in;
    in.lengths = lengths;
    Matrix out(0, enc_v.cols());
    for (std::size_t t = 0; t < q_rows.rows(); ++t) {
        in.q_row = Matrix(0, q_rows.cols());
        in.q_row.append_row(q_rows.row(t));
        if (t == 0) {
            in.update = true;
            in.new_k_rows = enc_k;
            in.new_v_rows = enc_v;
            in.positions = positions;
        } else {
            in.update = false;
            in.new_k_rows = Matrix();
            in.new_v_rows = Matrix();
            in.positions.clear();
        }
        in.q_position = t;
        const Matrix a = decode_step(state, in);
        out.append_row(a.row(0));
    }
    return out;
}

} // namespace mla
