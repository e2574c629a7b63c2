// SPDX-License-Identifier: Apache-2.0

#include "qnc/actlut.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "qnc/errors.hpp"

namespace qnc::lut {

namespace {

using fx::int128;

// Returns k when x == 2^k exactly, nullopt otherwise.
std::optional<int> exact_log2(double x) {
    if (x <= 0.0 || !std::isfinite(x)) return std::nullopt;
    int e = 0;
    double m = std::frexp(x, &e);
    if (m != 0.5) return std::nullopt;
    return e - 1;
}

bool is_dyadic_q20(double x) {
    if (!std::isfinite(x) || std::fabs(x) > double(1 << 20)) return false;
    double scaled = std::ldexp(x, 20);
    return scaled == std::floor(scaled);
}

} // namespace

const char* act_fn_name(ActFn fn) {
    switch (fn) {
        case ActFn::sigmoid: return "sigmoid";
        case ActFn::tanh: return "tanh";
        case ActFn::exp: return "exp";
        case ActFn::reciprocal: return "reciprocal";
    }
    return "?";
}

void LutSpec::validate() const {
    if (n_entries < 2 || (n_entries & (n_entries - 1)) != 0 || n_entries > (1 << 20))
        throw ConfigError(fmt::format(
            "table size {} must be a power of two in [2, 2^20]", n_entries));
    if (!(input_lo < input_hi))
        throw ConfigError(fmt::format("table range [{}, {}) is empty", input_lo, input_hi));
    if (!is_dyadic_q20(input_lo) || !is_dyadic_q20(input_hi))
        throw ConfigError(
            "table range bounds must be dyadic rationals with at most 20 "
            "fractional bits and magnitude <= 2^20");
    if (!exact_log2(input_hi - input_lo))
        throw ConfigError(fmt::format(
            "table span {} must be a power of two", input_hi - input_lo));
    if (function == ActFn::reciprocal && !(input_lo > 0.0))
        throw ConfigError("reciprocal table requires a positive lower bound");
    fx::FxFormat::make(entry_format.width, entry_format.int_bits,
                       entry_format.rounding, entry_format.overflow);
}

double activation_real(ActFn fn, double x) {
    switch (fn) {
        case ActFn::sigmoid: return 1.0 / (1.0 + std::exp(-x));
        case ActFn::tanh: return std::tanh(x);
        case ActFn::exp: return std::exp(x);
        case ActFn::reciprocal: return 1.0 / x;
    }
    return 0.0;
}

LutTable build_table(const LutSpec& spec) {
    spec.validate();
    LutTable t{spec, {}};
    t.entries.reserve(spec.n_entries);
    const double step = (spec.input_hi - spec.input_lo) / spec.n_entries;
    const double offset = spec.sample == SamplePoint::midpoint ? 0.5 : 0.0;
    for (int k = 0; k < spec.n_entries; ++k) {
        double xk = spec.input_lo + (k + offset) * step;
        double y = activation_real(spec.function, xk);
        t.entries.push_back(static_cast<int64_t>(fx::quantize(y, spec.entry_format).raw));
    }
    return t;
}

int lut_index(const fx::FxValue& x, const LutSpec& spec) {
    const int n_log2 = *exact_log2(double(spec.n_entries));
    const int span_log2 = *exact_log2(spec.input_hi - spec.input_lo);
    const int t = n_log2 - span_log2; // N/span == 2^t
    const int f = x.format.frac_bits();

    // Common scale p keeps every term an integer: raw*2^(p-F), lo*2^p, and
    // the final division by 2^(p-t) is an arithmetic shift (= floor).
    const int p = std::max({f, 20, t});
    int128 scaled_x = x.raw << (p - f);
    int128 scaled_lo = int128(llroundl(std::ldexp((long double)spec.input_lo, 20)))
                       << (p - 20);
    int128 idx = (scaled_x - scaled_lo) >> (p - t);
    if (idx < 0) return 0;
    if (idx >= spec.n_entries) return spec.n_entries - 1;
    return int(idx);
}

fx::FxValue lut_lookup(const fx::FxValue& x, const LutTable& t) {
    return {t.spec.entry_format, t.entries[size_t(lut_index(x, t.spec))]};
}

fx::FxValue eval_relu(const fx::FxValue& x) {
    return x.raw < 0 ? fx::FxValue{x.format, 0} : x;
}

std::vector<fx::FxValue> eval_softmax(std::span<const fx::FxValue> xs,
                                      const LutTable& exp_t, const LutTable& inv_t,
                                      std::optional<fx::FxFormat> out_format) {
    if (xs.empty()) return {};
    const fx::FxFormat out = out_format.value_or(exp_t.spec.entry_format);

    const fx::FxValue* m = &xs[0];
    for (const auto& x : xs)
        if (x.raw > m->raw) m = &x;

    std::vector<fx::FxValue> exps;
    exps.reserve(xs.size());
    for (const auto& x : xs)
        exps.push_back(lut_lookup(fx::sub_exact(x, *m), exp_t));

    fx::FxValue sum = exps[0];
    for (size_t i = 1; i < exps.size(); ++i) sum = fx::add_exact(sum, exps[i]);

    fx::FxValue inv = lut_lookup(sum, inv_t);
    std::vector<fx::FxValue> ys;
    ys.reserve(xs.size());
    for (const auto& e : exps) ys.push_back(fx::cast(fx::mul_exact(e, inv), out));
    return ys;
}

std::string table_text(const LutTable& t) {
    std::string out = fmt::format("{},{},{},{},{}\n", act_fn_name(t.spec.function),
                                  t.spec.n_entries, t.spec.input_lo, t.spec.input_hi,
                                  t.spec.entry_format.str());
    for (int64_t e : t.entries) out += fmt::format("{}\n", e);
    return out;
}

} // namespace qnc::lut
