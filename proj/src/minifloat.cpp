// SPDX-License-Identifier: Apache-2.0

#include "qnc/minifloat.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <fmt/format.h>

#include "qnc/errors.hpp"

namespace qnc::mf {

namespace {

// A finite nonzero value taken apart: magnitude * 2^lsb_exp, magnitude != 0.
struct Unpacked {
    bool neg = false;
    uint64_t mag = 0;
    int lsb_exp = 0;
};

Unpacked unpack_finite(const MfValue& v) {
    Unpacked u;
    u.neg = v.sign() != 0;
    const int M = v.format.man_bits;
    if (v.exp_field() == 0) {
        u.mag = v.man_field(); // subnormal, no hidden bit
        u.lsb_exp = v.format.emin() - M;
    } else {
        u.mag = (uint64_t(1) << M) | v.man_field();
        u.lsb_exp = int(v.exp_field()) - v.format.bias - M;
    }
    return u;
}

// Core rounding step: encode the exact value (-1)^neg * mag * 2^lsb_exp,
// where `sticky` marks additional nonzero magnitude strictly below the LSB
// of mag. Round to nearest, ties to even mantissa field.
MfValue round_to_format(const MfFormat& f, bool neg, uint64_t mag, int lsb_exp,
                        bool sticky) {
    const int M = f.man_bits;
    if (mag == 0) return MfValue::zero(f, neg); // at most a sticky residue

    const int w = std::bit_width(mag);
    const int e_real = lsb_exp + w - 1;
    if (e_real > f.emax()) return MfValue::inf(f, neg);

    // Target LSB weight: normal numbers keep M+1 significant bits, anything
    // below emin is pinned to the subnormal grid.
    const int lt = (e_real >= f.emin() ? e_real : f.emin()) - M;
    int shift = lt - lsb_exp;

    uint64_t base;
    bool guard = false;
    if (shift <= 0) {
        base = mag << -shift;
    } else if (shift > 64) {
        base = 0;
        sticky = true;
    } else if (shift == 64) {
        base = 0;
        guard = (mag >> 63) & 1;
        sticky = sticky || (mag & ((uint64_t(1) << 63) - 1)) != 0;
    } else {
        base = mag >> shift;
        guard = (mag >> (shift - 1)) & 1;
        sticky = sticky || (mag & ((uint64_t(1) << (shift - 1)) - 1)) != 0;
    }

    int lt_final = lt;
    if (guard && (sticky || (base & 1))) base += 1;
    if (base >= (uint64_t(1) << (M + 1))) { // carry out of the mantissa
        base >>= 1;
        lt_final += 1;
    }
    if (base == 0) return MfValue::zero(f, neg);

    if (base >= (uint64_t(1) << M)) {
        const int value_exp = lt_final + M;
        if (value_exp > f.emax()) return MfValue::inf(f, neg);
        return MfValue::from_fields(f, neg, uint32_t(value_exp + f.bias),
                                    uint32_t(base - (uint64_t(1) << M)));
    }
    return MfValue::from_fields(f, neg, 0, uint32_t(base)); // subnormal
}

} // namespace

MfFormat MfFormat::make(int exp_bits, int man_bits) {
    MfFormat probe{exp_bits, man_bits, 0};
    return make(exp_bits, man_bits, probe.default_bias());
}

MfFormat MfFormat::make(int exp_bits, int man_bits, int bias) {
    if (exp_bits < 2)
        throw ConfigError(fmt::format("minifloat exponent bits {} < 2", exp_bits));
    if (man_bits < 1)
        throw ConfigError(fmt::format("minifloat mantissa bits {} < 1", man_bits));
    if (1 + exp_bits + man_bits > 16)
        throw ConfigError(fmt::format("minifloat width {} exceeds 16 bits",
                                      1 + exp_bits + man_bits));
    MfFormat f{exp_bits, man_bits, bias};
    // Keep every decoded value inside the host long double range.
    if (f.emax() > 16000 || f.emin() - man_bits < -16000)
        throw ConfigError(fmt::format("minifloat bias {} outside supported envelope", bias));
    return f;
}

std::string MfFormat::str() const {
    if (bias == default_bias()) return fmt::format("float<{},{}>", exp_bits, man_bits);
    return fmt::format("float<{},{},{}>", exp_bits, man_bits, bias);
}

MfFormat MfFormat::parse(std::string_view text) {
    auto fail = [&] {
        throw ConfigError(fmt::format("malformed minifloat format '{}'", text));
    };
    if (!text.starts_with("float<") || !text.ends_with(">")) fail();
    std::string inner(text.substr(6, text.size() - 7));
    std::vector<std::string> parts;
    size_t pos = 0;
    while (pos <= inner.size()) {
        size_t comma = inner.find(',', pos);
        if (comma == std::string::npos) {
            parts.push_back(inner.substr(pos));
            break;
        }
        parts.push_back(inner.substr(pos, comma - pos));
        pos = comma + 1;
    }
    if (parts.size() < 2 || parts.size() > 3) fail();
    int vals[3] = {0, 0, 0};
    for (size_t k = 0; k < parts.size(); ++k) {
        try {
            size_t used = 0;
            vals[k] = std::stoi(parts[k], &used);
            if (used != parts[k].size()) fail();
        } catch (const std::logic_error&) {
            fail();
        }
    }
    if (parts.size() == 2) return make(vals[0], vals[1]);
    return make(vals[0], vals[1], vals[2]);
}

bool MfValue::is_nan() const noexcept {
    return exp_field() == (1u << format.exp_bits) - 1 && man_field() != 0;
}

bool MfValue::is_inf() const noexcept {
    return exp_field() == (1u << format.exp_bits) - 1 && man_field() == 0;
}

bool MfValue::is_zero() const noexcept { return exp_field() == 0 && man_field() == 0; }

MfValue MfValue::from_fields(const MfFormat& f, uint32_t sign, uint32_t exp_field,
                             uint32_t man_field) {
    uint32_t bits = (sign & 1u) << (f.exp_bits + f.man_bits) |
                    (exp_field & ((1u << f.exp_bits) - 1)) << f.man_bits |
                    (man_field & ((1u << f.man_bits) - 1));
    return MfValue{f, bits};
}

MfValue MfValue::from_bits(const MfFormat& f, uint32_t bits) {
    return MfValue{f, bits & ((1u << f.total_bits()) - 1)};
}

MfValue MfValue::zero(const MfFormat& f, bool negative) {
    return from_fields(f, negative, 0, 0);
}

MfValue MfValue::inf(const MfFormat& f, bool negative) {
    return from_fields(f, negative, (1u << f.exp_bits) - 1, 0);
}

MfValue MfValue::nan(const MfFormat& f) {
    return from_fields(f, 0, (1u << f.exp_bits) - 1, 1u << (f.man_bits - 1));
}

MfValue MfValue::max_finite(const MfFormat& f, bool negative) {
    return from_fields(f, negative, (1u << f.exp_bits) - 2, (1u << f.man_bits) - 1);
}

MfValue mf_encode(long double x, const MfFormat& f) {
    if (std::isnan(x)) return MfValue::nan(f);
    bool neg = std::signbit(x);
    if (std::isinf(x)) return MfValue::inf(f, neg);
    if (x == 0.0L) return MfValue::zero(f, neg);

    // Exact decomposition: |x| = mag * 2^e2 with mag in [2^63, 2^64).
    int e = 0;
    long double m = std::frexp(std::fabs(x), &e);
    auto mag = static_cast<uint64_t>(std::ldexp(m, 64));
    return round_to_format(f, neg, mag, e - 64, false);
}

long double mf_decode(const MfValue& v) {
    if (v.is_nan()) return std::numeric_limits<long double>::quiet_NaN();
    if (v.is_inf())
        return v.sign() ? -std::numeric_limits<long double>::infinity()
                        : std::numeric_limits<long double>::infinity();
    if (v.is_zero()) return v.sign() ? -0.0L : 0.0L;
    Unpacked u = unpack_finite(v);
    long double mag = std::ldexp(static_cast<long double>(u.mag), u.lsb_exp);
    return u.neg ? -mag : mag;
}

namespace {

void require_same_format(const MfValue& a, const MfValue& b) {
    if (!(a.format == b.format))
        throw std::invalid_argument("minifloat operands must share a format");
}

} // namespace

MfValue mf_add(const MfValue& a, const MfValue& b) {
    require_same_format(a, b);
    const MfFormat& f = a.format;
    if (a.is_nan() || b.is_nan()) return MfValue::nan(f);
    if (a.is_inf() && b.is_inf())
        return a.sign() == b.sign() ? a : MfValue::nan(f);
    if (a.is_inf()) return a;
    if (b.is_inf()) return b;
    if (a.is_zero() && b.is_zero())
        return MfValue::zero(f, a.sign() && b.sign()); // -0 only from -0 + -0
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;

    Unpacked ua = unpack_finite(a);
    Unpacked ub = unpack_finite(b);
    if (ua.lsb_exp < ub.lsb_exp) std::swap(ua, ub);
    const int d = ua.lsb_exp - ub.lsb_exp;
    const int M = f.man_bits;

    if (d > M + 3) {
        // |a| outweighs |b| by more than the rounding window; b folds into a
        // sticky residue two bits below a's LSB.
        uint64_t base = ua.mag << 2;
        if (ua.neg != ub.neg) base -= 1;
        return round_to_format(f, ua.neg, base, ua.lsb_exp - 2, true);
    }

    int64_t va = int64_t(ua.mag << d);
    int64_t vb = int64_t(ub.mag);
    int64_t sum = (ua.neg ? -va : va) + (ub.neg ? -vb : vb);
    if (sum == 0) return MfValue::zero(f, false); // exact cancellation -> +0
    bool neg = sum < 0;
    return round_to_format(f, neg, uint64_t(neg ? -sum : sum), ub.lsb_exp, false);
}

MfValue mf_mul(const MfValue& a, const MfValue& b) {
    require_same_format(a, b);
    const MfFormat& f = a.format;
    if (a.is_nan() || b.is_nan()) return MfValue::nan(f);
    bool neg = (a.sign() ^ b.sign()) != 0;
    if (a.is_inf() || b.is_inf()) {
        if (a.is_zero() || b.is_zero()) return MfValue::nan(f); // Inf * 0
        return MfValue::inf(f, neg);
    }
    if (a.is_zero() || b.is_zero()) return MfValue::zero(f, neg);

    Unpacked ua = unpack_finite(a);
    Unpacked ub = unpack_finite(b);
    // Exact product: mantissas are at most M+1 bits each.
    return round_to_format(f, neg, ua.mag * ub.mag, ua.lsb_exp + ub.lsb_exp, false);
}

} // namespace qnc::mf
