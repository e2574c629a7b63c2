// SPDX-License-Identifier: Apache-2.0

#include "qnc/fixnum.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include <fmt/format.h>

#include "qnc/errors.hpp"

namespace qnc::fx {

namespace {

// Arithmetic shift right = floor division by 2^s (C++20 guarantees sign
// extension for signed right shifts).
int128 shr_floor(int128 v, int s) {
    if (s <= 0) return v;
    if (s >= 127) return v < 0 ? -1 : 0;
    return v >> s;
}

// Round v / 2^s to nearest, ties away from zero.
int128 shr_nearest(int128 v, int s) {
    if (s <= 0) return v;
    bool neg = v < 0;
    uint128 mag = neg ? uint128(0) - uint128(v) : uint128(v);
    if (s >= 128) return 0; // |v| < 2^127 <= half step
    uint128 half = uint128(1) << (s - 1);
    uint128 r = (mag + half) >> s;
    return neg ? -int128(r) : int128(r);
}

int128 shift_round(int128 v, int s, Rounding mode) {
    return mode == Rounding::truncate ? shr_floor(v, s) : shr_nearest(v, s);
}

// Wrap or saturate an ideal (possibly out-of-range) raw into W bits.
int128 apply_overflow(int128 ideal, const FxFormat& f) {
    if (f.overflow == Overflow::saturate) {
        if (ideal < f.raw_min()) return f.raw_min();
        if (ideal > f.raw_max()) return f.raw_max();
        return ideal;
    }
    uint128 mask = f.width >= 128 ? ~uint128(0) : (uint128(1) << f.width) - 1;
    uint128 low = uint128(ideal) & mask;
    uint128 sign_bit = uint128(1) << (f.width - 1);
    if (low & sign_bit) return int128(low) - (int128(1) << f.width);
    return int128(low);
}

void check_grown_width(int w) {
    if (w > 128)
        throw ConfigError(fmt::format(
            "exact result needs {} bits, beyond the 128-bit intermediate", w));
}

} // namespace

FxFormat FxFormat::make(int width, int int_bits, Rounding r, Overflow o) {
    if (width < 1 || width > 64)
        throw ConfigError(fmt::format("fixed-point width {} outside [1,64]", width));
    if (int_bits < 0 || int_bits > width)
        throw ConfigError(fmt::format(
            "fixed-point integer bits {} outside [0,{}]", int_bits, width));
    return FxFormat{width, int_bits, r, o};
}

std::string FxFormat::str() const {
    return fmt::format("fixed<{},{},{},{}>", width, int_bits,
                       rounding == Rounding::nearest ? "rnd" : "trn",
                       overflow == Overflow::saturate ? "sat" : "wrap");
}

FxFormat FxFormat::parse(std::string_view text) {
    auto fail = [&] {
        throw ConfigError(fmt::format("malformed fixed-point format '{}'", text));
    };
    if (!text.starts_with("fixed<") || !text.ends_with(">")) fail();
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
    if (parts.size() < 2 || parts.size() > 4) fail();
    int w = 0, i = 0;
    try {
        size_t used = 0;
        w = std::stoi(parts[0], &used);
        if (used != parts[0].size()) fail();
        i = std::stoi(parts[1], &used);
        if (used != parts[1].size()) fail();
    } catch (const std::logic_error&) {
        fail();
    }
    Rounding r = Rounding::nearest;
    Overflow o = Overflow::saturate;
    if (parts.size() >= 3) {
        if (parts[2] == "rnd") r = Rounding::nearest;
        else if (parts[2] == "trn") r = Rounding::truncate;
        else fail();
    }
    if (parts.size() == 4) {
        if (parts[3] == "sat") o = Overflow::saturate;
        else if (parts[3] == "wrap") o = Overflow::wrap;
        else fail();
    }
    return make(w, i, r, o);
}

long double FxValue::real() const noexcept { return to_real(*this); }

FxValue quantize(double x, const FxFormat& f) {
    if (std::isnan(x))
        throw std::invalid_argument("quantize: NaN input");
    if (std::isinf(x)) {
        // Out of range in any format; saturation semantics regardless of mode.
        return {f, x > 0 ? f.raw_max() : f.raw_min()};
    }
    if (x == 0.0) return {f, 0};

    // Exact decomposition: x = mant * 2^e2 with |mant| in [2^52, 2^53).
    int e = 0;
    double m = std::frexp(x, &e);
    auto mant = static_cast<int64_t>(std::ldexp(m, 53));
    int e2 = e - 53;

    // Ideal (pre-overflow) raw is round(mant * 2^s) with s = e2 + F.
    int s = e2 + f.frac_bits();
    int128 ideal;
    if (s >= 64) {
        // |ideal| >= 2^115: far outside any W<=64 format. Wrapping keeps the
        // low W bits of mant*2^s, all zero since s >= W.
        if (f.overflow == Overflow::wrap) return {f, 0};
        return {f, mant > 0 ? f.raw_max() : f.raw_min()};
    }
    if (s >= 0)
        ideal = int128(mant) << s;
    else
        ideal = shift_round(int128(mant), -s, f.rounding);
    return {f, apply_overflow(ideal, f)};
}

long double to_real(const FxValue& v) {
    return std::ldexp(static_cast<long double>(v.raw), -v.format.frac_bits());
}

FxValue cast(const FxValue& v, const FxFormat& f) {
    int shift = f.frac_bits() - v.format.frac_bits();
    int128 ideal;
    if (shift >= 0) {
        if (shift >= 64 || (shift > 0 && (v.raw > (int128(1) << (126 - shift)) ||
                                          v.raw < -(int128(1) << (126 - shift))))) {
            // The scaled raw exceeds the 128-bit workspace, hence certainly
            // exceeds any W<=64 target range. Saturate directly; for wrap,
            // the low W bits are computable from the low bits of v.raw.
            if (f.overflow == Overflow::saturate)
                return {f, v.raw > 0 ? f.raw_max() : (v.raw < 0 ? f.raw_min() : 0)};
            if (shift >= f.width) return {f, 0};
            uint128 mask = (uint128(1) << f.width) - 1;
            uint128 low = (uint128(v.raw) << shift) & mask;
            uint128 sign_bit = uint128(1) << (f.width - 1);
            int128 r = (low & sign_bit) ? int128(low) - (int128(1) << f.width)
                                        : int128(low);
            return {f, r};
        }
        ideal = v.raw << shift;
    } else {
        ideal = shift_round(v.raw, -shift, f.rounding);
    }
    return {f, apply_overflow(ideal, f)};
}

namespace {

FxValue add_like(const FxValue& a, const FxValue& b, bool subtract) {
    const int fa = a.format.frac_bits();
    const int fb = b.format.frac_bits();
    const int fr = fa > fb ? fa : fb;
    const int ir = (a.format.int_bits > b.format.int_bits ? a.format.int_bits
                                                          : b.format.int_bits) + 1;
    check_grown_width(ir + fr);
    int128 ra = a.raw << (fr - fa);
    int128 rb = b.raw << (fr - fb);
    FxFormat f{ir + fr, ir, a.format.rounding, a.format.overflow};
    return {f, subtract ? ra - rb : ra + rb};
}

} // namespace

FxValue add_exact(const FxValue& a, const FxValue& b) { return add_like(a, b, false); }

FxValue sub_exact(const FxValue& a, const FxValue& b) { return add_like(a, b, true); }

FxValue mul_exact(const FxValue& a, const FxValue& b) {
    const int wr = a.format.width + b.format.width;
    check_grown_width(wr);
    FxFormat f{wr, a.format.int_bits + b.format.int_bits, a.format.rounding,
               a.format.overflow};
    return {f, a.raw * b.raw};
}

} // namespace qnc::fx
