// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace qnc::fx {

using int128 = __int128;
using uint128 = unsigned __int128;

enum class Rounding {
    truncate, // toward negative infinity ("trn")
    nearest,  // ties away from zero ("rnd")
};

enum class Overflow {
    wrap,     // keep low W bits, two's complement
    saturate, // clamp to format min/max
};

/// Signed fixed-point format <W,I>: W total bits (sign included), I integer
/// bits, F = W - I fractional bits. A stored raw integer r represents the
/// real value r * 2^-F.
///
/// User-declared formats are restricted to 1 <= W <= 64 and 0 <= I <= W;
/// the exact operations below produce transient wider formats (W <= 128)
/// whose raw values live in a 128-bit intermediate.
struct FxFormat {
    int width = 16;
    int int_bits = 6;
    Rounding rounding = Rounding::nearest;
    Overflow overflow = Overflow::saturate;

    int frac_bits() const noexcept { return width - int_bits; }
    int128 raw_min() const noexcept { return -(int128(1) << (width - 1)); }
    int128 raw_max() const noexcept { return (int128(1) << (width - 1)) - 1; }

    bool operator==(const FxFormat&) const = default;

    /// Validating constructor for user-facing formats. Throws ConfigError
    /// outside the supported envelope (W in [1,64], I in [0,W]).
    static FxFormat make(int width, int int_bits,
                         Rounding r = Rounding::nearest,
                         Overflow o = Overflow::saturate);

    /// Canonical notation, e.g. "fixed<16,6,rnd,sat>".
    std::string str() const;

    /// Parses "fixed<W,I[,rnd|trn[,sat|wrap]]>". Omitted modes default to
    /// rnd,sat. Throws ConfigError on malformed input.
    static FxFormat parse(std::string_view text);
};

/// A value in a fixed-point format. raw always fits in `format.width` bits
/// two's complement; the represented real is raw * 2^-F.
struct FxValue {
    FxFormat format;
    int128 raw = 0;

    long double real() const noexcept;
};

/// Rounds a finite real onto the format grid per format.rounding, then
/// applies format.overflow. Exact: the double operand is decomposed into
/// integer mantissa and exponent, so no intermediate rounding occurs.
FxValue quantize(double x, const FxFormat& f);

/// raw * 2^-F, exact for W <= 64 (long double carries a 64-bit significand).
long double to_real(const FxValue& v);

/// Re-rounds v into format f without an inexact intermediate (pure shifts
/// and integer rounding on raw).
FxValue cast(const FxValue& v, const FxFormat& f);

/// Exact sum in the smallest format holding every possible result:
/// I_r = max(I_a,I_b)+1, F_r = max(F_a,F_b). Never rounds or overflows.
FxValue add_exact(const FxValue& a, const FxValue& b);

/// Exact difference, same result-format rule as add_exact.
FxValue sub_exact(const FxValue& a, const FxValue& b);

/// Exact product: W_r = W_a+W_b, I_r = I_a+I_b, raw_r = raw_a*raw_b.
FxValue mul_exact(const FxValue& a, const FxValue& b);

} // namespace qnc::fx
