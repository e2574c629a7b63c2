// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace qnc::mf {

/// Small IEEE-like floating-point format: 1 sign bit, E exponent bits,
/// M mantissa bits, exponent bias (default 2^(E-1)-1). Total width
/// 1+E+M <= 16. Value set: signed zeros, subnormals, normals, +-Inf, NaN.
struct MfFormat {
    int exp_bits = 4;
    int man_bits = 3;
    int bias = 7;

    int total_bits() const noexcept { return 1 + exp_bits + man_bits; }
    int emin() const noexcept { return 1 - bias; }
    int emax() const noexcept { return (1 << exp_bits) - 2 - bias; }
    int default_bias() const noexcept { return (1 << (exp_bits - 1)) - 1; }

    bool operator==(const MfFormat&) const = default;

    static MfFormat make(int exp_bits, int man_bits);
    static MfFormat make(int exp_bits, int man_bits, int bias);

    /// "float<E,M>" with default bias, else "float<E,M,bias>".
    std::string str() const;
    static MfFormat parse(std::string_view text);
};

/// An encoded value: packed bits are sign | exp_field | man_field, with the
/// mantissa in the low M bits (IEEE layout).
struct MfValue {
    MfFormat format;
    uint32_t bits = 0;

    uint32_t sign() const noexcept { return (bits >> (format.exp_bits + format.man_bits)) & 1u; }
    uint32_t exp_field() const noexcept {
        return (bits >> format.man_bits) & ((1u << format.exp_bits) - 1);
    }
    uint32_t man_field() const noexcept { return bits & ((1u << format.man_bits) - 1); }

    bool is_nan() const noexcept;
    bool is_inf() const noexcept;
    bool is_zero() const noexcept;
    bool is_finite() const noexcept { return !is_nan() && !is_inf(); }

    bool operator==(const MfValue&) const = default;

    static MfValue from_fields(const MfFormat& f, uint32_t sign, uint32_t exp_field,
                               uint32_t man_field);
    static MfValue from_bits(const MfFormat& f, uint32_t bits);

    static MfValue zero(const MfFormat& f, bool negative = false);
    static MfValue inf(const MfFormat& f, bool negative = false);
    static MfValue nan(const MfFormat& f);
    static MfValue max_finite(const MfFormat& f, bool negative = false);
};

/// Nearest representable value, ties to even mantissa; values beyond the
/// largest finite round to +-Inf. NaN and +-Inf inputs map to their
/// encodings. Exact: the operand is decomposed to integer mantissa and
/// exponent before rounding.
MfValue mf_encode(long double x, const MfFormat& f);

/// Exact decoded value as a long double (lossless for every supported
/// format); NaN encodings decode to a quiet host NaN.
long double mf_decode(const MfValue& v);

/// Exact-then-round arithmetic: the mathematically exact result of the
/// operation, re-encoded with round-to-nearest-even. Operands must share a
/// format; Inf and NaN propagate IEEE-style.
MfValue mf_add(const MfValue& a, const MfValue& b);
MfValue mf_mul(const MfValue& a, const MfValue& b);

} // namespace qnc::mf
