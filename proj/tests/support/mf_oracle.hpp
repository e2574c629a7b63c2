// SPDX-License-Identifier: Apache-2.0
//
// Enumeration oracle for minifloat encodings: decodes every bit pattern of a
// format from the layout formulas alone and finds nearest values by exact
// rational comparison. Independent of the qnc::mf arithmetic paths.
#pragma once

#include <cstdint>
#include <vector>

#include "qnc/minifloat.hpp"
#include "support/rational_oracle.hpp"

namespace qnc::test {

struct MfCandidate {
    uint32_t bits = 0;
    Rational value;
};

/// Layout-formula decode of one pattern; must not be called on NaN/Inf.
Rational mf_decode_rational(const mf::MfFormat& f, uint32_t bits);

/// All finite bit patterns of a format, sorted ascending by exact value
/// (the two zeros both appear, -0 first).
std::vector<MfCandidate> enumerate_finite(const mf::MfFormat& f);

/// Nearest representable to x with ties to even mantissa field; values at or
/// beyond max_finite + ulp/2 overflow to the Inf pattern. `sorted` comes from
/// enumerate_finite. Exact zero returns +0.
uint32_t oracle_encode(const Rational& x, const mf::MfFormat& f,
                       const std::vector<MfCandidate>& sorted);

} // namespace qnc::test
