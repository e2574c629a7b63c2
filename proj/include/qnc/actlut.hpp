// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qnc/fixnum.hpp"

namespace qnc::lut {

enum class ActFn { sigmoid, tanh, exp, reciprocal };

enum class SamplePoint { left_edge, midpoint };

const char* act_fn_name(ActFn fn);

/// Recipe for one constant activation table. N and the input span must both
/// be powers of two so index extraction lowers to a shift; the range bounds
/// must be dyadic rationals with at most 20 fractional bits so all index
/// arithmetic stays exact in integers.
struct LutSpec {
    ActFn function = ActFn::sigmoid;
    int n_entries = 1024;
    double input_lo = -8.0;
    double input_hi = 8.0;
    fx::FxFormat entry_format = fx::FxFormat{18, 2};
    SamplePoint sample = SamplePoint::left_edge;

    bool operator==(const LutSpec&) const = default;

    /// Throws ConfigError when any invariant fails.
    void validate() const;
};

/// A materialized table: entries[k] is the raw quantized value of
/// f(sample_point(k)) in entry_format. Regenerable, never hand-edited.
struct LutTable {
    LutSpec spec;
    std::vector<int64_t> entries;
};

/// The one real-valued evaluation routine shared by the table generator and
/// the reference simulator (64-bit binary floating point).
double activation_real(ActFn fn, double x);

/// Builds the table for a validated spec. Deterministic: two invocations
/// yield bit-identical entries.
LutTable build_table(const LutSpec& spec);

/// Bin index for an input value, exact in integer arithmetic and clamped to
/// [0, N-1]. Exposed so the code emitter can mirror it literally.
int lut_index(const fx::FxValue& x, const LutSpec& spec);

/// Table read: entries[lut_index(x)] in the entry format.
fx::FxValue lut_lookup(const fx::FxValue& x, const LutTable& t);

/// max(x, 0) in the same format; the one activation computed exactly.
fx::FxValue eval_relu(const fx::FxValue& x);

/// Numerically stable two-table softmax: subtract the exact maximum, look up
/// exp, sum exactly, look up the reciprocal of the sum, multiply exactly and
/// cast each product to the output format (defaults to exp_t's entry format).
std::vector<fx::FxValue> eval_softmax(std::span<const fx::FxValue> xs,
                                      const LutTable& exp_t, const LutTable& inv_t,
                                      std::optional<fx::FxFormat> out_format = {});

/// Dump format: header "function,N,lo,hi,format", then N decimal raw entries,
/// one per line. Byte-exact across runs.
std::string table_text(const LutTable& t);

} // namespace qnc::lut
