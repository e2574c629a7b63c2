// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qnc/actlut.hpp"
#include "qnc/fixnum.hpp"
#include "qnc/minifloat.hpp"

namespace qnc::model {

enum class ActKind { relu, sigmoid, tanh, softmax };

const char* act_kind_name(ActKind k);

struct DenseLayer {
    std::string name;
    int n_in = 0;
    int n_out = 0;
    std::vector<double> weights; // row-major, n_out x n_in
    std::vector<double> bias;    // n_out

    double weight(int row, int col) const { return weights[size_t(row) * n_in + col]; }
};

struct ActivationLayer {
    ActKind kind = ActKind::relu;
};

using Layer = std::variant<DenseLayer, ActivationLayer>;

/// A parsed and shape-checked feed-forward network with real-valued weights.
struct NetworkModel {
    std::string name;
    int input_size = 0;
    std::vector<Layer> layers;

    int output_size() const;
};

/// Parses the JSON model document. Throws ParseError with layer names and
/// positions on malformed documents, shape mismatches, unknown kinds, or
/// non-finite weights.
NetworkModel parse_model(const std::string& json_text);

using NumFormat = std::variant<fx::FxFormat, mf::MfFormat>;

/// Parses "fixed<...>" / "float<...>" notation. Throws ConfigError.
NumFormat parse_format(std::string_view text);
std::string format_str(const NumFormat& f);

/// Quantization configuration. Per-layer keys refer to dense layer names;
/// table settings drive sigmoid/tanh tables, and the softmax pair has its
/// own defaults (1024 entries, 18-bit formats) that mirror the empirically
/// fixed table the reference library uses.
struct QuantConfig {
    NumFormat default_type = fx::FxFormat{16, 6};
    std::map<std::string, NumFormat> per_layer_type;
    int default_reuse = 1;
    std::map<std::string, int> reuse_factor;
    int table_size = 1024;
    fx::FxFormat table_entry_format = fx::FxFormat{18, 2};
    int softmax_table_size = 1024;
    fx::FxFormat softmax_exp_format = fx::FxFormat{18, 2};
    fx::FxFormat softmax_recip_format = fx::FxFormat{18, 8};
    double prune_threshold = 0.0;
    lut::SamplePoint sample_point = lut::SamplePoint::left_edge;
};

/// Parses the JSON config document (all keys optional). Throws ParseError on
/// malformed JSON, ConfigError on invalid values.
QuantConfig parse_config(const std::string& json_text);

/// Smallest fixed-point format making an n_in-term dot product plus bias
/// exact: the product format grown by ceil(log2(n_in+1)) bits in both W and
/// I. Throws ConfigError when the result would exceed 64 bits.
fx::FxFormat derive_accum_format(const fx::FxFormat& in_f, const fx::FxFormat& w_f,
                                 int n_in);

/// Dense node of the typed IR. For fixed-point layers the raw vectors hold
/// two's-complement raw weights; for minifloat layers they hold encoding
/// bits. nnz counts entries whose quantized value is nonzero.
struct IrDense {
    std::string name;
    int n_in = 0;
    int n_out = 0;
    NumFormat weight_format;
    std::vector<int64_t> w_raw; // row-major, n_out x n_in
    std::vector<int64_t> b_raw; // n_out
    int nnz = 0;
    std::optional<fx::FxFormat> accum_format; // fixed-point layers only
    int reuse = 1;

    bool is_minifloat() const { return std::holds_alternative<mf::MfFormat>(weight_format); }
};

struct IrActivation {
    std::string name; // generated, e.g. "act1_relu"
    ActKind kind = ActKind::relu;
    std::vector<lut::LutTable> tables; // sigmoid/tanh: 1; softmax: exp, reciprocal
};

using IrNode = std::variant<IrDense, IrActivation>;

/// Fully resolved IR: every tensor edge carries a concrete numeric format.
/// edge_format[0] is the network input edge; edge_format[i+1] is the output
/// of node i.
struct TypedIr {
    std::string name;
    int input_size = 0;
    std::vector<IrNode> nodes;
    std::vector<NumFormat> edge_format;

    const NumFormat& input_format() const { return edge_format.front(); }
    const NumFormat& output_format() const { return edge_format.back(); }
    int output_size() const;
    bool has_minifloat() const;
};

const std::string& node_name(const IrNode& n);

/// Quantizes the model under the config into a typed IR: prunes weights
/// below the threshold, quantizes weights and biases into the layer format,
/// derives accumulator formats, and builds activation tables. Throws
/// ConfigError for unknown layer names or unsupported format combinations.
TypedIr build_ir(const NetworkModel& m, const QuantConfig& c);

} // namespace qnc::model
