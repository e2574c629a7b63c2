// SPDX-License-Identifier: Apache-2.0

#include "qnc/model.hpp"

#include <bit>
#include <cmath>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

#include "qnc/errors.hpp"

namespace qnc::model {

using nlohmann::json;

const char* act_kind_name(ActKind k) {
    switch (k) {
        case ActKind::relu: return "relu";
        case ActKind::sigmoid: return "sigmoid";
        case ActKind::tanh: return "tanh";
        case ActKind::softmax: return "softmax";
    }
    return "?";
}

int NetworkModel::output_size() const {
    int cur = input_size;
    for (const auto& l : layers)
        if (const auto* d = std::get_if<DenseLayer>(&l)) cur = d->n_out;
    return cur;
}

namespace {

json parse_json_or_throw(const std::string& text, const char* what) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded())
        throw ParseError(fmt::format("{}: not well-formed JSON", what));
    return j;
}

int require_int(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key) || !j[key].is_number_integer())
        throw ParseError(fmt::format("{}: missing or non-integer '{}'", where, key));
    return j[key].get<int>();
}

std::string require_string(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key) || !j[key].is_string())
        throw ParseError(fmt::format("{}: missing or non-string '{}'", where, key));
    return j[key].get<std::string>();
}

double finite_number(const json& j, const std::string& where) {
    if (!j.is_number())
        throw ParseError(fmt::format("{}: expected a number", where));
    double v = j.get<double>();
    if (!std::isfinite(v))
        throw ParseError(fmt::format("{}: non-finite value", where));
    return v;
}

std::optional<ActKind> act_kind_from(const std::string& s) {
    if (s == "relu") return ActKind::relu;
    if (s == "sigmoid") return ActKind::sigmoid;
    if (s == "tanh") return ActKind::tanh;
    if (s == "softmax") return ActKind::softmax;
    return std::nullopt;
}

} // namespace

NetworkModel parse_model(const std::string& json_text) {
    json j = parse_json_or_throw(json_text, "model");
    NetworkModel m;
    m.name = require_string(j, "name", "model");
    m.input_size = require_int(j, "input_size", "model");
    if (m.input_size < 1)
        throw ParseError(fmt::format("model: input_size {} < 1", m.input_size));
    if (!j.contains("layers") || !j["layers"].is_array())
        throw ParseError("model: missing 'layers' array");

    int cur_size = m.input_size;
    std::string prev_name = "input";
    std::set<std::string> dense_names;
    size_t idx = 0;
    for (const auto& jl : j["layers"]) {
        const std::string where = fmt::format("layers[{}]", idx);
        if (!jl.is_object())
            throw ParseError(fmt::format("{}: expected an object", where));
        const std::string type = require_string(jl, "type", where);
        if (type == "dense") {
            DenseLayer d;
            d.name = require_string(jl, "name", where);
            if (!dense_names.insert(d.name).second)
                throw ParseError(fmt::format("{}: duplicate layer name '{}'", where, d.name));
            d.n_in = require_int(jl, "n_in", where);
            d.n_out = require_int(jl, "n_out", where);
            if (d.n_in < 1 || d.n_out < 1)
                throw ParseError(fmt::format("layer '{}': n_in/n_out must be >= 1", d.name));
            if (d.n_in != cur_size)
                throw ParseError(fmt::format(
                    "layer '{}': n_in {} does not match output size {} of '{}'",
                    d.name, d.n_in, cur_size, prev_name));
            if (!jl.contains("weights") || !jl["weights"].is_array() ||
                int(jl["weights"].size()) != d.n_out)
                throw ParseError(fmt::format(
                    "layer '{}': 'weights' must be an array of {} rows", d.name, d.n_out));
            d.weights.reserve(size_t(d.n_out) * d.n_in);
            for (int r = 0; r < d.n_out; ++r) {
                const auto& row = jl["weights"][size_t(r)];
                if (!row.is_array() || int(row.size()) != d.n_in)
                    throw ParseError(fmt::format(
                        "layer '{}': weights row {} must have {} entries", d.name, r, d.n_in));
                for (int c = 0; c < d.n_in; ++c)
                    d.weights.push_back(finite_number(
                        row[size_t(c)],
                        fmt::format("layer '{}': weights[{}][{}]", d.name, r, c)));
            }
            if (!jl.contains("bias") || !jl["bias"].is_array() ||
                int(jl["bias"].size()) != d.n_out)
                throw ParseError(fmt::format(
                    "layer '{}': 'bias' must have {} entries", d.name, d.n_out));
            for (int r = 0; r < d.n_out; ++r)
                d.bias.push_back(finite_number(
                    jl["bias"][size_t(r)], fmt::format("layer '{}': bias[{}]", d.name, r)));
            cur_size = d.n_out;
            prev_name = d.name;
            m.layers.emplace_back(std::move(d));
        } else if (type == "activation") {
            const std::string kind = require_string(jl, "kind", where);
            auto k = act_kind_from(kind);
            if (!k)
                throw ParseError(fmt::format("{}: unknown activation kind '{}'", where, kind));
            m.layers.emplace_back(ActivationLayer{*k});
        } else {
            throw ParseError(fmt::format("{}: unknown layer type '{}'", where, type));
        }
        ++idx;
    }
    return m;
}

NumFormat parse_format(std::string_view text) {
    if (text.starts_with("fixed<")) return fx::FxFormat::parse(text);
    if (text.starts_with("float<")) return mf::MfFormat::parse(text);
    throw ConfigError(fmt::format("unknown format notation '{}'", text));
}

std::string format_str(const NumFormat& f) {
    return std::visit([](const auto& v) { return v.str(); }, f);
}

namespace {

fx::FxFormat fixed_format_field(const json& v, const char* key) {
    if (!v.is_string())
        throw ConfigError(fmt::format("config: '{}' must be a format string", key));
    NumFormat f = parse_format(v.get<std::string>());
    if (!std::holds_alternative<fx::FxFormat>(f))
        throw ConfigError(fmt::format("config: '{}' must be a fixed<...> format", key));
    return std::get<fx::FxFormat>(f);
}

int positive_int_field(const json& v, const char* key) {
    if (!v.is_number_integer() || v.get<int>() < 1)
        throw ConfigError(fmt::format("config: '{}' must be an integer >= 1", key));
    return v.get<int>();
}

} // namespace

QuantConfig parse_config(const std::string& json_text) {
    json j = parse_json_or_throw(json_text, "config");
    if (!j.is_object()) throw ParseError("config: expected a JSON object");
    QuantConfig c;
    for (const auto& [key, val] : j.items()) {
        if (key == "default_type") {
            if (!val.is_string())
                throw ConfigError("config: 'default_type' must be a format string");
            c.default_type = parse_format(val.get<std::string>());
        } else if (key == "per_layer_type") {
            if (!val.is_object())
                throw ConfigError("config: 'per_layer_type' must be an object");
            for (const auto& [name, fv] : val.items()) {
                if (!fv.is_string())
                    throw ConfigError(fmt::format(
                        "config: per_layer_type['{}'] must be a format string", name));
                c.per_layer_type.emplace(name, parse_format(fv.get<std::string>()));
            }
        } else if (key == "reuse_factor") {
            if (val.is_number_integer()) {
                c.default_reuse = positive_int_field(val, "reuse_factor");
            } else if (val.is_object()) {
                for (const auto& [name, rv] : val.items()) {
                    int r = positive_int_field(rv, "reuse_factor");
                    if (name == "default") c.default_reuse = r;
                    else c.reuse_factor.emplace(name, r);
                }
            } else {
                throw ConfigError("config: 'reuse_factor' must be an integer or object");
            }
        } else if (key == "table_size") {
            c.table_size = positive_int_field(val, "table_size");
        } else if (key == "table_entry_format") {
            c.table_entry_format = fixed_format_field(val, "table_entry_format");
        } else if (key == "softmax_table_size") {
            c.softmax_table_size = positive_int_field(val, "softmax_table_size");
        } else if (key == "softmax_exp_format") {
            c.softmax_exp_format = fixed_format_field(val, "softmax_exp_format");
        } else if (key == "softmax_recip_format") {
            c.softmax_recip_format = fixed_format_field(val, "softmax_recip_format");
        } else if (key == "prune_threshold") {
            if (!val.is_number() || val.get<double>() < 0.0)
                throw ConfigError("config: 'prune_threshold' must be a number >= 0");
            c.prune_threshold = val.get<double>();
        } else if (key == "sample_point") {
            const std::string s = val.is_string() ? val.get<std::string>() : "";
            if (s == "left_edge") c.sample_point = lut::SamplePoint::left_edge;
            else if (s == "midpoint") c.sample_point = lut::SamplePoint::midpoint;
            else throw ConfigError("config: 'sample_point' must be left_edge or midpoint");
        } else {
            throw ConfigError(fmt::format("config: unknown key '{}'", key));
        }
    }
    return c;
}

fx::FxFormat derive_accum_format(const fx::FxFormat& in_f, const fx::FxFormat& w_f,
                                 int n_in) {
    const int growth = std::bit_width(unsigned(n_in)); // == ceil(log2(n_in+1))
    const int w = in_f.width + w_f.width + growth;
    if (w > 64)
        throw ConfigError(fmt::format(
            "accumulator needs {} bits (> 64); use narrower operand formats "
            "(input {}, weights {}, fan-in {})",
            w, in_f.str(), w_f.str(), n_in));
    return fx::FxFormat{w, in_f.int_bits + w_f.int_bits + growth, w_f.rounding,
                        w_f.overflow};
}

int TypedIr::output_size() const {
    int cur = input_size;
    for (const auto& n : nodes)
        if (const auto* d = std::get_if<IrDense>(&n)) cur = d->n_out;
    return cur;
}

bool TypedIr::has_minifloat() const {
    for (const auto& f : edge_format)
        if (std::holds_alternative<mf::MfFormat>(f)) return true;
    return false;
}

const std::string& node_name(const IrNode& n) {
    return std::visit([](const auto& v) -> const std::string& { return v.name; }, n);
}

namespace {

lut::LutSpec spec_for(ActKind kind, lut::ActFn fn, const QuantConfig& c) {
    lut::LutSpec s;
    s.function = fn;
    s.sample = c.sample_point;
    switch (kind) {
        case ActKind::sigmoid:
            s.n_entries = c.table_size;
            s.input_lo = -8.0;
            s.input_hi = 8.0;
            s.entry_format = c.table_entry_format;
            break;
        case ActKind::tanh:
            s.n_entries = c.table_size;
            s.input_lo = -4.0;
            s.input_hi = 4.0;
            s.entry_format = c.table_entry_format;
            break;
        case ActKind::softmax:
            if (fn == lut::ActFn::exp) {
                // Inputs are max-subtracted, so the reachable domain is <= 0.
                s.n_entries = c.softmax_table_size;
                s.input_lo = -16.0;
                s.input_hi = 0.0;
                s.entry_format = c.softmax_exp_format;
            } else {
                // Reciprocal of the exp sum; span must be a power of two.
                s.n_entries = c.softmax_table_size;
                s.input_lo = 1.0;
                s.input_hi = 65.0;
                s.entry_format = c.softmax_recip_format;
            }
            break;
        default:
            break;
    }
    return s;
}

} // namespace

TypedIr build_ir(const NetworkModel& m, const QuantConfig& c) {
    std::set<std::string> dense_names;
    for (const auto& l : m.layers)
        if (const auto* d = std::get_if<DenseLayer>(&l)) dense_names.insert(d->name);
    for (const auto& [name, f] : c.per_layer_type)
        if (!dense_names.count(name))
            throw ConfigError(fmt::format(
                "config: per_layer_type names unknown layer '{}'", name));
    for (const auto& [name, r] : c.reuse_factor)
        if (!dense_names.count(name))
            throw ConfigError(fmt::format(
                "config: reuse_factor names unknown layer '{}'", name));

    TypedIr ir;
    ir.name = m.name;
    ir.input_size = m.input_size;
    ir.edge_format.push_back(c.default_type);

    size_t idx = 0;
    for (const auto& l : m.layers) {
        const NumFormat& in_f = ir.edge_format.back();
        if (const auto* d = std::get_if<DenseLayer>(&l)) {
            auto it = c.per_layer_type.find(d->name);
            NumFormat wf = it != c.per_layer_type.end() ? it->second : c.default_type;
            if (wf.index() != in_f.index())
                throw ConfigError(fmt::format(
                    "layer '{}': weight format {} is incompatible with its {} "
                    "input edge; fixed-point and minifloat cannot mix on a layer",
                    d->name, format_str(wf), format_str(in_f)));

            IrDense node;
            node.name = d->name;
            node.n_in = d->n_in;
            node.n_out = d->n_out;
            node.weight_format = wf;
            auto rit = c.reuse_factor.find(d->name);
            node.reuse = rit != c.reuse_factor.end() ? rit->second : c.default_reuse;

            auto pruned = [&](double w) {
                return std::fabs(w) < c.prune_threshold ? 0.0 : w;
            };
            if (const auto* fxf = std::get_if<fx::FxFormat>(&wf)) {
                node.accum_format =
                    derive_accum_format(std::get<fx::FxFormat>(in_f), *fxf, d->n_in);
                for (double w : d->weights) {
                    auto raw = int64_t(fx::quantize(pruned(w), *fxf).raw);
                    node.nnz += raw != 0;
                    node.w_raw.push_back(raw);
                }
                for (double b : d->bias)
                    node.b_raw.push_back(int64_t(fx::quantize(b, *fxf).raw));
            } else {
                const auto& mff = std::get<mf::MfFormat>(wf);
                for (double w : d->weights) {
                    auto v = mf::mf_encode(pruned(w), mff);
                    node.nnz += !v.is_zero();
                    node.w_raw.push_back(v.bits);
                }
                for (double b : d->bias)
                    node.b_raw.push_back(mf::mf_encode(b, mff).bits);
            }
            ir.nodes.emplace_back(std::move(node));
            ir.edge_format.push_back(wf);
        } else {
            const auto& a = std::get<ActivationLayer>(l);
            IrActivation node;
            node.kind = a.kind;
            node.name = fmt::format("act{}_{}", idx, act_kind_name(a.kind));
            if (a.kind == ActKind::relu) {
                ir.edge_format.push_back(in_f);
            } else {
                if (!std::holds_alternative<fx::FxFormat>(in_f))
                    throw ConfigError(fmt::format(
                        "{}: table-backed activations require a fixed-point input "
                        "edge, got {}; use relu or a fixed-point layer format",
                        node.name, format_str(in_f)));
                if (a.kind == ActKind::softmax) {
                    node.tables.push_back(
                        lut::build_table(spec_for(a.kind, lut::ActFn::exp, c)));
                    node.tables.push_back(
                        lut::build_table(spec_for(a.kind, lut::ActFn::reciprocal, c)));
                } else {
                    auto fn = a.kind == ActKind::sigmoid ? lut::ActFn::sigmoid
                                                         : lut::ActFn::tanh;
                    node.tables.push_back(lut::build_table(spec_for(a.kind, fn, c)));
                }
                ir.edge_format.push_back(node.tables.front().spec.entry_format);
            }
            ir.nodes.emplace_back(std::move(node));
        }
        ++idx;
    }
    return ir;
}

} // namespace qnc::model
