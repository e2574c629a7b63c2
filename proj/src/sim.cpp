// SPDX-License-Identifier: Apache-2.0

#include "qnc/sim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include <fmt/format.h>

#include "qnc/errors.hpp"

namespace qnc::sim {

using model::IrActivation;
using model::IrDense;
using model::TypedIr;

namespace {

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> cells;
    size_t pos = 0;
    while (true) {
        size_t comma = line.find(',', pos);
        if (comma == std::string_view::npos) {
            cells.emplace_back(line.substr(pos));
            break;
        }
        cells.emplace_back(line.substr(pos, comma - pos));
        pos = comma + 1;
    }
    for (auto& c : cells) {
        while (!c.empty() && (c.back() == '\r' || c.back() == ' ')) c.pop_back();
        while (!c.empty() && c.front() == ' ') c.erase(c.begin());
    }
    return cells;
}

double parse_cell_double(const std::string& cell, int row, size_t col) {
    double v = 0;
    auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc{} || p != cell.data() + cell.size() || !std::isfinite(v))
        throw ParseError(fmt::format(
            "dataset row {}: column {} is not a finite number ('{}')", row, col, cell));
    return v;
}

size_t argmax(std::span<const double> v) {
    size_t best = 0;
    for (size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

} // namespace

Dataset parse_dataset_csv(const std::string& text) {
    std::vector<std::string_view> lines;
    size_t pos = 0;
    while (pos < text.size()) {
        size_t nl = text.find('\n', pos);
        if (nl == std::string::npos) nl = text.size();
        lines.emplace_back(text.data() + pos, nl - pos);
        pos = nl + 1;
    }
    while (!lines.empty() && lines.back().find_first_not_of(" \r") == std::string_view::npos)
        lines.pop_back();
    if (lines.empty()) throw ParseError("dataset: empty file");

    Dataset d;
    auto header = split_csv_line(lines[0]);
    d.has_labels = !header.empty() && header.back() == "label";
    d.arity = int(header.size()) - (d.has_labels ? 1 : 0);
    if (d.arity < 1) throw ParseError("dataset: header declares no input columns");
    for (int i = 0; i < d.arity; ++i)
        if (header[size_t(i)] != fmt::format("x{}", i))
            throw ParseError(fmt::format(
                "dataset: header column {} must be 'x{}', got '{}'", i, i,
                header[size_t(i)]));

    for (size_t li = 1; li < lines.size(); ++li) {
        const int row = int(li); // 1-based data row number
        auto cells = split_csv_line(lines[li]);
        if (int(cells.size()) != d.arity + (d.has_labels ? 1 : 0))
            throw ParseError(fmt::format("dataset row {}: expected {} values, got {}",
                                         row, d.arity + (d.has_labels ? 1 : 0),
                                         cells.size()));
        std::vector<double> x(size_t(d.arity));
        for (int i = 0; i < d.arity; ++i)
            x[size_t(i)] = parse_cell_double(cells[size_t(i)], row, size_t(i));
        if (d.has_labels) {
            const auto& cell = cells.back();
            int label = 0;
            auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), label);
            if (ec != std::errc{} || p != cell.data() + cell.size())
                throw ParseError(fmt::format(
                    "dataset row {}: label is not an integer ('{}')", row, cell));
            d.labels.push_back(label);
        }
        d.inputs.push_back(std::move(x));
    }
    return d;
}

std::vector<int64_t> quantize_input(const TypedIr& ir, std::span<const double> x) {
    std::vector<int64_t> raw(x.size());
    if (const auto* fxf = std::get_if<fx::FxFormat>(&ir.input_format())) {
        for (size_t i = 0; i < x.size(); ++i)
            raw[i] = int64_t(fx::quantize(x[i], *fxf).raw);
    } else {
        const auto& mff = std::get<mf::MfFormat>(ir.input_format());
        for (size_t i = 0; i < x.size(); ++i)
            raw[i] = mf::mf_encode(x[i], mff).bits;
    }
    return raw;
}

namespace {

std::vector<int64_t> run_dense_fx(const IrDense& node, const fx::FxFormat& in_f,
                                  const fx::FxFormat& out_f,
                                  std::span<const int64_t> x) {
    const fx::FxFormat acc_f = *node.accum_format;
    const int bias_align = in_f.frac_bits(); // F_acc - F_w == F_in
    std::vector<int64_t> y(size_t(node.n_out));
    for (int j = 0; j < node.n_out; ++j) {
        fx::int128 acc = fx::int128(node.b_raw[size_t(j)]) << bias_align;
        const int64_t* w = &node.w_raw[size_t(j) * node.n_in];
        for (int i = 0; i < node.n_in; ++i)
            acc += fx::int128(w[i]) * fx::int128(x[size_t(i)]);
        y[size_t(j)] = int64_t(fx::cast(fx::FxValue{acc_f, acc}, out_f).raw);
    }
    return y;
}

std::vector<int64_t> run_dense_mf(const IrDense& node, const mf::MfFormat& f,
                                  std::span<const int64_t> x) {
    std::vector<int64_t> y(size_t(node.n_out));
    for (int j = 0; j < node.n_out; ++j) {
        // Exact-then-round per add, accumulated in input index order,
        // starting from the bias.
        auto acc = mf::MfValue::from_bits(f, uint32_t(node.b_raw[size_t(j)]));
        const int64_t* w = &node.w_raw[size_t(j) * node.n_in];
        for (int i = 0; i < node.n_in; ++i) {
            auto prod = mf::mf_mul(mf::MfValue::from_bits(f, uint32_t(w[i])),
                                   mf::MfValue::from_bits(f, uint32_t(x[size_t(i)])));
            acc = mf::mf_add(acc, prod);
        }
        y[size_t(j)] = acc.bits;
    }
    return y;
}

std::vector<int64_t> run_activation(const IrActivation& node,
                                    const model::NumFormat& in_f,
                                    std::span<const int64_t> x) {
    if (node.kind == model::ActKind::relu) {
        std::vector<int64_t> y(x.begin(), x.end());
        if (std::holds_alternative<fx::FxFormat>(in_f)) {
            for (auto& v : y)
                if (v < 0) v = 0;
        } else {
            const auto& f = std::get<mf::MfFormat>(in_f);
            for (auto& v : y) {
                auto m = mf::MfValue::from_bits(f, uint32_t(v));
                if (!m.is_nan() && m.sign()) v = mf::MfValue::zero(f).bits;
            }
        }
        return y;
    }
    const auto& f = std::get<fx::FxFormat>(in_f);
    std::vector<int64_t> y(x.size());
    if (node.kind == model::ActKind::softmax) {
        std::vector<fx::FxValue> xs;
        xs.reserve(x.size());
        for (int64_t v : x) xs.push_back({f, v});
        auto ys = lut::eval_softmax(xs, node.tables[0], node.tables[1]);
        for (size_t i = 0; i < ys.size(); ++i) y[i] = int64_t(ys[i].raw);
    } else {
        for (size_t i = 0; i < x.size(); ++i)
            y[i] = int64_t(lut::lut_lookup(fx::FxValue{f, x[size_t(i)]}, node.tables[0]).raw);
    }
    return y;
}

double decode_edge_value(const model::NumFormat& f, int64_t raw) {
    if (const auto* fxf = std::get_if<fx::FxFormat>(&f))
        return double(fx::to_real(fx::FxValue{*fxf, raw}));
    return double(mf::mf_decode(mf::MfValue::from_bits(std::get<mf::MfFormat>(f),
                                                       uint32_t(raw))));
}

} // namespace

std::vector<std::vector<int64_t>> run_quantized_raw(const TypedIr& ir,
                                                    std::span<const int64_t> raw_in) {
    if (int(raw_in.size()) != ir.input_size)
        throw ParseError(fmt::format("input length {} does not match model input {}",
                                     raw_in.size(), ir.input_size));
    std::vector<std::vector<int64_t>> edges;
    edges.reserve(ir.nodes.size() + 1);
    edges.emplace_back(raw_in.begin(), raw_in.end());
    for (size_t i = 0; i < ir.nodes.size(); ++i) {
        const auto& in_f = ir.edge_format[i];
        const auto& cur = edges.back();
        if (const auto* d = std::get_if<IrDense>(&ir.nodes[i])) {
            if (d->is_minifloat())
                edges.push_back(run_dense_mf(*d, std::get<mf::MfFormat>(d->weight_format), cur));
            else
                edges.push_back(run_dense_fx(*d, std::get<fx::FxFormat>(in_f),
                                             std::get<fx::FxFormat>(ir.edge_format[i + 1]),
                                             cur));
        } else {
            edges.push_back(run_activation(std::get<IrActivation>(ir.nodes[i]), in_f, cur));
        }
    }
    return edges;
}

std::vector<double> run_quantized(const TypedIr& ir, std::span<const double> x,
                                  std::vector<std::vector<double>>* decoded_trace) {
    auto edges = run_quantized_raw(ir, quantize_input(ir, x));
    if (decoded_trace) {
        decoded_trace->clear();
        for (size_t e = 0; e < edges.size(); ++e) {
            std::vector<double> dec(edges[e].size());
            for (size_t i = 0; i < edges[e].size(); ++i)
                dec[i] = decode_edge_value(ir.edge_format[e], edges[e][i]);
            decoded_trace->push_back(std::move(dec));
        }
    }
    std::vector<double> out(edges.back().size());
    for (size_t i = 0; i < out.size(); ++i)
        out[i] = decode_edge_value(ir.edge_format.back(), edges.back()[i]);
    return out;
}

std::vector<double> run_reference(const model::NetworkModel& m,
                                  std::span<const double> x,
                                  std::vector<std::vector<double>>* trace) {
    if (int(x.size()) != m.input_size)
        throw ParseError(fmt::format("input length {} does not match model input {}",
                                     x.size(), m.input_size));
    std::vector<double> cur(x.begin(), x.end());
    if (trace) {
        trace->clear();
        trace->push_back(cur);
    }
    for (const auto& l : m.layers) {
        if (const auto* d = std::get_if<model::DenseLayer>(&l)) {
            std::vector<double> y(size_t(d->n_out));
            for (int j = 0; j < d->n_out; ++j) {
                double acc = d->bias[size_t(j)];
                for (int i = 0; i < d->n_in; ++i)
                    acc += d->weight(j, i) * cur[size_t(i)];
                y[size_t(j)] = acc;
            }
            cur = std::move(y);
        } else {
            const auto kind = std::get<model::ActivationLayer>(l).kind;
            if (kind == model::ActKind::relu) {
                for (auto& v : cur) v = std::max(v, 0.0);
            } else if (kind == model::ActKind::softmax) {
                double mx = *std::max_element(cur.begin(), cur.end());
                double sum = 0.0;
                for (auto& v : cur) {
                    v = std::exp(v - mx);
                    sum += v;
                }
                for (auto& v : cur) v /= sum;
            } else {
                auto fn = kind == model::ActKind::sigmoid ? lut::ActFn::sigmoid
                                                          : lut::ActFn::tanh;
                for (auto& v : cur) v = lut::activation_real(fn, v);
            }
        }
        if (trace) trace->push_back(cur);
    }
    return cur;
}

namespace {

double edge_step_bound(const model::NumFormat& f) {
    if (const auto* fxf = std::get_if<fx::FxFormat>(&f)) {
        double step = std::ldexp(1.0, -fxf->frac_bits());
        return fxf->rounding == fx::Rounding::nearest ? step / 2 : step;
    }
    return std::ldexp(1.0, -std::get<mf::MfFormat>(f).man_bits - 1);
}

double table_bound(const lut::LutTable& t) {
    double lipschitz = 1.0;
    switch (t.spec.function) {
        case lut::ActFn::sigmoid: lipschitz = 0.25; break;
        case lut::ActFn::tanh: lipschitz = 1.0; break;
        case lut::ActFn::exp: lipschitz = std::exp(std::min(t.spec.input_hi, 0.0)); break;
        case lut::ActFn::reciprocal:
            lipschitz = 1.0 / (t.spec.input_lo * t.spec.input_lo);
            break;
    }
    double bin = (t.spec.input_hi - t.spec.input_lo) / t.spec.n_entries;
    return lipschitz * bin + edge_step_bound(t.spec.entry_format);
}

} // namespace

double rounding_bound(const TypedIr& ir) {
    double bound = edge_step_bound(ir.input_format());
    for (size_t i = 0; i < ir.nodes.size(); ++i) {
        if (std::holds_alternative<IrDense>(ir.nodes[i])) {
            bound += edge_step_bound(ir.edge_format[i + 1]);
        } else {
            const auto& a = std::get<IrActivation>(ir.nodes[i]);
            for (const auto& t : a.tables) bound += table_bound(t);
        }
    }
    return bound;
}

AccuracyReport evaluate(const TypedIr& ir, const model::NetworkModel& m,
                        const Dataset& d) {
    if (d.arity != m.input_size)
        throw ParseError(fmt::format(
            "dataset arity {} does not match model input size {}", d.arity,
            m.input_size));

    AccuracyReport r;
    r.n_samples = int(d.inputs.size());
    const auto n_out = size_t(ir.output_size());
    r.per_output_max_abs_error.assign(n_out, 0.0);
    r.per_output_mean_sq_error.assign(n_out, 0.0);
    r.per_layer_max_abs_error.emplace_back("input", 0.0);
    for (const auto& n : ir.nodes)
        r.per_layer_max_abs_error.emplace_back(model::node_name(n), 0.0);
    r.analytic_error_bound = rounding_bound(ir);

    int agree = 0, q_correct = 0, ref_correct = 0;
    std::vector<std::vector<double>> q_trace, ref_trace;
    for (size_t s = 0; s < d.inputs.size(); ++s) {
        const auto& x = d.inputs[s];
        if (int(x.size()) != m.input_size)
            throw ParseError(fmt::format(
                "dataset sample {}: arity {} does not match model input size {}",
                s + 1, x.size(), m.input_size));
        auto qy = run_quantized(ir, x, &q_trace);
        auto ry = run_reference(m, x, &ref_trace);

        for (size_t e = 0; e < q_trace.size(); ++e) {
            double worst = r.per_layer_max_abs_error[e].second;
            for (size_t i = 0; i < q_trace[e].size(); ++i)
                worst = std::max(worst, std::fabs(q_trace[e][i] - ref_trace[e][i]));
            r.per_layer_max_abs_error[e].second = worst;
        }
        for (size_t i = 0; i < n_out; ++i) {
            double err = std::fabs(qy[i] - ry[i]);
            r.per_output_max_abs_error[i] = std::max(r.per_output_max_abs_error[i], err);
            r.per_output_mean_sq_error[i] += err * err;
        }
        size_t qa = argmax(qy), ra = argmax(ry);
        agree += qa == ra;
        if (d.has_labels) {
            q_correct += int(qa) == d.labels[s];
            ref_correct += int(ra) == d.labels[s];
        }
    }
    if (r.n_samples > 0) {
        for (auto& v : r.per_output_mean_sq_error) v /= r.n_samples;
        r.top1_agreement = double(agree) / r.n_samples;
        if (d.has_labels) {
            r.top1_accuracy_quantized = double(q_correct) / r.n_samples;
            r.top1_accuracy_reference = double(ref_correct) / r.n_samples;
        }
    }
    return r;
}

nlohmann::ordered_json report_json(const AccuracyReport& r) {
    nlohmann::ordered_json j;
    j["n_samples"] = r.n_samples;
    j["top1_agreement"] = r.top1_agreement;
    if (r.top1_accuracy_quantized) j["top1_accuracy_quantized"] = *r.top1_accuracy_quantized;
    if (r.top1_accuracy_reference) j["top1_accuracy_reference"] = *r.top1_accuracy_reference;
    j["per_output_max_abs_error"] = r.per_output_max_abs_error;
    j["per_output_mean_sq_error"] = r.per_output_mean_sq_error;
    nlohmann::ordered_json layers;
    for (const auto& [name, err] : r.per_layer_max_abs_error) layers[name] = err;
    j["per_layer_max_abs_error"] = layers;
    j["analytic_error_bound"] = r.analytic_error_bound;
    j["bound_model"] = "sum of per-stage rounding steps (analytic estimate)";
    return j;
}

} // namespace qnc::sim
