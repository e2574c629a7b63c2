// SPDX-License-Identifier: Apache-2.0

#include "qnc/estimate.hpp"

#include <bit>

#include <fmt/format.h>

namespace qnc::est {

namespace {

constexpr long long kBram18Bits = 18 * 1024;

long long ceil_div(long long a, long long b) { return (a + b - 1) / b; }

int format_width(const model::NumFormat& f) {
    if (const auto* fxf = std::get_if<fx::FxFormat>(&f)) return fxf->width;
    return std::get<mf::MfFormat>(f).total_bits();
}

} // namespace

ResourceReport estimate(const model::TypedIr& ir) {
    ResourceReport r;
    for (const auto& n : ir.nodes) {
        LayerResources lr;
        if (const auto* d = std::get_if<model::IrDense>(&n)) {
            lr.name = d->name;
            lr.kind = "dense";
            if (d->nnz > 0) {
                lr.multipliers = ceil_div(d->nnz, d->reuse);
                lr.weight_storage_bits =
                    (long long)d->nnz * format_width(d->weight_format);
            }
            // Reuse rounds plus adder-tree depth for n_in products and bias.
            lr.latency_cycles = d->reuse + std::bit_width(unsigned(d->n_in));
            lr.bram18_count = ceil_div(lr.weight_storage_bits, kBram18Bits);
        } else {
            const auto& a = std::get<model::IrActivation>(n);
            lr.name = a.name;
            lr.kind = model::act_kind_name(a.kind);
            for (const auto& t : a.tables) {
                long long bits = (long long)t.spec.n_entries * t.spec.entry_format.width;
                lr.table_storage_bits += bits;
                lr.bram18_count += ceil_div(bits, kBram18Bits);
            }
            switch (a.kind) {
                case model::ActKind::relu: lr.latency_cycles = 0; break;
                case model::ActKind::softmax: lr.latency_cycles = 3; break;
                default: lr.latency_cycles = 1; break;
            }
        }
        r.totals.multipliers += lr.multipliers;
        r.totals.latency_cycles += lr.latency_cycles;
        r.totals.weight_storage_bits += lr.weight_storage_bits;
        r.totals.table_storage_bits += lr.table_storage_bits;
        r.totals.bram18_count += lr.bram18_count;
        r.per_layer.push_back(std::move(lr));
    }
    r.totals.name = "total";
    r.totals.kind = "";
    return r;
}

namespace {

nlohmann::ordered_json layer_json(const LayerResources& lr, bool with_kind) {
    nlohmann::ordered_json j;
    j["name"] = lr.name;
    if (with_kind) j["kind"] = lr.kind;
    j["multipliers"] = lr.multipliers;
    j["latency_cycles"] = lr.latency_cycles;
    j["weight_storage_bits"] = lr.weight_storage_bits;
    j["table_storage_bits"] = lr.table_storage_bits;
    j["bram18_count"] = lr.bram18_count;
    return j;
}

} // namespace

nlohmann::ordered_json report_json(const ResourceReport& r) {
    nlohmann::ordered_json j;
    j["model"] = "analytic estimate";
    j["per_layer"] = nlohmann::ordered_json::array();
    for (const auto& lr : r.per_layer) j["per_layer"].push_back(layer_json(lr, true));
    j["totals"] = layer_json(r.totals, false);
    return j;
}

std::string text_table(const ResourceReport& r) {
    std::string out = fmt::format("{:<16}{:<10}{:>12}{:>10}{:>14}{:>13}{:>8}\n", "layer",
                                  "kind", "multipliers", "latency", "weight_bits",
                                  "table_bits", "bram18");
    auto row = [&](const LayerResources& lr) {
        out += fmt::format("{:<16}{:<10}{:>12}{:>10}{:>14}{:>13}{:>8}\n", lr.name,
                           lr.kind, lr.multipliers, lr.latency_cycles,
                           lr.weight_storage_bits, lr.table_storage_bits,
                           lr.bram18_count);
    };
    for (const auto& lr : r.per_layer) row(lr);
    row(r.totals);
    out += "latency model: analytic estimate (reuse rounds + adder-tree depth)\n";
    return out;
}

} // namespace qnc::est
