// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "qnc/model.hpp"

namespace qnc::est {

struct LayerResources {
    std::string name;
    std::string kind;
    long long multipliers = 0;
    long long latency_cycles = 0;
    long long weight_storage_bits = 0;
    long long table_storage_bits = 0;
    long long bram18_count = 0;
};

/// Analytic per-layer resource and latency estimate. The latency formula is
/// a coarse model (reuse rounds plus adder-tree depth) and is labeled as
/// such in the emitted report.
struct ResourceReport {
    std::vector<LayerResources> per_layer;
    LayerResources totals;
};

ResourceReport estimate(const model::TypedIr& ir);

nlohmann::ordered_json report_json(const ResourceReport& r);

/// Fixed-width text rendering of the same report.
std::string text_table(const ResourceReport& r);

} // namespace qnc::est
