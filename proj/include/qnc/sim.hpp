// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qnc/model.hpp"

namespace qnc::sim {

/// Input samples with optional integer class labels.
struct Dataset {
    int arity = 0;
    bool has_labels = false;
    std::vector<std::vector<double>> inputs;
    std::vector<int> labels;
};

/// Parses CSV with header "x0,...,xn[,label]", one sample per row. Throws
/// ParseError with the offending row number.
Dataset parse_dataset_csv(const std::string& text);

/// Quantizes a real input vector onto the IR's input edge format. For
/// fixed-point edges the result holds two's-complement raws, for minifloat
/// edges encoding bits.
std::vector<int64_t> quantize_input(const model::TypedIr& ir,
                                    std::span<const double> x);

/// Bit-accurate evaluation on raw inputs. Returns the raw values of every
/// tensor edge; [0] echoes the input edge, back() is the network output.
std::vector<std::vector<int64_t>> run_quantized_raw(const model::TypedIr& ir,
                                                    std::span<const int64_t> raw_in);

/// Quantizes the input, runs the bit-accurate path, and decodes the output
/// edge to reals. When `decoded_trace` is given it receives every edge
/// decoded to doubles.
std::vector<double> run_quantized(const model::TypedIr& ir, std::span<const double> x,
                                  std::vector<std::vector<double>>* decoded_trace = nullptr);

/// Reference path: 64-bit binary floating point end to end, exact math
/// activations (no tables). `trace` mirrors run_quantized's edge layout.
std::vector<double> run_reference(const model::NetworkModel& m,
                                  std::span<const double> x,
                                  std::vector<std::vector<double>>* trace = nullptr);

/// Coarse analytic error bound: the sum of per-stage rounding steps along
/// the datapath (quantization half-steps plus table bin and entry terms).
/// Not amplification-aware; shrinks monotonically as formats widen.
double rounding_bound(const model::TypedIr& ir);

struct AccuracyReport {
    int n_samples = 0;
    double top1_agreement = 0.0;
    std::optional<double> top1_accuracy_quantized;
    std::optional<double> top1_accuracy_reference;
    std::vector<double> per_output_max_abs_error;
    std::vector<double> per_output_mean_sq_error;
    // Ordered "input" first, then one entry per node, quantized edge vs
    // reference edge on decoded values.
    std::vector<std::pair<std::string, double>> per_layer_max_abs_error;
    double analytic_error_bound = 0.0;
};

/// Runs both paths over the dataset and aggregates the report. Throws
/// ParseError when sample arity does not match the model input size.
AccuracyReport evaluate(const model::TypedIr& ir, const model::NetworkModel& m,
                        const Dataset& d);

nlohmann::ordered_json report_json(const AccuracyReport& r);

} // namespace qnc::sim
