// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "qnc/model.hpp"

namespace qnc::test {

/// The reference three-dense-layer MLP fixture (16 -> 64 -> 32 -> 5 with
/// relu/relu/softmax). Weights and biases are deterministic pseudo-random
/// values on the 2^-8 grid, so the JSON round-trips exactly.
model::NetworkModel make_mlp3_model();

/// Default config used with the fixture (per-layer reuse factors set).
std::string mlp3_config_json();

/// Serializes a model into the JSON document schema.
std::string model_to_json(const model::NetworkModel& m);

/// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

void write_text(const std::filesystem::path& p, const std::string& text);
std::string read_text(const std::filesystem::path& p);

struct CommandResult {
    int exit_code = -1;
    std::string out;
};

/// Runs a shell command, capturing stdout (stderr folded in).
CommandResult run_command(const std::string& cmd);

/// Compiles the emitted net.c in `bundle_dir` together with a generated
/// stdin/stdout driver, runs it over the raw input rows, and returns the raw
/// output rows. Requires a host C compiler ("cc").
std::vector<std::vector<long long>> compile_and_run_net(
    const std::filesystem::path& bundle_dir, const std::string& net_name,
    const std::vector<std::vector<long long>>& raw_inputs);

} // namespace qnc::test
