// SPDX-License-Identifier: Apache-2.0

#include "support/fixtures.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "qnc/errors.hpp"

namespace qnc::test {

namespace fs = std::filesystem;

namespace {

// Deterministic dyadic weight in [-1, 1] on the 2^-8 grid. Raw engine output
// is used directly so the sequence is identical on every platform.
double grid_weight(std::mt19937& rng) {
    return (int(rng() % 513) - 256) / 256.0;
}

model::DenseLayer make_dense(const std::string& name, int n_in, int n_out,
                             std::mt19937& rng) {
    model::DenseLayer d;
    d.name = name;
    d.n_in = n_in;
    d.n_out = n_out;
    d.weights.reserve(size_t(n_in) * n_out);
    for (int i = 0; i < n_in * n_out; ++i) d.weights.push_back(grid_weight(rng));
    for (int j = 0; j < n_out; ++j) d.bias.push_back(grid_weight(rng) / 4.0);
    return d;
}

} // namespace

model::NetworkModel make_mlp3_model() {
    std::mt19937 rng(42);
    model::NetworkModel m;
    m.name = "mlp3";
    m.input_size = 16;
    m.layers.emplace_back(make_dense("fc1", 16, 64, rng));
    m.layers.emplace_back(model::ActivationLayer{model::ActKind::relu});
    m.layers.emplace_back(make_dense("fc2", 64, 32, rng));
    m.layers.emplace_back(model::ActivationLayer{model::ActKind::relu});
    m.layers.emplace_back(make_dense("fc3", 32, 5, rng));
    m.layers.emplace_back(model::ActivationLayer{model::ActKind::softmax});
    return m;
}

std::string mlp3_config_json() {
    return R"({
  "default_type": "fixed<16,6,rnd,sat>",
  "reuse_factor": {"default": 1, "fc1": 4, "fc2": 2}
})";
}

std::string model_to_json(const model::NetworkModel& m) {
    nlohmann::ordered_json j;
    j["name"] = m.name;
    j["input_size"] = m.input_size;
    j["layers"] = nlohmann::ordered_json::array();
    for (const auto& l : m.layers) {
        nlohmann::ordered_json jl;
        if (const auto* d = std::get_if<model::DenseLayer>(&l)) {
            jl["type"] = "dense";
            jl["name"] = d->name;
            jl["n_in"] = d->n_in;
            jl["n_out"] = d->n_out;
            auto rows = nlohmann::ordered_json::array();
            for (int r = 0; r < d->n_out; ++r) {
                auto row = nlohmann::ordered_json::array();
                for (int c = 0; c < d->n_in; ++c) row.push_back(d->weight(r, c));
                rows.push_back(std::move(row));
            }
            jl["weights"] = std::move(rows);
            jl["bias"] = d->bias;
        } else {
            jl["type"] = "activation";
            jl["kind"] = model::act_kind_name(std::get<model::ActivationLayer>(l).kind);
        }
        j["layers"].push_back(std::move(jl));
    }
    return j.dump(1) + "\n";
}

TempDir::TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "qnc_test_XXXXXX").string();
    if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

void write_text(const fs::path& p, const std::string& text) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    f << text;
    if (!f) throw std::runtime_error("cannot write " + p.string());
}

std::string read_text(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

CommandResult run_command(const std::string& cmd) {
    CommandResult r;
    FILE* pipe = popen((cmd + " 2>&1").c_str(), "r");
    if (!pipe) throw std::runtime_error("popen failed: " + cmd);
    char buf[4096];
    size_t n = 0;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
    int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::vector<std::vector<long long>> compile_and_run_net(
    const fs::path& bundle_dir, const std::string& net_name,
    const std::vector<std::vector<long long>>& raw_inputs) {
    const std::string driver = fmt::format(R"(#include <stdio.h>
#include "net.h"
int main(void)
{{
    long long v;
    for (;;) {{
        {0}_in_t in[{0}_INPUT_SIZE];
        {0}_out_t out[{0}_OUTPUT_SIZE];
        for (int i = 0; i < {0}_INPUT_SIZE; ++i) {{
            if (scanf("%lld", &v) != 1) return 0;
            in[i] = ({0}_in_t)v;
        }}
        {0}_infer(in, out);
        for (int j = 0; j < {0}_OUTPUT_SIZE; ++j)
            printf("%lld ", (long long)out[j]);
        printf("\n");
    }}
}}
)",
                                           net_name);
    write_text(bundle_dir / "driver.c", driver);
    auto cc = run_command(fmt::format(
        "cc -std=c99 -O1 -o {0}/netprog {0}/net.c {0}/driver.c", bundle_dir.string()));
    if (cc.exit_code != 0)
        throw std::runtime_error("emitted code failed to compile:\n" + cc.out);

    std::string stdin_text;
    for (const auto& row : raw_inputs) {
        for (long long v : row) stdin_text += fmt::format("{} ", v);
        stdin_text += "\n";
    }
    write_text(bundle_dir / "stdin.txt", stdin_text);
    auto run = run_command(fmt::format("{0}/netprog < {0}/stdin.txt", bundle_dir.string()));
    if (run.exit_code != 0)
        throw std::runtime_error("emitted program failed:\n" + run.out);

    std::vector<std::vector<long long>> rows;
    std::istringstream ss(run.out);
    std::string line;
    while (std::getline(ss, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        std::vector<long long> row;
        long long v = 0;
        while (ls >> v) row.push_back(v);
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace qnc::test
