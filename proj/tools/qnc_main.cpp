// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "qnc/digest.hpp"
#include "qnc/emit.hpp"
#include "qnc/errors.hpp"
#include "qnc/estimate.hpp"
#include "qnc/model.hpp"
#include "qnc/sim.hpp"
#include "qnc/version.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string read_file(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw qnc::IoError(fmt::format("cannot read '{}'", p.string()));
    std::ostringstream ss;
    ss << f.rdbuf();
    if (f.bad()) throw qnc::IoError(fmt::format("error reading '{}'", p.string()));
    return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
    if (p.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(p.parent_path(), ec);
        if (ec)
            throw qnc::IoError(fmt::format("cannot create '{}': {}",
                                           p.parent_path().string(), ec.message()));
    }
    std::ofstream f(p, std::ios::binary);
    f << text;
    if (!f) throw qnc::IoError(fmt::format("cannot write '{}'", p.string()));
}

std::string timestamp_utc() {
    std::time_t t = 0;
    if (const char* sde = std::getenv("SOURCE_DATE_EPOCH"))
        t = std::time_t(std::strtoll(sde, nullptr, 10));
    else
        t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct Inputs {
    qnc::model::NetworkModel net;
    qnc::model::QuantConfig config;
    ordered_json digests; // path + sha256 per input file
};

Inputs load_inputs(const std::string& model_path, const std::string& config_path) {
    Inputs in;
    std::string model_text = read_file(model_path);
    in.net = qnc::model::parse_model(model_text);
    in.digests["model"] = {{"path", model_path}, {"sha256", qnc::sha256_hex(model_text)}};
    if (!config_path.empty()) {
        std::string config_text = read_file(config_path);
        in.config = qnc::model::parse_config(config_text);
        in.digests["config"] = {{"path", config_path},
                                {"sha256", qnc::sha256_hex(config_text)}};
    }
    return in;
}

ordered_json run_info(const char* subcommand, const Inputs& in) {
    ordered_json j;
    j["tool_version"] = fmt::format("{} {}", qnc::kToolName, qnc::kToolVersion);
    j["subcommand"] = subcommand;
    j["inputs"] = in.digests;
    j["timestamp"] = timestamp_utc();
    return j;
}

void write_run_manifest(const fs::path& outdir, ordered_json run,
                        const std::vector<std::pair<std::string, std::string>>& outputs) {
    run["outputs"] = ordered_json::array();
    for (const auto& [path, sha] : outputs)
        run["outputs"].push_back({{"path", path}, {"sha256", sha}});
    write_file(outdir / "run_manifest.json", run.dump(2) + "\n");
}

int cmd_compile(const std::string& model_path, const std::string& config_path,
                const std::string& out_dir) {
    Inputs in = load_inputs(model_path, config_path);
    auto ir = qnc::model::build_ir(in.net, in.config);
    auto bundle = qnc::emit::emit_source(ir);
    qnc::emit::write_bundle(bundle, out_dir);
    write_run_manifest(out_dir, run_info("compile", in), bundle.manifest);
    std::cout << fmt::format("wrote {} files to {}\n", bundle.files.size() + 2, out_dir);
    return 0;
}

int cmd_tables(const std::string& model_path, const std::string& config_path,
               const std::string& out_dir) {
    Inputs in = load_inputs(model_path, config_path);
    auto ir = qnc::model::build_ir(in.net, in.config);
    auto tables = qnc::emit::emit_tables(ir);
    std::vector<std::pair<std::string, std::string>> outputs;
    for (const auto& [path, text] : tables) {
        write_file(fs::path(out_dir) / path, text);
        outputs.emplace_back(path, qnc::sha256_hex(text));
    }
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    write_run_manifest(out_dir, run_info("tables", in), outputs);
    std::cout << fmt::format("wrote {} table dumps to {}\n", tables.size(), out_dir);
    return 0;
}

int cmd_simulate(const std::string& model_path, const std::string& config_path,
                 const std::string& dataset_path, const std::string& report_path) {
    Inputs in = load_inputs(model_path, config_path);
    auto ir = qnc::model::build_ir(in.net, in.config);
    std::string dataset_text = read_file(dataset_path);
    auto dataset = qnc::sim::parse_dataset_csv(dataset_text);
    in.digests["dataset"] = {{"path", dataset_path},
                             {"sha256", qnc::sha256_hex(dataset_text)}};
    auto report = qnc::sim::evaluate(ir, in.net, dataset);

    ordered_json body = qnc::sim::report_json(report);
    ordered_json run = run_info("simulate", in);
    run["report_sha256"] = qnc::sha256_hex(body.dump(2));
    body["run"] = run;
    write_file(report_path, body.dump(2) + "\n");
    std::cout << fmt::format("simulated {} samples; top-1 agreement {:.4f}\n",
                             report.n_samples, report.top1_agreement);
    return 0;
}

int cmd_estimate(const std::string& model_path, const std::string& config_path,
                 const std::string& report_path, bool text) {
    Inputs in = load_inputs(model_path, config_path);
    auto ir = qnc::model::build_ir(in.net, in.config);
    auto report = qnc::est::estimate(ir);

    ordered_json body = qnc::est::report_json(report);
    ordered_json run = run_info("estimate", in);
    run["report_sha256"] = qnc::sha256_hex(body.dump(2));
    body["run"] = run;
    write_file(report_path, body.dump(2) + "\n");
    if (text) std::cout << qnc::est::text_table(report);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{fmt::format("{} {} - quantizing compiler for small feed-forward "
                             "networks targeting HLS backends",
                             qnc::kToolName, qnc::kToolVersion)};
    app.require_subcommand(1);
    app.fallthrough(); // global flags (--seed) may follow the subcommand
    app.set_version_flag("--version",
                         fmt::format("{} {}", qnc::kToolName, qnc::kToolVersion));

    std::string model_path, config_path, dataset_path, out_dir, report_path;
    long long seed = 0;
    bool est_text = false;
    app.add_option("--seed", seed, "reserved for future use; ignored in this version");

    auto* compile = app.add_subcommand("compile", "emit HLS-ready source and tables");
    compile->add_option("--model", model_path, "model JSON")->required();
    compile->add_option("--config", config_path, "quantization config JSON");
    compile->add_option("--out-dir", out_dir, "output directory")->required();

    auto* simulate =
        app.add_subcommand("simulate", "bit-accurate simulation and accuracy report");
    simulate->add_option("--model", model_path, "model JSON")->required();
    simulate->add_option("--config", config_path, "quantization config JSON");
    simulate->add_option("--dataset", dataset_path, "dataset CSV")->required();
    simulate->add_option("--report", report_path, "report JSON output path")->required();

    auto* estimate = app.add_subcommand("estimate", "analytic resource estimate");
    estimate->add_option("--model", model_path, "model JSON")->required();
    estimate->add_option("--config", config_path, "quantization config JSON");
    estimate->add_option("--report", report_path, "report JSON output path")->required();
    estimate->add_flag("--text", est_text, "also print a fixed-width table");

    auto* tables = app.add_subcommand("tables", "write activation table dumps only");
    tables->add_option("--model", model_path, "model JSON")->required();
    tables->add_option("--config", config_path, "quantization config JSON");
    tables->add_option("--out-dir", out_dir, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (compile->parsed()) return cmd_compile(model_path, config_path, out_dir);
        if (simulate->parsed())
            return cmd_simulate(model_path, config_path, dataset_path, report_path);
        if (estimate->parsed())
            return cmd_estimate(model_path, config_path, report_path, est_text);
        if (tables->parsed()) return cmd_tables(model_path, config_path, out_dir);
    } catch (const qnc::ParseError& e) {
        std::cerr << "qnc: input error: " << e.what() << "\n";
        return 2;
    } catch (const qnc::ConfigError& e) {
        std::cerr << "qnc: configuration error: " << e.what() << "\n";
        return 3;
    } catch (const qnc::IoError& e) {
        std::cerr << "qnc: i/o error: " << e.what() << "\n";
        return 4;
    }
    return 1;
}
