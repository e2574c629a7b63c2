// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qnc/estimate.hpp"
#include "support/fixtures.hpp"

using namespace qnc;
using namespace qnc::test;
using fx::FxFormat;
using model::QuantConfig;

namespace {

model::TypedIr square_dense_ir(int n, int reuse, double zero_fraction) {
    model::NetworkModel m;
    m.name = "sq";
    m.input_size = n;
    model::DenseLayer d;
    d.name = "fc";
    d.n_in = d.n_out = n;
    int total = n * n;
    int zeros = int(total * zero_fraction);
    for (int i = 0; i < total; ++i) d.weights.push_back(i < zeros ? 0.0 : 1.0);
    d.bias.assign(size_t(n), 0.0);
    m.layers.emplace_back(std::move(d));
    QuantConfig c;
    c.reuse_factor["fc"] = reuse;
    return model::build_ir(m, c);
}

model::TypedIr sigmoid_only_ir() {
    std::string doc = R"({"name":"s","input_size":4,"layers":[
        {"type":"dense","name":"fc","n_in":4,"n_out":4,
         "weights":[[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]],"bias":[0,0,0,0]},
        {"type":"activation","kind":"sigmoid"}]})";
    return model::build_ir(model::parse_model(doc), QuantConfig{});
}

} // namespace

TEST_CASE("multiplier counts across reuse factors") {
    CHECK(est::estimate(square_dense_ir(16, 1, 0.0)).per_layer[0].multipliers == 256);
    CHECK(est::estimate(square_dense_ir(16, 2, 0.0)).per_layer[0].multipliers == 128);
    CHECK(est::estimate(square_dense_ir(16, 4, 0.0)).per_layer[0].multipliers == 64);
    CHECK(est::estimate(square_dense_ir(16, 16, 0.0)).per_layer[0].multipliers == 16);
}

TEST_CASE("zero-weight elimination halves the multiplier count") {
    CHECK(est::estimate(square_dense_ir(16, 1, 0.5)).per_layer[0].multipliers == 128);
    CHECK(est::estimate(square_dense_ir(16, 2, 0.5)).per_layer[0].multipliers == 64);
    CHECK(est::estimate(square_dense_ir(16, 4, 0.5)).per_layer[0].multipliers == 32);
    CHECK(est::estimate(square_dense_ir(16, 16, 0.5)).per_layer[0].multipliers == 8);
}

TEST_CASE("one 1024-entry 18-bit table exactly fills one BRAM-18") {
    auto r = est::estimate(sigmoid_only_ir());
    REQUIRE(r.per_layer.size() == 2);
    const auto& act = r.per_layer[1];
    CHECK(act.kind == "sigmoid");
    CHECK(act.table_storage_bits == 1024 * 18);
    CHECK(act.table_storage_bits == 18432);
    CHECK(act.bram18_count == 1);
}

TEST_CASE("latency model and weight storage") {
    auto r = est::estimate(square_dense_ir(16, 4, 0.0));
    const auto& d = r.per_layer[0];
    CHECK(d.latency_cycles == 4 + 5); // reuse rounds + ceil(log2(17))
    CHECK(d.weight_storage_bits == 256 * 16);
    CHECK(d.bram18_count == 1); // 4096 bits -> one BRAM
}

TEST_CASE("multipliers shrink monotonically in R; latency grows") {
    long long prev_mul = 1ll << 60;
    long long prev_lat = -1;
    for (int r = 1; r <= 300; r += 7) {
        auto rep = est::estimate(square_dense_ir(16, r, 0.0));
        CHECK(rep.per_layer[0].multipliers <= prev_mul);
        CHECK(rep.per_layer[0].latency_cycles >= prev_lat);
        prev_mul = rep.per_layer[0].multipliers;
        prev_lat = rep.per_layer[0].latency_cycles;
    }
    // boundary identities
    CHECK(est::estimate(square_dense_ir(8, 1, 0.0)).per_layer[0].multipliers == 64);
    CHECK(est::estimate(square_dense_ir(8, 64, 0.0)).per_layer[0].multipliers == 1);
}

TEST_CASE("softmax counts both tables; totals are sums") {
    auto net = make_mlp3_model();
    auto ir = model::build_ir(net, model::parse_config(mlp3_config_json()));
    auto r = est::estimate(ir);
    REQUIRE(r.per_layer.size() == 6);
    const auto& sm = r.per_layer[5];
    CHECK(sm.kind == "softmax");
    CHECK(sm.table_storage_bits == 2 * 18432);
    CHECK(sm.bram18_count == 2);

    long long mul = 0, bram = 0;
    for (const auto& l : r.per_layer) {
        mul += l.multipliers;
        bram += l.bram18_count;
    }
    CHECK(r.totals.multipliers == mul);
    CHECK(r.totals.bram18_count == bram);

    auto j = est::report_json(r);
    CHECK(j["model"] == "analytic estimate");
    CHECK(j["per_layer"].size() == 6);
    CHECK(j["totals"]["multipliers"] == mul);

    auto text = est::text_table(r);
    CHECK(text.find("fc1") != std::string::npos);
    CHECK(text.find("total") != std::string::npos);
}
