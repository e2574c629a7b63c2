// SPDX-License-Identifier: Apache-2.0

#include "qnc/emit.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "qnc/digest.hpp"
#include "qnc/errors.hpp"
#include "qnc/version.hpp"

namespace qnc::emit {

using model::IrActivation;
using model::IrDense;
using model::TypedIr;

namespace {

std::string sanitize_ident(const std::string& s) {
    std::string out;
    for (char c : s)
        out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
    if (out.empty() || std::isdigit(static_cast<unsigned char>(out[0])))
        out.insert(out.begin(), 'n');
    return out;
}

const char* storage_type(int width) {
    if (width <= 8) return "int8_t";
    if (width <= 16) return "int16_t";
    if (width <= 32) return "int32_t";
    return "int64_t";
}

const fx::FxFormat& fx_edge(const model::NumFormat& f) {
    return std::get<fx::FxFormat>(f);
}

// Index-computation constants mirroring lut::lut_index: scale everything to
// a common power-of-two grid p, subtract the scaled lower bound, then shift
// down by p - log2(N/span).
struct LutIndexParams {
    int pshift = 0;      // input raw -> grid: x << pshift
    int64_t scaled_lo = 0; // lo on the grid
    int tshift = 0;      // grid -> bin index: >> tshift
    int nmax = 0;
};

int exact_log2_or_throw(double v) {
    int e = 0;
    double m = std::frexp(v, &e);
    if (m != 0.5) throw ConfigError("internal: table span not a power of two");
    return e - 1;
}

LutIndexParams lut_index_params(const fx::FxFormat& in_f, const lut::LutSpec& spec) {
    const int t = exact_log2_or_throw(double(spec.n_entries)) -
                  exact_log2_or_throw(spec.input_hi - spec.input_lo);
    const int f = in_f.frac_bits();
    const int p = std::max({f, 20, t});
    LutIndexParams lp;
    lp.pshift = p - f;
    lp.tshift = p - t;
    lp.nmax = spec.n_entries - 1;
    long double lo_scaled = std::ldexp((long double)spec.input_lo, p);
    if (in_f.width + lp.pshift > 62 || std::fabs((double)lo_scaled) > std::ldexp(1.0, 62))
        throw ConfigError(fmt::format(
            "table input format {} too wide to lower into 64-bit index arithmetic",
            in_f.str()));
    lp.scaled_lo = (int64_t)llroundl(lo_scaled);
    return lp;
}

std::string const_array(const std::string& type, const std::string& name,
                        const std::vector<int64_t>& values, int per_line) {
    std::string out =
        fmt::format("static const {} {}[{}] = {{\n", type, name, values.size());
    for (size_t i = 0; i < values.size(); ++i) {
        if (i % size_t(per_line) == 0) out += "    ";
        out += fmt::format("{}", values[i]);
        if (i + 1 != values.size()) out += ",";
        out += (i % size_t(per_line) == size_t(per_line) - 1 || i + 1 == values.size())
                   ? "\n"
                   : " ";
    }
    out += "};\n";
    return out;
}

// One audited requantization helper shared by every emitted cast site.
constexpr const char* kFxCastHelper = R"(/* Requantize a raw fixed-point value: drop rshift fractional bits (negative
 * rshift adds them), rounding toward -inf or to nearest with ties away from
 * zero, then saturate into [lo, hi] or wrap into the same two's-complement
 * window. Pure function; every call site passes literal arguments. */
static int64_t fx_cast(int64_t acc, int rshift, int rnd_nearest, int sat,
                       int64_t lo, int64_t hi)
{
    int64_t v;
    if (rshift > 0) {
        if (rnd_nearest) {
            int neg = acc < 0;
            uint64_t mag = neg ? ~(uint64_t)acc + 1u : (uint64_t)acc;
            uint64_t q = (mag + ((uint64_t)1 << (rshift - 1))) >> rshift;
            v = neg ? -(int64_t)q : (int64_t)q;
        } else {
            v = acc >> rshift;
        }
    } else if (rshift < 0) {
        int lshift = -rshift;
        if (sat) {
            int64_t pre_hi = hi >> lshift;
            int64_t pre_lo = -((-lo) >> lshift);
            if (acc > pre_hi) return hi;
            if (acc < pre_lo) return lo;
        }
        v = (int64_t)((uint64_t)acc << lshift);
    } else {
        v = acc;
    }
    if (sat) {
        if (v > hi) v = hi;
        if (v < lo) v = lo;
        return v;
    }
    {
        uint64_t span = (uint64_t)(hi - lo) + 1u;
        uint64_t m = (uint64_t)v & (span - 1u);
        return (m > (uint64_t)hi) ? (int64_t)(m - span) : (int64_t)m;
    }
}
)";

constexpr const char* kLutIndexHelper = R"(/* Table bin index: scale the raw input onto a common power-of-two grid,
 * subtract the scaled range start, shift down to bin units, clamp. */
static int64_t lut_idx(int64_t x, int pshift, int64_t scaled_lo, int tshift,
                       int64_t nmax)
{
    int64_t v = (int64_t)((uint64_t)x << pshift) - scaled_lo;
    int64_t i = v >> tshift;
    if (i < 0) i = 0;
    if (i > nmax) i = nmax;
    return i;
}
)";

std::string cast_call(const std::string& acc_expr, const fx::FxFormat& from,
                      const fx::FxFormat& to) {
    const int rshift = from.frac_bits() - to.frac_bits();
    if (rshift > 63 || rshift < -63)
        throw ConfigError(fmt::format(
            "requantization shift {} from {} to {} too wide to lower", rshift,
            from.str(), to.str()));
    return fmt::format("fx_cast({}, {}, {}, {}, {}, {})", acc_expr, rshift,
                       to.rounding == fx::Rounding::nearest ? 1 : 0,
                       to.overflow == fx::Overflow::saturate ? 1 : 0,
                       (int64_t)to.raw_min(), (int64_t)to.raw_max());
}

std::string default_pragma_comment(const std::string& layer, int reuse,
                                   const std::string& backend) {
    return fmt::format(
        "    /* reuse_factor({}) = {}; backend \"{}\": no pragmas emitted */\n",
        layer, reuse, backend);
}

std::string table_array_name(const std::string& node, const lut::LutTable& t) {
    return fmt::format("T_{}_{}", sanitize_ident(node), lut::act_fn_name(t.spec.function));
}

std::string emit_dense(const IrDense& d, const fx::FxFormat& in_f,
                       const fx::FxFormat& out_f, const EmitOptions& opts,
                       std::string& decls) {
    const fx::FxFormat& acc_f = *d.accum_format;
    const fx::FxFormat& w_f = std::get<fx::FxFormat>(d.weight_format);
    const std::string id = sanitize_ident(d.name);
    const int bias_align = in_f.frac_bits();
    const int total = d.n_in * d.n_out;
    const bool sparse = 2 * (total - d.nnz) > total; // > 50% zero weights

    // Bias constants are pre-aligned to the accumulator scale so the layer
    // body starts from plain array reads.
    std::vector<int64_t> bias_aligned(d.b_raw.size());
    for (size_t j = 0; j < d.b_raw.size(); ++j)
        bias_aligned[j] = d.b_raw[j] << bias_align;

    decls += fmt::format("/* {}: dense {} -> {}, weights {}, accumulator {} */\n",
                         d.name, d.n_in, d.n_out, w_f.str(), acc_f.str());
    if (!sparse) decls += const_array(storage_type(w_f.width), "W_" + id, d.w_raw, 16);
    decls += const_array("int64_t", "B_" + id, bias_aligned, 8);
    decls += "\n";

    std::string body;
    body += fmt::format("static void layer_{}(const {} x[{}], {} y[{}])\n{{\n", id,
                        storage_type(in_f.width), d.n_in, storage_type(out_f.width),
                        d.n_out);
    auto hook = opts.pragma_hook ? opts.pragma_hook : default_pragma_comment;
    if (sparse) {
        body += fmt::format(
            "    /* sparse form: {} of {} weights are zero, products omitted */\n",
            total - d.nnz, total);
        body += hook(d.name, d.reuse, opts.backend);
        body += "    int64_t acc;\n";
        for (int j = 0; j < d.n_out; ++j) {
            body += fmt::format("    acc = B_{}[{}]", id, j);
            for (int i = 0; i < d.n_in; ++i) {
                int64_t w = d.w_raw[size_t(j) * d.n_in + i];
                if (w != 0)
                    body += fmt::format("\n        + (int64_t){} * (int64_t)x[{}]", w, i);
            }
            body += ";\n";
            body += fmt::format("    y[{}] = ({}){};\n", j, storage_type(out_f.width),
                                cast_call("acc", acc_f, out_f));
        }
    } else {
        const int chunk = (total + d.reuse - 1) / d.reuse;
        body += fmt::format("    int64_t acc[{}];\n", d.n_out);
        body += fmt::format("    for (int j = 0; j < {}; ++j) acc[j] = B_{}[j];\n",
                            d.n_out, id);
        body += hook(d.name, d.reuse, opts.backend);
        body += fmt::format(
            "    for (int r = 0; r < {}; ++r) {{ /* {} sequential rounds */\n"
            "        for (int k = 0; k < {}; ++k) {{ /* {} multipliers per round */\n",
            d.reuse, d.reuse, chunk, chunk);
        body += fmt::format("            int m = r * {} + k;\n", chunk);
        const std::string mac = fmt::format(
            "acc[m / {}] += (int64_t)W_{}[m] * (int64_t)x[m % {}];\n", d.n_in, id,
            d.n_in);
        if (chunk * d.reuse != total) {
            body += fmt::format("            if (m < {}) {{\n", total);
            body += "                " + mac;
            body += "            }\n";
        } else {
            body += "            " + mac;
        }
        body += "        }\n    }\n";
        body += fmt::format("    for (int j = 0; j < {}; ++j) y[j] = ({}){};\n",
                            d.n_out, storage_type(out_f.width),
                            cast_call("acc[j]", acc_f, out_f));
    }
    body += "}\n\n";
    return body;
}

std::string emit_activation(const IrActivation& a, const fx::FxFormat& in_f,
                            const fx::FxFormat& out_f, int n, std::string& decls) {
    const std::string id = sanitize_ident(a.name);
    std::string body;
    if (a.kind == model::ActKind::relu) {
        body += fmt::format("static void layer_{}(const {} x[{}], {} y[{}])\n{{\n", id,
                            storage_type(in_f.width), n, storage_type(out_f.width), n);
        body += fmt::format("    for (int i = 0; i < {}; ++i) y[i] = x[i] > 0 ? x[i] : 0;\n",
                            n);
        body += "}\n\n";
        return body;
    }

    for (const auto& t : a.tables) {
        decls += fmt::format("/* {}: {} table, {} entries over [{}, {}), entries {} */\n",
                             a.name, lut::act_fn_name(t.spec.function), t.spec.n_entries,
                             t.spec.input_lo, t.spec.input_hi,
                             t.spec.entry_format.str());
        decls += const_array(storage_type(t.spec.entry_format.width),
                             table_array_name(a.name, t), t.entries, 8);
        decls += "\n";
    }

    if (a.kind == model::ActKind::softmax) {
        const auto& exp_t = a.tables[0];
        const auto& inv_t = a.tables[1];
        if (in_f.width > 62)
            throw ConfigError(fmt::format(
                "softmax input format {} too wide to lower (needs width + 1 <= 63)",
                in_f.str()));
        // z = x - max shares x's fractional bits, one integer bit wider.
        fx::FxFormat z_f{in_f.width + 1, in_f.int_bits + 1, in_f.rounding, in_f.overflow};
        auto zp = lut_index_params(z_f, exp_t.spec);
        const auto& e_f = exp_t.spec.entry_format;
        // The sum of n entries needs ceil(log2(n+1)) extra integer bits; its
        // fractional bits (all that index extraction reads) stay e_f's.
        const int sum_growth = std::bit_width(unsigned(n));
        fx::FxFormat s_f{e_f.width + sum_growth, e_f.int_bits + sum_growth,
                         e_f.rounding, e_f.overflow};
        auto sp = lut_index_params(s_f, inv_t.spec);
        const auto& i_f = inv_t.spec.entry_format;
        fx::FxFormat prod_f{e_f.width + i_f.width, e_f.int_bits + i_f.int_bits,
                            e_f.rounding, e_f.overflow};

        std::string body2;
        body2 += fmt::format("static void layer_{}(const {} x[{}], {} y[{}])\n{{\n", id,
                             storage_type(in_f.width), n, storage_type(out_f.width), n);
        body2 += fmt::format("    int64_t m = x[0];\n");
        body2 += fmt::format("    for (int i = 1; i < {}; ++i) if (x[i] > m) m = x[i];\n", n);
        body2 += fmt::format("    int64_t e[{}];\n    int64_t sum = 0;\n", n);
        body2 += fmt::format(
            "    for (int i = 0; i < {}; ++i) {{\n"
            "        int64_t z = (int64_t)x[i] - m; /* exact, one bit wider */\n"
            "        e[i] = {}[lut_idx(z, {}, {}, {}, {})];\n"
            "        sum += e[i];\n    }}\n",
            n, table_array_name(a.name, exp_t), zp.pshift, zp.scaled_lo, zp.tshift,
            zp.nmax);
        body2 += fmt::format("    {{\n        int64_t inv = {}[lut_idx(sum, {}, {}, {}, {})];\n",
                             table_array_name(a.name, inv_t), sp.pshift, sp.scaled_lo,
                             sp.tshift, sp.nmax);
        body2 += fmt::format("        for (int i = 0; i < {}; ++i) y[i] = ({}){};\n",
                             n, storage_type(out_f.width),
                             cast_call("e[i] * inv", prod_f, out_f));
        body2 += "    }\n}\n\n";
        return body2;
    }

    // sigmoid / tanh: one table read per element
    const auto& t = a.tables[0];
    auto lp = lut_index_params(in_f, t.spec);
    body += fmt::format("static void layer_{}(const {} x[{}], {} y[{}])\n{{\n", id,
                        storage_type(in_f.width), n, storage_type(out_f.width), n);
    body += fmt::format(
        "    for (int i = 0; i < {}; ++i)\n"
        "        y[i] = ({}){}[lut_idx((int64_t)x[i], {}, {}, {}, {})];\n",
        n, storage_type(out_f.width), table_array_name(a.name, t), lp.pshift,
        lp.scaled_lo, lp.tshift, lp.nmax);
    body += "}\n\n";
    return body;
}

} // namespace

std::map<std::string, std::string> emit_tables(const TypedIr& ir) {
    std::map<std::string, std::string> out;
    for (const auto& n : ir.nodes) {
        const auto* a = std::get_if<IrActivation>(&n);
        if (!a) continue;
        for (const auto& t : a->tables)
            out.emplace(fmt::format("tables/{}_{}.tbl", sanitize_ident(a->name),
                                    lut::act_fn_name(t.spec.function)),
                        lut::table_text(t));
    }
    return out;
}

SourceBundle emit_source(const TypedIr& ir, const EmitOptions& opts) {
    if (ir.has_minifloat())
        throw ConfigError(
            "minifloat networks are simulation-only; code emission supports "
            "fixed-point formats");
    if (ir.edge_format.size() != ir.nodes.size() + 1)
        throw ConfigError("internal: IR edges unresolved");

    const std::string net = sanitize_ident(ir.name);
    const auto& in_f = fx_edge(ir.input_format());
    const auto& out_f = fx_edge(ir.output_format());
    const int n_out = ir.output_size();

    std::string banner = fmt::format(
        "/* Generated by {} {} from network \"{}\". Do not edit: regenerating\n"
        " * from the same model and configuration reproduces this file byte for\n"
        " * byte. All values are two's-complement raw integers; an edge in\n"
        " * fixed<W,I> represents raw * 2^-(W-I). */\n",
        kToolName, kToolVersion, ir.name);

    std::string header = banner;
    header += fmt::format("#ifndef QNC_{}_H\n#define QNC_{}_H\n\n#include <stdint.h>\n\n",
                          net, net);
    header += fmt::format("#define {}_INPUT_SIZE {}\n", net, ir.input_size);
    header += fmt::format("#define {}_OUTPUT_SIZE {}\n\n", net, n_out);
    header += fmt::format("/* input edge: {}; output edge: {} */\n", in_f.str(),
                          out_f.str());
    header += fmt::format("typedef {} {}_in_t;\n", storage_type(in_f.width), net);
    header += fmt::format("typedef {} {}_out_t;\n\n", storage_type(out_f.width), net);
    header += fmt::format("void {}_infer(const {}_in_t in[{}], {}_out_t out[{}]);\n\n#endif\n",
                          net, net, ir.input_size, net, n_out);

    std::string decls;
    std::string bodies;
    int width = ir.input_size;
    for (size_t i = 0; i < ir.nodes.size(); ++i) {
        const auto& edge_in = fx_edge(ir.edge_format[i]);
        const auto& edge_out = fx_edge(ir.edge_format[i + 1]);
        if (const auto* d = std::get_if<IrDense>(&ir.nodes[i])) {
            bodies += emit_dense(*d, edge_in, edge_out, opts, decls);
            width = d->n_out;
        } else {
            bodies += emit_activation(std::get<IrActivation>(ir.nodes[i]), edge_in,
                                      edge_out, width, decls);
        }
    }

    bool any_tables = false;
    for (const auto& n : ir.nodes)
        if (const auto* a = std::get_if<IrActivation>(&n))
            any_tables = any_tables || !a->tables.empty();

    std::string source = banner;
    source += fmt::format("#include \"net.h\"\n\n");
    source += kFxCastHelper;
    source += "\n";
    if (any_tables) {
        source += kLutIndexHelper;
        source += "\n";
    }
    source += decls;
    source += bodies;

    // Top-level function: thread the edge buffers through the layers.
    source += fmt::format("void {}_infer(const {} in[{}], {} out[{}])\n{{\n", net,
                          storage_type(in_f.width), ir.input_size,
                          storage_type(out_f.width), n_out);
    if (ir.nodes.empty())
        source += fmt::format(
            "    for (int i = 0; i < {}; ++i) out[i] = in[i];\n", ir.input_size);
    int cur_width = ir.input_size;
    std::string cur = "in";
    for (size_t i = 0; i < ir.nodes.size(); ++i) {
        int next_width = cur_width;
        if (const auto* d = std::get_if<IrDense>(&ir.nodes[i])) next_width = d->n_out;
        std::string next;
        if (i + 1 == ir.nodes.size()) {
            next = "out";
        } else {
            next = fmt::format("e{}", i + 1);
            source += fmt::format("    {} {}[{}];\n", storage_type(fx_edge(ir.edge_format[i + 1]).width),
                                  next, next_width);
        }
        source += fmt::format("    layer_{}({}, {});\n",
                              sanitize_ident(model::node_name(ir.nodes[i])), cur, next);
        cur = next;
        cur_width = next_width;
    }
    source += "}\n";

    SourceBundle bundle;
    bundle.files.emplace_back("net.c", source);
    bundle.files.emplace_back("net.h", header);
    for (auto& [path, text] : emit_tables(ir)) bundle.files.emplace_back(path, text);
    std::sort(bundle.files.begin(), bundle.files.end());
    for (const auto& [path, text] : bundle.files)
        bundle.manifest.emplace_back(path, sha256_hex(text));
    return bundle;
}

void write_bundle(const SourceBundle& bundle, const std::filesystem::path& outdir) {
    std::error_code ec;
    std::filesystem::create_directories(outdir, ec);
    if (ec) throw IoError(fmt::format("cannot create '{}': {}", outdir.string(), ec.message()));
    auto write_file = [&](const std::filesystem::path& p, const std::string& text) {
        std::filesystem::create_directories(p.parent_path(), ec);
        std::ofstream f(p, std::ios::binary);
        f << text;
        if (!f) throw IoError(fmt::format("cannot write '{}'", p.string()));
    };
    for (const auto& [path, text] : bundle.files) write_file(outdir / path, text);

    std::string manifest = "{\n  \"files\": [\n";
    for (size_t i = 0; i < bundle.manifest.size(); ++i) {
        manifest += fmt::format("    {{\"path\": \"{}\", \"sha256\": \"{}\"}}{}\n",
                                bundle.manifest[i].first, bundle.manifest[i].second,
                                i + 1 == bundle.manifest.size() ? "" : ",");
    }
    manifest += "  ]\n}\n";
    write_file(outdir / "manifest.json", manifest);
}

} // namespace qnc::emit
