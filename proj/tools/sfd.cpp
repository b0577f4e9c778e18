/// Command-line driver for the stencil compiler: generate kernel source, run
/// the forward operator, execute verification suites and benchmark block
/// choices.  Configuration comes from one JSON file plus --set overrides;
/// every command writes a machine-readable summary.json into --out.

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "stencilfd/seismic.hpp"
#include "stencilfd/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sfd;

namespace {

json default_config() {
    return json{
        {"physics", "acoustic"},
        {"interior", {68, 68, 24}},
        {"h", 15.0},
        {"nbpml", 13},
        {"space_order", 8},
        {"velocity", 1500.0},
        {"model_file", ""},
        {"f0", 10.0},
        {"t0", 0.0},
        {"time", 1.0},
        {"nt", 0},
        {"dt", 0.0},
        {"amplitude", 1.0},
        {"save", false},
        {"seed", 0},
        {"parallel", true},
        {"simd", true},
        {"block_mode", "best-guess"},
        {"fixed_blocks", {8, 8}},
        {"blocks", json::array()},
        {"candidates", json::array()},
        {"preset", "generic"},
        {"kernel", "forward"},
        {"source", json::array()},
        {"receivers", 8},
    };
}

/// File config overlaid with --set key=value pairs; dots browse into nested
/// keys, values parse as JSON with plain-string fallback.
json build_patch(const std::string& config_path, const std::vector<std::string>& sets) {
    json patch = json::object();
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw std::runtime_error("cannot read config file " + config_path);
        patch = json::parse(in);
    }
    for (const std::string& kv : sets) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos || eq == 0)
            throw std::runtime_error("--set expects key=value, got '" + kv + "'");
        std::string path = "/" + kv.substr(0, eq);
        for (char& c : path)
            if (c == '.') c = '/';
        const std::string raw = kv.substr(eq + 1);
        json value = json::parse(raw, nullptr, false);
        if (value.is_discarded()) value = raw;
        patch[json::json_pointer(path)] = value;
    }
    return patch;
}

template <class T>
void maybe(const json& patch, const char* key, T& out) {
    if (patch.contains(key)) out = patch.at(key).get<T>();
}

std::string plan_name(const codegen::CodegenPlan& plan) {
    std::string name;
    const bool blocked = plan.blocking != codegen::CodegenPlan::Blocking::Off;
    for (const auto& [on, part] : {std::pair{plan.parallel, "parallel"},
                                   {plan.simd, "simd"},
                                   {blocked, "blocked"}}) {
        if (!on) continue;
        if (!name.empty()) name += '+';
        name += part;
    }
    return name.empty() ? "all-off" : name;
}

std::string format_blocks(const std::vector<long>& blocks) {
    std::string s;
    for (long b : blocks) s += (s.empty() ? "" : "x") + std::to_string(b);
    return s.empty() ? "-" : s;
}

/// Everything a command needs, resolved from the merged config.
struct Experiment {
    json cfg;
    seismic::VelocityModel model;
    double dt = 0;
    long nt = 0;
    std::vector<std::vector<double>> src_coords, rec_coords;
    seismic::SparsePoints src, rec;
    std::vector<double> trace;
    seismic::RunConfig run;
    std::string block_mode;
};

Experiment build_experiment(const json& patch) {
    json cfg = default_config();
    cfg.merge_patch(patch);

    Experiment ex;
    ex.cfg = cfg;
    const std::string model_file = cfg.at("model_file").get<std::string>();
    const int order = cfg.at("space_order").get<int>();
    if (!model_file.empty()) {
        ex.model = seismic::load_model(model_file, order);
    } else {
        ex.model = seismic::make_constant_model(cfg.at("interior").get<std::vector<long>>(),
                                                cfg.at("h").get<double>(),
                                                cfg.at("nbpml").get<long>(), order,
                                                cfg.at("velocity").get<double>());
    }

    const double dt_cfg = cfg.at("dt").get<double>();
    ex.dt = dt_cfg > 0 ? dt_cfg : 0.9 * seismic::critical_dt(ex.model);
    const long nt_cfg = cfg.at("nt").get<long>();
    ex.nt = nt_cfg > 0 ? nt_cfg
                       : std::max<long>(4, std::lround(cfg.at("time").get<double>() / ex.dt) + 1);

    const int nd = ex.model.ndim();
    std::vector<double> L(static_cast<std::size_t>(nd));
    for (int d = 0; d < nd; ++d)
        L[static_cast<std::size_t>(d)] =
            static_cast<double>(ex.model.interior[static_cast<std::size_t>(d)] - 1) * ex.model.h;

    std::vector<double> src_coord = cfg.at("source").get<std::vector<double>>();
    if (src_coord.empty()) {
        src_coord.resize(static_cast<std::size_t>(nd));
        for (int d = 0; d < nd; ++d) src_coord[static_cast<std::size_t>(d)] = 0.5 * L[static_cast<std::size_t>(d)];
    }
    ex.src_coords = {src_coord};
    ex.src = seismic::locate_points(ex.model, ex.src_coords);

    const long nrec = cfg.at("receivers").get<long>();
    for (long p = 0; p < nrec; ++p) {
        std::vector<double> c(static_cast<std::size_t>(nd));
        if (nd > 1) c[0] = 0.7 * L[0];
        for (int d = 1; d + 1 < nd; ++d) c[static_cast<std::size_t>(d)] = 0.5 * L[static_cast<std::size_t>(d)];
        const double frac =
            nrec == 1 ? 0.5 : 0.1 + 0.8 * static_cast<double>(p) / static_cast<double>(nrec - 1);
        c[static_cast<std::size_t>(nd - 1)] = frac * L[static_cast<std::size_t>(nd - 1)];
        ex.rec_coords.push_back(c);
    }
    ex.rec = seismic::locate_points(ex.model, ex.rec_coords);

    const double f0 = cfg.at("f0").get<double>();
    const double t0_cfg = cfg.at("t0").get<double>();
    ex.trace = seismic::ricker(f0, t0_cfg > 0 ? t0_cfg : 1.2 / f0, ex.nt, ex.dt);
    const double amplitude = cfg.at("amplitude").get<double>();
    for (double& v : ex.trace) v *= amplitude;

    ex.run.plan.parallel = cfg.at("parallel").get<bool>();
    ex.run.plan.simd = cfg.at("simd").get<bool>();
    ex.block_mode = cfg.at("block_mode").get<std::string>();
    if (ex.block_mode == "off") {
        ex.run.plan.blocking = codegen::CodegenPlan::Blocking::Off;
    } else if (ex.block_mode == "fixed") {
        ex.run.plan.blocking = codegen::CodegenPlan::Blocking::Fixed;
        ex.run.plan.fixed_blocks = cfg.at("fixed_blocks").get<std::vector<long>>();
    } else if (ex.block_mode == "best-guess" || ex.block_mode == "autotune") {
        ex.run.plan.blocking = codegen::CodegenPlan::Blocking::RuntimeParam;
        ex.run.blocks = cfg.at("blocks").get<std::vector<long>>();
    } else {
        throw std::runtime_error("unknown block_mode '" + ex.block_mode +
                                 "' (off | fixed | best-guess | autotune)");
    }
    const std::string preset = cfg.at("preset").get<std::string>();
    if (preset == "generic")
        ex.run.preset = runtime::preset_generic();
    else if (preset == "portable")
        ex.run.preset = runtime::preset_portable();
    else
        throw std::runtime_error("unknown preset '" + preset + "' (generic | portable)");
    return ex;
}

/// Times every candidate on a truncated forward problem with scratch
/// buffers; the material fields are real so the arithmetic is typical.
runtime::TuningResult tune_blocks(const Experiment& ex, json& tuning_info,
                                  codegen::GeneratedSource* meta_out = nullptr) {
    const long tnt = runtime::tune_nt(ex.nt, 2);
    const lower::KernelIR ir = seismic::build_forward_ir(
        ex.model, ex.src.npoints, ex.rec.npoints, tnt, ex.dt, false);
    const codegen::GeneratedSource src = codegen::generate(ir, ex.run.plan);
    const runtime::CompiledKernel kernel = runtime::compile_and_load(src, ex.run.preset);

    runtime::KernelArgs args(src);
    std::vector<runtime::GridBuffer> grids;
    std::vector<std::vector<long>> longs;
    std::vector<std::vector<double>> doubles;
    for (const codegen::Arg& a : src.args) {
        const bool is_src = a.name.rfind("src", 0) == 0;
        switch (a.kind) {
            case codegen::Arg::Kind::Grid: {
                runtime::GridBuffer g = runtime::GridBuffer::allocate({a.count});
                if (a.name == "m_vec")
                    std::memcpy(g.data(), ex.model.m.data(), static_cast<std::size_t>(a.count) * 8);
                if (a.name == "damp_vec")
                    std::memcpy(g.data(), ex.model.damp.data(),
                                static_cast<std::size_t>(a.count) * 8);
                args.set(a.name, g.data(), a.count);
                grids.push_back(std::move(g));
                break;
            }
            case codegen::Arg::Kind::SparseIndex:
                longs.push_back(is_src ? ex.src.idx : ex.rec.idx);
                args.set(a.name, longs.back().data(), a.count);
                break;
            case codegen::Arg::Kind::SparseWeight:
                doubles.push_back(is_src ? ex.src.w : ex.rec.w);
                args.set(a.name, doubles.back().data(), a.count);
                break;
            case codegen::Arg::Kind::SparseData:
                doubles.emplace_back(static_cast<std::size_t>(a.count), 0.0);
                args.set(a.name, doubles.back().data(), a.count);
                break;
            case codegen::Arg::Kind::BlockSize:
                break;
        }
    }

    std::vector<std::vector<long>> candidates;
    for (const json& c : ex.cfg.at("candidates")) candidates.push_back(c.get<std::vector<long>>());
    if (candidates.empty()) {
        const int nb = codegen::blocked_dims(ir.ndim());
        const std::vector<long> blocked(ir.extents.begin(), ir.extents.begin() + nb);
        candidates = runtime::default_candidates(blocked);
    }

    const runtime::TuningResult result = runtime::autotune(kernel, args, candidates);
    tuning_info["tuning_nt"] = tnt;
    tuning_info["trials"] = json::array();
    for (const auto& trial : result.trials) {
        json t;
        t["blocks"] = trial.blocks;
        t["seconds"] = trial.seconds;
        t["ok"] = trial.ok;
        if (!trial.error.empty()) t["error"] = trial.error;
        tuning_info["trials"].push_back(t);
    }
    tuning_info["chosen"] = result.chosen;
    if (meta_out) *meta_out = src;
    return result;
}

void write_summary(const fs::path& out_dir, const json& summary) {
    std::ofstream(out_dir / "summary.json") << summary.dump(2) << "\n";
}

int cmd_codegen(const json& patch, const fs::path& out_dir, bool to_stdout) {
    Experiment ex = build_experiment(patch);
    const std::string kind = ex.cfg.at("kernel").get<std::string>();
    lower::KernelIR ir = [&] {
        if (kind == "forward")
            return seismic::build_forward_ir(ex.model, ex.src.npoints, ex.rec.npoints, ex.nt,
                                             ex.dt, ex.cfg.at("save").get<bool>());
        if (kind == "adjoint")
            return seismic::build_adjoint_ir(ex.model, ex.src.npoints, ex.rec.npoints, ex.nt,
                                             ex.dt);
        if (kind == "gradient")
            return seismic::build_gradient_ir(ex.model, ex.rec.npoints, ex.nt, ex.dt);
        throw std::runtime_error("unknown kernel '" + kind +
                                 "' (forward | adjoint | gradient)");
    }();
    const codegen::GeneratedSource src = codegen::generate(ir, ex.run.plan);

    const fs::path file = out_dir / (src.name + ".c");
    std::ofstream(file) << src.source;
    if (to_stdout) std::cout << src.source;

    json summary;
    summary["command"] = "codegen";
    summary["passed"] = true;
    summary["entry"] = src.name;
    summary["file"] = file.string();
    summary["plan"] = plan_name(ex.run.plan);
    summary["flops_per_point"] = src.flops_per_point;
    summary["bytes_per_point"] = src.bytes_per_point;
    summary["interior_points"] = src.interior_points;
    summary["steps"] = src.steps;
    summary["args"] = json::array();
    for (const codegen::Arg& a : src.args)
        summary["args"].push_back({{"name", a.name}, {"ctype", a.ctype}, {"count", a.count}});
    write_summary(out_dir, summary);
    std::cerr << "wrote " << file.string() << " (" << src.flops_per_point << " flops/point)\n";
    return 0;
}

int cmd_run(const json& patch, const fs::path& out_dir) {
    Experiment ex = build_experiment(patch);
    json summary;
    summary["command"] = "run";

    if (ex.block_mode == "autotune") {
        json tuning;
        ex.run.blocks = tune_blocks(ex, tuning).chosen;
        summary["tuning"] = tuning;
    }

    const bool save = ex.cfg.at("save").get<bool>();
    const seismic::ForwardResult f = seismic::forward(ex.model, ex.src, ex.trace, ex.rec,
                                                      ex.nt, ex.dt, save, ex.run);

    seismic::save_record(f.record, ex.rec_coords, (out_dir / "record").string());
    const long slots = save ? seismic::history_rows(ex.nt) : 3;
    std::vector<long> shape{slots};
    shape.insert(shape.end(), ex.model.padded.begin(), ex.model.padded.end());
    runtime::dump_grid(f.u.data(), shape, ex.model.halo(), slots,
                       (out_dir / "wavefield").string());

    double record_peak = 0, field_peak = 0;
    for (double v : f.record.data) record_peak = std::max(record_peak, std::abs(v));
    for (double v : f.u) field_peak = std::max(field_peak, std::abs(v));

    summary["passed"] = true;
    summary["entry"] = f.source.name;
    summary["plan"] = plan_name(ex.run.plan);
    summary["blocks"] = ex.run.blocks;
    summary["nt"] = ex.nt;
    summary["dt"] = ex.dt;
    summary["save"] = save;
    summary["seconds"] = f.stats.seconds;
    summary["gflops"] = f.stats.gflops;
    summary["flops_per_point"] = f.source.flops_per_point;
    summary["bytes_per_point"] = f.source.bytes_per_point;
    summary["record_peak"] = record_peak;
    summary["wavefield_peak"] = field_peak;
    summary["record"] = (out_dir / "record.bin").string();
    summary["wavefield"] = (out_dir / "wavefield.bin").string();
    write_summary(out_dir, summary);

    std::cout << f.source.name << ": nt " << ex.nt << ", dt " << ex.dt << ", " << f.stats.seconds
              << " s, " << f.stats.gflops << " GFLOP/s, record peak " << record_peak << "\n";
    return 0;
}

int cmd_verify(const std::string& suite, const json& patch, const fs::path& out_dir) {
    json summary;
    summary["command"] = "verify";
    summary["suite"] = suite;
    std::vector<std::string> lines;
    std::vector<std::string> csv_header;
    std::vector<std::vector<std::string>> csv_rows;
    bool passed = false;

    const auto fmt = [](double v) {
        std::ostringstream s;
        s.precision(3);
        s << std::scientific << v;
        return s.str();
    };

    if (suite == "adjoint") {
        verify::AdjointConfig cfg;
        maybe(patch, "interior", cfg.interior);
        maybe(patch, "h", cfg.h);
        maybe(patch, "nbpml", cfg.nbpml);
        maybe(patch, "space_order", cfg.space_order);
        maybe(patch, "velocity", cfg.velocity);
        maybe(patch, "nt", cfg.nt);
        maybe(patch, "f0", cfg.f0);
        maybe(patch, "receivers", cfg.nrec);
        maybe(patch, "seed", cfg.seed);
        const verify::AdjointReport r = verify::adjoint_test(cfg);
        passed = r.passed;
        lines.push_back(verify::to_json_line(r));
        csv_header = {"descriptor", "forward_product", "adjoint_product", "rel_discrepancy",
                      "passed"};
        csv_rows.push_back({r.descriptor, fmt(r.forward_product), fmt(r.adjoint_product),
                            fmt(r.rel_discrepancy), r.passed ? "1" : "0"});
        summary["rel_discrepancy"] = r.rel_discrepancy;
        std::cout << "adjoint " << r.descriptor << ": rel " << fmt(r.rel_discrepancy) << " "
                  << (r.passed ? "PASS" : "FAIL") << "\n";
    } else if (suite == "taylor") {
        verify::TaylorConfig cfg;
        maybe(patch, "interior", cfg.interior);
        maybe(patch, "h", cfg.h);
        maybe(patch, "nbpml", cfg.nbpml);
        maybe(patch, "space_order", cfg.space_order);
        maybe(patch, "velocity", cfg.velocity);
        maybe(patch, "f0", cfg.f0);
        maybe(patch, "time", cfg.sim_time);
        maybe(patch, "seed", cfg.seed);
        const verify::TaylorReport r = verify::taylor_test(cfg);
        passed = r.passed;
        lines.push_back(verify::to_json_line(r));
        csv_header = {"step", "e0", "e1", "excluded"};
        for (const verify::TaylorPoint& p : r.points)
            csv_rows.push_back({fmt(p.step), fmt(p.e0), fmt(p.e1), p.excluded ? "1" : "0"});
        summary["slope0"] = r.slope0;
        summary["slope1"] = r.slope1;
        std::cout << "taylor: slope0 " << r.slope0 << ", slope1 " << r.slope1 << " "
                  << (r.passed ? "PASS" : "FAIL") << "\n";
    } else {
        verify::EquivalenceConfig cfg;
        maybe(patch, "interior", cfg.interior);
        maybe(patch, "h", cfg.h);
        maybe(patch, "nbpml", cfg.nbpml);
        maybe(patch, "space_order", cfg.space_order);
        maybe(patch, "velocity", cfg.velocity);
        maybe(patch, "nt", cfg.nt);
        maybe(patch, "f0", cfg.f0);
        maybe(patch, "seed", cfg.seed);
        const verify::EquivalenceReport r = verify::equivalence_suite(cfg);
        passed = r.passed;
        lines.push_back(verify::to_json_line(r));
        csv_header = {"plan", "max_error", "bitwise", "passed"};
        for (const verify::EquivalenceVariant& v : r.variants) {
            csv_rows.push_back(
                {v.plan, fmt(v.max_error), v.bitwise ? "1" : "0", v.passed ? "1" : "0"});
            std::cout << "equivalence " << v.plan << ": max " << fmt(v.max_error) << " "
                      << (v.passed ? "PASS" : "FAIL") << "\n";
        }
        std::cout << "equivalence overall: " << (r.passed ? "PASS" : "FAIL") << "\n";
    }

    verify::write_json_lines((out_dir / "report.jsonl").string(), lines);
    verify::write_csv((out_dir / "report.csv").string(), csv_header, csv_rows);
    summary["passed"] = passed;
    summary["report"] = (out_dir / "report.jsonl").string();
    write_summary(out_dir, summary);
    return passed ? 0 : 1;
}

int cmd_bench(const json& patch, const fs::path& out_dir) {
    Experiment ex = build_experiment(patch);
    json summary;
    summary["command"] = "bench";
    summary["mode"] = ex.block_mode;

    std::vector<verify::RooflineRow> rows;
    const std::string plan = plan_name(ex.run.plan);

    if (ex.block_mode == "autotune") {
        json tuning;
        codegen::GeneratedSource tune_meta;
        const runtime::TuningResult result = tune_blocks(ex, tuning, &tune_meta);
        summary["tuning"] = tuning;
        const double work = static_cast<double>(tune_meta.flops_per_point) *
                            static_cast<double>(tune_meta.interior_points) *
                            static_cast<double>(tune_meta.steps);
        for (const auto& trial : result.trials) {
            if (!trial.ok) continue;
            runtime::RunStats stats;
            stats.seconds = trial.seconds;
            stats.gflops = work / trial.seconds / 1e9;
            rows.push_back(verify::roofline_row(tune_meta, stats, plan, trial.blocks));
        }
        ex.run.blocks = result.chosen;
        summary["chosen"] = result.chosen;
        summary["chosen_source"] = "autotuned";
        std::cout << "chosen blocks: " << format_blocks(result.chosen) << " (autotuned, "
                  << result.trials.size() << " trials)\n";
    } else if (ex.block_mode == "best-guess") {
        const lower::KernelIR ir = seismic::build_forward_ir(
            ex.model, ex.src.npoints, ex.rec.npoints, ex.nt, ex.dt, false);
        const int nb = codegen::blocked_dims(ir.ndim());
        const std::vector<long> blocked(ir.extents.begin(), ir.extents.begin() + nb);
        const long cache_bytes = 32 * 1024;
        ex.run.blocks =
            runtime::best_guess_block(ir.halo, blocked, ir.extents.back(), 3, cache_bytes);
        summary["chosen"] = ex.run.blocks;
        summary["chosen_source"] = "best-guess";
        summary["cache_bytes"] = cache_bytes;
        std::cout << "chosen blocks: " << format_blocks(ex.run.blocks) << " (best guess)\n";
    }

    const seismic::ForwardResult f = seismic::forward(ex.model, ex.src, ex.trace, ex.rec, ex.nt,
                                                      ex.dt, false, ex.run);
    rows.push_back(verify::roofline_row(f.source, f.stats, plan, ex.run.blocks));
    std::cout << f.source.name << ": " << f.stats.seconds << " s, " << f.stats.gflops
              << " GFLOP/s, intensity " << rows.back().intensity << "\n";

    std::vector<std::string> lines;
    std::vector<std::vector<std::string>> csv_rows;
    for (const verify::RooflineRow& row : rows) {
        lines.push_back(verify::to_json_line(row));
        std::ostringstream sec, gf, oi;
        sec << row.seconds;
        gf << row.gflops;
        oi << row.intensity;
        csv_rows.push_back(
            {row.kernel, row.plan, format_blocks(row.blocks), sec.str(), gf.str(), oi.str()});
    }
    verify::write_json_lines((out_dir / "bench.jsonl").string(), lines);
    verify::write_csv((out_dir / "bench.csv").string(),
                      {"kernel", "plan", "blocks", "seconds", "gflops", "intensity"}, csv_rows);

    summary["passed"] = true;
    summary["rows"] = rows.size();
    summary["seconds"] = f.stats.seconds;
    summary["gflops"] = f.stats.gflops;
    write_summary(out_dir, summary);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"finite-difference stencil compiler driver"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "sfd-out";
    std::vector<std::string> sets;
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--set", sets, "override config entries, dot.path=value");
    app.add_option("--out", out_dir, "output directory (created if missing)");

    CLI::App* cg = app.add_subcommand("codegen", "emit kernel C source");
    bool to_stdout = false;
    cg->add_flag("--stdout", to_stdout, "also print the source to stdout");
    cg->fallthrough();
    CLI::App* run = app.add_subcommand("run", "run the forward operator and dump results");
    run->fallthrough();
    CLI::App* verify_cmd = app.add_subcommand("verify", "run a verification suite");
    std::string suite;
    verify_cmd->add_option("suite", suite, "adjoint | taylor | equivalence")
        ->required()
        ->check(CLI::IsMember({"adjoint", "taylor", "equivalence"}));
    verify_cmd->fallthrough();
    CLI::App* bench = app.add_subcommand("bench", "time block choices and report roofline rows");
    bench->fallthrough();

    CLI11_PARSE(app, argc, argv);

    fs::path out(out_dir);
    try {
        fs::create_directories(out);
        const json patch = build_patch(config_path, sets);
        if (cg->parsed()) return cmd_codegen(patch, out, to_stdout);
        if (run->parsed()) return cmd_run(patch, out);
        if (verify_cmd->parsed()) return cmd_verify(suite, patch, out);
        if (bench->parsed()) return cmd_bench(patch, out);
    } catch (const std::exception& e) {
        std::cerr << "refused: " << e.what() << "\n";
        json summary;
        summary["command"] = "error";
        summary["passed"] = false;
        summary["error"] = e.what();
        std::error_code ec;
        fs::create_directories(out, ec);
        if (!ec) write_summary(out, summary);
        return 2;
    }
    return 2;
}
