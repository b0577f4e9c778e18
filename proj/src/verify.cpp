#include "stencilfd/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "stencilfd/interpreter.hpp"

namespace sfd::verify {

using seismic::ForwardResult;
using seismic::ShotRecord;
using seismic::SparsePoints;
using seismic::VelocityModel;

namespace {

std::vector<double> axis_lengths(const std::vector<long>& interior, double h) {
    std::vector<double> L(interior.size());
    for (std::size_t d = 0; d < interior.size(); ++d)
        L[d] = static_cast<double>(interior[d] - 1) * h;
    return L;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double peak_abs(const std::vector<double>& v) {
    double p = 0.0;
    for (double x : v) p = std::max(p, std::abs(x));
    return p;
}

/// Max per-point error between two equal-size arrays, relative to the larger
/// magnitude at that point, floored at 1e-3 of the reference peak.
double max_pointwise_error(const std::vector<double>& ref, const std::vector<double>& got) {
    const double floor = std::max(1e-3 * peak_abs(ref), 1e-300);
    double worst = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        const double denom = std::max({std::abs(ref[i]), std::abs(got[i]), floor});
        worst = std::max(worst, std::abs(ref[i] - got[i]) / denom);
    }
    return worst;
}

std::string plan_name(bool parallel, bool simd, bool blocked) {
    std::string name;
    for (const auto& [on, part] :
         {std::pair{parallel, "parallel"}, {simd, "simd"}, {blocked, "blocked"}}) {
        if (!on) continue;
        if (!name.empty()) name += '+';
        name += part;
    }
    return name.empty() ? "all-off" : name;
}

}  // namespace

std::vector<double> band_limited_noise(unsigned seed, long nt, double dt, double f0) {
    if (nt <= 0 || dt <= 0 || f0 <= 0)
        throw std::invalid_argument("band_limited_noise: nt, dt and f0 must be positive");
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::vector<double> noise(static_cast<std::size_t>(nt));
    for (double& v : noise) v = uni(rng);

    const long half = std::max<long>(1, std::lround(1.5 / (f0 * dt)));
    std::vector<double> w(static_cast<std::size_t>(2 * half + 1));
    for (long k = -half; k <= half; ++k) {
        const double a = std::pow(std::numbers::pi * f0 * static_cast<double>(k) * dt, 2);
        w[static_cast<std::size_t>(k + half)] = (1.0 - 2.0 * a) * std::exp(-a);
    }

    std::vector<double> out(static_cast<std::size_t>(nt), 0.0);
    for (long t = 0; t < nt; ++t)
        for (long k = -half; k <= half; ++k) {
            const long s = t - k;
            if (s < 0 || s >= nt) continue;
            out[static_cast<std::size_t>(t)] +=
                w[static_cast<std::size_t>(k + half)] * noise[static_cast<std::size_t>(s)];
        }
    const double p = peak_abs(out);
    if (p > 0)
        for (double& v : out) v /= p;
    return out;
}

double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("fit_loglog_slope: need two or more paired points");
    std::vector<double> lx(x.size()), ly(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] <= 0 || y[i] <= 0)
            throw std::invalid_argument("fit_loglog_slope: inputs must be positive");
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= static_cast<double>(lx.size());
    my /= static_cast<double>(lx.size());
    double num = 0, den = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        num += (lx[i] - mx) * (ly[i] - my);
        den += (lx[i] - mx) * (lx[i] - mx);
    }
    return num / den;
}

AdjointReport adjoint_test(const AdjointConfig& cfg) {
    const VelocityModel model = seismic::make_constant_model(cfg.interior, cfg.h, cfg.nbpml,
                                                             cfg.space_order, cfg.velocity);
    const double dt = 0.9 * seismic::critical_dt(model);
    const int nd = model.ndim();
    const std::vector<double> L = axis_lengths(cfg.interior, cfg.h);

    std::vector<double> src_coord(static_cast<std::size_t>(nd));
    for (int d = 0; d < nd; ++d)
        src_coord[static_cast<std::size_t>(d)] = 0.3 * L[static_cast<std::size_t>(d)] +
                                                 0.25 * cfg.h * static_cast<double>(d + 1);
    const SparsePoints src = seismic::locate_points(model, {src_coord});

    std::vector<std::vector<double>> rec_coords;
    for (long p = 0; p < cfg.nrec; ++p) {
        std::vector<double> c(static_cast<std::size_t>(nd));
        for (int d = 0; d + 1 < nd; ++d)
            c[static_cast<std::size_t>(d)] = 0.7 * L[static_cast<std::size_t>(d)];
        const double frac =
            cfg.nrec == 1 ? 0.5
                          : 0.15 + 0.7 * static_cast<double>(p) / static_cast<double>(cfg.nrec - 1);
        c[static_cast<std::size_t>(nd - 1)] =
            frac * L[static_cast<std::size_t>(nd - 1)] + 0.3 * cfg.h;
        rec_coords.push_back(c);
    }
    const SparsePoints rec = seismic::locate_points(model, rec_coords);

    const std::vector<double> x = band_limited_noise(cfg.seed, cfg.nt, dt, cfg.f0);
    ShotRecord y = seismic::zero_record(cfg.nt, dt, cfg.nrec);
    for (long p = 0; p < cfg.nrec; ++p) {
        const std::vector<double> row =
            band_limited_noise(cfg.seed + 1 + static_cast<unsigned>(p), cfg.nt, dt, cfg.f0);
        for (long t = 0; t < cfg.nt; ++t)
            y.data[static_cast<std::size_t>(t * cfg.nrec + p)] =
                row[static_cast<std::size_t>(t)];
    }

    const ForwardResult fwd = seismic::forward(model, src, x, rec, cfg.nt, dt, false, cfg.run);
    const seismic::AdjointResult adj =
        seismic::adjoint(model, rec, y, src, cfg.nt, dt, cfg.run);

    AdjointReport report;
    std::ostringstream desc;
    desc << nd << "D ";
    for (int d = 0; d < nd; ++d) desc << (d ? "x" : "") << cfg.interior[static_cast<std::size_t>(d)];
    desc << " order " << cfg.space_order << " nt " << cfg.nt;
    report.descriptor = desc.str();
    report.forward_product = dot(fwd.record.data, y.data);
    report.adjoint_product = dot(x, adj.src_samples.data);
    report.abs_discrepancy = std::abs(report.forward_product - report.adjoint_product);
    report.rel_discrepancy =
        report.abs_discrepancy / std::max(std::abs(report.forward_product), 1e-300);
    report.passed = report.rel_discrepancy < 1e-10;
    return report;
}

TaylorReport taylor_test(const TaylorConfig& cfg) {
    const VelocityModel model = seismic::make_constant_model(cfg.interior, cfg.h, cfg.nbpml,
                                                             cfg.space_order, cfg.velocity);
    const double dt = 0.5 * seismic::critical_dt(model);
    const long nt = std::max<long>(8, std::lround(cfg.sim_time / dt));
    const int nd = model.ndim();
    const std::vector<double> L = axis_lengths(cfg.interior, cfg.h);
    const double m0 = 1.0 / (cfg.velocity * cfg.velocity);

    long interior_cells = 1;
    for (long n : cfg.interior) interior_cells *= n;
    if (!cfg.dm.empty() && static_cast<long>(cfg.dm.size()) != interior_cells)
        throw std::invalid_argument("taylor_test: dm must match the interior shape");

    // Gaussian blob perturbations: dm for the test direction, a second blob
    // for the synthetic true model the observed data comes from.
    const auto blob = [&](double amp, const std::vector<double>& center_frac, double width_frac) {
        std::vector<double> field(static_cast<std::size_t>(interior_cells));
        std::vector<long> idx(static_cast<std::size_t>(nd), 0);
        for (long cell = 0; cell < interior_cells; ++cell) {
            double r2 = 0.0;
            for (int d = 0; d < nd; ++d) {
                const double n = static_cast<double>(cfg.interior[static_cast<std::size_t>(d)]);
                const double c = center_frac[static_cast<std::size_t>(d)] * (n - 1.0);
                const double s = width_frac * n;
                const double q = (static_cast<double>(idx[static_cast<std::size_t>(d)]) - c) / s;
                r2 += q * q;
            }
            field[static_cast<std::size_t>(cell)] = amp * std::exp(-r2);
            for (int d = nd - 1; d >= 0; --d) {
                if (++idx[static_cast<std::size_t>(d)] <
                    cfg.interior[static_cast<std::size_t>(d)])
                    break;
                idx[static_cast<std::size_t>(d)] = 0;
            }
        }
        return field;
    };
    const std::vector<double> dm = cfg.dm.empty()
                                       ? blob(0.02 * m0, {0.40, 0.55, 0.50}, 0.12)
                                       : cfg.dm;

    std::vector<double> src_coord(static_cast<std::size_t>(nd));
    src_coord[0] = 0.18 * L[0];
    for (int d = 1; d < nd; ++d) src_coord[static_cast<std::size_t>(d)] = 0.45 * L[static_cast<std::size_t>(d)];
    const SparsePoints src = seismic::locate_points(model, {src_coord});

    const long nrec = 6;
    std::vector<std::vector<double>> rec_coords;
    for (long p = 0; p < nrec; ++p) {
        std::vector<double> c(static_cast<std::size_t>(nd));
        c[0] = 0.85 * L[0];
        for (int d = 1; d + 1 < nd; ++d) c[static_cast<std::size_t>(d)] = 0.5 * L[static_cast<std::size_t>(d)];
        c[static_cast<std::size_t>(nd - 1)] =
            (0.1 + 0.8 * static_cast<double>(p) / static_cast<double>(nrec - 1)) *
            L[static_cast<std::size_t>(nd - 1)];
        rec_coords.push_back(c);
    }
    const SparsePoints rec = seismic::locate_points(model, rec_coords);
    const std::vector<double> wav = seismic::ricker(cfg.f0, 1.2 / cfg.f0, nt, dt);

    // Observed data from a model with its own anomaly, so the residual at the
    // baseline is nonzero.
    VelocityModel truth = model;
    seismic::add_interior(truth, blob(0.03 * m0, {0.62, 0.35, 0.50}, 0.10), 1.0, truth.m);
    const ShotRecord observed =
        seismic::forward(truth, src, wav, rec, nt, dt, false, cfg.run).record;

    const ForwardResult base = seismic::forward(model, src, wav, rec, nt, dt, true, cfg.run);
    TaylorReport report;
    ShotRecord resid;
    report.phi0 = seismic::objective(base.record, observed, &resid);
    const seismic::GradientResult grad =
        seismic::gradient(model, rec, resid, base.u, nt, dt, cfg.run);

    std::vector<double> dm_padded(static_cast<std::size_t>(model.cells()), 0.0);
    seismic::add_interior(model, dm, 1.0, dm_padded);
    report.gdot = dot(grad.grad, dm_padded);

    const double floor = 1e2 * std::numeric_limits<double>::epsilon() * report.phi0;
    for (double step : cfg.steps) {
        TaylorPoint point;
        point.step = step;
        try {
            VelocityModel perturbed = model;
            seismic::add_interior(perturbed, dm, step, perturbed.m);
            const double phi =
                seismic::objective(seismic::forward(perturbed, src, wav, rec, nt, dt, false,
                                                    cfg.run)
                                       .record,
                                   observed);
            point.e0 = std::abs(phi - report.phi0);
            point.e1 = std::abs(phi - report.phi0 - step * report.gdot);
            if (point.e0 < floor || point.e1 < floor) {
                point.excluded = true;
                point.note = "below noise floor";
            }
        } catch (const std::exception& e) {
            point.excluded = true;
            point.note = e.what();
        }
        report.points.push_back(point);
    }

    std::vector<double> hs, e0s, e1s;
    for (const TaylorPoint& p : report.points) {
        if (p.excluded) continue;
        hs.push_back(p.step);
        e0s.push_back(p.e0);
        e1s.push_back(p.e1);
    }
    if (hs.size() >= 2) {
        report.slope0 = fit_loglog_slope(hs, e0s);
        report.slope1 = fit_loglog_slope(hs, e1s);
        report.passed = std::abs(report.slope0 - 1.0) <= 0.1 &&
                        std::abs(report.slope1 - 2.0) <= 0.2;
    }
    return report;
}

EquivalenceReport equivalence_suite(const EquivalenceConfig& cfg) {
    const VelocityModel model = seismic::make_constant_model(cfg.interior, cfg.h, cfg.nbpml,
                                                             cfg.space_order, cfg.velocity);
    const double dt = 0.9 * seismic::critical_dt(model);
    const std::vector<double> L = axis_lengths(cfg.interior, cfg.h);
    const int nd = model.ndim();

    std::vector<double> src_coord(static_cast<std::size_t>(nd));
    for (int d = 0; d < nd; ++d)
        src_coord[static_cast<std::size_t>(d)] =
            (0.35 + 0.1 * static_cast<double>(d)) * L[static_cast<std::size_t>(d)] + 0.4 * cfg.h;
    const SparsePoints src = seismic::locate_points(model, {src_coord});

    const long nrec = 3;
    std::vector<std::vector<double>> rec_coords;
    for (long p = 0; p < nrec; ++p) {
        std::vector<double> c(static_cast<std::size_t>(nd));
        for (int d = 0; d + 1 < nd; ++d) c[static_cast<std::size_t>(d)] = 0.7 * L[static_cast<std::size_t>(d)];
        c[static_cast<std::size_t>(nd - 1)] =
            (0.2 + 0.3 * static_cast<double>(p)) * L[static_cast<std::size_t>(nd - 1)];
        rec_coords.push_back(c);
    }
    const SparsePoints rec = seismic::locate_points(model, rec_coords);
    const std::vector<double> trace = band_limited_noise(cfg.seed, cfg.nt, dt, cfg.f0);

    // Reference: tree-walking interpretation of the same lowered kernel.
    const lower::KernelIR ir = seismic::build_forward_ir(model, 1, nrec, cfg.nt, dt, false);
    const long cells = model.cells();
    std::vector<double> u_ref(static_cast<std::size_t>(3 * cells), 0.0);
    std::vector<double> m_field = model.m;
    std::vector<double> damp_field = model.damp;
    std::vector<double> src_data = trace;
    std::vector<double> rec_ref(static_cast<std::size_t>(cfg.nt * nrec), 0.0);
    interp::reference_interpret(
        ir,
        {{"u", u_ref.data()}, {"m", m_field.data()}, {"damp", damp_field.data()}},
        {{"src", {src.idx.data(), src.w.data(), src_data.data()}},
         {"rec", {rec.idx.data(), rec.w.data(), rec_ref.data()}}});

    EquivalenceReport report;
    report.passed = true;
    for (int parallel = 0; parallel < 2; ++parallel)
        for (int simd = 0; simd < 2; ++simd)
            for (int blocked = 0; blocked < 2; ++blocked) {
                seismic::RunConfig run;
                run.plan.parallel = parallel != 0;
                run.plan.simd = simd != 0;
                run.plan.blocking = blocked ? codegen::CodegenPlan::Blocking::RuntimeParam
                                            : codegen::CodegenPlan::Blocking::Off;
                const ForwardResult f =
                    seismic::forward(model, src, trace, rec, cfg.nt, dt, false, run);
                EquivalenceVariant v;
                v.plan = plan_name(parallel, simd, blocked);
                v.max_error = std::max(max_pointwise_error(u_ref, f.u),
                                       max_pointwise_error(rec_ref, f.record.data));
                v.passed = v.max_error <= 1e-10;
                report.passed = report.passed && v.passed;
                report.variants.push_back(v);
            }

    // The no-optimization build under the bit-stable preset must reproduce
    // the interpreter exactly.
    seismic::RunConfig portable;
    portable.plan = codegen::CodegenPlan::all_off();
    portable.preset = runtime::preset_portable();
    const ForwardResult exact =
        seismic::forward(model, src, trace, rec, cfg.nt, dt, false, portable);
    EquivalenceVariant v;
    v.plan = "all-off+portable";
    v.bitwise = exact.u.size() == u_ref.size() &&
                std::memcmp(exact.u.data(), u_ref.data(), u_ref.size() * 8) == 0 &&
                exact.record.data.size() == rec_ref.size() &&
                std::memcmp(exact.record.data.data(), rec_ref.data(), rec_ref.size() * 8) == 0;
    v.max_error = v.bitwise ? 0.0 : std::max(max_pointwise_error(u_ref, exact.u),
                                             max_pointwise_error(rec_ref, exact.record.data));
    v.passed = v.bitwise;
    report.passed = report.passed && v.passed;
    report.variants.push_back(v);
    return report;
}

RooflineRow roofline_row(const codegen::GeneratedSource& src, const runtime::RunStats& stats,
                         const std::string& plan, const std::vector<long>& blocks) {
    RooflineRow row;
    row.kernel = src.name;
    row.flops_per_point = static_cast<double>(src.flops_per_point);
    row.bytes_per_point = static_cast<double>(src.bytes_per_point);
    row.intensity = row.bytes_per_point > 0 ? row.flops_per_point / row.bytes_per_point : 0.0;
    row.seconds = stats.seconds;
    row.gflops = stats.gflops;
    row.plan = plan;
    row.blocks = blocks;
    return row;
}

std::string to_json_line(const AdjointReport& r) {
    nlohmann::json j;
    j["type"] = "adjoint";
    j["descriptor"] = r.descriptor;
    j["forward_product"] = r.forward_product;
    j["adjoint_product"] = r.adjoint_product;
    j["abs_discrepancy"] = r.abs_discrepancy;
    j["rel_discrepancy"] = r.rel_discrepancy;
    j["passed"] = r.passed;
    return j.dump();
}

std::string to_json_line(const TaylorReport& r) {
    nlohmann::json j;
    j["type"] = "taylor";
    j["phi0"] = r.phi0;
    j["gdot"] = r.gdot;
    j["slope0"] = r.slope0;
    j["slope1"] = r.slope1;
    j["passed"] = r.passed;
    j["points"] = nlohmann::json::array();
    for (const TaylorPoint& p : r.points) {
        nlohmann::json q;
        q["step"] = p.step;
        q["e0"] = p.e0;
        q["e1"] = p.e1;
        q["excluded"] = p.excluded;
        if (!p.note.empty()) q["note"] = p.note;
        j["points"].push_back(q);
    }
    return j.dump();
}

std::string to_json_line(const EquivalenceReport& r) {
    nlohmann::json j;
    j["type"] = "equivalence";
    j["passed"] = r.passed;
    j["variants"] = nlohmann::json::array();
    for (const EquivalenceVariant& v : r.variants) {
        nlohmann::json q;
        q["plan"] = v.plan;
        q["max_error"] = v.max_error;
        q["bitwise"] = v.bitwise;
        q["passed"] = v.passed;
        j["variants"].push_back(q);
    }
    return j.dump();
}

std::string to_json_line(const RooflineRow& r) {
    nlohmann::json j;
    j["type"] = "roofline";
    j["kernel"] = r.kernel;
    j["flops_per_point"] = r.flops_per_point;
    j["bytes_per_point"] = r.bytes_per_point;
    j["intensity"] = r.intensity;
    j["seconds"] = r.seconds;
    j["gflops"] = r.gflops;
    j["plan"] = r.plan;
    j["blocks"] = r.blocks;
    return j.dump();
}

void write_json_lines(const std::string& path, const std::vector<std::string>& lines) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_json_lines: cannot open " + path);
    for (const std::string& line : lines) out << line << '\n';
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_csv: cannot open " + path);
    const auto emit = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
        out << '\n';
    };
    emit(header);
    for (const auto& row : rows) {
        if (row.size() != header.size())
            throw std::invalid_argument("write_csv: row width does not match header");
        emit(row);
    }
}

}  // namespace sfd::verify
