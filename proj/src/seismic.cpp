#include "stencilfd/seismic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "json.hpp"
#include "stencilfd/algebra.hpp"
#include "stencilfd/fd.hpp"
#include "stencilfd/grid_function.hpp"

namespace sfd::seismic {

namespace {

constexpr long kCacheBytes = 32 * 1024;
constexpr int kReadGrids = 3;  // wavefield, m, damp

long product(const std::vector<long>& v) {
    long p = 1;
    for (long e : v) p *= e;
    return p;
}

std::map<std::string, double> spacings(const VelocityModel& model, double dt) {
    return {{kSpaceSpacing, model.h}, {kTimeSpacing, dt}};
}

void check_dt(const VelocityModel& model, double dt) {
    if (dt <= 0) throw std::invalid_argument("dt must be positive");
    const double limit = critical_dt(model);
    if (dt > limit)
        throw std::invalid_argument("dt " + std::to_string(dt) +
                                    " exceeds the stable CFL limit " + std::to_string(limit));
}

void check_finite(const double* data, long n, const std::string& what) {
    for (long i = 0; i < n; ++i)
        if (!std::isfinite(data[i]))
            throw runtime::RuntimeError("non-finite value in " + what +
                                        " after the run (unstable step?)");
}

/// Damping profile along one axis of length extent.
std::vector<double> axis_damping(long extent, long nbpml, long halo, double h) {
    std::vector<double> out(static_cast<std::size_t>(extent), 0.0);
    if (nbpml <= 0) return out;
    const double c = 1.5 * std::log(1000.0) / (static_cast<double>(nbpml) * h);
    const auto taper = [&](double depth) {
        const double xi = std::clamp((static_cast<double>(nbpml) - depth) / nbpml, 0.0, 1.0);
        return c * (xi - std::sin(2.0 * std::numbers::pi * xi) / (2.0 * std::numbers::pi));
    };
    for (long i = 0; i < extent; ++i) {
        const long mirror = extent - 1 - i;
        const long edge = std::min(i, mirror);  // distance from the nearer outer face
        const double depth = static_cast<double>(edge - halo);  // halo clamps to the edge value
        out[static_cast<std::size_t>(i)] = taper(std::max(depth, 0.0));
    }
    return out;
}

/// Adds block sizes and shared grid arguments, runs and scans the results.
struct KernelRun {
    runtime::CompiledKernel kernel;
    runtime::KernelArgs args;

    KernelRun(const codegen::GeneratedSource& src, const RunConfig& cfg)
        : kernel(runtime::compile_and_load(src, cfg.preset)), args(src) {}

    void bind_blocks(const lower::KernelIR& ir, const RunConfig& cfg) {
        if (!args.has_blocks()) return;
        std::vector<long> blocks = cfg.blocks;
        if (blocks.empty()) {
            const int nb = codegen::blocked_dims(ir.ndim());
            const std::vector<long> blocked(ir.extents.begin(), ir.extents.begin() + nb);
            blocks = runtime::best_guess_block(ir.halo, blocked, ir.extents.back(), kReadGrids,
                                               kCacheBytes);
        }
        args.set_blocks(blocks);
    }

    runtime::RunStats run() { return runtime::run(kernel, args.argv()); }
};

void bind_sparse(runtime::KernelArgs& args, const std::string& set, std::vector<long>& idx,
                 std::vector<double>& w, std::vector<double>& data) {
    args.set(set + "_idx_vec", idx.data(), static_cast<long>(idx.size()));
    args.set(set + "_w_vec", w.data(), static_cast<long>(w.size()));
    args.set(set + "_data_vec", data.data(), static_cast<long>(data.size()));
}

}  // namespace

long VelocityModel::cells() const { return product(padded); }

double VelocityModel::m_min() const { return *std::min_element(m.begin(), m.end()); }

VelocityModel make_model(std::vector<long> interior, double h, long nbpml, int space_order,
                         const std::vector<double>& m_interior) {
    if (interior.empty()) throw std::invalid_argument("model needs at least one dimension");
    for (long e : interior)
        if (e < 3) throw std::invalid_argument("model interior extents must be at least 3");
    if (h <= 0) throw std::invalid_argument("grid spacing must be positive");
    if (nbpml < 0) throw std::invalid_argument("absorbing-layer width must be non-negative");
    if (space_order < 2 || space_order % 2 != 0)
        throw std::invalid_argument("space order must be a positive even number");
    if (static_cast<long>(m_interior.size()) != product(interior))
        throw std::invalid_argument("squared-slowness field does not match the interior shape");
    for (double v : m_interior)
        if (!(v > 0)) throw std::invalid_argument("squared slowness must be positive");

    VelocityModel model;
    model.interior = std::move(interior);
    model.h = h;
    model.nbpml = nbpml;
    model.space_order = space_order;
    const long pad = model.pad();
    for (long e : model.interior) model.padded.push_back(e + 2 * pad);

    const int nd = model.ndim();
    const long cells = model.cells();
    model.m.resize(static_cast<std::size_t>(cells));
    std::vector<long> pos(static_cast<std::size_t>(nd), 0);
    for (long cell = 0; cell < cells; ++cell) {
        long src = 0;
        for (int d = 0; d < nd; ++d) {
            const long clamped = std::clamp(pos[static_cast<std::size_t>(d)] - pad, 0L,
                                            model.interior[static_cast<std::size_t>(d)] - 1);
            src = src * model.interior[static_cast<std::size_t>(d)] + clamped;
        }
        model.m[static_cast<std::size_t>(cell)] = m_interior[static_cast<std::size_t>(src)];
        for (int d = nd - 1; d >= 0; --d) {
            if (++pos[static_cast<std::size_t>(d)] < model.padded[static_cast<std::size_t>(d)])
                break;
            pos[static_cast<std::size_t>(d)] = 0;
        }
    }
    model.damp = build_damping(model.padded, nbpml, model.halo(), h);
    return model;
}

VelocityModel make_constant_model(std::vector<long> interior, double h, long nbpml,
                                  int space_order, double velocity) {
    if (velocity <= 0) throw std::invalid_argument("velocity must be positive");
    const std::vector<double> m(static_cast<std::size_t>(product(interior)),
                                1.0 / (velocity * velocity));
    return make_model(std::move(interior), h, nbpml, space_order, m);
}

std::vector<double> build_damping(const std::vector<long>& padded, long nbpml, long halo,
                                  double h) {
    const int nd = static_cast<int>(padded.size());
    std::vector<std::vector<double>> axis;
    for (long e : padded) axis.push_back(axis_damping(e, nbpml, halo, h));

    const long cells = product(padded);
    std::vector<double> out(static_cast<std::size_t>(cells), 0.0);
    std::vector<long> pos(static_cast<std::size_t>(nd), 0);
    for (long cell = 0; cell < cells; ++cell) {
        double v = 0.0;
        for (int d = 0; d < nd; ++d)
            v = std::max(v, axis[static_cast<std::size_t>(d)]
                                [static_cast<std::size_t>(pos[static_cast<std::size_t>(d)])]);
        out[static_cast<std::size_t>(cell)] = v;
        for (int d = nd - 1; d >= 0; --d) {
            if (++pos[static_cast<std::size_t>(d)] < padded[static_cast<std::size_t>(d)]) break;
            pos[static_cast<std::size_t>(d)] = 0;
        }
    }
    return out;
}

std::vector<double> ricker(double f0, double t0, long nt, double dt) {
    if (f0 <= 0) throw std::invalid_argument("peak frequency must be positive");
    if (nt < 0) throw std::invalid_argument("sample count must be non-negative");
    std::vector<double> out(static_cast<std::size_t>(nt));
    for (long k = 0; k < nt; ++k) {
        const double tau = static_cast<double>(k) * dt - t0;
        const double a = std::numbers::pi * std::numbers::pi * f0 * f0 * tau * tau;
        out[static_cast<std::size_t>(k)] = (1.0 - 2.0 * a) * std::exp(-a);
    }
    return out;
}

double critical_dt(const VelocityModel& model) {
    double tap_sum = 0.0;
    for (const StencilTap& t : fd_coefficients(2, model.space_order))
        tap_sum += std::abs(t.weight.to_double());
    return 0.9 * 2.0 * model.h *
           std::sqrt(model.m_min() / (static_cast<double>(model.ndim()) * tap_sum));
}

SparsePoints locate_points(const VelocityModel& model,
                           const std::vector<std::vector<double>>& coords) {
    const int nd = model.ndim();
    SparsePoints pts;
    pts.npoints = static_cast<long>(coords.size());
    pts.ndim = nd;
    const int corners = 1 << nd;
    for (const std::vector<double>& c : coords) {
        if (static_cast<int>(c.size()) != nd)
            throw std::invalid_argument("coordinate dimensionality does not match the model");
        std::vector<double> alpha;
        for (int d = 0; d < nd; ++d) {
            const double span =
                static_cast<double>(model.interior[static_cast<std::size_t>(d)] - 1) * model.h;
            const double x = c[static_cast<std::size_t>(d)];
            if (x < 0.0 || x > span)
                throw std::invalid_argument("point coordinate " + std::to_string(x) +
                                            " lies outside the physical interior [0, " +
                                            std::to_string(span) + "]");
            double base = std::floor(x / model.h);
            double a = x / model.h - base;
            pts.idx.push_back(static_cast<long>(base) + model.pad());
            alpha.push_back(a);
        }
        for (int k = 0; k < corners; ++k) {
            double w = 1.0;
            for (int d = 0; d < nd; ++d) {
                const bool high = (k >> (nd - 1 - d)) & 1;
                w *= high ? alpha[static_cast<std::size_t>(d)]
                          : 1.0 - alpha[static_cast<std::size_t>(d)];
            }
            pts.w.push_back(w);
        }
    }
    return pts;
}

ShotRecord zero_record(long nt, double dt, long npoints) {
    ShotRecord r;
    r.nt = nt;
    r.dt = dt;
    r.npoints = npoints;
    r.data.assign(static_cast<std::size_t>(nt * npoints), 0.0);
    return r;
}

lower::KernelIR build_forward_ir(const VelocityModel& model, long nsrc, long nrec, long nt,
                                 double dt, bool save, const std::string& name) {
    const GridFunction u = make_grid_function("u", model.padded, model.space_order, 2, save,
                                              save ? history_rows(nt) : 0);
    const GridFunction m = make_grid_function("m", model.padded, model.space_order);
    const GridFunction damp = make_grid_function("damp", model.padded, model.space_order);
    const Equation pde = eq(m.at() * u.dt2() + damp.at() * u.dt(), laplace(u.at()));
    lower::KernelIR ir = lower::build_kernel_ir(name, {eq(u.forward(), solve_for(pde, u.forward()))},
                                                {u, m, damp}, spacings(model, dt), nt);

    ir.sparse_sets = {{"src", nsrc, model.ndim(), nt}, {"rec", nrec, model.ndim(), nt}};
    lower::SparseOp inject;
    inject.kind = lower::SparseOp::Kind::Inject;
    inject.set = 0;
    inject.grid = "u";
    inject.trace_offset = -1;
    inject.scale = dt * dt;
    inject.scale_divisor = "m";
    lower::SparseOp sample;
    sample.kind = lower::SparseOp::Kind::Sample;
    sample.set = 1;
    sample.grid = "u";
    sample.trace_offset = 0;
    ir.sparse_ops = {inject, sample};
    ir.validate();
    return ir;
}

lower::KernelIR build_adjoint_ir(const VelocityModel& model, long nsrc, long nrec, long nt,
                                 double dt, const std::string& name) {
    const GridFunction v = make_grid_function("v", model.padded, model.space_order, 2);
    const GridFunction m = make_grid_function("m", model.padded, model.space_order);
    const GridFunction damp = make_grid_function("damp", model.padded, model.space_order);
    // The transposed system flips the damping sign and marches backward.
    const Equation pde = eq(m.at() * v.dt2() - damp.at() * v.dt(), laplace(v.at()));
    lower::KernelIR ir =
        lower::build_kernel_ir(name, {eq(v.backward(), solve_for(pde, v.backward()))},
                               {v, m, damp}, spacings(model, dt), nt);

    ir.sparse_sets = {{"src", nsrc, model.ndim(), nt}, {"rec", nrec, model.ndim(), nt}};
    lower::SparseOp inject;
    inject.kind = lower::SparseOp::Kind::Inject;
    inject.set = 1;
    inject.grid = "v";
    inject.trace_offset = 0;
    inject.scale = dt * dt;
    inject.scale_divisor = "m";
    lower::SparseOp sample;
    sample.kind = lower::SparseOp::Kind::Sample;
    sample.set = 0;
    sample.grid = "v";
    sample.trace_offset = -1;
    ir.sparse_ops = {inject, sample};
    ir.validate();
    return ir;
}

lower::KernelIR build_gradient_ir(const VelocityModel& model, long nrec, long nt, double dt,
                                  const std::string& name) {
    const GridFunction v = make_grid_function("v", model.padded, model.space_order, 2);
    const GridFunction u =
        make_grid_function("u", model.padded, model.space_order, 2, true, history_rows(nt));
    const GridFunction m = make_grid_function("m", model.padded, model.space_order);
    const GridFunction damp = make_grid_function("damp", model.padded, model.space_order);
    const GridFunction grad = make_grid_function("grad", model.padded, model.space_order);

    const Equation pde = eq(m.at() * v.dt2() - damp.at() * v.dt(), laplace(v.at()));
    // Accumulates the objective-gradient term for the adjoint row finalized
    // on the previous backward step, so injected receiver data is included;
    // the remaining first-row term is added host-side after the run.
    const Expr utt =
        u.at() - intc(2) * time_shift(u.at(), -1) + time_shift(u.at(), -2);
    const Expr term =
        intc(-1) * pow_expr(symbol(kTimeSpacing), -2) * v.at() * utt;
    lower::KernelIR ir = lower::build_kernel_ir(
        name,
        {eq(v.backward(), solve_for(pde, v.backward())), eq(grad.at(), grad.at() + term)},
        {v, u, m, damp, grad}, spacings(model, dt), nt);

    ir.sparse_sets = {{"rec", nrec, model.ndim(), nt}};
    lower::SparseOp inject;
    inject.kind = lower::SparseOp::Kind::Inject;
    inject.set = 0;
    inject.grid = "v";
    inject.trace_offset = 0;
    inject.scale = dt * dt;
    inject.scale_divisor = "m";
    ir.sparse_ops = {inject};
    ir.validate();
    return ir;
}

ForwardResult forward(const VelocityModel& model, const SparsePoints& src,
                      const std::vector<double>& src_trace, const SparsePoints& rec, long nt,
                      double dt, bool save, const RunConfig& cfg) {
    check_dt(model, dt);
    if (static_cast<long>(src_trace.size()) != nt * src.npoints)
        throw std::invalid_argument("source trace must hold nt samples per source point");

    const lower::KernelIR ir = build_forward_ir(model, src.npoints, rec.npoints, nt, dt, save);
    const codegen::GeneratedSource source = codegen::generate(ir, cfg.plan);
    KernelRun run(source, cfg);

    const long cells = model.cells();
    const long u_rows = save ? history_rows(nt) : 3;
    runtime::GridBuffer u = runtime::GridBuffer::allocate(
        [&] {
            std::vector<long> shape{u_rows};
            shape.insert(shape.end(), model.padded.begin(), model.padded.end());
            return shape;
        }(),
        64, runtime::should_file_back(u_rows * cells * 8));

    std::vector<double> m = model.m;
    std::vector<double> damp = model.damp;
    std::vector<long> src_idx = src.idx;
    std::vector<double> src_w = src.w;
    std::vector<double> src_data = src_trace;
    std::vector<long> rec_idx = rec.idx;
    std::vector<double> rec_w = rec.w;
    std::vector<double> rec_data(static_cast<std::size_t>(nt * rec.npoints), 0.0);

    run.args.set("u_vec", u.data(), u_rows * cells);
    run.args.set("m_vec", m.data(), cells);
    run.args.set("damp_vec", damp.data(), cells);
    bind_sparse(run.args, "src", src_idx, src_w, src_data);
    bind_sparse(run.args, "rec", rec_idx, rec_w, rec_data);
    run.bind_blocks(ir, cfg);

    ForwardResult out;
    out.stats = run.run();
    out.saved = save;
    check_finite(u.data(), u.elements(), "the wavefield");
    check_finite(rec_data.data(), static_cast<long>(rec_data.size()), "the receiver record");
    out.u.assign(u.data(), u.data() + u.elements());
    out.record = zero_record(nt, dt, rec.npoints);
    out.record.data = std::move(rec_data);
    out.source = source;
    return out;
}

AdjointResult adjoint(const VelocityModel& model, const SparsePoints& rec,
                      const ShotRecord& residual, const SparsePoints& src, long nt, double dt,
                      const RunConfig& cfg) {
    check_dt(model, dt);
    if (residual.nt != nt || residual.npoints != rec.npoints ||
        static_cast<long>(residual.data.size()) != nt * rec.npoints)
        throw std::invalid_argument("residual record does not match nt and the receiver set");

    const lower::KernelIR ir = build_adjoint_ir(model, src.npoints, rec.npoints, nt, dt);
    const codegen::GeneratedSource source = codegen::generate(ir, cfg.plan);
    KernelRun run(source, cfg);

    const long cells = model.cells();
    runtime::GridBuffer v = runtime::GridBuffer::allocate([&] {
        std::vector<long> shape{3};
        shape.insert(shape.end(), model.padded.begin(), model.padded.end());
        return shape;
    }());

    std::vector<double> m = model.m;
    std::vector<double> damp = model.damp;
    std::vector<long> src_idx = src.idx;
    std::vector<double> src_w = src.w;
    std::vector<double> src_data(static_cast<std::size_t>(nt * src.npoints), 0.0);
    std::vector<long> rec_idx = rec.idx;
    std::vector<double> rec_w = rec.w;
    std::vector<double> rec_data = residual.data;

    run.args.set("v_vec", v.data(), 3 * cells);
    run.args.set("m_vec", m.data(), cells);
    run.args.set("damp_vec", damp.data(), cells);
    bind_sparse(run.args, "src", src_idx, src_w, src_data);
    bind_sparse(run.args, "rec", rec_idx, rec_w, rec_data);
    run.bind_blocks(ir, cfg);

    AdjointResult out;
    out.stats = run.run();
    check_finite(v.data(), v.elements(), "the adjoint field");
    check_finite(src_data.data(), static_cast<long>(src_data.size()), "the source samples");
    out.v.assign(v.data(), v.data() + v.elements());
    out.src_samples = zero_record(nt, dt, src.npoints);
    out.src_samples.data = std::move(src_data);
    out.source = source;
    return out;
}

GradientResult gradient(const VelocityModel& model, const SparsePoints& rec,
                        const ShotRecord& residual, const std::vector<double>& u_history,
                        long nt, double dt, const RunConfig& cfg) {
    check_dt(model, dt);
    if (residual.nt != nt || residual.npoints != rec.npoints ||
        static_cast<long>(residual.data.size()) != nt * rec.npoints)
        throw std::invalid_argument("residual record does not match nt and the receiver set");
    const long cells = model.cells();
    if (static_cast<long>(u_history.size()) != history_rows(nt) * cells)
        throw std::invalid_argument("wavefield history must come from a saved forward run");

    const lower::KernelIR ir = build_gradient_ir(model, rec.npoints, nt, dt);
    const codegen::GeneratedSource source = codegen::generate(ir, cfg.plan);
    KernelRun run(source, cfg);

    runtime::GridBuffer v = runtime::GridBuffer::allocate([&] {
        std::vector<long> shape{3};
        shape.insert(shape.end(), model.padded.begin(), model.padded.end());
        return shape;
    }());

    std::vector<double> u = u_history;
    std::vector<double> m = model.m;
    std::vector<double> damp = model.damp;
    std::vector<double> grad(static_cast<std::size_t>(cells), 0.0);
    std::vector<long> rec_idx = rec.idx;
    std::vector<double> rec_w = rec.w;
    std::vector<double> rec_data = residual.data;

    run.args.set("v_vec", v.data(), 3 * cells);
    run.args.set("u_vec", u.data(), history_rows(nt) * cells);
    run.args.set("m_vec", m.data(), cells);
    run.args.set("damp_vec", damp.data(), cells);
    run.args.set("grad_vec", grad.data(), cells);
    bind_sparse(run.args, "rec", rec_idx, rec_w, rec_data);
    run.bind_blocks(ir, cfg);

    GradientResult out;
    out.stats = run.run();

    // First-row term: the loop accumulates rows [3, nt); row 2 uses the
    // adjoint value written on the final step, so it is added here.
    // With zero initial conditions its u factor reduces to the row itself.
    const double* v2 = v.data() + (2 % 3) * cells;
    const double* u2 = u.data() + 2 * cells;
    const long halo = model.halo();
    std::vector<long> pos(static_cast<std::size_t>(model.ndim()), halo);
    const int nd = model.ndim();
    bool done = false;
    while (!done) {
        long cell = 0;
        for (int d = 0; d < nd; ++d)
            cell = cell * model.padded[static_cast<std::size_t>(d)] +
                   pos[static_cast<std::size_t>(d)];
        grad[static_cast<std::size_t>(cell)] -= v2[cell] * u2[cell] / (dt * dt);
        for (int d = nd - 1; d >= 0; --d) {
            if (++pos[static_cast<std::size_t>(d)] <
                model.padded[static_cast<std::size_t>(d)] - halo)
                break;
            pos[static_cast<std::size_t>(d)] = halo;
            if (d == 0) done = true;
        }
    }

    check_finite(grad.data(), cells, "the gradient");
    out.grad = std::move(grad);
    out.source = source;
    return out;
}

double objective(const ShotRecord& synthetic, const ShotRecord& observed, ShotRecord* residual) {
    if (synthetic.nt != observed.nt || synthetic.npoints != observed.npoints ||
        synthetic.data.size() != observed.data.size())
        throw std::invalid_argument("records disagree in shape");
    double phi = 0.0;
    if (residual) *residual = zero_record(synthetic.nt, synthetic.dt, synthetic.npoints);
    for (std::size_t i = 0; i < synthetic.data.size(); ++i) {
        const double d = synthetic.data[i] - observed.data[i];
        phi += d * d;
        if (residual) residual->data[i] = d;
    }
    return 0.5 * phi;
}

std::vector<double> restrict_interior(const VelocityModel& model,
                                      const std::vector<double>& padded_field) {
    if (static_cast<long>(padded_field.size()) != model.cells())
        throw std::invalid_argument("field does not match the padded shape");
    const int nd = model.ndim();
    const long pad = model.pad();
    std::vector<double> out(static_cast<std::size_t>(product(model.interior)));
    std::vector<long> pos(static_cast<std::size_t>(nd), 0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        long cell = 0;
        for (int d = 0; d < nd; ++d)
            cell = cell * model.padded[static_cast<std::size_t>(d)] +
                   pos[static_cast<std::size_t>(d)] + pad;
        out[i] = padded_field[static_cast<std::size_t>(cell)];
        for (int d = nd - 1; d >= 0; --d) {
            if (++pos[static_cast<std::size_t>(d)] < model.interior[static_cast<std::size_t>(d)])
                break;
            pos[static_cast<std::size_t>(d)] = 0;
        }
    }
    return out;
}

void add_interior(const VelocityModel& model, const std::vector<double>& interior_field,
                  double scale, std::vector<double>& padded_field) {
    if (static_cast<long>(interior_field.size()) != product(model.interior) ||
        static_cast<long>(padded_field.size()) != model.cells())
        throw std::invalid_argument("field shapes do not match the model");
    const int nd = model.ndim();
    const long pad = model.pad();
    std::vector<long> pos(static_cast<std::size_t>(nd), 0);
    for (std::size_t i = 0; i < interior_field.size(); ++i) {
        long cell = 0;
        for (int d = 0; d < nd; ++d)
            cell = cell * model.padded[static_cast<std::size_t>(d)] +
                   pos[static_cast<std::size_t>(d)] + pad;
        padded_field[static_cast<std::size_t>(cell)] += scale * interior_field[i];
        for (int d = nd - 1; d >= 0; --d) {
            if (++pos[static_cast<std::size_t>(d)] < model.interior[static_cast<std::size_t>(d)])
                break;
            pos[static_cast<std::size_t>(d)] = 0;
        }
    }
}

void save_model(const VelocityModel& model, const std::string& path_prefix) {
    nlohmann::json header;
    header["shape"] = model.interior;
    header["h"] = model.h;
    header["nbpml"] = model.nbpml;
    std::ofstream(path_prefix + ".json") << header.dump(2) << "\n";
    const std::vector<double> m = restrict_interior(model, model.m);
    std::ofstream bin(path_prefix + ".bin", std::ios::binary);
    bin.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!bin) throw runtime::RuntimeError("cannot write " + path_prefix + ".bin");
}

VelocityModel load_model(const std::string& path_prefix, int space_order) {
    std::ifstream meta(path_prefix + ".json");
    if (!meta) throw runtime::RuntimeError("cannot read " + path_prefix + ".json");
    const nlohmann::json header = nlohmann::json::parse(meta);
    const std::vector<long> shape = header.at("shape").get<std::vector<long>>();
    std::vector<double> m(static_cast<std::size_t>(product(shape)));
    std::ifstream bin(path_prefix + ".bin", std::ios::binary);
    bin.read(reinterpret_cast<char*>(m.data()),
             static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!bin) throw runtime::RuntimeError("cannot read " + path_prefix + ".bin");
    return make_model(shape, header.at("h").get<double>(), header.at("nbpml").get<long>(),
                      space_order, m);
}

void save_record(const ShotRecord& record, const std::vector<std::vector<double>>& coordinates,
                 const std::string& path_prefix) {
    nlohmann::json header;
    header["nt"] = record.nt;
    header["dt"] = record.dt;
    header["coordinates"] = coordinates;
    std::ofstream(path_prefix + ".json") << header.dump(2) << "\n";
    std::ofstream bin(path_prefix + ".bin", std::ios::binary);
    bin.write(reinterpret_cast<const char*>(record.data.data()),
              static_cast<std::streamsize>(record.data.size() * sizeof(double)));
    if (!bin) throw runtime::RuntimeError("cannot write " + path_prefix + ".bin");
}

ShotRecord load_record(const std::string& path_prefix,
                       std::vector<std::vector<double>>* coordinates) {
    std::ifstream meta(path_prefix + ".json");
    if (!meta) throw runtime::RuntimeError("cannot read " + path_prefix + ".json");
    const nlohmann::json header = nlohmann::json::parse(meta);
    ShotRecord r;
    r.nt = header.at("nt").get<long>();
    r.dt = header.at("dt").get<double>();
    const auto coords = header.at("coordinates").get<std::vector<std::vector<double>>>();
    r.npoints = static_cast<long>(coords.size());
    if (coordinates) *coordinates = coords;
    r.data.resize(static_cast<std::size_t>(r.nt * r.npoints));
    std::ifstream bin(path_prefix + ".bin", std::ios::binary);
    bin.read(reinterpret_cast<char*>(r.data.data()),
             static_cast<std::streamsize>(r.data.size() * sizeof(double)));
    if (!bin) throw runtime::RuntimeError("cannot read " + path_prefix + ".bin");
    return r;
}

}  // namespace sfd::seismic
