#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <random>

#include "doctest.h"
#include "stencilfd/seismic.hpp"

using namespace sfd;
using namespace sfd::seismic;

namespace {

VelocityModel small_model(int order = 4) {
    return make_constant_model({33, 33}, 15.0, 10, order, 1500.0);
}

double rel(double a, double b) {
    return std::abs(a - b) / std::max({1e-30, std::abs(a), std::abs(b)});
}

}  // namespace

TEST_SUITE_BEGIN("seismic");

TEST_CASE("models pad and replicate the slowness field") {
    std::vector<double> mi(9 * 7);
    for (std::size_t i = 0; i < mi.size(); ++i) mi[i] = 1e-6 * static_cast<double>(i + 1);
    const VelocityModel m = make_model({9, 7}, 10.0, 5, 4, mi);
    CHECK(m.pad() == 7);
    CHECK(m.padded == std::vector<long>{23, 21});
    CHECK(m.cells() == 23 * 21);

    const auto at = [&](long i, long j) { return m.m[static_cast<std::size_t>(i * 21 + j)]; };
    CHECK(at(7, 7) == mi[0]);                    // interior corner maps to (0, 0)
    CHECK(at(0, 0) == mi[0]);                    // edge replication into the corner
    CHECK(at(0, 10) == mi[3]);                   // clamped row, interior column 3
    CHECK(at(15, 20) == mi[8 * 7 + 6]);          // far corner
    CHECK(restrict_interior(m, m.m) == mi);      // padding round-trips

    CHECK_THROWS_AS(make_model({4}, 10.0, 2, 4, std::vector<double>(3, 1.0)),
                    std::invalid_argument);
    CHECK_THROWS_AS(make_model({4}, 10.0, 2, 4, std::vector<double>(4, -1.0)),
                    std::invalid_argument);
    CHECK_THROWS_AS(make_constant_model({9, 9}, 10.0, 2, 3, 1500.0), std::invalid_argument);
}

TEST_CASE("damping tapers smoothly from the outer edge to zero") {
    const long nbpml = 8, halo = 2;
    const std::vector<long> padded{8 + 2 * (nbpml + halo)};
    const std::vector<double> damp = build_damping(padded, nbpml, halo, 12.5);
    const double c = 1.5 * std::log(1000.0) / (nbpml * 12.5);

    CHECK(damp[halo] == doctest::Approx(c).epsilon(1e-12));      // outermost layer cell
    CHECK(damp[0] == damp[halo]);                                // halo extends the edge
    CHECK(damp[halo + nbpml] == 0.0);                            // taper reaches zero
    for (std::size_t i = halo + nbpml; i < damp.size() - halo - nbpml; ++i)
        CHECK(damp[i] == 0.0);                                   // interior is undamped
    for (long i = halo; i < halo + nbpml; ++i)
        CHECK(damp[static_cast<std::size_t>(i)] >
              damp[static_cast<std::size_t>(i + 1)]);            // monotone toward the edge
    CHECK(damp[damp.size() - 1 - halo] == doctest::Approx(c).epsilon(1e-12));

    // Corners take the per-dimension maximum.
    const std::vector<long> p2{24, 24};
    const std::vector<double> d2 = build_damping(p2, nbpml, halo, 12.5);
    CHECK(d2[2 * 24 + 12] == doctest::Approx(damp[2]).epsilon(1e-12));
    CHECK(d2[2 * 24 + 2] == doctest::Approx(damp[2]).epsilon(1e-12));
    CHECK(d2[5 * 24 + 3] ==
          doctest::Approx(std::max(damp[5], damp[3])).epsilon(1e-12));

    for (double v : build_damping({30}, 0, 2, 12.5)) CHECK(v == 0.0);
}

TEST_CASE("ricker wavelet peaks at one and vanishes at its roots") {
    const double f0 = 10.0, t0 = 0.1, dt = 1e-4;
    const std::vector<double> r = ricker(f0, t0, 2001, dt);
    CHECK(r[1000] == 1.0);  // t = t0 exactly on a sample

    const double root = 1.0 / (std::numbers::sqrt2 * std::numbers::pi * f0);
    const auto value_at = [&](double t) {
        const double a = std::numbers::pi * std::numbers::pi * f0 * f0 * (t - t0) * (t - t0);
        return (1.0 - 2.0 * a) * std::exp(-a);
    };
    CHECK(std::abs(value_at(t0 + root)) < 1e-15);
    CHECK(std::abs(value_at(t0 - root)) < 1e-15);
    // The grid samples bracketing each root change sign.
    const long k = static_cast<long>((t0 + root) / dt);
    CHECK(r[static_cast<std::size_t>(k)] * r[static_cast<std::size_t>(k + 1)] < 0.0);
}

TEST_CASE("critical time step follows the stability formula") {
    const VelocityModel m2 = make_constant_model({33, 33}, 15.0, 10, 2, 1500.0);
    // Order-2 taps sum to 4, so dt = 0.9 * 2 * 15 * sqrt(1 / (1500^2 * 8)).
    CHECK(critical_dt(m2) == doctest::Approx(0.9 * 15.0 / (1500.0 * std::numbers::sqrt2))
                                 .epsilon(1e-12));

    const VelocityModel m4 = make_constant_model({33, 33}, 15.0, 10, 4, 1500.0);
    CHECK(critical_dt(m4) / critical_dt(m2) ==
          doctest::Approx(std::sqrt(4.0 / (16.0 / 3.0))).epsilon(1e-12));

    const VelocityModel fast = make_constant_model({33, 33}, 15.0, 10, 2, 3000.0);
    CHECK(critical_dt(fast) == doctest::Approx(critical_dt(m2) / 2.0).epsilon(1e-12));
}

TEST_CASE("point location produces multilinear weights") {
    const VelocityModel m = small_model();

    const SparsePoints on_node = locate_points(m, {{15.0 * 4, 15.0 * 9}});
    CHECK(on_node.idx == std::vector<long>{4 + m.pad(), 9 + m.pad()});
    CHECK(on_node.w == std::vector<double>{1.0, 0.0, 0.0, 0.0});

    const SparsePoints mid = locate_points(m, {{15.0 * 4 + 7.5, 15.0 * 9 + 7.5}});
    for (double w : mid.w) CHECK(w == doctest::Approx(0.25).epsilon(1e-14));

    std::mt19937 rng(11);
    std::uniform_real_distribution<double> uni(0.0, 32.0 * 15.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const SparsePoints p = locate_points(m, {{uni(rng), uni(rng)}});
        double sum = 0.0;
        for (double w : p.w) {
            CHECK(w >= 0.0);
            CHECK(w <= 1.0);
            sum += w;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-15);
    }

    CHECK_THROWS_AS(locate_points(m, {{-1.0, 10.0}}), std::invalid_argument);
    CHECK_THROWS_AS(locate_points(m, {{10.0, 32.0 * 15.0 + 0.1}}), std::invalid_argument);
    CHECK_THROWS_AS(locate_points(m, {{10.0}}), std::invalid_argument);
}

TEST_CASE("injection and sampling share weights and are adjoint") {
    const VelocityModel m = small_model();
    const SparsePoints pts =
        locate_points(m, {{31.7, 130.4}, {240.0, 240.0}, {15.0 * 20, 15.0 * 6 + 3.3}});
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);

    // <inject(x), y> = <x, sample(y)> by brute force over the corner span.
    std::vector<double> field(static_cast<std::size_t>(m.cells()), 0.0);
    std::vector<double> y(static_cast<std::size_t>(m.cells()));
    for (double& v : y) v = uni(rng);
    std::vector<double> x{0.3, -1.2, 0.77};

    const long stride = m.padded[1];
    for (long p = 0; p < pts.npoints; ++p)
        for (int c = 0; c < 4; ++c) {
            const long i = pts.idx[p * 2] + ((c >> 1) & 1);
            const long j = pts.idx[p * 2 + 1] + (c & 1);
            field[static_cast<std::size_t>(i * stride + j)] +=
                pts.w[p * 4 + c] * x[static_cast<std::size_t>(p)];
        }
    double lhs = 0.0;
    for (std::size_t i = 0; i < field.size(); ++i) lhs += field[i] * y[i];

    double rhs = 0.0;
    for (long p = 0; p < pts.npoints; ++p) {
        double s = 0.0;
        for (int c = 0; c < 4; ++c) {
            const long i = pts.idx[p * 2] + ((c >> 1) & 1);
            const long j = pts.idx[p * 2 + 1] + (c & 1);
            s += pts.w[p * 4 + c] * y[static_cast<std::size_t>(i * stride + j)];
        }
        rhs += s * x[static_cast<std::size_t>(p)];
    }
    CHECK(rel(lhs, rhs) < 1e-13);
}

TEST_CASE("zero source propagates nothing") {
    const VelocityModel m = small_model();
    const double dt = 0.9 * critical_dt(m);
    const long nt = 60;
    const SparsePoints src = locate_points(m, {{240.0, 240.0}});
    const SparsePoints rec = locate_points(m, {{100.0, 380.0}});
    const ForwardResult f =
        forward(m, src, std::vector<double>(static_cast<std::size_t>(nt), 0.0), rec, nt, dt,
                false);
    for (double v : f.u) CHECK(v == 0.0);
    for (double v : f.record.data) CHECK(v == 0.0);

    const AdjointResult a = adjoint(m, rec, zero_record(nt, dt, 1), src, nt, dt);
    for (double v : a.v) CHECK(v == 0.0);
    for (double v : a.src_samples.data) CHECK(v == 0.0);
}

TEST_CASE("first arrival matches the ray travel time") {
    const VelocityModel m = make_constant_model({65, 65}, 15.0, 12, 4, 1500.0);
    const double dt = 0.8 * critical_dt(m);
    const long nt = 220;
    const double t0 = 0.05;
    const SparsePoints src = locate_points(m, {{32 * 15.0, 32 * 15.0}});
    const SparsePoints rec = locate_points(m, {{32 * 15.0, 62 * 15.0}});  // 450 m away
    const ForwardResult f =
        forward(m, src, ricker(20.0, t0, nt, dt), rec, nt, dt, false);

    // The direct pulse peaks at t0 + distance/c.  Restrict the search to
    // before the earliest boundary bounce (out 480 m, back 30 m) so layer
    // reflections cannot shadow it.
    const double expected = t0 + 450.0 / 1500.0;
    const long window = static_cast<long>((t0 + 510.0 / 1500.0) / dt);
    REQUIRE(window < nt);
    double peak = 0.0;
    long tpeak = -1;
    for (long t = 0; t < window; ++t)
        if (std::abs(f.record.data[static_cast<std::size_t>(t)]) > peak) {
            peak = std::abs(f.record.data[static_cast<std::size_t>(t)]);
            tpeak = t;
        }
    REQUIRE(peak > 0.0);
    CHECK(std::abs(static_cast<double>(tpeak) * dt - expected) < 2.0 * 15.0 / 1500.0 + 2.0 * dt);
    // Quiet before the wave can possibly arrive.
    for (long t = 0; static_cast<double>(t) * dt < 0.22; ++t)
        CHECK(std::abs(f.record.data[static_cast<std::size_t>(t)]) < 0.01 * peak);
}

TEST_CASE("saved and rolling forward runs record identically") {
    const VelocityModel m = small_model();
    const double dt = 0.9 * critical_dt(m);
    const long nt = 140;
    const SparsePoints src = locate_points(m, {{243.0, 121.0}});
    const SparsePoints rec =
        locate_points(m, {{60.0, 430.0}, {240.0, 430.0}, {420.0, 430.0}});
    const std::vector<double> wav = ricker(12.0, 1.0 / 12.0, nt, dt);

    const ForwardResult rolling = forward(m, src, wav, rec, nt, dt, false);
    const ForwardResult saved = forward(m, src, wav, rec, nt, dt, true);
    REQUIRE(rolling.record.data.size() == saved.record.data.size());
    for (std::size_t i = 0; i < rolling.record.data.size(); ++i)
        CHECK(rel(rolling.record.data[i], saved.record.data[i]) <= 1e-12);

    // The saved history's last rows agree with the rolling slots.
    const long cells = m.cells();
    for (long t = nt - 3; t < nt; ++t)
        for (long i = 0; i < cells; ++i)
            CHECK(saved.u[static_cast<std::size_t>(t * cells + i)] ==
                  rolling.u[static_cast<std::size_t>((t % 3) * cells + i)]);
}

TEST_CASE("energy decays after the source stops") {
    const VelocityModel m = small_model();
    const double dt = 0.9 * critical_dt(m);
    const long nt = 220;
    const double f0 = 25.0;
    const SparsePoints src = locate_points(m, {{240.0, 240.0}});
    const SparsePoints rec = locate_points(m, {{100.0, 380.0}});
    const ForwardResult f = forward(m, src, ricker(f0, 1.0 / f0, nt, dt), rec, nt, dt, true);

    const long cells = m.cells();
    const long cutoff = static_cast<long>(std::ceil(2.5 / f0 / dt));
    std::vector<double> energy(static_cast<std::size_t>(nt), 0.0);
    for (long t = 0; t < nt; ++t)
        for (long i = 0; i < cells; ++i) {
            const double v = f.u[static_cast<std::size_t>(t * cells + i)];
            energy[static_cast<std::size_t>(t)] += v * v;
        }

    // Row sums trade amplitude with the time derivative twice per period, so
    // the non-increase is asserted on the envelope: once the source is quiet
    // no row may top the running peak by more than the 5% tolerance.
    double peak = energy[static_cast<std::size_t>(cutoff)];
    for (long t = cutoff + 1; t < nt; ++t) {
        CHECK(energy[static_cast<std::size_t>(t)] <= peak * 1.05);
        peak = std::max(peak, energy[static_cast<std::size_t>(t)]);
    }

    // And the absorbing layer must actually drain the box over the run.
    const long window = 4 * static_cast<long>(std::ceil(1.0 / (f0 * dt)));
    double head = 0.0, tail = 0.0;
    for (long t = cutoff; t < cutoff + window; ++t)
        head = std::max(head, energy[static_cast<std::size_t>(t)]);
    for (long t = nt - window; t < nt; ++t)
        tail = std::max(tail, energy[static_cast<std::size_t>(t)]);
    CHECK(tail <= 0.6 * head);
}

TEST_CASE("adjoint of a spike is the time-reversed response") {
    const VelocityModel m = make_constant_model({33, 33}, 15.0, 10, 2, 1500.0);
    const double dt = 0.9 * critical_dt(m);
    const long nt = 150;
    const SparsePoints a = locate_points(m, {{120.0, 150.0}});
    const SparsePoints b = locate_points(m, {{330.0, 345.0}});

    std::vector<double> x(static_cast<std::size_t>(nt), 0.0);
    const long rho0 = 20;
    x[static_cast<std::size_t>(rho0)] = 1.0;
    const ForwardResult f = forward(m, a, x, b, nt, dt, false);

    ShotRecord spike = zero_record(nt, dt, 1);
    const long tk = 120;
    spike.data[static_cast<std::size_t>(tk)] = 1.0;
    const AdjointResult adj = adjoint(m, b, spike, a, nt, dt);

    double peak = 0.0;
    for (double v : f.record.data) peak = std::max(peak, std::abs(v));
    REQUIRE(peak > 0.0);
    for (long rho = 1; rho < nt - 1; ++rho) {
        const long tau = tk - rho + rho0;
        if (tau < 2 || tau >= nt) continue;
        CHECK(std::abs(adj.src_samples.data[static_cast<std::size_t>(rho)] -
                       f.record.data[static_cast<std::size_t>(tau)]) <= 1e-8 * peak);
    }
}

TEST_CASE("gradient matches a directional finite difference") {
    const VelocityModel m = small_model();
    const double dt = 0.85 * critical_dt(m);
    const long nt = 130;
    const SparsePoints src = locate_points(m, {{243.7, 40.0}});
    const SparsePoints rec =
        locate_points(m, {{100.0, 400.0}, {250.0, 401.5}, {380.0, 404.9}});
    const std::vector<double> wav = ricker(18.0, 1.0 / 18.0, nt, dt);

    // Observed data from a slightly different model.
    std::vector<double> mi(33 * 33, 1.0 / (1500.0 * 1500.0));
    for (long i = 0; i < 33; ++i)
        for (long j = 0; j < 33; ++j) {
            const double r2 = (i - 20.0) * (i - 20.0) + (j - 14.0) * (j - 14.0);
            mi[static_cast<std::size_t>(i * 33 + j)] *= 1.0 + 0.05 * std::exp(-r2 / 30.0);
        }
    const ShotRecord observed =
        forward(make_model({33, 33}, 15.0, 10, 4, mi), src, wav, rec, nt, dt, false).record;

    const ForwardResult base = forward(m, src, wav, rec, nt, dt, true);
    ShotRecord resid;
    const double phi0 = objective(base.record, observed, &resid);
    REQUIRE(phi0 > 0.0);
    const GradientResult g = gradient(m, rec, resid, base.u, nt, dt);

    // Smooth random interior perturbation, a few percent of m in size.
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::vector<double> dmi(33 * 33);
    for (double& v : dmi) v = uni(rng) * 2e-8;
    std::vector<double> dm(static_cast<std::size_t>(m.cells()), 0.0);
    add_interior(m, dmi, 1.0, dm);

    double gdot = 0.0;
    for (long i = 0; i < m.cells(); ++i)
        gdot += g.grad[static_cast<std::size_t>(i)] * dm[static_cast<std::size_t>(i)];

    const double h = 1e-3;
    VelocityModel up = m, down = m;
    for (long i = 0; i < m.cells(); ++i) {
        up.m[static_cast<std::size_t>(i)] += h * dm[static_cast<std::size_t>(i)];
        down.m[static_cast<std::size_t>(i)] -= h * dm[static_cast<std::size_t>(i)];
    }
    const double phi_up = objective(forward(up, src, wav, rec, nt, dt, false).record, observed);
    const double phi_down =
        objective(forward(down, src, wav, rec, nt, dt, false).record, observed);
    const double fd = (phi_up - phi_down) / (2.0 * h);
    CHECK(rel(fd, gdot) < 0.01);

    // Zero residual means zero gradient.
    const GradientResult g0 = gradient(m, rec, zero_record(nt, dt, 3), base.u, nt, dt);
    for (double v : g0.grad) CHECK(v == 0.0);
}

TEST_CASE("objective is the half squared residual") {
    ShotRecord a = zero_record(4, 0.001, 2);
    ShotRecord b = zero_record(4, 0.001, 2);
    for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] = static_cast<double>(i) * 0.5;

    CHECK(objective(a, a) == 0.0);
    double sq = 0.0;
    for (double v : a.data) sq += v * v;
    CHECK(objective(a, b) == doctest::Approx(0.5 * sq).epsilon(1e-15));

    ShotRecord twice = a;
    for (double& v : twice.data) v *= 2.0;
    CHECK(objective(twice, b) == doctest::Approx(4.0 * 0.5 * sq).epsilon(1e-15));

    ShotRecord resid;
    objective(a, b, &resid);
    CHECK(resid.data == a.data);
    CHECK_THROWS_AS(objective(a, zero_record(3, 0.001, 2)), std::invalid_argument);
}

TEST_CASE("operator construction is dimension and order agnostic") {
    for (int order : {2, 6, 10, 14}) {
        const VelocityModel m2 = make_constant_model({17, 13}, 10.0, 6, order, 1500.0);
        const lower::KernelIR ir = build_forward_ir(m2, 1, 2, 40, 0.5 * critical_dt(m2), false);
        CHECK(ir.halo == order / 2);
        CHECK(ir.ndim() == 2);
    }
    const VelocityModel m3 = make_constant_model({9, 9, 9}, 10.0, 4, 4, 1500.0);
    const lower::KernelIR f3 = build_forward_ir(m3, 1, 1, 30, 0.5 * critical_dt(m3), false);
    CHECK(f3.ndim() == 3);
    const lower::KernelIR a3 = build_adjoint_ir(m3, 1, 1, 30, 0.5 * critical_dt(m3));
    CHECK(a3.direction == -1);
    const lower::KernelIR g3 = build_gradient_ir(m3, 1, 30, 0.5 * critical_dt(m3));
    CHECK(g3.assignments.size() == 2);
    CHECK(g3.assignments[1].accumulate);
}

TEST_CASE("unstable steps are rejected before compilation") {
    const VelocityModel m = small_model();
    const double dt = 1.01 * critical_dt(m);
    const SparsePoints src = locate_points(m, {{240.0, 240.0}});
    const SparsePoints rec = locate_points(m, {{100.0, 380.0}});
    CHECK_THROWS_WITH_AS(
        forward(m, src, std::vector<double>(40, 0.0), rec, 40, dt, false),
        doctest::Contains("CFL"), std::invalid_argument);
    CHECK_THROWS_AS(adjoint(m, rec, zero_record(40, dt, 1), src, 40, dt),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        forward(m, src, std::vector<double>(10, 0.0), rec, 40, 0.9 * critical_dt(m), false),
        std::invalid_argument);  // trace length mismatch
}

TEST_CASE("model and record files round-trip") {
    char tmpl[] = "/tmp/stencilfd-seismic-XXXXXX";
    REQUIRE(mkdtemp(tmpl) != nullptr);
    const std::string dir = tmpl;

    std::vector<double> mi(11 * 9);
    for (std::size_t i = 0; i < mi.size(); ++i)
        mi[i] = 1e-6 * (1.0 + 0.1 * static_cast<double>(i % 7));
    const VelocityModel m = make_model({11, 9}, 12.5, 4, 4, mi);
    save_model(m, dir + "/model");
    const VelocityModel loaded = load_model(dir + "/model", 4);
    CHECK(loaded.interior == m.interior);
    CHECK(loaded.h == m.h);
    CHECK(loaded.nbpml == m.nbpml);
    CHECK(loaded.m == m.m);

    ShotRecord r = zero_record(5, 0.002, 2);
    for (std::size_t i = 0; i < r.data.size(); ++i) r.data[i] = 0.25 * static_cast<double>(i);
    save_record(r, {{1.0, 2.0}, {3.0, 4.0}}, dir + "/shot");
    std::vector<std::vector<double>> coords;
    const ShotRecord back = load_record(dir + "/shot", &coords);
    CHECK(back.nt == 5);
    CHECK(back.dt == 0.002);
    CHECK(back.data == r.data);
    CHECK(coords == std::vector<std::vector<double>>{{1.0, 2.0}, {3.0, 4.0}});
    std::filesystem::remove_all(dir);
}

TEST_SUITE_END();
