#include <cmath>
#include <functional>

#include "doctest.h"
#include "stencilfd/lowering.hpp"
#include "stencilfd/optimizer.hpp"

using namespace sfd;
using lower::LoweringError;
using lower::index_lower;

namespace {

const std::map<std::string, double> kSpacings = {{"h", 0.1}, {"s", 0.002}};

void collect_reads(const Expr& e, std::vector<Expr>& out) {
    if (e->kind == Kind::Indexed) out.push_back(e);
    for (const Expr& k : e->kids) collect_reads(k, out);
}

}  // namespace

TEST_SUITE_BEGIN("lowering");

TEST_CASE("applications lower to integer indices") {
    const GridFunction f = make_grid_function("f", {11, 11});
    const Expr h = symbol(kSpaceSpacing);
    const Expr e = apply(f.ptr(), {-h, intc(0)});
    CHECK(to_string(index_lower(e, kSpacings)) == "f[x - 1, y]");
    const Expr e2 = apply(f.ptr(), {product({intc(2), h}), -h});
    CHECK(to_string(index_lower(e2, kSpacings)) == "f[x + 2, y - 1]");

    const GridFunction u = make_grid_function("u", {11, 11}, 2, 2);
    CHECK(to_string(index_lower(u.forward(), kSpacings)) == "u[(t + 1) % 3, x, y]");
    const GridFunction us = make_grid_function("us", {11, 11}, 2, 2, true, 40);
    CHECK(to_string(index_lower(us.forward(), kSpacings)) == "us[t + 1, x, y]");
}

TEST_CASE("lowering folds spacings into literals") {
    const GridFunction f = make_grid_function("f", {11, 11});
    const Expr low = index_lower(f.dx2(), kSpacings);
    // No symbols and no rationals survive.
    const std::function<void(const Expr&)> scan = [&](const Expr& e) {
        CHECK(e->kind != Kind::Symbol);
        CHECK(e->kind != Kind::RatConst);
        CHECK(e->kind != Kind::FuncApp);
        for (const Expr& k : e->kids) scan(k);
    };
    scan(low);

    // Semantics match the symbolic evaluation to rounding.
    Bindings sym_bind, low_bind;
    sym_bind.symbols["h"] = 0.1;
    const Expr h = symbol("h");
    const double vals[3] = {1.25, -0.5, 2.0};
    sym_bind.leaves.emplace(apply(f.ptr(), {-h, intc(0)}), vals[0]);
    sym_bind.leaves.emplace(f.at(), vals[1]);
    sym_bind.leaves.emplace(apply(f.ptr(), {h, intc(0)}), vals[2]);
    low_bind.leaves.emplace(indexed(f.ptr(), {-1, 0}), vals[0]);
    low_bind.leaves.emplace(indexed(f.ptr(), {0, 0}), vals[1]);
    low_bind.leaves.emplace(indexed(f.ptr(), {1, 0}), vals[2]);
    const double a = evaluate(f.dx2(), sym_bind);
    const double b = evaluate(low, low_bind);
    CHECK(std::abs(a - b) <= 1e-12 * std::abs(a));
}

TEST_CASE("offsets must be grid multiples") {
    const GridFunction f = make_grid_function("f", {11, 11});
    const Expr h = symbol(kSpaceSpacing);
    CHECK_THROWS_AS(index_lower(apply(f.ptr(), {product({ratc({1, 2}), h}), intc(0)}), kSpacings),
                    LoweringError);
    CHECK_THROWS_AS(index_lower(apply(f.ptr(), {symbol("q"), intc(0)}), kSpacings),
                    LoweringError);
    CHECK_THROWS_AS(index_lower(symbol("q"), kSpacings), LoweringError);
    CHECK_THROWS_AS(index_lower(f.dx2(), {{"s", 0.1}}), LoweringError);
}

TEST_CASE("a static equation lowers to a single sweep") {
    const GridFunction f = make_grid_function("f", {12, 12}, 4);
    const GridFunction p = make_grid_function("p", {12, 12}, 4);
    const auto ir = lower::build_kernel_ir("Copy", {eq(f.at(), p.at() + floatc(2.0) * p.dx2())},
                                           {f, p}, kSpacings);
    CHECK_FALSE(ir.has_time);
    CHECK(ir.steps() == 1);
    CHECK(ir.halo == 2);
    CHECK(ir.extents == std::vector<long>{12, 12});
    CHECK(ir.interior() == std::vector<long>{8, 8});
    CHECK(ir.interior_points() == 64);
    REQUIRE(ir.grids.size() == 2);
    CHECK(ir.grids[0].fn->name == "f");
    CHECK(ir.grids[0].written);
    CHECK_FALSE(ir.grids[1].written);
}

TEST_CASE("the damped wave update lowers to a forward stencil") {
    const GridFunction u = make_grid_function("u", {23, 23}, 4, 2);
    const GridFunction m = make_grid_function("m", {23, 23}, 4);
    const GridFunction damp = make_grid_function("damp", {23, 23}, 4);
    const Expr pde = m.at() * u.dt2() - u.laplace() + damp.at() * u.dt();
    const Expr update = solve_for(eq(pde, intc(0)), u.forward());
    const auto ir = lower::build_kernel_ir("Forward", {eq(u.forward(), update)},
                                           {u, m, damp}, kSpacings, 50);
    CHECK(ir.has_time);
    CHECK(ir.direction == 1);
    CHECK(ir.time_order == 2);
    CHECK(ir.nt == 50);
    CHECK(ir.time_start() == 2);
    CHECK(ir.time_stop() == 50);
    CHECK(ir.steps() == 48);
    CHECK(ir.halo == 2);
    REQUIRE(ir.assignments.size() == 1);
    const lower::Assignment& a = ir.assignments.front();
    CHECK(to_string(a.lhs) == "u[t % 3, x, y]");

    // After rebasing, the update reads only one and two slots back, within
    // the spatial halo.
    std::vector<Expr> reads;
    collect_reads(a.rhs, reads);
    CHECK(reads.size() > 5);
    for (const Expr& r : reads) {
        if (r->fn->has_time()) {
            CHECK((r->offsets[0] == -1 || r->offsets[0] == -2));
            for (int d = 1; d <= 2; ++d) CHECK(std::abs(r->offsets[d]) <= ir.halo);
        }
    }

    // A constant field is a fixed point of the update.
    Bindings bind;
    const double c = 0.75;
    for (const Expr& r : reads) bind.leaves.emplace(r, r->fn->name == "m" ? 0.5
                                                     : r->fn->name == "damp" ? 0.3 : c);
    const double next = evaluate(a.rhs, bind);
    CHECK(std::abs(next - c) < 1e-12);
}

TEST_CASE("backward stepping flips the direction and window") {
    const GridFunction v = make_grid_function("v", {23, 23}, 4, 2);
    const GridFunction m = make_grid_function("m", {23, 23}, 4);
    const GridFunction damp = make_grid_function("damp", {23, 23}, 4);
    const Expr pde = m.at() * v.dt2() - v.laplace() - damp.at() * v.dt();
    const Expr update = solve_for(eq(pde, intc(0)), v.backward());
    const auto ir = lower::build_kernel_ir("Backward", {eq(v.backward(), update)},
                                           {v, m, damp}, kSpacings, 50);
    CHECK(ir.direction == -1);
    std::vector<Expr> reads;
    collect_reads(ir.assignments.front().rhs, reads);
    for (const Expr& r : reads)
        if (r->fn->has_time()) CHECK((r->offsets[0] == 1 || r->offsets[0] == 2));
}

TEST_CASE("accumulation targets are detected") {
    const GridFunction g = make_grid_function("g", {23, 23}, 2);
    const GridFunction p = make_grid_function("p", {23, 23}, 2);
    const auto ir = lower::build_kernel_ir("Acc", {eq(g.at(), g.at() + p.at() * p.at())},
                                           {g, p}, kSpacings);
    REQUIRE(ir.assignments.size() == 1);
    CHECK(ir.assignments.front().accumulate);
    CHECK_FALSE(contains(ir.assignments.front().rhs, ir.assignments.front().lhs));
}

TEST_CASE("malformed kernels are rejected") {
    const GridFunction u = make_grid_function("u", {23, 23}, 2, 2);
    const GridFunction v = make_grid_function("v", {23, 23}, 2, 2);
    const GridFunction m = make_grid_function("m", {23, 23}, 2);

    SUBCASE("writing the center slot") {
        CHECK_THROWS_AS(lower::build_kernel_ir("K", {eq(u.at(), u.backward())}, {u},
                                               kSpacings, 10),
                        LoweringError);
    }
    SUBCASE("mixed stepping directions") {
        CHECK_THROWS_AS(lower::build_kernel_ir(
                            "K", {eq(u.forward(), u.at()), eq(v.backward(), v.at())},
                            {u, v}, kSpacings, 10),
                        LoweringError);
    }
    SUBCASE("conflicting shapes") {
        const GridFunction w = make_grid_function("w", {9, 9});
        CHECK_THROWS_AS(lower::build_kernel_ir("K", {eq(w.at(), m.at())}, {w, m}, kSpacings),
                        LoweringError);
    }
    SUBCASE("undeclared function") {
        CHECK_THROWS_AS(lower::build_kernel_ir("K", {eq(u.forward(), u.at() + m.at())}, {u},
                                               kSpacings, 10),
                        LoweringError);
    }
    SUBCASE("declared but unused function") {
        CHECK_THROWS_AS(lower::build_kernel_ir("K", {eq(u.forward(), u.at())}, {u, m},
                                               kSpacings, 10),
                        LoweringError);
    }
    SUBCASE("stencil wider than the halo") {
        const GridFunction f = make_grid_function("f", {23, 23}, 2);
        const Expr far = apply(m.ptr(), {product({intc(5), symbol("h")}), intc(0)});
        CHECK_THROWS_AS(lower::build_kernel_ir("K", {eq(f.at(), far)}, {f, m}, kSpacings),
                        LoweringError);
    }
    SUBCASE("history window exceeded") {
        const Expr deep = time_shift(u.at(), -2);  // u(t - 2s), outside after rebase
        CHECK_THROWS_AS(lower::build_kernel_ir("K", {eq(u.forward(), deep + u.at())}, {u},
                                               kSpacings, 10),
                        LoweringError);
        // Within the window it is accepted: reads at -1 and -2 after rebase.
        const auto ok = lower::build_kernel_ir("K", {eq(u.forward(), u.backward() + u.at())},
                                               {u}, kSpacings, 10);
        CHECK(ok.steps() == 8);
    }
    SUBCASE("saved history pins nt") {
        const GridFunction us = make_grid_function("us", {23, 23}, 2, 2, true, 40);
        CHECK_THROWS_AS(lower::build_kernel_ir("K", {eq(us.forward(), us.at())}, {us},
                                               kSpacings, 50),
                        LoweringError);
        const auto ok = lower::build_kernel_ir("K", {eq(us.forward(), us.at())}, {us},
                                               kSpacings);
        CHECK(ok.nt == 40);
    }
    SUBCASE("nt too small") {
        CHECK_THROWS_AS(lower::build_kernel_ir("K", {eq(u.forward(), u.at())}, {u},
                                               kSpacings, 2),
                        LoweringError);
    }
    SUBCASE("reading the written slot at a spatial offset") {
        const GridFunction f = make_grid_function("f", {23, 23}, 2);
        const Expr shifted = apply(f.ptr(), {symbol("h"), intc(0)});
        CHECK_THROWS_AS(lower::build_kernel_ir("K", {eq(f.at(), shifted + m.at())}, {f, m},
                                               kSpacings),
                        LoweringError);
    }
}

TEST_CASE("sparse attachments are validated") {
    const GridFunction u = make_grid_function("u", {23, 23}, 2, 2);
    auto ir = lower::build_kernel_ir("K", {eq(u.forward(), u.at())}, {u}, kSpacings, 10);
    ir.sparse_sets.push_back({"src", 1, 2, 10});
    ir.sparse_ops.push_back({lower::SparseOp::Kind::Inject, 0, "u", -1, 1.0, ""});
    CHECK_NOTHROW(ir.validate());

    SUBCASE("unknown grid") {
        ir.sparse_ops.front().grid = "nope";
        CHECK_THROWS_AS(ir.validate(), LoweringError);
    }
    SUBCASE("unknown set") {
        ir.sparse_ops.front().set = 3;
        CHECK_THROWS_AS(ir.validate(), LoweringError);
    }
    SUBCASE("trace offset leaves the record") {
        ir.sparse_ops.front().trace_offset = 1;
        CHECK_THROWS_AS(ir.validate(), LoweringError);
        ir.sparse_ops.front().trace_offset = -3;
        CHECK_THROWS_AS(ir.validate(), LoweringError);
    }
    SUBCASE("dimensionality mismatch") {
        ir.sparse_sets.front().ndim = 3;
        CHECK_THROWS_AS(ir.validate(), LoweringError);
    }
}

TEST_SUITE_END();
