#include <fstream>
#include <random>
#include <set>

#include "doctest.h"
#include "stencilfd/codegen.hpp"
#include "support/kernels.hpp"

using namespace sfd;
using codegen::CodegenPlan;
using codegen::DimSplit;
using codegen::Stmt;

TEST_SUITE_BEGIN("codegen");

namespace {

/// Depth-first search for the first loop over the given variable.
const Stmt* find_loop(const Stmt& s, const std::string& var) {
    if (s.kind == Stmt::Kind::Loop && s.var == var) return &s;
    for (const Stmt& k : s.body)
        if (const Stmt* hit = find_loop(k, var)) return hit;
    return nullptr;
}

void collect_pragmas(const Stmt& s, std::vector<std::string>& out) {
    if (s.kind == Stmt::Kind::Pragma) out.push_back(s.text);
    for (const Stmt& k : s.body) collect_pragmas(k, out);
}

int count_loops(const Stmt& s, const std::string& var) {
    int n = s.kind == Stmt::Kind::Loop && s.var == var ? 1 : 0;
    for (const Stmt& k : s.body) n += count_loops(k, var);
    return n;
}

std::vector<long> indices_of(const codegen::Range& r) {
    std::vector<long> out;
    for (long i = r.lo; i < r.hi; i += r.step)
        for (long j = i; j < std::min(i + r.step, r.hi); ++j) out.push_back(j);
    return out;
}

}  // namespace

TEST_CASE("remainder decomposition covers the range") {
    SUBCASE("exact division leaves no remainder") {
        const DimSplit s = codegen::remainder_decomposition(1, 129, 16);
        CHECK(s.main.lo == 1);
        CHECK(s.main.hi == 129);
        CHECK(s.remainder.lo == 129);
        CHECK(s.remainder.hi == 129);
    }
    SUBCASE("block 24 leaves a tail of 8") {
        const DimSplit s = codegen::remainder_decomposition(1, 129, 24);
        CHECK(s.main.hi == 121);  // 129 - (128 % 24)
        CHECK(s.remainder.lo == 121);
        CHECK(s.remainder.hi == 129);
    }
    SUBCASE("block 1 is degenerate but valid") {
        const DimSplit s = codegen::remainder_decomposition(3, 10, 1);
        CHECK(s.main.hi == 10);
        CHECK(s.remainder.lo == 10);
    }
    SUBCASE("random pairs visit each index exactly once") {
        std::mt19937 rng(99);
        for (int trial = 0; trial < 1000; ++trial) {
            const long lo = static_cast<long>(rng() % 5);
            const long span = 1 + static_cast<long>(rng() % 200);
            const long block = 1 + static_cast<long>(rng() % 70);
            const DimSplit s = codegen::remainder_decomposition(lo, lo + span, block);
            std::vector<long> seen = indices_of(s.main);
            for (long i = s.remainder.lo; i < s.remainder.hi; ++i) seen.push_back(i);
            REQUIRE(static_cast<long>(seen.size()) == span);
            std::sort(seen.begin(), seen.end());
            for (long i = 0; i < span; ++i) REQUIRE(seen[static_cast<std::size_t>(i)] == lo + i);
            // The main part always advances in whole blocks.
            CHECK((s.main.hi - s.main.lo) % block == 0);
        }
    }
}

TEST_CASE("main plus two remainder nests tile the plane exactly") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 1000; ++trial) {
        const long lo = 1;
        const long e1 = lo + 1 + static_cast<long>(rng() % 60);
        const long e2 = lo + 1 + static_cast<long>(rng() % 60);
        const long b1 = 1 + static_cast<long>(rng() % 24);
        const long b2 = 1 + static_cast<long>(rng() % 24);
        const DimSplit s1 = codegen::remainder_decomposition(lo, e1, b1);
        const DimSplit s2 = codegen::remainder_decomposition(lo, e2, b2);
        // Main: both main spans.  Nest one: dim-1 tail against dim-2 main.
        // Nest two: full dim-1 against dim-2 tail.
        std::set<std::pair<long, long>> seen;
        const auto add = [&](long i, long j) { REQUIRE(seen.emplace(i, j).second); };
        for (long i = s1.main.lo; i < s1.main.hi; ++i)
            for (long j = s2.main.lo; j < s2.main.hi; ++j) add(i, j);
        for (long i = s1.remainder.lo; i < s1.remainder.hi; ++i)
            for (long j = s2.main.lo; j < s2.main.hi; ++j) add(i, j);
        for (long i = lo; i < e1; ++i)
            for (long j = s2.remainder.lo; j < s2.remainder.hi; ++j) add(i, j);
        REQUIRE(static_cast<long>(seen.size()) == (e1 - lo) * (e2 - lo));
    }
}

TEST_CASE("generated loop structure matches the blocked plan") {
    testing::WaveKernel w = testing::make_wave_ir("Forward", 3, 130, 2, 100);
    CodegenPlan plan;  // parallel + simd + runtime blocking
    const Stmt ast = codegen::build_ast(w.ir, plan);

    // Time loop i4 sits inside the parallel region and carries the sweep.
    const Stmt* tl = find_loop(ast, "i4");
    REQUIRE(tl != nullptr);
    CHECK(tl->init == "int i4 = 2");
    CHECK(tl->cond == "i4 < 100");

    // Main nest: block loops, intra-block loops, SIMD innermost.
    const Stmt* i1b = find_loop(*tl, "i1b");
    REQUIRE(i1b != nullptr);
    CHECK(i1b->init == "int i1b = 1");
    CHECK(i1b->cond == "i1b < 129 - (128 % i1block)");
    CHECK(i1b->inc == "i1b += i1block");
    const Stmt* i2b = find_loop(*i1b, "i2b");
    REQUIRE(i2b != nullptr);
    CHECK(i2b->cond == "i2b < 129 - (128 % i2block)");
    const Stmt* i1 = find_loop(*i2b, "i1");
    REQUIRE(i1 != nullptr);
    CHECK(i1->init == "int i1 = i1b");
    CHECK(i1->cond == "i1 < i1b + i1block");

    // One remainder nest per blocked dim: three i1 loops in total.
    CHECK(count_loops(*tl, "i1") == 3);
    CHECK(count_loops(*tl, "i3") == 3);

    // Work sharing on time-loop children, SIMD with the alphabetical
    // read list innermost.
    std::vector<std::string> pragmas;
    collect_pragmas(ast, pragmas);
    CHECK(std::count(pragmas.begin(), pragmas.end(), "omp parallel") == 1);
    CHECK(std::count(pragmas.begin(), pragmas.end(), "omp for schedule(static)") >= 3);
    CHECK(std::count(pragmas.begin(), pragmas.end(), "omp simd aligned(damp, m, u:64)") == 3);
}

TEST_CASE("remainder nest bounds complement the main nest") {
    testing::WaveKernel w = testing::make_wave_ir("Forward", 3, 130, 2, 20);
    CodegenPlan plan;
    plan.blocking = CodegenPlan::Blocking::Fixed;
    plan.fixed_blocks = {24, 24};
    const Stmt ast = codegen::build_ast(w.ir, plan);
    const Stmt* tl = find_loop(ast, "i4");
    REQUIRE(tl != nullptr);
    // With span 128 and block 24 the cut is 121, baked into the headers.
    std::vector<const Stmt*> i1_loops;
    for (const Stmt& k : tl->body)
        if (k.kind == Stmt::Kind::Loop) i1_loops.push_back(&k);
    REQUIRE(i1_loops.size() == 3);
    CHECK(i1_loops[0]->var == "i1b");
    CHECK(i1_loops[0]->cond == "i1b < 121");
    CHECK(i1_loops[1]->var == "i1");
    CHECK(i1_loops[1]->init == "int i1 = 121");
    CHECK(i1_loops[1]->cond == "i1 < 129");
    const Stmt* nest1_i2 = find_loop(*i1_loops[1], "i2");
    REQUIRE(nest1_i2 != nullptr);
    CHECK(nest1_i2->cond == "i2 < 121");  // dim-2 main span only
    CHECK(i1_loops[2]->var == "i1");
    CHECK(i1_loops[2]->init == "int i1 = 1");
    CHECK(i1_loops[2]->cond == "i1 < 129");
    const Stmt* nest2_i2 = find_loop(*i1_loops[2], "i2");
    REQUIRE(nest2_i2 != nullptr);
    CHECK(nest2_i2->init == "int i2 = 121");
    CHECK(nest2_i2->cond == "i2 < 129");
}

TEST_CASE("all-off plan emits a plain nest") {
    testing::WaveKernel w = testing::make_wave_ir("Forward", 2, 33, 2, 10);
    const Stmt ast = codegen::build_ast(w.ir, CodegenPlan::all_off());
    std::vector<std::string> pragmas;
    collect_pragmas(ast, pragmas);
    CHECK(pragmas.empty());
    const Stmt* tl = find_loop(ast, "i3");  // 2D: time var is i3
    REQUIRE(tl != nullptr);
    CHECK(count_loops(*tl, "i1") == 1);
    CHECK(find_loop(ast, "i1b") == nullptr);
}

TEST_CASE("signature and metadata are recorded honestly") {
    testing::WaveKernel w = testing::make_wave_ir("Forward", 3, 20, 2, 12);
    testing::attach_sparse(w, 3, 0.001);
    CodegenPlan plan;
    const codegen::GeneratedSource g = codegen::generate(w.ir, plan);

    std::vector<std::string> names;
    for (const codegen::Arg& a : g.args) names.push_back(a.name);
    CHECK(names == std::vector<std::string>{"u_vec", "m_vec", "damp_vec", "src_idx_vec",
                                            "src_w_vec", "src_data_vec", "rec_idx_vec",
                                            "rec_w_vec", "rec_data_vec", "i1block", "i2block"});
    CHECK(g.args[0].count == 3 * 20 * 20 * 20);
    CHECK(g.args[3].count == 1 * 3);
    CHECK(g.args[4].count == 1 * 8);
    CHECK(g.args[5].count == 12 * 1);

    // Reads u at two slots plus m and damp, writes u at one: five slots.
    CHECK(g.bytes_per_point == 40);
    CHECK(g.flops_per_point == opt::cse(w.ir.assignments).cost().total());
    CHECK(g.interior_points == 18 * 18 * 18);
    CHECK(g.steps == 10);

    // The entry line and the trampoline both appear in the source.
    CHECK(g.source.find("int Forward(double *u_vec, double *m_vec, double *damp_vec, "
                        "long *src_idx_vec, double *src_w_vec, double *src_data_vec, "
                        "long *rec_idx_vec, double *rec_w_vec, double *rec_data_vec, "
                        "long i1block, long i2block)") != std::string::npos);
    CHECK(g.source.find("int Forward_call(void **argv)") != std::string::npos);
    CHECK(g.source.find("#pragma omp simd aligned(damp, m, u:64)") != std::string::npos);
    CHECK(g.source.find("double (*u)[20][20][20] = (double (*)[20][20][20]) u_vec;") !=
          std::string::npos);
}

TEST_CASE("generation is deterministic and matches the golden files") {
    testing::WaveKernel w3 = testing::make_wave_ir("Forward", 3, 24, 2, 12);
    testing::attach_sparse(w3, 2, 0.001);
    CodegenPlan full;
    const codegen::GeneratedSource a = codegen::generate(w3.ir, full);
    const codegen::GeneratedSource b = codegen::generate(w3.ir, full);
    CHECK(a.source == b.source);

    testing::WaveKernel w2 = testing::make_wave_ir("Plain", 2, 16, 2, 8);
    const codegen::GeneratedSource c = codegen::generate(w2.ir, CodegenPlan::all_off());

    const auto check_golden = [](const std::string& name, const std::string& text) {
        const std::string path = std::string(GOLDEN_DIR) + "/" + name;
        std::ifstream f(path);
        REQUIRE_MESSAGE(f.good(), "missing golden file ", path);
        std::string want((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
        CHECK_MESSAGE(text == want, "generated source drifted from ", path);
    };
    check_golden("forward_3d_full.c", a.source);
    check_golden("plain_2d_all_off.c", c.source);
}

TEST_CASE("plan validation rejects bad requests") {
    testing::WaveKernel w = testing::make_wave_ir("Forward", 2, 20, 2, 8);
    CodegenPlan plan;
    plan.alignment = 63;
    CHECK_THROWS_AS(codegen::generate(w.ir, plan), std::invalid_argument);
    plan = CodegenPlan();
    plan.blocking = CodegenPlan::Blocking::Fixed;
    plan.fixed_blocks = {16, 16};  // 2D kernel blocks only one dim
    CHECK_THROWS_AS(codegen::generate(w.ir, plan), std::invalid_argument);
}

TEST_SUITE_END();
