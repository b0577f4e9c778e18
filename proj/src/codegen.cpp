#include "stencilfd/codegen.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <set>
#include <stdexcept>
#include <utility>

namespace sfd::codegen {

namespace {

enum Prec { kSum = 0, kProd = 1, kPow = 2 };

bool is_neg_one(const Expr& e) { return e->kind == Kind::IntConst && e->ival == -1; }

std::string offset_str(const std::string& base, long off) {
    if (off > 0) return base + " + " + std::to_string(off);
    if (off < 0) return base + " - " + std::to_string(-off);
    return base;
}

/// Renders lowered expressions as C.  The shapes mirror evaluate(): sums and
/// numerators fold left to right in stored child order, denominators fold
/// into a single division, small powers become repeated products and large
/// ones pow() calls, so the compiled arithmetic is bit-identical to the
/// interpreter under a contraction-free build.
struct CRender {
    const lower::KernelIR& ir;

    std::string time_var() const { return "i" + std::to_string(ir.ndim() + 1); }
    static std::string space_var(int d) { return "i" + std::to_string(d + 1); }

    std::string time_index(const GridFunctionInfo& fn, long off) const {
        const std::string base = offset_str(time_var(), off);
        if (!fn.rolling()) return base;
        const std::string slots = std::to_string(fn.time_slots);
        return off == 0 ? base + " % " + slots : "(" + base + ") % " + slots;
    }

    std::string indexed_ref(const Expr& e) const {
        const GridFunctionInfo& fn = *e->fn;
        std::string s = fn.name;
        std::size_t p = 0;
        if (fn.has_time()) s += "[" + time_index(fn, e->offsets[p++]) + "]";
        for (int d = 0; p < e->offsets.size(); ++p, ++d)
            s += "[" + offset_str(space_var(d), e->offsets[p]) + "]";
        return s;
    }

    /// Positive power rendered inline; `wrapped` additionally parenthesizes
    /// the repeated-product form for use as a denominator.
    std::string positive_power(const Expr& base, std::int64_t a, bool wrapped) const {
        if (a >= 5) return "pow(" + expr(base, kSum) + ", " + std::to_string(a) + ")";
        const std::string b = expr(base, kPow);
        std::string s = b;
        for (std::int64_t i = 1; i < a; ++i) s += "*" + b;
        return wrapped && a > 1 ? "(" + s + ")" : s;
    }

    /// Splits a sum term into sign and magnitude so subtraction renders as
    /// such; flipping the sign of one factor is exact, so this cannot change
    /// the computed value.
    std::pair<bool, std::string> signed_term(const Expr& e) const {
        if (e->kind == Kind::IntConst && e->ival < 0)
            return {true, std::to_string(-e->ival)};
        if (e->kind == Kind::FloatConst && e->fval < 0)
            return {true, format_double(-e->fval)};
        if (e->kind == Kind::Product) {
            const Expr& head = e->kids[0];
            std::vector<Expr> rest(e->kids.begin() + 1, e->kids.end());
            if (is_neg_one(head)) {
                const Expr mag = rest.size() == 1 ? rest[0] : with_children(e, std::move(rest));
                return {true, expr(mag, kProd)};
            }
            if (head->kind == Kind::IntConst && head->ival < 0) {
                rest.insert(rest.begin(), intc(-head->ival));
                return {true, expr(with_children(e, std::move(rest)), kProd)};
            }
            if (head->kind == Kind::FloatConst && head->fval < 0) {
                rest.insert(rest.begin(), floatc(-head->fval));
                return {true, expr(with_children(e, std::move(rest)), kProd)};
            }
        }
        return {false, expr(e, kProd)};
    }

    std::string expr(const Expr& e, int prec) const {
        switch (e->kind) {
            case Kind::IntConst:
                return e->ival < 0 && prec > kSum ? "(" + std::to_string(e->ival) + ")"
                                                  : std::to_string(e->ival);
            case Kind::FloatConst:
                return e->fval < 0 && prec > kSum ? "(" + format_double(e->fval) + ")"
                                                  : format_double(e->fval);
            case Kind::Symbol:
                return e->name;
            case Kind::Indexed:
                return indexed_ref(e);
            case Kind::Power: {
                const std::int64_t k = e->ival;
                std::string s;
                if (k < 0) {
                    s = "1.0/" + positive_power(e->kids[0], -k, true);
                } else {
                    s = positive_power(e->kids[0], k, false);
                }
                return prec > kProd ? "(" + s + ")" : s;
            }
            case Kind::Product: {
                std::vector<std::string> num, den;
                bool neg = false;
                for (const Expr& k : e->kids) {
                    if (is_neg_one(k)) {
                        neg = true;
                    } else if (k->kind == Kind::Power && k->ival < 0) {
                        den.push_back(positive_power(k->kids[0], -k->ival, true));
                    } else {
                        num.push_back(expr(k, kPow));
                    }
                }
                std::string s;
                for (std::size_t i = 0; i < num.size(); ++i)
                    s += (i ? "*" : "") + num[i];
                if (num.empty()) s = "1.0";
                if (!den.empty()) {
                    if (den.size() == 1) {
                        s += "/" + den[0];
                    } else {
                        s += "/(";
                        for (std::size_t i = 0; i < den.size(); ++i)
                            s += (i ? "*" : "") + den[i];
                        s += ")";
                    }
                }
                if (neg) s = "-" + s;
                return prec > kProd || (neg && prec > kSum) ? "(" + s + ")" : s;
            }
            case Kind::Sum: {
                std::string s;
                bool first = true;
                for (const Expr& k : e->kids) {
                    const auto [minus, mag] = signed_term(k);
                    if (first) {
                        s = (minus ? "-" : "") + mag;
                        first = false;
                    } else {
                        s += (minus ? " - " : " + ") + mag;
                    }
                }
                return prec > kSum ? "(" + s + ")" : s;
            }
            default:
                throw std::logic_error("codegen: symbolic node survived lowering");
        }
    }
};

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string s;
    for (std::size_t i = 0; i < parts.size(); ++i) s += (i ? sep : "") + parts[i];
    return s;
}

/// "double (*u)[130][130] = (double (*)[130][130]) u_vec;" or a plain alias
/// when only one dimension remains.
std::string cast_line(const std::string& name, const std::string& elem,
                      const std::vector<long>& dims) {
    if (dims.size() == 1) return elem + " *" + name + " = " + name + "_vec;";
    std::string suffix;
    for (std::size_t i = 1; i < dims.size(); ++i)
        suffix += "[" + std::to_string(dims[i]) + "]";
    return elem + " (*" + name + ")" + suffix + " = (" + elem + " (*)" + suffix + ") " +
           name + "_vec;";
}

std::vector<long> grid_dims(const GridFunctionInfo& fn) {
    std::vector<long> dims;
    if (fn.has_time()) dims.push_back(fn.time_slots);
    dims.insert(dims.end(), fn.shape.begin(), fn.shape.end());
    return dims;
}

long product_of(const std::vector<long>& dims) {
    long n = 1;
    for (long d : dims) n *= d;
    return n;
}

std::string block_name(int j) { return "i" + std::to_string(j + 1) + "block"; }

struct NestPlan {
    std::vector<long> lo, hi;          // interior bounds per spatial dim
    int nb = 0;                        // blocked dim count
    std::vector<std::string> bsize;    // block size per blocked dim (name or literal)
    std::vector<long> fixed;           // literal block per blocked dim, 0 when runtime
    bool blocked = false;
    std::string cut(int j) const {
        const long span = hi[j] - lo[j];
        if (fixed[j] > 0) return std::to_string(hi[j] - span % fixed[j]);
        return std::to_string(hi[j]) + " - (" + std::to_string(span) + " % " + bsize[j] + ")";
    }
};

}  // namespace

DimSplit remainder_decomposition(long lo, long hi, long block) {
    if (hi < lo || block < 1)
        throw std::invalid_argument("remainder_decomposition: bad range or block");
    const long cut = hi - (hi - lo) % block;
    return {{lo, cut, block}, {cut, hi, 1}};
}

int blocked_dims(int ndim) { return ndim >= 2 ? (ndim >= 3 ? 2 : 1) : 0; }

Stmt Stmt::line(std::string s) {
    Stmt st;
    st.kind = Kind::Text;
    st.text = std::move(s);
    return st;
}

Stmt Stmt::pragma(std::string s) {
    Stmt st;
    st.kind = Kind::Pragma;
    st.text = std::move(s);
    return st;
}

Stmt Stmt::loop(std::string var, std::string init, std::string cond, std::string inc) {
    Stmt st;
    st.kind = Kind::Loop;
    st.var = std::move(var);
    st.init = std::move(init);
    st.cond = std::move(cond);
    st.inc = std::move(inc);
    return st;
}

Stmt Stmt::block() {
    Stmt st;
    st.kind = Kind::Block;
    return st;
}

std::vector<Arg> signature(const lower::KernelIR& ir, const CodegenPlan& plan) {
    std::vector<Arg> args;
    for (const lower::GridArg& g : ir.grids)
        args.push_back({Arg::Kind::Grid, g.fn->name + "_vec", "double *",
                        product_of(grid_dims(*g.fn))});
    for (const lower::SparseSet& s : ir.sparse_sets) {
        const long corners = 1L << s.ndim;
        args.push_back({Arg::Kind::SparseIndex, s.name + "_idx_vec", "long *",
                        s.npoints * s.ndim});
        args.push_back({Arg::Kind::SparseWeight, s.name + "_w_vec", "double *",
                        s.npoints * corners});
        args.push_back({Arg::Kind::SparseData, s.name + "_data_vec", "double *",
                        s.nslots * s.npoints});
    }
    if (plan.blocking == CodegenPlan::Blocking::RuntimeParam)
        for (int j = 0; j < blocked_dims(ir.ndim()); ++j)
            args.push_back({Arg::Kind::BlockSize, block_name(j), "long", 0});
    return args;
}

namespace {

void check_plan(const lower::KernelIR& ir, const CodegenPlan& plan) {
    if (plan.alignment < 8 || (plan.alignment & (plan.alignment - 1)) != 0)
        throw std::invalid_argument("codegen: alignment must be a power of two >= 8");
    if (plan.blocking == CodegenPlan::Blocking::Fixed) {
        if (static_cast<int>(plan.fixed_blocks.size()) != blocked_dims(ir.ndim()))
            throw std::invalid_argument("codegen: fixed blocking needs one size per blocked dim");
        for (long b : plan.fixed_blocks)
            if (b < 1) throw std::invalid_argument("codegen: block sizes must be >= 1");
    }
    std::set<std::string> taken{"p"};
    for (int j = 0; j < blocked_dims(ir.ndim()); ++j) taken.insert(block_name(j));
    for (const lower::GridArg& g : ir.grids)
        if (taken.count(g.fn->name))
            throw std::invalid_argument("codegen: grid name collides with a loop variable: " +
                                        g.fn->name);
    for (const lower::SparseSet& s : ir.sparse_sets)
        if (taken.count(s.name))
            throw std::invalid_argument("codegen: sparse set name collides: " + s.name);
}

NestPlan make_nest_plan(const lower::KernelIR& ir, const CodegenPlan& plan) {
    NestPlan np;
    for (long e : ir.extents) {
        np.lo.push_back(ir.halo);
        np.hi.push_back(e - ir.halo);
    }
    np.nb = blocked_dims(ir.ndim());
    np.blocked = plan.blocking != CodegenPlan::Blocking::Off && np.nb > 0;
    if (!np.blocked) {
        np.nb = 0;
        return np;
    }
    for (int j = 0; j < np.nb; ++j) {
        const bool rt = plan.blocking == CodegenPlan::Blocking::RuntimeParam;
        np.bsize.push_back(rt ? block_name(j) : std::to_string(plan.fixed_blocks[j]));
        np.fixed.push_back(rt ? 0 : plan.fixed_blocks[j]);
    }
    return np;
}

Stmt plain_loop(int d, const std::string& lo, const std::string& hi) {
    const std::string v = CRender::space_var(d);
    return Stmt::loop(v, "int " + v + " = " + lo, v + " < " + hi, v + "++");
}

/// Innermost dimension with its SIMD annotation, holding the point body.
std::vector<Stmt> simd_tail(const lower::KernelIR& ir, const CodegenPlan& plan,
                            const NestPlan& np, std::vector<Stmt> point_body) {
    std::vector<Stmt> out;
    if (plan.simd) {
        std::vector<std::string> names;
        for (const lower::GridArg& g : ir.grids) names.push_back(g.fn->name);
        std::sort(names.begin(), names.end());
        out.push_back(Stmt::pragma("omp simd aligned(" + join(names, ", ") + ":" +
                                   std::to_string(plan.alignment) + ")"));
    }
    const int last = ir.ndim() - 1;
    Stmt inner = plain_loop(last, std::to_string(np.lo[last]), std::to_string(np.hi[last]));
    inner.body = std::move(point_body);
    out.push_back(std::move(inner));
    return out;
}

/// One unblocked nest over dims [0, last) with given bounds, SIMD innermost.
Stmt remainder_nest(const lower::KernelIR& ir, const CodegenPlan& plan, const NestPlan& np,
                    const std::vector<std::pair<std::string, std::string>>& bounds,
                    std::vector<Stmt> point_body) {
    std::vector<Stmt> tail = simd_tail(ir, plan, np, std::move(point_body));
    for (int d = ir.ndim() - 2; d >= 0; --d) {
        Stmt l = plain_loop(d, bounds[d].first, bounds[d].second);
        l.body = std::move(tail);
        tail.clear();
        tail.push_back(std::move(l));
    }
    return std::move(tail.front());
}

/// The spatial sweep: main nest plus one remainder nest per blocked dim,
/// each with its own work-sharing annotation.
std::vector<Stmt> sweep(const lower::KernelIR& ir, const CodegenPlan& plan, const NestPlan& np,
                        const std::vector<Stmt>& point_body) {
    std::vector<Stmt> out;
    const auto omp_for = [&] {
        if (plan.parallel) out.push_back(Stmt::pragma("omp for schedule(static)"));
    };
    if (!np.blocked) {
        omp_for();
        std::vector<std::pair<std::string, std::string>> bounds;
        for (int d = 0; d + 1 < ir.ndim(); ++d)
            bounds.emplace_back(std::to_string(np.lo[d]), std::to_string(np.hi[d]));
        if (ir.ndim() == 1) {
            std::vector<Stmt> tail = simd_tail(ir, plan, np, point_body);
            out.insert(out.end(), tail.begin(), tail.end());
        } else {
            out.push_back(remainder_nest(ir, plan, np, bounds, point_body));
        }
        return out;
    }

    // Main nest: block loops, then intra-block loops, then the SIMD dim.
    std::vector<Stmt> tail = simd_tail(ir, plan, np, point_body);
    for (int j = np.nb - 1; j >= 0; --j) {
        const std::string v = CRender::space_var(j);
        Stmt l = Stmt::loop(v, "int " + v + " = " + v + "b", v + " < " + v + "b + " + np.bsize[j],
                            v + "++");
        l.body = std::move(tail);
        tail.clear();
        tail.push_back(std::move(l));
    }
    for (int j = np.nb - 1; j >= 0; --j) {
        const std::string v = CRender::space_var(j) + "b";
        Stmt l = Stmt::loop(v, "int " + v + " = " + std::to_string(np.lo[j]), v + " < " + np.cut(j),
                            v + " += " + np.bsize[j]);
        l.body = std::move(tail);
        tail.clear();
        tail.push_back(std::move(l));
    }
    omp_for();
    out.push_back(std::move(tail.front()));

    // Remainder nest j: dims before j full, dim j its tail, later blocked
    // dims their main span; together with the main nest an exact cover.
    for (int j = 0; j < np.nb; ++j) {
        std::vector<std::pair<std::string, std::string>> bounds;
        for (int d = 0; d + 1 < ir.ndim(); ++d) {
            if (d < j)
                bounds.emplace_back(std::to_string(np.lo[d]), std::to_string(np.hi[d]));
            else if (d == j)
                bounds.emplace_back(np.cut(j), std::to_string(np.hi[j]));
            else
                bounds.emplace_back(std::to_string(np.lo[d]),
                                    d < np.nb ? np.cut(d) : std::to_string(np.hi[d]));
        }
        omp_for();
        out.push_back(remainder_nest(ir, plan, np, bounds, point_body));
    }
    return out;
}

std::vector<Stmt> point_statements(const lower::KernelIR& ir, const opt::CseResult& cse) {
    const CRender r{ir};
    std::vector<Stmt> body;
    for (const auto& [name, def] : cse.temps)
        body.push_back(Stmt::line("double " + name + " = " + r.expr(def, kSum) + ";"));
    for (const lower::Assignment& a : cse.assignments)
        body.push_back(Stmt::line(r.indexed_ref(a.lhs) + (a.accumulate ? " += " : " = ") +
                                  r.expr(a.rhs, kSum) + ";"));
    return body;
}

std::string corner_index(const lower::SparseSet& s, int corner, int d) {
    const int bit = (corner >> (s.ndim - 1 - d)) & 1;
    std::string ix = s.name + "_idx[p][" + std::to_string(d) + "]";
    if (bit) ix += " + 1";
    return ix;
}

std::vector<Stmt> sparse_section(const lower::KernelIR& ir) {
    const CRender r{ir};
    std::vector<Stmt> ops;
    for (const lower::SparseOp& op : ir.sparse_ops) {
        const lower::SparseSet& s = ir.sparse_sets[op.set];
        const GridFunctionPtr fn = ir.find_grid(op.grid)->fn;
        const int corners = 1 << s.ndim;
        const std::string row =
            s.name + "_data[" + offset_str(r.time_var(), op.trace_offset) + "][p]";
        Stmt loop = Stmt::loop("p", "int p = 0", "p < " + std::to_string(s.npoints), "p++");
        if (op.kind == lower::SparseOp::Kind::Inject) {
            for (int c = 0; c < corners; ++c) {
                std::string target = fn->name + "[" + r.time_index(*fn, 0) + "]";
                for (int d = 0; d < s.ndim; ++d) target += "[" + corner_index(s, c, d) + "]";
                std::string rhs = s.name + "_w[p][" + std::to_string(c) + "]";
                if (op.scale != 1.0) rhs += "*" + format_double(op.scale);
                rhs += "*" + row;
                if (!op.scale_divisor.empty()) {
                    rhs += "/" + op.scale_divisor;
                    for (int d = 0; d < s.ndim; ++d)
                        rhs += "[" + corner_index(s, c, d) + "]";
                }
                loop.body.push_back(Stmt::line(target + " += " + rhs + ";"));
            }
        } else {
            std::vector<std::string> terms;
            for (int c = 0; c < corners; ++c) {
                std::string read = fn->name + "[" + r.time_index(*fn, 0) + "]";
                for (int d = 0; d < s.ndim; ++d) read += "[" + corner_index(s, c, d) + "]";
                terms.push_back(s.name + "_w[p][" + std::to_string(c) + "]*" + read);
            }
            loop.body.push_back(Stmt::line(row + " = " + join(terms, " + ") + ";"));
        }
        ops.push_back(std::move(loop));
    }
    return ops;
}

std::vector<Stmt> first_touch(const lower::KernelIR& ir, const CodegenPlan& plan) {
    std::vector<Stmt> out;
    for (const lower::GridArg& g : ir.grids) {
        if (!g.written) continue;
        const GridFunctionInfo& fn = *g.fn;
        std::string access = fn.name;
        if (fn.has_time()) access += "[i0]";
        for (int d = 0; d < fn.ndim(); ++d) access += "[" + CRender::space_var(d) + "]";
        std::vector<Stmt> tail{Stmt::line(access + " = 0.0;")};
        for (int d = fn.ndim() - 1; d >= 0; --d) {
            Stmt l = plain_loop(d, "0", std::to_string(fn.shape[d]));
            l.body = std::move(tail);
            tail.clear();
            tail.push_back(std::move(l));
        }
        std::vector<Stmt> nest;
        if (plan.parallel) nest.push_back(Stmt::pragma("omp for schedule(static)"));
        nest.insert(nest.end(), tail.begin(), tail.end());
        if (fn.has_time()) {
            Stmt slot = Stmt::loop("i0", "int i0 = 0", "i0 < " + std::to_string(fn.time_slots),
                                   "i0++");
            slot.body = std::move(nest);
            out.push_back(std::move(slot));
        } else {
            out.insert(out.end(), nest.begin(), nest.end());
        }
    }
    return out;
}

Stmt build_ast_impl(const lower::KernelIR& ir, const CodegenPlan& plan,
                    const opt::CseResult& cse) {
    const NestPlan np = make_nest_plan(ir, plan);
    const std::vector<Stmt> point_body = point_statements(ir, cse);

    Stmt fn_body = Stmt::block();
    for (const lower::GridArg& g : ir.grids)
        fn_body.body.push_back(Stmt::line(cast_line(g.fn->name, "double", grid_dims(*g.fn))));
    for (const lower::SparseSet& s : ir.sparse_sets) {
        fn_body.body.push_back(
            Stmt::line(cast_line(s.name + "_idx", "long", {s.npoints, s.ndim})));
        fn_body.body.push_back(
            Stmt::line(cast_line(s.name + "_w", "double", {s.npoints, 1L << s.ndim})));
        fn_body.body.push_back(
            Stmt::line(cast_line(s.name + "_data", "double", {s.nslots, s.npoints})));
    }

    std::vector<Stmt> region;
    if (plan.first_touch && plan.parallel) {
        std::vector<Stmt> ft = first_touch(ir, plan);
        region.insert(region.end(), ft.begin(), ft.end());
    }

    std::vector<Stmt> per_step = sweep(ir, plan, np, point_body);
    if (!ir.sparse_ops.empty()) {
        if (plan.parallel) per_step.push_back(Stmt::pragma("omp single"));
        Stmt single = Stmt::block();
        single.body = sparse_section(ir);
        per_step.push_back(std::move(single));
    }

    if (ir.has_time) {
        const std::string t = "i" + std::to_string(ir.ndim() + 1);
        Stmt tl = ir.direction > 0
                      ? Stmt::loop(t, "int " + t + " = " + std::to_string(ir.time_start()),
                                   t + " < " + std::to_string(ir.time_stop()), t + "++")
                      : Stmt::loop(t, "int " + t + " = " + std::to_string(ir.time_stop() - 1),
                                   t + " >= " + std::to_string(ir.time_start()), t + "--");
        tl.body = std::move(per_step);
        region.push_back(std::move(tl));
    } else {
        region.insert(region.end(), per_step.begin(), per_step.end());
    }

    if (plan.parallel) {
        fn_body.body.push_back(Stmt::pragma("omp parallel"));
        Stmt blk = Stmt::block();
        blk.body = std::move(region);
        fn_body.body.push_back(std::move(blk));
    } else {
        fn_body.body.insert(fn_body.body.end(), region.begin(), region.end());
    }
    return fn_body;
}

}  // namespace

Stmt build_ast(const lower::KernelIR& ir, const CodegenPlan& plan) {
    ir.validate();
    check_plan(ir, plan);
    return build_ast_impl(ir, plan, opt::cse(ir.assignments));
}

std::string render(const Stmt& s, int indent) {
    const std::string ind(static_cast<std::size_t>(indent) * 2, ' ');
    switch (s.kind) {
        case Stmt::Kind::Text:
            return ind + s.text + "\n";
        case Stmt::Kind::Pragma:
            return ind + "#pragma " + s.text + "\n";
        case Stmt::Kind::Loop: {
            std::string out =
                ind + "for (" + s.init + "; " + s.cond + "; " + s.inc + ")\n" + ind + "{\n";
            for (const Stmt& k : s.body) out += render(k, indent + 1);
            return out + ind + "}\n";
        }
        case Stmt::Kind::Block: {
            std::string out = ind + "{\n";
            for (const Stmt& k : s.body) out += render(k, indent + 1);
            return out + ind + "}\n";
        }
    }
    return {};
}

GeneratedSource generate(const lower::KernelIR& ir, const CodegenPlan& plan) {
    ir.validate();
    check_plan(ir, plan);
    const opt::CseResult cse = opt::cse(ir.assignments);
    const Stmt body = build_ast_impl(ir, plan, cse);
    GeneratedSource out;
    out.name = ir.name;
    out.args = signature(ir, plan);

    std::vector<std::string> params;
    for (const Arg& a : out.args) {
        const std::string sep = a.ctype.back() == '*' ? "" : " ";
        params.push_back(a.ctype + sep + a.name);
    }
    std::string src = "#include <math.h>\n\n";
    src += "int " + ir.name + "(" + join(params, ", ") + ")\n{\n";
    for (const Stmt& k : body.body) src += render(k, 1);
    src += "  return 0;\n}\n";

    // Uniform entry point for the loader: unpacks one void* per argument.
    std::vector<std::string> unpack;
    for (std::size_t i = 0; i < out.args.size(); ++i) {
        const Arg& a = out.args[i];
        const std::string slot = "argv[" + std::to_string(i) + "]";
        unpack.push_back(a.kind == Arg::Kind::BlockSize ? "*(long *) " + slot
                                                        : "(" + a.ctype + ") " + slot);
    }
    src += "\nint " + ir.name + "_call(void **argv)\n{\n  return " + ir.name + "(" +
           join(unpack, ", ") + ");\n}\n";
    out.source = std::move(src);

    out.ops = cse.cost();
    out.flops_per_point = out.ops.total();
    std::set<std::pair<std::string, long>> reads, writes;
    constexpr long kStatic = std::numeric_limits<long>::min();
    const std::function<void(const Expr&)> scan = [&](const Expr& e) {
        if (e->kind == Kind::Indexed)
            reads.emplace(e->fn->name, e->fn->has_time() ? e->offsets[0] : kStatic);
        for (const Expr& k : e->kids) scan(k);
    };
    for (const lower::Assignment& a : ir.assignments) {
        scan(a.rhs);
        writes.emplace(a.lhs->fn->name, a.lhs->fn->has_time() ? a.lhs->offsets[0] : kStatic);
        if (a.accumulate)
            reads.emplace(a.lhs->fn->name, a.lhs->fn->has_time() ? a.lhs->offsets[0] : kStatic);
    }
    out.bytes_per_point = 8 * static_cast<long>(reads.size() + writes.size());
    out.interior_points = ir.interior_points();
    out.steps = ir.steps();
    return out;
}

}  // namespace sfd::codegen
