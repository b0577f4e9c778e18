#include "stencilfd/lowering.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

namespace sfd::lower {

namespace {

long offset_steps(const Expr& offset, const char* spacing_name,
                  const std::map<std::string, double>& symbol_values,
                  const std::string& fn_name) {
    if (is_zero(offset)) return 0;
    Bindings bind;
    bind.symbols.insert(symbol_values.begin(), symbol_values.end());
    double value;
    try {
        value = evaluate(offset, bind);
    } catch (const std::invalid_argument& e) {
        throw LoweringError("index_lower: cannot resolve offset " + to_string(offset) +
                            " of " + fn_name + ": " + e.what());
    }
    const auto sp = symbol_values.find(spacing_name);
    if (sp == symbol_values.end() || sp->second == 0.0)
        throw LoweringError(std::string("index_lower: no value for spacing symbol ") +
                            spacing_name);
    const double steps = value / sp->second;
    const double rounded = std::round(steps);
    if (std::abs(steps - rounded) > 1e-6 * std::max(1.0, std::abs(steps)))
        throw LoweringError("index_lower: offset " + to_string(offset) + " of " + fn_name +
                            " is not a grid multiple of " + spacing_name);
    return static_cast<long>(rounded);
}

void collect_grids(const Expr& e, std::vector<GridFunctionPtr>& out) {
    if (e->kind == Kind::Indexed || e->kind == Kind::FuncApp) {
        const auto seen = std::find_if(out.begin(), out.end(), [&](const GridFunctionPtr& g) {
            return g->name == e->fn->name;
        });
        if (seen == out.end()) out.push_back(e->fn);
    }
    for (const Expr& k : e->kids) collect_grids(k, out);
}

Expr rebase_time(const Expr& e, long delta) {
    if (delta == 0) return e;
    if (e->kind == Kind::Indexed && e->fn->has_time()) {
        std::vector<long> offs = e->offsets;
        offs[0] += delta;
        return indexed(e->fn, std::move(offs));
    }
    if (e->kids.empty()) return e;
    std::vector<Expr> kids;
    kids.reserve(e->kids.size());
    for (const Expr& k : e->kids) kids.push_back(rebase_time(k, delta));
    switch (e->kind) {
        case Kind::Sum: return sum(std::move(kids));
        case Kind::Product: return product(std::move(kids));
        case Kind::Power: return pow_expr(kids[0], e->ival);
        default: return e;
    }
}

void for_each_indexed(const Expr& e, const std::function<void(const ExprNode&)>& f) {
    if (e->kind == Kind::Indexed) f(*e);
    for (const Expr& k : e->kids) for_each_indexed(k, f);
}

}  // namespace

Expr index_lower(const Expr& e, const std::map<std::string, double>& symbol_values) {
    switch (e->kind) {
        case Kind::IntConst:
        case Kind::FloatConst:
        case Kind::Indexed:
            return e;
        case Kind::RatConst:
            return floatc(e->rval.to_double());
        case Kind::Symbol: {
            const auto it = symbol_values.find(e->name);
            if (it == symbol_values.end())
                throw LoweringError("index_lower: unbound symbol " + e->name);
            return floatc(it->second);
        }
        case Kind::FuncApp: {
            const GridFunctionInfo& fn = *e->fn;
            std::vector<long> offs(e->kids.size());
            for (std::size_t i = 0; i < e->kids.size(); ++i) {
                const bool time_pos = fn.has_time() && i == 0;
                offs[i] = offset_steps(e->kids[i], time_pos ? kTimeSpacing : kSpaceSpacing,
                                       symbol_values, fn.name);
            }
            return indexed(e->fn, std::move(offs));
        }
        case Kind::Sum:
        case Kind::Product:
        case Kind::Power: {
            std::vector<Expr> kids;
            kids.reserve(e->kids.size());
            for (const Expr& k : e->kids) kids.push_back(index_lower(k, symbol_values));
            if (e->kind == Kind::Sum) return sum(std::move(kids));
            if (e->kind == Kind::Product) return product(std::move(kids));
            return pow_expr(kids[0], e->ival);
        }
    }
    throw std::logic_error("index_lower: unreachable");
}

std::vector<long> KernelIR::interior() const {
    std::vector<long> inner(extents.size());
    for (std::size_t i = 0; i < extents.size(); ++i) inner[i] = extents[i] - 2 * halo;
    return inner;
}

long KernelIR::interior_points() const {
    long n = 1;
    for (long e : interior()) n *= e;
    return n;
}

const GridArg* KernelIR::find_grid(const std::string& grid_name) const {
    for (const GridArg& g : grids)
        if (g.fn->name == grid_name) return &g;
    return nullptr;
}

void KernelIR::validate() const {
    if (name.empty()) throw LoweringError("kernel: empty name");
    if (extents.empty()) throw LoweringError("kernel " + name + ": no spatial extents");
    if (assignments.empty()) throw LoweringError("kernel " + name + ": no assignments");
    for (long e : extents)
        if (e < 2 * halo + 1)
            throw LoweringError("kernel " + name + ": extent " + std::to_string(e) +
                                " leaves no interior for halo " + std::to_string(halo));
    if (has_time && nt <= time_order)
        throw LoweringError("kernel " + name + ": nt must exceed the time order");

    std::set<std::string> written;
    for (const GridArg& g : grids)
        if (g.written) written.insert(g.fn->name);

    for (const Assignment& a : assignments) {
        if (!a.lhs || a.lhs->kind != Kind::Indexed)
            throw LoweringError("kernel " + name + ": assignment target must be an indexed access");
        const GridFunctionInfo& lfn = *a.lhs->fn;
        if (lfn.has_time() && a.lhs->offsets[0] != 0)
            throw LoweringError("kernel " + name + ": target time offset must be rebased to 0");
        for (int d = 0; d < lfn.ndim(); ++d)
            if (a.lhs->offsets[d + (lfn.has_time() ? 1 : 0)] != 0)
                throw LoweringError("kernel " + name + ": target must be written at the loop point");
        auto check = [&](const ExprNode& n) {
            const int base = n.fn->has_time() ? 1 : 0;
            if (n.fn->has_time()) {
                const long toff = n.offsets[0];
                if (n.fn->save_history) {
                    // Direct rows: every loop index must land inside the buffer,
                    // which may carry slack rows beyond nt.
                    if (toff < -time_order || toff > n.fn->time_slots - nt)
                        throw LoweringError("kernel " + name + ": saved grid " + n.fn->name +
                                            " addressed outside its history");
                } else {
                    const long lo = direction > 0 ? -time_order : 0;
                    const long hi = direction > 0 ? 0 : time_order;
                    if (toff < lo || toff > hi)
                        throw LoweringError("kernel " + name + ": time offset " +
                                            std::to_string(toff) + " of " + n.fn->name +
                                            " outside the reachable window");
                }
            }
            bool spatial_zero = true;
            for (int d = 0; d < n.fn->ndim(); ++d) {
                const long off = n.offsets[base + d];
                if (off != 0) spatial_zero = false;
                if (off < -halo || off > halo)
                    throw LoweringError("kernel " + name + ": stencil reach " +
                                        std::to_string(off) + " on " + n.fn->name +
                                        " exceeds halo " + std::to_string(halo));
            }
            const bool same_slot = !n.fn->has_time() || n.offsets[0] == 0;
            if (written.count(n.fn->name) && same_slot && !spatial_zero)
                throw LoweringError("kernel " + name + ": " + n.fn->name +
                                    " is read at a spatial offset in the slot being written");
        };
        for_each_indexed(a.rhs, check);
        for_each_indexed(a.lhs, check);
    }

    for (const SparseOp& op : sparse_ops) {
        if (!has_time)
            throw LoweringError("kernel " + name + ": sparse operations need a time loop");
        if (op.set < 0 || op.set >= static_cast<int>(sparse_sets.size()))
            throw LoweringError("kernel " + name + ": sparse op references unknown set");
        const SparseSet& set = sparse_sets[op.set];
        if (set.ndim != ndim())
            throw LoweringError("kernel " + name + ": sparse set " + set.name +
                                " has wrong dimensionality");
        if (!find_grid(op.grid))
            throw LoweringError("kernel " + name + ": sparse op references unknown grid " +
                                op.grid);
        if (!op.scale_divisor.empty() && !find_grid(op.scale_divisor))
            throw LoweringError("kernel " + name + ": sparse op divisor grid " +
                                op.scale_divisor + " is not an argument");
        const long lo = time_start() + op.trace_offset;
        const long hi = time_stop() - 1 + op.trace_offset;
        if (lo < 0 || hi >= set.nslots)
            throw LoweringError("kernel " + name + ": trace offset " +
                                std::to_string(op.trace_offset) + " leaves the " + set.name +
                                " record");
    }
}

KernelIR build_kernel_ir(const std::string& name, const std::vector<Equation>& equations,
                         const std::vector<GridFunction>& grid_functions,
                         const std::map<std::string, double>& symbol_values, long nt) {
    if (equations.empty())
        throw LoweringError("build_kernel_ir: no equations");
    if (grid_functions.empty())
        throw LoweringError("build_kernel_ir: no grid functions");

    KernelIR ir;
    ir.name = name;

    // Shapes and halo come from the declared argument list.
    ir.extents = grid_functions.front().info().shape;
    for (const GridFunction& g : grid_functions) {
        if (g.info().shape != ir.extents)
            throw LoweringError("build_kernel_ir: conflicting shapes for " + g.info().name);
        ir.halo = std::max<long>(ir.halo, g.info().space_order / 2);
    }

    std::vector<Assignment> lowered;
    for (const Equation& e : equations) {
        Assignment a;
        a.lhs = index_lower(e.lhs, symbol_values);
        a.rhs = index_lower(e.rhs, symbol_values);
        if (a.lhs->kind != Kind::Indexed)
            throw LoweringError("build_kernel_ir: left-hand side must be an application, got " +
                                to_string(e.lhs));
        lowered.push_back(std::move(a));
    }

    // The shared time offset of the stepping targets fixes the direction.
    long k0 = 0;
    bool have_k0 = false;
    for (const Assignment& a : lowered) {
        if (!a.lhs->fn->has_time()) continue;
        const long off = a.lhs->offsets[0];
        if (off != 1 && off != -1)
            throw LoweringError("build_kernel_ir: " + a.lhs->fn->name +
                                " must be written one step forward or backward, offset " +
                                std::to_string(off));
        if (have_k0 && off != k0)
            throw LoweringError("build_kernel_ir: mixed stepping directions");
        k0 = off;
        have_k0 = true;
    }

    std::set<std::string> written;
    std::vector<GridFunctionPtr> referenced;
    for (Assignment& a : lowered) {
        a.lhs = rebase_time(a.lhs, -k0);
        a.rhs = rebase_time(a.rhs, -k0);
        written.insert(a.lhs->fn->name);
        collect_grids(a.lhs, referenced);
        collect_grids(a.rhs, referenced);
        // Eq(g, g + delta) is an accumulation: strip the self term.
        if (a.rhs->kind == Kind::Sum) {
            std::vector<Expr> rest;
            int hits = 0;
            for (const Expr& k : a.rhs->kids) {
                if (equal(k, a.lhs) && hits == 0) ++hits;
                else rest.push_back(k);
            }
            if (hits == 1) {
                a.accumulate = true;
                a.rhs = sum(std::move(rest));
            }
        }
    }

    int time_order = 0;
    bool has_time = false;
    for (const GridFunctionPtr& g : referenced) {
        if (!g->has_time()) continue;
        has_time = true;
        if (time_order != 0 && g->time_order != time_order)
            throw LoweringError("build_kernel_ir: mixed time orders");
        time_order = g->time_order;
    }
    if (has_time && !have_k0)
        throw LoweringError("build_kernel_ir: time-varying functions need a stepping equation");
    ir.has_time = has_time;
    ir.time_order = time_order;
    ir.direction = k0 < 0 ? -1 : 1;
    if (has_time) {
        for (const GridFunctionPtr& g : referenced)
            if (g->has_time() && g->save_history) {
                if (nt == 0)
                    nt = g->time_slots;
                else if (g->time_slots < nt)
                    throw LoweringError("build_kernel_ir: saved history of " + g->name +
                                        " is shorter than nt");
            }
        if (nt <= time_order)
            throw LoweringError("build_kernel_ir: nt must exceed the time order");
        ir.nt = nt;
    }

    // Argument order follows the declaration list exactly.
    std::set<std::string> declared;
    for (const GridFunction& g : grid_functions) {
        declared.insert(g.info().name);
        ir.grids.push_back({g.ptr(), written.count(g.info().name) > 0});
    }
    for (const GridFunctionPtr& g : referenced)
        if (!declared.count(g->name))
            throw LoweringError("build_kernel_ir: " + g->name +
                                " is referenced but not declared");
    if (declared.size() != grid_functions.size())
        throw LoweringError("build_kernel_ir: duplicate grid function declaration");
    for (const GridFunction& g : grid_functions) {
        const auto used = std::find_if(referenced.begin(), referenced.end(),
                                       [&](const GridFunctionPtr& r) {
                                           return r->name == g.info().name;
                                       });
        if (used == referenced.end())
            throw LoweringError("build_kernel_ir: declared grid function " + g.info().name +
                                " is never referenced");
    }

    ir.assignments = std::move(lowered);
    ir.validate();
    return ir;
}

}  // namespace sfd::lower
