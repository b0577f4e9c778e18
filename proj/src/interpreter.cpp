#include "stencilfd/interpreter.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "stencilfd/optimizer.hpp"

namespace sfd::interp {

namespace {

struct GridView {
    GridFunctionPtr fn;
    double* base = nullptr;
    std::vector<long> strides;  ///< over time slots (when present) then shape
};

GridView make_view(const GridFunctionPtr& fn, double* base) {
    std::vector<long> dims;
    if (fn->has_time()) dims.push_back(fn->time_slots);
    dims.insert(dims.end(), fn->shape.begin(), fn->shape.end());
    std::vector<long> strides(dims.size(), 1);
    for (int i = static_cast<int>(dims.size()) - 2; i >= 0; --i)
        strides[i] = strides[i + 1] * dims[i + 1];
    return {fn, base, std::move(strides)};
}

/// Single-point evaluator with the same fold seeding, power expansion and
/// one-division products as evaluate(); leaves resolve against the grids and
/// the per-point temps.
struct Machine {
    const lower::KernelIR& ir;
    std::map<std::string, GridView> views;
    std::vector<std::pair<std::string, Expr>> temps;
    std::vector<double> temp_vals;
    long t = 0;
    std::vector<long> pos;

    long grid_addr(const GridView& v, const std::vector<long>& offsets) const {
        long a = 0;
        std::size_t p = 0;
        int d = 0;
        if (v.fn->has_time()) {
            long ti = t + offsets[p++];
            if (v.fn->rolling()) ti %= v.fn->time_slots;
            a += ti * v.strides[0];
            d = 1;
        }
        for (int sd = 0; p < offsets.size(); ++p, ++sd, ++d)
            a += (pos[sd] + offsets[p]) * v.strides[d];
        return a;
    }

    double load(const Expr& e) const {
        const GridView& v = views.at(e->fn->name);
        return v.base[grid_addr(v, e->offsets)];
    }

    double eval(const Expr& e) const {
        switch (e->kind) {
            case Kind::IntConst:
                return static_cast<double>(e->ival);
            case Kind::FloatConst:
                return e->fval;
            case Kind::Symbol: {
                for (std::size_t i = 0; i < temps.size(); ++i)
                    if (temps[i].first == e->name) return temp_vals[i];
                throw std::invalid_argument("interpret: unbound symbol " + e->name);
            }
            case Kind::Indexed:
                return load(e);
            case Kind::Power: {
                const std::int64_t k = e->ival;
                const std::int64_t a = k < 0 ? -k : k;
                const double base = eval(e->kids[0]);
                double v;
                if (a <= 4) {
                    v = base;
                    for (std::int64_t i = 1; i < a; ++i) v *= base;
                } else {
                    v = std::pow(base, static_cast<double>(a));
                }
                return k < 0 ? 1.0 / v : v;
            }
            case Kind::Product: {
                double num = 1.0, den = 1.0;
                bool have_num = false, have_den = false;
                for (const Expr& k : e->kids) {
                    if (k->kind == Kind::Power && k->ival < 0) {
                        const double dv = eval(pow_expr(k->kids[0], -k->ival));
                        den = have_den ? den * dv : dv;
                        have_den = true;
                    } else {
                        const double nv = eval(k);
                        num = have_num ? num * nv : nv;
                        have_num = true;
                    }
                }
                return have_den ? num / den : num;
            }
            case Kind::Sum: {
                double acc = 0.0;
                bool first = true;
                for (const Expr& k : e->kids) {
                    const double v = eval(k);
                    acc = first ? v : acc + v;
                    first = false;
                }
                return acc;
            }
            default:
                throw std::logic_error("interpret: symbolic node survived lowering");
        }
    }
};

int corner_bit(int corner, int ndim, int d) { return (corner >> (ndim - 1 - d)) & 1; }

void run_sparse(Machine& m, const lower::KernelIR& ir,
                const std::map<std::string, SparseBuffers>& sparse) {
    for (const lower::SparseOp& op : ir.sparse_ops) {
        const lower::SparseSet& s = ir.sparse_sets[op.set];
        const auto it = sparse.find(s.name);
        if (it == sparse.end())
            throw std::invalid_argument("interpret: missing sparse buffers for " + s.name);
        const SparseBuffers& b = it->second;
        const GridView& g = m.views.at(op.grid);
        const GridView* div =
            op.scale_divisor.empty() ? nullptr : &m.views.at(op.scale_divisor);
        const int corners = 1 << s.ndim;
        const long row = m.t + op.trace_offset;
        for (long p = 0; p < s.npoints; ++p) {
            const long* idx = b.indices + p * s.ndim;
            if (op.kind == lower::SparseOp::Kind::Inject) {
                for (int c = 0; c < corners; ++c) {
                    long a = (g.fn->rolling() ? m.t % g.fn->time_slots : m.t) * g.strides[0];
                    long da = 0;
                    for (int d = 0; d < s.ndim; ++d) {
                        const long coord = idx[d] + corner_bit(c, s.ndim, d);
                        a += coord * g.strides[d + 1];
                        if (div) da += coord * div->strides[d];
                    }
                    double v = b.weights[p * corners + c];
                    if (op.scale != 1.0) v *= op.scale;
                    v *= b.data[row * s.npoints + p];
                    if (div) v /= div->base[da];
                    g.base[a] += v;
                }
            } else {
                double acc = 0.0;
                for (int c = 0; c < corners; ++c) {
                    long a = (g.fn->rolling() ? m.t % g.fn->time_slots : m.t) * g.strides[0];
                    for (int d = 0; d < s.ndim; ++d)
                        a += (idx[d] + corner_bit(c, s.ndim, d)) * g.strides[d + 1];
                    const double term = b.weights[p * corners + c] * g.base[a];
                    acc = c == 0 ? term : acc + term;
                }
                b.data[row * s.npoints + p] = acc;
            }
        }
    }
}

}  // namespace

void reference_interpret(const lower::KernelIR& ir,
                         const std::map<std::string, double*>& grids,
                         const std::map<std::string, SparseBuffers>& sparse) {
    ir.validate();
    const opt::CseResult cse = opt::cse(ir.assignments);

    Machine m{ir, {}, cse.temps, std::vector<double>(cse.temps.size(), 0.0), 0,
              std::vector<long>(ir.ndim(), 0)};
    for (const lower::GridArg& g : ir.grids) {
        const auto it = grids.find(g.fn->name);
        if (it == grids.end())
            throw std::invalid_argument("interpret: missing grid buffer " + g.fn->name);
        m.views.emplace(g.fn->name, make_view(g.fn, it->second));
    }

    const int nd = ir.ndim();
    std::vector<long> lo(nd, ir.halo), hi;
    for (long e : ir.extents) hi.push_back(e - ir.halo);

    const auto step = [&](long t) {
        m.t = t;
        m.pos = lo;
        while (true) {
            for (std::size_t i = 0; i < m.temps.size(); ++i)
                m.temp_vals[i] = m.eval(m.temps[i].second);
            for (const lower::Assignment& a : cse.assignments) {
                const double v = m.eval(a.rhs);
                const GridView& g = m.views.at(a.lhs->fn->name);
                double& slot = g.base[m.grid_addr(g, a.lhs->offsets)];
                if (a.accumulate)
                    slot += v;
                else
                    slot = v;
            }
            int d = nd - 1;
            while (d >= 0 && ++m.pos[d] == hi[d]) {
                m.pos[d] = lo[d];
                --d;
            }
            if (d < 0) break;
        }
        run_sparse(m, ir, sparse);
    };

    if (!ir.has_time) {
        step(0);
        return;
    }
    if (ir.direction > 0) {
        for (long t = ir.time_start(); t < ir.time_stop(); ++t) step(t);
    } else {
        for (long t = ir.time_stop() - 1; t >= ir.time_start(); --t) step(t);
    }
}

}  // namespace sfd::interp
