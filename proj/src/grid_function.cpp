#include "stencilfd/grid_function.hpp"

#include <cctype>
#include <functional>
#include <regex>
#include <stdexcept>

#include "stencilfd/fd.hpp"

namespace sfd {

namespace {

bool valid_name(const std::string& name) {
    if (name.empty() || (!std::isalpha(static_cast<unsigned char>(name[0])) && name[0] != '_'))
        return false;
    for (char c : name)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
    // Loop counters and hoisted temporaries belong to the code generator.
    static const std::regex reserved("^(i[0-9]+|temp[0-9]+|t|x|y|z|h|s)$");
    return !std::regex_match(name, reserved);
}

Expr zero_offsets_app(const GridFunctionPtr& fn) {
    std::vector<Expr> offs(fn->rank(), intc(0));
    return apply(fn, std::move(offs));
}

/// Replaces the application with its centered stencil along one index
/// position, adding tap * spacing to the existing offset of that position.
Expr stencil_expand(const Expr& app, int position, const char* spacing, int deriv_order,
                    int accuracy) {
    const auto taps = fd_coefficients(deriv_order, accuracy);
    const Expr sp = symbol(spacing);
    std::vector<Expr> terms;
    terms.reserve(taps.size());
    for (const StencilTap& tap : taps) {
        std::vector<Expr> offs = app->kids;
        offs[position] = offs[position] + intc(tap.offset) * sp;
        terms.push_back(ratc(tap.weight) * apply(app->fn, std::move(offs)));
    }
    return sum(std::move(terms)) * pow_expr(sp, -deriv_order);
}

bool depends_on_grid(const Expr& e) {
    if (e->kind == Kind::FuncApp || e->kind == Kind::Indexed) return true;
    for (const Expr& k : e->kids)
        if (depends_on_grid(k)) return true;
    return false;
}

Expr differentiate(const Expr& e, bool time, int spatial_dim, int deriv_order) {
    switch (e->kind) {
        case Kind::IntConst:
        case Kind::RatConst:
        case Kind::FloatConst:
        case Kind::Symbol:
            return intc(0);
        case Kind::Sum: {
            std::vector<Expr> kids;
            kids.reserve(e->kids.size());
            for (const Expr& k : e->kids)
                kids.push_back(differentiate(k, time, spatial_dim, deriv_order));
            return sum(std::move(kids));
        }
        case Kind::Product: {
            std::vector<Expr> coeff;
            Expr dependent;
            for (const Expr& k : e->kids) {
                if (depends_on_grid(k)) {
                    if (dependent)
                        throw std::invalid_argument(
                            "derivative: product of grid functions is not supported: " +
                            to_string(e));
                    dependent = k;
                } else {
                    coeff.push_back(k);
                }
            }
            if (!dependent) return intc(0);
            coeff.push_back(differentiate(dependent, time, spatial_dim, deriv_order));
            return product(std::move(coeff));
        }
        case Kind::FuncApp: {
            const GridFunctionInfo& fn = *e->fn;
            if (time) {
                if (!fn.has_time())
                    throw std::invalid_argument("derivative: " + fn.name +
                                                " does not vary in time");
                return stencil_expand(e, 0, kTimeSpacing, deriv_order, fn.time_order);
            }
            if (spatial_dim < 0 || spatial_dim >= fn.ndim())
                throw std::invalid_argument("derivative: dimension " +
                                            std::to_string(spatial_dim) + " out of range for " +
                                            fn.name);
            const int position = spatial_dim + (fn.has_time() ? 1 : 0);
            return stencil_expand(e, position, kSpaceSpacing, deriv_order, fn.space_order);
        }
        default:
            throw std::invalid_argument("derivative: unsupported operand " + to_string(e));
    }
}

}  // namespace

Expr GridFunction::at() const { return zero_offsets_app(info_); }

Expr GridFunction::forward() const { return time_shift(at(), 1); }
Expr GridFunction::backward() const { return time_shift(at(), -1); }

Expr GridFunction::dt() const { return time_derivative(at(), 1); }
Expr GridFunction::dt2() const { return time_derivative(at(), 2); }

Expr GridFunction::d(int spatial_dim, int deriv_order) const {
    return derivative(at(), spatial_dim, deriv_order);
}

Expr GridFunction::laplace() const { return sfd::laplace(at()); }

GridFunction make_grid_function(const std::string& name, std::vector<long> shape,
                                int space_order, int time_order, bool save_history,
                                long nt) {
    if (!valid_name(name))
        throw std::invalid_argument("make_grid_function: invalid name \"" + name + "\"");
    if (shape.empty() || shape.size() > 3)
        throw std::invalid_argument("make_grid_function: " + name +
                                    " must have 1 to 3 spatial dimensions");
    for (long e : shape)
        if (e < 1)
            throw std::invalid_argument("make_grid_function: non-positive extent for " + name);
    if (space_order < 2 || space_order % 2 != 0)
        throw std::invalid_argument("make_grid_function: space_order must be even and >= 2");
    if (time_order < 0 || time_order % 2 != 0)
        throw std::invalid_argument("make_grid_function: time_order must be even");
    if (time_order == 0 && save_history)
        throw std::invalid_argument("make_grid_function: save_history requires a time dimension");
    auto info = std::make_shared<GridFunctionInfo>();
    info->name = name;
    info->shape = std::move(shape);
    info->space_order = space_order;
    info->time_order = time_order;
    info->save_history = save_history;
    if (time_order > 0) {
        if (save_history) {
            if (nt < time_order + 1)
                throw std::invalid_argument(
                    "make_grid_function: saved history needs nt > time_order");
            info->time_slots = nt;
        } else {
            info->time_slots = time_order + 1;
        }
    }
    return GridFunction(std::move(info));
}

Expr derivative(const Expr& e, int spatial_dim, int deriv_order) {
    return differentiate(e, false, spatial_dim, deriv_order);
}

Expr time_derivative(const Expr& e, int deriv_order) {
    return differentiate(e, true, 0, deriv_order);
}

Expr laplace(const Expr& e) {
    int ndim = -1;
    const std::function<void(const Expr&)> scan = [&](const Expr& n) {
        if (n->kind == Kind::FuncApp) {
            if (ndim < 0) ndim = n->fn->ndim();
        }
        for (const Expr& k : n->kids) scan(k);
    };
    scan(e);
    if (ndim < 0)
        throw std::invalid_argument("laplace: expression references no grid function");
    std::vector<Expr> parts;
    for (int d = 0; d < ndim; ++d) parts.push_back(derivative(e, d, 2));
    return sum(std::move(parts));
}

Expr time_shift(const Expr& e, int steps) {
    switch (e->kind) {
        case Kind::FuncApp: {
            if (!e->fn->has_time()) return e;
            std::vector<Expr> offs = e->kids;
            offs[0] = offs[0] + intc(steps) * symbol(kTimeSpacing);
            return apply(e->fn, std::move(offs));
        }
        case Kind::Sum:
        case Kind::Product:
        case Kind::Power: {
            std::vector<Expr> kids;
            kids.reserve(e->kids.size());
            for (const Expr& k : e->kids) kids.push_back(time_shift(k, steps));
            if (e->kind == Kind::Sum) return sum(std::move(kids));
            if (e->kind == Kind::Product) return product(std::move(kids));
            return pow_expr(kids[0], e->ival);
        }
        default:
            return e;
    }
}

}  // namespace sfd
