#include "stencilfd/algebra.hpp"

#include <cmath>

namespace sfd {

Expr substitute(const Expr& e, const ExprMap<Expr>& replacements) {
    const auto hit = replacements.find(e);
    if (hit != replacements.end()) return hit->second;
    switch (e->kind) {
        case Kind::Sum:
        case Kind::Product:
        case Kind::Power:
        case Kind::FuncApp: {
            std::vector<Expr> kids;
            kids.reserve(e->kids.size());
            bool changed = false;
            for (const Expr& k : e->kids) {
                kids.push_back(substitute(k, replacements));
                changed |= kids.back().get() != k.get();
            }
            if (!changed) return e;
            switch (e->kind) {
                case Kind::Sum: return sum(std::move(kids));
                case Kind::Product: return product(std::move(kids));
                case Kind::Power: return pow_expr(kids[0], e->ival);
                default: return apply(e->fn, std::move(kids));
            }
        }
        default:
            return e;
    }
}

Expr substitute(const Expr& e, const std::map<std::string, double>& symbol_values) {
    ExprMap<Expr> repl;
    for (const auto& [name, value] : symbol_values)
        repl.emplace(symbol(name), floatc(value));
    return substitute(e, repl);
}

double evaluate(const Expr& e, const Bindings& b) {
    switch (e->kind) {
        case Kind::IntConst: return static_cast<double>(e->ival);
        case Kind::RatConst: return e->rval.to_double();
        case Kind::FloatConst: return e->fval;
        case Kind::Symbol: {
            const auto it = b.symbols.find(e->name);
            if (it == b.symbols.end())
                throw std::invalid_argument("evaluate: unbound symbol " + e->name);
            return it->second;
        }
        case Kind::FuncApp:
        case Kind::Indexed: {
            const auto it = b.leaves.find(e);
            if (it == b.leaves.end())
                throw std::invalid_argument("evaluate: unbound leaf " + to_string(e));
            return it->second;
        }
        case Kind::Power: {
            const std::int64_t k = e->ival;
            const std::int64_t a = k < 0 ? -k : k;
            const double base = evaluate(e->kids[0], b);
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
                    const double dv = evaluate(pow_expr(k->kids[0], -k->ival), b);
                    den = have_den ? den * dv : dv;
                    have_den = true;
                } else {
                    const double nv = evaluate(k, b);
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
                const double v = evaluate(k, b);
                acc = first ? v : acc + v;
                first = false;
            }
            return acc;
        }
    }
    throw std::logic_error("evaluate: unreachable");
}

Expr expand(const Expr& e) {
    switch (e->kind) {
        case Kind::Sum: {
            std::vector<Expr> kids;
            kids.reserve(e->kids.size());
            for (const Expr& k : e->kids) kids.push_back(expand(k));
            return sum(std::move(kids));
        }
        case Kind::Product: {
            // Cartesian distribution of sum children over the rest.
            std::vector<std::vector<Expr>> terms{{}};
            bool any_sum = false;
            for (const Expr& k : e->kids) {
                const Expr ek = expand(k);
                if (ek->kind == Kind::Sum) {
                    any_sum = true;
                    std::vector<std::vector<Expr>> next;
                    next.reserve(terms.size() * ek->kids.size());
                    for (const auto& t : terms) {
                        for (const Expr& s : ek->kids) {
                            auto copy = t;
                            copy.push_back(s);
                            next.push_back(std::move(copy));
                        }
                    }
                    terms = std::move(next);
                } else {
                    for (auto& t : terms) t.push_back(ek);
                }
            }
            if (!any_sum) {
                std::vector<Expr> kids;
                for (auto& t : terms.front()) kids.push_back(std::move(t));
                return product(std::move(kids));
            }
            std::vector<Expr> summands;
            summands.reserve(terms.size());
            for (auto& t : terms) summands.push_back(product(std::move(t)));
            return sum(std::move(summands));
        }
        default:
            return e;
    }
}

bool contains(const Expr& e, const Expr& needle) {
    if (equal(e, needle)) return true;
    for (const Expr& k : e->kids)
        if (contains(k, needle)) return true;
    return false;
}

Expr solve_for(const Equation& equation, const Expr& target) {
    if (target->kind != Kind::Symbol && target->kind != Kind::FuncApp &&
        target->kind != Kind::Indexed)
        throw std::invalid_argument("solve_for: target must be a symbol or application");
    const Expr diff = expand(equation.lhs - equation.rhs);
    std::vector<Expr> summands;
    if (diff->kind == Kind::Sum)
        summands.assign(diff->kids.begin(), diff->kids.end());
    else
        summands.push_back(diff);

    std::vector<Expr> coeffs;
    std::vector<Expr> rest;
    for (const Expr& term : summands) {
        std::vector<Expr> factors;
        if (term->kind == Kind::Product)
            factors.assign(term->kids.begin(), term->kids.end());
        else
            factors.push_back(term);
        std::vector<Expr> other;
        int hits = 0;
        for (const Expr& f : factors) {
            if (equal(f, target)) {
                ++hits;
            } else if (contains(f, target)) {
                throw std::invalid_argument(
                    "solve_for: equation is nonlinear in " + to_string(target));
            } else {
                other.push_back(f);
            }
        }
        if (hits == 0) {
            rest.push_back(term);
        } else if (hits == 1) {
            coeffs.push_back(other.empty() ? intc(1) : product(std::move(other)));
        } else {
            throw std::invalid_argument(
                "solve_for: equation is nonlinear in " + to_string(target));
        }
    }
    if (coeffs.empty())
        throw std::invalid_argument("solve_for: target " + to_string(target) +
                                    " does not appear in the equation");
    const Expr a = sum(std::move(coeffs));
    if (is_zero(a))
        throw std::invalid_argument("solve_for: coefficient of " + to_string(target) +
                                    " vanishes");
    return (-sum(std::move(rest))) / a;
}

}  // namespace sfd
