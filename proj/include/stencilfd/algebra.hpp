#pragma once

#include <map>
#include <string>

#include "stencilfd/expr.hpp"

namespace sfd {

struct Equation {
    Expr lhs;
    Expr rhs;
};

inline Equation eq(Expr lhs, Expr rhs) { return Equation{std::move(lhs), std::move(rhs)}; }

/// Replaces every subtree that structurally matches a key with its mapped
/// expression, then re-canonicalizes on the way back up.  Replacements are
/// not themselves rescanned.
Expr substitute(const Expr& e, const ExprMap<Expr>& replacements);

/// Convenience overload binding symbols by name to numeric values.
Expr substitute(const Expr& e, const std::map<std::string, double>& symbol_values);

/// Bindings for numeric evaluation.  Grid-function applications and indexed
/// accesses are matched structurally, symbols by name.
struct Bindings {
    std::map<std::string, double> symbols;
    ExprMap<double> leaves;
};

/// Evaluates a tree to a double under a defined operation order: children in
/// canonical order, sums and numerator products folded left to right, one
/// division by the folded denominator, small integer powers by repeated
/// multiplication and larger ones through std::pow.  The reference
/// interpreter and the portable compiled kernels follow the same order.
double evaluate(const Expr& e, const Bindings& b);

/// Distributes products over sums bottom-up; powers are left intact.
Expr expand(const Expr& e);

/// Solves an equation for a target symbol or application the equation is
/// linear in.  Throws std::invalid_argument when the target is absent or
/// appears nonlinearly.
Expr solve_for(const Equation& equation, const Expr& target);

bool contains(const Expr& e, const Expr& needle);

}  // namespace sfd
