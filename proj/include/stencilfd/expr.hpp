#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "stencilfd/rational.hpp"

namespace sfd {

class ExprNode;
using Expr = std::shared_ptr<const ExprNode>;

/// Static description of a grid function: a scalar field discretized on a
/// rectilinear grid, optionally carrying a time dimension.  Symbolic
/// applications, the lowered IR and the runtime buffers all share one
/// instance, so shape and ordering decisions are made exactly once.
struct GridFunctionInfo {
    std::string name;
    std::vector<long> shape;  ///< allocated spatial extents, halo included
    int space_order = 2;
    int time_order = 0;       ///< 0 means the function does not vary in time
    bool save_history = false;
    long time_slots = 0;      ///< nt when saving, time_order + 1 when rolling

    int ndim() const { return static_cast<int>(shape.size()); }
    bool has_time() const { return time_order > 0; }
    bool rolling() const { return has_time() && !save_history; }
    /// Number of index positions an application carries (time first).
    int rank() const { return ndim() + (has_time() ? 1 : 0); }
};

using GridFunctionPtr = std::shared_ptr<const GridFunctionInfo>;

enum class Kind : std::uint8_t {
    IntConst,
    RatConst,
    FloatConst,
    Symbol,
    Product,
    FuncApp,
    Indexed,
    Power,
    Sum,
};

/// Immutable expression node.  Trees are canonical by construction: the
/// builders flatten nested sums and products, fold constants, merge powers
/// of a common base and sort children into a total structural order, so two
/// equivalent constructions yield structurally identical trees.
class ExprNode {
public:
    Kind kind;
    std::int64_t ival = 0;        ///< IntConst value, Power exponent
    Rational rval;                ///< RatConst value
    double fval = 0.0;            ///< FloatConst value
    std::string name;             ///< Symbol name
    GridFunctionPtr fn;           ///< FuncApp / Indexed target
    std::vector<long> offsets;    ///< Indexed integer offsets, time first
    std::vector<Expr> kids;       ///< n-ary children; Power base at kids[0]
    std::size_t hash = 0;

    explicit ExprNode(Kind k) : kind(k) {}
};

// Leaf builders.
Expr intc(std::int64_t v);
Expr ratc(const Rational& v);
Expr floatc(double v);
Expr symbol(const std::string& name);

// Canonicalizing n-ary builders.
Expr sum(std::vector<Expr> kids);
Expr product(std::vector<Expr> kids);
Expr pow_expr(const Expr& base, std::int64_t exponent);

// Grid-function application with per-dimension offset expressions (time
// first when present), and its integer-indexed counterpart after lowering.
Expr apply(const GridFunctionPtr& fn, std::vector<Expr> dim_offsets);
Expr indexed(const GridFunctionPtr& fn, std::vector<long> offsets);

inline Expr operator+(const Expr& a, const Expr& b) { return sum({a, b}); }
inline Expr operator*(const Expr& a, const Expr& b) { return product({a, b}); }
inline Expr operator-(const Expr& a) { return product({intc(-1), a}); }
inline Expr operator-(const Expr& a, const Expr& b) { return a + (-b); }
inline Expr operator/(const Expr& a, const Expr& b) {
    return product({a, pow_expr(b, -1)});
}

/// Total structural order used for canonical child sorting.  Negative when
/// a sorts before b, zero only for structurally equal trees.
int compare(const Expr& a, const Expr& b);
bool equal(const Expr& a, const Expr& b);

bool is_const(const Expr& e);
bool is_zero(const Expr& e);
double const_value(const Expr& e);

/// Rebuilds a tree bottom-up through the canonicalizing builders.  Trees
/// made by the builders are fixed points, which the tests rely on.
Expr canonicalize(const Expr& e);

/// Same-kind node with replaced children in the given order, skipping
/// canonicalization.  For passes that substitute subtrees one for one and
/// must not disturb the evaluation order the children already have.
Expr with_children(const Expr& like, std::vector<Expr> kids);

/// Human-readable rendering, e.g. "(-2*f(x, y) + f(x - h, y) + f(x + h, y))/h**2".
std::string to_string(const Expr& e);

/// Shortest decimal form of v that parses back to exactly v.
std::string format_double(double v);

struct ExprHash {
    std::size_t operator()(const Expr& e) const { return e->hash; }
};
struct ExprEq {
    bool operator()(const Expr& a, const Expr& b) const { return equal(a, b); }
};
template <class V>
using ExprMap = std::unordered_map<Expr, V, ExprHash, ExprEq>;

/// Names used when printing application arguments: t for time, then x, y, z.
std::string dim_var_name(const GridFunctionInfo& fn, int position);

}  // namespace sfd
