#include "stencilfd/expr.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace sfd {

namespace {

std::size_t hash_combine(std::size_t h, std::size_t v) {
    // FNV-1a style mixing; stable across runs because no pointers are hashed.
    h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    return h;
}

std::size_t compute_hash(const ExprNode& n) {
    std::size_t h = static_cast<std::size_t>(n.kind) * 0x100000001b3ull;
    switch (n.kind) {
        case Kind::IntConst: h = hash_combine(h, static_cast<std::size_t>(n.ival)); break;
        case Kind::RatConst:
            h = hash_combine(h, static_cast<std::size_t>(n.rval.num()));
            h = hash_combine(h, static_cast<std::size_t>(n.rval.den()));
            break;
        case Kind::FloatConst: {
            std::uint64_t bits;
            std::memcpy(&bits, &n.fval, sizeof bits);
            h = hash_combine(h, bits);
            break;
        }
        case Kind::Symbol: h = hash_combine(h, std::hash<std::string>{}(n.name)); break;
        case Kind::FuncApp:
        case Kind::Indexed:
            h = hash_combine(h, std::hash<std::string>{}(n.fn->name));
            for (long o : n.offsets) h = hash_combine(h, static_cast<std::size_t>(o));
            break;
        case Kind::Power: h = hash_combine(h, static_cast<std::size_t>(n.ival)); break;
        default: break;
    }
    for (const Expr& k : n.kids) h = hash_combine(h, k->hash);
    return h;
}

Expr finish(std::shared_ptr<ExprNode> n) {
    n->hash = compute_hash(*n);
    return n;
}

int kind_rank(Kind k) { return static_cast<int>(k); }

bool is_number(const Expr& e) {
    return e->kind == Kind::IntConst || e->kind == Kind::RatConst ||
           e->kind == Kind::FloatConst;
}

/// Folds a list of numeric constants.  Rationals combine exactly; as soon
/// as a float participates the result is a float.  Constants are folded in
/// canonical order so the result does not depend on construction order.
Expr fold_constants(std::vector<Expr> consts, bool multiplicative) {
    std::sort(consts.begin(), consts.end(),
              [](const Expr& a, const Expr& b) { return compare(a, b) < 0; });
    Rational exact = multiplicative ? Rational(1) : Rational(0);
    bool has_float = false;
    double facc = multiplicative ? 1.0 : 0.0;
    for (const Expr& c : consts) {
        if (c->kind == Kind::FloatConst) {
            if (multiplicative) facc *= c->fval; else facc += c->fval;
            has_float = true;
        } else {
            const Rational v = c->kind == Kind::IntConst ? Rational(c->ival) : c->rval;
            if (multiplicative) exact = exact * v; else exact = exact + v;
        }
    }
    if (!has_float) return exact.is_integer() ? intc(exact.num()) : ratc(exact);
    if (multiplicative) return floatc(facc * exact.to_double());
    return floatc(facc + exact.to_double());
}

}  // namespace

Expr intc(std::int64_t v) {
    auto n = std::make_shared<ExprNode>(Kind::IntConst);
    n->ival = v;
    return finish(std::move(n));
}

Expr ratc(const Rational& v) {
    if (v.is_integer()) return intc(v.num());
    auto n = std::make_shared<ExprNode>(Kind::RatConst);
    n->rval = v;
    return finish(std::move(n));
}

Expr floatc(double v) {
    auto n = std::make_shared<ExprNode>(Kind::FloatConst);
    n->fval = v;
    return finish(std::move(n));
}

Expr symbol(const std::string& name) {
    if (name.empty()) throw std::invalid_argument("symbol: empty name");
    auto n = std::make_shared<ExprNode>(Kind::Symbol);
    n->name = name;
    return finish(std::move(n));
}

Expr sum(std::vector<Expr> kids) {
    std::vector<Expr> flat;
    std::vector<Expr> consts;
    for (Expr& k : kids) {
        if (!k) throw std::invalid_argument("sum: null child");
        if (k->kind == Kind::Sum) {
            for (const Expr& g : k->kids)
                (is_number(g) ? consts : flat).push_back(g);
        } else {
            (is_number(k) ? consts : flat).push_back(std::move(k));
        }
    }
    if (!consts.empty()) {
        Expr c = fold_constants(std::move(consts), false);
        if (!is_zero(c) || flat.empty()) flat.push_back(std::move(c));
    }
    if (flat.empty()) return intc(0);
    if (flat.size() == 1) return flat.front();
    std::sort(flat.begin(), flat.end(),
              [](const Expr& a, const Expr& b) { return compare(a, b) < 0; });
    auto n = std::make_shared<ExprNode>(Kind::Sum);
    n->kids = std::move(flat);
    return finish(std::move(n));
}

Expr product(std::vector<Expr> kids) {
    std::vector<Expr> flat;
    std::vector<Expr> consts;
    for (Expr& k : kids) {
        if (!k) throw std::invalid_argument("product: null child");
        if (k->kind == Kind::Product) {
            for (const Expr& g : k->kids)
                (is_number(g) ? consts : flat).push_back(g);
        } else {
            (is_number(k) ? consts : flat).push_back(std::move(k));
        }
    }
    // Merge powers of a structurally equal base so h**-1 * h**-1 becomes
    // h**-2 and x * x becomes x**2.
    std::vector<std::pair<Expr, std::int64_t>> bases;
    for (Expr& k : flat) {
        Expr base = k;
        std::int64_t exp = 1;
        if (k->kind == Kind::Power) { base = k->kids[0]; exp = k->ival; }
        bool merged = false;
        for (auto& [b, e] : bases) {
            if (equal(b, base)) { e += exp; merged = true; break; }
        }
        if (!merged) bases.emplace_back(std::move(base), exp);
    }
    flat.clear();
    for (auto& [b, e] : bases) {
        if (e == 0) continue;
        flat.push_back(e == 1 ? b : pow_expr(b, e));
    }
    if (!consts.empty()) {
        Expr c = fold_constants(std::move(consts), true);
        if (is_zero(c)) return c;
        const bool is_one = c->kind == Kind::IntConst && c->ival == 1;
        if (!is_one || flat.empty()) flat.push_back(std::move(c));
    }
    if (flat.empty()) return intc(1);
    if (flat.size() == 1) return flat.front();
    std::sort(flat.begin(), flat.end(),
              [](const Expr& a, const Expr& b) { return compare(a, b) < 0; });
    auto n = std::make_shared<ExprNode>(Kind::Product);
    n->kids = std::move(flat);
    return finish(std::move(n));
}

Expr pow_expr(const Expr& base, std::int64_t exponent) {
    if (!base) throw std::invalid_argument("pow_expr: null base");
    if (exponent == 0) return intc(1);
    if (exponent == 1) return base;
    if (base->kind == Kind::IntConst || base->kind == Kind::RatConst) {
        Rational b = base->kind == Kind::IntConst ? Rational(base->ival) : base->rval;
        if (b.is_zero() && exponent < 0)
            throw std::domain_error("pow_expr: zero base with negative exponent");
        Rational acc(1);
        const std::int64_t n = exponent < 0 ? -exponent : exponent;
        for (std::int64_t i = 0; i < n; ++i) acc = acc * b;
        if (exponent < 0) acc = Rational(1) / acc;
        return ratc(acc);
    }
    if (base->kind == Kind::FloatConst) return floatc(std::pow(base->fval, static_cast<double>(exponent)));
    if (base->kind == Kind::Power) return pow_expr(base->kids[0], base->ival * exponent);
    if (base->kind == Kind::Product) {
        std::vector<Expr> kids;
        kids.reserve(base->kids.size());
        for (const Expr& k : base->kids) kids.push_back(pow_expr(k, exponent));
        return product(std::move(kids));
    }
    auto n = std::make_shared<ExprNode>(Kind::Power);
    n->ival = exponent;
    n->kids = {base};
    return finish(std::move(n));
}

namespace {

/// Accumulates an offset expression of the shape c1*sym + c2 with rational
/// coefficients.  Returns false for anything else (floats, mixed symbols).
bool collect_offset(const Expr& e, std::string& sym, Rational& coeff, Rational& cst) {
    switch (e->kind) {
        case Kind::IntConst: cst = cst + Rational(e->ival); return true;
        case Kind::RatConst: cst = cst + e->rval; return true;
        case Kind::Symbol:
            if (!sym.empty() && sym != e->name) return false;
            sym = e->name;
            coeff = coeff + Rational(1);
            return true;
        case Kind::Product: {
            if (e->kids.size() == 2 && is_number(e->kids[0]) &&
                e->kids[0]->kind != Kind::FloatConst && e->kids[1]->kind == Kind::Symbol) {
                if (!sym.empty() && sym != e->kids[1]->name) return false;
                sym = e->kids[1]->name;
                const Expr& c = e->kids[0];
                coeff = coeff + (c->kind == Kind::IntConst ? Rational(c->ival) : c->rval);
                return true;
            }
            return false;
        }
        case Kind::Sum:
            for (const Expr& k : e->kids)
                if (!collect_offset(k, sym, coeff, cst)) return false;
            return true;
        default:
            return false;
    }
}

/// Collapses like terms in application offsets so shifting forward then
/// backward lands exactly on the original application.
Expr normalize_offset(const Expr& e) {
    std::string sym;
    Rational coeff(0), cst(0);
    if (!collect_offset(e, sym, coeff, cst)) return e;
    std::vector<Expr> parts;
    if (!coeff.is_zero()) parts.push_back(product({ratc(coeff), symbol(sym)}));
    if (!cst.is_zero()) parts.push_back(ratc(cst));
    return sum(std::move(parts));
}

}  // namespace

Expr apply(const GridFunctionPtr& fn, std::vector<Expr> dim_offsets) {
    if (!fn) throw std::invalid_argument("apply: null grid function");
    if (static_cast<int>(dim_offsets.size()) != fn->rank())
        throw std::invalid_argument("apply: " + fn->name + " expects " +
                                    std::to_string(fn->rank()) + " dimension offsets, got " +
                                    std::to_string(dim_offsets.size()));
    for (Expr& o : dim_offsets) {
        if (!o) throw std::invalid_argument("apply: null offset expression");
        o = normalize_offset(o);
    }
    auto n = std::make_shared<ExprNode>(Kind::FuncApp);
    n->fn = fn;
    n->kids = std::move(dim_offsets);
    return finish(std::move(n));
}

Expr indexed(const GridFunctionPtr& fn, std::vector<long> offsets) {
    if (!fn) throw std::invalid_argument("indexed: null grid function");
    if (static_cast<int>(offsets.size()) != fn->rank())
        throw std::invalid_argument("indexed: rank mismatch for " + fn->name);
    auto n = std::make_shared<ExprNode>(Kind::Indexed);
    n->fn = fn;
    n->offsets = std::move(offsets);
    return finish(std::move(n));
}

bool is_const(const Expr& e) { return is_number(e); }

bool is_zero(const Expr& e) {
    return (e->kind == Kind::IntConst && e->ival == 0) ||
           (e->kind == Kind::FloatConst && e->fval == 0.0);
}

double const_value(const Expr& e) {
    switch (e->kind) {
        case Kind::IntConst: return static_cast<double>(e->ival);
        case Kind::RatConst: return e->rval.to_double();
        case Kind::FloatConst: return e->fval;
        default: throw std::logic_error("const_value: not a constant");
    }
}

namespace {

/// Sort key for application offsets: the multiple of the spacing symbol,
/// so f(x - h, y) orders before f(x, y) before f(x + h, y).  Falls back to
/// structural comparison for shapes that are not plain multiples.
bool offset_sort_key(const Expr& e, double& key) {
    if (is_number(e)) { key = const_value(e); return true; }
    if (e->kind == Kind::Symbol) { key = 1.0; return true; }
    if (e->kind == Kind::Product && is_number(e->kids.front())) {
        key = const_value(e->kids.front());
        return true;
    }
    return false;
}

}  // namespace

int compare(const Expr& a, const Expr& b) {
    if (a.get() == b.get()) return 0;
    const int ra = kind_rank(a->kind), rb = kind_rank(b->kind);
    if (ra != rb) return ra < rb ? -1 : 1;
    switch (a->kind) {
        case Kind::IntConst:
            if (a->ival != b->ival) return a->ival < b->ival ? -1 : 1;
            return 0;
        case Kind::RatConst:
            if (a->rval == b->rval) return 0;
            return a->rval < b->rval ? -1 : 1;
        case Kind::FloatConst:
            if (a->fval != b->fval) return a->fval < b->fval ? -1 : 1;
            return 0;
        case Kind::Symbol:
            return a->name.compare(b->name) < 0 ? -1 : (a->name == b->name ? 0 : 1);
        case Kind::FuncApp: {
            const int c = a->fn->name.compare(b->fn->name);
            if (c != 0) return c < 0 ? -1 : 1;
            if (a->kids.size() != b->kids.size())
                return a->kids.size() < b->kids.size() ? -1 : 1;
            for (std::size_t i = 0; i < a->kids.size(); ++i) {
                double ka, kb;
                if (offset_sort_key(a->kids[i], ka) && offset_sort_key(b->kids[i], kb) &&
                    ka != kb)
                    return ka < kb ? -1 : 1;
                const int kc = compare(a->kids[i], b->kids[i]);
                if (kc != 0) return kc;
            }
            return 0;
        }
        case Kind::Indexed: {
            const int c = a->fn->name.compare(b->fn->name);
            if (c != 0) return c < 0 ? -1 : 1;
            if (a->offsets != b->offsets)
                return a->offsets < b->offsets ? -1 : 1;
            break;
        }
        case Kind::Power:
            if (a->ival != b->ival) {
                const int c = compare(a->kids[0], b->kids[0]);
                if (c != 0) return c;
                return a->ival < b->ival ? -1 : 1;
            }
            break;
        default: break;
    }
    const std::size_t n = std::min(a->kids.size(), b->kids.size());
    for (std::size_t i = 0; i < n; ++i) {
        const int c = compare(a->kids[i], b->kids[i]);
        if (c != 0) return c;
    }
    if (a->kids.size() != b->kids.size())
        return a->kids.size() < b->kids.size() ? -1 : 1;
    return 0;
}

bool equal(const Expr& a, const Expr& b) {
    if (a.get() == b.get()) return true;
    if (a->hash != b->hash) return false;
    return compare(a, b) == 0;
}

Expr canonicalize(const Expr& e) {
    switch (e->kind) {
        case Kind::Sum:
        case Kind::Product: {
            std::vector<Expr> kids;
            kids.reserve(e->kids.size());
            for (const Expr& k : e->kids) kids.push_back(canonicalize(k));
            return e->kind == Kind::Sum ? sum(std::move(kids)) : product(std::move(kids));
        }
        case Kind::Power:
            return pow_expr(canonicalize(e->kids[0]), e->ival);
        case Kind::FuncApp: {
            std::vector<Expr> kids;
            kids.reserve(e->kids.size());
            for (const Expr& k : e->kids) kids.push_back(canonicalize(k));
            return apply(e->fn, std::move(kids));
        }
        default:
            return e;
    }
}

Expr with_children(const Expr& like, std::vector<Expr> kids) {
    const bool nary = like->kind == Kind::Sum || like->kind == Kind::Product;
    if (nary ? kids.size() < 2 : like->kids.size() != kids.size())
        throw std::invalid_argument("with_children: arity mismatch");
    if (like->kids.empty()) return like;
    auto n = std::make_shared<ExprNode>(like->kind);
    n->ival = like->ival;
    n->fn = like->fn;
    n->kids = std::move(kids);
    return finish(std::move(n));
}

std::string format_double(double v) {
    char buf[64];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

std::string dim_var_name(const GridFunctionInfo& fn, int position) {
    static const char* spatial[3] = {"x", "y", "z"};
    int sp = position;
    if (fn.has_time()) {
        if (position == 0) return "t";
        sp = position - 1;
    }
    if (fn.ndim() <= 3) return spatial[sp];
    return "x" + std::to_string(sp + 1);
}

namespace {

// Pretty printer.  Precedence: Sum < Product < Power < atom.
enum Prec { kSum = 0, kProd = 1, kPow = 2, kAtom = 3 };

std::string render(const Expr& e, int parent_prec);

/// Splits a leading negative constant off a term so sums can print "a - b".
/// Returns true and the magnitude term when e is negative in that sense.
bool split_negative(const Expr& e, Expr& magnitude) {
    if (is_number(e)) {
        const double v = const_value(e);
        const bool neg = e->kind == Kind::RatConst ? e->rval.is_negative() : v < 0;
        if (!neg) return false;
        switch (e->kind) {
            case Kind::IntConst: magnitude = intc(-e->ival); break;
            case Kind::RatConst: magnitude = ratc(-e->rval); break;
            default: magnitude = floatc(-e->fval); break;
        }
        return true;
    }
    if (e->kind == Kind::Product && is_number(e->kids.front())) {
        Expr cmag;
        if (!split_negative(e->kids.front(), cmag)) return false;
        std::vector<Expr> kids(e->kids.begin() + 1, e->kids.end());
        kids.push_back(std::move(cmag));
        magnitude = product(std::move(kids));
        return true;
    }
    return false;
}

std::string render_product(const Expr& e, int parent_prec) {
    std::vector<const Expr*> num;
    std::vector<std::pair<const Expr*, std::int64_t>> den;
    bool negate = false;
    std::string lead;
    for (const Expr& k : e->kids) {
        if (k->kind == Kind::Power && k->ival < 0) {
            den.emplace_back(&k->kids[0], -k->ival);
        } else if (is_number(k) && lead.empty() && !negate && num.empty()) {
            if (k->kind == Kind::IntConst && k->ival == -1) negate = true;
            else lead = render(k, kSum);
        } else {
            num.push_back(&k);
        }
    }
    std::string out = negate ? "-" : "";
    if (!lead.empty()) {
        out += lead;
        if (!num.empty()) out += "*";
    } else if (num.empty()) {
        out += "1";
    }
    for (std::size_t i = 0; i < num.size(); ++i) {
        if (i) out += "*";
        out += render(*num[i], kProd);
    }
    if (!den.empty()) {
        out += "/";
        std::string d;
        for (std::size_t i = 0; i < den.size(); ++i) {
            if (i) d += "*";
            const Expr& b = *den[i].first;
            std::string base = render(b, kPow);
            d += den[i].second == 1 ? base : base + "**" + std::to_string(den[i].second);
        }
        if (den.size() > 1) out += "(" + d + ")";
        else out += d;
    }
    const bool needs_parens = parent_prec > kProd || (parent_prec == kProd && out[0] == '-');
    return needs_parens ? "(" + out + ")" : out;
}

std::string render_app_arg(const GridFunctionInfo& fn, int position, const Expr& off) {
    const std::string var = dim_var_name(fn, position);
    if (is_zero(off)) return var;
    Expr mag;
    if (split_negative(off, mag)) return var + " - " + render(mag, kSum);
    return var + " + " + render(off, kSum);
}

std::string render_indexed_part(const GridFunctionInfo& fn, int position, long off) {
    std::string var = dim_var_name(fn, position);
    const bool time_pos = fn.has_time() && position == 0;
    std::string idx = var;
    if (off > 0) idx += " + " + std::to_string(off);
    if (off < 0) idx += " - " + std::to_string(-off);
    if (time_pos && fn.rolling()) {
        const std::string wrapped = off == 0 ? idx : "(" + idx + ")";
        return wrapped + " % " + std::to_string(fn.time_slots);
    }
    return idx;
}

std::string render(const Expr& e, int parent_prec) {
    switch (e->kind) {
        case Kind::IntConst: {
            std::string s = std::to_string(e->ival);
            return (e->ival < 0 && parent_prec >= kProd) ? "(" + s + ")" : s;
        }
        case Kind::RatConst: {
            std::string s = e->rval.str();
            return parent_prec >= kProd ? "(" + s + ")" : s;
        }
        case Kind::FloatConst: {
            std::string s = format_double(e->fval);
            return (e->fval < 0 && parent_prec >= kProd) ? "(" + s + ")" : s;
        }
        case Kind::Symbol:
            return e->name;
        case Kind::FuncApp: {
            std::string out = e->fn->name + "(";
            for (std::size_t i = 0; i < e->kids.size(); ++i) {
                if (i) out += ", ";
                out += render_app_arg(*e->fn, static_cast<int>(i), e->kids[i]);
            }
            return out + ")";
        }
        case Kind::Indexed: {
            std::string out = e->fn->name + "[";
            for (std::size_t i = 0; i < e->offsets.size(); ++i) {
                if (i) out += ", ";
                out += render_indexed_part(*e->fn, static_cast<int>(i), e->offsets[i]);
            }
            return out + "]";
        }
        case Kind::Power: {
            if (e->ival < 0) {
                std::string base = render(e->kids[0], kPow);
                std::string out = "1/" + base;
                if (e->ival != -1) out += "**" + std::to_string(-e->ival);
                return parent_prec > kProd ? "(" + out + ")" : out;
            }
            return render(e->kids[0], kAtom) + "**" + std::to_string(e->ival);
        }
        case Kind::Product:
            return render_product(e, parent_prec);
        case Kind::Sum: {
            std::string out;
            for (std::size_t i = 0; i < e->kids.size(); ++i) {
                Expr mag;
                if (split_negative(e->kids[i], mag)) {
                    out += i == 0 ? "-" : " - ";
                    out += render(mag, kProd);
                } else {
                    if (i) out += " + ";
                    out += render(e->kids[i], kSum);
                }
            }
            return parent_prec > kSum ? "(" + out + ")" : out;
        }
    }
    throw std::logic_error("render: unreachable");
}

}  // namespace

std::string to_string(const Expr& e) {
    if (!e) return "<null>";
    return render(e, kSum);
}

}  // namespace sfd
