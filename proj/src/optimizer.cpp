#include "stencilfd/optimizer.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <set>
#include <utility>

namespace sfd::opt {

namespace {

bool is_neg_one(const Expr& e) { return e->kind == Kind::IntConst && e->ival == -1; }

void count(const Expr& e, OpCount& c) {
    switch (e->kind) {
        case Kind::Sum:
            c.adds += static_cast<long>(e->kids.size()) - 1;
            for (const Expr& k : e->kids) count(k, c);
            break;
        case Kind::Product: {
            long num = 0, den = 0;
            for (const Expr& k : e->kids) {
                if (k->kind == Kind::Power && k->ival < 0) {
                    ++den;
                    count(pow_expr(k->kids[0], -k->ival), c);
                } else {
                    if (!is_neg_one(k)) ++num;
                    count(k, c);
                }
            }
            if (num > 1) c.muls += num - 1;
            if (den > 0) {
                c.divs += 1;
                c.muls += den - 1;
            }
            break;
        }
        case Kind::Power: {
            const std::int64_t a = e->ival < 0 ? -e->ival : e->ival;
            if (e->ival < 0) c.divs += 1;  // standalone reciprocal
            c.muls += a <= 4 ? a - 1 : 1;  // large powers call pow once
            count(e->kids[0], c);
            break;
        }
        default:
            break;
    }
}

/// Subtrees worth naming: anything compound, plus grid reads.  A bare
/// reciprocal carries no work of its own (the division stays in place), so
/// only powers of magnitude two and up are named.
bool hoistable(const Expr& e) {
    switch (e->kind) {
        case Kind::Sum:
        case Kind::Product:
        case Kind::Indexed:
            return true;
        case Kind::Power:
            return e->ival >= 2 || e->ival <= -2;
        default:
            return false;
    }
}

/// Greedy multiset containment: every term of `sum` must match a distinct,
/// so far unclaimed entry of `kids`.  On success `idx` holds the claimed
/// positions in the order of `sum`'s own terms.
bool claim_terms(const Expr& sum, const std::vector<Expr>& kids,
                 std::vector<std::size_t>& idx) {
    std::vector<bool> used(kids.size(), false);
    idx.clear();
    for (const Expr& term : sum->kids) {
        bool found = false;
        for (std::size_t i = 0; i < kids.size(); ++i) {
            if (!used[i] && equal(kids[i], term)) {
                used[i] = true;
                idx.push_back(i);
                found = true;
                break;
            }
        }
        if (!found) return false;
    }
    return true;
}

}  // namespace

OpCount op_count(const Expr& e) {
    OpCount c;
    // A top-level reciprocal inside a product is already priced by the
    // product; standalone negative powers are priced in count() directly.
    count(e, c);
    return c;
}

OpCount op_count(const std::vector<lower::Assignment>& assignments) {
    OpCount c;
    for (const lower::Assignment& a : assignments) {
        count(a.rhs, c);
        if (a.accumulate) c.adds += 1;
    }
    return c;
}

OpCount CseResult::cost() const {
    OpCount c;
    for (const auto& [name, e] : temps) count(e, c);
    c += op_count(assignments);
    return c;
}

CseResult cse(const std::vector<lower::Assignment>& assignments) {
    // Temps evaluate before every statement in the group, so a read of a
    // grid slot the group itself writes must stay in place: hoisting it
    // would observe the value from before the earlier statement ran.
    std::set<std::pair<std::string, long>> written;
    constexpr long kStatic = std::numeric_limits<long>::min();
    const auto slot_key = [&](const Expr& e) {
        return std::make_pair(e->fn->name, e->fn->has_time() ? e->offsets[0] : kStatic);
    };
    for (const lower::Assignment& a : assignments)
        if (a.lhs && a.lhs->kind == Kind::Indexed) written.insert(slot_key(a.lhs));
    ExprMap<char> taint_memo;
    const std::function<bool(const Expr&)> tainted = [&](const Expr& e) -> bool {
        const auto hit = taint_memo.find(e);
        if (hit != taint_memo.end()) return hit->second;
        bool t = e->kind == Kind::Indexed && written.count(slot_key(e)) > 0;
        for (const Expr& k : e->kids)
            if (!t && tainted(k)) t = true;
        taint_memo.emplace(e, t ? 1 : 0);
        return t;
    };

    // Pass one: occurrence counts over the whole statement group.  Because
    // canonicalization flattens nested sums, a repeated sum often survives
    // only as a sub-multiset of a wider sum's terms ((a+b)**2 + a + b), so a
    // sum also counts as occurring wherever its terms sit inside a wider sum.
    ExprMap<long> uses;
    ExprMap<long> first_seen;
    std::vector<Expr> distinct_sums;
    std::vector<Expr> sum_occurrences;
    long clock = 0;
    const std::function<void(const Expr&)> tally = [&](const Expr& e) {
        if (hoistable(e) && !tainted(e)) {
            ++uses[e];
            if (!first_seen.count(e)) {
                first_seen.emplace(e, clock++);
                if (e->kind == Kind::Sum) distinct_sums.push_back(e);
            }
        }
        if (e->kind == Kind::Sum) sum_occurrences.push_back(e);
        for (const Expr& k : e->kids) tally(k);
    };
    for (const lower::Assignment& a : assignments) tally(a.rhs);
    std::vector<std::size_t> idx;
    for (const Expr& s : distinct_sums)
        for (const Expr& t : sum_occurrences)
            if (s->kids.size() < t->kids.size() && claim_terms(s, t->kids, idx))
                ++uses[s];
    std::vector<Expr> candidates;
    for (const Expr& s : distinct_sums)
        if (uses.at(s) >= 2) candidates.push_back(s);

    // Pass two: rebuild bottom-up, naming shared subtrees on first sight so
    // temp numbering follows evaluation order.  Children keep their stored
    // order (no re-canonicalization), and reciprocals hoist only their
    // positive part, so a division stays a division and every operation
    // happens in the same order on the same values as before.  The one
    // exception is factoring a named sum out of a wider sum, which may
    // regroup additions; values agree to rounding.
    CseResult out;
    ExprMap<Expr> named;
    const auto ensure_named = [&](const Expr& key, Expr def) -> Expr {
        const auto hit = named.find(key);
        if (hit != named.end()) return hit->second;
        const std::string name = "temp" + std::to_string(out.temps.size());
        out.temps.emplace_back(name, std::move(def));
        named.emplace(key, symbol(name));
        return named.at(key);
    };
    const std::function<Expr(const Expr&)> rebuild = [&](const Expr& e) -> Expr {
        const auto hit = named.find(e);
        if (hit != named.end()) return hit->second;
        Expr body = e;
        if (!e->kids.empty()) {
            std::vector<Expr> orig(e->kids.begin(), e->kids.end());
            std::vector<Expr> built;
            built.reserve(orig.size());
            for (const Expr& k : orig) built.push_back(rebuild(k));
            if (e->kind == Kind::Sum) {
                for (const Expr& s : candidates) {
                    if (equal(s, e)) continue;
                    while (orig.size() > s->kids.size() && claim_terms(s, orig, idx)) {
                        std::vector<Expr> claimed;
                        claimed.reserve(idx.size());
                        for (std::size_t i : idx) claimed.push_back(built[i]);
                        const Expr repl = ensure_named(s, with_children(s, std::move(claimed)));
                        std::sort(idx.begin(), idx.end());
                        for (auto it = idx.rbegin(); it != idx.rend(); ++it) {
                            orig.erase(orig.begin() + static_cast<long>(*it));
                            built.erase(built.begin() + static_cast<long>(*it));
                        }
                        orig.insert(orig.begin() + static_cast<long>(idx.front()), s);
                        built.insert(built.begin() + static_cast<long>(idx.front()), repl);
                    }
                }
            }
            body = with_children(e, std::move(built));
        }
        if (hoistable(e) && uses[e] >= 2) {
            if (e->kind == Kind::Power && e->ival < 0) {
                const std::string name = "temp" + std::to_string(out.temps.size());
                out.temps.emplace_back(name, pow_expr(body->kids[0], -e->ival));
                named.emplace(e, pow_expr(symbol(name), -1));
                return named.at(e);
            }
            return ensure_named(e, std::move(body));
        }
        return body;
    };
    for (const lower::Assignment& a : assignments) {
        lower::Assignment r = a;
        r.rhs = rebuild(a.rhs);
        out.assignments.push_back(std::move(r));
    }
    return out;
}

}  // namespace sfd::opt
