#pragma once

#include <string>
#include <utility>
#include <vector>

#include "stencilfd/lowering.hpp"

namespace sfd::opt {

/// Arithmetic cost of an expression under the renderer's conventions:
/// n-ary sums cost n-1 adds, numerator products n-1 muls, a denominator
/// one div plus its internal muls, small integer powers repeated muls.
/// Sign flips are free.
struct OpCount {
    long adds = 0;
    long muls = 0;
    long divs = 0;
    long total() const { return adds + muls + divs; }
    OpCount& operator+=(const OpCount& o) {
        adds += o.adds;
        muls += o.muls;
        divs += o.divs;
        return *this;
    }
    friend bool operator==(const OpCount&, const OpCount&) = default;
};

OpCount op_count(const Expr& e);
OpCount op_count(const std::vector<lower::Assignment>& assignments);

/// Result of common-subexpression elimination over one statement group.
/// temps are ordered so each definition only uses earlier temps.
struct CseResult {
    std::vector<std::pair<std::string, Expr>> temps;
    std::vector<lower::Assignment> assignments;
    OpCount cost() const;
};

/// Hoists every subtree occurring at least twice across the group into a
/// deterministically named temporary (temp0, temp1, ...).  Repeated grid
/// reads are hoisted; constants and symbols never are.  Hoisting only
/// introduces sharing, so evaluation is bit-identical to the input.
CseResult cse(const std::vector<lower::Assignment>& assignments);

}  // namespace sfd::opt
