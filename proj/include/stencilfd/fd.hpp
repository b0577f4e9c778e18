#pragma once

#include <vector>

#include "stencilfd/rational.hpp"

namespace sfd {

/// One point of a finite-difference stencil: grid offset in units of the
/// spacing, and the exact weight before division by spacing**deriv_order.
struct StencilTap {
    long offset;
    Rational weight;
};

/// Centered finite-difference weights for d^m/dx^m at the grid point, exact
/// in rational arithmetic, computed with the Fornberg recursion on the
/// symmetric node set -a/2..a/2.  Zero weights are dropped, so the first
/// derivative at accuracy 2 returns two taps.
///
/// deriv_order must be 1 or 2 and accuracy a positive even number.
std::vector<StencilTap> fd_coefficients(int deriv_order, int accuracy);

}  // namespace sfd
