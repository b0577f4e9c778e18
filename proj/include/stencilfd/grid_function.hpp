#pragma once

#include <string>
#include <vector>

#include "stencilfd/expr.hpp"

namespace sfd {

/// Names of the uniform spacing symbols shared by all grid functions.
inline const char* kSpaceSpacing = "h";
inline const char* kTimeSpacing = "s";

/// Handle to a grid-function description with builders for the symbolic
/// applications and derivative stencils used to state equations.
class GridFunction {
public:
    GridFunction() = default;
    explicit GridFunction(GridFunctionPtr info) : info_(std::move(info)) {}

    const GridFunctionInfo& info() const { return *info_; }
    const GridFunctionPtr& ptr() const { return info_; }

    /// Application at the reference point: f(x, y) or u(t, x, y).
    Expr at() const;
    Expr forward() const;   ///< u(t + s, ...)
    Expr backward() const;  ///< u(t - s, ...)

    Expr dt() const;   ///< first time derivative, accuracy = time_order
    Expr dt2() const;  ///< second time derivative
    Expr d(int spatial_dim, int deriv_order) const;
    Expr dx() const { return d(0, 1); }
    Expr dy() const { return d(1, 1); }
    Expr dz() const { return d(2, 1); }
    Expr dx2() const { return d(0, 2); }
    Expr dy2() const { return d(1, 2); }
    Expr dz2() const { return d(2, 2); }
    Expr laplace() const;

private:
    GridFunctionPtr info_;
};

/// Creates a grid-function description.  shape lists allocated extents
/// including any halo.  time_order 0 declares a time-invariant field;
/// time-varying functions either roll over time_order + 1 slots or, with
/// save_history, address nt slots directly.
GridFunction make_grid_function(const std::string& name, std::vector<long> shape,
                                int space_order = 2, int time_order = 0,
                                bool save_history = false, long nt = 0);

/// Differentiates an expression that is linear in its grid functions by
/// expanding each application into its centered stencil.
Expr derivative(const Expr& e, int spatial_dim, int deriv_order);
Expr time_derivative(const Expr& e, int deriv_order);

/// Sum of second derivatives over every spatial dimension.
Expr laplace(const Expr& e);

/// Shifts every time-varying application in e by steps grid steps in time.
Expr time_shift(const Expr& e, int steps);

}  // namespace sfd
