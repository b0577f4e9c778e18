#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "stencilfd/algebra.hpp"
#include "stencilfd/expr.hpp"
#include "stencilfd/grid_function.hpp"

namespace sfd::lower {

struct LoweringError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Rewrites symbolic applications into integer-indexed accesses and folds
/// every symbol to its numeric value.  Each dimension offset must be a grid
/// multiple of the spacing bound for that dimension (s for time, h for
/// space); anything else raises LoweringError.
Expr index_lower(const Expr& e, const std::map<std::string, double>& symbol_values);

/// One grid update inside the loop nest.  lhs is an Indexed access whose
/// time offset is zero; the loop variable denotes the written slot.
struct Assignment {
    Expr lhs;
    Expr rhs;
    bool accumulate = false;  ///< render as +=; detected from lhs appearing in rhs
};

struct GridArg {
    GridFunctionPtr fn;
    bool written = false;
};

/// A set of off-grid points with precomputed multilinear interpolation data.
/// Runtime buffers: indices[npoints][ndim] base grid coordinates,
/// weights[npoints][2^ndim] corner weights, data[nslots][npoints] samples.
struct SparseSet {
    std::string name;
    long npoints = 0;
    int ndim = 0;
    long nslots = 0;
};

/// Per-timestep scatter or gather against a sparse set, executed after the
/// grid assignments in listed order.
struct SparseOp {
    enum class Kind { Inject, Sample } kind = Kind::Inject;
    int set = 0;                ///< index into KernelIR::sparse_sets
    std::string grid;           ///< target (inject) or source (sample) grid
    int trace_offset = 0;       ///< sample row = written slot + trace_offset
    double scale = 1.0;         ///< inject only: constant factor
    std::string scale_divisor;  ///< inject only: per-point divisor grid, may be empty
};

/// Loop-level intermediate representation: integer-indexed assignments over
/// a shared spatial iteration space, an optional time loop, and the argument
/// grids in signature order.
struct KernelIR {
    std::string name;
    std::vector<long> extents;  ///< spatial extents, halo included
    long halo = 0;

    bool has_time = false;
    int time_order = 0;
    long nt = 0;        ///< addressable time samples of saved grids and traces
    int direction = 1;  ///< +1 ascending, -1 descending

    std::vector<Assignment> assignments;
    std::vector<GridArg> grids;
    std::vector<SparseSet> sparse_sets;
    std::vector<SparseOp> sparse_ops;

    int ndim() const { return static_cast<int>(extents.size()); }
    /// Written-slot range [time_start, time_stop); backward runs it in reverse.
    long time_start() const { return has_time ? time_order : 0; }
    long time_stop() const { return has_time ? nt : 1; }
    long steps() const { return time_stop() - time_start(); }
    std::vector<long> interior() const;
    long interior_points() const;
    const GridArg* find_grid(const std::string& name) const;

    /// Re-checks every structural invariant; throws LoweringError.
    void validate() const;
};

/// Lowers update equations into a KernelIR.  Equation left-hand sides must
/// be applications; time-stepping equations must all write the same forward
/// or backward neighbor, which fixes the loop direction.  All time offsets
/// are rebased so the loop variable is the written slot.
KernelIR build_kernel_ir(const std::string& name, const std::vector<Equation>& equations,
                         const std::vector<GridFunction>& grid_functions,
                         const std::map<std::string, double>& symbol_values, long nt = 0);

}  // namespace sfd::lower
