#pragma once

#include <map>
#include <string>

#include "stencilfd/lowering.hpp"

namespace sfd::interp {

/// Sparse-set buffers in the same layout the generated kernels take:
/// indices[npoints][ndim], weights[npoints][2^ndim], data[nslots][npoints].
struct SparseBuffers {
    const long* indices = nullptr;
    const double* weights = nullptr;
    double* data = nullptr;
};

/// Executes a kernel the way the generated C does, one thread, same loop
/// order, same statement order and the same arithmetic contract, so an
/// unoptimized compiled kernel matches it bit for bit.  Buffers are the
/// caller's flat arrays keyed by grid / sparse-set name; written grids are
/// not cleared first.
void reference_interpret(const lower::KernelIR& ir,
                         const std::map<std::string, double*>& grids,
                         const std::map<std::string, SparseBuffers>& sparse = {});

}  // namespace sfd::interp
