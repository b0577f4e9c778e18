#pragma once

#include <string>
#include <vector>

#include "stencilfd/lowering.hpp"
#include "stencilfd/optimizer.hpp"

namespace sfd::codegen {

/// Switches for the emitted loop nest.  Blocking covers every spatial dim
/// except the innermost (at most two), which stays contiguous for SIMD.
struct CodegenPlan {
    enum class Blocking { Off, Fixed, RuntimeParam };

    bool parallel = true;
    bool simd = true;
    Blocking blocking = Blocking::RuntimeParam;
    std::vector<long> fixed_blocks;  ///< per blocked dim, Fixed mode only
    long alignment = 64;
    bool first_touch = true;  ///< emitted only when parallel is on

    static CodegenPlan all_off() {
        CodegenPlan p;
        p.parallel = p.simd = p.first_touch = false;
        p.blocking = Blocking::Off;
        return p;
    }
};

/// Half-open index range advanced by step.
struct Range {
    long lo = 0;
    long hi = 0;
    long step = 1;
    long count() const { return hi > lo ? (hi - lo + step - 1) / step : 0; }
};

/// Blocked split of [lo, hi): main advances whole blocks up to
/// hi - (hi-lo) % block, the remainder walks the tail one index at a time.
struct DimSplit {
    Range main;
    Range remainder;
};
DimSplit remainder_decomposition(long lo, long hi, long block);

/// Statement tree for the emitted C.  Tests assert on the structure, the
/// renderer turns it into text, so goldens cannot drift from what runs.
struct Stmt {
    enum class Kind { Text, Pragma, Loop, Block };

    Kind kind = Kind::Text;
    std::string text;                  ///< Text: one statement; Pragma: after "#pragma "
    std::string var, init, cond, inc;  ///< Loop header pieces
    std::vector<Stmt> body;            ///< Loop and Block children

    static Stmt line(std::string s);
    static Stmt pragma(std::string s);
    static Stmt loop(std::string var, std::string init, std::string cond, std::string inc);
    static Stmt block();
};

struct Arg {
    enum class Kind { Grid, SparseIndex, SparseWeight, SparseData, BlockSize };

    Kind kind = Kind::Grid;
    std::string name;   ///< parameter name, e.g. "u_vec" or "i1block"
    std::string ctype;  ///< "double *", "long *" or "long"
    long count = 0;     ///< buffer element count, 0 for scalars
};

struct GeneratedSource {
    std::string name;          ///< exported entry symbol
    std::string source;        ///< complete translation unit
    std::vector<Arg> args;     ///< call order: grids, sparse triples, block sizes
    opt::OpCount ops;          ///< per-point operation mix after cse
    long flops_per_point = 0;  ///< ops.total()
    long bytes_per_point = 0;  ///< 8 bytes per distinct grid slot touched
    long interior_points = 0;
    long steps = 0;
};

/// Number of blocked dims for a given spatial rank: all but the innermost,
/// capped at two.
int blocked_dims(int ndim);

std::vector<Arg> signature(const lower::KernelIR& ir, const CodegenPlan& plan);

/// Function body as a statement tree (casts, parallel region, loop nests,
/// sparse scatter/gather).  Applies cse to the ir's assignments.
Stmt build_ast(const lower::KernelIR& ir, const CodegenPlan& plan);

std::string render(const Stmt& s, int indent = 0);

GeneratedSource generate(const lower::KernelIR& ir, const CodegenPlan& plan);

}  // namespace sfd::codegen
