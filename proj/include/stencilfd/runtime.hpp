#pragma once

#include <functional>
#include <string>
#include <vector>

#include "stencilfd/codegen.hpp"

namespace sfd::runtime {

struct RuntimeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Compile failure with the host compiler's captured diagnostics.
struct CompileError : RuntimeError {
    using RuntimeError::RuntimeError;
};

/// Owning aligned array of doubles, zero-initialized, heap or file-backed.
/// File-backed buffers live in an unlinked-on-drop temp file and are flushed
/// before unmapping.
class GridBuffer {
public:
    GridBuffer() = default;
    GridBuffer(GridBuffer&& other) noexcept { swap(other); }
    GridBuffer& operator=(GridBuffer&& other) noexcept {
        swap(other);
        return *this;
    }
    GridBuffer(const GridBuffer&) = delete;
    GridBuffer& operator=(const GridBuffer&) = delete;
    ~GridBuffer();

    static GridBuffer allocate(std::vector<long> shape, long alignment = 64,
                               bool file_backed = false);

    double* data() { return data_; }
    const double* data() const { return data_; }
    const std::vector<long>& shape() const { return shape_; }
    long elements() const;
    long byte_size() const { return elements() * 8; }
    bool file_backed() const { return !path_.empty(); }
    const std::string& path() const { return path_; }

    void swap(GridBuffer& other) noexcept;

private:
    double* data_ = nullptr;
    std::vector<long> shape_;
    std::string path_;  ///< backing file, empty for heap
};

/// Whether a buffer of this many bytes should spill to disk (more than 75%
/// of currently free physical memory).
bool should_file_back(long bytes);

struct CompilerPreset {
    std::string name;
    std::vector<std::string> flags;
};
CompilerPreset preset_generic();   ///< -O3, native SIMD, OpenMP, fast contraction
CompilerPreset preset_portable();  ///< -O2, no OpenMP, contraction off (bit-stable)

struct CompiledKernel {
    std::string so_path;
    std::string entry;  ///< exported kernel symbol
    codegen::GeneratedSource meta;
    int (*call)(void**) = nullptr;  ///< uniform trampoline entry
    bool cache_hit = false;
};

/// Compiles to a shared object in the on-disk cache (keyed by a hash of the
/// source, the flags and the compiler), loads it and resolves the entry.
/// Honors STENCILFD_CC (compiler, default cc), STENCILFD_CACHE_DIR and
/// STENCILFD_THREADS (exported as OMP_NUM_THREADS before loading).
CompiledKernel compile_and_load(const codegen::GeneratedSource& src,
                                const CompilerPreset& preset);

/// Binds caller buffers to the kernel's recorded argument list, checking
/// element counts, and owns the storage behind by-value block-size args.
class KernelArgs {
public:
    explicit KernelArgs(const codegen::GeneratedSource& meta);

    void set(const std::string& name, double* ptr, long count);
    void set(const std::string& name, long* ptr, long count);
    void set_block(const std::string& name, long value);
    /// Assigns all block-size args in signature order.
    void set_blocks(const std::vector<long>& values);
    bool has_blocks() const;

    /// Pointer-per-argument array; throws if anything is still unbound.
    std::vector<void*> argv() const;

private:
    std::size_t index_of(const std::string& name, codegen::Arg::Kind kind) const;

    std::vector<codegen::Arg> args_;
    std::vector<void*> ptrs_;
    std::vector<long> longs_;
    std::vector<bool> bound_;
};

struct RunStats {
    double seconds = 0;
    double gflops = 0;
};

/// Executes the kernel once and derives GFLOP/s from the recorded per-point
/// FLOPs, interior points and steps.
RunStats run(const CompiledKernel& kernel, const std::vector<void*>& argv);

/// Largest equal per-dim block size whose slab working set
/// prod(block + 2 halo) * innermost extent * 8 bytes * read grid count
/// still fits the cache, clamped to [1, min blocked extent].
std::vector<long> best_guess_block(long halo, const std::vector<long>& blocked_extents,
                                   long inner_extent, int read_grids, long cache_bytes);

/// Truncated step count used for tuning runs.
long tune_nt(long nt, int time_order);

/// Cross product of {8,16,24,32,64} per blocked dim, filtered to fit the
/// extents; always contains at least {1,1,...}.
std::vector<std::vector<long>> default_candidates(const std::vector<long>& blocked_extents);

struct TuningResult {
    struct Trial {
        std::vector<long> blocks;
        double seconds = 0;
        bool ok = false;
        std::string error;
    };
    std::vector<Trial> trials;
    std::vector<long> chosen;
    enum class Source { Autotuned, BestGuess, User } source = Source::Autotuned;
};

/// Times every candidate on the given kernel (built for a truncated run with
/// scratch buffers by the caller); minimum wall time wins, ties break to the
/// lexicographically smaller pair, failed candidates are recorded and
/// skipped.
TuningResult autotune(const CompiledKernel& kernel, KernelArgs& args,
                      const std::vector<std::vector<long>>& candidates);

/// Raw little-endian float64 blob at prefix.bin plus a JSON sidecar at
/// prefix.json describing shape, halo, dtype and time slots.
void dump_grid(const double* data, const std::vector<long>& shape, long halo, long time_slots,
               const std::string& path_prefix);
void dump_grid(const GridBuffer& buffer, long halo, long time_slots,
               const std::string& path_prefix);

}  // namespace sfd::runtime
