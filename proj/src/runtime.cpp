#include "stencilfd/runtime.hpp"

#include <dlfcn.h>
#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <unordered_map>

#include "json.hpp"

namespace sfd::runtime {

namespace {

namespace fs = std::filesystem;

long checked_elements(const std::vector<long>& shape) {
    if (shape.empty()) throw std::invalid_argument("GridBuffer: empty shape");
    long n = 1;
    for (long d : shape) {
        if (d < 1) throw std::invalid_argument("GridBuffer: extents must be positive");
        if (n > std::numeric_limits<long>::max() / d)
            throw std::invalid_argument("GridBuffer: shape overflows");
        n *= d;
    }
    return n;
}

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v && *v ? v : fallback;
}

fs::path cache_dir() {
    const fs::path dir = env_or("STENCILFD_CACHE_DIR",
                                (fs::temp_directory_path() / "stencilfd-cache").string());
    std::error_code ec;
    fs::create_directories(dir, ec);
    return dir;
}

std::uint64_t fnv1a(std::uint64_t h, const std::string& s) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string run_command(const std::string& cmd, int& rc) {
    FILE* pipe = popen((cmd + " 2>&1").c_str(), "r");
    if (!pipe) throw RuntimeError("failed to spawn: " + cmd);
    std::string out;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
    const int status = pclose(pipe);
    rc = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return out;
}

double monotonic_seconds() {
    timespec ts{};
    clock_gettime(CLOCK_MONOTONIC, &ts);
    return static_cast<double>(ts.tv_sec) + 1e-9 * static_cast<double>(ts.tv_nsec);
}

std::mutex& jit_mutex() {
    static std::mutex m;
    return m;
}

std::unordered_map<std::string, void*>& handle_cache() {
    static std::unordered_map<std::string, void*> cache;
    return cache;
}

const char* arg_kind_name(codegen::Arg::Kind k) {
    switch (k) {
        case codegen::Arg::Kind::Grid: return "grid";
        case codegen::Arg::Kind::SparseIndex: return "sparse-index";
        case codegen::Arg::Kind::SparseWeight: return "sparse-weight";
        case codegen::Arg::Kind::SparseData: return "sparse-data";
        case codegen::Arg::Kind::BlockSize: return "block-size";
    }
    return "?";
}

}  // namespace

GridBuffer::~GridBuffer() {
    if (!data_) return;
    if (file_backed()) {
        const long bytes = byte_size();
        msync(data_, static_cast<std::size_t>(bytes), MS_SYNC);
        munmap(data_, static_cast<std::size_t>(bytes));
        unlink(path_.c_str());
    } else {
        std::free(data_);
    }
}

void GridBuffer::swap(GridBuffer& other) noexcept {
    std::swap(data_, other.data_);
    shape_.swap(other.shape_);
    path_.swap(other.path_);
}

long GridBuffer::elements() const { return shape_.empty() ? 0 : checked_elements(shape_); }

GridBuffer GridBuffer::allocate(std::vector<long> shape, long alignment, bool file_backed) {
    const long n = checked_elements(shape);
    if (alignment < static_cast<long>(sizeof(void*)) || (alignment & (alignment - 1)) != 0)
        throw std::invalid_argument("GridBuffer: alignment must be a power of two");
    const long bytes = n * 8;
    GridBuffer b;
    b.shape_ = std::move(shape);
    if (file_backed) {
        const long page = sysconf(_SC_PAGESIZE);
        if (alignment > page)
            throw std::invalid_argument("GridBuffer: file-backed alignment above page size");
        std::string tmpl = (fs::temp_directory_path() / "stencilfd-grid-XXXXXX").string();
        const int fd = mkstemp(tmpl.data());
        if (fd < 0) throw RuntimeError("GridBuffer: mkstemp failed");
        if (ftruncate(fd, bytes) != 0) {
            close(fd);
            unlink(tmpl.c_str());
            throw RuntimeError("GridBuffer: cannot size backing file to " +
                               std::to_string(bytes) + " bytes");
        }
        void* p = mmap(nullptr, static_cast<std::size_t>(bytes), PROT_READ | PROT_WRITE,
                       MAP_SHARED, fd, 0);
        close(fd);
        if (p == MAP_FAILED) {
            unlink(tmpl.c_str());
            throw RuntimeError("GridBuffer: mmap failed");
        }
        b.data_ = static_cast<double*>(p);
        b.path_ = tmpl;
    } else {
        void* p = nullptr;
        if (posix_memalign(&p, static_cast<std::size_t>(alignment),
                           static_cast<std::size_t>(bytes)) != 0)
            throw RuntimeError("GridBuffer: allocation of " + std::to_string(bytes) +
                               " bytes failed");
        std::memset(p, 0, static_cast<std::size_t>(bytes));
        b.data_ = static_cast<double*>(p);
    }
    return b;
}

bool should_file_back(long bytes) {
    const long pages = sysconf(_SC_AVPHYS_PAGES);
    const long page = sysconf(_SC_PAGESIZE);
    if (pages <= 0 || page <= 0) return false;
    return static_cast<double>(bytes) > 0.75 * static_cast<double>(pages) *
                                            static_cast<double>(page);
}

CompilerPreset preset_generic() {
    return {"generic", {"-O3", "-march=native", "-fopenmp", "-ffp-contract=fast"}};
}

CompilerPreset preset_portable() { return {"portable", {"-O2", "-ffp-contract=off"}}; }

CompiledKernel compile_and_load(const codegen::GeneratedSource& src,
                                const CompilerPreset& preset) {
    const std::string cc = env_or("STENCILFD_CC", "cc");
    std::string flags;
    for (const std::string& f : preset.flags) flags += f + " ";

    std::uint64_t h = 0xcbf29ce484222325ULL;
    h = fnv1a(h, src.source);
    h = fnv1a(h, flags);
    h = fnv1a(h, cc);
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));

    const fs::path dir = cache_dir();
    const fs::path c_path = dir / (std::string(hex) + ".c");
    const fs::path so_path = dir / (std::string(hex) + ".so");
    const fs::path meta_path = dir / (std::string(hex) + ".json");

    std::lock_guard<std::mutex> lock(jit_mutex());

    CompiledKernel k;
    k.so_path = so_path.string();
    k.entry = src.name;
    k.meta = src;
    k.cache_hit = fs::exists(so_path);

    if (!k.cache_hit) {
        const fs::path tmp_c = dir / (std::string(hex) + ".c." + std::to_string(getpid()));
        {
            std::ofstream f(tmp_c);
            f << src.source;
            if (!f) throw RuntimeError("cannot write " + tmp_c.string());
        }
        fs::rename(tmp_c, c_path);

        const fs::path tmp_so = dir / (std::string(hex) + ".so." + std::to_string(getpid()));
        const std::string cmd = cc + " -shared -fPIC " + flags + "-o " + tmp_so.string() + " " +
                                c_path.string() + " -lm";
        int rc = 0;
        const std::string diag = run_command(cmd, rc);
        if (rc != 0) {
            std::error_code ec;
            fs::remove(tmp_so, ec);
            throw CompileError("kernel compilation failed (" + cmd + "):\n" + diag);
        }
        fs::rename(tmp_so, so_path);

        nlohmann::json meta;
        meta["entry"] = src.name;
        meta["flops_per_point"] = src.flops_per_point;
        meta["bytes_per_point"] = src.bytes_per_point;
        meta["interior_points"] = src.interior_points;
        meta["steps"] = src.steps;
        meta["args"] = nlohmann::json::array();
        for (const codegen::Arg& a : src.args)
            meta["args"].push_back({{"name", a.name},
                                    {"kind", arg_kind_name(a.kind)},
                                    {"count", a.count}});
        std::ofstream(meta_path) << meta.dump(2) << "\n";
    }

    const std::string threads = env_or("STENCILFD_THREADS", "");
    if (!threads.empty()) setenv("OMP_NUM_THREADS", threads.c_str(), 1);

    void*& handle = handle_cache()[k.so_path];
    if (!handle) {
        handle = dlopen(k.so_path.c_str(), RTLD_NOW | RTLD_LOCAL);
        if (!handle) throw RuntimeError(std::string("dlopen failed: ") + dlerror());
    }
    void* sym = dlsym(handle, (src.name + "_call").c_str());
    if (!sym) throw RuntimeError("entry symbol not found: " + src.name + "_call");
    k.call = reinterpret_cast<int (*)(void**)>(sym);
    return k;
}

KernelArgs::KernelArgs(const codegen::GeneratedSource& meta)
    : args_(meta.args),
      ptrs_(meta.args.size(), nullptr),
      longs_(meta.args.size(), 0),
      bound_(meta.args.size(), false) {}

std::size_t KernelArgs::index_of(const std::string& name, codegen::Arg::Kind kind) const {
    for (std::size_t i = 0; i < args_.size(); ++i)
        if (args_[i].name == name) {
            if (args_[i].kind != kind)
                throw std::invalid_argument("argument " + name + " is a " +
                                            arg_kind_name(args_[i].kind) + ", not a " +
                                            arg_kind_name(kind));
            return i;
        }
    throw std::invalid_argument("kernel has no argument named " + name);
}

void KernelArgs::set(const std::string& name, double* ptr, long count) {
    std::size_t i = 0;
    bool found = false;
    for (std::size_t j = 0; j < args_.size(); ++j)
        if (args_[j].name == name) {
            i = j;
            found = true;
            break;
        }
    if (!found) throw std::invalid_argument("kernel has no argument named " + name);
    if (args_[i].kind != codegen::Arg::Kind::Grid &&
        args_[i].kind != codegen::Arg::Kind::SparseWeight &&
        args_[i].kind != codegen::Arg::Kind::SparseData)
        throw std::invalid_argument("argument " + name + " does not take doubles");
    if (args_[i].count != count)
        throw std::invalid_argument("argument " + name + " expects " +
                                    std::to_string(args_[i].count) + " elements, got " +
                                    std::to_string(count));
    ptrs_[i] = ptr;
    bound_[i] = true;
}

void KernelArgs::set(const std::string& name, long* ptr, long count) {
    const std::size_t i = index_of(name, codegen::Arg::Kind::SparseIndex);
    if (args_[i].count != count)
        throw std::invalid_argument("argument " + name + " expects " +
                                    std::to_string(args_[i].count) + " elements, got " +
                                    std::to_string(count));
    ptrs_[i] = ptr;
    bound_[i] = true;
}

void KernelArgs::set_block(const std::string& name, long value) {
    const std::size_t i = index_of(name, codegen::Arg::Kind::BlockSize);
    if (value < 1) throw std::invalid_argument("block sizes must be >= 1");
    longs_[i] = value;
    ptrs_[i] = &longs_[i];
    bound_[i] = true;
}

void KernelArgs::set_blocks(const std::vector<long>& values) {
    std::size_t next = 0;
    for (const codegen::Arg& a : args_) {
        if (a.kind != codegen::Arg::Kind::BlockSize) continue;
        if (next >= values.size())
            throw std::invalid_argument("not enough block sizes for the kernel signature");
        set_block(a.name, values[next++]);
    }
    if (next != values.size())
        throw std::invalid_argument("too many block sizes for the kernel signature");
}

bool KernelArgs::has_blocks() const {
    return std::any_of(args_.begin(), args_.end(), [](const codegen::Arg& a) {
        return a.kind == codegen::Arg::Kind::BlockSize;
    });
}

std::vector<void*> KernelArgs::argv() const {
    for (std::size_t i = 0; i < args_.size(); ++i)
        if (!bound_[i])
            throw std::invalid_argument("kernel argument not bound: " + args_[i].name);
    return ptrs_;
}

RunStats run(const CompiledKernel& kernel, const std::vector<void*>& argv) {
    if (!kernel.call) throw RuntimeError("kernel not loaded");
    if (argv.size() != kernel.meta.args.size())
        throw std::invalid_argument("argument count mismatch: kernel takes " +
                                    std::to_string(kernel.meta.args.size()));
    std::vector<void*> a = argv;
    const double t0 = monotonic_seconds();
    const int rc = kernel.call(a.data());
    const double t1 = monotonic_seconds();
    if (rc != 0)
        throw RuntimeError("kernel " + kernel.entry + " returned " + std::to_string(rc));
    RunStats st;
    st.seconds = t1 - t0;
    const double flops = static_cast<double>(kernel.meta.flops_per_point) *
                         static_cast<double>(kernel.meta.interior_points) *
                         static_cast<double>(kernel.meta.steps);
    st.gflops = st.seconds > 0 ? flops / st.seconds / 1e9 : 0;
    return st;
}

std::vector<long> best_guess_block(long halo, const std::vector<long>& blocked_extents,
                                   long inner_extent, int read_grids, long cache_bytes) {
    if (cache_bytes <= 0) throw std::invalid_argument("best_guess_block: cache size must be > 0");
    if (blocked_extents.empty()) return {};
    const long max_b = *std::min_element(blocked_extents.begin(), blocked_extents.end());
    const auto fits = [&](long b) {
        double set = 8.0 * std::max(read_grids, 1) * static_cast<double>(std::max(inner_extent, 1L));
        for (std::size_t i = 0; i < blocked_extents.size(); ++i)
            set *= static_cast<double>(b + 2 * halo);
        return set <= static_cast<double>(cache_bytes);
    };
    long b = 1;
    while (b < max_b && fits(b + 1)) ++b;
    return std::vector<long>(blocked_extents.size(), std::max(b, 1L));
}

long tune_nt(long nt, int time_order) {
    return std::min(nt, static_cast<long>(2 * time_order + 5));
}

std::vector<std::vector<long>> default_candidates(const std::vector<long>& blocked_extents) {
    static const long sizes[] = {8, 16, 24, 32, 64};
    std::vector<std::vector<long>> out;
    if (blocked_extents.empty()) return out;
    std::vector<std::vector<long>> partial{{}};
    for (long extent : blocked_extents) {
        std::vector<std::vector<long>> next;
        for (const auto& p : partial)
            for (long s : sizes)
                if (s <= extent) {
                    auto q = p;
                    q.push_back(s);
                    next.push_back(std::move(q));
                }
        partial = std::move(next);
    }
    out = std::move(partial);
    if (out.empty()) out.push_back(std::vector<long>(blocked_extents.size(), 1));
    return out;
}

TuningResult autotune(const CompiledKernel& kernel, KernelArgs& args,
                      const std::vector<std::vector<long>>& candidates) {
    if (candidates.empty()) throw std::invalid_argument("autotune: no candidates");
    TuningResult result;
    for (const std::vector<long>& blocks : candidates) {
        TuningResult::Trial trial;
        trial.blocks = blocks;
        try {
            args.set_blocks(blocks);
            trial.seconds = run(kernel, args.argv()).seconds;
            trial.ok = true;
        } catch (const std::exception& e) {
            trial.error = e.what();
        }
        result.trials.push_back(std::move(trial));
    }
    const TuningResult::Trial* best = nullptr;
    for (const TuningResult::Trial& t : result.trials) {
        if (!t.ok) continue;
        if (!best || t.seconds < best->seconds ||
            (t.seconds == best->seconds && t.blocks < best->blocks))
            best = &t;
    }
    if (!best) throw RuntimeError("autotune: every candidate failed");
    result.chosen = best->blocks;
    result.source = TuningResult::Source::Autotuned;
    return result;
}

void dump_grid(const double* data, const std::vector<long>& shape, long halo, long time_slots,
               const std::string& path_prefix) {
    long elements = 1;
    for (long n : shape) elements *= n;
    {
        std::ofstream bin(path_prefix + ".bin", std::ios::binary);
        bin.write(reinterpret_cast<const char*>(data), elements * 8);
        if (!bin) throw RuntimeError("cannot write " + path_prefix + ".bin");
    }
    nlohmann::json meta;
    meta["shape"] = shape;
    meta["halo"] = halo;
    meta["dtype"] = "float64";
    meta["time_slots"] = time_slots;
    std::ofstream(path_prefix + ".json") << meta.dump(2) << "\n";
}

void dump_grid(const GridBuffer& buffer, long halo, long time_slots,
               const std::string& path_prefix) {
    dump_grid(buffer.data(), buffer.shape(), halo, time_slots, path_prefix);
}

}  // namespace sfd::runtime
