#pragma once

// Acoustic wave operators on damped velocity models: forward modeling with
// sparse sources and receivers, the discrete adjoint propagator, and the
// adjoint-state objective gradient, all lowered and compiled through the
// stencil pipeline.

#include <string>
#include <vector>

#include "stencilfd/codegen.hpp"
#include "stencilfd/lowering.hpp"
#include "stencilfd/runtime.hpp"

namespace sfd::seismic {

/// Squared-slowness model on a padded grid: interior + absorbing layer +
/// stencil halo per side.  m holds s^2/m^2 values (1/c^2), edge-replicated
/// into the padding; damp holds the absorbing taper, zero in the interior.
struct VelocityModel {
    std::vector<long> interior;
    double h = 10.0;
    long nbpml = 10;
    int space_order = 2;
    std::vector<long> padded;
    std::vector<double> m;
    std::vector<double> damp;

    int ndim() const { return static_cast<int>(interior.size()); }
    long halo() const { return space_order / 2; }
    long pad() const { return nbpml + halo(); }
    long cells() const;
    double m_min() const;
};

/// Builds the padded model from an interior-sized squared-slowness field.
VelocityModel make_model(std::vector<long> interior, double h, long nbpml, int space_order,
                         const std::vector<double>& m_interior);

/// Homogeneous model at the given velocity in m/s.
VelocityModel make_constant_model(std::vector<long> interior, double h, long nbpml,
                                  int space_order, double velocity);

/// Absorbing-layer profile: zero in the interior, rising toward the outer
/// edge as eta(xi) = C (xi - sin(2 pi xi) / (2 pi)) with xi the normalized
/// depth into the layer and C = 1.5 ln(1000) / (nbpml h); corners take the
/// per-dimension maximum and halo cells extend the outermost value.
std::vector<double> build_damping(const std::vector<long>& padded, long nbpml, long halo,
                                  double h);

/// Ricker wavelet (1 - 2 pi^2 f0^2 tau^2) exp(-pi^2 f0^2 tau^2) sampled on
/// k dt, tau = k dt - t0; peak 1 at t0.
std::vector<double> ricker(double f0, double t0, long nt, double dt);

/// Stable explicit step: 0.9 * 2 h sqrt(m_min / (ndim * sum |w|)) with w the
/// second-derivative taps at the model's spatial order.
double critical_dt(const VelocityModel& model);

/// Grid-anchored sparse points: per-point base node index (padded frame) and
/// multilinear corner weights, ready for kernel injection and sampling.
struct SparsePoints {
    long npoints = 0;
    int ndim = 0;
    std::vector<long> idx;  // npoints x ndim
    std::vector<double> w;  // npoints x 2^ndim
};

/// Locates physical coordinates (meters, origin at the first interior node)
/// on the model grid.  Every coordinate must lie inside the interior.
SparsePoints locate_points(const VelocityModel& model,
                           const std::vector<std::vector<double>>& coords);

/// Time series per sparse point, time-major: data[t * npoints + p].
struct ShotRecord {
    long nt = 0;
    double dt = 0;
    long npoints = 0;
    std::vector<double> data;
};

ShotRecord zero_record(long nt, double dt, long npoints);

/// Execution knobs shared by the operators.  Empty blocks with runtime-param
/// blocking fall back to the cache-based best guess.
struct RunConfig {
    codegen::CodegenPlan plan;
    runtime::CompilerPreset preset = runtime::preset_generic();
    std::vector<long> blocks;
};

/// Saved wavefield histories carry one zeroed slack row past nt so backward
/// kernels may read one row ahead of the loop index.
inline long history_rows(long nt) { return nt + 1; }

/// Kernel builders, exposed for inspection, interpretation and the CLI's
/// codegen command.  nt counts trace samples; the time loop spans [2, nt).
lower::KernelIR build_forward_ir(const VelocityModel& model, long nsrc, long nrec, long nt,
                                 double dt, bool save, const std::string& name = "Forward");
lower::KernelIR build_adjoint_ir(const VelocityModel& model, long nsrc, long nrec, long nt,
                                 double dt, const std::string& name = "Adjoint");
lower::KernelIR build_gradient_ir(const VelocityModel& model, long nrec, long nt, double dt,
                                  const std::string& name = "Gradient");

struct ForwardResult {
    ShotRecord record;
    std::vector<double> u;  // 3 rolling slots, or history_rows(nt) rows when saved
    bool saved = false;
    runtime::RunStats stats;
    codegen::GeneratedSource source;
};

/// Integrates m u_tt + damp u_t = lap(u) + src forward in time, injecting the
/// source trace (scaled dt^2 / m) and sampling receivers every step.
ForwardResult forward(const VelocityModel& model, const SparsePoints& src,
                      const std::vector<double>& src_trace, const SparsePoints& rec, long nt,
                      double dt, bool save, const RunConfig& cfg = {});

struct AdjointResult {
    ShotRecord src_samples;
    std::vector<double> v;  // 3 rolling slots
    runtime::RunStats stats;
    codegen::GeneratedSource source;
};

/// Integrates the transposed system backward in time: the damping sign flips,
/// the residual is injected at the receivers and the adjoint field is sampled
/// at the source locations one row behind the loop index.
AdjointResult adjoint(const VelocityModel& model, const SparsePoints& rec,
                      const ShotRecord& residual, const SparsePoints& src, long nt, double dt,
                      const RunConfig& cfg = {});

struct GradientResult {
    std::vector<double> grad;  // padded cells
    runtime::RunStats stats;
    codegen::GeneratedSource source;
};

/// Adjoint run fused with the objective gradient: per backward step the
/// kernel accumulates grad -= u v_tt / dt^2 for the row finalized on the
/// previous step, and the one term the loop cannot reach is added here.
/// u_history must come from a saved forward run on the same problem.
GradientResult gradient(const VelocityModel& model, const SparsePoints& rec,
                        const ShotRecord& residual, const std::vector<double>& u_history,
                        long nt, double dt, const RunConfig& cfg = {});

/// Phi = 1/2 sum (synthetic - observed)^2; optionally emits the residual.
double objective(const ShotRecord& synthetic, const ShotRecord& observed,
                 ShotRecord* residual = nullptr);

/// Copies a padded field's interior cells out, row-major over the interior.
std::vector<double> restrict_interior(const VelocityModel& model,
                                      const std::vector<double>& padded_field);

/// padded_field[interior cell] += scale * interior_field[cell].
void add_interior(const VelocityModel& model, const std::vector<double>& interior_field,
                  double scale, std::vector<double>& padded_field);

/// Model file: JSON header {shape, h, nbpml} beside a raw float64
/// squared-slowness blob over the interior shape.
void save_model(const VelocityModel& model, const std::string& path_prefix);
VelocityModel load_model(const std::string& path_prefix, int space_order);

/// Shot record file: JSON header {nt, dt, coordinates} beside a raw float64
/// time-major blob.
void save_record(const ShotRecord& record, const std::vector<std::vector<double>>& coordinates,
                 const std::string& path_prefix);
ShotRecord load_record(const std::string& path_prefix,
                       std::vector<std::vector<double>>* coordinates = nullptr);

}  // namespace sfd::seismic
