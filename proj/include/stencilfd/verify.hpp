#pragma once

#include <string>
#include <vector>

#include "stencilfd/seismic.hpp"

namespace sfd::verify {

/// Seeded uniform noise convolved with a Ricker pulse of peak frequency f0,
/// normalized to unit peak, so verification inputs carry propagating energy
/// instead of grid-scale noise.
std::vector<double> band_limited_noise(unsigned seed, long nt, double dt, double f0);

/// Least-squares slope of log(y) against log(x); inputs must be positive and
/// of equal length >= 2.
double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

struct AdjointConfig {
    std::vector<long> interior{65, 65};
    double h = 15.0;
    long nbpml = 10;
    int space_order = 4;
    double velocity = 1500.0;
    long nt = 500;
    double f0 = 10.0;
    long nrec = 4;
    unsigned seed = 0;
    seismic::RunConfig run;
};

/// <F x, y> against <x, F* y> for band-limited random x (source trace) and
/// y (receiver record).
struct AdjointReport {
    std::string descriptor;  ///< dims, order, nt
    double forward_product = 0;
    double adjoint_product = 0;
    double abs_discrepancy = 0;
    double rel_discrepancy = 0;  ///< abs / max(|forward_product|, tiny)
    bool passed = false;         ///< rel < 1e-10
};

AdjointReport adjoint_test(const AdjointConfig& cfg);

struct TaylorConfig {
    std::vector<long> interior{65, 65};
    double h = 15.0;
    long nbpml = 10;
    int space_order = 4;
    double velocity = 1500.0;
    double f0 = 10.0;
    double sim_time = 0.9;              ///< seconds; dt fixed at half the CFL limit
    std::vector<double> steps{1.0, 1e-1, 1e-2, 1e-3, 1e-4};
    std::vector<double> dm;             ///< interior-shaped; empty = default blob
    unsigned seed = 0;
    seismic::RunConfig run;
};

struct TaylorPoint {
    double step = 0;
    double e0 = 0;  ///< |Phi(m + step dm) - Phi(m)|
    double e1 = 0;  ///< |Phi(m + step dm) - Phi(m) - step <grad, dm>|
    bool excluded = false;
    std::string note;  ///< exclusion reason
};

struct TaylorReport {
    double phi0 = 0;
    double gdot = 0;  ///< <grad, dm>
    std::vector<TaylorPoint> points;
    double slope0 = 0;  ///< fitted slope of the e0 series, expected ~1
    double slope1 = 0;  ///< fitted slope of the e1 series, expected ~2
    bool passed = false;
};

TaylorReport taylor_test(const TaylorConfig& cfg);

struct EquivalenceConfig {
    std::vector<long> interior{33, 33};
    double h = 15.0;
    long nbpml = 6;
    int space_order = 4;
    double velocity = 1500.0;
    long nt = 40;
    double f0 = 15.0;
    unsigned seed = 0;
};

struct EquivalenceVariant {
    std::string plan;  ///< e.g. "parallel+simd+blocked" or "all-off"
    double max_error = 0;
    bool bitwise = false;  ///< portable rebuild matched the interpreter exactly
    bool passed = false;
};

/// Runs a fixed forward problem through every {parallel, simd, blocking}
/// combination and checks each wavefield and record against the reference
/// interpreter.  Per-point errors are measured relative to the larger of the
/// two values, floored at 1e-3 of the field peak so sign-crossing cells do
/// not divide by noise.  The all-off variant is additionally rebuilt with the
/// portable preset and must match bit for bit.
struct EquivalenceReport {
    std::vector<EquivalenceVariant> variants;
    bool passed = false;
};

EquivalenceReport equivalence_suite(const EquivalenceConfig& cfg);

/// One benchmark table row; intensity = flops / bytes per point.
struct RooflineRow {
    std::string kernel;
    double flops_per_point = 0;
    double bytes_per_point = 0;
    double intensity = 0;
    double seconds = 0;
    double gflops = 0;
    std::string plan;
    std::vector<long> blocks;
};

RooflineRow roofline_row(const codegen::GeneratedSource& src, const runtime::RunStats& stats,
                         const std::string& plan, const std::vector<long>& blocks);

/// Single-line JSON renderings for the report emitters.
std::string to_json_line(const AdjointReport& r);
std::string to_json_line(const TaylorReport& r);
std::string to_json_line(const EquivalenceReport& r);
std::string to_json_line(const RooflineRow& r);

void write_json_lines(const std::string& path, const std::vector<std::string>& lines);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

}  // namespace sfd::verify
