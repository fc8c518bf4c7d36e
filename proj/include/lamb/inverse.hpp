#pragma once
// Shape-defect reconstruction from multi-frequency surface data.
//
// An incident first symmetric mode exp(i k1 x)(u1, v1) hits a defect of the
// faces z = h (1 + 2 g1), z = h (-1 + 2 g2). To first order the scattered field
// solves the straight-plate problem with boundary sources built from g1, g2.
// Left of the defect only left-going modes survive:
//
//   u_s(x, h) = sum_n alpha_n exp(-i k_n x) u_n(h),
//   2 alpha_n = D_n = int exp(i xi y) (c1_n g1'(y) + c2_n g2'(y)) dy,  xi = k_n + k1.
//
// D_n is the Fourier datum; with F(g)(xi) = int g exp(-i xi y) dy it equals
// F(c1 g1' + c2 g2')(-xi). Modes n = 1, 2 are the fundamental S and A modes.

#include "lamb/fd.hpp"
#include "lamb/forward2d.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>

namespace lamb {

/// Fundamental symmetric (n = 1) and antisymmetric (n = 2) propagative modes.
struct FundamentalModes {
  ModeShape s0, a0;
  std::vector<ModeShape> all;  // every retained right-going mode, ordered
};
FundamentalModes fundamental_modes(Real omega, const Material& mat, int n_modes = 20);

/// Boundary sources of the linearized scattering problem for the incident
/// mode `mode1`: on top (eta1' s1 - eta1 t1', -eta1 r1') exp(i k1 x) at z = h,
/// at the bottom (-eta2' s1 + eta2 t1', eta2 r1') exp(i k1 x) at z = -h, with
/// eta_i = 2 h g_i and all profiles evaluated on the respective face.
Source2D born_sources(const DefectProfile& defect, const ModeShape& mode1);

/// Coefficients c1, c2 of the datum of mode n (see header comment).
struct BornCoefficients {
  Complex c1, c2;
  Real xi = 0;
};
BornCoefficients born_coefficients(const ModeShape& mode_n, const ModeShape& mode1);

/// int exp(i xi y) (c1 g1' + c2 g2') dy by Gauss quadrature over the bumps.
Complex direct_datum(const DefectProfile& defect, const BornCoefficients& c);

// ---- measurements -----------------------------------------------------------

enum class SynthesisPath { Born, Oracle };

struct Trace {
  Real omega = 0;
  VecR x;
  VecC u;  // u(x, h)
};

struct MeasurementSet {
  std::vector<Trace> traces;  // ascending omega
  Real noise = 0;             // relative level that was added
  Real support_left = 3, support_right = 5;  // declared defect window
  std::vector<Real> skipped;                 // critical frequencies left out
  std::vector<std::string> warnings;
};

/// FD settings for the geometry-exact data path.
struct OracleOptions {
  Real xa = -1.2, xb = 7.2;
  Real pml_left = 0.8, pml_right = 5.2;
  Real section_left = 2.0, section_right = 5.1;
  int min_nz = 10;
  Real nz_per_omega = 1.6;  // cells across the thickness per unit of omega
  bool richardson = true;   // combine spacings d and d/2
};

struct SynthesisOptions {
  SynthesisPath path = SynthesisPath::Born;
  Real window_left = 1.0, window_right = 2.5;
  Real spacing = 0.01;  // trace sampling of the Born path
  Real noise = 0;
  std::uint64_t seed = 1;
  int n_modes = 20;
  Real born_dx = 1e-3;  // convolution grid of the Born path
  Real support_left = 3, support_right = 5;
  OracleOptions oracle;
  int threads = 1;
};

/// omega_m = m omega_max / count, m = 1..count.
std::vector<Real> frequency_grid(Real omega_max, int count);

/// Scattered surface trace on the measurement window for one frequency.
Trace born_trace(const DefectProfile& defect, const Material& mat, Real omega, const SynthesisOptions& opt);
Trace oracle_trace(const DefectProfile& defect, const Material& mat, Real omega, const SynthesisOptions& opt);

/// Complex Gaussian noise per trace, standard deviation sigma * rms(u),
/// drawn from one seeded stream in trace order.
void add_noise(MeasurementSet& meas, Real sigma, std::uint64_t seed);

/// Traces at every frequency, then add_noise(opt.noise, opt.seed).
/// Critical frequencies are skipped and recorded.
MeasurementSet synthesize_measurements(const DefectProfile& defect, const Material& mat,
                                       const std::vector<Real>& freqs, const SynthesisOptions& opt);

// ---- Fourier data -----------------------------------------------------------

/// min(k1 + k2, 2 k1) at omega_max.
Real xi_max(Real omega_max, const Material& mat);

enum class ExtractionMethod {
  LeastSquares,  // fit of the known modal exponentials
  FftPeak,       // Hann window, spectral peak with quadratic refinement
};

struct ExtractionOptions {
  ExtractionMethod method = ExtractionMethod::LeastSquares;
  int n_modes = 20;
  Real evanescent_cut = 20;  // keep modes with Im k * gap below this
  Real cond_max = 1e8;       // least-squares conditioning limit
  Real min_xi_fraction = 0.05;
  Real omega_max = 0;  // 0: largest measured frequency
};

struct ExtractionRow {
  int mode = 1;  // 1 or 2
  Real omega = 0;
  Real xi = 0;
  Complex datum;
  Complex c1, c2;
  bool dropped = false;
  std::string flag;
};

struct ExtractionTable {
  std::vector<ExtractionRow> rows;  // mode 1 rows, then mode 2 rows, each by ascending xi
  Real xi_max = 0;
  std::vector<std::string> warnings;
  std::vector<const ExtractionRow*> usable() const;
};

/// Modes per frequency, computed once and reused by repeated extractions.
/// Critical frequencies are left out.
using ModeBank = std::map<Real, FundamentalModes>;
ModeBank build_mode_bank(const std::vector<Real>& freqs, const Material& mat, int n_modes = 20);

ExtractionTable extract_fourier_data(const MeasurementSet& meas, const Material& mat,
                                     const ExtractionOptions& opt = {}, const ModeBank* bank = nullptr);

/// The same table filled with data computed directly from a known defect.
ExtractionTable exact_fourier_data(const DefectProfile& defect, const Material& mat, const std::vector<Real>& freqs,
                                  const ExtractionOptions& opt = {});

// ---- inversion --------------------------------------------------------------

/// Piecewise-linear profile sampled on a uniform grid.
struct Profile1D {
  AxisGrid x;
  VecR g;
  Real at(Real t) const;
  /// int g exp(-i xi t) dt, exact for the interpolant.
  Complex fourier(Real xi) const;
  Real l2_norm() const;
  Real h1_norm() const;
  static Profile1D sample(const std::function<Real(Real)>& f, const AxisGrid& x);
};

struct InversionOptions {
  Real support_left = 3, support_right = 5;
  Real node_spacing = 0.02;
  Real reg = 1e-4;  // relative to the data-matrix scale
  /// Reweighting passes with Huber weights; data the Born model cannot explain
  /// (trapped resonances of a thick defect, for instance) lose influence.
  int robust_iterations = 20;
};

struct Reconstruction {
  Profile1D g1, g2;
  Real residual = 0;  // weighted data misfit, relative
  int rows_used = 0;
};

/// Joint regularized least squares for the node values of g1, g2 (zero at
/// both ends of the support window) from all usable data rows. Rows are
/// normalized by |(c1, c2)| and weighted by sqrt of their xi spacing; the
/// penalty is on second differences of the piecewise-constant slopes.
Reconstruction unmix_and_invert(const ExtractionTable& table, const InversionOptions& opt = {});

struct LCurvePoint {
  Real reg, residual, roughness;
};
std::vector<LCurvePoint> lcurve(const ExtractionTable& table, const InversionOptions& opt,
                                const std::vector<Real>& regs);

/// sqrt(|g1 - g1'|^2 + |g2 - g2'|^2) / sqrt(|g1|^2 + |g2|^2) in L2 over the window.
Real relative_l2_error(const Reconstruction& rec, const DefectProfile& truth);

struct StabilityReport {
  Real lhs = 0;           // |g - g_app|^2 in L2
  Real fourier_term = 0;  // (4/pi) |F(g) - F(g_app)| in L2(0, xi_max)
  Real tail_term = 0;     // 2 pi M^2 / xi_max^2
  Real M = 0;
  bool holds = false;
  Real slack() const { return fourier_term + tail_term - lhs; }
};

/// Both sides of the stability inequality; profiles must share their grid.
/// M <= 0 selects max(|g|_H1, |g_app|_H1).
StabilityReport stability_bound_check(const Profile1D& g, const Profile1D& g_app, Real xi_max, Real M = 0);

// ---- end to end --------------------------------------------------------------

struct PipelineResult {
  MeasurementSet measurements;
  ExtractionTable table;
  Reconstruction reconstruction;
  bool has_truth = false;
  Real error = 0;                        // relative_l2_error against the truth
  StabilityReport stability_g1, stability_g2;  // truth vs reconstruction, per face
  Real seconds_synthesis = 0, seconds_inversion = 0;
};

/// Extraction and inversion of given measurements; `truth` adds the error
/// and the stability check.
PipelineResult invert_measurements(MeasurementSet meas, const Material& mat, const ExtractionOptions& eopt,
                                   const InversionOptions& iopt, const DefectProfile* truth = nullptr);

/// Synthesis at `freqs`, then invert_measurements with the defect as truth.
PipelineResult run_pipeline(const DefectProfile& defect, const Material& mat, const std::vector<Real>& freqs,
                            const SynthesisOptions& sopt, const ExtractionOptions& eopt, const InversionOptions& iopt);

}  // namespace lamb
