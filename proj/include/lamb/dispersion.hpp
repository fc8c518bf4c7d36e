#pragma once
// Rayleigh-Lamb roots: search, classification, ordering and criticality.

#include "lamb/core.hpp"

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <vector>

namespace lamb {

enum class ModeFamily { Symmetric, Antisymmetric, ShearHorizontal };
enum class ModeKind { Propagative, Evanescent, Inhomogeneous };
enum class Direction { RightGoing, LeftGoing };

const char* to_string(ModeFamily f);
const char* to_string(ModeKind k);
const char* to_string(Direction d);

struct ModeRoot {
  Real omega = 0;
  Complex k;
  ModeFamily family = ModeFamily::Symmetric;
  Complex p, q;               // principal square roots of P, Q
  ModeKind kind = ModeKind::Propagative;
  Direction direction = Direction::RightGoing;
  Complex gamma;              // J / (i w^2 k), from the closed-form pairing
  Complex jn;                 // <X, Y> of the unnormalized closed-form mode
  std::optional<Real> group_velocity;  // propagative only
  int index = 0;              // 1-based rank in the right-going ordering
  Real margin = 0;            // |J| / (|X| |Y|), a cosine-like criticality gauge
};

struct CriticalOffender {
  ModeFamily family;
  Complex k;
  Real gamma_abs;
  Real margin;
};

struct CriticalReport {
  Real omega = 0;
  std::vector<CriticalOffender> offenders;
  bool is_critical = false;
  Real margin = 0;            // min over retained modes
};

/// Threshold below which a mode's normalized margin (or h|k|) means critical.
inline constexpr Real kCriticalThreshold = 1e-6;

struct CriticalFrequency : std::runtime_error {
  explicit CriticalFrequency(CriticalReport r);
  CriticalReport report;
};

struct RootCollision : std::runtime_error {
  RootCollision(const std::string& what, Complex a, Complex b)
      : std::runtime_error(what), k1(a), k2(b) {}
  Complex k1, k2;
};

// ---- the dispersion function ----------------------------------------------

/// Value and first derivatives of the entire (branch-free) dispersion function
///   S: (Q-K)^2 Sq(Q) C(P) + 4K T(P) C(Q),  A: (Q-K)^2 C(Q) Sq(P) + 4K T(Q) C(P)
/// with C(P)=cos(sqrt(P)h), Sq(P)=sin(sqrt(P)h)/sqrt(P), T(P)=sqrt(P) sin(sqrt(P)h).
/// All outputs share one positive factor exp(-(|Im p|+|Im q|)h) to avoid overflow.
struct DispersionEval {
  Complex d, dk, domega;
  Real scale = 0;  // |first term| + |second term| with the same factor
};

DispersionEval dispersion_eval(Real omega, Complex k, ModeFamily family, const Material& mat);

/// D(k) alone (scaled as above).
Complex dispersion_residual(Real omega, Complex k, ModeFamily family, const Material& mat);

/// Group velocity -D_k / D_omega (meaningful on real roots).
Real group_velocity(Real omega, Real k, ModeFamily family, const Material& mat);

// ---- root search ----------------------------------------------------------

struct RootSearchOptions {
  int real_scan_points = 4000;
  Real dedup_tol = 1e-8;     // relative, times (1 + |k|)
  bool check_completeness = true;
  bool refuse_critical = true;
};

/// Roots of one family in the closed first quadrant (Re k >= 0, Im k >= 0, k != 0)
/// with Re k <= kr and Im k <= ki.
std::vector<Complex> quadrant_roots(Real omega, ModeFamily family, const Material& mat, Real kr, Real ki,
                                    const RootSearchOptions& opt = {});

/// First n right-going Lamb roots ordered by (Im k ascending, Re k descending).
/// Throws CriticalFrequency when the margin falls below kCriticalThreshold.
std::vector<ModeRoot> find_roots(Real omega, const Material& mat, int n_modes = 20,
                                 const RootSearchOptions& opt = {});

/// Fill p, q, kind, gamma, jn, margin and group velocity of a root.
ModeRoot make_root(Real omega, Complex k, ModeFamily family, const Material& mat);

/// Right-going order predicate.
bool right_going_before(const ModeRoot& a, const ModeRoot& b);

/// Seeds h k = ln(2 pi N)/2 + i pi N/2 - i ln(2 pi N)/(2 pi N) for large N.
Complex merkulov_seed(Real N, Real h);

/// Nearest Merkulov index of a complex root: N = 2m - 1/2 (S) or 2m + 1/2 (A).
Real merkulov_index(Complex k, ModeFamily family, Real h);

// ---- Gamma ----------------------------------------------------------------

/// Gamma = J / (i w^2 k) with J the exact section integral of the closed-form
/// modes. Throws CriticalFrequency when k = 0. SH family returns 1.
Complex gamma_value(const ModeRoot& root, const Material& mat);

/// The printed Gamma_S / Gamma_A expressions, kept for comparison only.
Complex gamma_printed(const ModeRoot& root, const Material& mat);

// ---- critical frequencies --------------------------------------------------

/// SH critical frequencies sqrt(mu) pi n / (2h) inside (a, b].
std::vector<Real> sh_critical_frequencies(Real a, Real b, const Material& mat);

/// Lamb cutoff frequencies (k = 0 roots) inside (a, b] for one family.
std::vector<Real> lamb_cutoff_frequencies(Real a, Real b, ModeFamily family, const Material& mat);

struct ZgvPoint {
  Real omega, k;
  ModeFamily family;
};

/// Newton on (D, D_k) = 0 in real (k, w) from an initial guess.
ZgvPoint refine_zgv(Real omega0, Real k0, ModeFamily family, const Material& mat);

/// Margin report at one frequency (no refusal).
CriticalReport critical_report(Real omega, const Material& mat, int n_modes = 20);

/// Scan (a, b] with `steps` samples; returns refined critical frequencies:
/// ZGV points (pair creation of real roots), Lamb cutoffs and SH cutoffs.
std::vector<CriticalReport> scan_critical(Real a, Real b, const Material& mat, int steps, int n_modes = 20);

/// Dispersion atlas CSV.
void write_atlas_header(std::ostream& os);
void write_atlas_rows(std::ostream& os, const std::vector<ModeRoot>& roots);

}  // namespace lamb
