#pragma once
// Frequency-domain finite-difference oracle for 2D plate elasticity.
//
// Conservative second-order scheme on a node grid in mapped coordinates
// (xi, zeta) in [xa, xb] x [-h, h]. A perturbed plate is the image of
// z = a(x) + b(x) zeta with a = h (g1 + g2), b = 1 + g1 - g2. The x-ends carry
// complex-stretched absorbing layers and homogeneous Dirichlet conditions.
// Boundary rows use half cells with the traction flux prescribed.

#include "lamb/modes.hpp"
#include "lamb/sources.hpp"

#include <optional>

namespace lamb {

/// Absorbing layer: stretch gamma(x) = 1 + i slope (x - right) for x > right,
/// 1 + i slope (left - x) for x < left.
struct PMLProfile {
  Real left = -4, right = 4;
  Real slope = 1.0;
  Complex gamma(Real x) const;
  bool active(Real x) const { return x < left || x > right; }
};

struct FDGrid {
  Real xa = -6, xb = 6;
  Real dx = 2e-3;       // spacing in both directions; dz = 2h / nz must equal it
  int nz = 100;
  Real h = 0.1;
  PMLProfile pml;
  std::optional<DefectProfile> defect;

  /// Grid with spacing d on [xa, xb] x [-h, h]; requires 2h/d and (xb-xa)/d integral.
  static FDGrid make(Real xa, Real xb, Real h, Real d, PMLProfile pml);
  int nx() const { return static_cast<int>(std::lround((xb - xa) / dx)); }  // intervals
  Real x(int i) const { return xa + dx * i; }
  Real zeta(int j) const { return -h + dx * j; }
  /// Physical z of node (i, j).
  Real z(int i, int j) const;
  Real map_a(Real x) const;
  Real map_b(Real x) const;
  Real map_da(Real x) const;
  Real map_db(Real x) const;
  void validate() const;
};

/// Right-hand side: body force at physical points and boundary data sigma.N with
/// N the unnormalized outward normal (-z_top', 1) on top, (z_bot', -1) at the bottom.
struct FDSource {
  std::function<Vec2c(Real, Real)> f;
  std::function<Vec2c(Real)> top, bot;
  static FDSource from(const Source2D& s);
};

struct FDOptions {
  /// Subtract spurious backward-mode content left by the absorbing layers.
  bool backward_mode_correction = true;
  /// Sections (straight, source-free, outside the layers) used by the correction.
  Real section_left = -3.5, section_right = 3.5;
  /// Memory cap for stored elimination factors before checkpointing kicks in.
  double factor_memory_bytes = 1.2e9;
};

struct FDSolution {
  FDGrid grid;
  Real omega = 0;
  MatC u, v;  // (nx + 1, nz + 1) node values in mapped coordinates
  std::vector<Complex> corrected_k;  // backward wavenumbers that were corrected
  /// Interpolated surface trace u(x, z_top(x)) on every x node.
  VecC top_u() const { return u.col(u.cols() - 1); }
};

FDSolution solve_fd(const FDGrid& grid, const Material& mat, Real omega, const FDSource& src,
                    const FDOptions& opt = {});

/// Bi-orthogonal modal amplitudes of the FD field at x-node i (straight section):
/// a_n = <X, Y_n> / J_n and b_n = <Y, X_n> / J_n.
void fd_section_amplitudes(const FDSolution& s, const Material& mat, int i, const ModeShape& mode, Complex& a,
                           Complex& b);

/// Incident first symmetric mode exp(i k1 x)(u1, v1) and the traction data
/// -sigma(u_inc).N it induces on the perturbed boundary (scattered-field problem).
FDSource scattering_source(const ModeShape& incident, const DefectProfile& defect, const Material& mat);

}  // namespace lamb
