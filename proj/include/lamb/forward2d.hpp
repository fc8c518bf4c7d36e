#pragma once
// 2D plate source problem solved by Lamb-mode decomposition.

#include "lamb/modes.hpp"
#include "lamb/sources.hpp"

#include <iosfwd>

namespace lamb {

/// Sampled 2D source. Each x column carries its own section quadrature so that
/// interior forces with x-dependent kinks are integrated accurately.
struct SourceSpec2D {
  AxisGrid x;
  Real h = 0;
  Real r = 0;
  std::vector<VecR> z, w;          // per column: section nodes and weights
  std::vector<VecC> f1, f2;        // per column: force samples at those nodes
  VecC b1_top, b2_top, b1_bot, b2_bot;

  /// Samples an analytic source; `order` Gauss points per section panel.
  static SourceSpec2D sample(const Source2D& src, const AxisGrid& x, Real h, int order = 16);
  void validate() const;
};

/// Projections F1^n(x), F2^n(x) on the x grid.
struct ModeProjection {
  VecC F1, F2;
};

/// F1^n = (int f1 u_n + b1_top u_n(h) + b1_bot u_n(-h)) / J_n and the same for F2 with v_n.
/// Throws CriticalFrequency when the mode margin is below kCriticalThreshold.
ModeProjection project_sources(const SourceSpec2D& src, const ModeShape& mode);

struct ModeCoefficients {
  VecC a, b;
};

/// a = G1 * F1 - G2 * F2, b = G2 * F1 - G1 * F2 by trapezoidal convolution on the
/// x grid, with G1 = exp(ik|x|)/2 and G2 = sign(x) exp(ik|x|)/2 evaluated exactly.
ModeCoefficients green_convolve(const VecC& F1, const VecC& F2, Complex k, const AxisGrid& x);

struct Solve2DOptions {
  int section_order = 16;
  Real truncation_tol = 1e-6;
};

struct Wavefield2D {
  AxisGrid x;
  VecR z;               // evaluation depths
  MatC u, v;            // (x.n, z.size())
  Real omega = 0;
  int n_modes = 0;
  std::vector<ModeShape> modes;
  MatC a, b;            // (n_modes, x.n) coefficient traces
  std::vector<ModeProjection> projections;
  Real last_mode_ratio = 0;   // |last mode contribution| / |field|, max norms
  bool truncation_warning = false;

  /// Re-evaluates the modal sum at depth z for every x node (any z in [-h, h]).
  void at_depth(Real z, VecC& u_out, VecC& v_out) const;
};

/// Evenly spaced depths -h, ..., h (nz intervals).
VecR uniform_depths(Real h, int nz);

Wavefield2D solve2d(const SourceSpec2D& src, Real omega, const Material& mat, int n_modes, const VecR& z_eval,
                    const Solve2DOptions& opt = {});

/// Same, with modes already selected (e.g. reused across sources).
Wavefield2D solve2d_with_modes(const SourceSpec2D& src, const std::vector<ModeShape>& modes, const VecR& z_eval,
                               const Solve2DOptions& opt = {});

/// CSV: x, z, re_u, im_u, re_v, im_v.
void write_field_csv(std::ostream& os, const Wavefield2D& w);

}  // namespace lamb
