#pragma once
// Built-in source and defect library (E1-E6) plus the analytic source descriptions
// shared by the modal solvers and the finite-difference oracle.

#include "lamb/core.hpp"

#include <array>
#include <functional>

namespace lamb {

using Vec2c = std::array<Complex, 2>;
using Vec3c = std::array<Complex, 3>;

/// Analytic 2D source: interior force f(x, z) and tractions sigma.nu on z = +h / -h.
/// Every component must vanish for |x| >= r.
struct Source2D {
  std::function<Vec2c(Real, Real)> f;
  std::function<Vec2c(Real)> top, bot;
  Real r = 3.0;
  /// z-levels inside (-h, h) where f has a kink or jump at a given x; section
  /// quadrature splits its panels there. Empty function: f is smooth in z.
  std::function<std::vector<Real>(Real)> z_breaks;

  static Source2D zero(Real r);
  /// a s1 + b s2 (same support radius: the larger one).
  static Source2D combine(Complex a, const Source2D& s1, Complex b, const Source2D& s2);
};

/// Analytic 3D source on the plate |z| < h; support inside the cylinder of radius r.
struct Source3D {
  std::function<Vec3c(Real, Real, Real)> f;
  std::function<Vec3c(Real, Real)> top, bot;
  Real r = 1.0;
};

/// c (x - a)^2 (b - x)^2 on [a, b], zero elsewhere. C1 across the end points.
struct QuarticBump {
  Real c = 0, a = 0, b = 1;
  Real value(Real x) const;
  Real d1(Real x) const;
  Real d2(Real x) const;
};

/// Top and bottom defect profiles g1, g2 as sums of quartic bumps.
/// Top surface z = h (1 + 2 g1), bottom z = h (-1 + 2 g2).
struct DefectProfile {
  std::vector<QuarticBump> g1, g2;

  Real g1_at(Real x) const;
  Real g2_at(Real x) const;
  Real dg1(Real x) const;
  Real dg2(Real x) const;
  Real d2g1(Real x) const;
  Real d2g2(Real x) const;
  /// Smallest interval containing every bump (zero-length when the defect is empty).
  std::pair<Real, Real> support() const;
  /// max of the W^{2,inf} norms of g1, g2 (the small parameter of the Born model).
  Real epsilon() const;
  bool empty() const { return g1.empty() && g2.empty(); }
  /// Throws InvalidArgument if the plate degenerates (-1 + 2 g2 >= 1 + 2 g1 somewhere).
  void validate() const;
};

// Appendix source expressions.
Source2D source_e1();          // interior ellipse force
Source2D source_e2();          // Gaussian top traction, bump bottom traction
Source2D source_e1_e2();       // the sum used in the 2D comparison
Source3D source_e3();          // curl-free interior force, radially windowed
Source3D source_e4();          // divergence-free top traction, radially windowed
DefectProfile defect_e5();
DefectProfile defect_e6();
/// g1 = A 1_[3,5] (x-3)^2 (5-x)^2, g2 = 0.
DefectProfile defect_amplitude(Real A);

}  // namespace lamb
