#pragma once
// Shared numeric substrate: scalars, material, grids, quadrature, errors.

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace lamb {

using Real = double;
using Complex = std::complex<double>;
using VecR = Eigen::VectorXd;
using VecC = Eigen::VectorXcd;
using MatC = Eigen::MatrixXcd;
using MatR = Eigen::MatrixXd;

inline constexpr Real kPi = 3.14159265358979323846264338327950288;
inline constexpr Complex kI{0.0, 1.0};

// ---- errors -------------------------------------------------------------

struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct SingularArgument : std::domain_error {
  using std::domain_error::domain_error;
};
struct SolverFailure : std::runtime_error {
  explicit SolverFailure(const std::string& what, double rcond = 0.0)
      : std::runtime_error(what), condition_estimate(rcond) {}
  double condition_estimate;
};

// ---- material -----------------------------------------------------------

/// Isotropic plate: Lame pair and half-thickness, all nondimensional.
struct Material {
  Real lambda = 0.31;
  Real mu = 0.25;
  Real h = 0.1;

  Real lp2() const { return lambda + 2.0 * mu; }   // P-wave modulus
  Real cp() const { return std::sqrt(lp2()); }
  Real cs() const { return std::sqrt(mu); }
  void validate() const;
};

// ---- section quadrature -------------------------------------------------

/// Quadrature nodes on [-h, h]. The two endpoint nodes carry zero weight and
/// exist only for boundary-trace evaluation; interior weights are positive.
struct SectionGrid {
  VecR nodes;
  VecR weights;
  Real h = 0;

  Eigen::Index size() const { return nodes.size(); }
  bool same_as(const SectionGrid& o) const;

  template <typename Derived>
  auto integrate(const Eigen::MatrixBase<Derived>& f) const {
    using S = typename Derived::Scalar;
    return (f.array() * weights.template cast<S>().array()).sum();
  }
};

/// Gauss-Legendre rule of the given order mapped to [-h, h], plus endpoints.
SectionGrid gauss_section(int order, Real h);

/// Composite Gauss-Legendre: `panels` equal panels of `order` points each.
/// Used where section integrands are only piecewise smooth.
SectionGrid composite_section(int panels, int order, Real h);

/// Plain reference rule on [-1, 1] (nodes ascending).
void gauss_legendre(int order, VecR& x, VecR& w);

// ---- structured grids ---------------------------------------------------

/// Uniform samples x0, x0 + dx, ..., x0 + (n-1) dx.
struct AxisGrid {
  Real x0 = 0;
  Real dx = 1;
  Eigen::Index n = 0;

  static AxisGrid covering(Real a, Real b, Real dx);
  Real at(Eigen::Index i) const { return x0 + dx * static_cast<Real>(i); }
  Real last() const { return at(n - 1); }
  VecR samples() const;
};

/// Uniform planar grid (x fastest along rows of the value matrix).
struct PlaneGrid {
  AxisGrid x, y;
  Eigen::Index nodes() const { return x.n * y.n; }
};

/// Named complex samples on a planar grid; values(i, j) sits at (x_i, y_j).
struct ComplexField {
  std::string name;
  PlaneGrid grid;
  MatC values;

  ComplexField() = default;
  ComplexField(std::string nm, PlaneGrid g)
      : name(std::move(nm)), grid(g), values(MatC::Zero(g.x.n, g.y.n)) {}
  bool finite() const { return values.allFinite(); }
};

// ---- small helpers ------------------------------------------------------

/// sin(z)/z, entire.
Complex sinc(Complex z);

/// Least-squares slope of log(y) against log(x).
Real loglog_slope(const std::vector<Real>& x, const std::vector<Real>& y);

}  // namespace lamb
