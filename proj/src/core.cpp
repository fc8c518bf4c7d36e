#include "lamb/core.hpp"

#include <cmath>
#include <sstream>

namespace lamb {

void Material::validate() const {
  std::ostringstream msg;
  if (!(mu > 0)) msg << "mu must be positive (got " << mu << "); ";
  if (!(lambda + 2 * mu > 0)) msg << "lambda + 2 mu must be positive; ";
  if (!(h > 0)) msg << "h must be positive (got " << h << "); ";
  if (!msg.str().empty()) throw InvalidArgument("invalid material: " + msg.str());
}

bool SectionGrid::same_as(const SectionGrid& o) const {
  return h == o.h && nodes.size() == o.nodes.size() && nodes == o.nodes;
}

void gauss_legendre(int order, VecR& x, VecR& w) {
  if (order < 1) throw InvalidArgument("gauss_legendre: order must be >= 1");
  const int n = order;
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Newton on P_n starting from the Tricomi-type guess
    Real z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    Real dp = 0;
    for (int it = 0; it < 100; ++it) {
      Real p0 = 1, p1 = z;
      for (int k = 2; k <= n; ++k) {
        Real p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1;
      Real pn = (n == 1) ? z : p1;
      Real pnm1 = (n == 1) ? 1 : p0;
      dp = n * (z * pn - pnm1) / (z * z - 1);
      Real dz = pn / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // recompute derivative at the converged node
    Real p0 = 1, p1 = z;
    for (int k = 2; k <= n; ++k) {
      Real p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    Real pn = (n == 1) ? z : p1, pnm1 = (n == 1) ? 1 : p0;
    dp = n * (z * pn - pnm1) / (z * z - 1);
    Real wi = 2.0 / ((1 - z * z) * dp * dp);
    x(i) = -z;
    x(n - 1 - i) = z;
    w(i) = wi;
    w(n - 1 - i) = wi;
  }
  if (n % 2 == 1) x(n / 2) = 0.0;
}

SectionGrid gauss_section(int order, Real h) {
  if (order < 2) throw InvalidArgument("gauss_section: order must be >= 2");
  if (!(h > 0)) throw InvalidArgument("gauss_section: h must be positive");
  return composite_section(1, order, h);
}

SectionGrid composite_section(int panels, int order, Real h) {
  if (order < 2 || panels < 1) throw InvalidArgument("composite_section: bad panel layout");
  VecR x, w;
  gauss_legendre(order, x, w);
  SectionGrid g;
  g.h = h;
  const Eigen::Index n = static_cast<Eigen::Index>(panels) * order + 2;
  g.nodes.resize(n);
  g.weights.resize(n);
  g.nodes(0) = -h;
  g.weights(0) = 0;
  const Real pw = 2 * h / panels;
  Eigen::Index k = 1;
  for (int p = 0; p < panels; ++p) {
    const Real a = -h + p * pw;
    for (int i = 0; i < order; ++i, ++k) {
      g.nodes(k) = a + 0.5 * pw * (x(i) + 1);
      g.weights(k) = 0.5 * pw * w(i);
    }
  }
  g.nodes(n - 1) = h;
  g.weights(n - 1) = 0;
  return g;
}

AxisGrid AxisGrid::covering(Real a, Real b, Real dx) {
  if (!(dx > 0) || !(b > a)) throw InvalidArgument("AxisGrid::covering: bad interval");
  AxisGrid g;
  g.x0 = a;
  g.dx = dx;
  g.n = static_cast<Eigen::Index>(std::llround((b - a) / dx)) + 1;
  return g;
}

VecR AxisGrid::samples() const {
  VecR s(n);
  for (Eigen::Index i = 0; i < n; ++i) s(i) = at(i);
  return s;
}

Complex sinc(Complex z) {
  if (std::abs(z) < 1e-3) {
    const Complex z2 = z * z;
    return 1.0 - z2 / 6.0 + z2 * z2 / 120.0 - z2 * z2 * z2 / 5040.0;
  }
  return std::sin(z) / z;
}

Real loglog_slope(const std::vector<Real>& x, const std::vector<Real>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("loglog_slope: need matching samples");
  Real sx = 0, sy = 0, sxx = 0, sxy = 0;
  const Real n = static_cast<Real>(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    const Real lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace lamb
