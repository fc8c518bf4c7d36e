#include "lamb/sources.hpp"

#include <algorithm>
#include <cmath>

namespace lamb {

Source2D Source2D::zero(Real r) {
  Source2D s;
  s.f = [](Real, Real) { return Vec2c{0.0, 0.0}; };
  s.top = [](Real) { return Vec2c{0.0, 0.0}; };
  s.bot = s.top;
  s.r = r;
  return s;
}

Source2D Source2D::combine(Complex a, const Source2D& s1, Complex b, const Source2D& s2) {
  Source2D s;
  s.r = std::max(s1.r, s2.r);
  s.f = [=](Real x, Real z) {
    const Vec2c p = s1.f(x, z), q = s2.f(x, z);
    return Vec2c{a * p[0] + b * q[0], a * p[1] + b * q[1]};
  };
  s.top = [=](Real x) {
    const Vec2c p = s1.top(x), q = s2.top(x);
    return Vec2c{a * p[0] + b * q[0], a * p[1] + b * q[1]};
  };
  s.bot = [=](Real x) {
    const Vec2c p = s1.bot(x), q = s2.bot(x);
    return Vec2c{a * p[0] + b * q[0], a * p[1] + b * q[1]};
  };
  s.z_breaks = [b1 = s1.z_breaks, b2 = s2.z_breaks](Real x) {
    std::vector<Real> out;
    if (b1) out = b1(x);
    if (b2) {
      const auto o = b2(x);
      out.insert(out.end(), o.begin(), o.end());
    }
    std::sort(out.begin(), out.end());
    return out;
  };
  return s;
}

Real QuarticBump::value(Real x) const {
  if (x <= a || x >= b) return 0;
  const Real p = (x - a) * (b - x);
  return c * p * p;
}

Real QuarticBump::d1(Real x) const {
  if (x <= a || x >= b) return 0;
  const Real p = (x - a) * (b - x);
  return 2 * c * p * (a + b - 2 * x);
}

Real QuarticBump::d2(Real x) const {
  if (x <= a || x >= b) return 0;
  const Real p = (x - a) * (b - x), dp = a + b - 2 * x;
  return 2 * c * (dp * dp - 2 * p);
}

namespace {
template <typename F>
Real sum_over(const std::vector<QuarticBump>& v, F f) {
  Real s = 0;
  for (const auto& b : v) s += f(b);
  return s;
}
}  // namespace

Real DefectProfile::g1_at(Real x) const { return sum_over(g1, [x](const QuarticBump& b) { return b.value(x); }); }
Real DefectProfile::g2_at(Real x) const { return sum_over(g2, [x](const QuarticBump& b) { return b.value(x); }); }
Real DefectProfile::dg1(Real x) const { return sum_over(g1, [x](const QuarticBump& b) { return b.d1(x); }); }
Real DefectProfile::dg2(Real x) const { return sum_over(g2, [x](const QuarticBump& b) { return b.d1(x); }); }
Real DefectProfile::d2g1(Real x) const { return sum_over(g1, [x](const QuarticBump& b) { return b.d2(x); }); }
Real DefectProfile::d2g2(Real x) const { return sum_over(g2, [x](const QuarticBump& b) { return b.d2(x); }); }

std::pair<Real, Real> DefectProfile::support() const {
  Real lo = 1e300, hi = -1e300;
  for (const auto* v : {&g1, &g2})
    for (const auto& b : *v) {
      lo = std::min(lo, b.a);
      hi = std::max(hi, b.b);
    }
  if (lo > hi) return {0.0, 0.0};
  return {lo, hi};
}

Real DefectProfile::epsilon() const {
  // sampled sup norms; bumps are piecewise polynomials so a fine scan suffices
  const auto [lo, hi] = support();
  if (!(hi > lo)) return 0;
  Real e1 = 0, e2 = 0;
  const int n = 4000;
  for (int i = 0; i <= n; ++i) {
    const Real x = lo + (hi - lo) * i / n;
    e1 = std::max({e1, std::abs(g1_at(x)), std::abs(dg1(x)), std::abs(d2g1(x))});
    e2 = std::max({e2, std::abs(g2_at(x)), std::abs(dg2(x)), std::abs(d2g2(x))});
  }
  return std::max(e1, e2);
}

void DefectProfile::validate() const {
  const auto [lo, hi] = support();
  for (int i = 0; i <= 2000 && hi > lo; ++i) {
    const Real x = lo + (hi - lo) * i / 2000;
    if (-1 + 2 * g2_at(x) >= 1 + 2 * g1_at(x))
      throw InvalidArgument("defect profile: plate thickness vanishes near x = " + std::to_string(x));
  }
  for (const auto* v : {&g1, &g2})
    for (const auto& b : *v)
      if (!(b.b > b.a)) throw InvalidArgument("defect profile: empty bump interval");
}

Source2D source_e1() {
  Source2D s = Source2D::zero(3.0);
  // The bracket is read as 1 - ((x-0.5)^2 + (z-0.06)^2/0.015^2), which vanishes on the
  // ellipse and keeps f in H^1.
  s.f = [](Real x, Real z) {
    const Real e = (x - 0.5) * (x - 0.5) + (z - 0.06) * (z - 0.06) / (0.015 * 0.015);
    if (e >= 1) return Vec2c{0.0, 0.0};
    const Real amp = -100.0 * (1 - e);
    return Vec2c{amp * (x + 2 * z), amp};
  };
  s.z_breaks = [](Real x) -> std::vector<Real> {
    const Real d = 1 - (x - 0.5) * (x - 0.5);
    if (d <= 0) return {};
    const Real w = 0.015 * std::sqrt(d);
    return {0.06 - w, 0.06 + w};
  };
  return s;
}

Source2D source_e2() {
  Source2D s = Source2D::zero(3.0);
  const Real r = s.r;
  s.top = [r](Real x) {
    if (std::abs(x) >= r) return Vec2c{0.0, 0.0};
    const Real g = 10.0 / std::sqrt(2 * kPi) * std::exp(-(x + 0.5) * (x + 0.5) / 200.0);
    return Vec2c{g, g * x};
  };
  s.bot = [](Real x) {
    if (x <= 2.0 || x >= 2.5) return Vec2c{0.0, 0.0};
    const Real g = 20.0 * (x - 2.0) * (x - 2.5);
    return Vec2c{g, g * std::sin(x)};
  };
  return s;
}

Source2D source_e1_e2() { return Source2D::combine(1.0, source_e1(), 1.0, source_e2()); }

namespace {
// Radial window exp(-16 rho^2): negligible beyond rho = 1.4 and spectrally
// resolved on desk-scale grids. A radial window keeps E3 curl-free and E4
// divergence-free.
constexpr Real kWindowRate = 16.0;
constexpr Real kWindowRadius = 1.4;
Real window3d(Real rho2) { return rho2 >= kWindowRadius * kWindowRadius ? 0.0 : std::exp(-kWindowRate * rho2); }
}  // namespace

Source3D source_e3() {
  Source3D s;
  s.r = kWindowRadius;
  s.f = [](Real x, Real y, Real z) {
    const Real rho2 = x * x + y * y;
    const Real g = z * 50.0 / kPi * std::exp(-rho2 / 200.0) * window3d(rho2);
    return Vec3c{-x * g, -y * g, g};
  };
  s.top = [](Real, Real) { return Vec3c{0.0, 0.0, 0.0}; };
  s.bot = s.top;
  return s;
}

Source3D source_e4() {
  Source3D s;
  s.r = kWindowRadius;
  s.f = [](Real, Real, Real) { return Vec3c{0.0, 0.0, 0.0}; };
  s.top = [](Real x, Real y) {
    const Real rho2 = x * x + y * y;
    const Real g = 25.0 / kPi * std::exp(-rho2 / 200.0) * window3d(rho2);
    return Vec3c{-y * g, x * g, 0.0};
  };
  s.bot = [](Real, Real) { return Vec3c{0.0, 0.0, 0.0}; };
  return s;
}

DefectProfile defect_e5() {
  DefectProfile d;
  d.g1.push_back({5.0 / 16.0, 3.2, 4.2});
  d.g2.push_back({-35.0 / 16.0, 3.4, 4.0});
  return d;
}

DefectProfile defect_e6() {
  DefectProfile d;
  d.g1.push_back({125.0 / 16.0, 3.7, 4.2});
  d.g2.push_back({125.0 / 16.0, 3.4, 4.0});
  return d;
}

DefectProfile defect_amplitude(Real A) {
  DefectProfile d;
  d.g1.push_back({A, 3.0, 5.0});
  return d;
}

}  // namespace lamb
