#include <doctest.h>

#include "lamb/forward2d.hpp"

#include <random>

using namespace lamb;

namespace {
const Material kMat;

const std::vector<ModeShape>& modes_13_7(int n = 20) {
  static std::vector<ModeShape> m20, m130;
  auto& m = n == 20 ? m20 : m130;
  if (m.empty())
    for (const auto& r : find_roots(13.7, kMat, n)) m.push_back(make_mode(r, kMat));
  return m;
}

// smooth, compactly supported test source
Source2D smooth_source(Real cx, Real scale) {
  Source2D s = Source2D::zero(3.0);
  s.f = [=](Real x, Real z) {
    const Real d = (x - cx) / 0.4;
    if (std::abs(d) >= 1) return Vec2c{0.0, 0.0};
    const Real b = std::pow(1 - d * d, 3) * scale;
    return Vec2c{b * (1 + 3 * z), b * std::cos(20 * z)};
  };
  s.top = [=](Real x) {
    const Real d = (x - cx + 0.2) / 0.3;
    if (std::abs(d) >= 1) return Vec2c{0.0, 0.0};
    const Real b = std::pow(1 - d * d, 3) * scale;
    return Vec2c{b, -0.5 * b};
  };
  return s;
}
}  // namespace

TEST_CASE("zero sources give zero projections and a zero field") {
  const AxisGrid x = AxisGrid::covering(-3, 3, 0.01);
  const SourceSpec2D src = SourceSpec2D::sample(Source2D::zero(3.0), x, kMat.h);
  const Wavefield2D w = solve2d_with_modes(src, modes_13_7(), uniform_depths(kMat.h, 10));
  CHECK(w.u.cwiseAbs().maxCoeff() == 0.0);
  CHECK(w.v.cwiseAbs().maxCoeff() == 0.0);
  for (const auto& p : w.projections) {
    CHECK(p.F1.cwiseAbs().maxCoeff() == 0.0);
    CHECK(p.F2.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("a force profile orthogonal to u_n has no F1 projection") {
  const ModeShape& m = modes_13_7()[2];
  // psi = phi - c u_n with c chosen from an independent composite quadrature
  const SectionGrid g = composite_section(8, 16, kMat.h);
  auto phi = [](Real z) { return Complex(1 + 4 * z, z * z); };
  Complex num = 0, den = 0;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    num += g.weights(i) * phi(g.nodes(i)) * m.u(g.nodes(i));
    den += g.weights(i) * m.u(g.nodes(i)) * m.u(g.nodes(i));
  }
  const Complex c = num / den;
  Source2D s = Source2D::zero(3.0);
  s.f = [&](Real x, Real z) {
    const Real gx = std::abs(x) < 1 ? std::pow(1 - x * x, 2) : 0.0;
    return Vec2c{gx * (phi(z) - c * m.u(z)), 0.0};
  };
  const SourceSpec2D src = SourceSpec2D::sample(s, AxisGrid::covering(-1.5, 1.5, 0.05), kMat.h, 24);
  const ModeProjection p = project_sources(src, m);
  const Real scale = std::abs(num / m.root.jn);
  CHECK(p.F1.cwiseAbs().maxCoeff() <= 1e-12 * scale);
}

TEST_CASE("project_sources refuses a critical mode") {
  ModeShape m = modes_13_7()[0];
  m.root.margin = 1e-9;
  const SourceSpec2D src = SourceSpec2D::sample(source_e1(), AxisGrid::covering(-3, 3, 0.1), kMat.h);
  CHECK_THROWS_AS(project_sources(src, m), CriticalFrequency);
}

TEST_CASE("green_convolve: delta input, direct sum and outgoing behaviour") {
  const AxisGrid x = AxisGrid::covering(-2, 2, 0.01);
  const Complex k(12.3, 0.0), kc(14.2, 30.1);
  VecC F1 = VecC::Zero(x.n), F2 = VecC::Zero(x.n);
  const Eigen::Index i0 = 150;
  F1(i0) = 1.0 / x.dx;
  const ModeCoefficients c = green_convolve(F1, F2, k, x);
  for (Eigen::Index i = 0; i < x.n; i += 37) {
    const Complex ex = 0.5 * std::exp(kI * k * std::abs(x.at(i) - x.at(i0)));
    CHECK(std::abs(c.a(i) - ex) <= 1e-12);
  }

  // recursion against the plain O(n^2) trapezoid sum
  std::mt19937 rng(5);
  std::normal_distribution<Real> nd;
  for (Eigen::Index i = 0; i < x.n; ++i) {
    F1(i) = Complex(nd(rng), nd(rng));
    F2(i) = Complex(nd(rng), nd(rng));
  }
  for (Complex kk : {k, kc}) {
    const ModeCoefficients r = green_convolve(F1, F2, kk, x);
    Real err = 0, ref = 0;
    for (Eigen::Index i = 0; i < x.n; i += 13) {
      Complex a = 0, b = 0;
      for (Eigen::Index j = 0; j < x.n; ++j) {
        const Real wj = (j == 0 || j == x.n - 1) ? 0.5 * x.dx : x.dx;
        const Real d = x.at(i) - x.at(j);
        const Complex g1 = 0.5 * std::exp(kI * kk * std::abs(d));
        const Complex g2 = d == 0 ? Complex(0) : (d > 0 ? g1 : -g1);
        a += wj * (g1 * F1(j) - g2 * F2(j));
        b += wj * (g2 * F1(j) - g1 * F2(j));
      }
      err = std::max({err, std::abs(a - r.a(i)), std::abs(b - r.b(i))});
      ref = std::max({ref, std::abs(a), std::abs(b)});
    }
    CHECK(err <= 1e-12 * ref);
  }

  // G1 even, G2 odd: mirrored input gives mirrored a and sign-flipped b
  VecC M1 = F1.reverse(), M2 = F2.reverse();
  const ModeCoefficients r = green_convolve(F1, F2, k, x), m = green_convolve(M1, VecC(-M2), k, x);
  CHECK((m.a.reverse() - r.a).norm() <= 1e-12 * r.a.norm());
  CHECK((m.b.reverse() + r.b).norm() <= 1e-12 * r.b.norm());
}

TEST_CASE("coefficient ODE and outgoing condition converge at second order") {
  const Complex k(12.2825, 0.0);
  auto run = [&](Real d, Real& ode, Real& out) {
    const AxisGrid x = AxisGrid::covering(-2, 2, d);
    VecC F1(x.n), F2(x.n), rhs(x.n);
    for (Eigen::Index i = 0; i < x.n; ++i) {
      const Real t = x.at(i) / 0.8;
      F1(i) = std::abs(t) < 1 ? std::pow(1 - t * t, 4) : 0.0;
      F2(i) = std::abs(t) < 1 ? Complex(0, 2) * t * std::pow(1 - t * t, 4) : 0.0;
    }
    const ModeCoefficients c = green_convolve(F1, F2, k, x);
    ode = 0;
    out = 0;
    for (Eigen::Index i = 2; i < x.n - 2; ++i) {
      const Real xi = x.at(i);
      if (std::abs(std::abs(xi) - 0.8) < 0.05) continue;
      // exact derivative of F2
      const Real t = xi / 0.8;
      const Complex dF2 = std::abs(t) < 1 ? Complex(0, 2) / 0.8 * (std::pow(1 - t * t, 4) - 8 * t * t * std::pow(1 - t * t, 3)) : 0.0;
      const Complex lhs = (c.a(i + 1) - 2.0 * c.a(i) + c.a(i - 1)) / (d * d) + k * k * c.a(i);
      ode = std::max(ode, std::abs(lhs - (kI * k * F1(i) - dF2)));
      if (xi > 1.0) out = std::max(out, std::abs((c.a(i + 1) - c.a(i - 1)) / (2 * d) - kI * k * c.a(i)));
    }
  };
  Real o1, p1, o2, p2;
  run(0.004, o1, p1);
  run(0.002, o2, p2);
  CAPTURE(o1);
  CAPTURE(o2);
  CHECK(o1 / o2 > 3.5);
  CHECK(p1 / p2 > 3.5);
}

TEST_CASE("solve2d is linear in the source") {
  const AxisGrid x = AxisGrid::covering(-3, 3, 0.01);
  const Complex al(0.7, -1.3), be(-2.1, 0.4);
  const Source2D s1 = smooth_source(-0.5, 1.0), s2 = smooth_source(0.9, 2.0);
  const VecR z = uniform_depths(kMat.h, 8);
  const auto& m = modes_13_7();
  const Wavefield2D w1 = solve2d_with_modes(SourceSpec2D::sample(s1, x, kMat.h), m, z);
  const Wavefield2D w2 = solve2d_with_modes(SourceSpec2D::sample(s2, x, kMat.h), m, z);
  const Wavefield2D w = solve2d_with_modes(SourceSpec2D::sample(Source2D::combine(al, s1, be, s2), x, kMat.h), m, z);
  const MatC du = w.u - al * w1.u - be * w2.u;
  CHECK(du.norm() <= 1e-12 * w.u.norm());
  const MatC dv = w.v - al * w1.v - be * w2.v;
  CHECK(dv.norm() <= 1e-12 * w.v.norm());
}

TEST_CASE("PDE residual of the modal field away from sources is second order") {
  // source on the left, residual measured in a source-free window
  const Source2D s = smooth_source(-1.0, 1.0);
  const auto& m = modes_13_7();
  const Real lam = kMat.lambda, mu = kMat.mu, l2 = kMat.lp2(), w2 = 13.7 * 13.7;
  auto residual = [&](Real d) {
    const AxisGrid x = AxisGrid::covering(-3, 3, d);
    const int nz = static_cast<int>(std::lround(2 * kMat.h / d));
    const Wavefield2D w = solve2d_with_modes(SourceSpec2D::sample(s, x, kMat.h), m, uniform_depths(kMat.h, nz));
    Real res = 0, ref = 0;
    for (Eigen::Index i = 1; i < x.n - 1; ++i) {
      if (x.at(i) < 0.5 || x.at(i) > 1.5) continue;
      for (int j = 1; j < nz; ++j) {
        auto U = [&](int di, int dj) { return w.u(i + di, j + dj); };
        auto V = [&](int di, int dj) { return w.v(i + di, j + dj); };
        const Complex uxx = (U(1, 0) - 2.0 * U(0, 0) + U(-1, 0)) / (d * d);
        const Complex uzz = (U(0, 1) - 2.0 * U(0, 0) + U(0, -1)) / (d * d);
        const Complex vxx = (V(1, 0) - 2.0 * V(0, 0) + V(-1, 0)) / (d * d);
        const Complex vzz = (V(0, 1) - 2.0 * V(0, 0) + V(0, -1)) / (d * d);
        const Complex uxz = (U(1, 1) - U(1, -1) - U(-1, 1) + U(-1, -1)) / (4 * d * d);
        const Complex vxz = (V(1, 1) - V(1, -1) - V(-1, 1) + V(-1, -1)) / (4 * d * d);
        const Complex r1 = l2 * uxx + mu * uzz + (lam + mu) * vxz + w2 * U(0, 0);
        const Complex r2 = mu * vxx + l2 * vzz + (lam + mu) * uxz + w2 * V(0, 0);
        res = std::max({res, std::abs(r1), std::abs(r2)});
        ref = std::max({ref, w2 * std::abs(U(0, 0)), w2 * std::abs(V(0, 0))});
      }
    }
    return res / ref;
  };
  const Real r1 = residual(0.01), r2 = residual(0.005);
  CAPTURE(r1);
  CAPTURE(r2);
  CHECK(r1 / r2 > 3.5);
  CHECK(r1 / r2 < 4.5);
}

TEST_CASE("E1 projections decay like N^-3 over the inhomogeneous tail") {
  const auto& m = modes_13_7(130);
  const SourceSpec2D src = SourceSpec2D::sample(source_e1(), AxisGrid::covering(-3, 3, 0.005), kMat.h);
  std::vector<Real> Ns, nf;
  for (const auto& mode : m) {
    const ModeRoot& r = mode.root;
    if (r.family != ModeFamily::Symmetric || r.kind != ModeKind::Inhomogeneous || r.k.real() < 0) continue;
    const Real N = merkulov_index(r.k, r.family, kMat.h);
    const Real j = (N + 0.5) / 2;
    if (j < 5 || j > 30) continue;
    const ModeProjection p = project_sources(src, mode);
    Ns.push_back(N);
    nf.push_back(std::sqrt(p.F1.squaredNorm() * src.x.dx));
  }
  REQUIRE(Ns.size() >= 20);
  const Real slope = loglog_slope(Ns, nf);
  CAPTURE(slope);
  CHECK(slope <= -3.0 + 0.3);
}

TEST_CASE("field CSV layout") {
  const AxisGrid x = AxisGrid::covering(-0.1, 0.1, 0.05);
  const Wavefield2D w =
      solve2d_with_modes(SourceSpec2D::sample(Source2D::zero(3.0), x, kMat.h), modes_13_7(), uniform_depths(kMat.h, 2));
  std::ostringstream os;
  write_field_csv(os, w);
  const std::string s = os.str();
  CHECK(s.rfind("x,z,re_u,im_u,re_v,im_v\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == x.n * 3 + 1);
}
