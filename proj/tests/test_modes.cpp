#include <doctest.h>

#include "lamb/modes.hpp"

#include <random>
#include <sstream>

using namespace lamb;

namespace {
const Material kMat;
const std::vector<ModeRoot>& roots_13_7() {
  static const auto r = find_roots(13.7, kMat, 20);
  return r;
}
Real scale_of(const ModeShape& m) {
  return std::max({std::abs(m.u.a), std::abs(m.u.b), std::abs(m.t.a), std::abs(m.t.b), std::abs(m.ms.a),
                   std::abs(m.ms.b), std::abs(m.v.a), std::abs(m.v.b)});
}
}  // namespace

TEST_CASE("traction-free faces and parity") {
  std::mt19937 rng(1);
  std::uniform_real_distribution<Real> uz(-kMat.h, kMat.h);
  for (const auto& r : roots_13_7()) {
    const ModeShape m = make_mode(r, kMat);
    const Real sc = scale_of(m) * (1 + std::abs(r.p) + std::abs(r.q));
    CHECK(std::abs(m.t(kMat.h)) <= 1e-12 * sc);
    CHECK(std::abs(m.t(-kMat.h)) <= 1e-12 * sc);
    const Real sgn = r.family == ModeFamily::Symmetric ? 1.0 : -1.0;
    for (int i = 0; i < 5; ++i) {
      const Real z = uz(rng);
      CHECK(std::abs(m.u(-z) - sgn * m.u(z)) <= 1e-12 * sc);
      CHECK(std::abs(m.ms(-z) - sgn * m.ms(z)) <= 1e-12 * sc);
      CHECK(std::abs(m.v(-z) + sgn * m.v(z)) <= 1e-12 * sc);
      CHECK(std::abs(m.t(-z) + sgn * m.t(z)) <= 1e-12 * sc);
    }
  }
}

TEST_CASE("left-going mode relation") {
  for (const auto& r : roots_13_7()) {
    ModeRoot l = r;
    l.k = -r.k;
    const ModeShape a = make_mode(r, kMat), b = make_mode(l, kMat), c = a.reversed();
    for (Real z : {-0.1, -0.03, 0.05, 0.1}) {
      const Real sc = scale_of(a);
      CHECK(std::abs(b.u(z) + a.u(z)) <= 1e-12 * sc);
      CHECK(std::abs(b.v(z) - a.v(z)) <= 1e-12 * sc);
      CHECK(std::abs(b.ms(z) - a.ms(z)) <= 1e-12 * sc);
      CHECK(std::abs(b.t(z) + a.t(z)) <= 1e-12 * sc * (1 + std::abs(r.p)));
      CHECK(std::abs(c.u(z) - b.u(z)) <= 1e-12 * sc);
      CHECK(std::abs(c.r(z) - b.r(z)) <= 1e-10 * sc * (1 + std::abs(r.k) + std::abs(r.p)));
    }
  }
}

TEST_CASE("pairing is bilinear and unconjugated") {
  const SectionGrid g = gauss_section(32, kMat.h);
  const ModeSamples s = sample_mode(make_mode(roots_13_7()[3], kMat), g);
  const ModeSamples t = sample_mode(make_mode(roots_13_7()[7], kMat), g);
  const Complex base = pairing(s.u, s.t, t.ms, t.v, g);
  const Complex alpha(0.3, -1.7);
  // modes 3 and 7 are orthogonal, so the scale is the product of norms
  const Real sc = std::abs(alpha) * std::sqrt(g.integrate(VecR(s.u.cwiseAbs2() + s.t.cwiseAbs2())) *
                                              g.integrate(VecR(t.ms.cwiseAbs2() + t.v.cwiseAbs2())));
  CHECK(std::abs(pairing(VecC(alpha * s.u), VecC(alpha * s.t), t.ms, t.v, g) - alpha * base) <= 1e-13 * sc);
  const Complex ib = pairing(VecC(kI * s.u), VecC(kI * s.t), s.ms, s.v, g);
  const Complex b0 = pairing(s.u, s.t, s.ms, s.v, g);
  CHECK(std::abs(ib - kI * b0) <= 1e-13 * std::abs(b0));
  CHECK(std::abs(ib + kI * b0) > 1.0 * std::abs(b0));
  const SectionGrid g2 = gauss_section(16, kMat.h);
  CHECK_THROWS_AS(pairing(s.u, s.t, g, t.ms, t.v, g2), InvalidArgument);
}

TEST_CASE("bi-orthogonality of the first ten modes with quadrature doubling") {
  std::vector<ModeShape> modes;
  for (int n = 0; n < 10; ++n) modes.push_back(make_mode(roots_13_7()[n], kMat));
  auto gram = [&](int order) {
    const SectionGrid g = gauss_section(order, kMat.h);
    std::vector<ModeSamples> s;
    for (const auto& m : modes) s.push_back(sample_mode(m, g));
    MatC G(10, 10);
    for (int a = 0; a < 10; ++a)
      for (int b = 0; b < 10; ++b) G(a, b) = pairing(s[a].u, s[a].t, s[b].ms, s[b].v, g);
    return G;
  };
  const MatC g32 = gram(32), g64 = gram(64);
  for (int a = 0; a < 10; ++a)
    for (int b = 0; b < 10; ++b) {
      const Real sc = norm_x(modes[a]) * norm_y(modes[b]);
      CHECK(std::abs(g32(a, b) - g64(a, b)) <= 1e-10 * sc);
      if (a != b) {
        CHECK(std::abs(g32(a, b)) <= 1e-8 * sc);
      } else {
        const ModeRoot& r = modes[a].root;
        const Complex j = kI * r.omega * r.omega * r.k * r.gamma;
        CHECK(std::abs(g32(a, a) - j) <= 1e-8 * std::abs(j));
        CHECK(std::abs(closed_form_pairing(modes[a], modes[a]) - g64(a, a)) <= 1e-10 * std::abs(j));
      }
    }
}

TEST_CASE("eigen-relation and boundary operators") {
  const SectionGrid g = gauss_section(32, kMat.h);
  for (int n = 0; n < 10; ++n) {
    const ModeShape m = make_mode(roots_13_7()[n], kMat);
    CHECK(eigen_residual(m, kMat, g) <= 1e-8);
    const SectionPair pr = SectionPair::from(m);
    const Real sc = scale_of(m) * (1 + std::abs(m.root.p) + std::abs(m.root.q));
    CHECK(std::abs(boundary_b2(pr, kMat, kMat.h)) <= 1e-12 * sc);
    CHECK(std::abs(boundary_b2(pr, kMat, -kMat.h)) <= 1e-12 * sc);
  }
}

TEST_CASE("a non-mode pair is not an eigenvector") {
  // polynomials with x2(+-h) = 0 and B2(Y)(+-h) = 0 handled loosely: the residual is O(1)
  const Real h = kMat.h;
  SectionFunction x1{[](Real z) { return Complex(1 + z * z); }, [](Real z) { return Complex(2 * z); },
                     [](Real) { return Complex(2); }};
  SectionFunction x2{[h](Real z) { return Complex(z * z - h * h); }, [](Real z) { return Complex(2 * z); },
                     [](Real) { return Complex(2); }};
  SectionFunction y1{[](Real z) { return Complex(z); }, [](Real) { return Complex(1); },
                     [](Real) { return Complex(0); }};
  SectionFunction y2{[](Real z) { return Complex(z * z * z); }, [](Real z) { return Complex(3 * z * z); },
                     [](Real z) { return Complex(6 * z); }};
  const SectionGrid g = gauss_section(16, h);
  const SectionalImage im = apply_sectional_operators({x1, x2, y1, y2}, kMat, 13.7, g);
  // best-fit eigenvalue ik from the first component, then the residual
  Complex num = 0;
  Real den = 0;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    num += std::conj(x1.f(g.nodes(i))) * im.f1(i);
    den += std::norm(x1.f(g.nodes(i)));
  }
  const Complex lam = num / den;
  Real res = 0, ref = 0;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    const Real z = g.nodes(i);
    res = std::max({res, std::abs(im.f2(i) - lam * x2.f(z)), std::abs(im.g1(i) - lam * y1.f(z)),
                    std::abs(im.g2(i) - lam * y2.f(z))});
    ref = std::max({ref, std::abs(im.f2(i)), std::abs(im.g1(i)), std::abs(im.g2(i))});
  }
  CHECK(res / ref > 0.1);
}

TEST_CASE("norm growth rates over the inhomogeneous tail") {
  const auto roots = find_roots(13.7, kMat, 130);
  std::vector<Real> Ns, nu, nv;
  for (const auto& r : roots) {
    if (r.family != ModeFamily::Symmetric || r.kind != ModeKind::Inhomogeneous || r.k.real() < 0) continue;
    const Real N = merkulov_index(r.k, r.family, kMat.h);
    const Real j = (N + 0.5) / 2;
    if (j < 5 || j > 30) continue;
    const ModeShape m = make_mode(r, kMat);
    Ns.push_back(N);
    const Real L = std::pow(std::log(2 * kPi * N), 1.5);
    nu.push_back(l2_norm(m.u, kMat.h) * L);
    nv.push_back(l2_norm(m.v, kMat.h) * L);
  }
  REQUIRE(Ns.size() >= 20);
  CHECK(std::abs(loglog_slope(Ns, nu) - 3.0) <= 0.3);
  CHECK(std::abs(loglog_slope(Ns, nv) - 3.0) <= 0.3);
}

TEST_CASE("profile CSV has a header and one row per node") {
  const SectionGrid g = gauss_section(8, kMat.h);
  std::ostringstream os;
  write_profile_csv(os, make_mode(roots_13_7()[0], kMat), g);
  const std::string s = os.str();
  CHECK(s.rfind("z,re_u,im_u,re_v,im_v,re_s,im_s,re_t,im_t,re_r,im_r\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == g.size() + 1);
}
