#include <doctest.h>

#include "lamb/core.hpp"
#include "lamb/fft.hpp"
#include "lamb/special.hpp"

#include <random>

using namespace lamb;

namespace {

// composite Gauss-Legendre over [a, b]
template <typename F>
Real gl_integrate(F f, Real a, Real b, int panels) {
  VecR x, w;
  gauss_legendre(12, x, w);
  Real sum = 0;
  const Real pw = (b - a) / panels;
  for (int p = 0; p < panels; ++p)
    for (int i = 0; i < 12; ++i) sum += 0.5 * pw * w(i) * f(a + p * pw + 0.5 * pw * (x(i) + 1));
  return sum;
}

// Independent J0 + iY0 oracle from the Bessel integrals
// J0(x) = (1/pi) int_0^pi cos(x sin t) dt
// Y0(x) = (1/pi) int_0^pi sin(x sin t) dt - (2/pi) int_0^inf exp(-x sinh t) dt
Complex h0_integral(Real x) {
  const Real j = gl_integrate([&](Real t) { return std::cos(x * std::sin(t)); }, 0, kPi, 400) / kPi;
  const Real y1 = gl_integrate([&](Real t) { return std::sin(x * std::sin(t)); }, 0, kPi, 400) / kPi;
  const Real y2 = gl_integrate([&](Real t) { return std::exp(-x * std::sinh(t)); }, 0, 14.0, 4000);
  return {j, y1 - 2.0 / kPi * y2};
}

Real rel(Complex a, Complex b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("gauss_section integrates polynomials and the cosine example") {
  const SectionGrid g2 = gauss_section(2, 1.0);
  CHECK(g2.nodes(0) == -1.0);
  CHECK(g2.nodes(g2.size() - 1) == 1.0);
  CHECK(g2.nodes(1) == doctest::Approx(-1 / std::sqrt(3.0)).epsilon(1e-14));
  CHECK(g2.weights.sum() == doctest::Approx(2.0).epsilon(1e-14));

  for (int order : {2, 5, 16, 32, 64}) {
    const SectionGrid g = gauss_section(order, 0.1);
    CHECK(std::abs(g.weights.sum() - 0.2) <= 1e-12 * 0.2);
    for (Eigen::Index i = 1; i < g.size(); ++i) CHECK(g.nodes(i) > g.nodes(i - 1));
    // degree 2 order - 1 exactness
    const int deg = 2 * order - 2;
    VecR f = g.nodes.array().pow(deg);
    const Real exact = 2 * std::pow(0.1, deg + 1) / (deg + 1);
    CHECK(std::abs(g.integrate(f) - exact) <= 1e-13 * exact);
  }

  const SectionGrid g = gauss_section(16, 0.1);
  VecR c = (g.nodes.array() * kPi / 0.2).cos().square();
  CHECK(std::abs(g.integrate(c) - 0.1) <= 1e-12);

  CHECK_THROWS_AS(gauss_section(1, 0.1), InvalidArgument);
}

TEST_CASE("material validation") {
  CHECK_NOTHROW(Material{}.validate());
  CHECK_THROWS_AS((Material{0.31, 0.0, 0.1}.validate()), InvalidArgument);
  CHECK_THROWS_AS((Material{-1.0, 0.25, 0.1}.validate()), InvalidArgument);
  CHECK_THROWS_AS((Material{0.31, 0.25, 0.0}.validate()), InvalidArgument);
}

TEST_CASE("Hankel H0 against independent integral representations") {
  for (Real x : {0.001, 0.1, 1.0, 3.7, 8.0, 11.9, 12.1, 20.0}) {
    CAPTURE(x);
    CHECK(rel(hankel0_first_kind(x), h0_integral(x)) < 1e-9);
  }
  // J0(1) + i Y0(1)
  CHECK(rel(hankel0_first_kind(1.0), Complex(0.7651976865579666, 0.08825696421567696)) < 1e-12);
}

TEST_CASE("Hankel connection formula on the imaginary axis") {
  // H0(it) = (2/(i pi)) K0(t), K0 by its integral int_0^inf exp(-t cosh s) ds
  for (Real t : {0.01, 0.5, 2.0, 7.5, 11.0, 13.0, 30.0}) {
    const Real k0 = gl_integrate([&](Real s) { return std::exp(-t * std::cosh(s)); }, 0, 14.0, 4000);
    CAPTURE(t);
    CHECK(rel(hankel0_first_kind(Complex(0, t)), 2.0 / (kI * kPi) * k0) < 1e-9);
  }
}

TEST_CASE("Hankel regions agree across the switchover radius") {
  // series/continued fraction just inside |z|=12 against the asymptotic form just outside,
  // linked by a Taylor step with H0' = -H1 and H1' = H0 - H1/z
  for (Real ang : {0.0, 0.3, 0.8, 1.2, 1.5}) {
    const Complex dir = std::polar(1.0, ang);
    const Complex a = 11.999 * dir, b = 12.001 * dir;
    const Complex h0a = hankel0_first_kind(a), h1a = hankel1_first_kind(a);
    const Complex d = b - a;
    const Complex h0b_taylor = h0a - h1a * d + 0.5 * d * d * (-(h0a - h1a / a));
    CAPTURE(ang);
    CHECK(rel(hankel0_first_kind(b), h0b_taylor) < 1e-8);
  }
  // far field against the frozen reference (Im z >= 0)
  CHECK(rel(hankel0_first_kind(100.0), Complex(0.019985850304223136, -0.07724431336508318)) < 1e-8);
  CHECK(rel(hankel0_first_kind(Complex(5, 3)), Complex(-0.01149147154325051, -0.011504702577795895)) < 1e-10);
  CHECK(rel(hankel1_first_kind(1.0), Complex(0.44005058574493355, -0.7812128213002889)) < 1e-12);
  CHECK_THROWS_AS(hankel0_first_kind(0.0), SingularArgument);
}

TEST_CASE("sampled Hankel kernel satisfies the discrete Helmholtz identity at second order") {
  const Real k = 5.0;
  auto G = [&](Real x, Real y) { return -0.25 * kI * hankel0_first_kind(k * std::hypot(x, y)); };
  std::vector<Real> hs, errs;
  for (Real d : {0.02, 0.01, 0.005}) {
    Real worst = 0;
    for (Real x : {0.4, 0.7}) {
      const Real y = 0.3;
      const Complex lap = (G(x + d, y) + G(x - d, y) + G(x, y + d) + G(x, y - d) - 4.0 * G(x, y)) / (d * d);
      worst = std::max(worst, std::abs(lap + k * k * G(x, y)));
    }
    hs.push_back(d);
    errs.push_back(worst);
  }
  CHECK(loglog_slope(hs, errs) == doctest::Approx(2.0).epsilon(0.1));
}

namespace {
ComplexField field(const std::string& n, Real x0, Real y0, Real d, Eigen::Index nx, Eigen::Index ny) {
  return ComplexField(n, PlaneGrid{AxisGrid{x0, d, nx}, AxisGrid{y0, d, ny}});
}
}  // namespace

TEST_CASE("fft2_convolve matches the direct sum") {
  std::mt19937 rng(7);
  std::normal_distribution<Real> nd;
  auto src = field("s", 0, 0, 0.1, 32, 32);
  auto ker = field("k", -3.1, -3.1, 0.1, 63, 63);
  for (Eigen::Index i = 0; i < 32; ++i)
    for (Eigen::Index j = 0; j < 32; ++j) src.values(i, j) = Complex(nd(rng), nd(rng));
  for (Eigen::Index i = 0; i < 63; ++i)
    for (Eigen::Index j = 0; j < 63; ++j) ker.values(i, j) = Complex(nd(rng), nd(rng));
  const auto a = fft2_convolve(ker, src), b = direct_convolve(ker, src);
  CHECK((a.values - b.values).norm() <= 1e-10 * b.values.norm());

  // delta kernel is the identity
  auto delta = field("d", -0.5, -0.5, 0.1, 11, 11);
  delta.values(5, 5) = 1.0;
  CHECK((fft2_convolve(delta, src).values - src.values).norm() <= 1e-12 * src.values.norm());

  // spacing mismatch
  auto bad = field("b", 0, 0, 0.2, 4, 4);
  CHECK_THROWS_AS(fft2_convolve(bad, src), InvalidArgument);
}

TEST_CASE("Gaussian convolution adds variances") {
  const Real d = 0.05, s1 = 0.3, s2 = 0.4;
  auto g1 = field("a", -3, -3, d, 121, 121);
  auto g2 = field("b", -3, -3, d, 121, 121);
  auto gauss = [](Real x, Real y, Real s) { return std::exp(-(x * x + y * y) / (2 * s * s)) / (2 * kPi * s * s); };
  for (Eigen::Index i = 0; i < 121; ++i)
    for (Eigen::Index j = 0; j < 121; ++j) {
      g1.values(i, j) = gauss(g1.grid.x.at(i), g1.grid.y.at(j), s1);
      g2.values(i, j) = gauss(g2.grid.x.at(i), g2.grid.y.at(j), s2);
    }
  auto c = fft2_convolve(g1, g2);
  c.values *= d * d;
  Real err = 0, ref = 0;
  const Real s = std::hypot(s1, s2);
  for (Eigen::Index i = 20; i < 101; ++i)
    for (Eigen::Index j = 20; j < 101; ++j) {
      const Real e = gauss(c.grid.x.at(i), c.grid.y.at(j), s);
      err = std::max(err, std::abs(c.values(i, j) - e));
      ref = std::max(ref, e);
    }
  CHECK(err <= 1e-8 * ref);
}

TEST_CASE("spectral derivative of a periodic-enough Gaussian") {
  const Eigen::Index n = 64;
  const Real d = 0.2;
  MatC a(n, n);
  MatC ex(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const Real x = (i - 32) * d, y = (j - 32) * d;
      a(i, j) = std::exp(-(x * x + y * y));
      ex(i, j) = -2 * x * a(i, j);
    }
  CHECK((spectral_dx(a, d) - ex).cwiseAbs().maxCoeff() < 1e-10);
}
