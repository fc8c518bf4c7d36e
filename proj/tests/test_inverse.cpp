#include <doctest.h>

#include "lamb/inverse.hpp"

#include <random>

using namespace lamb;

namespace {

const Material kMat;

DefectProfile scaled(DefectProfile d, Real s) {
  for (auto& b : d.g1) b.c *= s;
  for (auto& b : d.g2) b.c *= s;
  return d;
}

// Every other frequency of the reference sweep keeps the unit tests quick.
std::vector<Real> half_sweep() {
  std::vector<Real> w;
  for (int m = 2; m <= 170; m += 2) w.push_back(17.0 * m / 170);
  return w;
}

Real trace_distance(const Trace& a, const Trace& b) {
  // relative L2 over the x values both traces sample
  Real num = 0, den = 0;
  for (Eigen::Index i = 0; i < a.x.size(); ++i)
    for (Eigen::Index j = 0; j < b.x.size(); ++j)
      if (std::abs(a.x(i) - b.x(j)) < 1e-9) {
        num += std::norm(a.u(i) - b.u(j));
        den += std::norm(b.u(j));
      }
  REQUIRE(den > 0);
  return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("born sources: support, zero defect and the g1 = g2 structure") {
  const FundamentalModes fm = fundamental_modes(10.0, kMat);
  const Source2D z = born_sources(DefectProfile{}, fm.s0);
  for (Real x : {-1.0, 0.0, 3.5})
    for (const Vec2c& v : {z.top(x), z.bot(x)}) CHECK(std::abs(v[0]) + std::abs(v[1]) == 0.0);

  const Source2D e5 = born_sources(defect_e5(), fm.s0);
  for (Real x = 2.5; x <= 5.0; x += 0.01) {
    const Vec2c t = e5.top(x), b = e5.bot(x);
    const bool in_top = x > 3.2 && x < 4.2, in_bot = x > 3.4 && x < 4.0;
    CHECK((std::abs(t[0]) + std::abs(t[1]) > 0) == in_top);
    CHECK((std::abs(b[0]) + std::abs(b[1]) > 0) == in_bot);
  }

  // equal profiles shift the plate: bottom data mirror the top ones
  DefectProfile eq;
  eq.g1.push_back({2.0, 3.4, 4.0});
  eq.g2 = eq.g1;
  const Source2D s = born_sources(eq, fm.s0);
  for (Real x : {3.5, 3.7, 3.91}) {
    const Vec2c t = s.top(x), b = s.bot(x);
    const Real sc = std::abs(t[0]) + std::abs(t[1]);
    CHECK(std::abs(b[0] + t[0]) <= 1e-12 * sc);
    CHECK(std::abs(b[1] - t[1]) <= 1e-12 * sc);
  }
}

TEST_CASE("born sources linearize the exact boundary data") {
  // the FD oracle's traction data on the true boundary, divided by the amplitude
  const FundamentalModes fm = fundamental_modes(10.0, kMat);
  std::vector<Real> amp, err;
  for (Real s : {1.0, 0.5, 0.25, 0.125}) {
    const DefectProfile d = scaled(defect_e5(), s);
    const FDSource exact = scattering_source(fm.s0, d, kMat);
    const Source2D born = born_sources(d, fm.s0);
    Real e = 0, n = 0;
    for (Real x = 3.2; x <= 4.2; x += 0.005) {
      const Vec2c a = exact.top(x), b = born.top(x), c = exact.bot(x), dd = born.bot(x);
      e += std::norm(a[0] - b[0]) + std::norm(a[1] - b[1]) + std::norm(c[0] - dd[0]) + std::norm(c[1] - dd[1]);
      n += std::norm(b[0]) + std::norm(b[1]) + std::norm(dd[0]) + std::norm(dd[1]);
    }
    amp.push_back(s);
    err.push_back(std::sqrt(e / n));
  }
  CAPTURE(err[0]);
  CHECK(err[0] < 0.05);
  CHECK(std::abs(loglog_slope(amp, err) - 1.0) <= 0.1);
}

TEST_CASE("round trip: extracted data equal the direct Fourier integrals") {
  const DefectProfile d = defect_e5();
  SynthesisOptions so;
  const MeasurementSet ms = synthesize_measurements(d, kMat, {5.0, 8.3, 10.0, 12.1}, so);
  ExtractionOptions eo;
  eo.omega_max = 17;
  eo.min_xi_fraction = 0;
  const ExtractionTable t = extract_fourier_data(ms, kMat, eo);
  REQUIRE(t.rows.size() == 8);
  for (const auto& r : t.rows) {
    REQUIRE_FALSE(r.dropped);
    const FundamentalModes fm = fundamental_modes(r.omega, kMat);
    const Complex direct = direct_datum(d, born_coefficients(r.mode == 1 ? fm.s0 : fm.a0, fm.s0));
    CAPTURE(r.omega);
    CAPTURE(r.mode);
    CHECK(std::abs(r.datum - direct) <= 0.01 * std::abs(direct));
    CHECK(r.c1 == r.c1);
  }
}

TEST_CASE("zero defect gives zero traces and zero data") {
  SynthesisOptions so;
  const MeasurementSet ms = synthesize_measurements(DefectProfile{}, kMat, {4.0, 9.0}, so);
  REQUIRE(ms.traces.size() == 2);
  for (const auto& t : ms.traces) CHECK(t.u.cwiseAbs().maxCoeff() == 0.0);
  const ExtractionTable tab = extract_fourier_data(ms, kMat);
  for (const auto& r : tab.rows)
    if (!r.dropped) CHECK(std::abs(r.datum) == 0.0);
}

TEST_CASE("xi_max and the data cutoffs") {
  const FundamentalModes fm = fundamental_modes(17.0, kMat);
  const Real k1 = fm.s0.root.k.real(), k2 = fm.a0.root.k.real();
  CHECK(xi_max(17.0, kMat) == doctest::Approx(std::min(k1 + k2, 2 * k1)).epsilon(1e-14));
  CHECK(k2 > k1);
  const ExtractionTable t = exact_fourier_data(defect_e5(), kMat, frequency_grid(17, 170));
  int low = 0, high = 0;
  Real prev = -1;
  int prev_mode = 0;
  for (const auto& r : t.rows) {
    if (r.mode == prev_mode) CHECK(r.xi >= prev);
    prev = r.xi;
    prev_mode = r.mode;
    if (!r.dropped) {
      CHECK(r.xi <= t.xi_max);
      CHECK(r.xi >= 0.05 * t.xi_max);
    }
    if (r.flag == "below the low-xi cutoff") ++low;
    if (r.flag == "above xi_max") ++high;
  }
  CHECK(low > 0);
  CHECK(high > 0);  // mode 2 reaches k1 + k2 > 2 k1 at the top of the sweep
}

TEST_CASE("inversion of exact Fourier data") {
  for (const DefectProfile& d : {defect_e5(), defect_e6()}) {
    const ExtractionTable t = exact_fourier_data(d, kMat, frequency_grid(17, 170));
    const Reconstruction r = unmix_and_invert(t);
    CHECK(relative_l2_error(r, d) <= 0.02);
    // profiles vanish at both ends of the window and are real by construction
    CHECK(r.g1.g(0) == 0.0);
    CHECK(r.g2.g(r.g2.g.size() - 1) == 0.0);
    CHECK(r.g1.at(2.9) == 0.0);
    CHECK(r.g2.at(5.1) == 0.0);
  }
}

TEST_CASE("born pipeline on E5 and noise robustness") {
  const DefectProfile d = defect_e5();
  SynthesisOptions so;
  const MeasurementSet clean = synthesize_measurements(d, kMat, half_sweep(), so);
  ExtractionOptions eo;
  eo.omega_max = 17;
  const ModeBank bank = build_mode_bank(half_sweep(), kMat);
  const Real e0 = relative_l2_error(unmix_and_invert(extract_fourier_data(clean, kMat, eo, &bank)), d);
  CHECK(e0 <= 0.02);
  Real mean = 0;
  const int seeds = 20;
  for (int s = 1; s <= seeds; ++s) {
    MeasurementSet noisy = clean;
    add_noise(noisy, 0.01, static_cast<std::uint64_t>(s));
    mean += relative_l2_error(unmix_and_invert(extract_fourier_data(noisy, kMat, eo, &bank)), d) / seeds;
  }
  CAPTURE(e0);
  CAPTURE(mean);
  CHECK(mean - e0 <= 0.03);
}

TEST_CASE("noise is reproducible from the seed") {
  SynthesisOptions so;
  so.noise = 0.05;
  so.seed = 7;
  const MeasurementSet a = synthesize_measurements(defect_e5(), kMat, {6.0}, so);
  const MeasurementSet b = synthesize_measurements(defect_e5(), kMat, {6.0}, so);
  so.seed = 8;
  const MeasurementSet c = synthesize_measurements(defect_e5(), kMat, {6.0}, so);
  CHECK(a.traces[0].u == b.traces[0].u);
  CHECK(a.traces[0].u != c.traces[0].u);
}

TEST_CASE("critical frequencies are skipped and recorded") {
  const ZgvPoint z = refine_zgv(13.2, 8.5, ModeFamily::Symmetric, kMat);
  SynthesisOptions so;
  const MeasurementSet ms = synthesize_measurements(defect_e5(), kMat, {12.0, z.omega}, so);
  CHECK(ms.traces.size() == 1);
  REQUIRE(ms.skipped.size() == 1);
  CHECK(ms.skipped[0] == z.omega);
  CHECK_FALSE(ms.warnings.empty());
}

TEST_CASE("window checks") {
  SynthesisOptions so;
  so.window_right = 3.3;
  CHECK_THROWS_AS(born_trace(defect_e5(), kMat, 5.0, so), InvalidArgument);
  so = {};
  so.spacing = 0.0105;
  CHECK_THROWS_AS(born_trace(defect_e5(), kMat, 5.0, so), InvalidArgument);
  ExtractionTable empty;
  CHECK_THROWS_AS(unmix_and_invert(empty), SolverFailure);
}

TEST_CASE("FFT peak extraction agrees with the modal fit on a long window") {
  const DefectProfile d = defect_e5();
  SynthesisOptions so;
  so.window_left = -40;
  const MeasurementSet ms = synthesize_measurements(d, kMat, {6.0, 10.0}, so);
  ExtractionOptions ls, ff;
  ls.omega_max = ff.omega_max = 17;
  ff.method = ExtractionMethod::FftPeak;
  const ExtractionTable a = extract_fourier_data(ms, kMat, ls), b = extract_fourier_data(ms, kMat, ff);
  REQUIRE(a.rows.size() == b.rows.size());
  for (size_t i = 0; i < a.rows.size(); ++i) {
    REQUIRE_FALSE(b.rows[i].dropped);
    CAPTURE(a.rows[i].omega);
    CAPTURE(a.rows[i].mode);
    CHECK(std::abs(a.rows[i].datum - b.rows[i].datum) <= 0.05 * std::abs(a.rows[i].datum));
  }
  // the default window cannot separate the two peaks
  const MeasurementSet shortw = synthesize_measurements(d, kMat, {6.0}, SynthesisOptions{});
  const ExtractionTable c = extract_fourier_data(shortw, kMat, ff);
  CHECK(c.rows[0].dropped);
}

TEST_CASE("L-curve is monotone") {
  ExtractionOptions eo;
  eo.omega_max = 17;
  const ExtractionTable t = exact_fourier_data(defect_e6(), kMat, half_sweep(), eo);
  const auto pts = lcurve(t, {}, {1e-8, 1e-6, 1e-4, 1e-2, 1});
  for (size_t i = 1; i < pts.size(); ++i) {
    CHECK(pts[i].residual >= pts[i - 1].residual * (1 - 1e-9));
    CHECK(pts[i].roughness <= pts[i - 1].roughness * (1 + 1e-9));
  }
}

TEST_CASE("profile Fourier transform is exact for the interpolant") {
  AxisGrid x{-1, 0.1, 21};
  const Profile1D p = Profile1D::sample([](Real t) { return 1 - std::abs(t); }, x);
  // transform of the hat: (sin(xi/2) / (xi/2))^2
  for (Real xi : {1e-6, 0.5, 3.0, 17.0}) {
    const Complex f = p.fourier(xi);
    CHECK(std::abs(f - std::pow(std::sin(xi / 2) / (xi / 2), 2)) <= 1e-12);
  }
  CHECK(p.l2_norm() == doctest::Approx(std::sqrt(2.0 / 3)).epsilon(1e-12));
  CHECK(p.h1_norm() == doctest::Approx(std::sqrt(2.0 / 3 + 2)).epsilon(1e-12));
}

TEST_CASE("stability inequality on random profile pairs") {
  const Real r = 1.0, xm = xi_max(17.0, kMat);
  AxisGrid x{-r, 2 * r / 200, 201};
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<Real> u(0, 1);
  auto random_profile = [&](Real scale) {
    DefectProfile d;
    const int n = 1 + static_cast<int>(3 * u(rng));
    for (int i = 0; i < n; ++i) {
      const Real a = -r + 1.6 * r * u(rng), b = a + (0.1 + 0.3 * u(rng)) * r;
      d.g1.push_back({scale * (2 * u(rng) - 1) / std::pow(0.5 * (b - a), 4), a, std::min(b, r)});
    }
    return d;
  };
  int violations = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const DefectProfile g = random_profile(0.05), p = random_profile(0.005);
    const Profile1D pg = Profile1D::sample([&](Real t) { return g.g1_at(t); }, x);
    const Profile1D pa = Profile1D::sample([&](Real t) { return g.g1_at(t) + p.g1_at(t); }, x);
    if (!stability_bound_check(pg, pa, xm).holds) ++violations;
  }
  CHECK(violations == 0);
  const Profile1D same = Profile1D::sample([](Real t) { return 0.01 * std::cos(kPi * t / 2); }, x);
  const StabilityReport rep = stability_bound_check(same, same, xm);
  CHECK(rep.lhs == 0.0);
  CHECK(rep.holds);
  CHECK(rep.tail_term == doctest::Approx(2 * kPi * std::pow(same.h1_norm(), 2) / (xm * xm)));
  AxisGrid other = x;
  other.dx *= 0.5;
  CHECK_THROWS_AS(stability_bound_check(same, Profile1D::sample([](Real) { return 0.0; }, other), xm), InvalidArgument);
}

TEST_CASE("born and oracle traces differ at first order in the amplitude") {
  std::vector<Real> amp, diff;
  SynthesisOptions so;
  for (Real s : {1.0, 0.5, 0.25}) {
    const DefectProfile d = scaled(defect_e5(), s);
    const Trace b = born_trace(d, kMat, 4.0, so), o = oracle_trace(d, kMat, 4.0, so);
    amp.push_back(s);
    diff.push_back(trace_distance(o, b));
  }
  CAPTURE(diff[0]);
  CAPTURE(diff[2]);
  CHECK(diff[0] < 0.1);
  CHECK(std::abs(loglog_slope(amp, diff) - 1.0) <= 0.3);
}
