#include "lamb/inverse.hpp"

#include "lamb/fft.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <map>
#include <random>
#include <thread>

namespace lamb {

FundamentalModes fundamental_modes(Real omega, const Material& mat, int n_modes) {
  FundamentalModes out;
  const ModeRoot* s0 = nullptr;
  const ModeRoot* a0 = nullptr;
  const auto roots = find_roots(omega, mat, n_modes);
  for (const auto& r : roots) {
    if (r.kind != ModeKind::Propagative || r.k.real() <= 0) continue;
    const ModeRoot*& slot = r.family == ModeFamily::Symmetric ? s0 : a0;
    if (!slot || r.k.real() > slot->k.real()) slot = &r;
  }
  if (!s0 || !a0) throw InvalidArgument("fundamental_modes: missing fundamental mode at omega " + std::to_string(omega));
  out.s0 = make_mode(*s0, mat);
  out.a0 = make_mode(*a0, mat);
  for (const auto& r : roots) out.all.push_back(make_mode(r, mat));
  return out;
}

Source2D born_sources(const DefectProfile& defect, const ModeShape& m1) {
  const Real h = m1.h;
  const Complex k1 = m1.root.k;
  const TrigProfile dt = m1.t.derivative(), dr = m1.r.derivative();
  const Complex s_top = m1.s(h), s_bot = m1.s(-h);
  const Complex dt_top = dt(h), dt_bot = dt(-h), dr_top = dr(h), dr_bot = dr(-h);
  const auto [lo, hi] = defect.support();
  Source2D s = Source2D::zero(std::max({std::abs(lo), std::abs(hi), 1e-12}) + 1e-9);
  s.top = [=](Real x) -> Vec2c {
    const Real e = 2 * h * defect.g1_at(x), de = 2 * h * defect.dg1(x);
    const Complex ph = std::exp(kI * k1 * x);
    return {(de * s_top - e * dt_top) * ph, -e * dr_top * ph};
  };
  s.bot = [=](Real x) -> Vec2c {
    const Real e = 2 * h * defect.g2_at(x), de = 2 * h * defect.dg2(x);
    const Complex ph = std::exp(kI * k1 * x);
    return {(-de * s_bot + e * dt_bot) * ph, e * dr_bot * ph};
  };
  return s;
}

BornCoefficients born_coefficients(const ModeShape& mn, const ModeShape& m1) {
  const Real h = m1.h;
  const TrigProfile dt = m1.t.derivative(), dr = m1.r.derivative();
  BornCoefficients c;
  c.xi = (mn.root.k + m1.root.k).real();
  const Complex f = 2 * h / mn.root.jn, ixi = kI / c.xi;
  c.c1 = f * (m1.s(h) * mn.u(h) + ixi * (-dt(h) * mn.u(h) - dr(h) * mn.v(h)));
  c.c2 = f * (-m1.s(-h) * mn.u(-h) + ixi * (dt(-h) * mn.u(-h) + dr(-h) * mn.v(-h)));
  return c;
}

Complex direct_datum(const DefectProfile& defect, const BornCoefficients& c) {
  VecR gx, gw;
  gauss_legendre(24, gx, gw);
  Complex sum = 0;
  auto add = [&](const std::vector<QuarticBump>& bumps, Complex coef) {
    for (const auto& b : bumps) {
      const int panels = std::max(4, static_cast<int>(std::ceil(c.xi * (b.b - b.a))));
      const Real w = (b.b - b.a) / panels;
      for (int p = 0; p < panels; ++p)
        for (Eigen::Index q = 0; q < gx.size(); ++q) {
          const Real y = b.a + w * (p + 0.5 + 0.5 * gx(q));
          sum += coef * 0.5 * w * gw(q) * b.d1(y) * std::exp(kI * c.xi * y);
        }
    }
  };
  add(defect.g1, c.c1);
  add(defect.g2, c.c2);
  return sum;
}

// ---- synthesis ------------------------------------------------------------------

std::vector<Real> frequency_grid(Real omega_max, int count) {
  if (!(omega_max > 0) || count < 1) throw InvalidArgument("frequency_grid: need omega_max > 0 and count >= 1");
  std::vector<Real> w(count);
  for (int m = 1; m <= count; ++m) w[m - 1] = omega_max * m / count;
  return w;
}

namespace {

void check_window(const DefectProfile& defect, const SynthesisOptions& opt) {
  if (!(opt.window_right > opt.window_left))
    throw InvalidArgument("measurement window: right end must exceed left end");
  const auto [lo, hi] = defect.support();
  if (!defect.empty() && opt.window_right >= lo)
    throw InvalidArgument("measurement window must lie left of the defect support");
  if (!defect.empty() && (lo < opt.support_left || hi > opt.support_right))
    throw InvalidArgument("defect leaves the declared support window");
}

}  // namespace

Trace born_trace(const DefectProfile& defect, const Material& mat, Real omega, const SynthesisOptions& opt) {
  check_window(defect, opt);
  const Real ratio = opt.spacing / opt.born_dx;
  const long stride = std::lround(ratio);
  if (stride < 1 || std::abs(ratio - stride) > 1e-9)
    throw InvalidArgument("born_trace: trace spacing must be a multiple of the convolution spacing");
  const FundamentalModes fm = fundamental_modes(omega, mat, opt.n_modes);
  const Real right = std::max(opt.window_right, defect.support().second);
  AxisGrid g;
  g.x0 = opt.window_left;
  g.dx = opt.born_dx;
  g.n = static_cast<Eigen::Index>(std::ceil((right - g.x0) / g.dx - 1e-9)) + 1;
  const Eigen::Index nw = static_cast<Eigen::Index>(std::floor((opt.window_right - opt.window_left) / opt.spacing + 1e-9)) + 1;
  Trace t;
  t.omega = omega;
  t.x.resize(nw);
  t.u = VecC::Zero(nw);
  for (Eigen::Index i = 0; i < nw; ++i) t.x(i) = g.at(i * stride);
  if (defect.empty()) return t;
  const SourceSpec2D src = SourceSpec2D::sample(born_sources(defect, fm.s0), g, mat.h, 4);
  VecR z(1);
  z << mat.h;
  const Wavefield2D w = solve2d_with_modes(src, fm.all, z);
  for (Eigen::Index i = 0; i < nw; ++i) t.u(i) = w.u(i * stride, 0);
  return t;
}

Trace oracle_trace(const DefectProfile& defect, const Material& mat, Real omega, const SynthesisOptions& opt) {
  check_window(defect, opt);
  const OracleOptions& o = opt.oracle;
  const FundamentalModes fm = fundamental_modes(omega, mat, 12);
  // long waves need a steeper stretch to be absorbed within the layer
  Real kmin = 1e300;
  for (const auto& m : fm.all)
    if (m.root.kind == ModeKind::Propagative) kmin = std::min(kmin, std::abs(m.root.k.real()));
  const Real width = std::min(o.pml_left - o.xa, o.xb - o.pml_right);
  PMLProfile pml{o.pml_left, o.pml_right, std::max(1.0, 10.0 / (kmin * width * width))};
  const int nz = std::max(o.min_nz, static_cast<int>(std::ceil(o.nz_per_omega * omega)));
  FDOptions fo;
  fo.section_left = o.section_left;
  fo.section_right = o.section_right;
  const FDSource src = scattering_source(fm.s0, defect, mat);
  auto run = [&](int n) {
    FDGrid g = FDGrid::make(o.xa, o.xb, mat.h, 2 * mat.h / n, pml);
    if (!defect.empty()) g.defect = defect;
    return solve_fd(g, mat, omega, src, fo);
  };
  const FDSolution coarse = run(nz);
  std::vector<Eigen::Index> idx;
  for (int i = 0; i <= coarse.grid.nx(); ++i) {
    const Real x = coarse.grid.x(i);
    if (x >= opt.window_left - 1e-9 && x <= opt.window_right + 1e-9) idx.push_back(i);
  }
  Trace t;
  t.omega = omega;
  t.x.resize(static_cast<Eigen::Index>(idx.size()));
  t.u.resize(t.x.size());
  const VecC uc = coarse.top_u();
  VecC uf;
  if (o.richardson) uf = run(2 * nz).top_u();
  for (size_t i = 0; i < idx.size(); ++i) {
    t.x(i) = coarse.grid.x(static_cast<int>(idx[i]));
    t.u(i) = o.richardson ? (4.0 * uf(2 * idx[i]) - uc(idx[i])) / 3.0 : uc(idx[i]);
  }
  return t;
}

void add_noise(MeasurementSet& meas, Real sigma, std::uint64_t seed) {
  if (sigma < 0) throw InvalidArgument("add_noise: negative noise level");
  std::mt19937_64 rng(seed);
  std::normal_distribution<Real> nd;
  for (Trace& t : meas.traces) {
    const Real rms = std::sqrt(t.u.squaredNorm() / std::max<Eigen::Index>(1, t.u.size()));
    const Real s = sigma * rms / std::sqrt(2.0);
    for (Eigen::Index j = 0; j < t.u.size(); ++j) t.u(j) += s * Complex(nd(rng), nd(rng));
  }
  meas.noise = sigma;
}

MeasurementSet synthesize_measurements(const DefectProfile& defect, const Material& mat,
                                       const std::vector<Real>& freqs, const SynthesisOptions& opt) {
  defect.validate();
  mat.validate();
  if (opt.noise < 0) throw InvalidArgument("synthesize_measurements: negative noise level");
  MeasurementSet out;
  out.noise = opt.noise;
  out.support_left = opt.support_left;
  out.support_right = opt.support_right;
  std::vector<Real> w = freqs;
  std::sort(w.begin(), w.end());
  std::vector<std::optional<Trace>> traces(w.size());
  std::vector<std::exception_ptr> failures(w.size());
  auto work = [&](size_t i) {
    try {
      traces[i] = opt.path == SynthesisPath::Born ? born_trace(defect, mat, w[i], opt)
                                                  : oracle_trace(defect, mat, w[i], opt);
    } catch (const CriticalFrequency&) {
      // left empty: recorded as skipped below
    } catch (...) {
      failures[i] = std::current_exception();
    }
  };
  const int nt = std::max(1, std::min<int>(opt.threads, static_cast<int>(w.size())));
  if (nt == 1) {
    for (size_t i = 0; i < w.size(); ++i) work(i);
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < nt; ++t)
      pool.emplace_back([&, t] {
        for (size_t i = t; i < w.size(); i += nt) work(i);
      });
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);
  for (size_t i = 0; i < w.size(); ++i) {
    if (!traces[i]) {
      out.skipped.push_back(w[i]);
      out.warnings.push_back("skipped critical frequency " + std::to_string(w[i]));
      continue;
    }
    out.traces.push_back(std::move(*traces[i]));
  }
  if (opt.noise > 0) add_noise(out, opt.noise, opt.seed);
  return out;
}

// ---- extraction -----------------------------------------------------------------

Real xi_max(Real omega_max, const Material& mat) {
  const FundamentalModes fm = fundamental_modes(omega_max, mat, 12);
  const Real k1 = fm.s0.root.k.real(), k2 = fm.a0.root.k.real();
  return std::min(k1 + k2, 2 * k1);
}

std::vector<const ExtractionRow*> ExtractionTable::usable() const {
  std::vector<const ExtractionRow*> v;
  for (const auto& r : rows)
    if (!r.dropped) v.push_back(&r);
  return v;
}

namespace {

// Amplitudes alpha of sum_n alpha_n exp(-i k_n x) u_n(h) fitted to the trace.
// Returns false when the fit is ill-conditioned.
bool fit_left_going(const Trace& t, const std::vector<const ModeShape*>& modes, Real xref, Real cond_max,
                    std::vector<Complex>& alpha) {
  const Eigen::Index m = t.x.size(), n = static_cast<Eigen::Index>(modes.size());
  MatC A(m, n);
  VecR scale(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Complex k = modes[j]->root.k, uh = modes[j]->u(modes[j]->h);
    for (Eigen::Index i = 0; i < m; ++i) A(i, j) = std::exp(-kI * k * (t.x(i) - xref)) * uh;
    scale(j) = A.col(j).norm();
    A.col(j) /= scale(j);
  }
  const Eigen::BDCSVD<MatC> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VecR& s = svd.singularValues();
  if (s(n - 1) <= 0 || s(0) / s(n - 1) > cond_max) return false;
  const VecC beta = svd.solve(t.u);
  alpha.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) alpha[j] = beta(j) / scale(j) * std::exp(kI * modes[j]->root.k * xref);
  return true;
}

// Hann-windowed spectral peak near -Re k; amplitude of exp(-i k x) u(h).
bool fft_peak(const Trace& t, const ModeShape& mode, Real& k_est, Complex& alpha) {
  const Eigen::Index m = t.x.size();
  const Real dx = t.x(1) - t.x(0), L = t.x(m - 1) - t.x(0);
  VecR w(m);
  for (Eigen::Index i = 0; i < m; ++i) w(i) = 0.5 - 0.5 * std::cos(2 * kPi * i / (m - 1));
  const Eigen::Index nf = good_fft_size(16 * m);
  VecC in = VecC::Zero(nf), buf;
  for (Eigen::Index i = 0; i < m; ++i) in(i) = w(i) * t.u(i);
  Eigen::FFT<Real>().fwd(buf, in);
  // bin b holds sum_j w u exp(-2 pi i b j / nf): spatial frequency kappa = 2 pi b / (nf dx)
  const Real dk = 2 * kPi / (nf * dx);
  const Real target = -mode.root.k.real();
  auto bin_of = [&](Real kap) {
    long b = std::lround(kap / dk);
    return ((b % nf) + nf) % nf;
  };
  // peak of |S| within the Hann main lobe around the target
  const long half = std::max<long>(2, std::lround(4 * kPi / L / dk));
  const long b0 = std::lround(target / dk);
  long best = b0;
  Real bv = -1;
  for (long b = b0 - half; b <= b0 + half; ++b) {
    const Real v = std::abs(buf(bin_of(b * dk)));
    if (v > bv) {
      bv = v;
      best = b;
    }
  }
  if (best == b0 - half || best == b0 + half) return false;
  const Real ym = std::abs(buf(bin_of((best - 1) * dk))), y0 = bv, yp = std::abs(buf(bin_of((best + 1) * dk)));
  const Real den = ym - 2 * y0 + yp;
  const Real off = den != 0 ? 0.5 * (ym - yp) / den : 0.0;
  k_est = -(best + off) * dk;
  Complex acc = 0;
  for (Eigen::Index i = 0; i < m; ++i) acc += w(i) * t.u(i) * std::exp(kI * k_est * t.x(i));
  alpha = acc / (w.sum() * mode.u(mode.h));
  return true;
}

}  // namespace

ModeBank build_mode_bank(const std::vector<Real>& freqs, const Material& mat, int n_modes) {
  ModeBank bank;
  for (Real w : freqs) {
    try {
      bank.emplace(w, fundamental_modes(w, mat, n_modes));
    } catch (const CriticalFrequency&) {
    }
  }
  return bank;
}

ExtractionTable extract_fourier_data(const MeasurementSet& meas, const Material& mat, const ExtractionOptions& opt,
                                     const ModeBank* bank) {
  ExtractionTable tab;
  if (meas.traces.empty()) throw InvalidArgument("extract_fourier_data: no traces");
  const Real wmax = opt.omega_max > 0 ? opt.omega_max : meas.traces.back().omega;
  tab.xi_max = xi_max(wmax, mat);
  const Real xi_min = opt.min_xi_fraction * tab.xi_max;
  std::vector<ExtractionRow> r1, r2;
  for (const Trace& t : meas.traces) {
    if (t.x.size() < 4) throw InvalidArgument("extract_fourier_data: trace too short");
    const Real xr = t.x.maxCoeff(), gap = meas.support_left - xr;
    if (!(gap > 0)) throw InvalidArgument("extract_fourier_data: trace overlaps the defect window");
    FundamentalModes local;
    const FundamentalModes* fmp = nullptr;
    if (bank) {
      const auto it = bank->find(t.omega);
      if (it != bank->end() && static_cast<int>(it->second.all.size()) == opt.n_modes) fmp = &it->second;
    }
    if (!fmp) {
      try {
        local = fundamental_modes(t.omega, mat, opt.n_modes);
      } catch (const CriticalFrequency&) {
        tab.warnings.push_back("critical frequency " + std::to_string(t.omega) + " ignored");
        continue;
      }
      fmp = &local;
    }
    const FundamentalModes& fm = *fmp;
    ExtractionRow a, b;
    a.mode = 1;
    b.mode = 2;
    a.omega = b.omega = t.omega;
    const BornCoefficients ca = born_coefficients(fm.s0, fm.s0), cb = born_coefficients(fm.a0, fm.s0);
    a.xi = ca.xi;
    a.c1 = ca.c1;
    a.c2 = ca.c2;
    b.xi = cb.xi;
    b.c1 = cb.c1;
    b.c2 = cb.c2;
    if (opt.method == ExtractionMethod::LeastSquares) {
      std::vector<const ModeShape*> cols;
      int i0 = -1, i1 = -1;
      for (const auto& m : fm.all) {
        if (m.root.kind != ModeKind::Propagative && m.root.k.imag() * gap >= opt.evanescent_cut) continue;
        if (m.root.k == fm.s0.root.k && m.root.family == ModeFamily::Symmetric) i0 = static_cast<int>(cols.size());
        if (m.root.k == fm.a0.root.k && m.root.family == ModeFamily::Antisymmetric) i1 = static_cast<int>(cols.size());
        cols.push_back(&m);
      }
      std::vector<Complex> alpha;
      if (cols.size() > static_cast<size_t>(t.x.size()) || !fit_left_going(t, cols, xr, opt.cond_max, alpha)) {
        a.dropped = b.dropped = true;
        a.flag = b.flag = "ill-conditioned modal fit";
      } else {
        a.datum = 2.0 * alpha[i0];
        b.datum = 2.0 * alpha[i1];
      }
    } else {
      const Real L = t.x.maxCoeff() - t.x.minCoeff();
      const Real sep = std::abs(fm.a0.root.k.real() - fm.s0.root.k.real());
      Real k_est;
      Complex al;
      if (L * sep < 8 * kPi) {
        a.dropped = b.dropped = true;
        a.flag = b.flag = "window too short to separate the k1 and k2 peaks";
      } else {
        if (fft_peak(t, fm.s0, k_est, al)) a.datum = 2.0 * al;
        else { a.dropped = true; a.flag = "no spectral peak"; }
        if (fft_peak(t, fm.a0, k_est, al)) b.datum = 2.0 * al;
        else { b.dropped = true; b.flag = "no spectral peak"; }
      }
    }
    for (ExtractionRow* r : {&a, &b}) {
      if (r->dropped) continue;
      if (r->xi < xi_min) {
        r->dropped = true;
        r->flag = "below the low-xi cutoff";
      } else if (r->xi > tab.xi_max) {
        r->dropped = true;
        r->flag = "above xi_max";
      }
    }
    r1.push_back(a);
    r2.push_back(b);
  }
  auto by_xi = [](const ExtractionRow& p, const ExtractionRow& q) { return p.xi < q.xi; };
  std::sort(r1.begin(), r1.end(), by_xi);
  std::sort(r2.begin(), r2.end(), by_xi);
  tab.rows = std::move(r1);
  tab.rows.insert(tab.rows.end(), r2.begin(), r2.end());
  return tab;
}

ExtractionTable exact_fourier_data(const DefectProfile& defect, const Material& mat, const std::vector<Real>& freqs,
                                  const ExtractionOptions& opt) {
  if (freqs.empty()) throw InvalidArgument("exact_fourier_data: no frequencies");
  ExtractionTable tab;
  tab.xi_max = xi_max(opt.omega_max > 0 ? opt.omega_max : *std::max_element(freqs.begin(), freqs.end()), mat);
  std::vector<ExtractionRow> r1, r2;
  for (Real w : freqs) {
    FundamentalModes fm;
    try {
      fm = fundamental_modes(w, mat, 12);
    } catch (const CriticalFrequency&) {
      tab.warnings.push_back("critical frequency " + std::to_string(w) + " ignored");
      continue;
    }
    for (int mode : {1, 2}) {
      const BornCoefficients c = born_coefficients(mode == 1 ? fm.s0 : fm.a0, fm.s0);
      ExtractionRow r{mode, w, c.xi, direct_datum(defect, c), c.c1, c.c2, false, {}};
      if (r.xi < opt.min_xi_fraction * tab.xi_max) {
        r.dropped = true;
        r.flag = "below the low-xi cutoff";
      } else if (r.xi > tab.xi_max) {
        r.dropped = true;
        r.flag = "above xi_max";
      }
      (mode == 1 ? r1 : r2).push_back(r);
    }
  }
  auto by_xi = [](const ExtractionRow& p, const ExtractionRow& q) { return p.xi < q.xi; };
  std::sort(r1.begin(), r1.end(), by_xi);
  std::sort(r2.begin(), r2.end(), by_xi);
  tab.rows = std::move(r1);
  tab.rows.insert(tab.rows.end(), r2.begin(), r2.end());
  return tab;
}

// ---- profiles -------------------------------------------------------------------

Real Profile1D::at(Real t) const {
  const Real s = (t - x.x0) / x.dx;
  if (s <= 0 || s >= static_cast<Real>(x.n - 1)) {
    if (std::abs(s) < 1e-12) return g(0);
    if (std::abs(s - static_cast<Real>(x.n - 1)) < 1e-12) return g(x.n - 1);
    return 0;
  }
  const Eigen::Index i = static_cast<Eigen::Index>(s);
  const Real f = s - static_cast<Real>(i);
  return (1 - f) * g(i) + f * g(i + 1);
}

Complex Profile1D::fourier(Real xi) const {
  // int over [a, a + d] of (g0 + (g1 - g0)(t - a)/d) e^{-i xi t}
  Complex sum = 0;
  const Real d = x.dx;
  const Complex e = std::exp(-kI * xi * d);
  Complex ea = std::exp(-kI * xi * x.x0);
  // closed-form interval weights: I0 = int e^{-i xi s} ds, I1 = int s/d e^{-i xi s} ds over [0, d]
  Complex I0, I1;
  const Real z = xi * d;
  if (std::abs(z) < 1e-4) {
    I0 = d * Complex(1 - z * z / 6, -z / 2);
    I1 = d * Complex(0.5 - z * z / 8, -z / 3);
  } else {
    I0 = (1.0 - e) / (kI * xi);
    I1 = (e * (1.0 + kI * z) - 1.0) / (xi * xi * d);
  }
  for (Eigen::Index i = 0; i + 1 < x.n; ++i) {
    sum += ea * (g(i) * (I0 - I1) + g(i + 1) * I1);
    ea *= e;
  }
  return sum;
}

Real Profile1D::l2_norm() const {
  Real s = 0;
  for (Eigen::Index i = 0; i + 1 < x.n; ++i) s += (g(i) * g(i) + g(i) * g(i + 1) + g(i + 1) * g(i + 1)) / 3;
  return std::sqrt(s * x.dx);
}

Real Profile1D::h1_norm() const {
  Real s = 0;
  for (Eigen::Index i = 0; i + 1 < x.n; ++i) {
    const Real d = (g(i + 1) - g(i)) / x.dx;
    s += d * d * x.dx;
  }
  const Real l2 = l2_norm();
  return std::sqrt(l2 * l2 + s);
}

Profile1D Profile1D::sample(const std::function<Real(Real)>& f, const AxisGrid& x) {
  Profile1D p;
  p.x = x;
  p.g.resize(x.n);
  for (Eigen::Index i = 0; i < x.n; ++i) p.g(i) = f(x.at(i));
  return p;
}

// ---- inversion ------------------------------------------------------------------

namespace {

struct LinearSystem {
  MatR A;  // stacked real/imag data rows
  VecR d;
  MatR L;  // roughness operator on the unknowns
  AxisGrid x;
  Eigen::Index ni = 0;  // interior nodes per profile
};

LinearSystem assemble(const ExtractionTable& table, const InversionOptions& opt) {
  if (!(opt.support_right > opt.support_left) || !(opt.node_spacing > 0))
    throw InvalidArgument("unmix_and_invert: bad support window or spacing");
  LinearSystem s;
  const long intervals = std::lround((opt.support_right - opt.support_left) / opt.node_spacing);
  if (intervals < 3) throw InvalidArgument("unmix_and_invert: fewer than three intervals");
  s.x.x0 = opt.support_left;
  s.x.dx = (opt.support_right - opt.support_left) / intervals;
  s.x.n = intervals + 1;
  s.ni = intervals - 1;
  const auto rows = table.usable();
  if (rows.empty()) throw SolverFailure("unmix_and_invert: no usable data");
  // quadrature weight of each row along its own mode's xi sequence
  std::map<const ExtractionRow*, Real> wt;
  for (int mode : {1, 2}) {
    std::vector<const ExtractionRow*> v;
    for (auto* r : rows)
      if (r->mode == mode) v.push_back(r);
    for (size_t i = 0; i < v.size(); ++i) {
      const Real lo = i > 0 ? v[i - 1]->xi : v[i]->xi, hi = i + 1 < v.size() ? v[i + 1]->xi : v[i]->xi;
      wt[v[i]] = std::max(0.5 * (hi - lo), 1e-12);
    }
  }
  const Eigen::Index nu = 2 * s.ni, nr = static_cast<Eigen::Index>(rows.size());
  s.A = MatR::Zero(2 * nr, nu);
  s.d.resize(2 * nr);
  const Real dx = s.x.dx;
  // slope of interval j from node values: (g_{j+1} - g_j) / dx, interior nodes 1..ni
  for (Eigen::Index r = 0; r < nr; ++r) {
    const ExtractionRow& row = *rows[r];
    const Real xi = row.xi;
    const Real nrm = std::sqrt(std::norm(row.c1) + std::norm(row.c2));
    const Real w = std::sqrt(wt[rows[r]]) / nrm;
    // E_j = int over interval j of e^{i xi y}
    VecC E(intervals);
    for (long j = 0; j < intervals; ++j) {
      const Real a = s.x.at(j);
      E(j) = std::exp(kI * xi * a) * (std::exp(kI * xi * dx) - 1.0) / (kI * xi);
    }
    for (Eigen::Index p = 0; p < s.ni; ++p) {
      // node p+1 enters slope p (+1/dx) and slope p+1 (-1/dx)
      const Complex e = (E(p) - E(p + 1)) / dx;
      const Complex v1 = w * row.c1 * e, v2 = w * row.c2 * e;
      s.A(2 * r, p) = v1.real();
      s.A(2 * r + 1, p) = v1.imag();
      s.A(2 * r, s.ni + p) = v2.real();
      s.A(2 * r + 1, s.ni + p) = v2.imag();
    }
    const Complex dd = w * row.datum;
    s.d(2 * r) = dd.real();
    s.d(2 * r + 1) = dd.imag();
  }
  // second differences of the slopes: slopes s_j = (g_{j+1} - g_j)/dx, j = 0..intervals-1
  const Eigen::Index ns = intervals;
  MatR S = MatR::Zero(ns, s.ni);
  for (Eigen::Index p = 0; p < s.ni; ++p) {
    S(p, p) += 1 / dx;
    S(p + 1, p) -= 1 / dx;
  }
  MatR D2 = MatR::Zero(ns - 2, ns);
  for (Eigen::Index j = 0; j + 2 < ns; ++j) {
    D2(j, j) = 1;
    D2(j, j + 1) = -2;
    D2(j, j + 2) = 1;
  }
  const MatR Lp = D2 * S;
  s.L = MatR::Zero(2 * Lp.rows(), nu);
  s.L.topLeftCorner(Lp.rows(), s.ni) = Lp;
  s.L.bottomRightCorner(Lp.rows(), s.ni) = Lp;
  return s;
}

// Weighted penalized least squares; w holds one weight per complex datum.
VecR solve_weighted(const LinearSystem& s, Real reg, const VecR& w) {
  const Real scale = s.A.squaredNorm() / std::max(1e-300, s.L.squaredNorm());
  const Real lam = std::sqrt(reg * scale);
  MatR M(s.A.rows() + s.L.rows(), s.A.cols());
  VecR rhs = VecR::Zero(M.rows());
  for (Eigen::Index r = 0; r < s.A.rows(); ++r) {
    M.row(r) = w(r / 2) * s.A.row(r);
    rhs(r) = w(r / 2) * s.d(r);
  }
  M.bottomRows(s.L.rows()) = lam * s.L;
  return M.colPivHouseholderQr().solve(rhs);
}

VecR solve_regularized(const LinearSystem& s, Real reg, int robust_iterations = 0, Real huber = 1.345) {
  VecR w = VecR::Ones(s.d.size() / 2);
  VecR x = solve_weighted(s, reg, w);
  // iteratively reweighted: Huber weights on the complex residuals, MAD scale
  for (int it = 0; it < robust_iterations; ++it) {
    const VecR res = s.A * x - s.d;
    VecR r(w.size());
    for (Eigen::Index i = 0; i < r.size(); ++i) r(i) = std::hypot(res(2 * i), res(2 * i + 1));
    std::vector<Real> sorted(r.data(), r.data() + r.size());
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    const Real sigma = 1.4826 * sorted[sorted.size() / 2];
    if (!(sigma > 0)) break;
    for (Eigen::Index i = 0; i < r.size(); ++i) w(i) = std::sqrt(std::min(1.0, huber * sigma / std::max(r(i), 1e-300)));
    x = solve_weighted(s, reg, w);
  }
  return x;
}

Reconstruction to_reconstruction(const LinearSystem& s, const VecR& sol) {
  Reconstruction rec;
  rec.g1.x = rec.g2.x = s.x;
  rec.g1.g = VecR::Zero(s.x.n);
  rec.g2.g = VecR::Zero(s.x.n);
  rec.g1.g.segment(1, s.ni) = sol.head(s.ni);
  rec.g2.g.segment(1, s.ni) = sol.tail(s.ni);
  rec.residual = (s.A * sol - s.d).norm() / std::max(1e-300, s.d.norm());
  rec.rows_used = static_cast<int>(s.d.size() / 2);
  return rec;
}

}  // namespace

Reconstruction unmix_and_invert(const ExtractionTable& table, const InversionOptions& opt) {
  if (!(opt.reg >= 0)) throw InvalidArgument("unmix_and_invert: negative regularization");
  const LinearSystem s = assemble(table, opt);
  return to_reconstruction(s, solve_regularized(s, opt.reg, opt.robust_iterations));
}

std::vector<LCurvePoint> lcurve(const ExtractionTable& table, const InversionOptions& opt,
                                const std::vector<Real>& regs) {
  const LinearSystem s = assemble(table, opt);
  std::vector<LCurvePoint> out;
  for (Real r : regs) {
    const VecR x = solve_regularized(s, r);
    out.push_back({r, (s.A * x - s.d).norm(), (s.L * x).norm()});
  }
  return out;
}

Real relative_l2_error(const Reconstruction& rec, const DefectProfile& truth) {
  VecR gx, gw;
  gauss_legendre(8, gx, gw);
  const AxisGrid& x = rec.g1.x;
  Real num = 0, den = 0;
  // panels on the reconstruction intervals; the truth is smooth inside each
  const auto [lo, hi] = truth.support();
  const Real a = std::min(x.x0, lo), b = std::max(x.last(), hi);
  const long panels = std::lround((b - a) / x.dx) * 2 + 2;
  const Real w = (b - a) / panels;
  for (long p = 0; p < panels; ++p)
    for (Eigen::Index q = 0; q < gx.size(); ++q) {
      const Real t = a + w * (p + 0.5 + 0.5 * gx(q)), wq = 0.5 * w * gw(q);
      const Real e1 = rec.g1.at(t) - truth.g1_at(t), e2 = rec.g2.at(t) - truth.g2_at(t);
      num += wq * (e1 * e1 + e2 * e2);
      den += wq * (std::pow(truth.g1_at(t), 2) + std::pow(truth.g2_at(t), 2));
    }
  if (den == 0) throw SingularArgument("relative_l2_error: zero reference profile");
  return std::sqrt(num / den);
}

StabilityReport stability_bound_check(const Profile1D& g, const Profile1D& ga, Real xi_max, Real M) {
  if (g.x.n != ga.x.n || std::abs(g.x.x0 - ga.x.x0) > 1e-12 || std::abs(g.x.dx - ga.x.dx) > 1e-15)
    throw InvalidArgument("stability_bound_check: profiles must share their grid");
  if (!(xi_max > 0)) throw InvalidArgument("stability_bound_check: xi_max must be positive");
  StabilityReport rep;
  Profile1D diff = g;
  diff.g = g.g - ga.g;
  // centre the grid: |F| is translation invariant and the integrand oscillates less
  diff.x.x0 = -0.5 * (diff.x.last() - diff.x.x0);
  rep.lhs = std::pow(diff.l2_norm(), 2);
  VecR gx, gw;
  gauss_legendre(8, gx, gw);
  const Real half = std::max(std::abs(diff.x.x0), diff.x.dx);
  const long panels = std::max<long>(16, std::lround(std::ceil(xi_max * half)));
  const Real w = xi_max / panels;
  Real s = 0;
  for (long p = 0; p < panels; ++p)
    for (Eigen::Index q = 0; q < gx.size(); ++q) s += 0.5 * w * gw(q) * std::norm(diff.fourier(w * (p + 0.5 + 0.5 * gx(q))));
  rep.M = M > 0 ? M : std::max(g.h1_norm(), ga.h1_norm());
  rep.fourier_term = 4 / kPi * std::sqrt(s);
  rep.tail_term = 2 * kPi * rep.M * rep.M / (xi_max * xi_max);
  rep.holds = rep.lhs <= rep.fourier_term + rep.tail_term;
  return rep;
}

PipelineResult invert_measurements(MeasurementSet meas, const Material& mat, const ExtractionOptions& eopt,
                                   const InversionOptions& iopt, const DefectProfile* truth) {
  PipelineResult out;
  const auto t0 = std::chrono::steady_clock::now();
  out.measurements = std::move(meas);
  out.table = extract_fourier_data(out.measurements, mat, eopt);
  out.reconstruction = unmix_and_invert(out.table, iopt);
  out.seconds_inversion = std::chrono::duration<Real>(std::chrono::steady_clock::now() - t0).count();
  if (truth) {
    out.has_truth = true;
    out.error = relative_l2_error(out.reconstruction, *truth);
    const auto& r = out.reconstruction;
    const Profile1D g1 = Profile1D::sample([truth](Real x) { return truth->g1_at(x); }, r.g1.x);
    const Profile1D g2 = Profile1D::sample([truth](Real x) { return truth->g2_at(x); }, r.g2.x);
    out.stability_g1 = stability_bound_check(g1, r.g1, out.table.xi_max);
    out.stability_g2 = stability_bound_check(g2, r.g2, out.table.xi_max);
  }
  return out;
}

PipelineResult run_pipeline(const DefectProfile& defect, const Material& mat, const std::vector<Real>& freqs,
                            const SynthesisOptions& sopt, const ExtractionOptions& eopt, const InversionOptions& iopt) {
  const auto t0 = std::chrono::steady_clock::now();
  MeasurementSet meas = synthesize_measurements(defect, mat, freqs, sopt);
  const Real ts = std::chrono::duration<Real>(std::chrono::steady_clock::now() - t0).count();
  PipelineResult out = invert_measurements(std::move(meas), mat, eopt, iopt, &defect);
  out.seconds_synthesis = ts;
  return out;
}

}  // namespace lamb
