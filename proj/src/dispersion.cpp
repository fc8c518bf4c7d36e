#include "lamb/dispersion.hpp"

#include "lamb/modes.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace lamb {

const char* to_string(ModeFamily f) {
  switch (f) {
    case ModeFamily::Symmetric: return "S";
    case ModeFamily::Antisymmetric: return "A";
    case ModeFamily::ShearHorizontal: return "SH";
  }
  return "?";
}
const char* to_string(ModeKind k) {
  switch (k) {
    case ModeKind::Propagative: return "propagative";
    case ModeKind::Evanescent: return "evanescent";
    case ModeKind::Inhomogeneous: return "inhomogeneous";
  }
  return "?";
}
const char* to_string(Direction d) { return d == Direction::RightGoing ? "right" : "left"; }

namespace {

std::string describe(const CriticalReport& r) {
  std::ostringstream os;
  os << "critical frequency omega=" << r.omega << " (margin " << r.margin << ")";
  for (const auto& o : r.offenders) os << "; " << to_string(o.family) << " k=" << o.k;
  return os.str();
}

// cos z and sin z times exp(-|Im z|): bounded for any z.
Complex scaled_cos(Complex z) {
  const Real y = std::abs(z.imag());
  const Complex e1 = std::exp(Complex(-z.imag() - y, z.real()));
  const Complex e2 = std::exp(Complex(z.imag() - y, -z.real()));
  return 0.5 * (e1 + e2);
}
Complex scaled_sin(Complex z) {
  const Real y = std::abs(z.imag());
  const Complex e1 = std::exp(Complex(-z.imag() - y, z.real()));
  const Complex e2 = std::exp(Complex(z.imag() - y, -z.real()));
  return (e1 - e2) / (2.0 * kI);
}

// Entire functions of P (branch-free), all times exp(-|Im sqrt(P)| h):
// C = cos(sqrt(P) h), S = sin(sqrt(P) h)/sqrt(P), T = sqrt(P) sin(sqrt(P) h), plus d/dP.
struct Entire {
  Complex c, s, t, dc, ds, dt;
};

Entire entire(Complex P, Real h) {
  const Complex r = std::sqrt(P);
  const Complex z = r * h;
  const Real damp = std::exp(-std::abs(z.imag()));
  Entire e;
  e.c = scaled_cos(z);
  const Complex sz = scaled_sin(z);
  if (std::abs(z) < 0.5) {
    // power series S = sum c_n P^n, c_n = (-1)^n h^(2n+1)/(2n+1)!
    Complex s = h, ds = 0, coef = h, ppow = 1.0;
    for (int n = 1; n < 30; ++n) {
      coef *= -h * h / Real((2 * n) * (2 * n + 1));
      ds += Real(n) * coef * ppow;
      ppow *= P;
      const Complex add = coef * ppow;
      s += add;
      if (n > 2 && std::abs(add) < 1e-18 * std::abs(s)) break;
    }
    e.s = s * damp;
    e.ds = ds * damp;
  } else {
    e.s = sz / r;
    e.ds = (h * e.c - e.s) / (2.0 * P);
  }
  e.t = r * sz;
  e.dc = -0.5 * h * e.s;
  e.dt = 0.5 * (e.s + h * e.c);
  return e;
}

}  // namespace

CriticalFrequency::CriticalFrequency(CriticalReport r) : std::runtime_error(describe(r)), report(std::move(r)) {}

DispersionEval dispersion_eval(Real omega, Complex k, ModeFamily family, const Material& mat) {
  const Complex K = k * k;
  const Real w2 = omega * omega;
  const Complex P = w2 / mat.lp2() - K, Q = w2 / mat.mu - K;
  DispersionEval out;
  if (family == ModeFamily::ShearHorizontal) {
    // zeros at Q = (n pi / 2h)^2, n >= 0: T(Q) on thickness 2h
    const Entire q = entire(Q, 2 * mat.h);
    out.d = q.t;
    out.dk = -2.0 * k * q.dt;
    out.domega = 2.0 * omega / mat.mu * q.dt;
    out.scale = std::abs(q.t) + std::abs(Q) * std::abs(q.s) + 1e-300;
    return out;
  }
  const Entire p = entire(P, mat.h), q = entire(Q, mat.h);
  const Complex qk = Q - K;
  Complex t1, t2, dK, dP, dQ;
  if (family == ModeFamily::Symmetric) {
    t1 = qk * qk * q.s * p.c;
    t2 = 4.0 * K * p.t * q.c;
    dK = -2.0 * qk * q.s * p.c + 4.0 * p.t * q.c;
    dP = qk * qk * q.s * p.dc + 4.0 * K * p.dt * q.c;
    dQ = 2.0 * qk * q.s * p.c + qk * qk * q.ds * p.c + 4.0 * K * p.t * q.dc;
  } else {
    t1 = qk * qk * q.c * p.s;
    t2 = 4.0 * K * q.t * p.c;
    dK = -2.0 * qk * q.c * p.s + 4.0 * q.t * p.c;
    dP = qk * qk * q.c * p.ds + 4.0 * K * q.t * p.dc;
    dQ = 2.0 * qk * q.c * p.s + qk * qk * q.dc * p.s + 4.0 * K * q.dt * p.c;
  }
  out.d = t1 + t2;
  out.dk = 2.0 * k * (dK - dP - dQ);
  out.domega = 2.0 * omega * (dP / mat.lp2() + dQ / mat.mu);
  out.scale = std::abs(t1) + std::abs(t2);
  return out;
}

Complex dispersion_residual(Real omega, Complex k, ModeFamily family, const Material& mat) {
  return dispersion_eval(omega, k, family, mat).d;
}

Real group_velocity(Real omega, Real k, ModeFamily family, const Material& mat) {
  const DispersionEval e = dispersion_eval(omega, k, family, mat);
  return -std::real(e.dk) / std::real(e.domega);
}

// ---------------------------------------------------------------------------

namespace {

struct Searcher {
  Real omega;
  ModeFamily family;
  const Material& mat;
  Real h;

  DispersionEval eval(Complex k) const { return dispersion_eval(omega, k, family, mat); }

  // damped complex Newton; true when |D| <= 1e-12 scale
  bool newton(Complex k0, Complex& k, int maxit = 80) const {
    k = k0;
    const Real cap = 1.0 / h;
    for (int it = 0; it < maxit; ++it) {
      const DispersionEval e = eval(k);
      if (!(std::isfinite(std::abs(e.d)) && std::isfinite(std::abs(e.dk)))) return false;
      if (e.dk == Complex(0)) return false;
      Complex step = e.d / e.dk;
      if (std::abs(step) > cap) step *= cap / std::abs(step);
      k -= step;
      if (std::abs(step) < 1e-15 * (1 + std::abs(k))) break;
    }
    const DispersionEval e = eval(k);
    return std::isfinite(std::abs(k)) && std::abs(e.d) <= 1e-11 * e.scale;
  }

  // real root of a real-valued restriction in [a, b] with a sign change
  Complex bisect(const std::function<Real(Real)>& f, Real a, Real b, bool imag_axis) const {
    Real fa = f(a);
    for (int it = 0; it < 200 && (b - a) > 1e-15 * std::max<Real>(1.0, std::abs(b)); ++it) {
      const Real m = 0.5 * (a + b);
      const Real fm = f(m);
      if ((fm < 0) == (fa < 0)) {
        a = m;
        fa = fm;
      } else {
        b = m;
      }
    }
    const Real x = 0.5 * (a + b);
    return imag_axis ? Complex(0, x) : Complex(x, 0);
  }
};

bool near(Complex a, Complex b, Real tol) { return std::abs(a - b) <= tol * (1 + std::abs(a)); }

void add_unique(std::vector<Complex>& v, Complex k, Real tol) {
  for (const Complex& x : v)
    if (near(x, k, tol)) return;
  v.push_back(k);
}

// fold into the closed first quadrant and snap near-axis roots onto the axis
Complex canonical(Complex k) {
  k = Complex(std::abs(k.real()), std::abs(k.imag()));
  if (k.imag() <= 1e-11 * std::abs(k)) k.imag(0);
  if (k.real() <= 1e-11 * std::abs(k)) k.real(0);
  return k;
}

// all symmetry images of first-quadrant roots (D is even and real on the axes)
std::vector<Complex> images(const std::vector<Complex>& roots) {
  std::vector<Complex> out;
  for (const Complex& k : roots) {
    out.push_back(k);
    out.push_back(-k);
    if (k.imag() != 0 && k.real() != 0) {
      out.push_back(std::conj(k));
      out.push_back(-std::conj(k));
    }
  }
  return out;
}

struct Box {
  Real x0, x1, y0, y1;
  bool inside(Complex k) const { return k.real() > x0 && k.real() < x1 && k.imag() > y0 && k.imag() < y1; }
};

// winding number of D around a box, counter-clockwise. Pieces are kept
// shorter than a third of the distance to the nearest known root so two
// nearby zeros cannot alias into a full turn.
struct Winding {
  const Searcher& s;
  const std::vector<Complex>& known;
  long evals = 0;
  bool degenerate = false;

  Complex f(Complex k) {
    ++evals;
    return s.eval(k).d;
  }
  Real segment(Complex a, Complex b, Complex fa, Complex fb, int depth) {
    const Complex m = 0.5 * (a + b);
    const Complex fm = f(m);
    if (fm == Complex(0) || fa == Complex(0) || fb == Complex(0)) {
      degenerate = true;
      return 0;
    }
    const Real d1 = std::arg(fm / fa), d2 = std::arg(fb / fm), d = std::arg(fb / fa);
    if (std::abs(d1) < 0.35 && std::abs(d2) < 0.35 && std::abs(d1 + d2 - d) < 1e-9) return d1 + d2;
    if (depth > 50) {
      degenerate = true;
      return d1 + d2;
    }
    return segment(a, m, fa, fm, depth + 1) + segment(m, b, fm, fb, depth + 1);
  }
  Real edge(Complex a, Complex b) {
    const Real len = std::abs(b - a);
    Real dmin = 0.5 / s.h;
    for (const Complex& k : known) {
      // distance from k to the segment
      const Real t = std::clamp(std::real((k - a) * std::conj(b - a)) / (len * len), 0.0, 1.0);
      dmin = std::min(dmin, std::abs(k - (a + t * (b - a))));
    }
    const Real piece = std::max(dmin / 3, 1e-12 * (1 + std::abs(a)));
    const int pieces = std::clamp(int(std::ceil(len / piece)), 8, 2000000);
    Real total = 0;
    Complex za = a, fa = f(a);
    for (int i = 1; i <= pieces; ++i) {
      const Complex z = a + (b - a) * (Real(i) / pieces);
      const Complex fz = f(z);
      total += segment(za, z, fa, fz, 0);
      za = z;
      fa = fz;
    }
    return total;
  }
  int count(const Box& bx, Real& frac) {
    const Complex c00(bx.x0, bx.y0), c10(bx.x1, bx.y0), c11(bx.x1, bx.y1), c01(bx.x0, bx.y1);
    const Real tot = edge(c00, c10) + edge(c10, c11) + edge(c11, c01) + edge(c01, c00);
    const Real n = tot / (2 * kPi);
    frac = std::abs(n - std::round(n));
    return int(std::lround(n));
  }
};

}  // namespace

Complex merkulov_seed(Real N, Real h) {
  const Real L = std::log(2 * kPi * N);
  return Complex(0.5 * L, 0.5 * kPi * N - L / (2 * kPi * N)) / h;
}

Real merkulov_index(Complex k, ModeFamily family, Real h) {
  // Im(hk) ~ pi N / 2 with N = 2j -+ 1/2
  const Real off = family == ModeFamily::Symmetric ? -0.5 : 0.5;
  const Real j = std::max<Real>(1.0, std::round((2 * k.imag() * h / kPi - off) / 2));
  return 2 * j + off;
}

std::vector<Complex> quadrant_roots(Real omega, ModeFamily family, const Material& mat, Real kr, Real ki,
                                    const RootSearchOptions& opt) {
  mat.validate();
  if (!(omega > 0)) throw InvalidArgument("quadrant_roots: omega must be positive");
  const Real h = mat.h;
  Searcher S{omega, family, mat, h};
  std::vector<Complex> roots;
  const Real tol = opt.dedup_tol;

  // (a) real axis: D is real there
  {
    const int n = opt.real_scan_points;
    auto f = [&](Real x) { return std::real(S.eval(Complex(x, 0)).d); };
    Real xa = kr * 1e-12, fa = f(xa);
    for (int i = 1; i <= n; ++i) {
      const Real xb = kr * Real(i) / n, fb = f(xb);
      if ((fa < 0) != (fb < 0)) add_unique(roots, S.bisect(f, xa, xb, false), tol);
      xa = xb;
      fa = fb;
    }
  }
  // (b) imaginary axis
  {
    const int n = std::max(400, int(8 * ki * h) + 400);
    auto f = [&](Real y) { return std::real(S.eval(Complex(0, y)).d); };
    Real ya = ki * 1e-12, fa = f(ya);
    for (int i = 1; i <= n; ++i) {
      const Real yb = ki * Real(i) / n, fb = f(yb);
      if ((fa < 0) != (fb < 0)) add_unique(roots, S.bisect(f, ya, yb, true), tol);
      ya = yb;
      fa = fb;
    }
  }
  // (c) complex Newton from Merkulov and grid seeds
  auto try_seed = [&](Complex seed) {
    Complex k;
    if (!S.newton(seed, k)) return;
    k = canonical(k);
    if (std::abs(k) * h < 1e-9) return;
    if (k.real() > kr * 1.0001 || k.imag() > ki * 1.0001) return;
    add_unique(roots, k, tol);
  };
  {
    const Real nmax = 2 * ki * h / kPi + 2;
    for (Real N = 1.5; N <= nmax; N += 1.0) try_seed(merkulov_seed(N, h));
    const int nx = std::max(8, int(kr * h * 2) + 8);
    const int ny = std::max(8, int(ki * h * 3 / kPi * 2) + 8);
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < ny; ++j) try_seed(Complex(kr * (i + 0.5) / nx, ki * (j + 0.5) / ny));
  }

  // Newton stalls near a double root (zero group velocity) and scatters
  // accepted points around it. Merge such clusters and repeat the center by
  // its local winding multiplicity.
  {
    std::vector<Complex> merged;
    std::vector<bool> used(roots.size(), false);
    for (size_t i = 0; i < roots.size(); ++i) {
      if (used[i]) continue;
      const Real r = 1e-5 * std::max<Real>(std::abs(roots[i]), 1.0 / h);
      std::vector<Complex> cl{roots[i]};
      used[i] = true;
      for (size_t j = i + 1; j < roots.size(); ++j)
        if (!used[j] && std::abs(roots[j] - roots[i]) <= r) {
          cl.push_back(roots[j]);
          used[j] = true;
        }
      if (cl.size() == 1) {
        merged.push_back(roots[i]);
        continue;
      }
      Complex c = 0;
      for (const Complex& k : cl) c += k;
      c /= Real(cl.size());
      if (std::abs(c.imag()) < 2 * r) c.imag(0);
      if (std::abs(c.real()) < 2 * r) c.real(0);
      std::vector<Complex> others;
      for (size_t j = 0; j < roots.size(); ++j)
        if (std::abs(roots[j] - c) > 3 * r) others.push_back(roots[j]);
      const std::vector<Complex> known = images(others);
      Winding w{S, known};
      Real frac = 0;
      const Real R = 20 * r;
      int m = w.count({c.real() - R, c.real() + R, c.imag() - R, c.imag() + R}, frac);
      m = std::max(1, m);
      for (int t = 0; t < m; ++t) merged.push_back(c);
    }
    roots = merged;
  }

  // (d) completeness: argument principle on a box that holds every found root
  // except the imaginary axis ones; sub-boxes localize anything missed
  // (d) completeness: the argument principle on a box reaching into the other
  // quadrants, so that no edge runs along an axis full of roots. Sub-boxes
  // localize anything missed.
  if (opt.check_completeness) {
    const Real margin = 0.37 / h;
    auto found_in = [&](const Box& b) {
      int n = 0;
      for (const Complex& k : images(roots)) n += b.inside(k) ? 1 : 0;
      return n;
    };
    std::function<void(Box, int)> verify = [&](Box b, int depth) {
      const std::vector<Complex> known = images(roots);
      Winding w{S, known};
      Real frac = 0;
      const int n = w.count(b, frac);
      if (w.degenerate || frac > 0.05) {
        // nudge the box off a root lying on its edge
        if (depth >= 30) throw SolverFailure("root search: winding count did not settle");
        const Real dx = 1.37e-3 * (b.x1 - b.x0), dy = 1.13e-3 * (b.y1 - b.y0);
        verify({b.x0 - dx, b.x1 + dx, b.y0 - dy, b.y1 + dy}, depth + 1);
        return;
      }
      int found = found_in(b);
      if (n == found) return;
      if (n < found) throw SolverFailure("root search: more roots found than the winding count");
      if (depth >= 30) throw SolverFailure("root search: could not localize a missing root");
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          try_seed(Complex(b.x0 + (b.x1 - b.x0) * (i + 0.5) / 3, b.y0 + (b.y1 - b.y0) * (j + 0.5) / 3));
      found = found_in(b);
      if (found == n) return;
      const Real xm = 0.5 * (b.x0 + b.x1) + 1.7e-6 * (b.x1 - b.x0), ym = 0.5 * (b.y0 + b.y1) + 1.3e-6 * (b.y1 - b.y0);
      for (const Box& c : {Box{b.x0, xm, b.y0, ym}, Box{xm, b.x1, b.y0, ym}, Box{b.x0, xm, ym, b.y1},
                           Box{xm, b.x1, ym, b.y1}})
        verify(c, depth + 1);
    };
    verify({-margin, kr, -margin, ki}, 0);
    // roots added while localizing may sit outside the requested window
    roots.erase(std::remove_if(roots.begin(), roots.end(),
                               [&](Complex k) { return k.real() > kr || k.imag() > ki; }),
                roots.end());
  }

  std::sort(roots.begin(), roots.end(), [](Complex a, Complex b) {
    return a.imag() != b.imag() ? a.imag() < b.imag() : a.real() > b.real();
  });
  return roots;
}

ModeRoot make_root(Real omega, Complex k, ModeFamily family, const Material& mat) {
  ModeRoot r;
  r.omega = omega;
  r.k = k;
  r.family = family;
  const Real w2 = omega * omega;
  r.p = std::sqrt(w2 / mat.lp2() - k * k);
  r.q = std::sqrt(w2 / mat.mu - k * k);
  if (k.imag() == 0)
    r.kind = ModeKind::Propagative;
  else if (k.real() == 0)
    r.kind = ModeKind::Evanescent;
  else
    r.kind = ModeKind::Inhomogeneous;
  if (r.kind == ModeKind::Propagative) {
    const Real vg = group_velocity(omega, k.real(), family, mat);
    r.group_velocity = vg;
    r.direction = vg > 0 ? Direction::RightGoing : Direction::LeftGoing;
  } else {
    r.direction = k.imag() > 0 ? Direction::RightGoing : Direction::LeftGoing;
  }
  if (family == ModeFamily::ShearHorizontal) {
    r.gamma = 1.0;
    r.jn = kI * w2 * k;
    r.margin = 1.0;
    return r;
  }
  const ModeShape m = make_mode(r, mat);
  r.jn = closed_form_pairing(m, m);
  r.gamma = (k == Complex(0)) ? Complex(0) : r.jn / (kI * w2 * k);
  const Real nx = norm_x(m), ny = norm_y(m);
  r.margin = (nx > 0 && ny > 0) ? std::abs(r.jn) / (nx * ny) : 0.0;
  return r;
}

bool right_going_before(const ModeRoot& a, const ModeRoot& b) {
  const Real tie = 1e-12 * (1 + std::max(std::abs(a.k), std::abs(b.k)));
  if (std::abs(a.k.imag() - b.k.imag()) > tie) return a.k.imag() < b.k.imag();
  if (std::abs(std::abs(a.k.real()) - std::abs(b.k.real())) > tie)
    return std::abs(a.k.real()) > std::abs(b.k.real());
  return a.k.real() > b.k.real();
}

namespace {

Real root_margin(const ModeRoot& r, const Material& mat) {
  return std::min(r.margin, std::abs(r.k) * mat.h);
}

std::vector<ModeRoot> right_going_set(Real omega, const Material& mat, int n_modes, const RootSearchOptions& opt) {
  const Real h = mat.h;
  Real ki = (kPi / h) * (0.25 * n_modes + 2) + omega / mat.cs();
  for (int attempt = 0; attempt < 8; ++attempt) {
    const Real nmax = 2 * ki * h / kPi + 2;
    const Real kr = 1.5 * omega / mat.cs() + (0.5 * std::log(2 * kPi * nmax) + 3) / h;
    std::vector<ModeRoot> all;
    for (ModeFamily fam : {ModeFamily::Symmetric, ModeFamily::Antisymmetric}) {
      for (Complex k : quadrant_roots(omega, fam, mat, kr, ki, opt)) {
        if (k.imag() == 0) {
          ModeRoot r = make_root(omega, k, fam, mat);
          if (r.direction == Direction::LeftGoing) r = make_root(omega, -k, fam, mat);
          // the right-going root of a backward branch has k < 0 and vg > 0
          if (r.k.real() < 0) {
            r.direction = Direction::RightGoing;
            r.group_velocity = std::abs(*r.group_velocity);
          }
          all.push_back(r);
        } else if (k.real() == 0) {
          all.push_back(make_root(omega, k, fam, mat));
        } else {
          all.push_back(make_root(omega, k, fam, mat));
          all.push_back(make_root(omega, Complex(-k.real(), k.imag()), fam, mat));
        }
      }
    }
    std::sort(all.begin(), all.end(), right_going_before);
    if (int(all.size()) >= n_modes && all[n_modes - 1].k.imag() < 0.95 * ki) {
      all.resize(n_modes);
      for (int i = 0; i < n_modes; ++i) all[i].index = i + 1;
      return all;
    }
    ki *= 1.5;
  }
  throw SolverFailure("find_roots: could not bracket the requested number of modes");
}

CriticalReport report_of(Real omega, const std::vector<ModeRoot>& roots, const Material& mat) {
  CriticalReport rep;
  rep.omega = omega;
  rep.margin = std::numeric_limits<Real>::infinity();
  for (const ModeRoot& r : roots) {
    const Real m = root_margin(r, mat);
    rep.margin = std::min(rep.margin, m);
    if (m < kCriticalThreshold) rep.offenders.push_back({r.family, r.k, std::abs(r.gamma), m});
  }
  // a root sitting exactly at k = 0 escapes the axis scans
  for (ModeFamily fam : {ModeFamily::Symmetric, ModeFamily::Antisymmetric})
    for (Real wc : lamb_cutoff_frequencies(omega * (1 - 1e-12), omega * (1 + 1e-12), fam, mat)) {
      (void)wc;
      rep.margin = 0;
      rep.offenders.push_back({fam, 0.0, 0.0, 0.0});
    }
  rep.is_critical = rep.margin < kCriticalThreshold;
  return rep;
}

}  // namespace

std::vector<ModeRoot> find_roots(Real omega, const Material& mat, int n_modes, const RootSearchOptions& opt) {
  mat.validate();
  if (!(omega > 0)) throw InvalidArgument("find_roots: omega must be positive");
  if (n_modes < 1) throw InvalidArgument("find_roots: n_modes must be positive");
  std::vector<ModeRoot> roots = right_going_set(omega, mat, n_modes, opt);
  const CriticalReport rep = report_of(omega, roots, mat);
  if (rep.is_critical && opt.refuse_critical) throw CriticalFrequency(rep);
  for (size_t i = 0; i < roots.size(); ++i)
    for (size_t j = i + 1; j < roots.size(); ++j)
      if (roots[i].family == roots[j].family && std::abs(roots[i].k - roots[j].k) < 1e-7 * (1 + std::abs(roots[i].k)))
        throw RootCollision("find_roots: two roots within the cluster tolerance", roots[i].k, roots[j].k);
  return roots;
}

CriticalReport critical_report(Real omega, const Material& mat, int n_modes) {
  RootSearchOptions opt;
  opt.refuse_critical = false;
  return report_of(omega, right_going_set(omega, mat, n_modes, opt), mat);
}

Complex gamma_value(const ModeRoot& root, const Material& mat) {
  if (root.family == ModeFamily::ShearHorizontal) return 1.0;
  if (std::abs(root.k) * mat.h < 1e-14) {
    CriticalReport rep;
    rep.omega = root.omega;
    rep.offenders.push_back({root.family, root.k, 0.0, 0.0});
    rep.is_critical = true;
    throw CriticalFrequency(rep);
  }
  const ModeShape m = make_mode(root, mat);
  return closed_form_pairing(m, m) / (kI * root.omega * root.omega * root.k);
}

Complex gamma_printed(const ModeRoot& root, const Material& mat) {
  const Complex k = root.k, p = root.p, q = root.q, k2 = k * k, qk = q * q - k2;
  const Real h = mat.h;
  if (k == Complex(0)) throw SingularArgument("gamma_printed: k = 0");
  const Complex bracket = qk / p - 8.0 * p - 2.0 * p / k2 - p / (q * q);
  if (root.family == ModeFamily::Symmetric) {
    const Complex sq = std::sin(q * h), sp = std::sin(p * h), cp = std::cos(p * h);
    return h * qk * qk * sq * sq + 4.0 * k2 * p * p * sp * sp + qk * sp * cp * sq * sq * bracket;
  }
  if (root.family == ModeFamily::Antisymmetric) {
    const Complex cq = std::cos(q * h), sp = std::sin(p * h), cp = std::cos(p * h);
    return h * qk * qk * cq * cq + 4.0 * k2 * p * p * cp * cp - qk * cp * sp * cq * cq * bracket;
  }
  return 1.0;
}

// ---------------------------------------------------------------------------

std::vector<Real> sh_critical_frequencies(Real a, Real b, const Material& mat) {
  std::vector<Real> out;
  const Real step = std::sqrt(mat.mu) * kPi / (2 * mat.h);
  for (int n = 1; n * step <= b; ++n)
    if (n * step > a) out.push_back(n * step);
  return out;
}

std::vector<Real> lamb_cutoff_frequencies(Real a, Real b, ModeFamily family, const Material& mat) {
  // k = 0: S needs sin(qh) cos(ph) = 0, A needs cos(qh) sin(ph) = 0
  std::vector<Real> out;
  const Real h = mat.h;
  auto push = [&](Real c, Real offset) {
    for (int n = 0;; ++n) {
      const Real w = (n + offset) * kPi * c / h;
      if (w > b) break;
      if (w > a) out.push_back(w);
    }
  };
  if (family == ModeFamily::Symmetric) {
    push(mat.cs(), 1.0);
    push(mat.cp(), 0.5);
  } else if (family == ModeFamily::Antisymmetric) {
    push(mat.cs(), 0.5);
    push(mat.cp(), 1.0);
  }
  std::sort(out.begin(), out.end());
  return out;
}

ZgvPoint refine_zgv(Real omega0, Real k0, ModeFamily family, const Material& mat) {
  // Newton on (D, D_k) with a central-difference Jacobian in k and w
  Real w = omega0, k = k0;
  for (int it = 0; it < 60; ++it) {
    const DispersionEval e = dispersion_eval(w, k, family, mat);
    const Real f1 = std::real(e.d), f2 = std::real(e.dk);
    const Real hk = 1e-6 * std::max<Real>(1.0, std::abs(k)), hw = 1e-6 * std::max<Real>(1.0, w);
    const DispersionEval kp = dispersion_eval(w, k + hk, family, mat), km = dispersion_eval(w, k - hk, family, mat);
    const Real dkk = (std::real(kp.dk) - std::real(km.dk)) / (2 * hk);
    const Real dkw = std::real(e.domega);
    const DispersionEval wp = dispersion_eval(w + hw, k, family, mat), wm = dispersion_eval(w - hw, k, family, mat);
    const Real dwk = (std::real(wp.dk) - std::real(wm.dk)) / (2 * hw);
    // [D_k D_w; D_kk D_kw] [dk; dw] = -[D; D_k]
    const Real a11 = f2, a12 = dkw, a21 = dkk, a22 = dwk;
    const Real det = a11 * a22 - a12 * a21;
    if (det == 0) break;
    const Real dk = (-f1 * a22 + f2 * a12) / det;
    const Real dw = (-a11 * f2 + a21 * f1) / det;
    k += dk;
    w += dw;
    if (std::abs(dk) < 1e-15 * std::abs(k) && std::abs(dw) < 1e-15 * w) break;
  }
  return {w, k, family};
}

namespace {

std::vector<Real> real_roots(Real omega, ModeFamily fam, const Material& mat, Real kr, int pts) {
  RootSearchOptions o;
  o.real_scan_points = pts;
  Searcher S{omega, fam, mat, mat.h};
  std::vector<Real> out;
  auto f = [&](Real x) { return std::real(S.eval(Complex(x, 0)).d); };
  Real xa = kr * 1e-12, fa = f(xa);
  for (int i = 1; i <= pts; ++i) {
    const Real xb = kr * Real(i) / pts, fb = f(xb);
    if ((fa < 0) != (fb < 0)) out.push_back(S.bisect(f, xa, xb, false).real());
    xa = xb;
    fa = fb;
  }
  (void)o;
  return out;
}

}  // namespace

std::vector<CriticalReport> scan_critical(Real a, Real b, const Material& mat, int steps, int n_modes) {
  mat.validate();
  if (steps < 2) throw InvalidArgument("scan_critical: steps must be >= 2");
  if (!(b > a) || !(a >= 0)) throw InvalidArgument("scan_critical: bad interval");
  (void)n_modes;
  std::vector<CriticalReport> out;
  auto emit = [&](Real w, ModeFamily fam, Complex k, Real margin) {
    for (const auto& r : out)
      if (std::abs(r.omega - w) < 1e-9 * (1 + w) && r.offenders.front().family == fam) return;
    CriticalReport r;
    r.omega = w;
    r.offenders.push_back({fam, k, 0.0, margin});
    r.is_critical = true;
    r.margin = margin;
    out.push_back(r);
  };
  for (Real w : sh_critical_frequencies(a, b, mat)) emit(w, ModeFamily::ShearHorizontal, 0.0, 0.0);
  const Real kr = 1.5 * b / mat.cs() + 3 / mat.h;
  for (ModeFamily fam : {ModeFamily::Symmetric, ModeFamily::Antisymmetric}) {
    for (Real w : lamb_cutoff_frequencies(a, b, fam, mat)) emit(w, fam, 0.0, 0.0);
    // ZGV: a pair of real roots appears or disappears between samples
    std::vector<Real> prev;
    Real wprev = 0;
    for (int i = 0; i <= steps; ++i) {
      const Real w = a + (b - a) * Real(i) / steps;
      if (w <= 0) continue;
      std::vector<Real> cur = real_roots(w, fam, mat, kr, 6000);
      if (!prev.empty() || i > 0) {
        const int cut = int(lamb_cutoff_frequencies(wprev, w, fam, mat).size());
        const int diff = std::abs(int(cur.size()) - int(prev.size()));
        if (wprev > 0 && (diff != cut || diff >= 2)) {
          // seed from the closest adjacent pair on the side with more roots
          for (const auto* side : {&prev, &cur}) {
            const Real ws = side == &prev ? wprev : w;
            for (size_t j = 0; j + 1 < side->size(); ++j) {
              const Real k0 = 0.5 * ((*side)[j] + (*side)[j + 1]);
              ZgvPoint z = refine_zgv(ws, k0, fam, mat);
              const Real span = (w - wprev);
              if (z.omega >= wprev - 0.01 * span && z.omega <= w + 0.01 * span && z.k > 1e-6 / mat.h &&
                  std::isfinite(z.omega)) {
                const ModeRoot r = make_root(z.omega, z.k, fam, mat);
                emit(z.omega, fam, z.k, r.margin);
              }
            }
          }
        }
      }
      prev = std::move(cur);
      wprev = w;
    }
  }
  std::sort(out.begin(), out.end(), [](const CriticalReport& x, const CriticalReport& y) { return x.omega < y.omega; });
  return out;
}

void write_atlas_header(std::ostream& os) {
  os << "omega,family,re_k,im_k,kind,direction,re_gamma,im_gamma,re_jn,im_jn,vg\n";
}

void write_atlas_rows(std::ostream& os, const std::vector<ModeRoot>& roots) {
  os << std::setprecision(17);
  for (const ModeRoot& r : roots) {
    os << r.omega << ',' << to_string(r.family) << ',' << r.k.real() << ',' << r.k.imag() << ','
       << to_string(r.kind) << ',' << to_string(r.direction) << ',' << r.gamma.real() << ',' << r.gamma.imag()
       << ',' << r.jn.real() << ',' << r.jn.imag() << ',';
    if (r.group_velocity) os << *r.group_velocity;
    os << '\n';
  }
}

}  // namespace lamb
