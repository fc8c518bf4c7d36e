#include "lamb/forward2d.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

namespace lamb {

SourceSpec2D SourceSpec2D::sample(const Source2D& src, const AxisGrid& x, Real h, int order) {
  if (!(h > 0)) throw InvalidArgument("SourceSpec2D::sample: h must be positive");
  VecR gx, gw;
  gauss_legendre(order, gx, gw);
  SourceSpec2D s;
  s.x = x;
  s.h = h;
  s.r = src.r;
  s.z.resize(x.n);
  s.w.resize(x.n);
  s.f1.resize(x.n);
  s.f2.resize(x.n);
  s.b1_top = s.b2_top = s.b1_bot = s.b2_bot = VecC::Zero(x.n);
  for (Eigen::Index i = 0; i < x.n; ++i) {
    const Real xi = x.at(i);
    std::vector<Real> cuts{-h};
    if (src.z_breaks)
      for (Real b : src.z_breaks(xi))
        if (b > -h && b < h) cuts.push_back(b);
    cuts.push_back(h);
    std::sort(cuts.begin(), cuts.end());
    const Eigen::Index np = static_cast<Eigen::Index>(cuts.size()) - 1;
    VecR z(np * order), w(np * order);
    VecC f1(np * order), f2(np * order);
    bool any = false;
    for (Eigen::Index p = 0; p < np; ++p)
      for (int k = 0; k < order; ++k) {
        const Real a = cuts[p], b = cuts[p + 1];
        const Eigen::Index m = p * order + k;
        z(m) = a + 0.5 * (b - a) * (gx(k) + 1);
        w(m) = 0.5 * (b - a) * gw(k);
        const Vec2c f = src.f(xi, z(m));
        f1(m) = f[0];
        f2(m) = f[1];
        any = any || f[0] != Complex(0) || f[1] != Complex(0);
      }
    if (any) {
      s.z[i] = z;
      s.w[i] = w;
      s.f1[i] = f1;
      s.f2[i] = f2;
    }
    const Vec2c t = src.top(xi), b = src.bot(xi);
    s.b1_top(i) = t[0];
    s.b2_top(i) = t[1];
    s.b1_bot(i) = b[0];
    s.b2_bot(i) = b[1];
  }
  s.validate();
  return s;
}

void SourceSpec2D::validate() const {
  auto bad = [](const VecC& v) { return !v.allFinite(); };
  if (bad(b1_top) || bad(b2_top) || bad(b1_bot) || bad(b2_bot))
    throw InvalidArgument("SourceSpec2D: non-finite traction samples");
  for (Eigen::Index i = 0; i < x.n; ++i) {
    const Real xi = x.at(i);
    const bool active = f1[i].size() > 0 || b1_top(i) != Complex(0) || b2_top(i) != Complex(0) ||
                        b1_bot(i) != Complex(0) || b2_bot(i) != Complex(0);
    if (active && std::abs(xi) >= r + 1e-12)
      throw InvalidArgument("SourceSpec2D: source sample outside the declared radius at x = " + std::to_string(xi));
    if (f1[i].size() > 0 && (bad(f1[i]) || bad(f2[i])))
      throw InvalidArgument("SourceSpec2D: non-finite force samples");
  }
}

ModeProjection project_sources(const SourceSpec2D& src, const ModeShape& mode) {
  if (mode.root.margin < kCriticalThreshold) {
    CriticalReport rep;
    rep.omega = mode.root.omega;
    rep.is_critical = true;
    rep.margin = mode.root.margin;
    rep.offenders.push_back({mode.root.family, mode.root.k, std::abs(mode.root.gamma), mode.root.margin});
    throw CriticalFrequency(rep);
  }
  const Complex inv_j = 1.0 / mode.root.jn;
  const Real h = src.h;
  const Complex ut = mode.u(h), ub = mode.u(-h), vt = mode.v(h), vb = mode.v(-h);
  ModeProjection p{VecC(src.x.n), VecC(src.x.n)};
  for (Eigen::Index i = 0; i < src.x.n; ++i) {
    Complex s1 = src.b1_top(i) * ut + src.b1_bot(i) * ub;
    Complex s2 = src.b2_top(i) * vt + src.b2_bot(i) * vb;
    const VecR& z = src.z[i];
    for (Eigen::Index m = 0; m < z.size(); ++m) {
      const Real wz = src.w[i](m);
      s1 += wz * src.f1[i](m) * mode.u(z(m));
      s2 += wz * src.f2[i](m) * mode.v(z(m));
    }
    p.F1(i) = s1 * inv_j;
    p.F2(i) = s2 * inv_j;
  }
  return p;
}

ModeCoefficients green_convolve(const VecC& F1, const VecC& F2, Complex k, const AxisGrid& x) {
  const Eigen::Index n = x.n;
  if (F1.size() != n || F2.size() != n) throw InvalidArgument("green_convolve: size mismatch");
  // Trapezoid weights; the sums split into a causal part (y < x) and an
  // anti-causal part (y > x), each an exact first-order recursion because the
  // kernel is a pure exponential on a uniform grid.
  VecR w = VecR::Constant(n, x.dx);
  if (n > 0) {
    w(0) *= 0.5;
    w(n - 1) *= 0.5;
  }
  const Complex e = std::exp(kI * k * x.dx);
  VecC L1(n), L2(n), R1(n), R2(n);  // L: sum_{j<i}, R: sum_{j>i} of e^{ik|xi-xj|} w F
  Complex l1 = 0, l2 = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    L1(i) = l1;
    L2(i) = l2;
    l1 = e * (l1 + w(i) * F1(i));
    l2 = e * (l2 + w(i) * F2(i));
  }
  Complex r1 = 0, r2 = 0;
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    R1(i) = r1;
    R2(i) = r2;
    r1 = e * (r1 + w(i) * F1(i));
    r2 = e * (r2 + w(i) * F2(i));
  }
  ModeCoefficients c{VecC(n), VecC(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    // G1 * F at x_i = (L + R + w_i F_i)/2 ; G2 * F = (L - R)/2 (G2(0) = 0)
    const Complex g1f1 = 0.5 * (L1(i) + R1(i) + w(i) * F1(i));
    const Complex g1f2 = 0.5 * (L2(i) + R2(i) + w(i) * F2(i));
    const Complex g2f1 = 0.5 * (L1(i) - R1(i));
    const Complex g2f2 = 0.5 * (L2(i) - R2(i));
    c.a(i) = g1f1 - g2f2;
    c.b(i) = g2f1 - g1f2;
  }
  return c;
}

VecR uniform_depths(Real h, int nz) {
  if (nz < 1) throw InvalidArgument("uniform_depths: need at least one interval");
  VecR z(nz + 1);
  for (int j = 0; j <= nz; ++j) z(j) = -h + 2 * h * j / nz;
  z(nz) = h;
  return z;
}

void Wavefield2D::at_depth(Real z0, VecC& u_out, VecC& v_out) const {
  u_out = VecC::Zero(x.n);
  v_out = VecC::Zero(x.n);
  for (int n = 0; n < n_modes; ++n) {
    const Complex un = modes[n].u(z0), vn = modes[n].v(z0);
    u_out += a.row(n).transpose() * un;
    v_out += b.row(n).transpose() * vn;
  }
}

Wavefield2D solve2d_with_modes(const SourceSpec2D& src, const std::vector<ModeShape>& modes, const VecR& z_eval,
                               const Solve2DOptions& opt) {
  Wavefield2D w;
  w.x = src.x;
  w.z = z_eval;
  w.n_modes = static_cast<int>(modes.size());
  w.modes = modes;
  w.omega = modes.empty() ? 0.0 : modes.front().root.omega;
  w.a = MatC::Zero(w.n_modes, src.x.n);
  w.b = MatC::Zero(w.n_modes, src.x.n);
  w.u = MatC::Zero(src.x.n, z_eval.size());
  w.v = MatC::Zero(src.x.n, z_eval.size());
  MatC last_u, last_v;
  for (int n = 0; n < w.n_modes; ++n) {
    const ModeShape& m = modes[n];
    ModeProjection p = project_sources(src, m);
    const ModeCoefficients c = green_convolve(p.F1, p.F2, m.root.k, src.x);
    w.a.row(n) = c.a.transpose();
    w.b.row(n) = c.b.transpose();
    VecC uz(z_eval.size()), vz(z_eval.size());
    for (Eigen::Index j = 0; j < z_eval.size(); ++j) {
      uz(j) = m.u(z_eval(j));
      vz(j) = m.v(z_eval(j));
    }
    MatC du = c.a * uz.transpose(), dv = c.b * vz.transpose();
    w.u += du;
    w.v += dv;
    if (n == w.n_modes - 1) {
      last_u = std::move(du);
      last_v = std::move(dv);
    }
    w.projections.push_back(std::move(p));
  }
  const Real field = std::max(w.u.cwiseAbs().maxCoeff(), w.v.cwiseAbs().maxCoeff());
  if (w.n_modes > 0 && field > 0) {
    const Real last = std::max(last_u.cwiseAbs().maxCoeff(), last_v.cwiseAbs().maxCoeff());
    w.last_mode_ratio = last / field;
    w.truncation_warning = w.last_mode_ratio > opt.truncation_tol;
  }
  return w;
}

Wavefield2D solve2d(const SourceSpec2D& src, Real omega, const Material& mat, int n_modes, const VecR& z_eval,
                    const Solve2DOptions& opt) {
  mat.validate();
  if (std::abs(src.h - mat.h) > 1e-15 * mat.h) throw InvalidArgument("solve2d: source and material thickness differ");
  if (n_modes < 1) throw InvalidArgument("solve2d: n_modes must be positive");
  const auto roots = find_roots(omega, mat, n_modes);
  std::vector<ModeShape> modes;
  modes.reserve(roots.size());
  for (const auto& r : roots) modes.push_back(make_mode(r, mat));
  return solve2d_with_modes(src, modes, z_eval, opt);
}

void write_field_csv(std::ostream& os, const Wavefield2D& w) {
  os << "x,z,re_u,im_u,re_v,im_v\n" << std::setprecision(17);
  for (Eigen::Index i = 0; i < w.x.n; ++i)
    for (Eigen::Index j = 0; j < w.z.size(); ++j)
      os << w.x.at(i) << ',' << w.z(j) << ',' << w.u(i, j).real() << ',' << w.u(i, j).imag() << ','
         << w.v(i, j).real() << ',' << w.v(i, j).imag() << '\n';
}

}  // namespace lamb
