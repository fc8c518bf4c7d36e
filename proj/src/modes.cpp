#include "lamb/modes.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

namespace lamb {

namespace {
Complex cs(bool odd, Complex z) { return odd ? std::sin(z) : std::cos(z); }

// integral over [-h, h] of cs(a z) cs(b z) for equal parity
Complex trig_product(bool odd, Complex a, Complex b, Real h) {
  const Complex m = sinc((a - b) * h), p = sinc((a + b) * h);
  return h * (odd ? m - p : m + p);
}
}  // namespace

Complex TrigProfile::operator()(Real z) const { return a * cs(odd, p * z) + b * cs(odd, q * z); }

TrigProfile TrigProfile::derivative() const {
  // cos -> -sin, sin -> cos
  const Real sgn = odd ? 1.0 : -1.0;
  return {sgn * a * p, sgn * b * q, p, q, !odd};
}

TrigProfile TrigProfile::conj() const { return {std::conj(a), std::conj(b), std::conj(p), std::conj(q), odd}; }

TrigProfile TrigProfile::operator+(const TrigProfile& o) const {
  if (o.odd != odd || o.p != p || o.q != q) throw InvalidArgument("TrigProfile: incompatible sum");
  return {a + o.a, b + o.b, p, q, odd};
}

Complex integrate_product(const TrigProfile& f, const TrigProfile& g, Real h) {
  if (f.odd != g.odd) return 0.0;
  const bool o = f.odd;
  return f.a * g.a * trig_product(o, f.p, g.p, h) + f.a * g.b * trig_product(o, f.p, g.q, h) +
         f.b * g.a * trig_product(o, f.q, g.p, h) + f.b * g.b * trig_product(o, f.q, g.q, h);
}

Real l2_norm(const TrigProfile& f, Real h) {
  return std::sqrt(std::max<Real>(0.0, std::real(integrate_product(f, f.conj(), h))));
}

ModeValues ModeShape::eval(Real z) const { return {u(z), t(z), ms(z), v(z)}; }

ModeShape ModeShape::reversed() const {
  ModeShape m = *this;
  m.root.k = -root.k;
  m.root.direction = root.direction == Direction::RightGoing ? Direction::LeftGoing : Direction::RightGoing;
  if (m.root.group_velocity) m.root.group_velocity = -*m.root.group_velocity;
  m.u = u * -1.0;
  m.t = t * -1.0;
  // r = lambda ik u + (lambda+2mu) v' is unchanged under (k, u) -> (-k, -u)
  return m;
}

ModeShape make_mode(const ModeRoot& root, const Material& mat) {
  const Complex k = root.k, p = root.p, q = root.q;
  const Real h = mat.h, lam = mat.lambda, mu = mat.mu, l2 = mat.lp2();
  const Complex k2 = k * k, q2k2 = q * q - k2;
  ModeShape m;
  m.root = root;
  m.h = h;
  if (root.family == ModeFamily::Symmetric) {
    const Complex sq = std::sin(q * h), sp = std::sin(p * h);
    m.u = {kI * k * q2k2 * sq, -2.0 * kI * k * p * q * sp, p, q, false};
    m.t = {-2.0 * kI * k * mu * q2k2 * p * sq, 2.0 * kI * k * mu * q2k2 * p * sp, p, q, true};
    m.ms = {q2k2 * (l2 * k2 + lam * p * p) * sq, -4.0 * mu * p * q * k2 * sp, p, q, false};
    m.v = {-p * q2k2 * sq, -2.0 * k2 * p * sp, p, q, true};
  } else if (root.family == ModeFamily::Antisymmetric) {
    const Complex cq = std::cos(q * h), cp = std::cos(p * h);
    m.u = {kI * k * q2k2 * cq, -2.0 * kI * k * p * q * cp, p, q, true};
    m.t = {2.0 * kI * k * mu * q2k2 * p * cq, -2.0 * kI * k * mu * q2k2 * p * cp, p, q, false};
    m.ms = {q2k2 * (l2 * k2 + lam * p * p) * cq, -4.0 * mu * p * q * k2 * cp, p, q, true};
    m.v = {p * q2k2 * cq, 2.0 * k2 * p * cp, p, q, false};
  } else {
    throw InvalidArgument("make_mode: SH modes are cosine profiles, not Lamb modes");
  }
  m.r = m.u * (lam * kI * k) + m.v.derivative() * l2;
  return m;
}

ModeValues eval_mode(const ModeShape& mode, Real z) { return mode.eval(z); }

ModeSamples sample_mode(const ModeShape& mode, const SectionGrid& grid) {
  const Eigen::Index n = grid.size();
  ModeSamples s{VecC(n), VecC(n), VecC(n), VecC(n), VecC(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const Real z = grid.nodes(i);
    s.u(i) = mode.u(z);
    s.t(i) = mode.t(z);
    s.ms(i) = mode.ms(z);
    s.v(i) = mode.v(z);
    s.r(i) = mode.r(z);
  }
  return s;
}

Complex pairing(const VecC& x1, const VecC& x2, const VecC& y1, const VecC& y2, const SectionGrid& grid) {
  const auto n = grid.size();
  if (x1.size() != n || x2.size() != n || y1.size() != n || y2.size() != n)
    throw InvalidArgument("pairing: sample count differs from grid size");
  return grid.integrate(VecC(x1.cwiseProduct(y1) + x2.cwiseProduct(y2)));
}

Complex pairing(const VecC& x1, const VecC& x2, const SectionGrid& gx, const VecC& y1, const VecC& y2,
                const SectionGrid& gy) {
  if (!gx.same_as(gy)) throw InvalidArgument("pairing: operands sampled on different grids");
  return pairing(x1, x2, y1, y2, gx);
}

Complex closed_form_pairing(const ModeShape& a, const ModeShape& b) {
  return integrate_product(a.u, b.ms, a.h) + integrate_product(a.t, b.v, a.h);
}

Real norm_x(const ModeShape& m) { return std::hypot(l2_norm(m.u, m.h), l2_norm(m.t, m.h)); }
Real norm_y(const ModeShape& m) { return std::hypot(l2_norm(m.ms, m.h), l2_norm(m.v, m.h)); }

SectionFunction SectionFunction::from(const TrigProfile& p) {
  const TrigProfile d1 = p.derivative(), d2 = d1.derivative();
  return {[p](Real z) { return p(z); }, [d1](Real z) { return d1(z); }, [d2](Real z) { return d2(z); }};
}

SectionPair SectionPair::from(const ModeShape& m) {
  return {SectionFunction::from(m.u), SectionFunction::from(m.t), SectionFunction::from(m.ms),
          SectionFunction::from(m.v)};
}

SectionalImage apply_sectional_operators(const SectionPair& pr, const Material& mat, Real omega,
                                         const SectionGrid& grid) {
  const Real l2 = mat.lp2(), lam = mat.lambda, mu = mat.mu, w2 = omega * omega;
  const Real c = 4 * mu * (lam + mu) / l2;
  const auto n = grid.size();
  SectionalImage im{VecC(n), VecC(n), VecC(n), VecC(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const Real z = grid.nodes(i);
    const Complex y1 = pr.y1.f(z), y2 = pr.y2.f(z);
    im.f1(i) = -y1 / l2 - lam / l2 * pr.y2.df(z);
    im.f2(i) = lam / l2 * pr.y1.df(z) - w2 * y2 - c * pr.y2.d2f(z);
    im.g1(i) = w2 * pr.x1.f(z) + pr.x2.df(z);
    im.g2(i) = -pr.x1.df(z) + pr.x2.f(z) / mu;
  }
  return im;
}

Complex boundary_b2(const SectionPair& pr, const Material& mat, Real z) {
  const Real l2 = mat.lp2();
  return -mat.lambda / l2 * pr.y1.f(z) + 4 * mat.mu * (mat.lambda + mat.mu) / l2 * pr.y2.df(z);
}

Real eigen_residual(const ModeShape& m, const Material& mat, const SectionGrid& grid) {
  const SectionalImage im = apply_sectional_operators(SectionPair::from(m), mat, m.root.omega, grid);
  const ModeSamples s = sample_mode(m, grid);
  const Complex ik = kI * m.root.k;
  Real num = 0, den = 0;
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    num = std::max({num, std::abs(im.f1(i) - ik * s.u(i)), std::abs(im.f2(i) - ik * s.t(i)),
                    std::abs(im.g1(i) - ik * s.ms(i)), std::abs(im.g2(i) - ik * s.v(i))});
    den = std::max({den, std::abs(ik * s.u(i)), std::abs(ik * s.t(i)), std::abs(ik * s.ms(i)),
                    std::abs(ik * s.v(i))});
  }
  return den > 0 ? num / den : num;
}

void write_profile_csv(std::ostream& os, const ModeShape& m, const SectionGrid& grid) {
  os << "z,re_u,im_u,re_v,im_v,re_s,im_s,re_t,im_t,re_r,im_r\n";
  os << std::setprecision(17);
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    const Real z = grid.nodes(i);
    const ModeValues mv = m.eval(z);
    const Complex s = -mv.ms, r = m.r(z);
    os << z << ',' << mv.u.real() << ',' << mv.u.imag() << ',' << mv.v.real() << ',' << mv.v.imag() << ','
       << s.real() << ',' << s.imag() << ',' << mv.t.real() << ',' << mv.t.imag() << ',' << r.real() << ','
       << r.imag() << '\n';
  }
}

}  // namespace lamb
