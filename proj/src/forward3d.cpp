#include "lamb/forward3d.hpp"

#include "lamb/fft.hpp"
#include "lamb/special.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <ostream>

namespace lamb {

PlaneGrid centered_plane(Eigen::Index n, Real half_width) {
  if (n < 2 || !(half_width > 0)) throw InvalidArgument("centered_plane: need n >= 2 and a positive width");
  const Real d = 2 * half_width / static_cast<Real>(n - 1);
  PlaneGrid g;
  g.x = {-half_width, d, n};
  g.y = g.x;
  return g;
}

// ---- sources ---------------------------------------------------------------

SourceSpec3D SourceSpec3D::sample(const Source3D& src, const PlaneGrid& plane, Real h, int order) {
  SourceSpec3D s;
  s.plane = plane;
  s.h = h;
  s.sec = gauss_section(order, h);
  const Eigen::Index nx = plane.x.n, ny = plane.y.n, nq = s.sec.size();
  s.f1.assign(nq, MatC::Zero(nx, ny));
  s.f2 = s.f1;
  s.f3 = s.f1;
  for (auto& m : s.top) m = MatC::Zero(nx, ny);
  for (auto& m : s.bot) m = MatC::Zero(nx, ny);
  for (Eigen::Index j = 0; j < ny; ++j)
    for (Eigen::Index i = 0; i < nx; ++i) {
      const Real x = plane.x.at(i), y = plane.y.at(j);
      if (src.f)
        for (Eigen::Index q = 0; q < nq; ++q) {
          const Vec3c f = src.f(x, y, s.sec.nodes(q));
          s.f1[q](i, j) = f[0];
          s.f2[q](i, j) = f[1];
          s.f3[q](i, j) = f[2];
        }
      if (src.top) {
        const Vec3c b = src.top(x, y);
        for (int c = 0; c < 3; ++c) s.top[c](i, j) = b[c];
      }
      if (src.bot) {
        const Vec3c b = src.bot(x, y);
        for (int c = 0; c < 3; ++c) s.bot[c](i, j) = b[c];
      }
    }
  s.validate();
  return s;
}

void SourceSpec3D::validate() const {
  if (std::abs(plane.x.dx - plane.y.dx) > 1e-12 * plane.x.dx) throw InvalidArgument("SourceSpec3D: cells must be square");
  const Eigen::Index nx = plane.x.n, ny = plane.y.n, m = 8;
  if (nx < 2 * m + 2 || ny < 2 * m + 2) throw InvalidArgument("SourceSpec3D: plane grid too small");
  auto check = [&](const MatC& a) {
    if (a.rows() != nx || a.cols() != ny) throw InvalidArgument("SourceSpec3D: sample shape mismatch");
    if (!a.allFinite()) throw InvalidArgument("SourceSpec3D: non-finite sample");
    const Real frame = std::max({a.topRows(m).cwiseAbs().maxCoeff(), a.bottomRows(m).cwiseAbs().maxCoeff(),
                                 a.leftCols(m).cwiseAbs().maxCoeff(), a.rightCols(m).cwiseAbs().maxCoeff()});
    if (frame != 0.0) throw InvalidArgument("SourceSpec3D: source support within 8 cells of the plane edge");
  };
  for (const auto* v : {&f1, &f2, &f3})
    for (const auto& a : *v) check(a);
  for (const auto& a : top) check(a);
  for (const auto& a : bot) check(a);
}

// ---- spectral planar calculus ---------------------------------------------------

namespace {

MatC pad2(const MatC& a) {
  MatC p = MatC::Zero(2 * a.rows(), 2 * a.cols());
  p.topLeftCorner(a.rows(), a.cols()) = a;
  return p;
}

MatC crop(const MatC& a, Eigen::Index nx, Eigen::Index ny) { return a.topLeftCorner(nx, ny); }

}  // namespace

MatC div2_periodic(const PlanarPair& f, Real d) { return spectral_dx(f.x, d) + spectral_dy(f.y, d); }
MatC curl2_periodic(const PlanarPair& f, Real d) { return spectral_dx(f.y, d) - spectral_dy(f.x, d); }

MatC div2(const PlanarPair& f, Real d) {
  return crop(div2_periodic({pad2(f.x), pad2(f.y)}, d), f.x.rows(), f.x.cols());
}
MatC curl2(const PlanarPair& f, Real d) {
  return crop(curl2_periodic({pad2(f.x), pad2(f.y)}, d), f.x.rows(), f.x.cols());
}

HHDPair hhd_periodic(const PlanarPair& f, Real d) {
  MatC fx = f.x, fy = f.y;
  fft2_inplace(fx, false);
  fft2_inplace(fy, false);
  const VecR kx = fft_wavenumbers(fx.rows(), d), ky = fft_wavenumbers(fx.cols(), d);
  MatC dx(fx.rows(), fx.cols()), dy(fx.rows(), fx.cols());
  for (Eigen::Index j = 0; j < fx.cols(); ++j)
    for (Eigen::Index i = 0; i < fx.rows(); ++i) {
      const Real k2 = kx(i) * kx(i) + ky(j) * ky(j);
      if (k2 == 0) {  // mean (and Nyquist) modes go to the curl-free part
        dx(i, j) = fx(i, j);
        dy(i, j) = fy(i, j);
        continue;
      }
      const Complex kd = (kx(i) * fx(i, j) + ky(j) * fy(i, j)) / k2;
      dx(i, j) = kx(i) * kd;
      dy(i, j) = ky(j) * kd;
    }
  HHDPair out;
  out.c.x = fx - dx;
  out.c.y = fy - dy;
  fft2_inplace(dx, true);
  fft2_inplace(dy, true);
  fft2_inplace(out.c.x, true);
  fft2_inplace(out.c.y, true);
  out.d = {std::move(dx), std::move(dy)};
  return out;
}

HHDPair hhd(const PlanarPair& f, Real d) {
  const Eigen::Index nx = f.x.rows(), ny = f.x.cols();
  HHDPair p = hhd_periodic({pad2(f.x), pad2(f.y)}, d);
  return {{crop(p.d.x, nx, ny), crop(p.d.y, nx, ny)}, {crop(p.c.x, nx, ny), crop(p.c.y, nx, ny)}};
}

std::pair<LambRhs, ShRhs> decouple(const SourceSpec3D& src) {
  src.validate();
  const Real d = src.plane.x.dx;
  LambRhs L;
  ShRhs S;
  L.plane = S.plane = src.plane;
  L.h = S.h = src.h;
  L.sec = S.sec = src.sec;
  for (Eigen::Index q = 0; q < src.sec.size(); ++q) {
    const PlanarPair f{src.f1[q], src.f2[q]};
    const HHDPair p = hhd(f, d);
    L.div_f.push_back(div2(f, d));
    L.f3.push_back(src.f3[q]);
    L.f_curl_free.push_back(p.d);
    S.curl_f.push_back(curl2(f, d));
    S.f_div_free.push_back(p.c);
  }
  const PlanarPair bt{src.top[0], src.top[1]}, bb{src.bot[0], src.bot[1]};
  const HHDPair pt = hhd(bt, d), pb = hhd(bb, d);
  L.div_top = div2(bt, d);
  L.div_bot = div2(bb, d);
  L.b3_top = src.top[2];
  L.b3_bot = src.bot[2];
  L.b_top_curl_free = pt.d;
  L.b_bot_curl_free = pb.d;
  S.curl_top = curl2(bt, d);
  S.curl_bot = curl2(bb, d);
  S.b_top_div_free = pt.c;
  S.b_bot_div_free = pb.c;
  return {std::move(L), std::move(S)};
}

// ---- kernels ---------------------------------------------------------------------

Real sh_profile(int n, Real z, Real h, int derivative) {
  if (n == 0) return derivative == 0 ? 1.0 / std::sqrt(2 * h) : 0.0;
  const Real a = n * kPi / (2 * h), arg = a * (z + h), s = 1.0 / std::sqrt(h);
  switch (derivative) {
    case 0: return s * std::cos(arg);
    case 1: return -s * a * std::sin(arg);
    case 2: return -s * a * a * std::cos(arg);
    default: throw InvalidArgument("sh_profile: derivative order 0..2");
  }
}

Complex sh_wavenumber(int n, Real omega, const Material& mat) {
  const Real a = n * kPi / (2 * mat.h);
  const Real k2 = omega * omega / mat.mu - a * a;
  return k2 >= 0 ? Complex(std::sqrt(k2), 0.0) : Complex(0.0, std::sqrt(-k2));
}

namespace {

Complex g1_point(Complex k, Real rho) { return -0.25 * kI * hankel0_first_kind(k * rho); }
// radial derivative of G1
Complex g1_radial(Complex k, Real rho) { return 0.25 * kI * k * hankel1_first_kind(k * rho); }
// (1/rho) * integral_0^rho G1(s) s ds
Complex g1_flux(Complex k, Real rho) {
  return -0.25 * kI * (hankel1_first_kind(k * rho) / k + 2.0 * kI / (kPi * k * k * rho));
}

struct EdgeRule {
  VecR x, w;
  EdgeRule() { gauss_legendre(24, x, w); }
};
const EdgeRule& edge_rule() {
  static const EdgeRule r;
  return r;
}

// Exact cell averages by the divergence theorem: G1 = div(P(rho) e_rho) and
// grad G1 integrates to the boundary flux of G1.
void cell_exact(Complex k, Real X, Real Y, Real d, Complex& g1, Complex& g2x, Complex& g2y) {
  const EdgeRule& r = edge_rule();
  const Real a = 0.5 * d;
  Complex s1 = 0, sx = 0, sy = 0;
  for (Eigen::Index q = 0; q < r.x.size(); ++q) {
    const Real t = a * r.x(q), w = a * r.w(q);
    // right and left edges (normal +-x)
    for (int side : {1, -1}) {
      const Real x = X + side * a, y = Y + t, rho = std::hypot(x, y);
      s1 += w * g1_flux(k, rho) * (side * x / rho);
      sx += w * side * g1_point(k, rho);
    }
    // top and bottom edges (normal +-y)
    for (int side : {1, -1}) {
      const Real x = X + t, y = Y + side * a, rho = std::hypot(x, y);
      s1 += w * g1_flux(k, rho) * (side * y / rho);
      sy += w * side * g1_point(k, rho);
    }
  }
  g1 = s1 / (d * d);
  g2x = sx / (d * d);
  g2y = sy / (d * d);
}

}  // namespace

KernelSet cell_averaged_kernels(Complex k, Real d, Eigen::Index n) {
  if (std::abs(k) == 0) throw SingularArgument("cell_averaged_kernels: k = 0");
  KernelSet K;
  K.n = n;
  const Eigen::Index m = 2 * n - 1, c = n - 1;
  K.g1 = MatC::Zero(m, m);
  K.g2x = K.g1;
  K.g2y = K.g1;
  const Real kd = std::abs(k) * d;
  const Complex taylor = 1.0 - k * k * d * d / 24.0;
  for (Eigen::Index j = 0; j <= c; ++j)
    for (Eigen::Index i = 0; i <= c; ++i) {
      const Real X = i * d, Y = j * d, rho = std::hypot(X, Y);
      if (k.imag() * rho > 700) continue;  // underflow
      Complex g1, gx, gy;
      const bool exact = std::max(i, j) <= 2 || (kd > 0.5 && k.imag() * rho < 40);
      if (exact) {
        cell_exact(k, X, Y, d, g1, gx, gy);
      } else {
        const Complex gr = g1_radial(k, rho);
        g1 = g1_point(k, rho) * taylor;
        gx = gr * (X / rho) * taylor;
        gy = gr * (Y / rho) * taylor;
      }
      for (int sx : {1, -1})
        for (int sy : {1, -1}) {
          if ((i == 0 && sx < 0) || (j == 0 && sy < 0)) continue;
          K.g1(c + sx * i, c + sy * j) = g1;
          K.g2x(c + sx * i, c + sy * j) = static_cast<Real>(sx) * gx;
          K.g2y(c + sx * i, c + sy * j) = static_cast<Real>(sy) * gy;
        }
    }
  K.g2x.row(c).setZero();  // odd in x
  K.g2y.col(c).setZero();
  return K;
}

Real kernel_l1_norm(Complex k, Real r, int power) {
  VecR x, w;
  gauss_legendre(16, x, w);
  const int panels = std::max(32, static_cast<int>(std::ceil(4 * std::abs(k) * r)));
  const Real hp = r / panels;
  auto panel = [&](Real a, Real b) {
    Real s = 0;
    for (Eigen::Index q = 0; q < x.size(); ++q) {
      const Real rho = 0.5 * (a + b) + 0.5 * (b - a) * x(q);
      s += 0.5 * (b - a) * w(q) * std::abs(g1_point(k, rho)) * 2 * kPi * rho;
    }
    return s;
  };
  Real total = 0;
  // geometric grading into the log singularity at the origin
  for (Real b = hp; b > 1e-14 * hp; b *= 0.25) total += panel(0.25 * b, b);
  for (int p = 1; p < panels; ++p) total += panel(p * hp, (p + 1) * hp);
  return total * std::pow(std::abs(k), power);
}

// ---- circular convolution engine ------------------------------------------------

namespace {

class Convolver {
 public:
  Convolver(Eigen::Index n, Real d) : n_(n), P_(good_fft_size(2 * n - 1)), area_(d * d) {}

  MatC kernel(const MatC& k) const {
    MatC a = MatC::Zero(P_, P_);
    const Eigen::Index c = n_ - 1;
    for (Eigen::Index j = 0; j < k.cols(); ++j)
      for (Eigen::Index i = 0; i < k.rows(); ++i) a(wrap(i - c), wrap(j - c)) = k(i, j);
    fft2_inplace(a, false);
    return a;
  }
  MatC source(const MatC& s) const {
    MatC a = MatC::Zero(P_, P_);
    a.topLeftCorner(n_, n_) = s;
    fft2_inplace(a, false);
    return a;
  }
  MatC back(MatC spec) const {
    fft2_inplace(spec, true);
    return area_ * spec.topLeftCorner(n_, n_);
  }

 private:
  Eigen::Index wrap(Eigen::Index o) const { return o < 0 ? o + P_ : o; }
  Eigen::Index n_, P_;
  Real area_;
};

template <typename Prof>
MatC project(const std::vector<MatC>& interior, const MatC& top, const MatC& bot, const SectionGrid& sec, Real h,
             Prof prof) {
  MatC acc = top * prof(h) + bot * prof(-h);
  for (Eigen::Index q = 0; q < sec.size(); ++q)
    if (sec.weights(q) != 0) acc += (sec.weights(q) * prof(sec.nodes(q))) * interior[q];
  return acc;
}

PlanarPair project_pair(const std::vector<PlanarPair>& interior, const PlanarPair& top, const PlanarPair& bot,
                        const SectionGrid& sec, Real h, const auto& prof) {
  std::vector<MatC> ix, iy;
  for (const auto& p : interior) {
    ix.push_back(p.x);
    iy.push_back(p.y);
  }
  return {project(ix, top.x, bot.x, sec, h, prof), project(iy, top.y, bot.y, sec, h, prof)};
}

void check_square(const PlaneGrid& g) {
  if (g.x.n != g.y.n || std::abs(g.x.dx - g.y.dx) > 1e-12 * g.x.dx)
    throw InvalidArgument("forward3d: the plane grid must be square with square cells");
}

}  // namespace

ShSolution solve_sh(const ShRhs& rhs, Real omega, const Material& mat, int n_modes, const VecR& z_eval) {
  mat.validate();
  check_square(rhs.plane);
  if (n_modes < 1) throw InvalidArgument("solve_sh: n_modes must be positive");
  const Real h = mat.h, d = rhs.plane.x.dx;
  const Eigen::Index n = rhs.plane.x.n;
  ShSolution out;
  for (int m = 0; m < n_modes; ++m) {
    const Complex kap = sh_wavenumber(m, omega, mat);
    if (std::abs(kap) * h < kCriticalThreshold) {
      CriticalReport rep;
      rep.omega = omega;
      rep.is_critical = true;
      rep.offenders.push_back({ModeFamily::ShearHorizontal, kap, 0.0, 0.0});
      throw CriticalFrequency(rep);
    }
    out.kappa.push_back(kap);
  }
  const Convolver cv(n, d);
  for (int m = 0; m < n_modes; ++m) {
    const Complex kap = out.kappa[m];
    auto phi = [&](Real z) { return sh_profile(m, z, h); };
    const MatC F = project(rhs.curl_f, rhs.curl_top, rhs.curl_bot, rhs.sec, h, phi) / mat.mu;
    PlanarPair g = project_pair(rhs.f_div_free, rhs.b_top_div_free, rhs.b_bot_div_free, rhs.sec, h, phi);
    g.x /= mat.mu;
    g.y /= mat.mu;
    const KernelSet K = cell_averaged_kernels(kap, d, n);
    const MatC Fs = cv.source(F);
    // beta_n = -G * F ; C_n = -(g - rot(grad G * F)) / kappa^2 with rot(a, b) = (-b, a)
    MatC beta = -cv.back(cv.kernel(K.g1).cwiseProduct(Fs));
    const MatC gx = cv.back(cv.kernel(K.g2x).cwiseProduct(Fs));
    const MatC gy = cv.back(cv.kernel(K.g2y).cwiseProduct(Fs));
    const Complex s = -1.0 / (kap * kap);
    out.C.push_back({s * (g.x + gy), s * (g.y - gx)});
    out.beta_n.push_back(std::move(beta));
  }
  for (Eigen::Index iz = 0; iz < z_eval.size(); ++iz) {
    MatC b = MatC::Zero(n, n);
    for (int m = 0; m < n_modes; ++m) b += sh_profile(m, z_eval(iz), h) * out.beta_n[m];
    out.beta.push_back(std::move(b));
  }
  return out;
}

LambSolution solve_lamb3d(const LambRhs& rhs, Real omega, const Material& mat, int n_modes, const VecR& z_eval) {
  mat.validate();
  check_square(rhs.plane);
  const Real h = mat.h, d = rhs.plane.x.dx;
  const Eigen::Index n = rhs.plane.x.n;
  LambSolution out;
  for (const ModeRoot& r : find_roots(omega, mat, n_modes)) out.modes.push_back(make_mode(r, mat));
  const Convolver cv(n, d);
  for (const ModeShape& mode : out.modes) {
    const Complex k = mode.root.k, J = mode.root.jn;
    auto un = [&](Real z) { return mode.u(z); };
    auto vn = [&](Real z) { return mode.v(z); };
    const MatC F1 = project(rhs.div_f, rhs.div_top, rhs.div_bot, rhs.sec, h, un) / J;
    const MatC F3 = project(rhs.f3, rhs.b3_top, rhs.b3_bot, rhs.sec, h, vn) / J;
    PlanarPair g = project_pair(rhs.f_curl_free, rhs.b_top_curl_free, rhs.b_bot_curl_free, rhs.sec, h, un);
    g.x /= J;
    g.y /= J;
    const KernelSet K = cell_averaged_kernels(k, d, n);
    const MatC G1 = cv.kernel(K.g1);
    const MatC S1 = cv.source(F1), S3 = cv.source(F3);
    const MatC mixA = cv.source(MatC((kI / k) * F1 + F3));
    // b = G * (F1 - i k F3); a = G * (i k F1 + k^2 F3) - F3
    out.b.push_back(cv.back(G1.cwiseProduct(S1 - kI * k * S3)));
    out.a.push_back(cv.back(G1.cwiseProduct(kI * k * S1 + k * k * S3)) - F3);
    // A = (i/k) g - grad G * ((i/k) F1 + F3)
    const MatC ax = cv.back(cv.kernel(K.g2x).cwiseProduct(mixA));
    const MatC ay = cv.back(cv.kernel(K.g2y).cwiseProduct(mixA));
    out.A.push_back({(kI / k) * g.x - ax, (kI / k) * g.y - ay});
  }
  for (Eigen::Index iz = 0; iz < z_eval.size(); ++iz) {
    MatC al = MatC::Zero(n, n), w = MatC::Zero(n, n);
    for (size_t m = 0; m < out.modes.size(); ++m) {
      al += out.modes[m].u(z_eval(iz)) * out.a[m];
      w += out.modes[m].v(z_eval(iz)) * out.b[m];
    }
    out.alpha.push_back(std::move(al));
    out.w.push_back(std::move(w));
  }
  return out;
}

Wavefield3D assemble3d(LambSolution lamb, ShSolution sh, const PlaneGrid& plane, const VecR& z_eval, Real omega) {
  Wavefield3D W;
  W.plane = plane;
  W.z = z_eval;
  W.omega = omega;
  W.n_modes = static_cast<int>(lamb.modes.size());
  const Eigen::Index n = plane.x.n;
  const Real h = lamb.modes.empty() ? 0 : lamb.modes.front().h;
  for (Eigen::Index iz = 0; iz < z_eval.size(); ++iz) {
    const Real z = z_eval(iz);
    MatC u = MatC::Zero(n, n), v = u, us = u, vs = u;
    for (size_t m = 0; m < lamb.modes.size(); ++m) {
      const Complex un = lamb.modes[m].u(z);
      u += un * lamb.A[m].x;
      v += un * lamb.A[m].y;
    }
    for (size_t m = 0; m < sh.C.size(); ++m) {
      const Real p = sh_profile(static_cast<int>(m), z, h);
      us += p * sh.C[m].x;
      vs += p * sh.C[m].y;
    }
    W.u.push_back(u + us);
    W.v.push_back(v + vs);
    W.u_sh.push_back(std::move(us));
    W.v_sh.push_back(std::move(vs));
  }
  W.w = lamb.w;
  W.alpha = lamb.alpha;
  W.beta = sh.beta;
  W.lamb = std::move(lamb);
  W.sh = std::move(sh);
  return W;
}

Wavefield3D solve3d(const SourceSpec3D& src, Real omega, const Material& mat, int n_modes, const VecR& z_eval) {
  if (std::abs(src.h - mat.h) > 1e-14 * mat.h) throw InvalidArgument("solve3d: source and material thickness differ");
  const auto [L, S] = decouple(src);
  ShSolution sh = solve_sh(S, omega, mat, n_modes, z_eval);
  LambSolution lb = solve_lamb3d(L, omega, mat, n_modes, z_eval);
  return assemble3d(std::move(lb), std::move(sh), src.plane, z_eval, omega);
}

void write_field3d_binary(std::ostream& os, const Wavefield3D& W) {
  auto put = [&](const auto& v) { os.write(reinterpret_cast<const char*>(&v), sizeof(v)); };
  os.write("LAMB3D\0\0", 8);
  put(std::uint32_t{1});
  put(static_cast<std::int64_t>(W.plane.x.n));
  put(static_cast<std::int64_t>(W.plane.y.n));
  put(static_cast<std::int64_t>(W.z.size()));
  put(W.plane.x.x0);
  put(W.plane.x.dx);
  put(W.plane.y.x0);
  put(W.plane.y.dx);
  put(W.omega);
  put(static_cast<std::int32_t>(W.n_modes));
  const std::vector<std::pair<const char*, const std::vector<MatC>*>> comps{
      {"u", &W.u}, {"v", &W.v}, {"w", &W.w}, {"alpha", &W.alpha}, {"beta", &W.beta}};
  put(static_cast<std::uint32_t>(comps.size()));
  for (const auto& [name, _] : comps) {
    char buf[8] = {};
    std::memcpy(buf, name, std::min<size_t>(std::strlen(name), 8));
    os.write(buf, 8);
  }
  for (Eigen::Index i = 0; i < W.z.size(); ++i) put(W.z(i));
  for (const auto& [_, field] : comps)
    for (const MatC& level : *field)
      for (Eigen::Index j = 0; j < level.cols(); ++j)
        for (Eigen::Index i = 0; i < level.rows(); ++i) {
          put(level(i, j).real());
          put(level(i, j).imag());
        }
}

namespace {
// Five-point Laplacian at interior node (i, j).
Complex lap5(const MatC& a, Eigen::Index i, Eigen::Index j, Real d) {
  return (a(i + 1, j) + a(i - 1, j) + a(i, j + 1) + a(i, j - 1) - 4.0 * a(i, j)) / (d * d);
}
}  // namespace

DecoupledResiduals decoupled_residuals(const Wavefield3D& W, const Material& m, Real z0, Real rmin, Real rmax, int stride) {
  const PlaneGrid& g = W.plane;
  const Real d = g.x.dx, w2 = W.omega * W.omega, l2 = m.lp2();
  Real r1 = 0, r2 = 0, r3 = 0, s1 = 0, s2 = 0, s3 = 0;
  for (Eigen::Index j = 1; j + 1 < g.y.n; j += stride)
    for (Eigen::Index i = 1; i + 1 < g.x.n; i += stride) {
      const Real x = g.x.at(i), y = g.y.at(j);
      if (std::hypot(x, y) < rmin || std::abs(x) > rmax || std::abs(y) > rmax) continue;
      Complex e1 = 0, e2 = 0, e3 = 0, al = 0, w = 0, be = 0;
      for (size_t n = 0; n < W.lamb.modes.size(); ++n) {
        const ModeShape& md = W.lamb.modes[n];
        const TrigProfile du = md.u.derivative(), ddu = du.derivative(), dv = md.v.derivative(),
                          ddv = dv.derivative();
        const MatC& a = W.lamb.a[n];
        const MatC& b = W.lamb.b[n];
        const Complex la = lap5(a, i, j, d), lb = lap5(b, i, j, d);
        e1 += l2 * la * md.u(z0) + m.mu * a(i, j) * ddu(z0) + w2 * a(i, j) * md.u(z0) + (m.lambda + m.mu) * lb * dv(z0);
        e2 += (m.lambda + m.mu) * a(i, j) * du(z0) + l2 * b(i, j) * ddv(z0) + m.mu * lb * md.v(z0) +
              w2 * b(i, j) * md.v(z0);
        al += a(i, j) * md.u(z0);
        w += b(i, j) * md.v(z0);
      }
      for (size_t n = 0; n < W.sh.beta_n.size(); ++n) {
        const int nn = static_cast<int>(n);
        const MatC& b = W.sh.beta_n[n];
        e3 += m.mu * lap5(b, i, j, d) * sh_profile(nn, z0, m.h) + m.mu * b(i, j) * sh_profile(nn, z0, m.h, 2) +
              w2 * b(i, j) * sh_profile(nn, z0, m.h);
        be += b(i, j) * sh_profile(nn, z0, m.h);
      }
      r1 = std::max(r1, std::abs(e1));
      r2 = std::max(r2, std::abs(e2));
      r3 = std::max(r3, std::abs(e3));
      s1 = std::max(s1, w2 * std::abs(al));
      s2 = std::max(s2, w2 * std::abs(w));
      s3 = std::max(s3, w2 * std::abs(be));
    }
  return {r1 / s1, r2 / s2, s3 > 0 ? r3 / s3 : 0.0};
}


}  // namespace lamb
