#include "lamb/fd.hpp"

#include "lamb/modes.hpp"

#include <Eigen/LU>
#include <Eigen/SparseCore>

#include <cmath>

namespace lamb {

Complex PMLProfile::gamma(Real x) const {
  if (x > right) return {1.0, slope * (x - right)};
  if (x < left) return {1.0, slope * (left - x)};
  return 1.0;
}

FDGrid FDGrid::make(Real xa, Real xb, Real h, Real d, PMLProfile pml) {
  FDGrid g;
  g.xa = xa;
  g.xb = xb;
  g.h = h;
  g.dx = d;
  g.nz = static_cast<int>(std::lround(2 * h / d));
  g.pml = pml;
  g.validate();
  return g;
}

Real FDGrid::map_a(Real x) const { return defect ? h * (defect->g1_at(x) + defect->g2_at(x)) : 0.0; }
Real FDGrid::map_b(Real x) const { return defect ? 1 + defect->g1_at(x) - defect->g2_at(x) : 1.0; }
Real FDGrid::map_da(Real x) const { return defect ? h * (defect->dg1(x) + defect->dg2(x)) : 0.0; }
Real FDGrid::map_db(Real x) const { return defect ? defect->dg1(x) - defect->dg2(x) : 0.0; }
Real FDGrid::z(int i, int j) const { return map_a(x(i)) + map_b(x(i)) * zeta(j); }

void FDGrid::validate() const {
  if (!(dx > 0) || !(h > 0) || !(xb > xa)) throw InvalidArgument("FDGrid: bad extents");
  if (std::abs(2 * h / dx - nz) > 1e-8 * nz || nz < 2) throw InvalidArgument("FDGrid: 2h/dx must be an integer >= 2");
  const Real nxr = (xb - xa) / dx;
  if (std::abs(nxr - std::round(nxr)) > 1e-8 * nxr || nx() < 4) throw InvalidArgument("FDGrid: (xb-xa)/dx must be an integer >= 4");
  if (defect) {
    defect->validate();
    const auto [lo, hi] = defect->support();
    if (hi > lo && (pml.active(lo) || pml.active(hi)))
      throw InvalidArgument("FDGrid: defect overlaps the absorbing layer");
  }
}

FDSource FDSource::from(const Source2D& s) { return {s.f, s.top, s.bot}; }

namespace {

// Block-tridiagonal operator of one interior column i (1 <= i <= nx-1):
// lower couples column i-1, upper column i+1.
struct ColumnBlocks {
  MatC diag;
  Eigen::SparseMatrix<Complex> lower, upper;
  VecC rhs;
};

struct Assembler {
  const FDGrid& g;
  const Material& mat;
  Real omega;
  const FDSource* src;
  int m;  // unknowns per column: (u, v) at nz + 1 nodes, interleaved

  int idx(int j, int comp) const { return 2 * j + comp; }

  // derivative stencil entries: (di, dj, weight)
  struct St {
    int di, dj;
    Real w;
  };
  using Stencil = std::vector<St>;

  // one-sided or central d/dzeta at row j of a column, as (dj, w) pairs
  std::vector<std::pair<int, Real>> dzeta_at_row(int j) const {
    const Real d = g.dx;
    if (j == 0) return {{0, -1.5 / d}, {1, 2.0 / d}, {2, -0.5 / d}};
    if (j == g.nz) return {{0, 1.5 / d}, {-1, -2.0 / d}, {-2, 0.5 / d}};
    return {{1, 0.5 / d}, {-1, -0.5 / d}};
  }

  // stress rows (s, t, r) as coefficients of (u_xi, u_zeta, v_xi, v_zeta)
  struct Stress {
    std::array<Complex, 4> s, t, r;
  };
  Stress stress(Complex gam, Real b, Real cc) const {
    const Real lam = mat.lambda, mu = mat.mu, l2 = mat.lp2();
    const std::array<Complex, 4> ux{1.0 / gam, -cc / (gam * b), 0.0, 0.0};
    const std::array<Complex, 4> uz{0.0, 1.0 / b, 0.0, 0.0};
    const std::array<Complex, 4> vx{0.0, 0.0, 1.0 / gam, -cc / (gam * b)};
    const std::array<Complex, 4> vz{0.0, 0.0, 0.0, 1.0 / b};
    Stress S;
    for (int k = 0; k < 4; ++k) {
      S.s[k] = l2 * ux[k] + lam * vz[k];
      S.t[k] = mu * (uz[k] + vx[k]);
      S.r[k] = lam * ux[k] + l2 * vz[k];
    }
    return S;
  }

  // Adds scale * (flux row F . (u_xi, u_zeta, v_xi, v_zeta)) to equation row `row`.
  template <typename Sink>
  void add_flux(Sink& sink, int i, int j, int row, Complex scale, const std::array<Complex, 4>& F,
                const Stencil& sxi, const Stencil& sze) const {
    for (int k = 0; k < 4; ++k) {
      if (F[k] == Complex(0)) continue;
      const int comp = k < 2 ? 0 : 1;
      const Stencil& st = (k % 2 == 0) ? sxi : sze;
      for (const St& e : st) sink(row, i + e.di, idx(j + e.dj, comp), scale * F[k] * e.w);
    }
  }

  template <typename Sink>
  void column(int i, Sink& sink, VecC& rhs) const {
    const Real d = g.dx, x = g.x(i);
    const Complex gi = g.pml.gamma(x);
    const Real bi = g.map_b(x), dai = g.map_da(x), dbi = g.map_db(x);
    rhs = VecC::Zero(m);
    for (int j = 0; j <= g.nz; ++j) {
      const bool top = j == g.nz, bot = j == 0;
      const Real zeta = g.zeta(j);
      // x-fluxes at i +- 1/2
      for (int side : {1, -1}) {
        const Real xh = x + 0.5 * side * d;
        const Complex gh = g.pml.gamma(xh);
        const Real bh = g.map_b(xh), cc = g.map_da(xh) + g.map_db(xh) * zeta;
        const Stress S = stress(gh, bh, cc);
        Stencil sxi = side > 0 ? Stencil{{1, 0, 1.0 / d}, {0, 0, -1.0 / d}} : Stencil{{0, 0, 1.0 / d}, {-1, 0, -1.0 / d}};
        Stencil sze;
        for (auto [dj, w] : dzeta_at_row(j)) {
          sze.push_back({0, dj, 0.5 * w});
          sze.push_back({side, dj, 0.5 * w});
        }
        std::array<Complex, 4> F1, F2;
        for (int k = 0; k < 4; ++k) {
          F1[k] = bh * S.s[k];
          F2[k] = bh * S.t[k];
        }
        const Real sc = side / d;
        add_flux(sink, i, j, idx(j, 0), sc, F1, sxi, sze);
        add_flux(sink, i, j, idx(j, 1), sc, F2, sxi, sze);
      }
      // z-fluxes at j +- 1/2 (only the ones inside the section)
      for (int side : {1, -1}) {
        if ((top && side > 0) || (bot && side < 0)) continue;
        const Real cc = dai + dbi * (zeta + 0.5 * side * d);
        const Stress S = stress(gi, bi, cc);
        Stencil sze = side > 0 ? Stencil{{0, 1, 1.0 / d}, {0, 0, -1.0 / d}} : Stencil{{0, 0, 1.0 / d}, {0, -1, -1.0 / d}};
        Stencil sxi{{1, 0, 0.25 / d}, {-1, 0, -0.25 / d}, {1, side, 0.25 / d}, {-1, side, -0.25 / d}};
        std::array<Complex, 4> F1, F2;
        for (int k = 0; k < 4; ++k) {
          F1[k] = gi * S.t[k] - cc * S.s[k];
          F2[k] = gi * S.r[k] - cc * S.t[k];
        }
        const Real sc = (top || bot ? 2.0 : 1.0) * side / d;
        add_flux(sink, i, j, idx(j, 0), sc, F1, sxi, sze);
        add_flux(sink, i, j, idx(j, 1), sc, F2, sxi, sze);
      }
      // mass and sources
      const Complex mass = gi * bi * omega * omega;
      sink(idx(j, 0), i, idx(j, 0), mass);
      sink(idx(j, 1), i, idx(j, 1), mass);
      if (src) {
        if (src->f) {
          const Vec2c f = src->f(x, g.map_a(x) + bi * zeta);
          rhs(idx(j, 0)) -= gi * bi * f[0];
          rhs(idx(j, 1)) -= gi * bi * f[1];
        }
        if (top && src->top) {
          const Vec2c b = src->top(x);
          rhs(idx(j, 0)) -= 2.0 / d * gi * b[0];
          rhs(idx(j, 1)) -= 2.0 / d * gi * b[1];
        }
        if (bot && src->bot) {
          // flux at the bottom is -gamma sigma.N
          const Vec2c b = src->bot(x);
          rhs(idx(j, 0)) -= 2.0 / d * gi * b[0];
          rhs(idx(j, 1)) -= 2.0 / d * gi * b[1];
        }
      }
    }
  }

  ColumnBlocks blocks(int i) const {
    ColumnBlocks cb;
    cb.diag = MatC::Zero(m, m);
    std::vector<Eigen::Triplet<Complex>> lo, up;
    const int nx = g.nx();
    auto sink = [&](int row, int ci, int col, Complex val) {
      if (ci <= 0 || ci >= nx) return;  // Dirichlet columns
      if (ci == i)
        cb.diag(row, col) += val;
      else if (ci == i - 1)
        lo.emplace_back(row, col, val);
      else
        up.emplace_back(row, col, val);
    };
    column(i, sink, cb.rhs);
    cb.lower.resize(m, m);
    cb.upper.resize(m, m);
    cb.lower.setFromTriplets(lo.begin(), lo.end());
    cb.upper.setFromTriplets(up.begin(), up.end());
    return cb;
  }
};

void check_pivots(const Eigen::PartialPivLU<MatC>& lu, int column) {
  const Real rc = lu.rcond();
  if (!(rc > 1e-15))
    throw SolverFailure("solve_fd: elimination block " + std::to_string(column) + " is singular", rc);
}

}  // namespace

void fd_section_amplitudes(const FDSolution& s, const Material& mat, int i, const ModeShape& mode, Complex& a,
                           Complex& b) {
  const FDGrid& g = s.grid;
  if (i < 1 || i >= g.nx()) throw InvalidArgument("fd_section_amplitudes: section must be an interior column");
  const Real d = g.dx;
  const int nz = g.nz;
  Complex xy = 0, yx = 0;
  for (int j = 0; j <= nz; ++j) {
    const Complex ux = (s.u(i + 1, j) - s.u(i - 1, j)) / (2 * d);
    const Complex vx = (s.v(i + 1, j) - s.v(i - 1, j)) / (2 * d);
    Complex uz, vz;
    if (j == 0) {
      uz = (-1.5 * s.u(i, 0) + 2.0 * s.u(i, 1) - 0.5 * s.u(i, 2)) / d;
      vz = (-1.5 * s.v(i, 0) + 2.0 * s.v(i, 1) - 0.5 * s.v(i, 2)) / d;
    } else if (j == nz) {
      uz = (1.5 * s.u(i, nz) - 2.0 * s.u(i, nz - 1) + 0.5 * s.u(i, nz - 2)) / d;
      vz = (1.5 * s.v(i, nz) - 2.0 * s.v(i, nz - 1) + 0.5 * s.v(i, nz - 2)) / d;
    } else {
      uz = (s.u(i, j + 1) - s.u(i, j - 1)) / (2 * d);
      vz = (s.v(i, j + 1) - s.v(i, j - 1)) / (2 * d);
    }
    const Complex sxx = mat.lp2() * ux + mat.lambda * vz;
    const Complex txz = mat.mu * (uz + vx);
    const Real z = g.zeta(j);
    const Real wz = (j == 0 || j == nz) ? 0.5 * d : d;
    xy += wz * (s.u(i, j) * mode.ms(z) + txz * mode.v(z));
    yx += wz * (-sxx * mode.u(z) + s.v(i, j) * mode.t(z));
  }
  a = xy / mode.root.jn;
  b = yx / mode.root.jn;
}

FDSolution solve_fd(const FDGrid& grid, const Material& mat, Real omega, const FDSource& src, const FDOptions& opt) {
  grid.validate();
  mat.validate();
  if (std::abs(grid.h - mat.h) > 1e-14 * mat.h) throw InvalidArgument("solve_fd: grid and material thickness differ");
  if (!(omega > 0)) throw InvalidArgument("solve_fd: omega must be positive");

  std::vector<ModeRoot> backward;
  if (opt.backward_mode_correction) {
    // refuses critical frequencies as a side effect
    for (const auto& r : find_roots(omega, mat, 12))
      if (r.kind == ModeKind::Propagative && r.k.real() < 0) backward.push_back(r);
  }

  const int nz = grid.nz, nx = grid.nx();
  const int m = 2 * (nz + 1);
  const int N = nx - 1;  // interior columns 1..nx-1 -> block rows 0..N-1
  Assembler as{grid, mat, omega, &src, m};

  const double per_block = 16.0 * m * m;
  const bool store_all = per_block * N <= opt.factor_memory_bytes;
  const int K = store_all ? N : std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(N)))));

  std::vector<VecC> z(N);
  std::vector<MatC> D(store_all ? N : 0);
  std::vector<MatC> ckpt;  // Schur complement at the start of each segment
  MatC S;
  ColumnBlocks cur = as.blocks(1);
  VecC y;
  for (int b = 0; b < N; ++b) {
    if (b == 0) {
      S = cur.diag;
      y = cur.rhs;
    }
    if (!store_all && b % K == 0) ckpt.push_back(S);
    Eigen::PartialPivLU<MatC> lu(S);
    check_pivots(lu, b + 1);
    z[b] = lu.solve(y);
    if (b + 1 < N) {
      MatC Db = lu.solve(MatC(cur.upper));
      ColumnBlocks next = as.blocks(b + 2);
      S = next.diag - next.lower * Db;
      y = next.rhs - next.lower * z[b];
      if (store_all) D[b] = std::move(Db);
      cur = std::move(next);
    }
  }

  std::vector<VecC> xs(N);
  xs[N - 1] = z[N - 1];
  if (store_all) {
    for (int b = N - 2; b >= 0; --b) xs[b] = z[b] - D[b] * xs[b + 1];
  } else {
    const int nseg = static_cast<int>(ckpt.size());
    std::vector<MatC> seg;
    for (int sgi = nseg - 1; sgi >= 0; --sgi) {
      const int b0 = sgi * K, b1 = std::min(N - 1, b0 + K) - 1;  // D needed for b0..b1 (b < N-1)
      if (b1 < b0) continue;
      seg.assign(b1 - b0 + 1, MatC());
      MatC Ss = ckpt[sgi];
      ColumnBlocks cb = as.blocks(b0 + 1);
      for (int b = b0; b <= b1; ++b) {
        Eigen::PartialPivLU<MatC> lu(Ss);
        seg[b - b0] = lu.solve(MatC(cb.upper));
        if (b < b1) {
          ColumnBlocks next = as.blocks(b + 2);
          Ss = next.diag - next.lower * seg[b - b0];
          cb = std::move(next);
        }
      }
      for (int b = b1; b >= b0; --b) xs[b] = z[b] - seg[b - b0] * xs[b + 1];
    }
  }

  FDSolution sol;
  sol.grid = grid;
  sol.omega = omega;
  sol.u = MatC::Zero(nx + 1, nz + 1);
  sol.v = MatC::Zero(nx + 1, nz + 1);
  for (int b = 0; b < N; ++b)
    for (int j = 0; j <= nz; ++j) {
      sol.u(b + 1, j) = xs[b](2 * j);
      sol.v(b + 1, j) = xs[b](2 * j + 1);
    }

  // Backward modes: the layers absorb the wrong member of the pair. Remove the
  // A-type content measured left of the sources and the B-type content measured
  // right of them (both are exact plane-wave modes in a straight strip).
  if (!backward.empty()) {
    const int iL = static_cast<int>(std::lround((opt.section_left - grid.xa) / grid.dx));
    const int iR = static_cast<int>(std::lround((opt.section_right - grid.xa) / grid.dx));
    if (iL < 1 || iR >= nx || grid.pml.active(grid.x(iL)) || grid.pml.active(grid.x(iR)))
      throw InvalidArgument("solve_fd: correction sections must lie in the physical window");
    for (const ModeRoot& r : backward) {
      const ModeShape mode = make_mode(r, mat);
      Complex aL, bL, aR, bR;
      fd_section_amplitudes(sol, mat, iL, mode, aL, bL);
      fd_section_amplitudes(sol, mat, iR, mode, aR, bR);
      const Complex AL = 0.5 * (aL + bL), BR = 0.5 * (aR - bR);
      const Real xL = grid.x(iL), xR = grid.x(iR);
      for (int i = 1; i < nx; ++i) {
        const Real x = grid.x(i);
        if (grid.pml.active(x)) continue;
        const Complex ea = AL * std::exp(kI * r.k * (x - xL)), eb = BR * std::exp(-kI * r.k * (x - xR));
        for (int j = 0; j <= nz; ++j) {
          const Real zz = grid.z(i, j);
          const Complex un = mode.u(zz), vn = mode.v(zz);
          sol.u(i, j) -= (ea + eb) * un;
          sol.v(i, j) -= (ea - eb) * vn;
        }
      }
      sol.corrected_k.push_back(r.k);
    }
  }
  return sol;
}

FDSource scattering_source(const ModeShape& inc, const DefectProfile& defect, const Material& mat) {
  const Real h = mat.h;
  const Complex k1 = inc.root.k;
  FDSource s;
  s.f = nullptr;
  s.top = [=](Real x) {
    const Real g1p = defect.dg1(x), zt = h * (1 + 2 * defect.g1_at(x));
    if (g1p == 0 && zt == h) return Vec2c{0.0, 0.0};
    const Complex e = std::exp(kI * k1 * x);
    const Complex s1 = -inc.ms(zt), t1 = inc.t(zt), r1 = inc.r(zt);
    const Real nx = -2 * h * g1p;
    return Vec2c{-e * (nx * s1 + t1), -e * (nx * t1 + r1)};
  };
  s.bot = [=](Real x) {
    const Real g2p = defect.dg2(x), zb = h * (-1 + 2 * defect.g2_at(x));
    if (g2p == 0 && zb == -h) return Vec2c{0.0, 0.0};
    const Complex e = std::exp(kI * k1 * x);
    const Complex s1 = -inc.ms(zb), t1 = inc.t(zb), r1 = inc.r(zb);
    const Real nx = 2 * h * g2p;
    return Vec2c{-e * (nx * s1 - t1), -e * (nx * t1 - r1)};
  };
  return s;
}

}  // namespace lamb
