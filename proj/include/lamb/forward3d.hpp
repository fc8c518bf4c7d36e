#pragma once
// 3D plate source problem: the in-plane divergence alpha and the vertical
// displacement w are expanded on Lamb modes, the in-plane curl beta on SH modes,
// and (u, v) follow from planar Helmholtz-Hodge splitting of the sources.
//
// Planar convolutions use cell-averaged outgoing kernels
// G1 = -(i/4) H0(k |x|), G2 = grad G1 on a circular FFT of size >= 2n - 1.

#include "lamb/modes.hpp"
#include "lamb/sources.hpp"

#include <array>
#include <iosfwd>

namespace lamb {

/// n x n nodes on [-half_width, half_width]^2.
PlaneGrid centered_plane(Eigen::Index n, Real half_width);

struct PlanarPair {
  MatC x, y;
};

/// Sampled 3D source: body force at section nodes, tractions on both faces.
struct SourceSpec3D {
  PlaneGrid plane;
  Real h = 0;
  SectionGrid sec;
  std::vector<MatC> f1, f2, f3;  // one plane per section node
  std::array<MatC, 3> top, bot;

  static SourceSpec3D sample(const Source3D& src, const PlaneGrid& plane, Real h, int order = 16);
  /// Square cells, finite samples, and a margin of 8 zero cells at the plane edges.
  void validate() const;
};

// ---- spectral planar calculus on a 2x zero-padded box -------------------

MatC div2(const PlanarPair& f, Real d);
MatC curl2(const PlanarPair& f, Real d);
/// Same operators on the given box taken as periodic (no padding, no crop).
MatC div2_periodic(const PlanarPair& f, Real d);
MatC curl2_periodic(const PlanarPair& f, Real d);

struct HHDPair {
  PlanarPair d;  // curl-free part, carries the full divergence (and the mean)
  PlanarPair c;  // divergence-free part
};
HHDPair hhd(const PlanarPair& f, Real d);
HHDPair hhd_periodic(const PlanarPair& f, Real d);

// ---- branch right-hand sides --------------------------------------------

struct LambRhs {
  PlaneGrid plane;
  Real h = 0;
  SectionGrid sec;
  std::vector<MatC> div_f, f3;
  std::vector<PlanarPair> f_curl_free;
  MatC div_top, div_bot, b3_top, b3_bot;
  PlanarPair b_top_curl_free, b_bot_curl_free;
};

struct ShRhs {
  PlaneGrid plane;
  Real h = 0;
  SectionGrid sec;
  std::vector<MatC> curl_f;
  std::vector<PlanarPair> f_div_free;
  MatC curl_top, curl_bot;
  PlanarPair b_top_div_free, b_bot_div_free;
};

std::pair<LambRhs, ShRhs> decouple(const SourceSpec3D& src);

// ---- kernels ------------------------------------------------------------

/// SH profile phi_n on [-h, h] (orthonormal cosines) and its derivatives.
Real sh_profile(int n, Real z, Real h, int derivative = 0);
/// kappa_n^2 = w^2 / mu - (n pi / 2h)^2 with Re, Im >= 0.
Complex sh_wavenumber(int n, Real omega, const Material& mat);

struct KernelSet {
  Eigen::Index n = 0;  // kernel holds offsets -(n-1) .. (n-1)
  MatC g1, g2x, g2y;   // cell averages, (2n-1)^2
};
/// Cell-averaged G1 and grad G1 for an n x n grid of spacing d.
KernelSet cell_averaged_kernels(Complex k, Real d, Eigen::Index n);
/// Integral of |G1| over the disk of radius r, times |k|^power.
Real kernel_l1_norm(Complex k, Real r, int power);

// ---- branch solutions ---------------------------------------------------

struct ShSolution {
  std::vector<Complex> kappa;
  std::vector<PlanarPair> C;      // in-plane SH coefficients per mode
  std::vector<MatC> beta_n;       // curl coefficient per mode
  std::vector<MatC> beta;         // per evaluation depth
};

/// Refuses SH-critical frequencies (|kappa_n| h below the critical threshold).
ShSolution solve_sh(const ShRhs& rhs, Real omega, const Material& mat, int n_modes, const VecR& z_eval);

struct LambSolution {
  std::vector<ModeShape> modes;
  std::vector<PlanarPair> A;      // in-plane coefficients
  std::vector<MatC> b;            // vertical coefficients
  std::vector<MatC> a;            // divergence coefficients
  std::vector<MatC> alpha, w;     // per evaluation depth
};

LambSolution solve_lamb3d(const LambRhs& rhs, Real omega, const Material& mat, int n_modes, const VecR& z_eval);

struct Wavefield3D {
  PlaneGrid plane;
  VecR z;
  Real omega = 0;
  int n_modes = 0;
  std::vector<MatC> u, v, w, alpha, beta;  // per depth
  std::vector<MatC> u_sh, v_sh;            // SH part of (u, v)
  LambSolution lamb;
  ShSolution sh;
};

Wavefield3D assemble3d(LambSolution lamb, ShSolution sh, const PlaneGrid& plane, const VecR& z_eval, Real omega);

Wavefield3D solve3d(const SourceSpec3D& src, Real omega, const Material& mat, int n_modes, const VecR& z_eval);

/// Little-endian binary: "LAMB3D\0\0", u32 version, i64 nx ny nz, f64 x0 dx y0 dy,
/// f64 omega, i32 n_modes, u32 component count, 8-byte names, nz depths,
/// then per component nz * ny * nx complex128 values (x fastest).
void write_field3d_binary(std::ostream& os, const Wavefield3D& w);

/// Max-norm residuals of the decoupled equations at depth z0 (five-point
/// Laplacian, every `stride`-th node with rmin <= |x| and |x|, |y| <= rmax),
/// each relative to the size of its omega^2 term.
struct DecoupledResiduals {
  Real lamb1 = 0, lamb2 = 0, sh = 0;
};
DecoupledResiduals decoupled_residuals(const Wavefield3D& W, const Material& m, Real z0, Real rmin, Real rmax,
                                       int stride = 1);

}  // namespace lamb
