#include "lamb/fft.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>

namespace lamb {

Eigen::Index good_fft_size(Eigen::Index n) {
  if (n <= 1) return 1;
  for (Eigen::Index m = n;; ++m) {
    Eigen::Index r = m;
    for (int p : {2, 3, 5})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

void fft2_inplace(MatC& a, bool inverse) {
  Eigen::FFT<Real> fft;
  VecC in, out;
  for (Eigen::Index j = 0; j < a.cols() && a.rows() > 1; ++j) {
    in = a.col(j);
    if (inverse) fft.inv(out, in); else fft.fwd(out, in);
    a.col(j) = out;
  }
  for (Eigen::Index i = 0; i < a.rows() && a.cols() > 1; ++i) {
    in = a.row(i).transpose();
    if (inverse) fft.inv(out, in); else fft.fwd(out, in);
    a.row(i) = out.transpose();
  }
}

VecR fft_wavenumbers(Eigen::Index n, Real d) {
  VecR k(n);
  const Real base = 2 * kPi / (n * d);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index m = (i <= n / 2) ? i : i - n;
    k(i) = base * static_cast<Real>(m);
  }
  if (n % 2 == 0) k(n / 2) = 0;
  return k;
}

namespace {

Eigen::Index integer_offset(Real x0, Real d, const char* what) {
  const Real r = x0 / d;
  const Real ri = std::round(r);
  if (std::abs(r - ri) > 1e-8 * std::max<Real>(1.0, std::abs(r)))
    throw InvalidArgument(std::string("fft2_convolve: kernel origin not on the lattice (") + what + ")");
  return static_cast<Eigen::Index>(ri);
}

void check_spacing(const ComplexField& k, const ComplexField& s) {
  auto close = [](Real a, Real b) { return std::abs(a - b) <= 1e-12 * std::abs(b); };
  if (!close(k.grid.x.dx, s.grid.x.dx) || !close(k.grid.y.dx, s.grid.y.dx))
    throw InvalidArgument("fft2_convolve: kernel and source spacing differ");
}

}  // namespace

ComplexField fft2_convolve(const ComplexField& kernel, const ComplexField& source) {
  check_spacing(kernel, source);
  const auto& kg = kernel.grid;
  const auto& sg = source.grid;
  const Eigen::Index ox = integer_offset(kg.x.x0, kg.x.dx, "x");
  const Eigen::Index oy = integer_offset(kg.y.x0, kg.y.dx, "y");
  const Eigen::Index px = good_fft_size(kg.x.n + sg.x.n - 1);
  const Eigen::Index py = good_fft_size(kg.y.n + sg.y.n - 1);

  MatC a = MatC::Zero(px, py), b = MatC::Zero(px, py);
  a.topLeftCorner(kg.x.n, kg.y.n) = kernel.values;
  b.topLeftCorner(sg.x.n, sg.y.n) = source.values;
  fft2_inplace(a, false);
  fft2_inplace(b, false);
  a.array() *= b.array();
  fft2_inplace(a, true);

  // full-convolution index t corresponds to output node t + ox
  ComplexField out(source.name, sg);
  for (Eigen::Index j = 0; j < sg.y.n; ++j) {
    const Eigen::Index tj = j - oy;
    for (Eigen::Index i = 0; i < sg.x.n; ++i) {
      const Eigen::Index ti = i - ox;
      out.values(i, j) = (ti >= 0 && ti < px && tj >= 0 && tj < py) ? a(ti, tj) : Complex(0);
    }
  }
  return out;
}

ComplexField direct_convolve(const ComplexField& kernel, const ComplexField& source) {
  check_spacing(kernel, source);
  const auto& kg = kernel.grid;
  const auto& sg = source.grid;
  const Eigen::Index ox = integer_offset(kg.x.x0, kg.x.dx, "x");
  const Eigen::Index oy = integer_offset(kg.y.x0, kg.y.dx, "y");
  ComplexField out(source.name, sg);
  for (Eigen::Index j = 0; j < sg.y.n; ++j)
    for (Eigen::Index i = 0; i < sg.x.n; ++i) {
      Complex acc = 0;
      for (Eigen::Index jj = 0; jj < sg.y.n; ++jj)
        for (Eigen::Index ii = 0; ii < sg.x.n; ++ii) {
          // kernel offset (i - ii) lives at kernel index (i - ii) - ox
          const Eigen::Index ki = i - ii - ox, kj = j - jj - oy;
          if (ki < 0 || kj < 0 || ki >= kg.x.n || kj >= kg.y.n) continue;
          acc += kernel.values(ki, kj) * source.values(ii, jj);
        }
      out.values(i, j) = acc;
    }
  return out;
}

MatC spectral_dx(const MatC& a, Real dx) {
  MatC t = a;
  fft2_inplace(t, false);
  const VecR kx = fft_wavenumbers(a.rows(), dx);
  for (Eigen::Index j = 0; j < t.cols(); ++j) t.col(j).array() *= kI * kx.array().cast<Complex>();
  fft2_inplace(t, true);
  return t;
}

MatC spectral_dy(const MatC& a, Real dy) {
  MatC t = a;
  fft2_inplace(t, false);
  const VecR ky = fft_wavenumbers(a.cols(), dy);
  for (Eigen::Index j = 0; j < t.cols(); ++j) t.col(j) *= kI * ky(j);
  fft2_inplace(t, true);
  return t;
}

}  // namespace lamb
