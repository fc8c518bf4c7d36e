#include "lamb/compare.hpp"

#include <chrono>
#include <cmath>

namespace lamb {

namespace {
Real seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<Real>(std::chrono::steady_clock::now() - t0).count();
}
}  // namespace

CompareReport compare_modal_fd(const Source2D& src, Real omega, const Material& mat, const CompareOptions& opt) {
  if (!(opt.window > 0) || opt.window >= std::min(-opt.pml.left, opt.pml.right))
    throw InvalidArgument("compare: window must lie inside the absorbing layers");
  CompareReport rep;

  auto t0 = std::chrono::steady_clock::now();
  const FDGrid g = FDGrid::make(opt.xa, opt.xb, mat.h, opt.spacing, opt.pml);
  rep.fd = solve_fd(g, mat, omega, FDSource::from(src), opt.fd);
  rep.seconds_fd = seconds_since(t0);

  // The modal grid reuses the FD nodes so no interpolation enters the error.
  t0 = std::chrono::steady_clock::now();
  const int i0 = static_cast<int>(std::lround((-opt.window - g.xa) / g.dx));
  const int i1 = static_cast<int>(std::lround((opt.window - g.xa) / g.dx));
  const AxisGrid xg{g.x(i0), g.dx, i1 - i0 + 1};
  const auto spec = SourceSpec2D::sample(src, AxisGrid::covering(std::min(-src.r, g.x(i0)), std::max(src.r, g.x(i1)), g.dx), mat.h);
  const Wavefield2D full = solve2d(spec, omega, mat, opt.n_modes, uniform_depths(mat.h, g.nz));
  rep.seconds_modal = seconds_since(t0);
  rep.truncation_warning = full.truncation_warning;

  // restrict the modal field to the window rows
  const auto off = static_cast<Eigen::Index>(std::lround((xg.x0 - full.x.x0) / g.dx));
  rep.modal = full;
  rep.modal.x = xg;
  rep.modal.u = full.u.middleRows(off, xg.n);
  rep.modal.v = full.v.middleRows(off, xg.n);
  rep.modal.a = full.a.middleCols(off, xg.n);
  rep.modal.b = full.b.middleCols(off, xg.n);

  const MatC du = rep.modal.u - rep.fd.u.middleRows(i0, xg.n);
  const MatC dv = rep.modal.v - rep.fd.v.middleRows(i0, xg.n);
  const auto ref2 = rep.fd.u.middleRows(i0, xg.n).cwiseAbs2() + rep.fd.v.middleRows(i0, xg.n).cwiseAbs2();
  const auto err2 = du.cwiseAbs2() + dv.cwiseAbs2();
  rep.l2 = std::sqrt(err2.sum() / ref2.sum());
  rep.linf = std::sqrt(err2.maxCoeff() / ref2.maxCoeff());
  return rep;
}

}  // namespace lamb
