#pragma once
// Modal solution against the finite-difference oracle on a straight plate.

#include "lamb/fd.hpp"
#include "lamb/forward2d.hpp"

namespace lamb {

struct CompareOptions {
  int n_modes = 20;
  Real spacing = 2e-3;            // FD spacing, also the comparison grid
  Real window = 3;                // errors over |x| <= window, all depths
  Real xa = -6, xb = 6;           // FD strip
  PMLProfile pml{-4, 4, 1.0};
  FDOptions fd;
};

struct CompareReport {
  Real l2 = 0;    // |modal - fd| / |fd|, discrete L2 over the window
  Real linf = 0;  // max pointwise |(du, dv)| / max |(u, v)|
  Real seconds_modal = 0, seconds_fd = 0;
  bool truncation_warning = false;
  Wavefield2D modal;  // on the comparison grid
  FDSolution fd;
};

CompareReport compare_modal_fd(const Source2D& src, Real omega, const Material& mat, const CompareOptions& opt = {});

}  // namespace lamb
