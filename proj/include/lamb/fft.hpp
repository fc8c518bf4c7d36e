#pragma once
// 2D FFT helpers, planar convolution and spectral differentiation.

#include "lamb/core.hpp"

namespace lamb {

/// Smallest n' >= n whose only prime factors are 2, 3 and 5.
Eigen::Index good_fft_size(Eigen::Index n);

/// In-place 2D DFT (unnormalized forward, inverse scaled by 1/N).
void fft2_inplace(MatC& a, bool inverse);

/// Angular wavenumbers of an n-point periodic grid with spacing d, in FFT order.
/// The Nyquist entry is set to zero so odd derivatives stay real-symmetric.
VecR fft_wavenumbers(Eigen::Index n, Real d);

/// Discrete linear convolution out(a,b) = sum K(x_a - x_a', y_b - y_b') S(a', b').
/// The kernel grid must share the source spacing and have its origin on an
/// integer offset; offsets it does not cover count as zero. No area factor.
ComplexField fft2_convolve(const ComplexField& kernel, const ComplexField& source);

/// O(N^4) reference for the above (tests and tiny grids).
ComplexField direct_convolve(const ComplexField& kernel, const ComplexField& source);

/// Spectral partial derivatives of a field on a periodic box (caller pads).
MatC spectral_dx(const MatC& a, Real dx);
MatC spectral_dy(const MatC& a, Real dy);

}  // namespace lamb
