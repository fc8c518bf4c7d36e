#pragma once
// Hankel functions of the first kind, orders 0 and 1, for Im z >= 0.

#include "lamb/core.hpp"

namespace lamb {

/// |z| at and beyond which the large-argument Hankel expansion is used.
inline constexpr Real kHankelAsymptoticRadius = 12.0;

/// H0^(1)(z) for Im z >= 0 (negative real axis reached from above).
/// Relative accuracy about 1e-10 or better for 1e-3 <= |z| <= 1e3.
Complex hankel0_first_kind(Complex z);

/// H1^(1)(z); note d/dz H0^(1) = -H1^(1).
Complex hankel1_first_kind(Complex z);

/// Modified Bessel K0, K1 for Re w >= 0 (principal branch).
void bessel_k01(Complex w, Complex& k0, Complex& k1);

}  // namespace lamb
