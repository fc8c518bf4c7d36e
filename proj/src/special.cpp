#include "lamb/special.hpp"

#include <cmath>

namespace lamb {
namespace {

constexpr Real kEuler = 0.57721566490153286060651209;

// Ascending series for J0, Y0, J1, Y1.
void series01(Complex z, Complex& j0, Complex& y0, Complex& j1, Complex& y1) {
  const Complex q = 0.25 * z * z;
  Complex t0 = 1.0;   // (-q)^m / (m!)^2
  Complex t1 = 1.0;   // (-q)^m / (m! (m+1)!)
  Complex sj0 = 0, sy0 = 0, sj1 = 0, sy1 = 0;
  Real harm = 0;      // H_m
  for (int m = 0; m < 200; ++m) {
    if (m > 0) {
      t0 *= -q / Real(m * m);
      t1 *= -q / Real(m * (m + 1));
      harm += 1.0 / m;
    }
    sj0 += t0;
    sj1 += t1;
    if (m > 0) sy0 += harm * t0;  // sign folded: (-1)^{m+1} H_m q^m
    const Real psi_sum = 2 * (-kEuler) + harm + (harm + 1.0 / (m + 1));
    sy1 += psi_sum * t1;
    if (m > 4 && std::abs(t0) < 1e-18 * std::abs(sj0) && std::abs(t1) < 1e-18 * std::abs(sj1)) break;
  }
  const Complex lg = std::log(0.5 * z);
  j0 = sj0;
  y0 = (2.0 / kPi) * ((lg + kEuler) * j0 - sy0);
  j1 = 0.5 * z * sj1;
  y1 = (2.0 / kPi) * lg * j1 - 2.0 / (kPi * z) - (1.0 / kPi) * 0.5 * z * sy1;
}

// Large-|z| Hankel expansion of H_nu^(1), nu in {0, 1}.
Complex hankel_asymptotic(int nu, Complex z) {
  const Real mu4 = 4.0 * nu * nu;
  Complex sum = 1.0, term = 1.0;
  Real last = 1.0;
  for (int k = 1; k < 80; ++k) {
    const Real odd = 2.0 * k - 1;
    term *= kI * (mu4 - odd * odd) / (8.0 * k * z);
    const Real mag = std::abs(term);
    if (mag > last) break;  // series is asymptotic; stop at its smallest term
    sum += term;
    last = mag;
    if (mag < 1e-17 * std::abs(sum)) break;
  }
  const Complex phase = z - (0.5 * nu + 0.25) * kPi;
  return std::sqrt(2.0 / (kPi * z)) * std::exp(kI * phase) * sum;
}

bool use_series(Complex z) { return std::abs(z) <= 2.0 || z.imag() < 2.5; }

}  // namespace

void bessel_k01(Complex w, Complex& k0, Complex& k1) {
  if (w == Complex(0)) throw SingularArgument("bessel_k01: w = 0");
  if (std::abs(w) <= 2.0) {
    // K via the ascending series of I and the logarithmic part
    const Complex q = 0.25 * w * w;
    Complex t0 = 1.0, t1 = 1.0, si0 = 0, sk0 = 0, si1 = 0, sk1 = 0;
    Real harm = 0;
    for (int m = 0; m < 60; ++m) {
      if (m > 0) {
        t0 *= q / Real(m * m);
        t1 *= q / Real(m * (m + 1));
        harm += 1.0 / m;
      }
      si0 += t0;
      sk0 += harm * t0;
      si1 += t1;
      sk1 += (2 * (-kEuler) + harm + harm + 1.0 / (m + 1)) * t1;
      if (std::abs(t0) < 1e-18 && std::abs(t1) < 1e-18) break;
    }
    const Complex lg = std::log(0.5 * w);
    const Complex i1 = 0.5 * w * si1;
    k0 = -(lg + kEuler) * si0 + sk0;
    k1 = 1.0 / w + lg * i1 - 0.25 * w * sk1;
    return;
  }
  // Temme's continued fraction (Steed's algorithm), order 0
  Complex b = 2.0 * (1.0 + w);
  Complex d = 1.0 / b;
  Complex hh = d, delh = d;
  Complex q1 = 0.0, q2 = 1.0;
  const Real a1 = 0.25;
  Complex q = a1, c = a1;
  Real a = -a1;
  Complex s = 1.0 + q * delh;
  for (int i = 1; i < 100000; ++i) {
    a -= 2 * i;
    c = -a * c / (i + 1.0);
    const Complex qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    hh += delh;
    const Complex dels = q * delh;
    s += dels;
    if (std::abs(dels) < 1e-17 * std::abs(s)) break;
  }
  hh = a1 * hh;
  k0 = std::sqrt(kPi / (2.0 * w)) * std::exp(-w) / s;
  k1 = k0 * (w + 0.5 - hh) / w;
}

Complex hankel0_first_kind(Complex z) {
  if (z == Complex(0)) throw SingularArgument("hankel0_first_kind: z = 0");
  if (std::abs(z) >= kHankelAsymptoticRadius) return hankel_asymptotic(0, z);
  if (use_series(z)) {
    Complex j0, y0, j1, y1;
    series01(z, j0, y0, j1, y1);
    return j0 + kI * y0;
  }
  Complex k0, k1;
  bessel_k01(-kI * z, k0, k1);
  return -2.0 * kI / kPi * k0;
}

Complex hankel1_first_kind(Complex z) {
  if (z == Complex(0)) throw SingularArgument("hankel1_first_kind: z = 0");
  if (std::abs(z) >= kHankelAsymptoticRadius) return hankel_asymptotic(1, z);
  if (use_series(z)) {
    Complex j0, y0, j1, y1;
    series01(z, j0, y0, j1, y1);
    return j1 + kI * y1;
  }
  Complex k0, k1;
  bessel_k01(-kI * z, k0, k1);
  return -2.0 / kPi * k1;
}

}  // namespace lamb
