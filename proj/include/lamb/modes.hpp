#pragma once
// Closed-form Lamb mode profiles, sectional operators and the X/Y pairing.

#include "lamb/dispersion.hpp"

#include <functional>
#include <iosfwd>

namespace lamb {

/// a cs(p z) + b cs(q z) with cs = cos (even) or sin (odd).
/// Every Lamb profile has this shape, so derivatives and products integrate exactly.
struct TrigProfile {
  Complex a, b, p, q;
  bool odd = false;

  Complex operator()(Real z) const;
  TrigProfile derivative() const;
  TrigProfile conj() const;
  TrigProfile operator*(Complex s) const { return {a * s, b * s, p, q, odd}; }
  /// Coefficient-wise sum; both operands must share p, q and parity.
  TrigProfile operator+(const TrigProfile& o) const;
};

/// Exact integral of f g over [-h, h].
Complex integrate_product(const TrigProfile& f, const TrigProfile& g, Real h);

/// Exact L2 norm over [-h, h].
Real l2_norm(const TrigProfile& f, Real h);

struct ModeValues {
  Complex u, t, ms, v;  // X = (u, t), Y = (ms, v) with ms = -s
};

/// One Lamb mode, unnormalized: the closed forms verbatim.
struct ModeShape {
  ModeRoot root;
  Real h = 0;
  TrigProfile u, t, ms, v, r;  // r = lambda ik u + (lambda + 2 mu) v'

  ModeValues eval(Real z) const;
  Complex s(Real z) const { return -ms(z); }
  /// The mode of -k: (u, v, s, t) -> (-u, v, s, -t).
  ModeShape reversed() const;
};

ModeShape make_mode(const ModeRoot& root, const Material& mat);

/// (u, t, -s, v) at z.
ModeValues eval_mode(const ModeShape& mode, Real z);

/// Samples of a mode on a section grid.
struct ModeSamples {
  VecC u, t, ms, v, r;
};
ModeSamples sample_mode(const ModeShape& mode, const SectionGrid& grid);

/// Unconjugated pairing: integral of x1 y1 + x2 y2 by quadrature.
Complex pairing(const VecC& x1, const VecC& x2, const VecC& y1, const VecC& y2, const SectionGrid& grid);

/// Grid-checked overload; throws InvalidArgument when the grids differ.
Complex pairing(const VecC& x1, const VecC& x2, const SectionGrid& gx, const VecC& y1, const VecC& y2,
                const SectionGrid& gy);

/// <X_a, Y_b> in closed form.
Complex closed_form_pairing(const ModeShape& a, const ModeShape& b);

/// |X| and |Y| (L2 over the section).
Real norm_x(const ModeShape& m);
Real norm_y(const ModeShape& m);

/// A section function with up to two analytic derivatives.
struct SectionFunction {
  std::function<Complex(Real)> f, df, d2f;
  static SectionFunction from(const TrigProfile& p);
};

struct SectionPair {
  SectionFunction x1, x2, y1, y2;  // X = (x1, x2), Y = (y1, y2)
  static SectionPair from(const ModeShape& m);
};

/// Samples of L(X, Y) = (F(Y), G(X)).
struct SectionalImage {
  VecC f1, f2, g1, g2;
};
SectionalImage apply_sectional_operators(const SectionPair& pair, const Material& mat, Real omega,
                                         const SectionGrid& grid);

/// B2(Y) at z (traction-type boundary operator on Y).
Complex boundary_b2(const SectionPair& pair, const Material& mat, Real z);

/// max |L(X,Y) - ik (X,Y)| over the grid, divided by max |ik (X,Y)|.
Real eigen_residual(const ModeShape& m, const Material& mat, const SectionGrid& grid);

/// CSV profile dump: z, re/im of u, v, s, t, r.
void write_profile_csv(std::ostream& os, const ModeShape& m, const SectionGrid& grid);

}  // namespace lamb
