#pragma once

#include <string>
#include <tuple>
#include <vector>

#include "dp3/asymptotics.hpp"
#include "dp3/numeric.hpp"
#include "dp3/params.hpp"

namespace dp3 {

// Truncated local expansion of a solution about one movable singular point
// (double pole of u) or movable simple zero, together with the matched
// expansions of the energy function
//   H = (a - i/2) b / u + (a - i/2)^2 / (2 tau) + tau ((u')^2 + b^2) / (4 u^2)
//       + 4 eps u
// and of the auxiliary combination
//   f = tau (u' - i b) / (4 u) - (i a + 1/2) / 2.
//
// With x = tau - center, the stored data represent
//   pole:        u = u_lead x^{-2} + sum_{k>=0} coeffs_u[k] x^k
//   zeroes:      u = sum_{k>=1} coeffs_u[k] x^k          (coeffs_u[0] == 0)
//   pole, zero-: H = h_residue / x + energy_shift(tau)
//                    + sum_{k>=0} coeffs_h[k] x^k
//   zero+:       H = sum_{k>=0} coeffs_h[k] x^k          (shift included)
//   pole, zero-: f = f_residue / x + sum_{k>=0} coeffs_f[k] x^k
//   zero+:       f = sum_{k>=1} coeffs_f[k] x^k          (coeffs_f[0] ~ 0)
// where energy_shift(tau) = (a - i/2)^2 / (2 tau).  The structural fields
// u_lead, h_residue, f_residue hold their exact closed-form values
// (-center/(4 eps); 1 or 0; -center/2, 0, or +center/2) and the construction
// verifies that the composed series reproduce them.
struct LocalSeries {
  cx center;       // expansion point; never 0
  SiteKind kind = SiteKind::pole;
  cx free_param;   // constant term a0 at a pole, x^3 coefficient at a zero
  int order = 12;  // highest stored power of x

  std::vector<cx> coeffs_u, coeffs_h, coeffs_f;  // powers 0..order
  cx u_lead;       // coefficient of x^{-2}; 0 at zeroes
  cx h_residue;    // 1 at pole and descending zero, 0 at ascending zero
  cx f_residue;    // -center/2 at pole, 0 ascending, +center/2 descending

  EquationParams params;

  cx eval_u(cx tau) const;
  cx eval_du(cx tau) const;
  cx eval_h(cx tau) const;
  cx eval_f(cx tau) const;

  // Largest radius (capped at |center|/2) at which the highest stored u-term
  // stays below rel_tol times the series' own scale; a practical bound on
  // where evaluations can be trusted.
  double trust_radius(double rel_tol = 1e-10) const;

  // {"center": [re, im], "kind": ..., "free_param": [re, im], "order": K,
  //  "u_lead"/"h_residue"/"f_residue": [re, im],
  //  "u"/"h"/"f": [[re, im], ...]}.
  std::string to_json() const;
};

// Expansion about a double pole at tau_inf != 0; a0 is the free constant
// term.  The order (highest stored power) must lie in [6, 64]; internal
// construction carries guard orders beyond it so that every stored u, H, f
// coefficient is exact for the underlying solution germ.
LocalSeries series_at_pole(cx tau_inf, cx a0, const EquationParams& p,
                           int order = 12);

// Expansion about a simple zero at tau_s != 0 with u'(tau_s) = i*sign*b;
// sign = +1 selects the ascending kind, -1 the descending kind.  b3 is the
// free x^3 coefficient.
LocalSeries series_at_zero(cx tau_s, int sign, cx b3, const EquationParams& p,
                           int order = 12);

// Coefficients of the defining polynomial
//   F := tau (u u'' - (u')^2 - b^2) + u u' + 8 eps u^3 - 2 a b u
// applied to the stored truncation of u, starting at power first_power
// (-6 at a pole, 0 at a zero).  Rows the construction solved vanish to
// rounding; the surviving tail measures the truncation error.
std::vector<cx> defining_residual(const LocalSeries& s, int& first_power);

// sum |F_j| r^j over the rows the construction left unsolved (j >= order-3
// at a pole, j >= order at a zero): the truncation error of the defining
// polynomial at radius r.  Its log-log slope in r approaches the first
// surviving power from above.
double residual_norm(const LocalSeries& s, double r);

struct LocalFit {
  SiteKind kind = SiteKind::pole;
  cx center;
  cx free_param;
  double residual = 0.0;      // rms misfit of the winning model
  double alt_residual = 0.0;  // best rms misfit among the other models
  bool ambiguous = false;     // both zero kinds fit within a factor ~2
  // rms misfit of every candidate model that produced a finite fit
  // (failed candidates carry +infinity).
  std::vector<std::pair<SiteKind, double>> tried;
};

// Identify the nearby pole or zero from at least four samples of
// (tau, u, u').  Fits all three local models by damped Gauss-Newton on the
// complex unknowns (center, free_param) and keeps the smallest-residual
// model; a residual tie between the two zero kinds resolves to the
// ascending kind with the ambiguous flag set.  Throws NumericError when no
// model explains the data (ill-conditioned or non-converging fits).
LocalFit fit_local(const EquationParams& p,
                   const std::vector<std::tuple<cx, cx, cx>>& samples);

}  // namespace dp3
