// Large-|tau| representations of the degenerate Painleve III (D7)
// transcendents on the four half-axes: the phase variables of the three
// regimes, leading profiles of u, the Hamiltonian and the auxiliary function,
// pole/zero site lattices with Newton sharpening, and the profile functions
// of the scaled linear problem recovered from connection data.
#pragma once

#include <vector>

#include "dp3/monodromy.hpp"
#include "dp3/params.hpp"

namespace dp3 {

enum class Axis { real_axis, imag_axis };

// Which representation produced a value.
enum class Regime {
    generic,      // exponent off the half line; complex-frequency phase
    oscillatory,  // exponent on the half line; real-frequency phase
    singular,     // self-conjugate entries; real phase, poles on the axis
    auto_detect,  // sharpest supported: singular, then oscillatory, then generic
};

// Everything the profile formulas need at one evaluation point, produced by
// phase_context. Members describe the data AFTER transport to the requested
// half-axis: `mapped` entries feed the phases, `a_signed` (= mapped.a) feeds
// the Hamiltonian bracket, and on the imaginary axes every quantity is
// expressed through the rotated variable t_ray with the prefactor `rot`
// multiplying u and the Hamiltonian.
struct PhaseContext {
    Axis axis = Axis::real_axis;
    int eps1 = 0;
    int eps2 = 0;
    cx tau{};              // evaluation point in the original variable
    cx t_ray{};            // tau on the real axes, e^{-i pi eps1/2} tau otherwise
    cx t13{}, t23{};       // branch-consistent t_ray^{1/3} and t_ray^{2/3}
    cx rot{1.0, 0.0};      // prefactor of u and H on the imaginary axes, else 1
    double amp = 1.0;      // |eps b|^{1/3}
    int eps = 1;           // equation sign; scales u
    MonodromyData mapped{};
    cx a_signed{};
    cx nu{};               // normalized exponent of the transported data
    cx phi{};              // leading phase; positive real on the axis itself
    cx vartheta{};         // generic-regime phase (always computed)
    bool half_locus = false;
    cx theta{};            // oscillatory-regime phase; valid when half_locus
    double rho_osc = 0.0;  // its logarithmic frequency correction
    bool singular = false;
    cx theta0{};           // singular-regime phase; valid when singular
    double rho_sing = 0.0;
    double error_scale = 0.0;  // advisory magnitude of the dropped corrections
};

// Builds the context. Requires tau != 0 and, on the imaginary axes,
// eps1 = +-1. Throws PreconditionError when the transported entries degenerate
// (vanishing g11 g22 or g11 g12).
PhaseContext phase_context(cx tau, const MonodromyData& md,
                           const EquationParams& p, Axis axis);

// Admissible growth exponent for deformations of the exponent away from the
// half line; rejects Re = 1/2 itself (use the _half variant there) and
// real parts outside (0, 1).
double delta_G_bound(cx nu_plus1);
// Variant on the half line, parameterized by the lattice-hole exponent.
double delta_G_bound_half(double delta = 1.0 / 40.0);

// Leading profiles at the context point. auto_detect picks the sharpest
// representation the context supports. Evaluation within a fixed band
// (|sin| < 0.05 of the relevant factor) of a trigonometric singularity throws
// NearSingularity carrying the estimated offending point and a suggested safe
// evaluation point half a period away.
cx u_leading(const PhaseContext& c, Regime r = Regime::auto_detect);
cx h_leading(const PhaseContext& c, Regime r = Regime::auto_detect);
cx f_leading(const PhaseContext& c, Regime r = Regime::auto_detect);
// Leading logarithmic derivative d(ln u)/d tau.
cx log_deriv_leading(const PhaseContext& c, Regime r = Regime::auto_detect);

// The shared trigonometric kernels behind the profiles, exposed for tests and
// for callers assembling their own phases. `amp` is |eps b|^{1/3}, `rot` the
// off-axis prefactor (1 on the real axes). The kernel of the auxiliary
// function f never takes a prefactor.
cx u_profile_kernel(cx phase, cx t13, double amp, int eps, cx rot = cx{1.0, 0.0});
cx h_profile_kernel(cx phase, cx nu_eff, cx a_signed, cx t13, double amp,
                    cx rot = cx{1.0, 0.0});
cx f_profile_kernel(cx phase, cx t23, double amp);
cx log_deriv_profile_kernel(cx phase, cx t13, double amp);

// ---------------------------------------------------------------- lattices

enum class SiteKind { pole, zero_plus, zero_minus };

struct LatticePoint {
    long m = 0;
    SiteKind kind = SiteKind::pole;
    cx tau_closed{};        // closed-form site in the original variable
    double corr_log = 0.0;  // relative ln(m)/m correction applied to it
    cx corr_inv{};          // relative 1/m correction applied to it
    cx tau_refined{};       // Newton-sharpened site (= tau_closed if !refined)
    bool refined = false;
};

// Site family indexed by m in [m_lo, m_hi], 1 <= m_lo <= m_hi. Requires the
// transported data to support the singular or oscillatory regime on the
// requested axis (PreconditionError otherwise). `kind` selects the poles of u
// or either zero family. With refine set, each site is sharpened by a damped
// Newton iteration on the exact phase condition.
std::vector<LatticePoint> site_lattice(const MonodromyData& md,
                                       const EquationParams& p, Axis axis,
                                       SiteKind kind, long m_lo, long m_hi,
                                       bool refine = true);

// Closed-form site on the positive ray for the given frequency scalars.
cx lattice_site_closed(double rho_log, cx combo, long m, double amp);

// --------------------------------- scaled linear-problem profile functions

// Profile functions of the scaled linear problem at a base-sector point,
// recovered from connection data: the diagonal and amplitude profiles, the
// energy profile, the WKB vertex square, the off-diagonal coefficient
// sqrt(b(tau)) with the exponent of its scale factor, and the pairwise
// products of the coefficient functions. The products are computed through
// their exact algebraic relations to (u_hat0, r_hat0), so they satisfy
//   prod_ad * prod_bc = (-sqrt_minus_ab^2) * prod_cd   and
//   prod_ad + prod_bc + i a sqrt_minus_ab tau^{-2/3} = -i eps b / 2
// identically.
struct InverseProfile {
    cx vartheta_tilde{};  // phase driving the profile functions
    cx r_hat0{};
    cx u_hat0{};
    cx h0{};
    cx kappa0_sq{};
    cx scale_exponent{};
    cx sqrt_b{};
    cx sqrt_minus_ab{};
    cx prod_ad{}, prod_bc{}, prod_cd{};
};

// Base sector only (eps1 = eps2 = 0); principal fractional powers of tau.
InverseProfile inverse_profile(cx tau, const MonodromyData& md,
                               const EquationParams& p);

}  // namespace dp3
