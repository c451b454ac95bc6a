#include "dp3/asymptotics.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "dp3/gammafn.hpp"

namespace dp3 {

namespace {

const cx kI{0.0, 1.0};
const double kSqrt3 = std::sqrt(3.0);
const double kSqrt2 = std::sqrt(2.0);
constexpr double kHalfTol = 1e-9;
// Guard band around the zeros of a trigonometric denominator factor.
constexpr double kSingBand = 0.05;

cx cot(cx z) { return std::cos(z) / std::sin(z); }

// Phase reconstruction shared by the oscillatory and singular regimes: the
// leading phase plus its logarithmic frequency correction plus the constant
// offset scalar.
cx real_frequency_phase(cx phi, double rho, cx offset) {
    return phi + rho * std::log(phi / (2.0 * pi)) + offset;
}

struct Selected {
    cx phase{};
    cx nu_eff{};
};

Selected select_phase(const PhaseContext& c, Regime r, const char* caller) {
    if (r == Regime::auto_detect)
        r = c.singular      ? Regime::singular
            : c.half_locus  ? Regime::oscillatory
                            : Regime::generic;
    switch (r) {
        case Regime::singular:
            if (!c.singular)
                throw PreconditionError(std::string(caller) +
                                        ": the transported data do not satisfy the "
                                        "self-conjugate reduction");
            return {c.theta0, cx{0.5, c.rho_sing}};
        case Regime::oscillatory:
            if (!c.half_locus)
                throw PreconditionError(std::string(caller) +
                                        ": the transported exponent is off the half line");
            return {c.theta, cx{0.5, c.rho_osc}};
        default:
            return {c.vartheta, c.nu};
    }
}

// Rejects evaluation points whose phase sits within the guard band of a zero
// of sin((phase - shift)/2). The throw carries a linearized estimate of the
// offending point and a safe point half a period away from it.
void guard_trig(const PhaseContext& c, cx phase, cx shift, const char* factor) {
    const cx s = std::sin(0.5 * (phase - shift));
    const double mag = std::abs(s);
    if (mag >= kSingBand) return;
    const double m_star = std::round((phase - shift).real() / (2.0 * pi));
    const cx dphase = shift + 2.0 * pi * m_star - phase;
    const cx slope = 1.5 * c.tau / c.phi;  // d tau / d phase at leading order
    const cx nearest = c.tau + dphase * slope;
    const double dir = dphase.real() > 0.0 ? -1.0 : 1.0;
    const cx safe = nearest + dir * pi * slope;
    std::ostringstream os;
    os << "evaluation point lies in the guard band of a zero of " << factor
       << " (|sin| = " << mag << " < " << kSingBand << ")";
    throw NearSingularity(os.str(), std::abs(nearest - c.tau), nearest, safe);
}

}  // namespace

cx u_profile_kernel(cx phase, cx t13, double amp, int eps, cx rot) {
    const cx th0 = theta0_angle();
    const cx s = std::sin(0.5 * phase);
    const cx prod =
        std::sin(0.5 * phase - th0) * std::sin(0.5 * phase + th0) / (s * s);
    return rot * (0.5 * static_cast<double>(eps) * amp * amp) * t13 * prod;
}

cx h_profile_kernel(cx phase, cx nu_eff, cx a_signed, cx t13, double amp, cx rot) {
    const cx th0 = theta0_angle();
    const cx br = nu_eff - 0.5 + (kI * a_signed + 0.5) / (2.0 * kSqrt3) +
                  0.25 * kI * cot(0.5 * phase) + 0.25 * kI * cot(0.5 * phase - th0);
    return rot * (3.0 * amp * amp * t13 - kI * 4.0 * kSqrt3 * amp / t13 * br);
}

cx f_profile_kernel(cx phase, cx t23, double amp) {
    const cx th0 = theta0_angle();
    return -0.5 * amp * t23 *
           (kI + 3.0 / (kSqrt2 * std::sin(0.5 * phase) * std::sin(0.5 * phase - th0)));
}

cx log_deriv_profile_kernel(cx phase, cx t13, double amp) {
    const cx th0 = theta0_angle();
    return 3.0 * kSqrt3 * amp / t13 * std::cos(0.5 * phase) /
           (std::sin(0.5 * phase) * std::sin(0.5 * phase - th0) *
            std::sin(0.5 * phase + th0));
}

PhaseContext phase_context(cx tau, const MonodromyData& md,
                           const EquationParams& p, Axis axis) {
    p.validate();
    if (tau == cx{0.0, 0.0})
        throw PreconditionError("phase_context requires tau != 0");
    PhaseContext c;
    c.axis = axis;
    c.eps1 = p.eps1;
    c.eps2 = p.eps2;
    c.tau = tau;
    c.amp = std::cbrt(p.eb_abs());
    c.eps = p.epsilon;
    const bool on_imag = axis == Axis::imag_axis;
    if (on_imag) {
        if (p.eps1 != 1 && p.eps1 != -1)
            throw PreconditionError("imaginary axes require eps1 = +1 or -1");
        c.rot = std::polar(1.0, -0.5 * pi * static_cast<double>(p.eps1));
        c.t_ray = c.rot * tau;
        c.t13 = root13(c.t_ray, 0);
        c.mapped = apply_imag_symmetry(md, p.eps1, p.eps2);
    } else {
        c.t_ray = tau;
        c.t13 = root13(tau, p.eps1);
        c.mapped = apply_symmetry(md, p.eps1, p.eps2);
    }
    c.a_signed = c.mapped.a;
    c.t23 = sq(c.t13);
    c.phi = 3.0 * kSqrt3 * c.amp * c.t23;

    const cx prod = c.mapped.g11 * c.mapped.g22;
    if (prod == cx{0.0, 0.0})
        throw PreconditionError("transported g11 g22 vanishes");
    cx nu = kI * std::log(prod) / (2.0 * pi);
    nu -= std::floor(nu.real());
    c.nu = nu;

    const cx g1112 = c.mapped.g11 * c.mapped.g12;
    if (g1112 == cx{0.0, 0.0})
        throw PreconditionError("transported g11 g12 vanishes");
    c.vartheta = c.phi - kI * (nu - 0.5) * (std::log(c.phi) + std::log(12.0)) +
                 c.a_signed * ln_2_plus_sqrt3 + 0.25 * pi - 1.5 * pi * nu +
                 kI * std::log(g1112 * gamma_fn(nu) / std::sqrt(2.0 * pi));

    c.half_locus = std::abs(nu.real() - 0.5) <= kHalfTol;
    if (c.half_locus) {
        c.rho_osc = on_imag ? rho1_hat(md, p.eps1, p.eps2) : rho1(md, p.eps1, p.eps2);
        const cx r2 = on_imag ? rho2_hat(md, p.eps1, p.eps2) : rho2(md, p.eps1, p.eps2);
        c.theta = real_frequency_phase(c.phi, c.rho_osc, r2);
    }
    c.singular = on_imag ? check_singular_imag_reduction(md, p.eps1, p.eps2, kHalfTol)
                         : check_singular_real_reduction(md, p.eps1, p.eps2, kHalfTol);
    if (c.singular) {
        c.rho_sing = on_imag ? rho0_hat(md, p.eps1, p.eps2) : rho0(md, p.eps1, p.eps2);
        const double sharp = on_imag ? rho0_sharp_hat(md, p.eps1, p.eps2)
                                     : rho0_sharp(md, p.eps1, p.eps2);
        c.theta0 = real_frequency_phase(c.phi, c.rho_sing, cx{sharp, 0.0});
    }

    double dsup;
    if (c.half_locus) {
        dsup = delta_G_bound_half();
    } else {
        try {
            dsup = delta_G_bound(nu);
        } catch (const PreconditionError&) {
            dsup = delta_G_bound_half();
        }
    }
    const double at = std::abs(c.t_ray);
    c.error_scale = std::pow(at, -0.9 * dsup) * std::max(1.0, std::log(at));
    return c;
}

double delta_G_bound(cx nu_plus1) {
    const double R = nu_plus1.real();
    if (!(R > 0.0 && R < 1.0))
        throw PreconditionError(
            "growth bound requires the exponent's real part in (0, 1)");
    if (std::abs(R - 0.5) < kHalfTol)
        throw PreconditionError(
            "exponent on the half line; use delta_G_bound_half");
    return R < 0.5 ? (1.0 + 2.0 * R) / (3.0 * (7.0 + 6.0 * R))
                   : (3.0 - 2.0 * R) / (3.0 * (9.0 + 2.0 * R));
}

double delta_G_bound_half(double delta) {
    if (!(delta > 0.0 && delta < 1.0 / 39.0))
        throw PreconditionError("hole exponent must lie in (0, 1/39)");
    return 1.0 / 15.0 - 1.6 * delta;
}

cx u_leading(const PhaseContext& c, Regime r) {
    const Selected s = select_phase(c, r, "u_leading");
    guard_trig(c, s.phase, cx{0.0, 0.0}, "the half-phase sine");
    return u_profile_kernel(s.phase, c.t13, c.amp, c.eps, c.rot);
}

cx h_leading(const PhaseContext& c, Regime r) {
    const Selected s = select_phase(c, r, "h_leading");
    guard_trig(c, s.phase, cx{0.0, 0.0}, "the half-phase sine");
    guard_trig(c, s.phase, 2.0 * theta0_angle(), "the shifted half-phase sine");
    return h_profile_kernel(s.phase, s.nu_eff, c.a_signed, c.t13, c.amp, c.rot);
}

cx f_leading(const PhaseContext& c, Regime r) {
    const Selected s = select_phase(c, r, "f_leading");
    guard_trig(c, s.phase, cx{0.0, 0.0}, "the half-phase sine");
    guard_trig(c, s.phase, 2.0 * theta0_angle(), "the shifted half-phase sine");
    return f_profile_kernel(s.phase, c.t23, c.amp);
}

cx log_deriv_leading(const PhaseContext& c, Regime r) {
    const Selected s = select_phase(c, r, "log_deriv_leading");
    guard_trig(c, s.phase, cx{0.0, 0.0}, "the half-phase sine");
    guard_trig(c, s.phase, 2.0 * theta0_angle(), "the shifted half-phase sine");
    guard_trig(c, s.phase, -2.0 * theta0_angle(), "the counter-shifted half-phase sine");
    return c.rot * log_deriv_profile_kernel(s.phase, c.t13, c.amp);
}

cx lattice_site_closed(double rho_log, cx combo, long m, double amp) {
    if (m < 1) throw PreconditionError("site index m must be >= 1");
    const double md = static_cast<double>(m);
    const double base = 2.0 * pi * md / (3.0 * kSqrt3 * amp);
    const double lead = std::pow(base, 1.5);
    const double corr_log = -0.75 * rho_log * std::log(md) / (pi * md);
    const cx corr_inv = -0.75 / (pi * md) * combo;
    return lead * (1.0 + corr_log + corr_inv);
}

std::vector<LatticePoint> site_lattice(const MonodromyData& md,
                                       const EquationParams& p, Axis axis,
                                       SiteKind kind, long m_lo, long m_hi,
                                       bool refine) {
    p.validate();
    if (m_lo < 1 || m_hi < m_lo)
        throw PreconditionError("site range requires 1 <= m_lo <= m_hi");
    const bool on_imag = axis == Axis::imag_axis;
    if (on_imag && p.eps1 != 1 && p.eps1 != -1)
        throw PreconditionError("imaginary axes require eps1 = +1 or -1");
    const double amp = std::cbrt(p.eb_abs());

    // Frequency scalars of the sharpest real-phase regime the data support.
    double rho;
    cx offset;
    const bool sing = on_imag
                          ? check_singular_imag_reduction(md, p.eps1, p.eps2, kHalfTol)
                          : check_singular_real_reduction(md, p.eps1, p.eps2, kHalfTol);
    if (sing) {
        rho = on_imag ? rho0_hat(md, p.eps1, p.eps2) : rho0(md, p.eps1, p.eps2);
        offset = on_imag ? rho0_sharp_hat(md, p.eps1, p.eps2)
                         : rho0_sharp(md, p.eps1, p.eps2);
    } else {
        rho = on_imag ? rho1_hat(md, p.eps1, p.eps2) : rho1(md, p.eps1, p.eps2);
        offset = on_imag ? rho2_hat(md, p.eps1, p.eps2) : rho2(md, p.eps1, p.eps2);
    }

    const cx two_th0 = 2.0 * theta0_angle();
    cx combo = offset;
    cx target_shift{0.0, 0.0};
    if (kind == SiteKind::zero_plus) {
        combo += two_th0;
        target_shift = -two_th0;
    } else if (kind == SiteKind::zero_minus) {
        combo -= two_th0;
        target_shift = two_th0;
    }
    const cx raydir =
        on_imag ? std::polar(1.0, 0.5 * pi * static_cast<double>(p.eps1))
                : cx{p.eps1 == 0 ? 1.0 : -1.0, 0.0};

    std::vector<LatticePoint> out;
    out.reserve(static_cast<std::size_t>(m_hi - m_lo + 1));
    for (long m = m_lo; m <= m_hi; ++m) {
        LatticePoint pt;
        pt.m = m;
        pt.kind = kind;
        const double dm = static_cast<double>(m);
        pt.corr_log = -0.75 * rho * std::log(dm) / (pi * dm);
        pt.corr_inv = -0.75 / (pi * dm) * combo;
        cx T = lattice_site_closed(rho, combo, m, amp);
        pt.tau_closed = raydir * T;
        pt.tau_refined = pt.tau_closed;
        if (refine) {
            // Damped Newton on the exact phase condition, in the positive-ray
            // variable; the derivative is exact on the ray.
            const cx target = 2.0 * pi * dm + target_shift;
            bool ok = false;
            for (int it = 0; it < 50; ++it) {
                const cx phi = 3.0 * kSqrt3 * amp * root23(T, 0);
                const cx F = real_frequency_phase(phi, rho, offset) - target;
                if (std::abs(F) < 1e-12) {
                    ok = true;
                    break;
                }
                cx step = F / (2.0 * phi / (3.0 * T) * (1.0 + rho / phi));
                const double cap = 0.2 * std::abs(T);
                if (std::abs(step) > cap) step *= cap / std::abs(step);
                T -= step;
            }
            pt.tau_refined = raydir * T;
            pt.refined = ok;
        }
        out.push_back(pt);
    }
    return out;
}

InverseProfile inverse_profile(cx tau, const MonodromyData& md,
                               const EquationParams& p) {
    p.validate();
    if (p.eps1 != 0 || p.eps2 != 0)
        throw PreconditionError(
            "profile recovery is implemented for the base sector only");
    if (tau == cx{0.0, 0.0}) throw PreconditionError("tau must be nonzero");
    const cx prod = md.g11 * md.g22;
    if (prod == cx{0.0, 0.0} || md.g12 == cx{0.0, 0.0})
        throw PreconditionError("profile recovery requires nonzero g11, g12, g22");

    const double amp = std::cbrt(p.eb_abs());  // eps*b > 0 in the base sector
    const double alpha2 = 0.5 * amp;
    const cx th0 = theta0_angle();
    const cx t23 = root23(tau, 0);
    const cx phi = 3.0 * kSqrt3 * amp * t23;
    cx nu = kI * std::log(prod) / (2.0 * pi);
    nu -= std::floor(nu.real());

    InverseProfile out;
    out.vartheta_tilde =
        phi - kI * (nu - 0.5) * (std::log(phi) + std::log(12.0)) +
        (md.a - 0.5 * kI) * ln_2_plus_sqrt3 +
        kI * std::log(md.g11 * md.g12 * gamma_fn(nu) / std::sqrt(2.0 * pi)) -
        1.5 * pi * nu + 1.75 * pi;
    const cx vt = out.vartheta_tilde;
    const cx kap = 0.5 * (vt + th0);
    const cx ck = std::cos(kap);
    const cx slope = 3.0 * tau / phi;  // d tau / d phase at leading order
    if (std::abs(ck) < 1e-6) {
        const double k_star = std::round((kap.real() - 0.5 * pi) / pi);
        const cx dvt = 2.0 * (cx{0.5 * pi + k_star * pi, 0.0} - kap);
        throw NearSingularity(
            "profile functions evaluated at a pole of the amplitude profile",
            std::abs(dvt * slope), tau + dvt * slope, tau + dvt * slope - pi * slope);
    }
    const cx ckm = std::cos(kap - th0);
    out.r_hat0 = 12.0 / (1.0 - kI * kSqrt2 * std::cos(vt));
    out.u_hat0 = -1.5 / (ck * ck);
    const cx br = nu - 0.5 + kI / (2.0 * kSqrt3) * (md.a - 0.5 * kI) -
                  std::sin(vt) * std::cos(th0) / (2.0 * kSqrt2 * ck * ckm);
    out.h0 = 2.0 * kI * kSqrt3 * alpha2 * br;
    const cx one_u0 = 1.0 + out.u_hat0;
    if (std::abs(one_u0) < 1e-9)
        throw NearSingularity(
            "profile functions evaluated at a zero of the amplitude profile",
            std::abs(one_u0), tau, tau + pi * slope);
    out.kappa0_sq = 4.0 / alpha2 * (out.h0 + alpha2 * (md.a - 0.5 * kI) / one_u0);
    out.scale_exponent = -3.0 * kI * alpha2 * t23 - kI * md.a / 6.0 * std::log(tau) +
                         kI * pi * (nu - 0.5) + std::log(md.g11) +
                         std::log(2.0 * amp) +
                         0.5 * kI * md.a * std::log(0.5 * alpha2) -
                         (nu - 0.5) * ln_2_plus_sqrt3;
    out.sqrt_b = ckm / (4.0 * std::cos(th0) * ck) * std::exp(out.scale_exponent);
    out.sqrt_minus_ab = 2.0 * alpha2 * alpha2 * one_u0;
    const cx it23 = 1.0 / t23;
    const cx P1 = -0.5 * kI * amp + 0.25 * kI * amp * out.r_hat0 -
                  0.5 * kI * (md.a - 0.5 * kI) * it23;
    const cx u_ratio = -1.5 / (ck * ck - 1.5);  // u_hat0/(1+u_hat0), stable form
    const cx P2 = -0.5 * kI * amp + kI * amp * (u_ratio - 0.25 * out.r_hat0) -
                  0.5 * kI * (md.a + 0.5 * kI) * it23;
    out.prod_ad = out.sqrt_minus_ab * P1;
    out.prod_bc = out.sqrt_minus_ab * P2;
    out.prod_cd = -P1 * P2;
    return out;
}

}  // namespace dp3
