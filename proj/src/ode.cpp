// Complex-path integration of the (u, u', phi) flow with an embedded
// eighth-order Dormand-Prince pair, singularity crossings vaulted on local
// series, and seeding/sweeping helpers built on the large-|tau| profiles.
#include "dp3/ode.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>
#include <tuple>
#include <vector>

namespace dp3 {
namespace {

constexpr double kUround = 2.3e-16;
constexpr std::size_t kWindowSize = 12;  // recent accepted samples kept for vault fits

bool finite_cx(cx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

std::string fmt_cx(cx z) {
    std::ostringstream os;
    os.precision(17);
    os << z.real() << (z.imag() < 0 ? " - " : " + ") << std::abs(z.imag()) << "i";
    return os.str();
}

void validate_equation(const EquationParams& p) {
    if (!std::isfinite(p.a.real()) || !std::isfinite(p.a.imag()))
        throw PreconditionError("integration: the parameter a must be finite");
    if (p.b == 0.0 || !std::isfinite(p.b))
        throw PreconditionError("integration: b must be finite and nonzero");
    if (p.epsilon != 1 && p.epsilon != -1)
        throw PreconditionError("integration: epsilon must be +1 or -1");
}

void validate_ctrl(const IntegrationControl& c) {
    if (!(c.rel_tol > 0.0 && c.rel_tol <= 1e-2))
        throw ConfigError("integration control: rel_tol must lie in (0, 1e-2]");
    if (!(c.abs_tol > 0.0))
        throw ConfigError("integration control: abs_tol must be positive");
    if (!(c.max_step >= 0.0))
        throw ConfigError("integration control: max_step must be >= 0");
    if (c.max_steps < 100)
        throw ConfigError("integration control: max_steps must be at least 100");
    if (!(c.blow_up >= 1e2))
        throw ConfigError("integration control: blow_up must be at least 1e2");
    if (!(c.zero_guard > 0.0 && c.zero_guard <= 1e-2))
        throw ConfigError("integration control: zero_guard must lie in (0, 1e-2]");
    if (!(c.origin_radius >= 0.0))
        throw ConfigError("integration control: origin_radius must be >= 0");
    if (c.series_order < 6 || c.series_order > 64)
        throw ConfigError("integration control: series_order must lie in [6, 64]");
    if (!(c.exit_fraction > 0.0 && c.exit_fraction <= 0.9))
        throw ConfigError("integration control: exit_fraction must lie in (0, 0.9]");
    if (!(c.blow_up * 1e-3 > c.zero_guard))
        throw ConfigError("integration control: the [zero_guard, blow_up] band is too narrow");
}

// Core derivative evaluation; false when the state is singular or overflows.
bool flow(cx tau, cx u, cx du, const EquationParams& p, cx& ddu, cx& dphi) {
    if (u == cx{} || tau == cx{}) return false;
    const double b = p.b;
    const double e8 = 8.0 * static_cast<double>(p.epsilon);
    ddu = du * du / u - du / tau + (-e8 * u * u + 2.0 * p.a * b) / tau + b * b / u;
    dphi = 2.0 * p.a / tau + b / u;
    return finite_cx(ddu) && finite_cx(dphi);
}

// +1 above the blow-up envelope, -1 below the zero guard, 0 inside the band.
int envelope_breach(cx tau, cx u, const IntegrationControl& c) {
    const double env = std::cbrt(std::abs(tau));
    const double au = std::abs(u);
    if (au > c.blow_up * env) return 1;
    if (au < c.zero_guard * env) return -1;
    return 0;
}

double segment_origin_distance(cx a, cx b) {
    const cx d = b - a;
    const double len2 = std::norm(d);
    if (len2 == 0.0) return std::abs(a);
    double t = -(a.real() * d.real() + a.imag() * d.imag()) / len2;
    t = std::clamp(t, 0.0, 1.0);
    return std::abs(a + t * d);
}

using Window = std::deque<std::tuple<cx, cx, cx>>;

void remember(Window& win, const SolutionState& st) {
    win.emplace_back(st.tau, st.u, st.du);
    if (win.size() > kWindowSize) win.pop_front();
}

std::string sample_dump(const Window& win) {
    std::ostringstream os;
    os.precision(17);
    os << "; samples (tau, u, du):";
    for (const auto& [t, u, d] : win)
        os << " [" << fmt_cx(t) << "; " << fmt_cx(u) << "; " << fmt_cx(d) << "]";
    return os.str();
}

using W3 = std::array<cx, 3>;

struct RunBook {
    std::vector<SolutionState>* traj;
    Window* win;
    long* budget;
    long* accepted;
    long* rejected;
    std::size_t* rebase;  // trajectory index where the current analytic stretch began
};

enum class SegmentOutcome { reached, triggered };

// Integrates cur along the straight segment to `target`, recording every
// accepted point. Returns `reached` with cur.tau == target exactly, or
// `triggered` with cur at the first accepted point outside the |u| band.
SegmentOutcome run_segment(SolutionState& cur, cx target, const EquationParams& p,
                           const IntegrationControl& c, const RunBook& bk) {
    // Tableau of the twelve-stage eighth-order pair, with the fifth/third
    // order error weights.
    constexpr double c2 = 0.526001519587677318785587544488e-1,
                     c3 = 0.789002279381515978178381316732e-1,
                     c4 = 0.118350341907227396726757197510e+0,
                     c5 = 0.281649658092772603273242802490e+0,
                     c6 = 0.333333333333333333333333333333e+0, c7 = 0.25e+0,
                     c8 = 0.307692307692307692307692307692e+0,
                     c9 = 0.651282051282051282051282051282e+0, c10 = 0.6e+0,
                     c11 = 0.857142857142857142857142857142e+0;
    constexpr double b1 = 5.42937341165687622380535766363e-2,
                     b6 = 4.45031289275240888144113950566e0,
                     b7 = 1.89151789931450038304281599044e0,
                     b8 = -5.8012039600105847814672114227e0,
                     b9 = 3.1116436695781989440891606237e-1,
                     b10 = -1.52160949662516078556178806805e-1,
                     b11 = 2.01365400804030348374776537501e-1,
                     b12 = 4.47106157277725905176885569043e-2;
    constexpr double a21 = 5.26001519587677318785587544488e-2,
                     a31 = 1.97250569845378994544595329183e-2,
                     a32 = 5.91751709536136983633785987549e-2,
                     a41 = 2.95875854768068491816892993775e-2,
                     a43 = 8.87627564304205475450678981324e-2,
                     a51 = 2.41365134159266685502369798665e-1,
                     a53 = -8.84549479328286085344864962717e-1,
                     a54 = 9.24834003261792003115737966543e-1,
                     a61 = 3.7037037037037037037037037037e-2,
                     a64 = 1.70828608729473871279604482173e-1,
                     a65 = 1.25467687566822425016691814123e-1, a71 = 3.7109375e-2,
                     a74 = 1.70252211019544039314978060272e-1,
                     a75 = 6.02165389804559606850219397283e-2, a76 = -1.7578125e-2;
    constexpr double a81 = 3.70920001185047927108779319836e-2,
                     a84 = 1.70383925712239993810214054705e-1,
                     a85 = 1.07262030446373284651809199168e-1,
                     a86 = -1.53194377486244017527936158236e-2,
                     a87 = 8.27378916381402288758473766002e-3,
                     a91 = 6.24110958716075717114429577812e-1,
                     a94 = -3.36089262944694129406857109825e0,
                     a95 = -8.68219346841726006818189891453e-1,
                     a96 = 2.75920996994467083049415600797e1,
                     a97 = 2.01540675504778934086186788979e1,
                     a98 = -4.34898841810699588477366255144e1,
                     a101 = 4.77662536438264365890433908527e-1,
                     a104 = -2.48811461997166764192642586468e0,
                     a105 = -5.90290826836842996371446475743e-1,
                     a106 = 2.12300514481811942347288949897e1,
                     a107 = 1.52792336328824235832596922938e1,
                     a108 = -3.32882109689848629194453265587e1,
                     a109 = -2.03312017085086261358222928593e-2;
    constexpr double a111 = -9.3714243008598732571704021658e-1,
                     a114 = 5.18637242884406370830023853209e0,
                     a115 = 1.09143734899672957818500254654e0,
                     a116 = -8.14978701074692612513997267357e0,
                     a117 = -1.85200656599969598641566180701e1,
                     a118 = 2.27394870993505042818970056734e1,
                     a119 = 2.49360555267965238987089396762e0,
                     a1110 = -3.0467644718982195003823669022e0,
                     a121 = 2.27331014751653820792359768449e0,
                     a124 = -1.05344954667372501984066689879e1,
                     a125 = -2.00087205822486249909675718444e0,
                     a126 = -1.79589318631187989172765950534e1,
                     a127 = 2.79488845294199600508499808837e1,
                     a128 = -2.85899827713502369474065508674e0,
                     a129 = -8.87285693353062954433549289258e0,
                     a1210 = 1.23605671757943030647266201528e1,
                     a1211 = 6.43392746015763530355970484046e-1;
    constexpr double bhh1 = 0.244094488188976377952755905512e+0,
                     bhh2 = 0.733846688281611857341361741547e+0,
                     bhh3 = 0.220588235294117647058823529412e-1;
    constexpr double er1 = 0.1312004499419488073250102996e-1,
                     er6 = -0.1225156446376204440720569753e+1,
                     er7 = -0.4957589496572501915214079952e+0,
                     er8 = 0.1664377182454986536961530415e+1,
                     er9 = -0.3503288487499736816886487290e+0,
                     er10 = 0.3341791187130174790297318841e+0,
                     er11 = 0.8192320648511571246570742613e-1,
                     er12 = -0.2235530786388629525884427845e-1;
    constexpr double safe = 0.9, facc1 = 3.0, facc2 = 1.0 / 6.0, expo1 = 1.0 / 8.0;

    const cx from = cur.tau;
    const double len = std::abs(target - from);
    if (len < 1e-13 * std::max(1.0, std::abs(target))) {
        cur.tau = target;
        return SegmentOutcome::reached;
    }
    const cx dir = (target - from) / len;
    const double hmax = c.max_step > 0.0 ? std::min(c.max_step, len) : len;

    W3 w{cur.u, cur.du, cur.phi};
    W3 k1, k2, k3, k4, k5, k6, k7, k8, k9, k10, ws, kc, w5;

    // Derivative with respect to the real arclength parameter along the
    // segment; false marks a singular or overflowing evaluation point.
    auto deriv = [&](double at, const W3& y, W3& out) -> bool {
        cx ddu, dphi;
        if (!flow(from + at * dir, y[0], y[1], p, ddu, dphi)) return false;
        out[0] = dir * y[1];
        out[1] = dir * ddu;
        out[2] = dir * dphi;
        return true;
    };

    if (!deriv(0.0, w, k1))
        throw NumericError("integration: right-hand side singular at the segment start tau = " +
                           fmt_cx(from));

    // Starting step size: curvature probe via one Euler step.
    double h;
    {
        double dnf = 0.0, dny = 0.0;
        for (int i = 0; i < 3; ++i) {
            const double sk = c.abs_tol + c.rel_tol * std::abs(w[i]);
            dnf += std::norm(k1[i]) / (sk * sk);
            dny += std::norm(w[i]) / (sk * sk);
        }
        h = std::min(dnf <= 1e-10 || dny <= 1e-10 ? 1e-6 : std::sqrt(dny / dnf) * 0.01, hmax);
        for (int i = 0; i < 3; ++i) ws[i] = w[i] + h * k1[i];
        if (deriv(h, ws, k2)) {
            double der2 = 0.0;
            for (int i = 0; i < 3; ++i) {
                const double sk = c.abs_tol + c.rel_tol * std::abs(w[i]);
                der2 += std::norm(k2[i] - k1[i]) / (sk * sk);
            }
            der2 = std::sqrt(der2) / h;
            const double der12 = std::max(der2, std::sqrt(dnf));
            const double h1 = der12 <= 1e-15 ? std::max(1e-6, h * 1e-3)
                                             : std::pow(0.01 / der12, expo1);
            h = std::min({100.0 * h, h1, hmax});
        } else {
            h = std::max(1e-10, h * 1e-3);
        }
    }

    double s = 0.0;
    [[maybe_unused]] double facold = 1e-4;  // kept for a future PI controller
    bool reject = false, last = false;

    while (true) {
        if (--(*bk.budget) <= 0)
            throw NumericError("integration: step budget exhausted near tau = " +
                               fmt_cx(from + s * dir));
        if (0.1 * h <= s * kUround)
            throw NumericError("integration: step size underflow near tau = " +
                               fmt_cx(from + s * dir));
        if (s + 1.01 * h - len > 0.0) {
            h = len - s;
            last = true;
        }

        bool ok = true;
        for (int i = 0; i < 3; ++i) ws[i] = w[i] + h * (a21 * k1[i]);
        ok = ok && deriv(s + c2 * h, ws, k2);
        if (ok) {
            for (int i = 0; i < 3; ++i) ws[i] = w[i] + h * (a31 * k1[i] + a32 * k2[i]);
            ok = deriv(s + c3 * h, ws, k3);
        }
        if (ok) {
            for (int i = 0; i < 3; ++i) ws[i] = w[i] + h * (a41 * k1[i] + a43 * k3[i]);
            ok = deriv(s + c4 * h, ws, k4);
        }
        if (ok) {
            for (int i = 0; i < 3; ++i)
                ws[i] = w[i] + h * (a51 * k1[i] + a53 * k3[i] + a54 * k4[i]);
            ok = deriv(s + c5 * h, ws, k5);
        }
        if (ok) {
            for (int i = 0; i < 3; ++i)
                ws[i] = w[i] + h * (a61 * k1[i] + a64 * k4[i] + a65 * k5[i]);
            ok = deriv(s + c6 * h, ws, k6);
        }
        if (ok) {
            for (int i = 0; i < 3; ++i)
                ws[i] = w[i] + h * (a71 * k1[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
            ok = deriv(s + c7 * h, ws, k7);
        }
        if (ok) {
            for (int i = 0; i < 3; ++i)
                ws[i] = w[i] + h * (a81 * k1[i] + a84 * k4[i] + a85 * k5[i] + a86 * k6[i] +
                                    a87 * k7[i]);
            ok = deriv(s + c8 * h, ws, k8);
        }
        if (ok) {
            for (int i = 0; i < 3; ++i)
                ws[i] = w[i] + h * (a91 * k1[i] + a94 * k4[i] + a95 * k5[i] + a96 * k6[i] +
                                    a97 * k7[i] + a98 * k8[i]);
            ok = deriv(s + c9 * h, ws, k9);
        }
        if (ok) {
            for (int i = 0; i < 3; ++i)
                ws[i] = w[i] + h * (a101 * k1[i] + a104 * k4[i] + a105 * k5[i] + a106 * k6[i] +
                                    a107 * k7[i] + a108 * k8[i] + a109 * k9[i]);
            ok = deriv(s + c10 * h, ws, k10);
        }
        if (ok) {
            for (int i = 0; i < 3; ++i)
                ws[i] = w[i] + h * (a111 * k1[i] + a114 * k4[i] + a115 * k5[i] + a116 * k6[i] +
                                    a117 * k7[i] + a118 * k8[i] + a119 * k9[i] + a1110 * k10[i]);
            ok = deriv(s + c11 * h, ws, k2);  // stage 11 reuses k2
        }
        if (ok) {
            for (int i = 0; i < 3; ++i)
                ws[i] = w[i] + h * (a121 * k1[i] + a124 * k4[i] + a125 * k5[i] + a126 * k6[i] +
                                    a127 * k7[i] + a128 * k8[i] + a129 * k9[i] + a1210 * k10[i] +
                                    a1211 * k2[i]);
            ok = deriv(s + h, ws, k3);  // stage 12 reuses k3
        }
        double err = 1e40;
        if (ok) {
            for (int i = 0; i < 3; ++i) {
                kc[i] = b1 * k1[i] + b6 * k6[i] + b7 * k7[i] + b8 * k8[i] + b9 * k9[i] +
                        b10 * k10[i] + b11 * k2[i] + b12 * k3[i];
                w5[i] = w[i] + h * kc[i];
                ok = ok && finite_cx(w5[i]);
            }
        }
        if (ok) {
            double e5 = 0.0, e3 = 0.0;
            for (int i = 0; i < 3; ++i) {
                const double sk =
                    c.abs_tol + c.rel_tol * std::max(std::abs(w[i]), std::abs(w5[i]));
                const cx q3 = kc[i] - bhh1 * k1[i] - bhh2 * k9[i] - bhh3 * k3[i];
                e3 += std::norm(q3) / (sk * sk);
                const cx q5 = er1 * k1[i] + er6 * k6[i] + er7 * k7[i] + er8 * k8[i] +
                              er9 * k9[i] + er10 * k10[i] + er11 * k2[i] + er12 * k3[i];
                e5 += std::norm(q5) / (sk * sk);
            }
            double deno = e5 + 0.01 * e3;
            if (deno <= 0.0) deno = 3.0;
            err = h * e5 * std::sqrt(1.0 / (3.0 * deno));
            if (!std::isfinite(err)) err = 1e40;
        }

        const double fac11 = std::pow(err, expo1);
        if (err <= 1.0) {
            facold = std::max(err, 1e-4);
            ++*bk.accepted;
            const double s_new = s + h;
            const cx tau_new = last ? target : from + s_new * dir;
            if (w5[0] == cx{})
                throw NumericError("integration: landed exactly on a zero of u at tau = " +
                                   fmt_cx(tau_new));
            SolutionState st = make_state(tau_new, w5[0], w5[1], w5[2], p);
            bk.traj->push_back(st);
            remember(*bk.win, st);
            cur = st;
            if (last) return SegmentOutcome::reached;
            if (envelope_breach(tau_new, w5[0], c) != 0) return SegmentOutcome::triggered;
            if (!deriv(s_new, w5, k1))
                throw NumericError(
                    "integration: right-hand side singular at the accepted point tau = " +
                    fmt_cx(tau_new));
            w = w5;
            s = s_new;
            double hnew = h / std::clamp(fac11 / safe, facc2, facc1);
            if (hnew > hmax) hnew = hmax;
            if (reject) hnew = std::min(hnew, h);
            reject = false;
            h = hnew;
        } else {
            h = h / std::min(facc1, fac11 / safe);
            if (*bk.accepted >= 1) ++*bk.rejected;
            reject = true;
            last = false;
        }
    }
}

// Phase increment along the straight chord from center + x_in to
// center + x_out inside a vault disk: the 2a/tau part integrates to a
// principal logarithm (the chord subtends a small angle seen from 0), and
// b/u splits into the exact residue logarithm of the reciprocal series plus
// a termwise antiderivative of its regular part. The residue term is
// removed at the coefficient level, so tiny entry radii cost no precision.
cx vault_phase_increment(const LocalSeries& ser, const EquationParams& p, cx x_in, cx x_out) {
    const bool at_pole = ser.kind == SiteKind::pole;
    // Regular factor of u: u = x^{-2} (pole) or x (zero) times sum s_j x^j.
    const int n = at_pole ? ser.order + 3 : ser.order;
    std::vector<cx> sreg(static_cast<std::size_t>(n));
    if (at_pole) {
        sreg[0] = ser.u_lead;
        for (int j = 2; j < n; ++j) sreg[j] = ser.coeffs_u[static_cast<std::size_t>(j - 2)];
    } else {
        for (int j = 0; j < n; ++j) sreg[j] = ser.coeffs_u[static_cast<std::size_t>(j + 1)];
    }
    std::vector<cx> rec(sreg.size());
    rec[0] = 1.0 / sreg[0];
    for (int j = 1; j < n; ++j) {
        cx acc{};
        for (int m = 1; m <= j; ++m) acc += sreg[static_cast<std::size_t>(m)] * rec[static_cast<std::size_t>(j - m)];
        rec[static_cast<std::size_t>(j)] = -acc / sreg[0];
    }

    cx total = 2.0 * p.a * std::log((ser.center + x_out) / (ser.center + x_in));
    if (at_pole) {
        // b/u = b x^2 * reciprocal series; antiderivative terms start at x^3/3.
        cx pin = x_in * x_in * x_in;
        cx pout = x_out * x_out * x_out;
        for (int j = 0; j < n; ++j) {
            total += p.b * rec[static_cast<std::size_t>(j)] * (pout - pin) / double(j + 3);
            pin *= x_in;
            pout *= x_out;
        }
    } else {
        // b/u = b x^{-1} * reciprocal series; the j = 0 term carries the exact
        // residue and integrates to a logarithm whose 2 pi k side ambiguity
        // only shifts phi by a full turn of e^{i phi}.
        total += p.b * rec[0] * std::log(x_out / x_in);
        cx pin = x_in;
        cx pout = x_out;
        for (int j = 1; j < n; ++j) {
            total += p.b * rec[static_cast<std::size_t>(j)] * (pout - pin) / double(j);
            pin *= x_in;
            pout *= x_out;
        }
    }
    return total;
}

struct VaultOutcome {
    TrajectoryEvent event;
    SolutionState exit_state;
    bool consumed_target = false;  // the segment target lay inside the vault disk
};

// Sharpens the free coefficient of a fitted local series by matching the
// tracked Hamiltonian at one sample point. Close to the center the free
// coefficient's imprint on (u, u') sits below the integration noise, while
// the energy resolves it cleanly; the solve is a damped complex secant.
cx refine_free_param(SiteKind kind, cx center, cx free0, cx anchor_tau, cx anchor_h,
                     const EquationParams& p, int order) {
    auto mismatch = [&](cx fp) -> cx {
        const LocalSeries s =
            kind == SiteKind::pole
                ? series_at_pole(center, fp, p, order)
                : series_at_zero(center, kind == SiteKind::zero_plus ? 1 : -1, fp, p, order);
        return s.eval_h(anchor_tau) - anchor_h;
    };
    cx f0 = free0;
    cx f1 = free0 + cx{0.05, 0.02} * (std::abs(free0) + 1.0);
    cx g0, g1;
    try {
        g0 = mismatch(f0);
        g1 = mismatch(f1);
    } catch (const std::exception&) {
        return free0;
    }
    cx best = std::abs(g0) <= std::abs(g1) ? f0 : f1;
    double best_g = std::min(std::abs(g0), std::abs(g1));
    for (int it = 0; it < 40; ++it) {
        const cx dg = g1 - g0;
        if (dg == cx{}) break;
        const cx f2 = f1 - g1 * (f1 - f0) / dg;
        if (!finite_cx(f2)) break;
        cx g2;
        try {
            g2 = mismatch(f2);
        } catch (const std::exception&) {
            break;
        }
        f0 = f1;
        g0 = g1;
        f1 = f2;
        g1 = g2;
        if (std::abs(g2) < best_g) {
            best_g = std::abs(g2);
            best = f2;
        }
        if (std::abs(f1 - f0) <= 1e-14 * std::max(1.0, std::abs(f1))) break;
    }
    return finite_cx(best) ? best : free0;
}

// Classifies the singularity behind a band breach from the recent samples,
// builds its local series, and hands back the state on the far side.
VaultOutcome vault_across(const RunBook& bk, const SolutionState& trigger, int breach,
                          cx target, const EquationParams& p, const IntegrationControl& c) {
    const Window& win = *bk.win;
    std::vector<std::tuple<cx, cx, cx>> samples(win.begin(), win.end());
    LocalFit fit;
    try {
        fit = fit_local(p, samples);
    } catch (const std::exception& e) {
        throw NumericError(std::string("vault: local fit failed: ") + e.what() +
                           sample_dump(win));
    }
    const bool at_pole = fit.kind == SiteKind::pole;
    if (!(fit.residual < 1e-4))
        throw NumericError("vault: local fit residual too large for a trustworthy crossing" +
                           sample_dump(win));
    if (at_pole != (breach > 0))
        throw NumericError("vault: fitted kind disagrees with the side of the band breach" +
                           sample_dump(win));
    if (!at_pole && fit.ambiguous)
        throw NumericError("vault: ambiguous zero kind; phase residue undetermined" +
                           sample_dump(win));

    auto build = [&](cx fp) {
        return at_pole ? series_at_pole(fit.center, fp, p, c.series_order)
                       : series_at_zero(fit.center, fit.kind == SiteKind::zero_plus ? 1 : -1,
                                        fp, p, c.series_order);
    };
    LocalSeries ser = build(fit.free_param);
    {
        // Anchor at the farthest in-disk sample of the current stretch.
        const double r_cap = 0.4 * ser.trust_radius(1e-12);
        const SolutionState* anchor = nullptr;
        double r_anchor = 0.0;
        for (std::size_t i = bk.traj->size(); i-- > *bk.rebase;) {
            const double r = std::abs((*bk.traj)[i].tau - fit.center);
            if (r <= r_cap && r > r_anchor) {
                r_anchor = r;
                anchor = &(*bk.traj)[i];
            }
        }
        if (anchor != nullptr) {
            const cx refined = refine_free_param(fit.kind, fit.center, fit.free_param,
                                                 anchor->tau, anchor->H, p, c.series_order);
            if (refined != fit.free_param) {
                fit.free_param = refined;
                ser = build(refined);
            }
        }
    }

    const double env = std::cbrt(std::abs(fit.center));
    const double trust = ser.trust_radius(std::max(c.rel_tol, 1e-13));
    // Smallest radius whose series state sits clearly back inside the band.
    const double r_min = at_pole
        ? 2.0 * std::sqrt(std::abs(ser.u_lead) / (c.blow_up * env))
        : 4.0 * c.zero_guard * env / std::abs(p.b);
    double r_exit = std::max(c.exit_fraction * trust, r_min);
    r_exit = std::min(r_exit, 0.25 * std::abs(fit.center));
    if (!(r_exit <= trust) || !(r_exit > 0.0))
        throw NumericError(
            "vault: cannot clear the detection band within the series trust radius at tau = " +
            fmt_cx(fit.center) + sample_dump(win));

    const cx to_target = target - fit.center;
    const double dist_target = std::abs(to_target);
    VaultOutcome vo;
    cx exit_tau;
    if (dist_target <= r_exit) {
        if (dist_target < r_min)
            throw NumericError("vault: the path ends inside the singular core at tau = " +
                               fmt_cx(fit.center) + "; move the terminal waypoint away");
        exit_tau = target;
        vo.consumed_target = true;
    } else {
        exit_tau = fit.center + (r_exit / dist_target) * to_target;
    }

    const cx dphi =
        vault_phase_increment(ser, p, trigger.tau - fit.center, exit_tau - fit.center);
    const SolutionState ex = make_state(exit_tau, ser.eval_u(exit_tau), ser.eval_du(exit_tau),
                                        trigger.phi + dphi, p);
    if (!vo.consumed_target && envelope_breach(ex.tau, ex.u, c) != 0)
        throw NumericError("vault: exit state still outside the detection band at tau = " +
                           fmt_cx(exit_tau) + sample_dump(win));
    vo.event = TrajectoryEvent{fit.kind,    fit.center, fit.free_param,       fit,
                               trigger.tau, exit_tau,   std::abs(exit_tau - fit.center)};
    vo.exit_state = ex;
    return vo;
}

}  // namespace

cx hamiltonian_value(cx tau, cx u, cx du, const EquationParams& p) {
    if (u == cx{} || tau == cx{})
        throw PreconditionError("Hamiltonian value needs u != 0 and tau != 0");
    const cx am = p.a - cx{0.0, 0.5};
    return am * p.b / u + am * am / (2.0 * tau) +
           tau / (4.0 * u * u) * (du * du + p.b * p.b) +
           4.0 * static_cast<double>(p.epsilon) * u;
}

cx auxiliary_value(cx tau, cx u, cx du, const EquationParams& p) {
    if (u == cx{} || tau == cx{})
        throw PreconditionError("auxiliary value needs u != 0 and tau != 0");
    const cx ia_half = cx{0.0, 1.0} * p.a + 0.5;
    return tau * (du - cx{0.0, 1.0} * p.b) / (4.0 * u) - 0.5 * ia_half;
}

SolutionState make_state(cx tau, cx u, cx du, cx phi, const EquationParams& p) {
    SolutionState s;
    s.tau = tau;
    s.u = u;
    s.du = du;
    s.phi = phi;
    s.H = hamiltonian_value(tau, u, du, p);
    s.f = auxiliary_value(tau, u, du, p);
    return s;
}

void check_state(const SolutionState& s, const EquationParams& p, double tol) {
    const cx h = hamiltonian_value(s.tau, s.u, s.du, p);
    const cx f = auxiliary_value(s.tau, s.u, s.du, p);
    if (std::abs(h - s.H) > tol * std::max(1.0, std::abs(h)))
        throw InvariantViolation("solution state: stored H deviates from its closed form at tau = " +
                                 fmt_cx(s.tau));
    if (std::abs(f - s.f) > tol * std::max(1.0, std::abs(f)))
        throw InvariantViolation("solution state: stored f deviates from its closed form at tau = " +
                                 fmt_cx(s.tau));
}

Derivatives rhs(const SolutionState& s, const EquationParams& p) {
    validate_equation(p);
    cx ddu, dphi;
    if (!flow(s.tau, s.u, s.du, p, ddu, dphi))
        throw PreconditionError(
            "right-hand side is singular (u = 0 or tau = 0, or the value overflows) at tau = " +
            fmt_cx(s.tau));
    return Derivatives{s.du, ddu, dphi};
}

std::array<cx, 9> rhs_jacobian(const SolutionState& s, const EquationParams& p) {
    validate_equation(p);
    if (s.u == cx{} || s.tau == cx{})
        throw PreconditionError("right-hand side Jacobian needs u != 0 and tau != 0");
    const cx u = s.u, du = s.du, tau = s.tau;
    const double b = p.b;
    const double e8 = 8.0 * static_cast<double>(p.epsilon);
    return {
        cx{},                                                       // d(du)/du(u)
        cx{1.0},                                                    // d(du)/d(du)
        cx{},                                                       // d(du)/dtau
        -du * du / (u * u) - 2.0 * e8 * u / tau - b * b / (u * u),  // d(ddu)/du
        2.0 * du / u - 1.0 / tau,                                   // d(ddu)/d(du)
        du / (tau * tau) - (-e8 * u * u + 2.0 * p.a * b) / (tau * tau),  // d(ddu)/dtau
        -b / (u * u),                                               // d(dphi)/du
        cx{},                                                       // d(dphi)/d(du)
        -2.0 * p.a / (tau * tau),                                   // d(dphi)/dtau
    };
}

IntegrationResult integrate(const std::vector<cx>& path, const SolutionState& initial,
                            const EquationParams& p, const IntegrationControl& ctrl) {
    validate_ctrl(ctrl);
    validate_equation(p);
    if (path.empty())
        throw PreconditionError("integration: the path needs at least one waypoint");
    if (std::abs(path.front() - initial.tau) > 1e-9 * std::max(1.0, std::abs(initial.tau)))
        throw PreconditionError("integration: the path must start at the initial state's tau");
    for (std::size_t i = 0; i + 1 < path.size(); ++i)
        if (segment_origin_distance(path[i], path[i + 1]) < ctrl.origin_radius)
            throw PreconditionError(
                "integration: a path segment enters the excluded disk around tau = 0");
    check_state(initial, p, 1e-8);
    if (envelope_breach(initial.tau, initial.u, ctrl) != 0)
        throw PreconditionError(
            "integration: the initial state lies outside the |u| detection band");

    IntegrationResult out;
    out.trajectory.push_back(initial);
    Window win;
    remember(win, initial);
    long budget = ctrl.max_steps;
    std::size_t rebase = 0;
    RunBook bk{&out.trajectory, &win, &budget, &out.accepted, &out.rejected, &rebase};
    SolutionState cur = initial;

    for (std::size_t i = 1; i < path.size(); ++i) {
        const cx target = path[i];
        bool segment_done = false;
        while (!segment_done) {
            if (run_segment(cur, target, p, ctrl, bk) == SegmentOutcome::reached) {
                segment_done = true;
                continue;
            }
            const int breach = envelope_breach(cur.tau, cur.u, ctrl);
            VaultOutcome vo = vault_across(bk, cur, breach, target, p, ctrl);
            if (!out.events.empty()) {
                const TrajectoryEvent& prev = out.events.back();
                if (std::abs(vo.event.center - prev.center) < 0.5 * prev.exit_radius)
                    throw NumericError(
                        "integration: a vault failed to clear its singularity at tau = " +
                        fmt_cx(vo.event.center));
            }
            out.events.push_back(vo.event);
            cur = vo.exit_state;
            out.trajectory.push_back(cur);
            rebase = out.trajectory.size() - 1;
            win.clear();
            remember(win, cur);
            if (vo.consumed_target) segment_done = true;
        }
    }
    out.final_state = cur;
    return out;
}

SolutionState seed_from_asymptotics(cx tau0, const MonodromyData& md,
                                    const EquationParams& p, double min_phase) {
    const Axis axis = std::abs(tau0.real()) >= std::abs(tau0.imag()) ? Axis::real_axis
                                                                     : Axis::imag_axis;
    const PhaseContext ctx = phase_context(tau0, md, p, axis);
    if (std::abs(ctx.phi) < min_phase) {
        std::ostringstream os;
        os.precision(17);
        os << "seed: |phase| = " << std::abs(ctx.phi) << " at tau0 = " << fmt_cx(tau0)
           << " is below the floor " << min_phase << "; seed farther out";
        throw PreconditionError(os.str());
    }
    const cx u = u_leading(ctx);
    const cx du = u * log_deriv_leading(ctx);
    return make_state(tau0, u, du, cx{}, p);
}

std::vector<LocatedSite> locate_singularities(const MonodromyData& md,
                                              const EquationParams& p, Axis axis,
                                              long m_lo, long m_hi,
                                              const IntegrationControl& ctrl) {
    validate_ctrl(ctrl);
    validate_equation(p);
    if (m_lo < 1 || m_hi < m_lo)
        throw PreconditionError("singularity sweep: need 1 <= m_lo <= m_hi");

    struct Pred {
        long m;
        SiteKind kind;
        cx tau;
    };
    const long pad_lo = std::max<long>(1, m_lo - 1);
    const long pad_hi = m_hi + 3;
    std::vector<Pred> sites;
    std::vector<LatticePoint> poles;
    for (SiteKind k : {SiteKind::pole, SiteKind::zero_plus, SiteKind::zero_minus}) {
        std::vector<LatticePoint> pts = site_lattice(md, p, axis, k, pad_lo, pad_hi, true);
        for (const LatticePoint& q : pts) sites.push_back({q.m, k, q.tau_refined});
        if (k == SiteKind::pole) poles = std::move(pts);
    }
    auto pole_at = [&](long m) -> cx {
        for (const LatticePoint& q : poles)
            if (q.m == m) return q.tau_refined;
        throw NumericError("singularity sweep: missing lattice site");
    };

    // Seed between the first two poles beyond the window, clear of every
    // predicted exclusion band and clearly inside the |u| detection band.
    const cx p1 = pole_at(m_hi + 1);
    const cx p2 = pole_at(m_hi + 2);
    SolutionState seed{};
    bool seeded = false;
    for (double fr : {0.5, 0.38, 0.62, 0.26, 0.74, 0.44, 0.56, 0.32, 0.68, 0.2, 0.8}) {
        const cx tau0 = p1 + fr * (p2 - p1);
        try {
            seed = seed_from_asymptotics(tau0, md, p, 0.0);
        } catch (const NearSingularity&) {
            continue;
        }
        if (envelope_breach(seed.tau, seed.u, ctrl) == 0) {
            seeded = true;
            break;
        }
    }
    if (!seeded)
        throw NumericError(
            "singularity sweep: no safe seed point between the outer lattice sites");

    // Visit plan: hole by hole from the outside in, outermost site first
    // within each hole.  The poles sit on the sweep ray, but the zeroes live
    // off it (in conjugate pairs when the solution is real on the ray), and
    // either way the lattice predictions are far coarser than the detection
    // band, so a path that merely passes through them never breaches it.
    std::vector<const Pred*> plan;
    for (long m = m_hi; m >= m_lo; --m) {
        std::vector<const Pred*> hole;
        for (const Pred& q : sites)
            if (q.m == m) hole.push_back(&q);
        std::sort(hole.begin(), hole.end(), [](const Pred* x, const Pred* y) {
            return std::abs(x->tau) > std::abs(y->tau);
        });
        plan.insert(plan.end(), hole.begin(), hole.end());
    }

    // Hunt each planned site: stage at the prediction, then aim successive
    // legs through the center implied by the local behavior of u (u'/u is
    // -2/x at a double pole, 1/x at a simple zero), overshooting by a
    // margin safely outside the singular core so the crossing is recorded
    // and cleared by the vault in a single move.
    std::vector<TrajectoryEvent> crossings;
    SolutionState cur = seed;
    for (const Pred* site : plan) {
        IntegrationResult stage = integrate({cur.tau, site->tau}, cur, p, ctrl);
        for (const TrajectoryEvent& ev : stage.events) crossings.push_back(ev);
        cur = stage.final_state;

        const double env = std::cbrt(std::abs(site->tau));
        const double r_cross =
            site->kind == SiteKind::pole
                ? 8.0 * std::sqrt(0.25 * std::abs(site->tau) / (ctrl.blow_up * env))
                : 200.0 * ctrl.zero_guard * env / std::abs(p.b);
        bool recorded = !stage.events.empty() &&
                        std::abs(stage.events.back().center - site->tau) < r_cross;
        for (int it = 0; it < 30 && !recorded; ++it) {
            const cx delta = site->kind == SiteKind::pole ? 2.0 * cur.u / cur.du
                                                          : -cur.u / cur.du;
            const double ad = std::abs(delta);
            if (!std::isfinite(ad) || ad > 0.3 * std::abs(site->tau))
                throw NumericError(
                    "singularity sweep: the hunt lost the predicted site at tau = " +
                    fmt_cx(site->tau));
            const cx target = cur.tau + delta + (ad > 0.0 ? delta / ad : cx{1.0}) * r_cross;
            IntegrationResult leg = integrate({cur.tau, target}, cur, p, ctrl);
            for (const TrajectoryEvent& ev : leg.events) crossings.push_back(ev);
            cur = leg.final_state;
            recorded = !leg.events.empty();
        }
        if (!recorded)
            throw NumericError(
                "singularity sweep: could not drive |u| into the detection band near the "
                "predicted site at tau = " +
                fmt_cx(site->tau));
    }

    // Pair every crossing with the nearest predicted site of its kind.
    std::vector<LocatedSite> found;
    std::vector<int> occupancy(sites.size(), 0);
    for (const TrajectoryEvent& ev : crossings) {
        std::size_t best = 0;
        double d_best = std::numeric_limits<double>::infinity();
        double d_second = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < sites.size(); ++j) {
            const double d = std::abs(ev.center - sites[j].tau);
            if (d < d_best) {
                d_second = d_best;
                d_best = d;
                best = j;
            } else if (d < d_second) {
                d_second = d;
            }
        }
        const Pred& site = sites[best];
        if (!(d_best < 0.33 * d_second))
            throw InvariantViolation(
                "singularity sweep: a crossing at tau = " + fmt_cx(ev.center) +
                " does not pair cleanly with a unique predicted site");
        if (site.kind != ev.kind)
            throw InvariantViolation("singularity sweep: the crossing at tau = " +
                                     fmt_cx(ev.center) +
                                     " has a different kind than its predicted site");
        ++occupancy[best];
        if (site.m >= m_lo && site.m <= m_hi)
            found.push_back(LocatedSite{site.m, site.kind, ev.center, site.tau});
    }
    for (std::size_t j = 0; j < sites.size(); ++j) {
        if (sites[j].m < m_lo || sites[j].m > m_hi) continue;
        if (occupancy[j] != 1) {
            std::ostringstream os;
            os << "singularity sweep: predicted hole m = " << sites[j].m << " (kind "
               << static_cast<int>(sites[j].kind) << ") holds " << occupancy[j]
               << " crossings instead of exactly one";
            throw InvariantViolation(os.str());
        }
    }
    std::sort(found.begin(), found.end(), [](const LocatedSite& x, const LocatedSite& y) {
        if (x.m != y.m) return x.m < y.m;
        return static_cast<int>(x.kind) < static_cast<int>(y.kind);
    });
    return found;
}

}  // namespace dp3
