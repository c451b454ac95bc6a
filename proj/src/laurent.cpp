#include "dp3/laurent.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>

#include "json.hpp"

namespace dp3 {
namespace {

constexpr int kGuard = 6;        // internal orders carried beyond `order`
constexpr int kMinOrder = 6;
constexpr int kMaxOrder = 64;
constexpr double kRowTol = 1e-9;  // relative tolerance for rows that must vanish

// Dense Laurent polynomial on a contiguous power window.
struct Poly {
    int lo = 0;
    std::vector<cx> c;

    cx at(int k) const {
        const int i = k - lo;
        if (i < 0 || i >= static_cast<int>(c.size())) return cx{};
        return c[static_cast<std::size_t>(i)];
    }
    void set(int k, cx v) {
        if (c.empty()) {
            lo = k;
            c.assign(1, v);
            return;
        }
        if (k < lo) {
            c.insert(c.begin(), static_cast<std::size_t>(lo - k), cx{});
            lo = k;
        } else if (k >= lo + static_cast<int>(c.size())) {
            c.resize(static_cast<std::size_t>(k - lo) + 1);
        }
        c[static_cast<std::size_t>(k - lo)] = v;
    }
    int hi() const { return lo + static_cast<int>(c.size()) - 1; }
};

Poly mul(const Poly& x, const Poly& y) {
    Poly out;
    if (x.c.empty() || y.c.empty()) return out;
    out.lo = x.lo + y.lo;
    out.c.assign(x.c.size() + y.c.size() - 1, cx{});
    for (std::size_t i = 0; i < x.c.size(); ++i) {
        if (x.c[i] == cx{}) continue;
        for (std::size_t j = 0; j < y.c.size(); ++j)
            out.c[i + j] += x.c[i] * y.c[j];
    }
    return out;
}

Poly scaled(const Poly& x, cx w) {
    Poly out = x;
    for (cx& v : out.c) v *= w;
    return out;
}

void add_into(Poly& acc, const Poly& x) {
    for (int k = x.lo; k <= x.hi(); ++k)
        if (x.at(k) != cx{}) acc.set(k, acc.at(k) + x.at(k));
}

Poly deriv(const Poly& x) {
    Poly out;
    for (int k = x.lo; k <= x.hi(); ++k)
        if (k != 0) out.set(k - 1, static_cast<double>(k) * x.at(k));
    return out;
}

// Reciprocal of a series whose lowest nonzero power is lo_true, carried to
// n_terms coefficients.
Poly reciprocal(const Poly& x, int lo_true, int n_terms) {
    std::vector<cx> v(static_cast<std::size_t>(n_terms));
    for (int n = 0; n < n_terms; ++n) v[static_cast<std::size_t>(n)] = x.at(lo_true + n);
    if (v[0] == cx{}) throw NumericError("series reciprocal: zero leading coefficient");
    std::vector<cx> w(static_cast<std::size_t>(n_terms));
    w[0] = 1.0 / v[0];
    for (int n = 1; n < n_terms; ++n) {
        cx acc{};
        for (int m = 1; m <= n; ++m)
            acc += v[static_cast<std::size_t>(m)] * w[static_cast<std::size_t>(n - m)];
        w[static_cast<std::size_t>(n)] = -acc / v[0];
    }
    Poly out;
    out.lo = -lo_true;
    out.c = std::move(w);
    return out;
}

// The defining polynomial
//   F = tau (u u'' - (u')^2 - b^2) + u u' + 8 eps u^3 - 2 a b u,
// tau = center + x.  Every row of F vanishes exactly when u solves the
// equation; a truncation leaves a computable surviving tail.
Poly defining_poly(const Poly& u, cx center, const EquationParams& p) {
    Poly tau;
    tau.set(0, center);
    tau.set(1, cx(1.0));
    const Poly up = deriv(u);
    const Poly upp = deriv(up);

    Poly core = mul(u, upp);
    add_into(core, scaled(mul(up, up), cx(-1.0)));
    core.set(0, core.at(0) - cx(p.b * p.b));

    Poly out = mul(tau, core);
    add_into(out, mul(u, up));
    add_into(out, scaled(mul(mul(u, u), u), cx(8.0 * p.epsilon)));
    add_into(out, scaled(u, -2.0 * p.a * p.b));
    return out;
}

// Per-row sum of the term magnitudes entering the defining polynomial, used
// to judge whether a row vanished relative to its own scale.
Poly defining_scale(const Poly& u, cx center, const EquationParams& p) {
    const auto abs_deriv = [](const Poly& x) {
        Poly out;
        for (int k = x.lo; k <= x.hi(); ++k)
            if (k != 0) out.set(k - 1, std::abs(static_cast<double>(k)) * x.at(k));
        return out;
    };
    Poly au;
    for (int k = u.lo; k <= u.hi(); ++k) au.set(k, cx(std::abs(u.at(k))));
    Poly atau;
    atau.set(0, cx(std::abs(center)));
    atau.set(1, cx(1.0));
    const Poly aup = abs_deriv(au);
    const Poly aupp = abs_deriv(aup);

    Poly core = mul(au, aupp);
    add_into(core, mul(aup, aup));
    core.set(0, core.at(0) + cx(p.b * p.b));

    Poly out = mul(atau, core);
    add_into(out, mul(au, aup));
    add_into(out, scaled(mul(mul(au, au), au), cx(8.0)));
    add_into(out, scaled(au, 2.0 * std::abs(p.a) * std::abs(p.b)));
    return out;
}

// Solve for the coefficient of x^k so that the given row of the defining
// polynomial vanishes; the row is affine in that coefficient.
void solve_row(Poly& u, int k, int row, cx center, const EquationParams& p) {
    u.set(k, cx{});
    const cx f0 = defining_poly(u, center, p).at(row);
    u.set(k, cx(1.0));
    const cx f1 = defining_poly(u, center, p).at(row);
    const cx slope = f1 - f0;
    if (slope == cx{}) throw NumericError("local series recursion hit a zero pivot");
    u.set(k, -f0 / slope);
}

void check_rows_vanish(const Poly& u, cx center, const EquationParams& p, int row_lo,
                       int row_hi, const char* what) {
    const Poly fs = defining_poly(u, center, p);
    const Poly sc = defining_scale(u, center, p);
    for (int m = row_lo; m <= row_hi; ++m) {
        const double scale = std::max(1.0, std::abs(sc.at(m)));
        if (!(std::abs(fs.at(m)) <= kRowTol * scale))
            throw InvariantViolation(std::string("local series construction: ") + what);
    }
}

void validate_common(cx center, const EquationParams& p, int order) {
    if (center == cx{})
        throw PreconditionError("local series: expansion about tau = 0 is not defined");
    if (!(std::abs(center) > 0.0) || !std::isfinite(std::abs(center)))
        throw PreconditionError("local series: center must be finite and nonzero");
    if (p.b == 0.0) throw PreconditionError("local series: b must be nonzero");
    if (p.epsilon != 1 && p.epsilon != -1)
        throw PreconditionError("local series: epsilon must be +1 or -1");
    if (order < kMinOrder || order > kMaxOrder)
        throw PreconditionError("local series: order must lie in [6, 64]");
}

// (a - i/2)^2 / (2 tau) expanded about tau = center; the part of the energy
// function that all kinds share and that Laurent data at poles and
// descending zeroes leave out.
Poly energy_shift_poly(cx center, const EquationParams& p, int n_terms) {
    const cx w = sq(p.a - cx(0.0, 0.5)) * 0.5;
    Poly out;
    cx pw = 1.0 / center;
    for (int k = 0; k < n_terms; ++k) {
        out.set(k, w * pw);
        pw *= -1.0 / center;
    }
    return out;
}

struct Composed {
    Poly h_shifted;  // energy minus the shared shift, full Laurent window
    Poly f;          // auxiliary combination, full Laurent window
};

Composed compose_h_f(const Poly& u, int lo_true, cx center, const EquationParams& p,
                     int n_inv) {
    Poly tau;
    tau.set(0, center);
    tau.set(1, cx(1.0));
    const Poly up = deriv(u);
    const Poly iu = reciprocal(u, lo_true, n_inv);

    Poly quad = mul(up, up);
    quad.set(0, quad.at(0) + cx(p.b * p.b));

    Composed out;
    out.h_shifted = scaled(iu, (p.a - cx(0.0, 0.5)) * p.b);
    add_into(out.h_shifted, scaled(mul(tau, mul(mul(iu, iu), quad)), cx(0.25)));
    add_into(out.h_shifted, scaled(u, cx(4.0 * p.epsilon)));

    Poly shifted_up = up;
    shifted_up.set(0, shifted_up.at(0) - cx(0.0, p.b));
    out.f = scaled(mul(tau, mul(shifted_up, iu)), cx(0.25));
    out.f.set(0, out.f.at(0) - (cx(0.0, 1.0) * p.a + 0.5) * 0.5);
    return out;
}

void require_close(cx got, cx want, double scale, const char* what) {
    if (!(std::abs(got - want) <= kRowTol * std::max(1.0, scale)))
        throw InvariantViolation(std::string("local series construction: ") + what);
}

LocalSeries finalize(SiteKind kind, cx center, cx free_param, const EquationParams& p,
                     int order, const Poly& u_full, int lo_true) {
    const int n_inv = order + kGuard + 3;
    const Composed hf = compose_h_f(u_full, lo_true, center, p, n_inv);
    const Poly shift = energy_shift_poly(center, p, order + 1);

    LocalSeries out;
    out.center = center;
    out.kind = kind;
    out.free_param = free_param;
    out.order = order;
    out.params = p;
    out.coeffs_u.resize(static_cast<std::size_t>(order) + 1);
    out.coeffs_h.resize(static_cast<std::size_t>(order) + 1);
    out.coeffs_f.resize(static_cast<std::size_t>(order) + 1);

    const double cs = std::abs(center);
    if (kind == SiteKind::pole) {
        out.u_lead = -center / cx(4.0 * p.epsilon);
        out.h_residue = cx(1.0);
        out.f_residue = -center * 0.5;
        require_close(hf.h_shifted.at(-2), cx{}, cs, "energy double pole must cancel");
        require_close(hf.h_shifted.at(-1), cx(1.0), 1.0, "energy residue must be 1");
        require_close(hf.f.at(-1), -center * 0.5, cs, "auxiliary residue must be -center/2");
    } else if (kind == SiteKind::zero_minus) {
        out.u_lead = cx{};
        out.h_residue = cx(1.0);
        out.f_residue = center * 0.5;
        require_close(hf.h_shifted.at(-1), cx(1.0), 1.0, "energy residue must be 1");
        require_close(hf.f.at(-1), center * 0.5, cs, "auxiliary residue must be +center/2");
    } else {
        out.u_lead = cx{};
        out.h_residue = cx{};
        out.f_residue = cx{};
        const double hs = std::abs(sq(p.a - cx(0.0, 0.5))) / cs + std::abs(p.b);
        require_close(hf.h_shifted.at(-1), cx{}, hs,
                      "energy must be holomorphic at an ascending zero");
        require_close(hf.f.at(-1), cx{}, 1.0,
                      "auxiliary must be holomorphic at an ascending zero");
        require_close(hf.f.at(0), cx{}, std::abs(center) + std::abs(p.a) + 1.0,
                      "auxiliary must vanish at an ascending zero");
    }

    for (int k = 0; k <= order; ++k) {
        out.coeffs_u[static_cast<std::size_t>(k)] = u_full.at(k);
        cx h = hf.h_shifted.at(k);
        if (kind == SiteKind::zero_plus) h += shift.at(k);
        out.coeffs_h[static_cast<std::size_t>(k)] = h;
        out.coeffs_f[static_cast<std::size_t>(k)] = hf.f.at(k);
    }
    return out;
}

Poly stored_u_poly(const LocalSeries& s) {
    Poly u;
    if (s.kind == SiteKind::pole) u.set(-2, s.u_lead);
    for (int k = 0; k <= s.order; ++k) {
        const cx v = s.coeffs_u[static_cast<std::size_t>(k)];
        if (v != cx{} || k == s.order) u.set(k, v);
    }
    return u;
}

int first_unsolved_row(const LocalSeries& s) {
    return s.kind == SiteKind::pole ? s.order - 3 : s.order;
}

cx horner(const std::vector<cx>& c, cx x) {
    cx acc{};
    for (std::size_t k = c.size(); k-- > 0;) acc = acc * x + c[k];
    return acc;
}

}  // namespace

LocalSeries series_at_pole(cx tau_inf, cx a0, const EquationParams& p, int order) {
    validate_common(tau_inf, p, order);
    const int km = order + kGuard;
    Poly u;
    u.set(-2, -tau_inf / cx(4.0 * p.epsilon));
    u.set(0, a0);
    for (int k = 1; k <= km; ++k) solve_row(u, k, k - 4, tau_inf, p);
    check_rows_vanish(u, tau_inf, p, -6, km - 4, "a solved pole row failed to vanish");
    return finalize(SiteKind::pole, tau_inf, a0, p, order, u, -2);
}

LocalSeries series_at_zero(cx tau_s, int sign, cx b3, const EquationParams& p, int order) {
    validate_common(tau_s, p, order);
    if (sign != 1 && sign != -1)
        throw PreconditionError("local series: zero sign must be +1 or -1");
    const int km = order + kGuard;
    Poly u;
    u.set(1, cx(0.0, static_cast<double>(sign) * p.b));
    solve_row(u, 2, 1, tau_s, p);
    u.set(3, b3);
    for (int k = 4; k <= km; ++k) solve_row(u, k, k - 1, tau_s, p);
    check_rows_vanish(u, tau_s, p, 0, km - 1, "a solved zero row failed to vanish");
    return finalize(sign == 1 ? SiteKind::zero_plus : SiteKind::zero_minus, tau_s, b3, p,
                    order, u, 1);
}

std::vector<cx> defining_residual(const LocalSeries& s, int& first_power) {
    const Poly fs = defining_poly(stored_u_poly(s), s.center, s.params);
    first_power = s.kind == SiteKind::pole ? -6 : 0;
    const int hi = 3 * s.order + 2;
    std::vector<cx> out;
    out.reserve(static_cast<std::size_t>(hi - first_power) + 1);
    for (int k = first_power; k <= hi; ++k) out.push_back(fs.at(k));
    return out;
}

double residual_norm(const LocalSeries& s, double r) {
    if (!(r > 0.0) || !std::isfinite(r))
        throw PreconditionError("residual_norm: radius must be positive and finite");
    int first_power = 0;
    const std::vector<cx> rows = defining_residual(s, first_power);
    const int start = first_unsolved_row(s);
    double acc = 0.0;
    double pw = std::pow(r, start);
    for (int k = start; k < first_power + static_cast<int>(rows.size()); ++k) {
        acc += std::abs(rows[static_cast<std::size_t>(k - first_power)]) * pw;
        pw *= r;
    }
    return acc;
}

cx LocalSeries::eval_u(cx tau) const {
    const cx x = tau - center;
    cx acc = horner(coeffs_u, x);
    if (kind == SiteKind::pole) {
        if (x == cx{})
            throw PreconditionError("eval_u: evaluation at the expansion point");
        acc += u_lead / sq(x);
    }
    return acc;
}

cx LocalSeries::eval_du(cx tau) const {
    const cx x = tau - center;
    cx acc{};
    for (std::size_t k = coeffs_u.size(); k-- > 1;)
        acc = acc * x + static_cast<double>(k) * coeffs_u[k];
    if (kind == SiteKind::pole) {
        if (x == cx{})
            throw PreconditionError("eval_du: evaluation at the expansion point");
        acc += -2.0 * u_lead / (sq(x) * x);
    }
    return acc;
}

cx LocalSeries::eval_h(cx tau) const {
    const cx x = tau - center;
    cx acc = horner(coeffs_h, x);
    if (kind != SiteKind::zero_plus) {
        if (x == cx{})
            throw PreconditionError("eval_h: evaluation at the expansion point");
        if (tau == cx{}) throw PreconditionError("eval_h: evaluation at tau = 0");
        acc += h_residue / x + sq(params.a - cx(0.0, 0.5)) * 0.5 / tau;
    }
    return acc;
}

cx LocalSeries::eval_f(cx tau) const {
    const cx x = tau - center;
    cx acc = horner(coeffs_f, x);
    if (kind != SiteKind::zero_plus) {
        if (x == cx{})
            throw PreconditionError("eval_f: evaluation at the expansion point");
        acc += f_residue / x;
    }
    return acc;
}

double LocalSeries::trust_radius(double rel_tol) const {
    if (!(rel_tol > 0.0) || !(rel_tol < 1.0))
        throw PreconditionError("trust_radius: rel_tol must lie in (0, 1)");
    const double cap = 0.5 * std::abs(center);
    const double top = std::abs(coeffs_u[static_cast<std::size_t>(order)]);
    if (top == 0.0) return cap;
    const auto ok = [&](double r) {
        double scale = kind == SiteKind::pole ? std::abs(u_lead) / (r * r) : 0.0;
        double pw = 1.0;
        for (int k = 0; k <= order; ++k) {
            scale = std::max(scale, std::abs(coeffs_u[static_cast<std::size_t>(k)]) * pw);
            pw *= r;
        }
        return top * std::pow(r, order) <= rel_tol * std::max(scale, 1e-300);
    };
    if (ok(cap)) return cap;
    double lo_r = cap * 1e-8, hi_r = cap;
    if (!ok(lo_r)) return lo_r;
    for (int it = 0; it < 80; ++it) {
        const double mid = std::sqrt(lo_r * hi_r);
        (ok(mid) ? lo_r : hi_r) = mid;
    }
    return lo_r;
}

std::string LocalSeries::to_json() const {
    using nlohmann::json;
    const auto pair = [](cx z) { return json::array({z.real(), z.imag()}); };
    const auto list = [&](const std::vector<cx>& v) {
        json arr = json::array();
        for (cx z : v) arr.push_back(pair(z));
        return arr;
    };
    json out;
    out["center"] = pair(center);
    out["kind"] = kind == SiteKind::pole
                      ? "pole"
                      : (kind == SiteKind::zero_plus ? "zero_plus" : "zero_minus");
    out["free_param"] = pair(free_param);
    out["order"] = order;
    out["u_lead"] = pair(u_lead);
    out["h_residue"] = pair(h_residue);
    out["f_residue"] = pair(f_residue);
    out["u"] = list(coeffs_u);
    out["h"] = list(coeffs_h);
    out["f"] = list(coeffs_f);
    return out.dump();
}

namespace {

constexpr int kFitOrder = 6;       // model order used inside the fit
constexpr int kFitMaxIter = 30;
constexpr double kFitCondLimit = 1e8;

struct Samples {
    std::vector<cx> tau, u, du;
    double su = 1.0, sdu = 1.0;  // normalization scales
};

struct Candidate {
    SiteKind kind = SiteKind::pole;
    int sign = 0;  // 0 for the pole model
    bool alive = false;
    cx center, free_param;
    double rms = std::numeric_limits<double>::infinity();
};

bool model_residuals(const Samples& sm, const EquationParams& p, SiteKind kind, int sign,
                     cx center, cx free_param, std::vector<cx>& out) {
    LocalSeries ser;
    try {
        ser = kind == SiteKind::pole ? series_at_pole(center, free_param, p, kFitOrder)
                                     : series_at_zero(center, sign, free_param, p, kFitOrder);
    } catch (const std::exception&) {
        return false;
    }
    const std::size_t n = sm.tau.size();
    out.resize(2 * n);
    for (std::size_t j = 0; j < n; ++j) {
        cx mu, mdu;
        try {
            mu = ser.eval_u(sm.tau[j]);
            mdu = ser.eval_du(sm.tau[j]);
        } catch (const std::exception&) {
            return false;
        }
        out[j] = (mu - sm.u[j]) / sm.su;
        out[n + j] = (mdu - sm.du[j]) / sm.sdu;
        if (!std::isfinite(std::abs(out[j])) || !std::isfinite(std::abs(out[n + j])))
            return false;
    }
    return true;
}

double rms_of(const std::vector<cx>& r) {
    double acc = 0.0;
    for (cx v : r) acc += std::norm(v);
    return std::sqrt(acc / static_cast<double>(r.size()));
}

// Damped Gauss-Newton on the complex unknowns (center, free_param).  All
// model quantities are analytic in both, so a one-sided difference along the
// real axis furnishes the complex Jacobian.
void run_fit(const Samples& sm, const EquationParams& p, Candidate& cand) {
    cx z0 = cand.center, z1 = cand.free_param;
    cand.alive = false;
    std::vector<cx> r0, rh, rtry;
    if (!model_residuals(sm, p, cand.kind, cand.sign, z0, z1, r0)) return;
    double rms = rms_of(r0);
    double cond = 0.0;
    for (int it = 0; it < kFitMaxIter; ++it) {
        const double h0 = 1e-7 * (1.0 + std::abs(z0));
        const double h1 = 1e-7 * (1.0 + std::abs(z1));
        if (!model_residuals(sm, p, cand.kind, cand.sign, z0 + h0, z1, rh)) return;
        std::vector<cx> j0(r0.size()), j1(r0.size());
        for (std::size_t k = 0; k < r0.size(); ++k) j0[k] = (rh[k] - r0[k]) / h0;
        if (!model_residuals(sm, p, cand.kind, cand.sign, z0, z1 + h1, rh)) return;
        for (std::size_t k = 0; k < r0.size(); ++k) j1[k] = (rh[k] - r0[k]) / h1;

        // Normal equations for the 2x2 least-squares step, solved after
        // equilibrating the columns: the raw sensitivities of the two
        // unknowns differ by the steepness of the singular part, which is
        // scaling, not degeneracy.  The conditioning test applies to the
        // equilibrated system.
        cx a00{}, a01{}, a11{}, g0{}, g1{};
        for (std::size_t k = 0; k < r0.size(); ++k) {
            a00 += std::conj(j0[k]) * j0[k];
            a01 += std::conj(j0[k]) * j1[k];
            a11 += std::conj(j1[k]) * j1[k];
            g0 += std::conj(j0[k]) * r0[k];
            g1 += std::conj(j1[k]) * r0[k];
        }
        const double d0 = std::sqrt(a00.real()), d1 = std::sqrt(a11.real());
        if (!(d0 > 0.0) || !(d1 > 0.0) || !std::isfinite(d0) || !std::isfinite(d1)) {
            cand.alive = false;
            return;
        }
        const cx s01 = a01 / (d0 * d1);
        const double rho = std::abs(s01);
        cond = rho < 1.0 ? (1.0 + rho) / (1.0 - rho)
                         : std::numeric_limits<double>::infinity();
        if (!std::isfinite(cond) || cond > kFitCondLimit) {
            cand.alive = false;
            return;
        }
        const double dets = 1.0 - rho * rho;
        const cx w0 = (-g0 / d0 + s01 * (g1 / d1)) / dets;
        const cx w1 = (-g1 / d1 + std::conj(s01) * (g0 / d0)) / dets;
        const cx dz0 = w0 / d0;
        const cx dz1 = w1 / d1;

        double t = 1.0;
        bool improved = false;
        for (int halve = 0; halve < 8; ++halve) {
            if (model_residuals(sm, p, cand.kind, cand.sign, z0 + t * dz0, z1 + t * dz1,
                                rtry)) {
                const double rms_try = rms_of(rtry);
                if (rms_try <= rms) {
                    z0 += t * dz0;
                    z1 += t * dz1;
                    r0.swap(rtry);
                    rms = rms_try;
                    improved = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if (!improved) break;
        const double step = t * (std::abs(dz0) + std::abs(dz1));
        if (step <= 1e-12 * (1.0 + std::abs(z0) + std::abs(z1))) break;
    }
    cand.center = z0;
    cand.free_param = z1;
    cand.rms = rms;
    cand.alive = std::isfinite(rms);
}

}  // namespace

LocalFit fit_local(const EquationParams& p,
                   const std::vector<std::tuple<cx, cx, cx>>& samples) {
    if (p.b == 0.0) throw PreconditionError("fit_local: b must be nonzero");
    if (p.epsilon != 1 && p.epsilon != -1)
        throw PreconditionError("fit_local: epsilon must be +1 or -1");
    if (samples.size() < 4)
        throw PreconditionError("fit_local: at least 4 samples are required");

    Samples sm;
    for (const auto& [t, uu, dd] : samples) {
        sm.tau.push_back(t);
        sm.u.push_back(uu);
        sm.du.push_back(dd);
        if (!std::isfinite(std::abs(t)) || !std::isfinite(std::abs(uu)) ||
            !std::isfinite(std::abs(dd)))
            throw PreconditionError("fit_local: samples must be finite");
    }
    for (std::size_t j = 0; j < sm.u.size(); ++j) {
        sm.su = std::max(sm.su, std::abs(sm.u[j]));
        sm.sdu = std::max(sm.sdu, std::abs(sm.du[j]));
    }

    // Initial centers from the logarithmic derivative: near a double pole
    // u'/u ~ -2/(tau - c), near a simple zero u'/u ~ 1/(tau - c).
    const auto mean_center = [&](double weight) -> cx {
        cx acc{};
        int used = 0;
        for (std::size_t j = 0; j < sm.u.size(); ++j) {
            if (sm.du[j] == cx{}) continue;
            const cx c0 = sm.tau[j] + weight * sm.u[j] / sm.du[j];
            if (!std::isfinite(std::abs(c0))) continue;
            acc += c0;
            ++used;
        }
        return used == 0 ? cx(std::numeric_limits<double>::quiet_NaN(), 0.0)
                         : acc / static_cast<double>(used);
    };

    // Zero-sign preference from the slope at the sample nearest the zero;
    // at an exact zero u' conj(i b) = sign * b^2.
    std::size_t jmin = 0;
    for (std::size_t j = 1; j < sm.u.size(); ++j)
        if (std::abs(sm.u[j]) < std::abs(sm.u[jmin])) jmin = j;
    const double pref = (sm.du[jmin] * std::conj(cx(0.0, p.b))).real();
    const int s_hat = pref >= 0.0 ? 1 : -1;

    std::vector<Candidate> cands(3);
    cands[0].kind = SiteKind::pole;
    cands[0].sign = 0;
    cands[1].kind = s_hat == 1 ? SiteKind::zero_plus : SiteKind::zero_minus;
    cands[1].sign = s_hat;
    cands[2].kind = s_hat == 1 ? SiteKind::zero_minus : SiteKind::zero_plus;
    cands[2].sign = -s_hat;

    for (Candidate& cand : cands) {
        const cx c0 = mean_center(cand.sign == 0 ? 2.0 : -1.0);
        if (!std::isfinite(std::abs(c0)) || c0 == cx{}) continue;
        cand.center = c0;
        if (cand.sign == 0) {
            cx acc{};
            for (std::size_t j = 0; j < sm.u.size(); ++j)
                acc += sm.u[j] + c0 / (4.0 * p.epsilon) / sq(sm.tau[j] - c0);
            cand.free_param = acc / static_cast<double>(sm.u.size());
        } else {
            const cx b1 = cx(0.0, static_cast<double>(cand.sign) * p.b);
            const cx b2 = -(p.b / c0) * (p.a - cx(0.0, 0.5 * cand.sign));
            cx acc{};
            int used = 0;
            for (std::size_t j = 0; j < sm.u.size(); ++j) {
                const cx x = sm.tau[j] - c0;
                if (std::abs(x) < 1e-12 * (1.0 + std::abs(c0))) continue;
                acc += (sm.u[j] - b1 * x - b2 * sq(x)) / (sq(x) * x);
                ++used;
            }
            cand.free_param = used > 0 ? acc / static_cast<double>(used) : cx{};
        }
        // At very small sample radii the free coefficient leaves no imprint
        // on the window and the data-driven guess is pure noise, which can
        // push the series recursion out of its domain.  Fall back to the
        // neutral germ and let the iteration move it only if the data asks.
        std::vector<cx> probe;
        if (!model_residuals(sm, p, cand.kind, cand.sign, cand.center, cand.free_param,
                             probe))
            cand.free_param = cx{};
        run_fit(sm, p, cand);
    }

    const auto by_kind = [&](SiteKind k) -> const Candidate& {
        for (const Candidate& cand : cands)
            if (cand.kind == k) return cand;
        return cands[0];
    };

    LocalFit out;
    for (const Candidate& cand : cands)
        out.tried.emplace_back(cand.kind,
                               cand.alive ? cand.rms
                                          : std::numeric_limits<double>::infinity());

    const Candidate* best = nullptr;
    for (const Candidate& cand : cands)
        if (cand.alive && (best == nullptr || cand.rms < best->rms)) best = &cand;
    if (best == nullptr)
        throw NumericError("fit_local: no local model explains the samples");

    const Candidate& zp = by_kind(SiteKind::zero_plus);
    const Candidate& zm = by_kind(SiteKind::zero_minus);
    const Candidate* chosen = best;
    if (best->kind != SiteKind::pole && zp.alive && zm.alive) {
        const double ratio = std::max(zp.rms, zm.rms) / std::min(zp.rms, zm.rms);
        if (ratio <= 2.0) {
            chosen = &zp;  // tie between the zero kinds resolves ascending
            out.ambiguous = true;
        }
    }

    out.kind = chosen->kind;
    out.center = chosen->center;
    out.free_param = chosen->free_param;
    out.residual = chosen->rms;
    out.alt_residual = std::numeric_limits<double>::infinity();
    for (const Candidate& cand : cands)
        if (cand.alive && cand.kind != chosen->kind)
            out.alt_residual = std::min(out.alt_residual, cand.rms);
    return out;
}

}  // namespace dp3
