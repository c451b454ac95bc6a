// Local series about movable poles and zeroes: closed-form coefficient
// checks, frozen high-order goldens, the order-by-order energy identity,
// residual-tail behaviour, and sample fitting.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cmath>
#include <map>
#include <random>
#include <tuple>
#include <vector>

#include "dp3/laurent.hpp"
#include "json.hpp"

namespace {

using dp3::cx;
using dp3::EquationParams;
using dp3::LocalFit;
using dp3::LocalSeries;
using dp3::SiteKind;

double drift(cx got, cx want) {
    return std::abs(got - want) / std::max(1.0, std::abs(want));
}

EquationParams params(cx a, double b, int eps) {
    EquationParams p;
    p.a = a;
    p.b = b;
    p.epsilon = eps;
    return p;
}

EquationParams golden_pole_params() { return params(cx(0.13, 0.21), 1.0, 1); }
EquationParams golden_zero_params() { return params(cx(0.25, 0.1), 1.3, -1); }

struct Draw {
    cx c, a0, b3;
    EquationParams p;
};

Draw random_draw(std::mt19937& rng) {
    auto uni = [&](double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(rng);
    };
    Draw d;
    d.c = cx(uni(0.7, 3.0), uni(-1.0, 1.0));
    d.a0 = cx(uni(-1.0, 1.0), uni(-1.0, 1.0));
    d.b3 = cx(uni(-1.0, 1.0), uni(-1.0, 1.0));
    const double b = uni(0.4, 2.0) * (uni(0.0, 1.0) < 0.5 ? 1.0 : -1.0);
    d.p = params(cx(uni(-0.8, 0.8), uni(-0.5, 0.5)), b, uni(0.0, 1.0) < 0.5 ? 1 : -1);
    return d;
}

// Closed-form coefficient lists, transcribed independently of the library.
std::array<cx, 5> pole_u_closed(cx c, cx a0, cx a, double b, double e) {
    const cx c2 = c * c, c3 = c2 * c, c4 = c3 * c, c5 = c4 * c;
    return {-a0 / c,
            a * b / (5.0 * c) - 12.0 * e * a0 * a0 / (5.0 * c) + 9.0 * a0 / (10.0 * c2),
            -8.0 * a * b / (45.0 * c2) + 24.0 * e * a0 * a0 / (5.0 * c2) - 4.0 * a0 / (5.0 * c3),
            -e * b * b / (7.0 * c) + 32.0 * a0 * a0 * a0 / (7.0 * c2) -
                4.0 * e * a0 * a * b / (7.0 * c2) + 10.0 * a * b / (63.0 * c3) -
                47.0 * e * a0 * a0 / (7.0 * c3) + 5.0 * a0 / (7.0 * c4),
            e * b * b / (35.0 * c2) - 96.0 * a0 * a0 * a0 / (7.0 * c3) +
                124.0 * e * a0 * a * b / (105.0 * c3) - a * b / (7.0 * c4) +
                57.0 * e * a0 * a0 / (7.0 * c4) - 9.0 * a0 / (14.0 * c5)};
}

std::array<cx, 6> pole_h_closed(cx c, cx a0, cx a, double b, double e) {
    const cx i(0.0, 1.0);
    const cx c2 = c * c, c3 = c2 * c, c4 = c3 * c, c5 = c4 * c;
    return {12.0 * e * a0,
            -8.0 * e * a0 / c,
            2.0 * i * e * b / c + 6.0 * e * a0 / c2,
            -16.0 * a * e * b / (15.0 * c2) - 16.0 * a0 * a0 / (5.0 * c2) -
                24.0 * e * a0 / (5.0 * c3),
            8.0 * i * b * a0 / c2 + 8.0 * a * e * b / (9.0 * c3) + 8.0 * a0 * a0 / c3 +
                4.0 * e * a0 / c4,
            52.0 * b * b / (35.0 * c2) - 128.0 * a * b * a0 / (35.0 * c3) +
                128.0 * e * a0 * a0 * a0 / (35.0 * c3) - 8.0 * i * b * a0 / c3 -
                16.0 * a * e * b / (21.0 * c4) - 468.0 * a0 * a0 / (35.0 * c4) -
                24.0 * e * a0 / (7.0 * c5)};
}

std::array<cx, 6> pole_f_closed(cx c, cx a0, cx a, double b, double e) {
    const cx i(0.0, 1.0);
    const cx c2 = c * c, c3 = c2 * c, c4 = c3 * c;
    return {-i * a / 2.0 - 0.75,
            -2.0 * a0 * e,
            i * e * b + a0 * e / c,
            8.0 * a0 * a0 / (5.0 * c) - 4.0 * a * e * b / (5.0 * c) + i * e * b / c -
                3.0 * a0 * e / (5.0 * c2),
            4.0 * i * a0 * b / c - 12.0 * a0 * a0 / (5.0 * c2) +
                4.0 * a * e * b / (45.0 * c2) + 2.0 * a0 * e / (5.0 * c3),
            6.0 * b * b / (7.0 * c) - 64.0 * e * a0 * a0 * a0 / (35.0 * c2) -
                48.0 * a * b * a0 / (35.0 * c2) - 4.0 * a * e * b / (63.0 * c3) +
                94.0 * a0 * a0 / (35.0 * c3) - 2.0 * e * a0 / (7.0 * c4)};
}

std::map<int, cx> zero_u_closed(cx c, double s, cx b3, cx a, double b, double e) {
    const cx i(0.0, 1.0);
    return {{1, i * s * b},
            {2, -(b / c) * (a - i * s / 2.0)},
            {4, (4.0 * e * b * b + i * s * a * b3 - b3) / (2.0 * c)},
            {5, (7.0 * b * b3 - 8.0 * b * b * b * e - 6.0 * i * s * b3 * b3 * c * c +
                 48.0 * i * s * a * b * b * b * e - 10.0 * i * s * a * b * b3) /
                    (20.0 * b * c * c)}};
}

std::array<cx, 3> zero_plus_h_closed(cx c, cx b3, cx a, double b) {
    const cx i(0.0, 1.0);
    const cx am = a - i / 2.0;
    const cx c2 = c * c, c3 = c2 * c;
    return {-3.0 * i * b3 * c / (2.0 * b) + am * am / (2.0 * c) + i * am / c,
            am * am / (2.0 * c2),
            -3.0 * b3 / (2.0 * b * c) * am + am * am / (2.0 * c3) - i * am * am * am / c3};
}

std::array<cx, 3> zero_minus_h_closed(cx c, cx b3, cx /*a*/, double b, double e) {
    const cx i(0.0, 1.0);
    return {3.0 * i * b3 * c / (2.0 * b), -i * b3 / b,
            -2.0 * i * e * b / c + 3.0 * i * b3 / (4.0 * b * c)};
}

std::array<cx, 2> zero_plus_f_closed(cx c, cx b3, cx a, double b, double e) {
    const cx i(0.0, 1.0);
    const cx am = a - i / 2.0;
    return {(4.0 * a * a + 1.0) / (8.0 * c) - 3.0 * i * b3 * c / (4.0 * b),
            -2.0 * i * e * b - 3.0 * b3 / (4.0 * b) * am -
                i * (4.0 * a * a + 1.0) / (8.0 * c * c) * am};
}

std::array<cx, 3> zero_minus_f_closed(cx c, cx b3, cx a, double b, double e) {
    const cx i(0.0, 1.0);
    return {-(i / 2.0) * (a + i / 2.0), i * b3 * c / (4.0 * b), i * e * b - i * b3 / (8.0 * b)};
}

// Minimal series engine for the formal identity check, independent of the
// library's internals.
using Ser = std::map<int, cx>;

Ser ser_mul(const Ser& x, const Ser& y) {
    Ser out;
    for (const auto& [kx, vx] : x)
        for (const auto& [ky, vy] : y) out[kx + ky] += vx * vy;
    return out;
}

Ser ser_add(const Ser& x, const Ser& y) {
    Ser out = x;
    for (const auto& [k, v] : y) out[k] += v;
    return out;
}

Ser ser_deriv(const Ser& x) {
    Ser out;
    for (const auto& [k, v] : x)
        if (k != 0) out[k - 1] = static_cast<double>(k) * v;
    return out;
}

cx ser_at(const Ser& x, int k) {
    const auto it = x.find(k);
    return it == x.end() ? cx{} : it->second;
}

Ser full_h_series(const LocalSeries& s) {
    Ser h;
    for (int k = 0; k <= s.order; ++k) h[k] = s.coeffs_h[static_cast<std::size_t>(k)];
    if (s.kind != SiteKind::zero_plus) {
        h[-1] += s.h_residue;
        const cx w = dp3::sq(s.params.a - cx(0.0, 0.5)) * 0.5;
        cx pw = 1.0 / s.center;
        for (int k = 0; k <= s.order; ++k) {
            h[k] += w * pw;
            pw *= -1.0 / s.center;
        }
    }
    return h;
}

Ser full_f_series(const LocalSeries& s) {
    Ser f;
    for (int k = 0; k <= s.order; ++k) f[k] = s.coeffs_f[static_cast<std::size_t>(k)];
    if (s.kind != SiteKind::zero_plus) f[-1] += s.f_residue;
    return f;
}

std::vector<std::tuple<cx, cx, cx>> ring_samples(const LocalSeries& s, double r, int n) {
    std::vector<std::tuple<cx, cx, cx>> out;
    for (int q = 0; q < n; ++q) {
        const cx tau = s.center + std::polar(r, 2.0 * dp3::pi * q / n + 0.3);
        out.emplace_back(tau, s.eval_u(tau), s.eval_du(tau));
    }
    return out;
}

}  // namespace

TEST_CASE("pole series matches the closed-form coefficients") {
    std::mt19937 rng(91101);
    for (int t = 0; t < 20; ++t) {
        const Draw d = random_draw(rng);
        const LocalSeries s = dp3::series_at_pole(d.c, d.a0, d.p, 12);
        CHECK(s.kind == SiteKind::pole);
        CHECK(s.order == 12);
        CHECK(s.u_lead == -d.c / cx(4.0 * d.p.epsilon));
        CHECK(s.h_residue == cx(1.0));
        CHECK(s.f_residue == -d.c * 0.5);
        CHECK(s.coeffs_u[0] == d.a0);

        const auto au = pole_u_closed(d.c, d.a0, d.p.a, d.p.b, d.p.epsilon);
        const auto ah = pole_h_closed(d.c, d.a0, d.p.a, d.p.b, d.p.epsilon);
        const auto af = pole_f_closed(d.c, d.a0, d.p.a, d.p.b, d.p.epsilon);
        for (int k = 0; k < 5; ++k)
            CHECK(drift(s.coeffs_u[static_cast<std::size_t>(k + 1)], au[static_cast<std::size_t>(k)]) <= 1e-12);
        for (int k = 0; k < 6; ++k) {
            CHECK(drift(s.coeffs_h[static_cast<std::size_t>(k)], ah[static_cast<std::size_t>(k)]) <= 1e-12);
            CHECK(drift(s.coeffs_f[static_cast<std::size_t>(k)], af[static_cast<std::size_t>(k)]) <= 1e-12);
        }
    }
}

TEST_CASE("zero series match the closed-form coefficients") {
    std::mt19937 rng(91102);
    for (int t = 0; t < 20; ++t) {
        const Draw d = random_draw(rng);
        for (int s_sign : {1, -1}) {
            const LocalSeries s = dp3::series_at_zero(d.c, s_sign, d.b3, d.p, 12);
            CHECK(s.kind == (s_sign == 1 ? SiteKind::zero_plus : SiteKind::zero_minus));
            CHECK(s.u_lead == cx{});
            CHECK(s.coeffs_u[0] == cx{});
            CHECK(s.coeffs_u[1] == cx(0.0, s_sign * d.p.b));
            CHECK(s.coeffs_u[3] == d.b3);

            const auto bu = zero_u_closed(d.c, s_sign, d.b3, d.p.a, d.p.b, d.p.epsilon);
            for (const auto& [k, want] : bu)
                CHECK(drift(s.coeffs_u[static_cast<std::size_t>(k)], want) <= 1e-12);

            if (s_sign == 1) {
                CHECK(s.h_residue == cx{});
                CHECK(s.f_residue == cx{});
                CHECK(std::abs(s.coeffs_f[0]) <= 1e-12);
                const auto hh = zero_plus_h_closed(d.c, d.b3, d.p.a, d.p.b);
                const auto ff = zero_plus_f_closed(d.c, d.b3, d.p.a, d.p.b, d.p.epsilon);
                for (int k = 0; k < 3; ++k)
                    CHECK(drift(s.coeffs_h[static_cast<std::size_t>(k)], hh[static_cast<std::size_t>(k)]) <= 1e-12);
                for (int k = 0; k < 2; ++k)
                    CHECK(drift(s.coeffs_f[static_cast<std::size_t>(k + 1)], ff[static_cast<std::size_t>(k)]) <= 1e-12);
            } else {
                CHECK(s.h_residue == cx(1.0));
                CHECK(s.f_residue == d.c * 0.5);
                const auto hh = zero_minus_h_closed(d.c, d.b3, d.p.a, d.p.b, d.p.epsilon);
                const auto ff = zero_minus_f_closed(d.c, d.b3, d.p.a, d.p.b, d.p.epsilon);
                for (int k = 0; k < 3; ++k) {
                    CHECK(drift(s.coeffs_h[static_cast<std::size_t>(k)], hh[static_cast<std::size_t>(k)]) <= 1e-12);
                    CHECK(drift(s.coeffs_f[static_cast<std::size_t>(k)], ff[static_cast<std::size_t>(k)]) <= 1e-12);
                }
            }
        }
    }
}

TEST_CASE("frozen high-order goldens pin the recursion") {
    const LocalSeries s =
        dp3::series_at_pole(cx(2.0), cx(0.4, -0.3), golden_pole_params(), 12);
    CHECK(drift(s.coeffs_u[6], cx(-0.0427175, -0.098910013888888889)) <= 1e-12);
    CHECK(drift(s.coeffs_u[7], cx(-0.052197809523809524, 0.060151015873015873)) <= 1e-12);
    CHECK(drift(s.coeffs_u[8], cx(0.06755358658008658, 0.0018512288961038961)) <= 1e-12);
    CHECK(drift(s.coeffs_u[9], cx(-0.033242357286489231, -0.038054402707631874)) <= 1e-12);
    CHECK(drift(s.coeffs_h[6], cx(0.60922777777777778, 0.2809125)) <= 1e-12);
    CHECK(drift(s.coeffs_f[6], cx(0.47084126984126984, 0.095758928571428571)) <= 1e-12);
    CHECK(drift(s.coeffs_h[12], cx(-0.16970888274333853, 0.24148809802560755)) <= 1e-12);
    CHECK(drift(s.coeffs_f[12], cx(-0.20310097577149408, 0.093569765306731188)) <= 1e-12);

    const LocalSeries zp =
        dp3::series_at_zero(cx(3.0), 1, cx(0.2, 0.5), golden_zero_params(), 12);
    CHECK(drift(zp.coeffs_u[4], cx(-1.1841666666666667, -0.083333333333333333)) <= 1e-12);
    CHECK(drift(zp.coeffs_u[5], cx(0.18216495726495726, -0.044760683760683761)) <= 1e-12);
    CHECK(drift(zp.coeffs_u[6], cx(-0.49876235834124723, 0.16742598923710035)) <= 1e-12);
    CHECK(drift(zp.coeffs_u[9], cx(-0.079947737696764145, -0.38295314414833456)) <= 1e-12);
    CHECK(drift(zp.coeffs_h[12], cx(0.054011293060397673, 0.041390438729565131)) <= 1e-12);
    CHECK(drift(zp.coeffs_f[12], cx(-0.019455849358311948, -0.030802673460397023)) <= 1e-12);

    const LocalSeries zm =
        dp3::series_at_zero(cx(3.0), -1, cx(0.2, 0.5), golden_zero_params(), 12);
    CHECK(drift(zm.coeffs_u[4], cx(-1.1358333333333333, -0.083333333333333333)) <= 1e-12);
    CHECK(drift(zm.coeffs_u[5], cx(-0.016387179487179487, 0.08364957264957265)) <= 1e-12);
    CHECK(drift(zm.coeffs_u[6], cx(0.43502646723646724, -0.17111658752769864)) <= 1e-12);
    CHECK(drift(zm.coeffs_u[9], cx(-0.10608661117387522, -0.26357668300210987)) <= 1e-12);
    CHECK(drift(zm.coeffs_h[12], cx(0.017031399862813735, 0.011765317473788438)) <= 1e-12);
    CHECK(drift(zm.coeffs_f[12], cx(-0.0063292805407752409, -0.007005325876971518)) <= 1e-12);
}

TEST_CASE("evaluation reproduces frozen samples") {
    const LocalSeries s =
        dp3::series_at_pole(cx(2.0), cx(0.4, -0.3), golden_pole_params(), 12);
    const cx tau = cx(2.1);
    CHECK(drift(s.eval_u(tau), cx(-49.619788210946119, -0.28284632805956679)) <= 1e-12);
    CHECK(drift(s.eval_du(tau), cx(999.80430095194953, 0.19052733458266864)) <= 1e-12);
    CHECK(drift(s.eval_h(tau), cx(14.629747293880546, -3.4920878343507886)) <= 1e-12);
    CHECK(drift(s.eval_f(tau), cx(-10.722993166641, 0.0038620366584699039)) <= 1e-12);

    const LocalSeries zp =
        dp3::series_at_zero(cx(3.0), 1, cx(0.2, 0.5), golden_zero_params(), 12);
    const cx tz = cx(3.1);
    CHECK(drift(zp.eval_u(tz), cx(-0.0010004102693046739, 0.13222465662385997)) <= 1e-12);
    CHECK(drift(zp.eval_du(tz), cx(-0.020341002968251518, 1.3493165945822086)) <= 1e-12);
    CHECK(drift(zp.eval_h(tz), cx(1.8463576426842821, -0.64368530538931159)) <= 1e-12);
    CHECK(drift(zp.eval_f(tz), cx(0.089941676016782667, -0.0079702638917911918)) <= 1e-12);

    const LocalSeries zm =
        dp3::series_at_zero(cx(3.0), -1, cx(0.2, 0.5), golden_zero_params(), 12);
    CHECK(drift(zm.eval_u(tz), cx(-0.00099665970995097545, -0.13210761144137075)) <= 1e-12);
    CHECK(drift(zm.eval_du(tz), cx(-0.020193080975619127, -1.3372978295076739)) <= 1e-12);
    CHECK(drift(zm.eval_h(tz), cx(8.2910579368912927, 0.65356094705529871)) <= 1e-12);
    CHECK(drift(zm.eval_f(tz), cx(15.271535130445457, -0.12673935504000499)) <= 1e-12);

    // The ascending kind is regular at its center.
    CHECK(zp.eval_u(zp.center) == cx{});
    CHECK(zp.eval_h(zp.center) == zp.coeffs_h[0]);
    CHECK(std::abs(zp.eval_f(zp.center)) <= 1e-12);
    CHECK_THROWS_AS((void)s.eval_u(s.center), dp3::PreconditionError);
    CHECK_THROWS_AS((void)zm.eval_h(zm.center), dp3::PreconditionError);
}

TEST_CASE("derivative evaluation is consistent with the value") {
    std::mt19937 rng(91103);
    const Draw d = random_draw(rng);
    const double h = 1e-6;
    for (const LocalSeries& s :
         {dp3::series_at_pole(d.c, d.a0, d.p, 12),
          dp3::series_at_zero(d.c, 1, d.b3, d.p, 12),
          dp3::series_at_zero(d.c, -1, d.b3, d.p, 12)}) {
        const cx tau = s.center + std::polar(0.2, 0.7);
        const cx fd = (s.eval_u(tau + h) - s.eval_u(tau - h)) / (2.0 * h);
        CHECK(std::abs(fd - s.eval_du(tau)) <=
              1e-6 * std::max(1.0, std::abs(s.eval_du(tau))));
    }
}

TEST_CASE("energy identity holds order-by-order") {
    std::mt19937 rng(91104);
    for (int t = 0; t < 6; ++t) {
        const Draw d = random_draw(rng);
        for (const LocalSeries& s :
             {dp3::series_at_pole(d.c, d.a0, d.p, 12),
              dp3::series_at_zero(d.c, 1, d.b3, d.p, 12),
              dp3::series_at_zero(d.c, -1, d.b3, d.p, 12)}) {
            const Ser hs = full_h_series(s);
            const Ser fs = full_f_series(s);
            Ser tau2{{0, d.c * d.c}, {1, 2.0 * d.c}, {2, cx(1.0)}};
            Ser lhs;
            for (const auto& [k, v] : ser_mul(tau2, ser_deriv(hs))) lhs[k] = -v;
            const cx w0 = cx(0.0, 1.0) * d.p.a + 0.5;
            Ser two_f = fs;
            for (auto& [k, v] : two_f) v *= 2.0;
            two_f[0] += w0;
            Ser rhs = ser_mul(two_f, two_f);
            rhs[0] -= w0 * w0 * 0.5;
            for (int m = -2; m <= s.order - 2; ++m) {
                const double scale =
                    std::max({1.0, std::abs(ser_at(lhs, m)), std::abs(ser_at(rhs, m))});
                CHECK(std::abs(ser_at(lhs, m) - ser_at(rhs, m)) <= 1e-10 * scale);
            }
        }
    }
}

TEST_CASE("solved residual rows vanish and the tail slope is steep") {
    const EquationParams pp = golden_pole_params();
    const EquationParams pz = golden_zero_params();
    const int K = 12;
    for (const LocalSeries& s :
         {dp3::series_at_pole(cx(2.0), cx(0.4, -0.3), pp, K),
          dp3::series_at_zero(cx(3.0), 1, cx(0.2, 0.5), pz, K),
          dp3::series_at_zero(cx(3.0), -1, cx(0.2, 0.5), pz, K)}) {
        int first_power = 0;
        const std::vector<cx> rows = dp3::defining_residual(s, first_power);
        CHECK(first_power == (s.kind == SiteKind::pole ? -6 : 0));
        const int first_unsolved = s.kind == SiteKind::pole ? K - 3 : K;
        double max_row = 0.0;
        for (const cx& v : rows) max_row = std::max(max_row, std::abs(v));
        for (int k = first_power; k < first_unsolved; ++k)
            CHECK(std::abs(rows[static_cast<std::size_t>(k - first_power)]) <=
                  1e-9 * (1.0 + max_row));
        CHECK(std::abs(rows[static_cast<std::size_t>(first_unsolved - first_power)]) > 1e-6);

        const double n2 = dp3::residual_norm(s, 1e-2);
        const double n4 = dp3::residual_norm(s, 1e-4);
        const double slope = std::log(n2 / n4) / std::log(1e2);
        CHECK(slope >= static_cast<double>(first_unsolved) - 1e-3);
        CHECK(slope <= 3.0 * K);
        CHECK(slope >= static_cast<double>(K - 3));
    }
}

TEST_CASE("trust radius responds to the tolerance") {
    const LocalSeries s =
        dp3::series_at_pole(cx(2.0), cx(0.4, -0.3), golden_pole_params(), 12);
    const double r_tight = s.trust_radius(1e-10);
    const double r_loose = s.trust_radius(1e-6);
    CHECK(r_tight > 0.0);
    CHECK(r_tight < r_loose);
    CHECK(r_loose <= 0.5 * std::abs(s.center) + 1e-15);
    CHECK_THROWS_AS((void)s.trust_radius(2.0), dp3::PreconditionError);
}

TEST_CASE("json dump carries the full coefficient lists") {
    const EquationParams pz = golden_zero_params();
    for (const LocalSeries& s :
         {dp3::series_at_pole(cx(2.0), cx(0.4, -0.3), golden_pole_params(), 12),
          dp3::series_at_zero(cx(3.0), 1, cx(0.2, 0.5), pz, 12),
          dp3::series_at_zero(cx(3.0), -1, cx(0.2, 0.5), pz, 12)}) {
        const nlohmann::json doc = nlohmann::json::parse(s.to_json());
        const char* want_kind = s.kind == SiteKind::pole
                                    ? "pole"
                                    : (s.kind == SiteKind::zero_plus ? "zero_plus"
                                                                     : "zero_minus");
        CHECK(doc.at("kind").get<std::string>() == want_kind);
        CHECK(doc.at("order").get<int>() == 12);
        CHECK(doc.at("center")[0].get<double>() == s.center.real());
        CHECK(doc.at("center")[1].get<double>() == s.center.imag());
        CHECK(doc.at("free_param")[0].get<double>() == s.free_param.real());
        for (const char* key : {"u", "h", "f"}) CHECK(doc.at(key).size() == 13);
        CHECK(doc.at("u")[0][0].get<double>() == s.coeffs_u[0].real());
        CHECK(doc.at("u")[0][1].get<double>() == s.coeffs_u[0].imag());
        CHECK(doc.at("h_residue")[0].get<double>() == s.h_residue.real());
    }
}

TEST_CASE("fit recovers a pole from synthesized samples") {
    const LocalSeries s = dp3::series_at_pole(cx(2.0), cx(1.0), golden_pole_params(), 12);
    const LocalFit fit = dp3::fit_local(golden_pole_params(), ring_samples(s, 0.05, 8));
    CHECK(fit.kind == SiteKind::pole);
    CHECK(std::abs(fit.center - cx(2.0)) <= 1e-8);
    CHECK(std::abs(fit.free_param - cx(1.0)) <= 1e-6);
    CHECK(fit.tried.size() == 3);
    CHECK(fit.residual < fit.alt_residual);
    CHECK_FALSE(fit.ambiguous);
}

TEST_CASE("fit distinguishes the zero kinds") {
    const EquationParams pz = golden_zero_params();
    for (int s_sign : {1, -1}) {
        const LocalSeries s = dp3::series_at_zero(cx(3.0), s_sign, cx(0.2, 0.5), pz, 12);
        const LocalFit fit = dp3::fit_local(pz, ring_samples(s, 0.05, 8));
        CHECK(fit.kind == (s_sign == 1 ? SiteKind::zero_plus : SiteKind::zero_minus));
        CHECK(std::abs(fit.center - cx(3.0)) <= 1e-8);
        CHECK(std::abs(fit.free_param - cx(0.2, 0.5)) <= 1e-5);
        CHECK_FALSE(fit.ambiguous);
        double pole_rms = 0.0;
        for (const auto& [kind, rms] : fit.tried)
            if (kind == SiteKind::pole) pole_rms = rms;
        CHECK(pole_rms >= 1e3 * fit.residual);
    }
}

TEST_CASE("ambiguous zero data resolve ascending with a flag") {
    // A cubic dip with no linear slope fits both zero kinds equally badly:
    // the classifier must not pretend to know the kind.
    const EquationParams p = params(cx(0.1, 0.0), 0.5, 1);
    std::vector<std::tuple<cx, cx, cx>> samples;
    for (int q = 0; q < 8; ++q) {
        const cx x = std::polar(0.1, 2.0 * dp3::pi * q / 8 + 0.1);
        samples.emplace_back(cx(2.0) + x, 0.3 * x * x * x + cx(0.01),
                             0.9 * x * x);
    }
    const LocalFit fit = dp3::fit_local(p, samples);
    CHECK(fit.kind == SiteKind::zero_plus);
    CHECK(fit.ambiguous);
}

TEST_CASE("fit failure modes") {
    const EquationParams p = golden_pole_params();
    std::vector<std::tuple<cx, cx, cx>> constant;
    for (int q = 0; q < 6; ++q)
        constant.emplace_back(cx(2.0 + 0.1 * q), cx(1.0), cx(0.0));
    CHECK_THROWS_AS((void)dp3::fit_local(p, constant), dp3::NumericError);

    std::vector<std::tuple<cx, cx, cx>> few(constant.begin(), constant.begin() + 3);
    CHECK_THROWS_AS((void)dp3::fit_local(p, few), dp3::PreconditionError);

    std::vector<std::tuple<cx, cx, cx>> bad = constant;
    std::get<1>(bad[2]) = cx(std::nan(""), 0.0);
    CHECK_THROWS_AS((void)dp3::fit_local(p, bad), dp3::PreconditionError);
}

TEST_CASE("construction rejects invalid inputs") {
    const EquationParams p = golden_pole_params();
    CHECK_THROWS_AS((void)dp3::series_at_pole(cx(0.0), cx(1.0), p, 12),
                    dp3::PreconditionError);
    CHECK_THROWS_AS((void)dp3::series_at_zero(cx(0.0), 1, cx(0.0), p, 12),
                    dp3::PreconditionError);
    CHECK_THROWS_AS((void)dp3::series_at_zero(cx(2.0), 0, cx(0.0), p, 12),
                    dp3::PreconditionError);
    CHECK_THROWS_AS((void)dp3::series_at_pole(cx(2.0), cx(1.0), p, 4),
                    dp3::PreconditionError);
    CHECK_THROWS_AS((void)dp3::series_at_pole(cx(2.0), cx(1.0), p, 70),
                    dp3::PreconditionError);
    EquationParams zero_b = p;
    zero_b.b = 0.0;
    CHECK_THROWS_AS((void)dp3::series_at_pole(cx(2.0), cx(1.0), zero_b, 12),
                    dp3::PreconditionError);
    EquationParams bad_eps = p;
    bad_eps.epsilon = 2;
    CHECK_THROWS_AS((void)dp3::series_at_pole(cx(2.0), cx(1.0), bad_eps, 12),
                    dp3::PreconditionError);
    CHECK_THROWS_AS((void)dp3::residual_norm(
                        dp3::series_at_pole(cx(2.0), cx(1.0), p, 12), -0.5),
                    dp3::PreconditionError);
}

TEST_CASE("longer truncations extend shorter ones") {
    std::mt19937 rng(91105);
    const Draw d = random_draw(rng);
    const LocalSeries s12 = dp3::series_at_pole(d.c, d.a0, d.p, 12);
    const LocalSeries s16 = dp3::series_at_pole(d.c, d.a0, d.p, 16);
    for (int k = 0; k <= 12; ++k) {
        CHECK(drift(s16.coeffs_u[static_cast<std::size_t>(k)],
                    s12.coeffs_u[static_cast<std::size_t>(k)]) <= 1e-13);
        CHECK(drift(s16.coeffs_h[static_cast<std::size_t>(k)],
                    s12.coeffs_h[static_cast<std::size_t>(k)]) <= 1e-12);
        CHECK(drift(s16.coeffs_f[static_cast<std::size_t>(k)],
                    s12.coeffs_f[static_cast<std::size_t>(k)]) <= 1e-12);
    }
    const LocalSeries z12 = dp3::series_at_zero(d.c, -1, d.b3, d.p, 12);
    const LocalSeries z16 = dp3::series_at_zero(d.c, -1, d.b3, d.p, 16);
    for (int k = 0; k <= 12; ++k)
        CHECK(drift(z16.coeffs_u[static_cast<std::size_t>(k)],
                    z12.coeffs_u[static_cast<std::size_t>(k)]) <= 1e-13);
}
