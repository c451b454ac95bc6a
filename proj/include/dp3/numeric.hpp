// Shared numeric primitives: complex helpers, branch-controlled roots,
// 2x2 complex matrices, error types, and a small thread helper.
#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace dp3 {

using cx = std::complex<double>;
inline constexpr double pi = 3.141592653589793238462643383279502884;
inline const double ln_2_plus_sqrt3 = std::log(2.0 + std::sqrt(3.0));

// theta0 is the fixed auxiliary angle with cos(theta0) = i/sqrt(2) and
// sin(theta0) = -sqrt(3/2).
inline cx theta0_angle() { return cx(-pi / 2.0, 0.5 * ln_2_plus_sqrt3); }

inline cx sq(cx z) { return z * z; }

// Cube root on the branch tied to an axis label: the ray arg z = pi*label is
// rotated onto the principal sector, rooted there, and rotated back. For
// label = +-1 and negative real z this gives -|z|^{1/3}; for label = 0 it is
// the principal root. z^{2/3} is defined as the square of this root.
inline cx root13(cx z, int axis_label) {
    const cx rot = std::polar(1.0, -pi * static_cast<double>(axis_label));
    const cx back = std::polar(1.0, pi * static_cast<double>(axis_label));
    return back * std::pow(z * rot, 1.0 / 3.0);
}
inline cx root23(cx z, int axis_label) { return sq(root13(z, axis_label)); }

// Signed cube root of a real number.
inline double cbrt_signed(double x) { return std::cbrt(x); }

struct Mat2 {
    // Row-major entries m[0]=a11, m[1]=a12, m[2]=a21, m[3]=a22.
    std::array<cx, 4> m{};

    static Mat2 identity() { return Mat2{{cx(1), cx(0), cx(0), cx(1)}}; }
    cx& operator()(int r, int c) { return m[2 * r + c]; }
    cx operator()(int r, int c) const { return m[2 * r + c]; }

    Mat2 operator*(const Mat2& o) const {
        return Mat2{{m[0] * o.m[0] + m[1] * o.m[2], m[0] * o.m[1] + m[1] * o.m[3],
                     m[2] * o.m[0] + m[3] * o.m[2], m[2] * o.m[1] + m[3] * o.m[3]}};
    }
    Mat2 operator+(const Mat2& o) const {
        return Mat2{{m[0] + o.m[0], m[1] + o.m[1], m[2] + o.m[2], m[3] + o.m[3]}};
    }
    Mat2 operator-(const Mat2& o) const {
        return Mat2{{m[0] - o.m[0], m[1] - o.m[1], m[2] - o.m[2], m[3] - o.m[3]}};
    }
    Mat2 operator*(cx s) const { return Mat2{{s * m[0], s * m[1], s * m[2], s * m[3]}}; }
    Mat2 operator-() const { return Mat2{{-m[0], -m[1], -m[2], -m[3]}}; }

    cx det() const { return m[0] * m[3] - m[1] * m[2]; }
    cx trace() const { return m[0] + m[3]; }
    Mat2 inverse() const {
        const cx d = det();
        return Mat2{{m[3] / d, -m[1] / d, -m[2] / d, m[0] / d}};
    }
    double max_abs() const {
        double r = 0.0;
        for (const cx& e : m) r = std::max(r, std::abs(e));
        return r;
    }
};

inline Mat2 sigma1() { return Mat2{{cx(0), cx(1), cx(1), cx(0)}}; }
inline Mat2 sigma3() { return Mat2{{cx(1), cx(0), cx(0), cx(-1)}}; }
inline Mat2 diag(cx d1, cx d2) { return Mat2{{d1, cx(0), cx(0), d2}}; }

// Distance between matrices modulo an overall sign flip.
inline double dist_mod_sign(const Mat2& x, const Mat2& y) {
    return std::min((x - y).max_abs(), (x + y).max_abs());
}

// Error taxonomy. The CLI maps these onto its exit codes.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct PreconditionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InvariantViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};
// Raised when an evaluation point sits too close to a predicted singularity.
struct NearSingularity : std::runtime_error {
    double distance;
    cx nearest;
    cx suggested;
    NearSingularity(const std::string& what, double dist, cx near_pt, cx safe_pt)
        : std::runtime_error(what), distance(dist), nearest(near_pt), suggested(safe_pt) {}
};

// Thread count honoring the DP3_THREADS environment cap.
unsigned thread_count();

// Static-chunked parallel loop; deterministic work assignment per index, so
// results do not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

// FNV-1a, used to stamp output files with a hash of their config.
inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace dp3
