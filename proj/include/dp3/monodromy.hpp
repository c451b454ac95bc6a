// Monodromy data of the degenerate Painleve III (D7) Lax pair: the manifold
// of Stokes multipliers and connection-matrix entries, the discrete symmetry
// action that moves data between the four half-axes, the scalar invariants
// entering the asymptotic formulae, and reproducible samplers used by tests.
#pragma once

#include <array>
#include <random>
#include <string>

#include "dp3/numeric.hpp"

namespace dp3 {

struct MonodromyData {
    cx a{};
    cx s00{}, s0inf{}, s1inf{};
    cx g11{}, g12{}, g21{}, g22{};
};

struct ManifoldReport {
    std::array<double, 5> residuals{};  // product, cross, g11-quadratic, g22-quadratic, det
    double worst = 0.0;
    bool pass = false;
};

// Evaluates the five defining equations of the monodromy manifold and reports
// each absolute residual.
ManifoldReport validate_manifold(const MonodromyData& md, double tol = 1e-10);

// Symmetry action for the real half-axes, labels eps1, eps2 in {-1,0,1}.
// (0,0) is the identity (returns the argument bit for bit).
MonodromyData apply_symmetry(const MonodromyData& md, int eps1, int eps2);

// Symmetry action for the imaginary half-axes, eps1 in {-1,1}, eps2 in {-1,0,1}.
MonodromyData apply_imag_symmetry(const MonodromyData& md, int eps1, int eps2);

// (i/2pi) log(g11 g22) evaluated on the (eps1, eps2) image; principal branch.
// With normalize set, the branch is shifted by an integer so Re lands in
// [0, 1) (callers that require (0,1) must still reject the boundary).
cx nu_tilde_plus1(const MonodromyData& md, int eps1, int eps2, bool normalize = false);
// Same for the imaginary-axis image.
cx nu_hat_plus1(const MonodromyData& md, int eps1, int eps2, bool normalize = false);

// Scalars of the oscillatory (Re = 1/2) regime. rho1 requires
// Re(nu_tilde_plus1) = 1/2, equivalently -g11 g22 positive real; violation
// raises PreconditionError naming the offending real part.
double rho1(const MonodromyData& md, int eps1, int eps2);
cx rho2(const MonodromyData& md, int eps1, int eps2);
double rho1_hat(const MonodromyData& md, int eps1, int eps2);
cx rho2_hat(const MonodromyData& md, int eps1, int eps2);

// Scalars of the singular real (resp. imaginary) reduction.
double rho0(const MonodromyData& md, int eps1, int eps2);
double rho0_sharp(const MonodromyData& md, int eps1, int eps2);
double rho0_hat(const MonodromyData& md, int eps1, int eps2);
double rho0_sharp_hat(const MonodromyData& md, int eps1, int eps2);

bool check_singular_real_reduction(const MonodromyData& md, int eps1, int eps2,
                                   double tol = 1e-10);
bool check_singular_imag_reduction(const MonodromyData& md, int eps1, int eps2,
                                   double tol = 1e-10);

struct DerivedScalars {
    cx nu_tilde_plus_1{};
    bool half_regime = false;  // Re(nu) = 1/2 within tolerance
    double rho1 = 0.0;         // valid when half_regime
    cx rho2{};                 // valid when half_regime
    bool singular_real = false;
    double rho0 = 0.0;       // valid when singular_real
    double rho0_sharp = 0.0; // valid when singular_real
    static cx theta0() { return theta0_angle(); }
};
DerivedScalars derived_scalars(const MonodromyData& md, int eps1, int eps2);

// Samplers. All draw from the given engine only, so runs are reproducible.

// Generic point of the manifold: a, g11, g12, s00 free; g21 from the
// resulting quadratic (smaller-magnitude root), g22 from the determinant,
// s0inf/s1inf from the two quadratic equations; the product equation is
// verified as a residual.
MonodromyData sample_manifold_point(std::mt19937& rng);

// Point with prescribed nu_tilde_plus1 (eps1 = eps2 = 0 labels) and a.
MonodromyData sample_manifold_point_with_nu(std::mt19937& rng, cx nu_plus1, cx a);

// Point satisfying the singular real reduction at eps1 = eps2 = 0
// (real a, s00 imaginary, g11 = -conj(g22), g12 = -conj(g21)).
MonodromyData sample_singular_real(std::mt19937& rng);

// Point whose imaginary-axis image satisfies the analogous reduction;
// supported for (eps1, eps2) = (1,-1) and (-1,1).
MonodromyData sample_singular_imag(std::mt19937& rng, int eps1, int eps2);

}  // namespace dp3
