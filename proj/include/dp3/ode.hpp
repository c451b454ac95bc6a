// Integration of the degenerate Painleve III (D7) flow along complex paths:
// the first-order system for (u, u', phi), with the Hamiltonian and the
// auxiliary function tracked at every sample, singularity crossings handled
// by local-series vaulting, and initial states seeded from the large-|tau|
// representations.
#pragma once

#include <array>
#include <vector>

#include "dp3/asymptotics.hpp"
#include "dp3/laurent.hpp"
#include "dp3/params.hpp"

namespace dp3 {

// Hamiltonian value H(tau, u, u') and auxiliary value f(tau, u, u') of the
// equation. Both require u != 0 and tau != 0 (PreconditionError otherwise).
cx hamiltonian_value(cx tau, cx u, cx du, const EquationParams& p);
cx auxiliary_value(cx tau, cx u, cx du, const EquationParams& p);

// One point of a solution. H and f always hold the closed-form values of
// (tau, u, du); phi is the integrated phase of the associated linear problem,
// fixed to 0 at the seed point (the gauge every downstream consumer must
// treat as such).
struct SolutionState {
    cx tau{};
    cx u{};
    cx du{};
    cx phi{};
    cx H{};
    cx f{};
};

// Builds a state with H and f filled in from (tau, u, du).
SolutionState make_state(cx tau, cx u, cx du, cx phi, const EquationParams& p);

// Verifies that the stored H and f agree with the closed forms to
// tol * max(1, |value|); throws InvariantViolation when they do not and
// PreconditionError when u = 0 or tau = 0 makes the check impossible.
void check_state(const SolutionState& s, const EquationParams& p, double tol = 1e-9);

// Derivatives of (u, du, phi) with respect to tau.
struct Derivatives {
    cx du{};
    cx ddu{};
    cx dphi{};
};

// Right-hand side of the first-order system
//   u''  = (u')^2/u - u'/tau + (-8 eps u^2 + 2 a b)/tau + b^2/u,
//   phi' = 2 a / tau + b / u.
// Throws PreconditionError at u = 0 or tau = 0 (the integrator vaults across
// such points instead of evaluating there).
Derivatives rhs(const SolutionState& s, const EquationParams& p);

// Analytic Jacobian of the right-hand side: rows (du, ddu, dphi), columns
// (u, du, tau), row-major.
std::array<cx, 9> rhs_jacobian(const SolutionState& s, const EquationParams& p);

// Tunables of one integration run.
struct IntegrationControl {
    double rel_tol = 1e-12;      // local error per unit path length, relative part
    double abs_tol = 1e-14;      // absolute floor of the error weights
    double max_step = 0.0;       // arclength cap per step; 0 = segment length
    long max_steps = 2000000;    // accepted+rejected step budget per run
    double blow_up = 1e6;        // |u| > blow_up * |tau|^{1/3} starts a pole vault
    double zero_guard = 1e-6;    // |u| < zero_guard * |tau|^{1/3} starts a zero vault
    double origin_radius = 1e-3; // every path segment must clear this disk at 0
    int series_order = 12;       // truncation order of the vault series
    double exit_fraction = 0.5;  // vault exit radius as a fraction of the trust radius
};

// One singularity crossing: the classified kind, the fitted expansion data,
// and the boundary points of the vaulted stretch.
struct TrajectoryEvent {
    SiteKind kind = SiteKind::pole;
    cx center{};         // fitted singular point
    cx free_param{};     // free coefficient of the local expansion
    LocalFit fitted_by{};// full classifier record behind the identification
    cx entry{};          // last integrated point before the crossing
    cx exit{};           // first integrated point after it
    double exit_radius = 0.0;
};

struct IntegrationResult {
    SolutionState final_state{};
    std::vector<SolutionState> trajectory; // every accepted step, both vault sides
    std::vector<TrajectoryEvent> events;   // singularity crossings, in path order
    long accepted = 0;
    long rejected = 0;
};

// Integrates the system along the straight segments joining the waypoints,
// starting from `initial` (whose tau must equal path.front()). Stepping is
// an adaptive embedded pair of order 8 with PI control. When |u| leaves the
// [zero_guard, blow_up] * |tau|^{1/3} band at an accepted point, the run
// switches to a local fit of the recent samples, classifies the singularity,
// crosses it on the fitted series (phi continued by the exact residue
// logarithm plus a termwise antiderivative), and resumes on the far side,
// recording a TrajectoryEvent. Throws ConfigError for bad control settings,
// PreconditionError for bad paths or inconsistent initial data, and
// NumericError when stepping or a vault fit fails (the message carries the
// samples that defeated the fit).
IntegrationResult integrate(const std::vector<cx>& path, const SolutionState& initial,
                            const EquationParams& p, const IntegrationControl& ctrl = {});

// Initial state at a large-|tau| point from connection data: u and u' from
// the leading profiles (sharpest supported representation), phi = 0 as the
// gauge. The half-axis is inferred from arg(tau0) (nearest of the four, with
// the labels in p resolving the quadrant). Requires the context phase to
// satisfy |phi| >= min_phase; throws PreconditionError otherwise, and lets
// NearSingularity escape when tau0 falls inside the exclusion band around a
// predicted singular site (the exception carries a safe alternative point).
SolutionState seed_from_asymptotics(cx tau0, const MonodromyData& md,
                                    const EquationParams& p, double min_phase = 50.0);

// One detected singular site of an inward sweep, paired with the lattice
// prediction it realizes.
struct LocatedSite {
    long m = 0;
    SiteKind kind = SiteKind::pole;
    cx tau_detected{};  // fitted center of the crossing event
    cx tau_predicted{}; // Newton-refined lattice site it pairs with
};

// Seeds beyond the m_hi end of the predicted site lattices on the given
// half-axis, integrates inward across the window [m_lo, m_hi], and pairs
// every crossing event with the nearest predicted site. Exactly one event
// must land in each predicted hole of the window; a double or empty hole
// throws InvariantViolation. Results are sorted by m, then by kind.
std::vector<LocatedSite> locate_singularities(const MonodromyData& md,
                                              const EquationParams& p, Axis axis,
                                              long m_lo, long m_hi,
                                              const IntegrationControl& ctrl = {});

}  // namespace dp3
