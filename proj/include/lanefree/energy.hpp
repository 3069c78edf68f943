#pragma once

#include "lanefree/fleet.hpp"
#include "lanefree/parallel.hpp"
#include "lanefree/potentials.hpp"

namespace lanefree {

// Weights of the Lyapunov (energy) functions.
//   barrier_gain  A : heading-barrier weight, > 0
//   lateral_gain  b : lateral kinetic weight, > 1 - v_star/v_max
struct ClfParams {
    double barrier_gain = 1.0;
    double lateral_gain = 1.0;
};

// Everything the energies (and the controllers built from them) need to
// evaluate a fleet.
struct FleetModel {
    RoadSpec road;
    PairMatrix pairs;
    PotentialSuite suite;
    ClfParams clf;
};

// Checks road feasibility, pair-matrix symmetry/bounds, suite axioms and the
// CLF weight constraints together.  Throws std::invalid_argument.
void validate_model(const FleetModel& model);

// Newtonian fleet energy: quadratic cruise and lateral kinetic terms, wall
// and pair potentials, and the heading barrier
// A*(1/(cos(theta)-cos(phi)) - 1/(1-cos(phi))).
// Zero exactly at the cruise equilibrium (theta = 0, v = v_star, flat wall,
// separations beyond the interaction radius).  Throws DomainViolation on
// inadmissible states.
double newtonian_energy(const FleetState& state, const FleetModel& model,
                        ExecMode mode = ExecMode::automatic);

// Pseudo-relativistic fleet energy: same potential terms, but the kinetic
// part is divided by (v_max - v)*v so the energy diverges at both speed
// limits, replacing the hard v_max check by a barrier.
double relativistic_energy(const FleetState& state, const FleetModel& model,
                           ExecMode mode = ExecMode::automatic);

// Exact analytic gradients, laid out like a FleetDeriv.
FleetDeriv newtonian_energy_gradient(const FleetState& state,
                                     const FleetModel& model,
                                     ExecMode mode = ExecMode::automatic);
FleetDeriv relativistic_energy_gradient(const FleetState& state,
                                        const FleetModel& model,
                                        ExecMode mode = ExecMode::automatic);

// Containment bounds of the sublevel set {relativistic_energy <= level}.
// Because every term of the energy is nonnegative, each single term is
// bounded by the level, and inverting one term bounds one coordinate for
// every vehicle, uniformly in time along a trajectory (the energy never
// rises).  All are computed by monotone bisection and satisfy the defining
// identity (term(bound) == level) to near round-off.

// Largest admissible |theta|: heading_barrier(omega) == level, omega < phi.
double heading_bound(double level, const FleetModel& model);

// Largest admissible |y|: wall(eta) == level, eta < half_width.
double lateral_bound(double level, const FleetModel& model);

// Smallest admissible separation of pair (i, j):
// pair_potential(rho) == level with rho > floor_ij; equals the interaction
// radius at level 0.
double separation_bound(double level, const FleetModel& model, int i, int j);

// Speed interval [speed_floor, speed_ceiling] containing every v_i, from the
// relativistic kinetic term at theta == 0:
// (v - v_star)^2 / ((v_max - v) v) == level.
double speed_floor(double level, const RoadSpec& road);
double speed_ceiling(double level, const RoadSpec& road);

} // namespace lanefree
