#pragma once

#include "lanefree/energy.hpp"
#include "lanefree/fleet.hpp"
#include "lanefree/parallel.hpp"

namespace lanefree {

enum class ControllerFamily { newtonian, pseudo_relativistic };

// Relaxation gains.  For the Newtonian family mu1 damps the lateral kinetic
// term and mu2 is the hard floor of the speed-tracking gain schedule.  For
// the pseudo-relativistic family they are the slopes of the linear
// longitudinal (mu2) and lateral (mu1) relaxation shapes.
struct ControllerGains {
    double mu1 = 0.0;
    double mu2 = 0.0;
};

struct ControlLaw {
    ControllerFamily family = ControllerFamily::newtonian;
    ControllerGains gains;
};

// Feedback (steer rate u_i, acceleration F_i) for every vehicle.  Both
// families make the matching energy a Lyapunov function of the closed loop:
// Newtonian decay is bounded by -ncc_dissipation_bound, pseudo-relativistic
// decay equals -prcc_dissipation exactly.  Throws DomainViolation on
// inadmissible states.
ControlVector fleet_controls(const FleetState& state, const FleetModel& model,
                             const ControlLaw& law,
                             ExecMode mode = ExecMode::automatic);

// Closed-loop state derivative: kinematics plus the feedback above.
FleetDeriv closed_loop_rhs(const FleetState& state, const FleetModel& model,
                           const ControlLaw& law,
                           ExecMode mode = ExecMode::automatic);

// Exact energy decay rate of the pseudo-relativistic loop:
// d/dt relativistic_energy = -prcc_dissipation.  Nonnegative, zero only at
// the cruise equilibrium.
double prcc_dissipation(const FleetState& state, const FleetModel& model,
                        const ControlLaw& law,
                        ExecMode mode = ExecMode::automatic);

// Guaranteed lower bound on the Newtonian loop's decay rate:
// d/dt newtonian_energy <= -ncc_dissipation_bound <= 0.
double ncc_dissipation_bound(const FleetState& state, const FleetModel& model,
                             const ControlLaw& law,
                             ExecMode mode = ExecMode::automatic);

// Scalar weights of the pseudo-relativistic law, exposed for tests and the
// macroscopic limit.  All require an admissible (v, theta).
//   accel_weight   q : multiplies dv/dt in the speed channel
//   steer_weight   beta : divides the steering feedback
//   accel_coupling a : cross term between acceleration and steering
double prcc_accel_weight(double v, double theta, const RoadSpec& road);
double prcc_steer_weight(double v, double theta, const RoadSpec& road,
                         const ClfParams& clf);
double prcc_accel_coupling(double v, double theta, const RoadSpec& road,
                           const ClfParams& clf);

// Per-vehicle internals of the Newtonian law, exposed for the gain-schedule
// invariants: speed_gain k_i >= mu2 and
// -k_i*(v_max*cos(theta_i) - v_star) <= neighbor_force <= k_i*v_star.
struct NccVehicleTerms {
    double neighbor_force = 0.0; // longitudinal pair + coupling load
    double speed_gain = 0.0;     // scheduled tracking gain k_i
    double lateral_load = 0.0;   // lateral damping + coupling forcing
};
NccVehicleTerms ncc_terms(int i, const FleetState& state,
                          const FleetModel& model, const ControlLaw& law);

} // namespace lanefree
