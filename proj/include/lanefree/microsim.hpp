#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "lanefree/controllers.hpp"
#include "lanefree/energy.hpp"
#include "lanefree/fleet.hpp"

namespace lanefree {

enum class StepMethod { rk4, rk45 };

struct IntegratorConfig {
    StepMethod method = StepMethod::rk4;
    double dt = 1e-3;          // fixed step (rk4) or initial/maximum step (rk45)
    double t_end = 0.0;
    double rel_tol = 1e-8;     // rk45 per-step error target
    int record_stride = 100;   // record every k-th accepted step (plus first/last)
    int max_guard_retries = 8; // step halvings before giving up
    ExecMode exec = ExecMode::automatic;
};

// A rejected step: the tentative state left the admissible set or raised the
// family energy, and the step was retried at half size.
struct GuardEvent {
    double t = 0.0; // start of the offending step
    double dt = 0.0;
    ConstraintViolation violation;
};

struct Sample {
    double t = 0.0;
    FleetState state;
    ControlVector controls;
    double newtonian = 0.0;    // H
    double relativistic = 0.0; // H_R
    double dissipation = 0.0;  // family decay rate at the sample
};

struct Trajectory {
    std::vector<Sample> samples;
    std::vector<GuardEvent> guard_events;
    // Set when a step failed max_guard_retries times; the trajectory ends at
    // the last accepted state.
    std::optional<ConstraintViolation> abort;
    double abort_time = 0.0;
    long long steps = 0;          // accepted steps
    double max_energy_rise = 0.0; // max over steps of (E_next - E_prev), family energy
    double initial_energy = 0.0;  // family energy at t = 0
    double wall_seconds = 0.0;

    bool completed() const { return !abort.has_value(); }
};

// Integrates the closed loop from `initial` to t_end.  Every accepted step
// is guarded: the new state must be admissible and must not raise the family
// energy beyond round-off, otherwise the step is halved and retried
// (recording a GuardEvent) up to max_guard_retries times before aborting.
// On the guaranteed parameter sets guards never fire; they exist to catch
// discretization failures, not to hide them.
Trajectory simulate(const FleetState& initial, const FleetModel& model,
                    const ControlLaw& law, const IntegratorConfig& config);

// Seeded admissible initial condition: vehicles staggered along x with gaps
// uniform in [gap_min, gap_max], y inside the wall plateau, headings within
// half the limit, speeds within the feasible cruise band.  Deterministic in
// (seed, n) across platforms.
FleetState seeded_fleet(int n, std::uint64_t seed, const FleetModel& model,
                        double gap_min, double gap_max);

} // namespace lanefree
