#include "lanefree/microsim.hpp"

#include <chrono>
#include <cmath>

#include "lanefree/rng.hpp"

namespace lanefree {

namespace {

FleetState step_from(const FleetState& w, const FleetDeriv& k, double h) {
    const int n = w.size();
    FleetState out;
    out.resize(n);
    for (int i = 0; i < n; ++i) {
        out.x[i] = w.x[i] + h * k.x[i];
        out.y[i] = w.y[i] + h * k.y[i];
        out.theta[i] = w.theta[i] + h * k.theta[i];
        out.v[i] = w.v[i] + h * k.v[i];
    }
    return out;
}

FleetDeriv combine(std::initializer_list<std::pair<double, const FleetDeriv*>> terms) {
    FleetDeriv out;
    out.resize(terms.begin()->second->size());
    for (const auto& [c, k] : terms)
        for (int i = 0; i < out.size(); ++i) {
            out.x[i] += c * k->x[i];
            out.y[i] += c * k->y[i];
            out.theta[i] += c * k->theta[i];
            out.v[i] += c * k->v[i];
        }
    return out;
}

struct StepResult {
    FleetState state;
    double error = 0.0; // rk45 scaled error estimate; 0 for rk4
};

StepResult rk4_step(const FleetState& w, double h, const FleetModel& model,
                    const ControlLaw& law, ExecMode mode) {
    FleetDeriv k1 = closed_loop_rhs(w, model, law, mode);
    FleetDeriv k2 = closed_loop_rhs(step_from(w, k1, 0.5 * h), model, law, mode);
    FleetDeriv k3 = closed_loop_rhs(step_from(w, k2, 0.5 * h), model, law, mode);
    FleetDeriv k4 = closed_loop_rhs(step_from(w, k3, h), model, law, mode);
    FleetDeriv slope = combine({{1.0 / 6.0, &k1},
                                {1.0 / 3.0, &k2},
                                {1.0 / 3.0, &k3},
                                {1.0 / 6.0, &k4}});
    return {step_from(w, slope, h), 0.0};
}

// Dormand-Prince 5(4) pair; the error estimate is the difference of the
// embedded orders scaled by rel_tol * max(1, |w|) per component.
StepResult rk45_step(const FleetState& w, double h, const FleetModel& model,
                     const ControlLaw& law, double rel_tol, ExecMode mode) {
    FleetDeriv k1 = closed_loop_rhs(w, model, law, mode);
    FleetDeriv k2 = closed_loop_rhs(step_from(w, k1, h * (1.0 / 5.0)), model, law, mode);
    FleetDeriv k3 = closed_loop_rhs(
        step_from(w, combine({{3.0 / 40.0, &k1}, {9.0 / 40.0, &k2}}), h), model,
        law, mode);
    FleetDeriv k4 = closed_loop_rhs(
        step_from(w,
                  combine({{44.0 / 45.0, &k1},
                           {-56.0 / 15.0, &k2},
                           {32.0 / 9.0, &k3}}),
                  h),
        model, law, mode);
    FleetDeriv k5 = closed_loop_rhs(
        step_from(w,
                  combine({{19372.0 / 6561.0, &k1},
                           {-25360.0 / 2187.0, &k2},
                           {64448.0 / 6561.0, &k3},
                           {-212.0 / 729.0, &k4}}),
                  h),
        model, law, mode);
    FleetDeriv k6 = closed_loop_rhs(
        step_from(w,
                  combine({{9017.0 / 3168.0, &k1},
                           {-355.0 / 33.0, &k2},
                           {46732.0 / 5247.0, &k3},
                           {49.0 / 176.0, &k4},
                           {-5103.0 / 18656.0, &k5}}),
                  h),
        model, law, mode);
    FleetDeriv fifth = combine({{35.0 / 384.0, &k1},
                                {500.0 / 1113.0, &k3},
                                {125.0 / 192.0, &k4},
                                {-2187.0 / 6784.0, &k5},
                                {11.0 / 84.0, &k6}});
    FleetState next = step_from(w, fifth, h);
    FleetDeriv err = combine({{71.0 / 57600.0, &k1},
                              {-71.0 / 16695.0, &k3},
                              {71.0 / 1920.0, &k4},
                              {-17253.0 / 339200.0, &k5},
                              {22.0 / 525.0, &k6}});
    // the embedded 4th order also samples the endpoint derivative
    FleetDeriv k7 = closed_loop_rhs(next, model, law, mode);
    double scaled = 0.0;
    for (int i = 0; i < w.size(); ++i) {
        auto piece = [&](double e, double k7c, double ref) {
            double d = h * (e - k7c / 40.0);
            double s = rel_tol * std::max(1.0, std::abs(ref));
            scaled = std::max(scaled, std::abs(d) / s);
        };
        piece(err.x[i], k7.x[i], w.x[i]);
        piece(err.y[i], k7.y[i], w.y[i]);
        piece(err.theta[i], k7.theta[i], w.theta[i]);
        piece(err.v[i], k7.v[i], w.v[i]);
    }
    return {std::move(next), scaled};
}

double family_energy(const FleetState& w, const FleetModel& model,
                     const ControlLaw& law, ExecMode mode) {
    return law.family == ControllerFamily::newtonian
               ? newtonian_energy(w, model, mode)
               : relativistic_energy(w, model, mode);
}

double family_dissipation(const FleetState& w, const FleetModel& model,
                          const ControlLaw& law, ExecMode mode) {
    return law.family == ControllerFamily::newtonian
               ? ncc_dissipation_bound(w, model, law, mode)
               : prcc_dissipation(w, model, law, mode);
}

} // namespace

Trajectory simulate(const FleetState& initial, const FleetModel& model,
                    const ControlLaw& law, const IntegratorConfig& config) {
    if (!(config.dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (!(config.t_end >= 0.0))
        throw std::invalid_argument("t_end must be nonnegative");
    if (config.record_stride < 1)
        throw std::invalid_argument("record stride must be >= 1");

    auto clock_start = std::chrono::steady_clock::now();
    Trajectory traj;
    FleetState w = initial;
    ExecMode mode = config.exec;

    auto record = [&](double t) {
        Sample s;
        s.t = t;
        s.state = w;
        s.controls = fleet_controls(w, model, law, mode);
        s.newtonian = newtonian_energy(w, model, mode);
        s.relativistic = relativistic_energy(w, model, mode);
        s.dissipation = family_dissipation(w, model, law, mode);
        traj.samples.push_back(std::move(s));
    };

    double energy = family_energy(w, model, law, mode); // throws if inadmissible
    traj.initial_energy = energy;
    record(0.0);

    double t = 0.0;

    // Attempts one step of size `step` from w at time t; on success commits
    // the state and returns true, on a guard violation records the event and
    // returns false (setting abort once retries are exhausted).
    int retries = 0;
    auto attempt = [&](double step, double* error_out) {
        std::optional<ConstraintViolation> violation;
        StepResult result;
        try {
            result = error_out
                         ? rk45_step(w, step, model, law, config.rel_tol, mode)
                         : rk4_step(w, step, model, law, mode);
        } catch (const DomainViolation& e) {
            violation = e.violation;
        }
        if (!violation && error_out && result.error > 1.0) {
            // plain error-control rejection, handled by the caller
            *error_out = result.error;
            return false;
        }
        double next_energy = 0.0;
        if (!violation) {
            try {
                next_energy = family_energy(result.state, model, law, mode);
                if (next_energy > energy + 1e-10 * std::max(1.0, energy))
                    violation = ConstraintViolation{ConstraintKind::energy_rise,
                                                    -1, -1, energy - next_energy};
            } catch (const DomainViolation& e) {
                violation = e.violation;
            }
        }
        if (violation) {
            traj.guard_events.push_back({t, step, *violation});
            if (error_out) *error_out = 0.0;
            if (++retries > config.max_guard_retries) {
                traj.abort = violation;
                traj.abort_time = t;
            }
            return false;
        }
        traj.max_energy_rise =
            std::max(traj.max_energy_rise, next_energy - energy);
        w = std::move(result.state);
        energy = next_energy;
        retries = 0;
        ++traj.steps;
        return true;
    };

    if (config.method == StepMethod::rk4) {
        // Fixed grid t = k * dt.  Guard retries halve within an interval;
        // sub-offsets are exact binary fractions of the interval, so the
        // grid re-synchronizes without drift.
        long long intervals = 0;
        while (t < config.t_end && !traj.abort) {
            double interval = std::min(config.dt, config.t_end - t);
            double done = 0.0, frac = 1.0;
            while (done < 1.0 && !traj.abort) {
                double sub = std::min(frac, 1.0 - done);
                if (attempt(sub * interval, nullptr)) {
                    done += sub;
                    t = std::min(intervals * config.dt + done * interval,
                                 config.t_end);
                } else {
                    frac = 0.5 * sub;
                }
            }
            if (traj.abort) break;
            ++intervals;
            t = std::min(intervals * config.dt, config.t_end);
            if (intervals % config.record_stride == 0 && t < config.t_end)
                record(t);
        }
    } else {
        double h = config.dt;
        while (t < config.t_end && !traj.abort) {
            double step = std::min(h, config.t_end - t);
            double error = 0.0;
            if (attempt(step, &error)) {
                t += step;
                double grow =
                    error > 0.0
                        ? std::min(5.0, std::max(0.2, 0.9 * std::pow(error, -0.2)))
                        : 5.0;
                h = std::min(config.dt, step * grow);
                if (traj.steps % config.record_stride == 0 && t < config.t_end)
                    record(t);
            } else if (error > 1.0) {
                h = step * std::max(0.2, 0.9 * std::pow(error, -0.2));
            } else {
                h = 0.5 * step;
            }
        }
    }

    if (traj.samples.back().t < t) record(t);
    traj.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      clock_start)
            .count();
    return traj;
}

FleetState seeded_fleet(int n, std::uint64_t seed, const FleetModel& model,
                        double gap_min, double gap_max) {
    if (n < 1) throw std::invalid_argument("fleet size must be >= 1");
    if (!(gap_min > model.pairs.max_floor()))
        throw std::invalid_argument(
            "seeded gaps must exceed every pairwise separation floor");
    if (!(gap_max >= gap_min)) throw std::invalid_argument("gap_max < gap_min");

    DeterministicRng rng(seed);
    const RoadSpec& road = model.road;
    double y_span = 0.95 * model.suite.wall->flat_edge();
    double theta_span = 0.5 * road.heading_limit;
    double v_lo = 0.5 * road.v_star;
    double v_hi = std::min(1.1 * road.v_star,
                           0.9 * road.v_max / std::cos(road.heading_limit));

    FleetState state;
    state.resize(n);
    double x = 0.0;
    for (int i = 0; i < n; ++i) {
        if (i > 0) x -= rng.uniform(gap_min, gap_max);
        state.x[i] = x;
        state.y[i] = rng.uniform(-y_span, y_span);
        state.theta[i] = rng.uniform(-theta_span, theta_span);
        state.v[i] = rng.uniform(v_lo, v_hi);
    }
    // by construction: x gaps exceed every floor (d >= |dx|), y inside the
    // plateau, headings at half the limit, speeds inside (0, v_max)
    if (auto bad = first_violation(state, road, model.pairs))
        throw std::logic_error("seeded fleet inadmissible: " + bad->describe());
    return state;
}

} // namespace lanefree
