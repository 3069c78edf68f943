#include "lanefree/energy.hpp"

#include <cmath>
#include <memory>
#include <optional>
#include <vector>

#include "neighbors.hpp"

namespace lanefree {

void validate_model(const FleetModel& model) {
    validate_road(model.road);
    if (model.pairs.size() < 1)
        throw std::invalid_argument("model needs a pair matrix");
    for (int i = 0; i < model.pairs.size(); ++i)
        for (int j = 0; j < model.pairs.size(); ++j) {
            if (i == j) continue;
            if (model.pairs.weight(i, j) != model.pairs.weight(j, i) ||
                model.pairs.floor(i, j) != model.pairs.floor(j, i))
                throw std::invalid_argument("pair coefficients must be symmetric");
            if (!(model.pairs.weight(i, j) >= 1.0))
                throw std::invalid_argument("pair weights must be >= 1");
            if (!(model.pairs.floor(i, j) > 0.0))
                throw std::invalid_argument("pair floors must be positive");
        }
    validate_suite(model.suite, model.pairs, model.road);
    if (!(model.clf.barrier_gain > 0.0))
        throw std::invalid_argument("heading barrier gain must be positive");
    if (!(model.clf.lateral_gain > 1.0 - model.road.v_star / model.road.v_max))
        throw std::invalid_argument(
            "lateral kinetic gain must exceed 1 - v_star / v_max");
}

namespace {

// Per-vehicle box constraints, throwing with the vehicle id attached.  The
// pair (separation) constraint is enforced inside the pair loops.
void check_vehicle(int i, const FleetState& state, const FleetModel& model) {
    const RoadSpec& road = model.road;
    double m = road.half_width - std::abs(state.y[i]);
    if (!(m > 0.0)) throw DomainViolation({ConstraintKind::lateral, i, -1, m});
    m = road.heading_limit - std::abs(state.theta[i]);
    if (!(m > 0.0)) throw DomainViolation({ConstraintKind::heading, i, -1, m});
    m = std::min(state.v[i], road.v_max - state.v[i]);
    if (!(m > 0.0)) throw DomainViolation({ConstraintKind::speed, i, -1, m});
}

// Sum of pair-potential values (for energies) or the x/y force components
// (for gradients) over the active neighbors of i, in ascending j.
template <class Fn>
void over_neighbors(int i, const FleetState& state, const FleetModel& model,
                    const detail::NeighborIndex* index,
                    std::vector<int>& scratch, Fn&& fn) {
    const double lambda = model.suite.interaction_radius();
    const int n = state.size();
    auto consider = [&](int j) {
        double dx = state.x[i] - state.x[j];
        if (std::abs(dx) >= lambda) return; // d >= |dx|: no interaction
        double dy = state.y[i] - state.y[j];
        double d = weighted_distance(dx, dy, model.pairs.weight(i, j));
        if (!(d > model.pairs.floor(i, j)))
            throw DomainViolation({ConstraintKind::separation, i, j,
                                   d - model.pairs.floor(i, j)});
        fn(j, dx, dy, d);
    };
    if (index) {
        index->candidates(i, scratch);
        for (int j : scratch) consider(j);
    } else {
        for (int j = 0; j < n; ++j)
            if (j != i) consider(j);
    }
}

std::unique_ptr<detail::NeighborIndex> maybe_index(const FleetState& state,
                                                   const FleetModel& model) {
    if (state.size() <= detail::kGridThreshold) return nullptr;
    return std::make_unique<detail::NeighborIndex>(
        state.x, model.suite.interaction_radius());
}

double heading_barrier(double theta, const FleetModel& model) {
    double cphi = std::cos(model.road.heading_limit);
    return model.clf.barrier_gain *
           (1.0 / (std::cos(theta) - cphi) - 1.0 / (1.0 - cphi));
}

// Potential part shared by both energies: wall + half the pair sum + heading
// barrier.
double potential_term(int i, const FleetState& state, const FleetModel& model,
                      const detail::NeighborIndex* index,
                      std::vector<int>& scratch) {
    double pair_sum = 0.0;
    over_neighbors(i, state, model, index, scratch,
                   [&](int j, double, double, double d) {
                       pair_sum += model.suite.pair_potential
                                       ->eval(d, model.pairs.floor(i, j))
                                       .value;
                   });
    return model.suite.wall->eval(state.y[i]).value + 0.5 * pair_sum +
           heading_barrier(state.theta[i], model);
}

template <class Term>
double energy_sum(const FleetState& state, const FleetModel& model,
                  ExecMode mode, Term&& term) {
    const int n = state.size();
    auto index = maybe_index(state, model);
    std::vector<double> terms(n);
    bool par = use_parallel(mode, n);
    detail::guarded_for(n, par, [&](int i) {
        thread_local std::vector<int> scratch;
        check_vehicle(i, state, model);
        terms[i] = term(i, index.get(), scratch);
    });
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += terms[i]; // fixed reduction order
    return total;
}

} // namespace

double newtonian_energy(const FleetState& state, const FleetModel& model,
                        ExecMode mode) {
    const double v_star = model.road.v_star;
    const double b = model.clf.lateral_gain;
    return energy_sum(state, model, mode,
                      [&](int i, const detail::NeighborIndex* index,
                          std::vector<int>& scratch) {
                          double c = std::cos(state.theta[i]);
                          double s = std::sin(state.theta[i]);
                          double v = state.v[i];
                          double along = v * c - v_star;
                          double kinetic =
                              0.5 * along * along + 0.5 * b * v * v * s * s;
                          return kinetic +
                                 potential_term(i, state, model, index, scratch);
                      });
}

double relativistic_energy(const FleetState& state, const FleetModel& model,
                           ExecMode mode) {
    const double v_star = model.road.v_star;
    const double v_max = model.road.v_max;
    const double b = model.clf.lateral_gain;
    return energy_sum(state, model, mode,
                      [&](int i, const detail::NeighborIndex* index,
                          std::vector<int>& scratch) {
                          double c = std::cos(state.theta[i]);
                          double s = std::sin(state.theta[i]);
                          double v = state.v[i];
                          double along = v * c - v_star;
                          double kinetic =
                              (along * along + b * v * v * s * s) /
                              (2.0 * (v_max - v) * v);
                          return kinetic +
                                 potential_term(i, state, model, index, scratch);
                      });
}

namespace {

template <class Entry>
FleetDeriv gradient_common(const FleetState& state, const FleetModel& model,
                           ExecMode mode, Entry&& entry) {
    const int n = state.size();
    auto index = maybe_index(state, model);
    FleetDeriv grad;
    grad.resize(n);
    detail::guarded_for(n, use_parallel(mode, n), [&](int i) {
        thread_local std::vector<int> scratch;
        check_vehicle(i, state, model);
        double fx = 0.0, fy = 0.0;
        over_neighbors(i, state, model, index.get(), scratch,
                       [&](int j, double dx, double dy, double d) {
                           double slope =
                               model.suite.pair_potential
                                   ->eval(d, model.pairs.floor(i, j))
                                   .slope;
                           fx += slope * dx / d;
                           fy += model.pairs.weight(i, j) * slope * dy / d;
                       });
        grad.x[i] = fx;
        grad.y[i] = model.suite.wall->eval(state.y[i]).slope + fy;
        entry(i, grad); // fills theta and v entries
    });
    return grad;
}

} // namespace

FleetDeriv newtonian_energy_gradient(const FleetState& state,
                                     const FleetModel& model, ExecMode mode) {
    const double v_star = model.road.v_star;
    const double b = model.clf.lateral_gain;
    const double A = model.clf.barrier_gain;
    const double cphi = std::cos(model.road.heading_limit);
    return gradient_common(
        state, model, mode, [&](int i, FleetDeriv& grad) {
            double c = std::cos(state.theta[i]);
            double s = std::sin(state.theta[i]);
            double v = state.v[i];
            double gap = c - cphi;
            grad.theta[i] =
                v * s * ((b - 1.0) * v * c + v_star) + A * s / (gap * gap);
            grad.v[i] = c * (v * c - v_star) + b * v * s * s;
        });
}

FleetDeriv relativistic_energy_gradient(const FleetState& state,
                                        const FleetModel& model,
                                        ExecMode mode) {
    const double v_star = model.road.v_star;
    const double v_max = model.road.v_max;
    const double b = model.clf.lateral_gain;
    const double A = model.clf.barrier_gain;
    const double cphi = std::cos(model.road.heading_limit);
    return gradient_common(
        state, model, mode, [&](int i, FleetDeriv& grad) {
            double c = std::cos(state.theta[i]);
            double s = std::sin(state.theta[i]);
            double v = state.v[i];
            double gap = c - cphi;
            double rem = v_max - v;
            // d(kinetic)/dtheta = sin * [((b-1) v cos + v*) / (v_max - v)]
            grad.theta[i] = s * (A / (gap * gap) +
                                 ((b - 1.0) * v * c + v_star) / rem);
            // d(kinetic)/dv = q(v, theta) (v cos - v*) + a(v, theta) v sin
            double q = (v_max * v * c + v_star * v_max - 2.0 * v_star * v) /
                       (2.0 * rem * rem * v * v);
            double across = b * v_max * s / (2.0 * rem * rem * v);
            grad.v[i] = q * (v * c - v_star) + across * v * s;
        });
}

namespace {

// Monotone bisection: the t in (lo, hi) with f(t) == level, where f is
// increasing, f(lo) = 0 and f -> +inf as t -> hi (so hi itself is never
// evaluated).  128 halvings pin t to the last representable bracket.
template <class F>
double rising_inverse(double level, double lo, double hi, F&& f) {
    if (!(level > 0.0)) return lo;
    double a = lo, b = hi;
    for (int k = 0; k < 128; ++k) {
        double m = 0.5 * (a + b);
        if (m == a || m == b) break;
        (f(m) < level ? a : b) = m;
    }
    return 0.5 * (a + b);
}

} // namespace

double heading_bound(double level, const FleetModel& model) {
    return rising_inverse(level, 0.0, model.road.heading_limit,
                          [&](double t) { return heading_barrier(t, model); });
}

double lateral_bound(double level, const FleetModel& model) {
    return rising_inverse(level, model.suite.wall->flat_edge(),
                          model.road.half_width,
                          [&](double y) { return model.suite.wall->eval(y).value; });
}

double separation_bound(double level, const FleetModel& model, int i, int j) {
    const double floor = model.pairs.floor(i, j);
    const double lambda = model.suite.interaction_radius();
    if (!(level > 0.0)) return lambda;
    // V decreases from +inf at the floor to 0 at the radius; invert the
    // falling direction by bisecting on the gap above the floor.
    double a = floor, b = lambda;
    for (int k = 0; k < 128; ++k) {
        double m = 0.5 * (a + b);
        if (m == a || m == b) break;
        double vm = model.suite.pair_potential->eval(m, floor).value;
        (vm > level ? a : b) = m;
    }
    return 0.5 * (a + b);
}

namespace {

double relativistic_speed_term(double v, const RoadSpec& road) {
    double dv = v - road.v_star;
    return dv * dv / ((road.v_max - v) * v);
}

} // namespace

double speed_floor(double level, const RoadSpec& road) {
    if (!(level > 0.0)) return road.v_star;
    // term decreases from +inf at v -> 0+ to 0 at v_star
    double a = 0.0, b = road.v_star;
    for (int k = 0; k < 128; ++k) {
        double m = 0.5 * (a + b);
        if (m == a || m == b) break;
        (relativistic_speed_term(m, road) > level ? a : b) = m;
    }
    return 0.5 * (a + b);
}

double speed_ceiling(double level, const RoadSpec& road) {
    if (!(level > 0.0)) return road.v_star;
    return rising_inverse(level, road.v_star, road.v_max, [&](double v) {
        return relativistic_speed_term(v, road);
    });
}

} // namespace lanefree
