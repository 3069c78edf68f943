#include "lanefree/controllers.hpp"

#include <cmath>
#include <memory>
#include <vector>

#include "neighbors.hpp"

namespace lanefree {

double prcc_accel_weight(double v, double theta, const RoadSpec& road) {
    if (!(v > 0.0) || !(v < road.v_max))
        throw DomainViolation({ConstraintKind::speed, -1, -1,
                               std::min(v, road.v_max - v)});
    double rem = road.v_max - v;
    return (road.v_max * v * std::cos(theta) + road.v_star * road.v_max -
            2.0 * road.v_star * v) /
           (2.0 * rem * rem * v * v);
}

double prcc_steer_weight(double v, double theta, const RoadSpec& road,
                         const ClfParams& clf) {
    if (!(v > 0.0) || !(v < road.v_max))
        throw DomainViolation({ConstraintKind::speed, -1, -1,
                               std::min(v, road.v_max - v)});
    double gap = std::cos(theta) - std::cos(road.heading_limit);
    if (!(gap > 0.0))
        throw DomainViolation({ConstraintKind::heading, -1, -1, gap});
    return clf.barrier_gain / (gap * gap) +
           ((clf.lateral_gain - 1.0) * v * std::cos(theta) + road.v_star) /
               (road.v_max - v);
}

double prcc_accel_coupling(double v, double theta, const RoadSpec& road,
                           const ClfParams& clf) {
    if (!(v > 0.0) || !(v < road.v_max))
        throw DomainViolation({ConstraintKind::speed, -1, -1,
                               std::min(v, road.v_max - v)});
    double rem = road.v_max - v;
    return clf.lateral_gain * road.v_max * std::sin(theta) /
           (2.0 * rem * rem * v);
}

namespace {

// Box constraints with the vehicle id attached; pair floors are checked in
// the pair loop.
void check_vehicle(int i, const FleetState& state, const FleetModel& model) {
    const RoadSpec& road = model.road;
    double m = road.half_width - std::abs(state.y[i]);
    if (!(m > 0.0)) throw DomainViolation({ConstraintKind::lateral, i, -1, m});
    m = road.heading_limit - std::abs(state.theta[i]);
    if (!(m > 0.0)) throw DomainViolation({ConstraintKind::heading, i, -1, m});
    m = std::min(state.v[i], road.v_max - state.v[i]);
    if (!(m > 0.0)) throw DomainViolation({ConstraintKind::speed, i, -1, m});
}

// Everything vehicle-local the pair loops reuse: trig and coupling images.
struct VehicleCache {
    std::vector<double> c, s;           // cos/sin heading
    std::vector<double> glong, glat;    // g1(v cos), g2(v sin)
};

VehicleCache build_cache(const FleetState& state, const FleetModel& model,
                         bool par) {
    const int n = state.size();
    VehicleCache cache;
    cache.c.resize(n);
    cache.s.resize(n);
    cache.glong.resize(n);
    cache.glat.resize(n);
    detail::guarded_for(n, par, [&](int i) {
        check_vehicle(i, state, model);
        cache.c[i] = std::cos(state.theta[i]);
        cache.s[i] = std::sin(state.theta[i]);
        cache.glong[i] =
            model.suite.couple_long->eval(state.v[i] * cache.c[i]).value;
        cache.glat[i] =
            model.suite.couple_lat->eval(state.v[i] * cache.s[i]).value;
    });
    return cache;
}

// Neighbor sums entering both laws:
//   fx, fy            pair-potential force components (y includes p_ij)
//   couple_long/lat   kernel-weighted coupling differences toward i
struct PairAccum {
    double fx = 0.0, fy = 0.0;
    double couple_long = 0.0, couple_lat = 0.0;
};

PairAccum accumulate_pairs(int i, const FleetState& state,
                           const FleetModel& model, const VehicleCache& cache,
                           const detail::NeighborIndex* index,
                           std::vector<int>& scratch) {
    PairAccum acc;
    const double lambda = model.suite.interaction_radius();
    auto consider = [&](int j) {
        double dx = state.x[i] - state.x[j];
        if (std::abs(dx) >= lambda) return;
        double dy = state.y[i] - state.y[j];
        double d = weighted_distance(dx, dy, model.pairs.weight(i, j));
        if (!(d > model.pairs.floor(i, j)))
            throw DomainViolation({ConstraintKind::separation, i, j,
                                   d - model.pairs.floor(i, j)});
        double slope =
            model.suite.pair_potential->eval(d, model.pairs.floor(i, j)).slope;
        acc.fx += slope * dx / d;
        acc.fy += model.pairs.weight(i, j) * slope * dy / d;
        double kappa = model.suite.pair_kernel->eval(d, 0.0).value;
        if (kappa != 0.0) {
            acc.couple_long += kappa * (cache.glong[j] - cache.glong[i]);
            acc.couple_lat += kappa * (cache.glat[j] - cache.glat[i]);
        }
    };
    if (index) {
        index->candidates(i, scratch);
        for (int j : scratch) consider(j);
    } else {
        for (int j = 0; j < state.size(); ++j)
            if (j != i) consider(j);
    }
    return acc;
}

std::unique_ptr<detail::NeighborIndex> maybe_index(const FleetState& state,
                                                   const FleetModel& model) {
    if (state.size() <= detail::kGridThreshold) return nullptr;
    return std::make_unique<detail::NeighborIndex>(
        state.x, model.suite.interaction_radius());
}

struct NccParts {
    double neighbor_force; // Lambda
    double speed_gain;     // k
    double lateral_load;   // Z
    double accel;          // F
    double steer_rate;     // u
};

NccParts ncc_vehicle(int i, const FleetState& state, const FleetModel& model,
                     const ControlLaw& law, const VehicleCache& cache,
                     const PairAccum& acc) {
    const RoadSpec& road = model.road;
    const ClfParams& clf = model.clf;
    double c = cache.c[i], s = cache.s[i], v = state.v[i];
    NccParts parts;
    parts.neighbor_force = acc.fx - acc.couple_long;
    parts.lateral_load =
        -law.gains.mu1 * v * s + acc.couple_lat;
    // Gain schedule: the ramp keeps k large enough that the closed-loop
    // acceleration can never push v past its limits, while k >= mu2 bounds
    // the decay rate away from zero.
    double ceiling = road.v_max * c - road.v_star; // > 0 inside the state space
    parts.speed_gain =
        law.gains.mu2 + parts.neighbor_force / road.v_star +
        road.v_max * c *
            model.suite.ramp->eval(-parts.neighbor_force).value /
            (road.v_star * ceiling);
    parts.accel = -(parts.speed_gain * (v * c - road.v_star) +
                    parts.neighbor_force) /
                  c;
    double cphi = std::cos(road.heading_limit);
    double gap = c - cphi;
    double steer_scale = (clf.lateral_gain - 1.0) * v * c + road.v_star +
                         clf.barrier_gain / (v * gap * gap);
    parts.steer_rate =
        (parts.lateral_load - model.suite.wall->eval(state.y[i]).slope -
         acc.fy - clf.lateral_gain * s * parts.accel) /
        steer_scale;
    return parts;
}

void prcc_vehicle(int i, const FleetState& state, const FleetModel& model,
                  const ControlLaw& law, const VehicleCache& cache,
                  const PairAccum& acc, double& accel, double& steer_rate) {
    const RoadSpec& road = model.road;
    const ClfParams& clf = model.clf;
    double c = cache.c[i], s = cache.s[i], v = state.v[i];
    // Linear relaxation shapes; the gains are the slopes.
    double relax_long = law.gains.mu2 * (v * c - road.v_star);
    double relax_lat = law.gains.mu1 * (v * s);
    double r_long = -relax_long + acc.couple_long;
    double r_lat = -relax_lat + acc.couple_lat;
    double q = prcc_accel_weight(v, state.theta[i], road);
    accel = (r_long - acc.fx) / q;
    double beta = prcc_steer_weight(v, state.theta[i], road, clf);
    double coupling = prcc_accel_coupling(v, state.theta[i], road, clf);
    steer_rate = (v / beta) *
                 (r_lat - model.suite.wall->eval(state.y[i]).slope - acc.fy -
                  coupling * accel);
}

} // namespace

ControlVector fleet_controls(const FleetState& state, const FleetModel& model,
                             const ControlLaw& law, ExecMode mode) {
    const int n = state.size();
    bool par = use_parallel(mode, n);
    VehicleCache cache = build_cache(state, model, par);
    auto index = maybe_index(state, model);
    ControlVector controls;
    controls.resize(n);
    detail::guarded_for(n, par, [&](int i) {
        thread_local std::vector<int> scratch;
        PairAccum acc =
            accumulate_pairs(i, state, model, cache, index.get(), scratch);
        if (law.family == ControllerFamily::newtonian) {
            NccParts parts = ncc_vehicle(i, state, model, law, cache, acc);
            controls.accel[i] = parts.accel;
            controls.steer_rate[i] = parts.steer_rate;
        } else {
            prcc_vehicle(i, state, model, law, cache, acc, controls.accel[i],
                         controls.steer_rate[i]);
        }
    });
    return controls;
}

FleetDeriv closed_loop_rhs(const FleetState& state, const FleetModel& model,
                           const ControlLaw& law, ExecMode mode) {
    ControlVector controls = fleet_controls(state, model, law, mode);
    const int n = state.size();
    FleetDeriv rhs;
    rhs.resize(n);
    for (int i = 0; i < n; ++i) {
        rhs.x[i] = state.v[i] * std::cos(state.theta[i]);
        rhs.y[i] = state.v[i] * std::sin(state.theta[i]);
        rhs.theta[i] = controls.steer_rate[i];
        rhs.v[i] = controls.accel[i];
    }
    return rhs;
}

NccVehicleTerms ncc_terms(int i, const FleetState& state,
                          const FleetModel& model, const ControlLaw& law) {
    VehicleCache cache = build_cache(state, model, false);
    auto index = maybe_index(state, model);
    std::vector<int> scratch;
    PairAccum acc =
        accumulate_pairs(i, state, model, cache, index.get(), scratch);
    NccParts parts = ncc_vehicle(i, state, model, law, cache, acc);
    return {parts.neighbor_force, parts.speed_gain, parts.lateral_load};
}

namespace {

// Family dissipation rates share the same structure: per-vehicle relaxation
// terms plus symmetrized kernel-coupling quadratic forms.
template <class VehicleTerm>
double dissipation_sum(const FleetState& state, const FleetModel& model,
                       ExecMode mode, VehicleTerm&& vehicle_term) {
    const int n = state.size();
    bool par = use_parallel(mode, n);
    VehicleCache cache = build_cache(state, model, par);
    auto index = maybe_index(state, model);
    std::vector<double> terms(n);
    detail::guarded_for(n, par, [&](int i) {
        thread_local std::vector<int> scratch;
        // Symmetrized pair part: 1/2 sum_j kappa [(a_i - a_j)(g(a)_i -
        // g(a)_j) + lateral counterpart]; each unordered pair contributes
        // its full nonnegative weight split across both vehicles.
        double pair_part = 0.0;
        const double lambda = model.suite.interaction_radius();
        auto consider = [&](int j) {
            double dx = state.x[i] - state.x[j];
            if (std::abs(dx) >= lambda) return;
            double dy = state.y[i] - state.y[j];
            double d = weighted_distance(dx, dy, model.pairs.weight(i, j));
            if (!(d > model.pairs.floor(i, j)))
                throw DomainViolation({ConstraintKind::separation, i, j,
                                       d - model.pairs.floor(i, j)});
            double kappa = model.suite.pair_kernel->eval(d, 0.0).value;
            if (kappa == 0.0) return;
            double dlong = state.v[i] * cache.c[i] - state.v[j] * cache.c[j];
            double dlat = state.v[i] * cache.s[i] - state.v[j] * cache.s[j];
            pair_part += 0.5 * kappa *
                         (dlong * (cache.glong[i] - cache.glong[j]) +
                          dlat * (cache.glat[i] - cache.glat[j]));
        };
        if (index) {
            index->candidates(i, scratch);
            for (int j : scratch) consider(j);
        } else {
            for (int j = 0; j < n; ++j)
                if (j != i) consider(j);
        }
        terms[i] = vehicle_term(i, cache) + pair_part;
    });
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += terms[i];
    return total;
}

} // namespace

double prcc_dissipation(const FleetState& state, const FleetModel& model,
                        const ControlLaw& law, ExecMode mode) {
    const double v_star = model.road.v_star;
    return dissipation_sum(
        state, model, mode, [&](int i, const VehicleCache& cache) {
            double along = state.v[i] * cache.c[i] - v_star;
            double across = state.v[i] * cache.s[i];
            return along * (law.gains.mu2 * along) +
                   across * (law.gains.mu1 * across);
        });
}

double ncc_dissipation_bound(const FleetState& state, const FleetModel& model,
                             const ControlLaw& law, ExecMode mode) {
    const double v_star = model.road.v_star;
    return dissipation_sum(
        state, model, mode, [&](int i, const VehicleCache& cache) {
            double along = state.v[i] * cache.c[i] - v_star;
            double across = state.v[i] * cache.s[i];
            return law.gains.mu2 * along * along +
                   law.gains.mu1 * across * across;
        });
}

} // namespace lanefree
