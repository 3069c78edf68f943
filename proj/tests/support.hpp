#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include <doctest.h>

#include "lanefree/controllers.hpp"
#include "lanefree/energy.hpp"
#include "lanefree/fleet.hpp"
#include "lanefree/microsim.hpp"
#include "lanefree/potentials.hpp"
#include "lanefree/rng.hpp"

namespace testsupport {

// The reference parameter set used across the test suite: ten-vehicle road
// geometry with the standard potential shapes.
inline lanefree::FleetModel reference_model(int n, double pair_strength,
                                            double viscous_strength) {
    lanefree::FleetModel model;
    model.road.half_width = 7.2;
    model.road.heading_limit = 0.25;
    model.road.v_max = 35.0;
    model.road.v_star = 30.0;
    model.pairs = lanefree::PairMatrix::uniform(n, 5.11, 5.59);
    lanefree::StandardSuiteParams suite;
    suite.pair_strength = pair_strength;
    suite.viscous_strength = viscous_strength;
    suite.interaction_radius = 25.0;
    suite.half_width = model.road.half_width;
    model.suite = lanefree::make_standard_suite(suite);
    return model;
}

inline lanefree::ControlLaw newtonian_law() {
    return {lanefree::ControllerFamily::newtonian, {0.4, 1.0 / 35.0}};
}

inline lanefree::ControlLaw relativistic_law() {
    return {lanefree::ControllerFamily::pseudo_relativistic,
            {0.4, 8.163265306122449e-4}};
}

// Random state strictly inside the admissible set, away from every barrier:
// consecutive gaps in [0.55, 1.2] interaction radii, |y| <= 0.9 half_width,
// |theta| <= 0.85 heading_limit, v in [0.1, 0.92] v_max.
inline lanefree::FleetState random_admissible(lanefree::DeterministicRng& rng,
                                              const lanefree::FleetModel& model) {
    int n = model.pairs.size();
    double lambda = model.suite.interaction_radius();
    double edge = model.suite.wall->flat_edge();
    lanefree::FleetState state;
    state.resize(n);
    double x = 0.0;
    for (int i = 0; i < n; ++i) {
        state.x[i] = x;
        x -= rng.uniform(0.55 * lambda, 1.2 * lambda);
        state.y[i] = rng.uniform(-0.9 * edge, 0.9 * edge);
        state.theta[i] = rng.uniform(-0.85 * model.road.heading_limit,
                                     0.85 * model.road.heading_limit);
        state.v[i] = rng.uniform(0.1 * model.road.v_max, 0.92 * model.road.v_max);
    }
    return state;
}

// Central-difference gradient of a scalar fleet functional; the independent
// oracle for the analytic gradients.
inline lanefree::FleetDeriv fd_gradient(
    const lanefree::FleetState& state,
    const std::function<double(const lanefree::FleetState&)>& f, double h) {
    int n = state.size();
    lanefree::FleetDeriv grad;
    grad.resize(n);
    lanefree::FleetState w = state;
    auto diff = [&](std::vector<double>& coord, int i) {
        double keep = coord[i];
        coord[i] = keep + h;
        double hi = f(w);
        coord[i] = keep - h;
        double lo = f(w);
        coord[i] = keep;
        return (hi - lo) / (2.0 * h);
    };
    for (int i = 0; i < n; ++i) {
        grad.x[i] = diff(w.x, i);
        grad.y[i] = diff(w.y, i);
        grad.theta[i] = diff(w.theta, i);
        grad.v[i] = diff(w.v, i);
    }
    return grad;
}

// Classical fixed-step RK4 for a scalar ODE; the independent oracle for the
// vector integrator on decoupled problems.
inline double scalar_rk4(const std::function<double(double, double)>& f,
                         double y0, double t0, double t1, int steps) {
    double y = y0, t = t0, h = (t1 - t0) / steps;
    for (int k = 0; k < steps; ++k) {
        double k1 = f(t, y);
        double k2 = f(t + 0.5 * h, y + 0.5 * h * k1);
        double k3 = f(t + 0.5 * h, y + 0.5 * h * k2);
        double k4 = f(t + h, y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += h;
    }
    return y;
}

// Closed-form antiderivative of the pseudo-relativistic speed weight
// q(v) = (v_max v + v_star v_max - 2 v_star v) / (2 (v_max - v)^2 v^2),
// normalized to vanish at v_star; the independent oracle for the quadrature
// transform.  Derived by partial fractions.
inline double closed_form_transform(double v, double v_max, double v_star) {
    auto piece = [&](double s) {
        return std::log(s / (v_max - s)) + (v_max - v_star) / (v_max - s) -
               v_star / s;
    };
    return (piece(v) - piece(v_star)) / (2.0 * v_max);
}

inline double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(1.0, std::abs(want));
}

} // namespace testsupport
