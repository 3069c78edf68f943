#include "lanefree/macro.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

namespace lanefree {

namespace {

// GSL must not abort the process; statuses are checked at call sites.
[[maybe_unused]] const int kGslHandlerOff = [] {
    gsl_set_error_handler_off();
    return 0;
}();

double q_weight(double v, const RoadSpec& road) {
    double rem = road.v_max - v;
    return (road.v_max * v + road.v_star * road.v_max -
            2.0 * road.v_star * v) /
           (2.0 * rem * rem * v * v);
}

struct QuadContext {
    RoadSpec road;
};

double q_integrand(double s, void* ctx) {
    return q_weight(s, static_cast<QuadContext*>(ctx)->road);
}

gsl_integration_workspace* local_workspace() {
    thread_local struct Holder {
        gsl_integration_workspace* ws = gsl_integration_workspace_alloc(256);
        ~Holder() { gsl_integration_workspace_free(ws); }
    } holder;
    return holder.ws;
}

} // namespace

SpeedTransform::SpeedTransform(const RoadSpec& road, double rel_tol)
    : road_(road), rel_tol_(rel_tol) {
    // only the speed policy matters here; lateral geometry may be unset
    if (!(road.v_max > 0.0) || !(road.v_star > 0.0) ||
        !(road.v_star < road.v_max))
        throw std::invalid_argument(
            "speed transform needs 0 < v_star < v_max");
    if (!(rel_tol > 0.0))
        throw std::invalid_argument("transform tolerance must be positive");
}

double SpeedTransform::weight(double v) const {
    if (!(v > 0.0) || !(v < road_.v_max))
        throw DomainViolation({ConstraintKind::speed, -1, -1,
                               std::min(v, road_.v_max - v)});
    return q_weight(v, road_);
}

double SpeedTransform::forward(double v) const {
    if (!(v > 0.0) || !(v < road_.v_max))
        throw DomainViolation({ConstraintKind::speed, -1, -1,
                               std::min(v, road_.v_max - v)});
    if (v == road_.v_star) return 0.0;
    QuadContext ctx{road_};
    gsl_function f{&q_integrand, &ctx};
    double result = 0.0, abserr = 0.0;
    int status = gsl_integration_qag(&f, road_.v_star, v, 1e-14, rel_tol_, 256,
                                     GSL_INTEG_GAUSS31, local_workspace(),
                                     &result, &abserr);
    if (status != 0 && status != GSL_EROUND)
        throw std::runtime_error("speed transform quadrature failed");
    return result;
}

double SpeedTransform::inverse(double w) const {
    // g is strictly increasing with g' = q > 0 and diverges at both speed
    // limits, so a bracketed Newton iteration cannot escape (0, v_max).
    double lo = 0.0, hi = road_.v_max;
    double v = road_.v_star;
    for (int iter = 0; iter < 200; ++iter) {
        double g = forward(v) - w;
        if (std::abs(g) <= 1e-12 * std::max(1.0, std::abs(w))) return v;
        (g > 0.0 ? hi : lo) = v;
        double next = v - g / q_weight(v, road_);
        if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
        if (next == v) return v;
        v = next;
    }
    return v;
}

ValueSlope SpeedTransform::eval(double v) const {
    return {forward(v), weight(v)};
}

double MacroParams::pressure(double rho) const {
    if (!(rho > 0.0))
        throw MacroStepError("density must be positive", -1);
    double s = mass / rho;
    if (!(s > floor_gap))
        throw MacroStepError("density reached the jam limit", -1);
    return pressure_offset - mass * headway_potential->eval(s, floor_gap).slope;
}

double MacroParams::pressure_slope(double rho) const {
    if (!(rho > 0.0))
        throw MacroStepError("density must be positive", -1);
    double s = mass / rho;
    if (!(s > floor_gap))
        throw MacroStepError("density reached the jam limit", -1);
    return (mass * mass / (rho * rho)) *
           headway_potential->curvature(s, floor_gap);
}

double MacroParams::viscosity(double rho) const {
    if (!(rho > 0.0))
        throw MacroStepError("density must be positive", -1);
    double s = mass / rho;
    return (mass * mass / rho) * headway_kernel->eval(s, 0.0).value;
}

double MacroParams::gain_boost(double s) const {
    return road.v_max * ramp->eval(s).value /
               (road.v_star * (road.v_max - road.v_star)) -
           s / road.v_star;
}

MacroParams make_macro_params(double mass, double floor_gap,
                              double interaction_radius, double pair_strength,
                              double viscous_strength, double relax_slope,
                              double gamma, double ramp_width,
                              double pressure_offset, const RoadSpec& road,
                              bool transform_coupling) {
    if (!(road.v_max > 0.0) || !(road.v_star > 0.0) ||
        !(road.v_star < road.v_max))
        throw std::invalid_argument("macro closures need 0 < v_star < v_max");
    if (!(mass > 0.0)) throw std::invalid_argument("mass must be positive");
    if (!(floor_gap > 0.0))
        throw std::invalid_argument("headway floor must be positive");
    if (!(interaction_radius > floor_gap))
        throw std::invalid_argument(
            "interaction radius must exceed the headway floor");
    MacroParams p;
    p.mass = mass;
    p.floor_gap = floor_gap;
    p.interaction_radius = interaction_radius;
    p.rho_max = mass / floor_gap;
    p.rho_bar = mass / interaction_radius;
    p.pressure_offset = pressure_offset;
    p.gamma = gamma;
    p.road = road;
    p.headway_potential =
        std::make_shared<CubicBarrier>(pair_strength, interaction_radius);
    p.headway_kernel =
        std::make_shared<QuadraticKernel>(viscous_strength, interaction_radius);
    p.transform = std::make_shared<SpeedTransform>(road);
    p.coupling = transform_coupling
                     ? std::static_pointer_cast<const ScalarFunction>(p.transform)
                     : std::make_shared<LinearShape>(1.0);
    p.relax = std::make_shared<LinearShape>(relax_slope);
    p.ramp = std::make_shared<SmoothRamp>(ramp_width);
    return p;
}

MacroParams map_micro_to_macro(const FleetModel& model, const ControlLaw& law,
                               double mass, double pressure_offset) {
    if (model.pairs.size() < 2)
        throw std::invalid_argument(
            "macroscopic closures need at least one vehicle pair");
    double floor = model.pairs.floor(0, 1);
    for (int i = 0; i < model.pairs.size(); ++i)
        for (int j = i + 1; j < model.pairs.size(); ++j)
            if (model.pairs.floor(i, j) != floor)
                throw std::invalid_argument(
                    "macroscopic closures need a uniform separation floor");
    if (!(mass > 0.0)) throw std::invalid_argument("mass must be positive");

    MacroParams p;
    p.mass = mass;
    p.floor_gap = floor;
    p.interaction_radius = model.suite.interaction_radius();
    p.rho_max = mass / floor;
    p.rho_bar = mass / p.interaction_radius;
    p.pressure_offset = pressure_offset;
    p.gamma = law.gains.mu2;
    p.road = model.road;
    p.headway_potential = model.suite.pair_potential;
    p.headway_kernel = model.suite.pair_kernel;
    p.coupling = model.suite.couple_long;
    p.relax = std::make_shared<LinearShape>(law.gains.mu2);
    p.ramp = model.suite.ramp;
    p.transform = std::make_shared<SpeedTransform>(model.road);
    return p;
}

TransformedField to_transformed(const MacroField& field,
                                const SpeedTransform& transform) {
    TransformedField out;
    out.x_min = field.x_min;
    out.x_max = field.x_max;
    out.cells = field.cells;
    out.boundary = field.boundary;
    out.rho = field.rho;
    out.w.resize(field.v.size());
    for (std::size_t k = 0; k < field.v.size(); ++k)
        out.w[k] = transform.forward(field.v[k]);
    out.inflow_rho = field.inflow_rho;
    out.inflow_w = field.boundary == MacroBoundary::inflow
                       ? transform.forward(field.inflow_v)
                       : 0.0;
    return out;
}

MacroField to_primitive(const TransformedField& field,
                        const SpeedTransform& transform) {
    MacroField out;
    out.x_min = field.x_min;
    out.x_max = field.x_max;
    out.cells = field.cells;
    out.boundary = field.boundary;
    out.rho = field.rho;
    out.v.resize(field.w.size());
    for (std::size_t k = 0; k < field.w.size(); ++k)
        out.v[k] = transform.inverse(field.w[k]);
    out.inflow_rho = field.inflow_rho;
    out.inflow_v = field.boundary == MacroBoundary::inflow
                       ? transform.inverse(field.inflow_w)
                       : 0.0;
    return out;
}

double total_mass(const MacroField& field) {
    double sum = 0.0;
    for (double r : field.rho) sum += r;
    return sum * field.dx();
}

namespace {

void check_field(const MacroField& field) {
    if (field.cells < 3)
        throw std::invalid_argument("macro grid needs at least 3 cells");
    if (!(field.x_max > field.x_min))
        throw std::invalid_argument("macro grid needs x_max > x_min");
    if (static_cast<int>(field.rho.size()) != field.cells ||
        static_cast<int>(field.v.size()) != field.cells)
        throw std::invalid_argument("macro field arrays must match the grid");
}

// Coupling derivative without the (possibly quadrature-backed) value.
double coupling_slope(const ScalarFunction& g, double v) {
    if (auto* transform = dynamic_cast<const SpeedTransform*>(&g))
        return transform->weight(v);
    return g.eval(v).slope;
}

double stable_dt(const std::vector<double>& rho, const std::vector<double>& v,
                 double dx, const MacroParams& params, MacroFamily family) {
    double advective = dx / params.road.v_max;
    double q_min = 1.0;
    if (family == MacroFamily::pseudo_relativistic) {
        q_min = 1e300;
        for (double vk : v) q_min = std::min(q_min, q_weight(vk, params.road));
    }
    double worst = 0.0;
    for (std::size_t k = 0; k < rho.size(); ++k)
        worst = std::max(worst, params.viscosity(rho[k]) *
                                    coupling_slope(*params.coupling, v[k]) /
                                    rho[k]);
    double diffusive =
        worst > 0.0 ? dx * dx * q_min / (2.0 * worst) : 1e300;
    return 0.4 * std::min(advective, diffusive);
}

// Periodic or inflow/outflow ghost lookup for an arbitrary cell array.
struct GhostView {
    const std::vector<double>& cells;
    MacroBoundary boundary;
    double inflow; // upstream ghost value when boundary == inflow

    double operator()(int k) const {
        int n = static_cast<int>(cells.size());
        if (k >= 0 && k < n) return cells[k];
        if (boundary == MacroBoundary::periodic)
            return cells[(k % n + n) % n];
        return k < 0 ? inflow : cells[n - 1];
    }
};

void check_speed_range(const std::vector<double>& v, const RoadSpec& road) {
    for (std::size_t k = 0; k < v.size(); ++k)
        if (!(v[k] > 0.0) || !(v[k] < road.v_max))
            throw MacroStepError("cell speed outside (0, v_max)",
                                 static_cast<int>(k));
}

void check_density_range(const std::vector<double>& rho, double rho_max) {
    for (std::size_t k = 0; k < rho.size(); ++k)
        if (!(rho[k] > 0.0) || !(rho[k] < rho_max))
            throw MacroStepError("cell density outside (0, rho_max)",
                                 static_cast<int>(k));
}

// Shared spatial machinery of both primitive steppers.  `speed_update(k,
// advection, force)` returns the dv of cell k given the upwind advection
// term and the net force (viscous + pressure) per unit mass.
template <class SpeedUpdate>
void primitive_step(MacroField& field, const MacroParams& params,
                    MacroFamily family, double dt, ExecMode mode,
                    SpeedUpdate&& speed_update) {
    check_field(field);
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    check_density_range(field.rho, params.rho_max);
    check_speed_range(field.v, params.road);
    const double dx = field.dx();
    double ceiling = stable_dt(field.rho, field.v, dx, params, family);
    if (dt > ceiling) {
        char buf[128];
        std::snprintf(buf, sizeof buf,
                      "time step %.3e exceeds the stability ceiling %.3e", dt,
                      ceiling);
        throw MacroStepError(buf, -1);
    }

    const int n = field.cells;
    const bool prcc = family == MacroFamily::pseudo_relativistic;
    const bool coupling_is_transform =
        params.coupling.get() == params.transform.get();
    // Cell images computed once: coupling image (viscous flux), transform
    // image (advection in conservative form), pressure, viscosity.
    std::vector<double> couple(n), advect(n), pressure(n), mu(n);
    detail::guarded_for(n, use_parallel(mode, n), [&](int k) {
        couple[k] = params.coupling->eval(field.v[k]).value;
        advect[k] = !prcc ? field.v[k]
                  : coupling_is_transform
                        ? couple[k]
                        : params.transform->forward(field.v[k]);
        pressure[k] = params.pressure(field.rho[k]);
        mu[k] = params.viscosity(field.rho[k]);
    });

    double in_cpl = 0.0, in_adv = 0.0, in_prs = 0.0, in_visc = 0.0;
    if (field.boundary == MacroBoundary::inflow) {
        in_cpl = params.coupling->eval(field.inflow_v).value;
        in_adv = !prcc ? field.inflow_v
                       : coupling_is_transform
                             ? in_cpl
                             : params.transform->forward(field.inflow_v);
        in_prs = params.pressure(field.inflow_rho);
        in_visc = params.viscosity(field.inflow_rho);
    }
    GhostView rho{field.rho, field.boundary, field.inflow_rho};
    GhostView vel{field.v, field.boundary, field.inflow_v};
    GhostView cpl{couple, field.boundary, in_cpl};
    GhostView adv{advect, field.boundary, in_adv};
    GhostView prs{pressure, field.boundary, in_prs};
    GhostView visc{mu, field.boundary, in_visc};

    std::vector<double> new_rho(n), new_v(n);
    detail::guarded_for(n, use_parallel(mode, n), [&](int k) {
        // donor-cell mass flux (speeds are positive)
        double flux_out = rho(k) * vel(k);
        double flux_in = rho(k - 1) * vel(k - 1);
        new_rho[k] = field.rho[k] - (dt / dx) * (flux_out - flux_in);

        double advection = vel(k) * (adv(k) - adv(k - 1)) / dx;
        double visc_hi = 0.5 * (visc(k) + visc(k + 1)) * (cpl(k + 1) - cpl(k));
        double visc_lo = 0.5 * (visc(k - 1) + visc(k)) * (cpl(k) - cpl(k - 1));
        double force = (visc_hi - visc_lo) / (dx * dx * field.rho[k]) -
                       (prs(k + 1) - prs(k - 1)) / (2.0 * dx * field.rho[k]);
        new_v[k] = field.v[k] + dt * speed_update(k, advection, force);
    });

    check_density_range(new_rho, params.rho_max);
    check_speed_range(new_v, params.road);
    field.rho = std::move(new_rho);
    field.v = std::move(new_v);
}

} // namespace

double max_stable_dt(const MacroField& field, const MacroParams& params,
                     MacroFamily family) {
    check_field(field);
    return stable_dt(field.rho, field.v, field.dx(), params, family);
}

void prcc_pde_step(MacroField& field, const MacroParams& params, double dt,
                   ExecMode mode) {
    primitive_step(
        field, params, MacroFamily::pseudo_relativistic, dt, mode,
        [&](int k, double advection, double force) {
            double relax = params.relax->eval(field.v[k] - params.road.v_star).value;
            return (-advection + force - relax) /
                   q_weight(field.v[k], params.road);
        });
}

void ncc_pde_step(MacroField& field, const MacroParams& params, double dt,
                  ExecMode mode) {
    primitive_step(
        field, params, MacroFamily::newtonian, dt, mode,
        [&](int k, double advection, double force) {
            double gain = params.gamma + params.gain_boost(force);
            return -advection + force -
                   gain * (field.v[k] - params.road.v_star);
        });
}

void transformed_pde_step(TransformedField& field, const MacroParams& params,
                          double dt, ExecMode mode) {
    if (!std::dynamic_pointer_cast<const SpeedTransform>(params.coupling))
        throw std::invalid_argument(
            "the transformed balance requires the coupling shape to be the "
            "speed transform itself");
    if (field.cells < 3 ||
        static_cast<int>(field.rho.size()) != field.cells ||
        static_cast<int>(field.w.size()) != field.cells)
        throw std::invalid_argument("transformed field arrays must match the grid");
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    check_density_range(field.rho, params.rho_max);

    const int n = field.cells;
    const double dx = field.dx();
    const SpeedTransform& transform = *params.transform;
    std::vector<double> v(n), pressure(n), mu(n);
    detail::guarded_for(n, use_parallel(mode, n), [&](int k) {
        v[k] = transform.inverse(field.w[k]);
        pressure[k] = params.pressure(field.rho[k]);
        mu[k] = params.viscosity(field.rho[k]);
    });
    double ceiling =
        stable_dt(field.rho, v, dx, params, MacroFamily::pseudo_relativistic);
    if (dt > ceiling) {
        char buf[128];
        std::snprintf(buf, sizeof buf,
                      "time step %.3e exceeds the stability ceiling %.3e", dt,
                      ceiling);
        throw MacroStepError(buf, -1);
    }

    double inflow_w = field.boundary == MacroBoundary::inflow ? field.inflow_w : 0.0;
    double inflow_v = field.boundary == MacroBoundary::inflow
                          ? transform.inverse(field.inflow_w)
                          : 0.0;
    GhostView rho{field.rho, field.boundary, field.inflow_rho};
    GhostView vel{v, field.boundary, inflow_v};
    GhostView wview{field.w, field.boundary, inflow_w};
    GhostView prs{pressure, field.boundary,
                  field.boundary == MacroBoundary::inflow
                      ? params.pressure(field.inflow_rho)
                      : 0.0};
    GhostView visc{mu, field.boundary,
                   field.boundary == MacroBoundary::inflow
                       ? params.viscosity(field.inflow_rho)
                       : 0.0};

    std::vector<double> new_rho(n), new_w(n);
    detail::guarded_for(n, use_parallel(mode, n), [&](int k) {
        double flux_out = rho(k) * vel(k);
        double flux_in = rho(k - 1) * vel(k - 1);
        new_rho[k] = field.rho[k] - (dt / dx) * (flux_out - flux_in);

        double advection = vel(k) * (wview(k) - wview(k - 1)) / dx;
        double visc_hi = 0.5 * (visc(k) + visc(k + 1)) * (wview(k + 1) - wview(k));
        double visc_lo = 0.5 * (visc(k - 1) + visc(k)) * (wview(k) - wview(k - 1));
        double force = (visc_hi - visc_lo) / (dx * dx * field.rho[k]) -
                       (prs(k + 1) - prs(k - 1)) / (2.0 * dx * field.rho[k]);
        double relax = params.relax->eval(v[k] - params.road.v_star).value;
        new_w[k] = field.w[k] + dt * (-advection + force - relax);
    });

    check_density_range(new_rho, params.rho_max);
    for (int k = 0; k < n; ++k)
        if (!std::isfinite(new_w[k]))
            throw MacroStepError("cell speed variable diverged", k);
    field.rho = std::move(new_rho);
    field.w = std::move(new_w);
}

// ---- longitudinal platoon ----

namespace {

void check_platoon(const LongState& state, const MacroParams& params) {
    const int n = state.size();
    if (n < 2) throw std::invalid_argument("platoon needs at least 2 vehicles");
    if (static_cast<int>(state.v.size()) != n)
        throw std::invalid_argument("platoon arrays must match");
    for (int i = 0; i < n; ++i)
        if (!(state.v[i] > 0.0) || !(state.v[i] < params.road.v_max))
            throw DomainViolation({ConstraintKind::speed, i, -1,
                                   std::min(state.v[i],
                                            params.road.v_max - state.v[i])});
    for (int i = 1; i < n; ++i) {
        double scaled = n * (state.x[i - 1] - state.x[i]);
        if (!(scaled > params.floor_gap))
            throw DomainViolation({ConstraintKind::separation, i, i - 1,
                                   scaled - params.floor_gap});
    }
}

} // namespace

void longitudinal_rhs(const LongState& state, const MacroParams& params,
                      MacroFamily family, std::vector<double>& dv) {
    if (!(params.interaction_radius < 2.0 * params.floor_gap))
        throw std::invalid_argument(
            "longitudinal model needs interaction_radius < 2 * floor_gap so "
            "only adjacent vehicles interact");
    check_platoon(state, params);
    const int n = state.size();
    const double nn = static_cast<double>(n);
    dv.assign(n, 0.0);

    // Precompute per-gap potential slope and kernel weight in the scaled
    // headway n * (x_{i-1} - x_i).
    std::vector<double> slope(n, 0.0), kernel(n, 0.0);
    for (int i = 1; i < n; ++i) {
        double scaled = nn * (state.x[i - 1] - state.x[i]);
        slope[i] = params.headway_potential->eval(scaled, params.floor_gap).slope;
        kernel[i] = params.headway_kernel->eval(scaled, 0.0).value;
    }
    std::vector<double> image(n);
    for (int i = 0; i < n; ++i)
        image[i] = params.coupling->eval(state.v[i]).value;

    for (int i = 0; i < n; ++i) {
        double bracket = 0.0;
        if (i > 0) // pushed by the leader-side gap
            bracket += nn * slope[i] +
                       nn * nn * kernel[i] * (image[i - 1] - image[i]);
        if (i + 1 < n) // pushed back by the follower-side gap
            bracket += -nn * slope[i + 1] +
                       nn * nn * kernel[i + 1] * (image[i + 1] - image[i]);
        if (family == MacroFamily::pseudo_relativistic) {
            double relax =
                params.relax->eval(state.v[i] - params.road.v_star).value;
            dv[i] = (-relax + bracket) / q_weight(state.v[i], params.road);
        } else {
            double gain = params.gamma + params.gain_boost(bracket);
            dv[i] = -gain * (state.v[i] - params.road.v_star) + bracket;
        }
    }
}

std::vector<LongSample> longitudinal_simulate(
    const LongState& initial, const MacroParams& params, MacroFamily family,
    double dt, const std::vector<double>& record_times) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (record_times.empty())
        throw std::invalid_argument("need at least one record time");
    long long last_step = 0;
    std::vector<long long> record_steps;
    for (double t : record_times) {
        if (!(t >= 0.0)) throw std::invalid_argument("record times must be >= 0");
        record_steps.push_back(std::llround(t / dt));
        last_step = std::max(last_step, record_steps.back());
    }

    LongState w = initial;
    check_platoon(w, params);
    std::vector<LongSample> out;
    auto maybe_record = [&](long long step) {
        for (std::size_t k = 0; k < record_steps.size(); ++k)
            if (record_steps[k] == step)
                out.push_back({record_times[k], w});
    };
    maybe_record(0);

    const int n = w.size();
    std::vector<double> a1(n), a2(n), a3(n), a4(n);
    LongState s2, s3, s4;
    for (LongState* s : {&s2, &s3, &s4}) {
        s->x.resize(n);
        s->v.resize(n);
    }
    for (long long step = 1; step <= last_step; ++step) {
        // RK4 on (x' = v, v' = rhs): the position slope of each stage is the
        // previous stage's speed.
        longitudinal_rhs(w, params, family, a1);
        for (int i = 0; i < n; ++i) {
            s2.x[i] = w.x[i] + 0.5 * dt * w.v[i];
            s2.v[i] = w.v[i] + 0.5 * dt * a1[i];
        }
        longitudinal_rhs(s2, params, family, a2);
        for (int i = 0; i < n; ++i) {
            s3.x[i] = w.x[i] + 0.5 * dt * s2.v[i];
            s3.v[i] = w.v[i] + 0.5 * dt * a2[i];
        }
        longitudinal_rhs(s3, params, family, a3);
        for (int i = 0; i < n; ++i) {
            s4.x[i] = w.x[i] + dt * s3.v[i];
            s4.v[i] = w.v[i] + dt * a3[i];
        }
        longitudinal_rhs(s4, params, family, a4);
        for (int i = 0; i < n; ++i) {
            w.x[i] += dt / 6.0 * (w.v[i] + 2.0 * s2.v[i] + 2.0 * s3.v[i] + s4.v[i]);
            w.v[i] += dt / 6.0 * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i]);
        }
        check_platoon(w, params);
        maybe_record(step);
    }
    return out;
}

DensitySamples empirical_density(const LongState& state, double mass) {
    const int n = state.size();
    DensitySamples out;
    for (int i = 1; i < n; ++i) {
        double gap = state.x[i - 1] - state.x[i];
        out.x.push_back(state.x[i]);
        out.rho.push_back(mass / (n * gap));
    }
    return out;
}

// ---- comparison harness ----

double ProfileSpec::density(double x) const {
    double z = (x - bump_center) / bump_width;
    return base_density + bump_density * std::exp(-z * z);
}

double ProfileSpec::speed(double x) const {
    double z = (x - bump_center) / bump_width;
    return base_speed + bump_speed * std::exp(-z * z);
}

MacroField make_field(const GridSpec& grid, const ProfileSpec& profile) {
    MacroField field;
    field.x_min = grid.x_min;
    field.x_max = grid.x_max;
    field.cells = grid.cells;
    field.boundary = grid.boundary;
    field.rho.resize(grid.cells);
    field.v.resize(grid.cells);
    for (int k = 0; k < grid.cells; ++k) {
        field.rho[k] = profile.density(field.center(k));
        field.v[k] = profile.speed(field.center(k));
    }
    if (grid.boundary == MacroBoundary::inflow) {
        field.inflow_rho = profile.density(grid.x_min);
        field.inflow_v = profile.speed(grid.x_min);
    }
    return field;
}

LongState seed_platoon(const MacroParams& params, int count, double right_edge,
                       const ProfileSpec& profile) {
    if (count < 2) throw std::invalid_argument("platoon needs >= 2 vehicles");
    LongState state;
    state.x.resize(count);
    state.v.resize(count);
    state.x[0] = right_edge;
    state.v[0] = profile.speed(right_edge);
    for (int i = 1; i < count; ++i) {
        double lead = state.x[i - 1];
        double gap = params.mass / (count * profile.density(lead));
        gap = params.mass / (count * profile.density(lead - 0.5 * gap));
        state.x[i] = lead - gap;
        state.v[i] = profile.speed(state.x[i]);
    }
    return state;
}

namespace {

// Linear interpolation of a cell-centered field at x (clamped at the ends;
// the harness keeps its features away from the window boundary).
double interp_cells(const MacroField& field, const std::vector<double>& cells,
                    double x) {
    double dx = field.dx();
    double pos = (x - field.x_min) / dx - 0.5;
    if (pos <= 0.0) return cells.front();
    if (pos >= field.cells - 1.0) return cells.back();
    int k = static_cast<int>(pos);
    double frac = pos - k;
    return cells[k] * (1.0 - frac) + cells[k + 1] * frac;
}

void pde_step_family(MacroField& field, const MacroParams& params,
                     MacroFamily family, double dt) {
    if (family == MacroFamily::pseudo_relativistic)
        prcc_pde_step(field, params, dt);
    else
        ncc_pde_step(field, params, dt);
}

std::vector<MacroField> run_pde(const MacroParams& params,
                                const GridSpec& grid,
                                const ProfileSpec& profile,
                                const CompareConfig& config) {
    MacroField field = make_field(grid, profile);
    std::vector<MacroField> snapshots;
    double t = 0.0;
    for (double t_target : config.sample_times) {
        while (t < t_target) {
            double h = config.dt_macro > 0.0
                           ? config.dt_macro
                           : 0.5 * max_stable_dt(field, params, config.family);
            h = std::min(h, t_target - t);
            pde_step_family(field, params, config.family, h);
            t += h;
        }
        snapshots.push_back(field);
    }
    return snapshots;
}

} // namespace

std::vector<CompareRow> micro_macro_compare(const MacroParams& params,
                                            const GridSpec& grid,
                                            const ProfileSpec& profile,
                                            const CompareConfig& config) {
    if (config.counts.empty() || config.sample_times.empty())
        throw std::invalid_argument("comparison needs counts and sample times");
    std::vector<double> times = config.sample_times;
    std::sort(times.begin(), times.end());

    CompareConfig sorted = config;
    sorted.sample_times = times;
    std::vector<MacroField> snapshots = run_pde(params, grid, profile, sorted);

    std::vector<CompareRow> rows;
    for (int count : config.counts) {
        LongState initial =
            seed_platoon(params, count, config.right_edge, profile);
        std::vector<LongSample> samples = longitudinal_simulate(
            initial, params, sorted.family, config.dt_micro, times);
        for (std::size_t s = 0; s < times.size(); ++s) {
            const LongState& micro = samples[s].state;
            const MacroField& macro_field = snapshots[s];
            DensitySamples density = empirical_density(micro, params.mass);
            CompareRow row;
            row.count = count;
            row.t = times[s];
            double sum_rho = 0.0, sum_v = 0.0;
            for (std::size_t i = 0; i < density.x.size(); ++i) {
                double rho_pde =
                    interp_cells(macro_field, macro_field.rho, density.x[i]);
                double err = density.rho[i] - rho_pde;
                sum_rho += err * err;
                row.linf_density = std::max(row.linf_density, std::abs(err));
                // vehicle i+1 sits at density.x[i]
                double v_pde =
                    interp_cells(macro_field, macro_field.v, density.x[i]);
                double verr = micro.v[i + 1] - v_pde;
                sum_v += verr * verr;
                row.linf_speed = std::max(row.linf_speed, std::abs(verr));
            }
            row.l2_density = std::sqrt(sum_rho / density.x.size());
            row.l2_speed = std::sqrt(sum_v / density.x.size());
            rows.push_back(row);
        }
    }
    return rows;
}

} // namespace lanefree
