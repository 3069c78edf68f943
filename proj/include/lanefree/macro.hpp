#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lanefree/controllers.hpp"
#include "lanefree/energy.hpp"
#include "lanefree/parallel.hpp"
#include "lanefree/potentials.hpp"

namespace lanefree {

enum class MacroFamily { newtonian, pseudo_relativistic };
enum class MacroBoundary { periodic, inflow };

// Monotone map between speed v and the speed-like variable w = g(v) that
// turns the pseudo-relativistic momentum balance into an unweighted one.
// forward integrates the weight q(v) from v_star by adaptive quadrature;
// inverse is a safeguarded Newton solve.  Round trip is accurate to better
// than 1e-9 across [0.01 v_max, 0.99 v_max].
class SpeedTransform : public ScalarFunction {
public:
    explicit SpeedTransform(const RoadSpec& road, double rel_tol = 1e-12);
    double forward(double v) const;
    double inverse(double w) const;
    double weight(double v) const; // q(v) = d forward / dv
    // ScalarFunction view so the transform can serve as the coupling shape g.
    ValueSlope eval(double v) const override;
    const RoadSpec& road() const { return road_; }

private:
    RoadSpec road_;
    double rel_tol_;
};

// Closures of the continuum (artificial traffic fluid) model induced by a
// platoon of total mass `mass` with scaled-headway potential Phi and
// speed-coupling kernel K:
//   pressure   P(rho)  = offset - mass * Phi'(mass / rho)
//   viscosity  mu(rho) = (mass^2 / rho) * K(mass / rho)
// Both vanish identically for rho <= rho_bar = mass / interaction_radius and
// diverge (P) as rho -> rho_max = mass / floor_gap.
struct MacroParams {
    double mass = 1.0;
    double floor_gap = 0.0;          // L, scaled-headway hard floor
    double interaction_radius = 0.0; // support end of both closures
    double rho_max = 0.0;            // mass / floor_gap
    double rho_bar = 0.0;            // mass / interaction_radius
    double pressure_offset = 0.0;    // additive constant in P
    double gamma = 0.0;              // Newtonian relaxation floor
    RoadSpec road;                   // v_max, v_star
    std::shared_ptr<const PairFamily> headway_potential; // Phi
    std::shared_ptr<const PairFamily> headway_kernel;    // K
    std::shared_ptr<const ScalarFunction> coupling;      // g (viscous shape)
    std::shared_ptr<const ScalarFunction> relax;         // f (speed relaxation)
    std::shared_ptr<const ScalarFunction> ramp;          // r (gain schedule)
    std::shared_ptr<const SpeedTransform> transform;     // g_q with g_q' = q

    double pressure(double rho) const;
    double pressure_slope(double rho) const; // dP/drho
    double viscosity(double rho) const;
    // Newtonian gain schedule h(s) = v_max r(s) / (v_star (v_max - v_star))
    // - s / v_star; h(s) >= 0 and gamma + h(s) keeps the speed in range.
    double gain_boost(double s) const;
};

// Derives MacroParams from a planar fleet model: Phi and K are the model's
// pair potential and kernel read in the scaled headway, the floor and radius
// are the (uniform) pair floor and the interaction radius, g and r come from
// the suite, f is linear with slope mu2, gamma = mu2.
MacroParams map_micro_to_macro(const FleetModel& model, const ControlLaw& law,
                               double mass, double pressure_offset = 0.0);

// Builds the closures directly from scalar inputs: cubic-barrier headway
// potential, quadratic kernel, linear relaxation.  `transform_coupling`
// selects g = speed transform (required by the transformed form) instead of
// the identity.
MacroParams make_macro_params(double mass, double floor_gap,
                              double interaction_radius, double pair_strength,
                              double viscous_strength, double relax_slope,
                              double gamma, double ramp_width,
                              double pressure_offset, const RoadSpec& road,
                              bool transform_coupling);

// Uniform 1-D grid of cell averages.  rho and v live at cell centers.
struct MacroField {
    double x_min = 0.0, x_max = 0.0;
    int cells = 0;
    MacroBoundary boundary = MacroBoundary::periodic;
    std::vector<double> rho, v;
    // Upstream ghost state for the inflow boundary (ignored when periodic);
    // the downstream ghost copies the last cell.
    double inflow_rho = 0.0, inflow_v = 0.0;

    double dx() const { return (x_max - x_min) / cells; }
    double center(int k) const { return x_min + (k + 0.5) * dx(); }
};

// Same grid carrying (rho, w) with w = transform->forward(v).
struct TransformedField {
    double x_min = 0.0, x_max = 0.0;
    int cells = 0;
    MacroBoundary boundary = MacroBoundary::periodic;
    std::vector<double> rho, w;
    double inflow_rho = 0.0, inflow_w = 0.0;

    double dx() const { return (x_max - x_min) / cells; }
};

TransformedField to_transformed(const MacroField& field,
                                const SpeedTransform& transform);
MacroField to_primitive(const TransformedField& field,
                        const SpeedTransform& transform);

// Sum of rho * dx; conserved exactly (up to round-off) by periodic steps.
double total_mass(const MacroField& field);

// Stability ceiling 0.4 * min(dx / v_max, dx^2 q_min / (2 max_k mu g' / rho))
// where q_min = min_k q(v_k) for the pseudo-relativistic family and 1 for
// the Newtonian one.  Steps with dt above this throw MacroStepError.
double max_stable_dt(const MacroField& field, const MacroParams& params,
                     MacroFamily family);

class MacroStepError : public std::runtime_error {
public:
    MacroStepError(const std::string& what, int cell)
        : std::runtime_error(what), cell(cell) {}
    int cell; // offending cell, -1 for grid-wide (CFL) failures
};

// One explicit step of the pseudo-relativistic fluid: donor-cell upwind mass
// flux, upwind momentum advection written through the transform image
// (q v v_x = v d/dx g_q(v) exactly), central pressure gradient, conservative
// central viscous flux of the coupling image, pointwise relaxation; the
// speed update is divided by q(v).  Throws MacroStepError on a CFL violation
// (before touching the field) or when the stepped state leaves
// (0, rho_max) x (0, v_max) (naming the first offending cell).
void prcc_pde_step(MacroField& field, const MacroParams& params, double dt,
                   ExecMode mode = ExecMode::automatic);

// Newtonian counterpart: same spatial operators, speed relaxed by the
// scheduled gain (gamma + gain_boost(G)) toward v_star plus the force G.
void ncc_pde_step(MacroField& field, const MacroParams& params, double dt,
                  ExecMode mode = ExecMode::automatic);

// Steps the (rho, w) form of the pseudo-relativistic fluid.  Requires
// params.coupling to be the speed transform itself (the transformed balance
// only exists for that choice); transforming, stepping and transforming back
// agrees with prcc_pde_step to second order in dt on smooth fields.
void transformed_pde_step(TransformedField& field, const MacroParams& params,
                          double dt, ExecMode mode = ExecMode::automatic);

// ---- 1-D platoon (longitudinal micro model) ----

// Positions strictly decreasing: x[0] is the leader.  Gap i (between
// vehicles i-1 and i) carries density mass / (count * (x[i-1] - x[i])).
struct LongState {
    std::vector<double> x, v;
    int size() const { return static_cast<int>(x.size()); }
};

struct LongSample {
    double t = 0.0;
    LongState state;
};

// Closed-loop accelerations of the scaled 1-D platoon.  Nearest-neighbor
// exact when interaction_radius < 2 * floor_gap (enforced).
void longitudinal_rhs(const LongState& state, const MacroParams& params,
                      MacroFamily family, std::vector<double>& dv);

// Fixed-step RK4 from `initial`, recording at the requested times (each
// snapped to the nearest step boundary).  Guards scaled headways and speeds
// every step; a violation throws DomainViolation.
std::vector<LongSample> longitudinal_simulate(const LongState& initial,
                                              const MacroParams& params,
                                              MacroFamily family, double dt,
                                              const std::vector<double>& record_times);

// Per-gap empirical densities: density[i] = mass / (count * gap_i) located
// at x[i], for i = 1 .. count-1.
struct DensitySamples {
    std::vector<double> x, rho;
};
DensitySamples empirical_density(const LongState& state, double mass);

// ---- micro <-> macro comparison harness ----

struct GridSpec {
    double x_min = 0.0, x_max = 0.0;
    int cells = 0;
    MacroBoundary boundary = MacroBoundary::periodic;
};

// Smooth initial profiles: Gaussian bump on a constant base.
struct ProfileSpec {
    double base_density = 0.0, bump_density = 0.0;
    double bump_center = 0.0, bump_width = 1.0;
    double base_speed = 0.0, bump_speed = 0.0;

    double density(double x) const;
    double speed(double x) const;
};

MacroField make_field(const GridSpec& grid, const ProfileSpec& profile);

// Platoon sampling the density profile: the leader sits at right_edge and
// each following gap solves gap = mass / (count * rho(midpoint)) with one
// fixed-point pass started from the left-endpoint density.
LongState seed_platoon(const MacroParams& params, int count, double right_edge,
                       const ProfileSpec& profile);

struct CompareRow {
    int count = 0;
    double t = 0.0;
    double l2_density = 0.0, linf_density = 0.0;
    double l2_speed = 0.0, linf_speed = 0.0;
};

struct CompareConfig {
    std::vector<int> counts;
    double right_edge = 0.0;
    std::vector<double> sample_times;
    double dt_micro = 0.0;
    double dt_macro = 0.0; // <= 0: derived from the CFL ceiling
    MacroFamily family = MacroFamily::pseudo_relativistic;
};

// Runs the PDE once and each platoon size once, then reports density/speed
// errors of the platoon against the interpolated field at every sample time.
std::vector<CompareRow> micro_macro_compare(const MacroParams& params,
                                            const GridSpec& grid,
                                            const ProfileSpec& profile,
                                            const CompareConfig& config);

} // namespace lanefree
