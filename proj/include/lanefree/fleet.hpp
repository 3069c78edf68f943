#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lanefree {

// Road geometry and speed policy shared by every vehicle.
//   half_width     a   : admissible lateral band is |y| < a
//   heading_limit  phi : admissible headings are |theta| < phi, phi < pi/2
//   v_max              : hard speed ceiling, v in (0, v_max)
//   v_star             : common cruise speed, 0 < v_star < v_max
// Feasibility requires cos(heading_limit) > v_star / v_max, otherwise the
// cruise speed is unreachable at extreme admissible headings.
struct RoadSpec {
    double half_width = 0.0;
    double heading_limit = 0.0;
    double v_max = 0.0;
    double v_star = 0.0;
};

// Throws std::invalid_argument when the spec violates the constraints above.
void validate_road(const RoadSpec& road);

// Symmetric per-pair coefficients for the weighted separation metric:
// d_ij = sqrt(dx^2 + p_ij dy^2) with p_ij >= 1, and the hard floor L_ij > 0
// that separations must stay above.  Stored dense; i == j entries unused.
class PairMatrix {
public:
    PairMatrix() = default;
    static PairMatrix uniform(int n, double weight, double floor);

    int size() const { return n_; }
    double weight(int i, int j) const { return weight_[idx(i, j)]; }
    double floor(int i, int j) const { return floor_[idx(i, j)]; }
    void set(int i, int j, double weight, double floor);

    double max_floor() const;

private:
    std::size_t idx(int i, int j) const {
        return static_cast<std::size_t>(i) * n_ + j;
    }
    int n_ = 0;
    std::vector<double> weight_;
    std::vector<double> floor_;
};

// Planar fleet state in structure-of-arrays layout: position (x, y),
// heading theta, speed v, one entry per vehicle.
struct FleetState {
    std::vector<double> x, y, theta, v;

    int size() const { return static_cast<int>(x.size()); }
    void resize(int n) { x.resize(n); y.resize(n); theta.resize(n); v.resize(n); }
};

// Time derivative of FleetState; also reused as the gradient layout of the
// energy functions (entries d/dx_i, d/dy_i, d/dtheta_i, d/dv_i).
struct FleetDeriv {
    std::vector<double> x, y, theta, v;

    int size() const { return static_cast<int>(x.size()); }
    void resize(int n) { x.assign(n, 0.0); y.assign(n, 0.0); theta.assign(n, 0.0); v.assign(n, 0.0); }
};

// Euclidean inner product over all components of two derivative/gradient
// objects, accumulated in fixed vehicle order.
double dot(const FleetDeriv& a, const FleetDeriv& b);

// Feedback outputs per vehicle: angular rate u_i (rad/s) and longitudinal
// acceleration F_i (m/s^2).
struct ControlVector {
    std::vector<double> steer_rate;
    std::vector<double> accel;

    int size() const { return static_cast<int>(accel.size()); }
    void resize(int n) { steer_rate.assign(n, 0.0); accel.assign(n, 0.0); }
};

enum class ConstraintKind { lateral, heading, speed, separation, energy_rise };

const char* constraint_name(ConstraintKind kind);

// One violated state-space constraint.  `vehicle` is the offending index,
// `other` the partner for separation violations (-1 otherwise), `margin` the
// signed slack (negative means violated).
struct ConstraintViolation {
    ConstraintKind kind = ConstraintKind::lateral;
    int vehicle = -1;
    int other = -1;
    double margin = 0.0;

    std::string describe() const;
};

// Thrown by kernels that require an admissible state and got none.
class DomainViolation : public std::domain_error {
public:
    explicit DomainViolation(const ConstraintViolation& v)
        : std::domain_error(v.describe()), violation(v) {}
    ConstraintViolation violation;
};

// Full admissibility report: every violated constraint plus the tightest
// slack seen per constraint family (positive everywhere iff admissible).
struct AdmissibilityReport {
    std::vector<ConstraintViolation> violations;
    double lateral_margin = 0.0;
    double heading_margin = 0.0;
    double speed_margin = 0.0;
    double separation_margin = 0.0;

    bool admissible() const { return violations.empty(); }
};

// Weighted planar separation sqrt(dx^2 + weight dy^2).
double weighted_distance(double dx, double dy, double weight);

// Scans all constraints.  O(n^2) over pairs.
AdmissibilityReport check_admissible(const FleetState& state,
                                     const RoadSpec& road,
                                     const PairMatrix& pairs);

// First violated constraint in scan order, or nullopt when admissible.
// Cheaper than the full report on the simulation hot path.
std::optional<ConstraintViolation> first_violation(const FleetState& state,
                                                   const RoadSpec& road,
                                                   const PairMatrix& pairs);

bool in_state_space(const FleetState& state, const RoadSpec& road,
                    const PairMatrix& pairs);

// Recovers the front-axle steering angle delta = atan(wheelbase * u / v)
// realizing angular rate u at speed v > 0.
double steering_from_angular_rate(double steer_rate, double speed,
                                  double wheelbase);

} // namespace lanefree
