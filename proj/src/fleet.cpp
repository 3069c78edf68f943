#include "lanefree/fleet.hpp"

#include <cmath>
#include <sstream>

namespace lanefree {

void validate_road(const RoadSpec& road) {
    auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
    if (!(road.half_width > 0.0)) fail("road half width must be positive");
    if (!(road.heading_limit > 0.0) || !(road.heading_limit < 1.5707963267948966))
        fail("heading limit must lie in (0, pi/2)");
    if (!(road.v_max > 0.0)) fail("speed ceiling must be positive");
    if (!(road.v_star > 0.0) || !(road.v_star < road.v_max))
        fail("cruise speed must lie in (0, v_max)");
    if (!(std::cos(road.heading_limit) > road.v_star / road.v_max))
        fail("cos(heading limit) must exceed v_star / v_max, otherwise the "
             "cruise speed is unreachable at admissible headings");
}

PairMatrix PairMatrix::uniform(int n, double weight, double floor) {
    if (n < 1) throw std::invalid_argument("fleet size must be at least 1");
    if (!(weight >= 1.0)) throw std::invalid_argument("pair weight must be >= 1");
    if (!(floor > 0.0)) throw std::invalid_argument("pair floor must be positive");
    PairMatrix m;
    m.n_ = n;
    m.weight_.assign(static_cast<std::size_t>(n) * n, weight);
    m.floor_.assign(static_cast<std::size_t>(n) * n, floor);
    return m;
}

void PairMatrix::set(int i, int j, double weight, double floor) {
    if (i == j) throw std::invalid_argument("pair coefficients need i != j");
    if (!(weight >= 1.0)) throw std::invalid_argument("pair weight must be >= 1");
    if (!(floor > 0.0)) throw std::invalid_argument("pair floor must be positive");
    weight_[idx(i, j)] = weight_[idx(j, i)] = weight;
    floor_[idx(i, j)] = floor_[idx(j, i)] = floor;
}

double PairMatrix::max_floor() const {
    double m = 0.0;
    for (int i = 0; i < n_; ++i)
        for (int j = i + 1; j < n_; ++j) m = std::max(m, floor(i, j));
    return m;
}

double dot(const FleetDeriv& a, const FleetDeriv& b) {
    double s = 0.0;
    for (int i = 0; i < a.size(); ++i)
        s += a.x[i] * b.x[i] + a.y[i] * b.y[i] + a.theta[i] * b.theta[i] +
             a.v[i] * b.v[i];
    return s;
}

const char* constraint_name(ConstraintKind kind) {
    switch (kind) {
    case ConstraintKind::lateral: return "lateral";
    case ConstraintKind::heading: return "heading";
    case ConstraintKind::speed: return "speed";
    case ConstraintKind::separation: return "separation";
    case ConstraintKind::energy_rise: return "energy_rise";
    }
    return "?";
}

std::string ConstraintViolation::describe() const {
    std::ostringstream os;
    os << constraint_name(kind) << " constraint violated by vehicle " << vehicle;
    if (other >= 0) os << " against vehicle " << other;
    os << " (margin " << margin << ")";
    return os.str();
}

double weighted_distance(double dx, double dy, double weight) {
    return std::sqrt(dx * dx + weight * dy * dy);
}

namespace {

// Shared scan: calls visit(violation) on each violated constraint and
// returns false from visit to stop early.  Margins collected only when
// `report` is given.
template <class Visit>
void scan_constraints(const FleetState& state, const RoadSpec& road,
                      const PairMatrix& pairs, AdmissibilityReport* report,
                      Visit visit) {
    const int n = state.size();
    double lat = 1e300, head = 1e300, spd = 1e300, sep = 1e300;
    for (int i = 0; i < n; ++i) {
        double m = road.half_width - std::abs(state.y[i]);
        lat = std::min(lat, m);
        if (!(m > 0.0) &&
            !visit({ConstraintKind::lateral, i, -1, m}))
            return;
        m = road.heading_limit - std::abs(state.theta[i]);
        head = std::min(head, m);
        if (!(m > 0.0) && !visit({ConstraintKind::heading, i, -1, m})) return;
        m = std::min(state.v[i], road.v_max - state.v[i]);
        spd = std::min(spd, m);
        if (!(m > 0.0) && !visit({ConstraintKind::speed, i, -1, m})) return;
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            double d = weighted_distance(state.x[i] - state.x[j],
                                         state.y[i] - state.y[j],
                                         pairs.weight(i, j));
            double m = d - pairs.floor(i, j);
            sep = std::min(sep, m);
            if (!(m > 0.0) && !visit({ConstraintKind::separation, i, j, m}))
                return;
        }
    }
    if (report) {
        report->lateral_margin = lat;
        report->heading_margin = head;
        report->speed_margin = spd;
        report->separation_margin = n > 1 ? sep : 1e300;
    }
}

} // namespace

AdmissibilityReport check_admissible(const FleetState& state,
                                     const RoadSpec& road,
                                     const PairMatrix& pairs) {
    AdmissibilityReport report;
    scan_constraints(state, road, pairs, &report,
                     [&](const ConstraintViolation& v) {
                         report.violations.push_back(v);
                         return true;
                     });
    return report;
}

std::optional<ConstraintViolation> first_violation(const FleetState& state,
                                                   const RoadSpec& road,
                                                   const PairMatrix& pairs) {
    std::optional<ConstraintViolation> found;
    scan_constraints(state, road, pairs, nullptr,
                     [&](const ConstraintViolation& v) {
                         found = v;
                         return false;
                     });
    return found;
}

bool in_state_space(const FleetState& state, const RoadSpec& road,
                    const PairMatrix& pairs) {
    return !first_violation(state, road, pairs).has_value();
}

double steering_from_angular_rate(double steer_rate, double speed,
                                  double wheelbase) {
    if (!(speed > 0.0))
        throw std::domain_error("steering recovery needs positive speed");
    if (!(wheelbase > 0.0))
        throw std::domain_error("steering recovery needs positive wheelbase");
    return std::atan(wheelbase * steer_rate / speed);
}

} // namespace lanefree
