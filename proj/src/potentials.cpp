#include "lanefree/potentials.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <gsl/gsl_interp.h>
#include <gsl/gsl_spline.h>

namespace lanefree {

double PairFamily::curvature(double d, double floor) const {
    // Symmetric-difference fallback for families without an analytic second
    // derivative; step scaled to the support width.
    double h = 1e-5 * std::max(1.0, radius());
    if (d - h <= floor) h = 0.5 * (d - floor);
    return (eval(d + h, floor).slope - eval(d - h, floor).slope) / (2.0 * h);
}

CubicBarrier::CubicBarrier(double strength, double radius)
    : strength_(strength), radius_(radius) {
    if (!(strength >= 0.0))
        throw std::invalid_argument("barrier strength must be >= 0");
    if (!(radius > 0.0))
        throw std::invalid_argument("barrier radius must be positive");
}

ValueSlope CubicBarrier::eval(double d, double floor) const {
    if (d >= radius_) return {0.0, 0.0};
    if (!(d > floor))
        throw DomainViolation(
            {ConstraintKind::separation, -1, -1, d - floor});
    double w = radius_ - d; // distance below the support edge
    double e = d - floor;   // distance above the singular floor
    double value = strength_ * w * w * w / e;
    // d/dd [w^3/e] = -(3 w^2 e + w^3)/e^2
    double slope = -strength_ * w * w * (3.0 * e + w) / (e * e);
    return {value, slope};
}

double CubicBarrier::curvature(double d, double floor) const {
    if (d >= radius_) return 0.0;
    if (!(d > floor))
        throw DomainViolation(
            {ConstraintKind::separation, -1, -1, d - floor});
    double w = radius_ - d;
    double e = d - floor;
    return 2.0 * strength_ * (3.0 * w * e * e + 3.0 * w * w * e + w * w * w) /
           (e * e * e);
}

QuadraticKernel::QuadraticKernel(double strength, double radius)
    : strength_(strength), radius_(radius) {
    if (!(strength >= 0.0))
        throw std::invalid_argument("kernel strength must be >= 0");
    if (!(radius > 0.0))
        throw std::invalid_argument("kernel radius must be positive");
}

ValueSlope QuadraticKernel::eval(double d, double) const {
    if (d >= radius_) return {0.0, 0.0};
    double w = radius_ - d;
    return {strength_ * w * w, -2.0 * strength_ * w};
}

double QuadraticKernel::curvature(double d, double) const {
    return d >= radius_ ? 0.0 : 2.0 * strength_;
}

QuarticWall::QuarticWall(double half_width, double flatness)
    : half_width_(half_width), flatness_(flatness) {
    if (!(half_width > 0.0))
        throw std::invalid_argument("wall half width must be positive");
    if (!(flatness > 1.0))
        throw std::invalid_argument("wall flatness must exceed 1");
    flat_edge_ = half_width * std::sqrt((flatness - 1.0) / flatness);
}

ValueSlope QuarticWall::eval(double y) const {
    double a2 = half_width_ * half_width_;
    double gap = a2 - y * y;
    if (!(gap > 0.0))
        throw DomainViolation(
            {ConstraintKind::lateral, -1, -1, half_width_ - std::abs(y)});
    double inner = 1.0 / gap - flatness_ / a2;
    if (inner <= 0.0) return {0.0, 0.0}; // flat plateau
    double i2 = inner * inner;
    // d inner / dy = 2 y / gap^2
    double dinner = 2.0 * y / (gap * gap);
    return {i2 * i2, 4.0 * i2 * inner * dinner};
}

SmoothRamp::SmoothRamp(double width) : width_(width) {
    if (!(width > 0.0))
        throw std::invalid_argument("ramp width must be positive");
}

ValueSlope SmoothRamp::eval(double s) const {
    if (s <= -width_) return {0.0, 0.0};
    if (s < 0.0) {
        double t = s + width_;
        return {t * t / (2.0 * width_), t / width_};
    }
    return {s + 0.5 * width_, 1.0};
}

struct TabulatedShape::Impl {
    gsl_interp_accel* accel = nullptr;
    gsl_spline* spline = nullptr;
    double lo = 0.0, hi = 0.0;
};

TabulatedShape::TabulatedShape(std::vector<double> nodes,
                               std::vector<double> values)
    : impl_(new Impl) {
    if (nodes.size() != values.size() || nodes.size() < 3) {
        delete impl_;
        throw std::invalid_argument("tabulated shape needs >= 3 matching nodes");
    }
    for (std::size_t k = 1; k < nodes.size(); ++k)
        if (!(nodes[k] > nodes[k - 1])) {
            delete impl_;
            throw std::invalid_argument("tabulated nodes must be increasing");
        }
    impl_->accel = gsl_interp_accel_alloc();
    impl_->spline = gsl_spline_alloc(gsl_interp_cspline, nodes.size());
    gsl_spline_init(impl_->spline, nodes.data(), values.data(), nodes.size());
    impl_->lo = nodes.front();
    impl_->hi = nodes.back();
}

TabulatedShape::~TabulatedShape() {
    if (impl_) {
        if (impl_->spline) gsl_spline_free(impl_->spline);
        if (impl_->accel) gsl_interp_accel_free(impl_->accel);
        delete impl_;
    }
}

ValueSlope TabulatedShape::eval(double s) const {
    if (s < impl_->lo || s > impl_->hi)
        throw std::domain_error("tabulated shape evaluated outside its nodes");
    return {gsl_spline_eval(impl_->spline, s, impl_->accel),
            gsl_spline_eval_deriv(impl_->spline, s, impl_->accel)};
}

PotentialSuite make_standard_suite(const StandardSuiteParams& params) {
    PotentialSuite suite;
    suite.pair_potential = std::make_shared<CubicBarrier>(
        params.pair_strength, params.interaction_radius);
    suite.pair_kernel = std::make_shared<QuadraticKernel>(
        params.viscous_strength, params.interaction_radius);
    suite.wall =
        std::make_shared<QuarticWall>(params.half_width, params.wall_flatness);
    suite.ramp = std::make_shared<SmoothRamp>(params.ramp_width);
    suite.couple_long = std::make_shared<LinearShape>(1.0);
    suite.couple_lat = std::make_shared<LinearShape>(1.0);
    return suite;
}

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

} // namespace

void validate_suite(const PotentialSuite& suite, const PairMatrix& pairs,
                    const RoadSpec& road) {
    require(suite.pair_potential && suite.pair_kernel && suite.wall &&
                suite.ramp && suite.couple_long && suite.couple_lat,
            "potential suite has unset members");
    const double lambda = suite.interaction_radius();
    const double max_floor = pairs.max_floor();
    require(lambda > max_floor,
            "interaction radius must exceed every pairwise separation floor");
    require(suite.pair_kernel->radius() == lambda,
            "pair kernel must share the potential's interaction radius");
    require(suite.wall->half_width() == road.half_width,
            "wall half width must match the road");

    // Barrier: nonnegative, decreasing, divergent at the floor, exactly flat
    // at and beyond the radius.
    const double floor = max_floor;
    const double mid_value =
        suite.pair_potential->eval(0.5 * (floor + lambda), floor).value;
    require(mid_value > 0.0,
            "pair potential must be positive inside its support");
    double prev =
        suite.pair_potential->eval(floor + 1e-9 * (lambda - floor), floor).value;
    require(prev > 1e6 * mid_value,
            "pair potential must diverge at the separation floor");
    for (int k = 1; k <= 64; ++k) {
        double d = floor + (lambda - floor) * k / 64.0;
        ValueSlope vs = suite.pair_potential->eval(d, floor);
        require(vs.value >= 0.0, "pair potential must be nonnegative");
        require(vs.value <= prev * (1.0 + 1e-12),
                "pair potential must be nonincreasing in separation");
        require(vs.slope <= 1e-12 * std::max(1.0, vs.value),
                "pair potential slope must be nonpositive");
        prev = vs.value;
    }
    require(suite.pair_potential->eval(lambda, floor).value == 0.0 &&
                suite.pair_potential->eval(lambda, floor).slope == 0.0,
            "pair potential must vanish with zero slope at the radius");
    require(suite.pair_potential->eval(2.0 * lambda, floor).value == 0.0,
            "pair potential must vanish beyond the radius");

    // Kernel: nonnegative, vanishing at the radius.
    for (int k = 0; k <= 64; ++k) {
        double d = lambda * k / 64.0;
        require(suite.pair_kernel->eval(d, 0.0).value >= 0.0,
                "pair kernel must be nonnegative");
    }
    require(suite.pair_kernel->eval(lambda, 0.0).value == 0.0,
            "pair kernel must vanish at the radius");

    // Wall: zero plateau, symmetric, increasing outward, divergent rim.
    const double a = suite.wall->half_width();
    const double edge = suite.wall->flat_edge();
    require(edge > 0.0 && edge < a, "wall plateau edge must lie inside the road");
    require(suite.wall->eval(0.0).value == 0.0 &&
                suite.wall->eval(edge).value == 0.0,
            "wall must vanish on its plateau");
    prev = 0.0;
    for (int k = 1; k <= 64; ++k) {
        double y = edge + (a - edge) * k / 65.0;
        ValueSlope vs = suite.wall->eval(y);
        ValueSlope mirrored = suite.wall->eval(-y);
        require(vs.value >= prev, "wall must be nondecreasing toward the rim");
        require(vs.value == mirrored.value && vs.slope == -mirrored.slope,
                "wall must be even in y");
        require(vs.slope * y >= 0.0, "wall slope must push toward the center");
        prev = vs.value;
    }
    require(suite.wall->eval(a * (1.0 - 1e-9)).value > 1e12,
            "wall must diverge at the road boundary");

    // Ramp: dominates max(s, 0), slope within [0, 1].
    for (int k = -32; k <= 32; ++k) {
        double s = k / 8.0;
        ValueSlope vs = suite.ramp->eval(s);
        require(vs.value >= std::max(s, 0.0) - 1e-15,
                "ramp must dominate max(s, 0)");
        require(vs.slope >= 0.0 && vs.slope <= 1.0 + 1e-15,
                "ramp slope must stay in [0, 1]");
    }

    // Couplings: odd, nondecreasing, vanishing at 0.
    for (const auto& shape : {suite.couple_long, suite.couple_lat}) {
        require(shape->eval(0.0).value == 0.0, "coupling must vanish at 0");
        for (int k = 0; k <= 32; ++k) {
            double s = road.v_max * k / 32.0;
            ValueSlope plus = shape->eval(s);
            ValueSlope minus = shape->eval(-s);
            require(plus.value == -minus.value, "coupling must be odd");
            require(plus.slope >= 0.0, "coupling must be nondecreasing");
        }
    }
}

} // namespace lanefree
