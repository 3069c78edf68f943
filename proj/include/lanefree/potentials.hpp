#pragma once

#include <memory>
#include <vector>

#include "lanefree/fleet.hpp"

namespace lanefree {

struct ValueSlope {
    double value = 0.0;
    double slope = 0.0;
};

// Pair interaction shape in the weighted separation d.  Compactly supported:
// identically zero for d >= radius().  `floor` is the per-pair hard minimum
// L_ij; families that diverge at the floor throw DomainViolation (kind
// separation) when d <= floor.
class PairFamily {
public:
    virtual ~PairFamily() = default;
    virtual ValueSlope eval(double d, double floor) const = 0;
    // Second derivative in d; used by the macroscopic pressure slope.
    virtual double curvature(double d, double floor) const;
    virtual double radius() const = 0;
};

// Repulsive barrier strength*(radius - d)^3 / (d - floor) on (floor, radius],
// zero beyond.  Value and slope are continuous at the support edge; the
// barrier diverges as d -> floor+.
class CubicBarrier : public PairFamily {
public:
    CubicBarrier(double strength, double radius);
    ValueSlope eval(double d, double floor) const override;
    double curvature(double d, double floor) const override;
    double radius() const override { return radius_; }
    double strength() const { return strength_; }

private:
    double strength_, radius_;
};

// Nonnegative coupling weight strength*(radius - d)^2 for d <= radius, zero
// beyond.  Finite everywhere; ignores the pair floor.
class QuadraticKernel : public PairFamily {
public:
    QuadraticKernel(double strength, double radius);
    ValueSlope eval(double d, double floor) const override;
    double curvature(double d, double floor) const override;
    double radius() const override { return radius_; }
    double strength() const { return strength_; }

private:
    double strength_, radius_;
};

// Lateral confinement in y on (-half_width, half_width).  Zero on a flat
// interior plateau, diverging at the boundary.
class WallFamily {
public:
    virtual ~WallFamily() = default;
    virtual ValueSlope eval(double y) const = 0;
    // Largest |y| with eval(y) == 0 exactly.
    virtual double flat_edge() const = 0;
    virtual double half_width() const = 0;
};

// ((half_width^2 - y^2)^{-1} - flatness/half_width^2)^4 where positive, else
// zero.  flatness > 1; the plateau edge sits at
// half_width*sqrt((flatness-1)/flatness).
class QuarticWall : public WallFamily {
public:
    QuarticWall(double half_width, double flatness);
    ValueSlope eval(double y) const override;
    double flat_edge() const override { return flat_edge_; }
    double half_width() const override { return half_width_; }

private:
    double half_width_, flatness_, flat_edge_;
};

// Scalar shape with value and first derivative, used for relaxation and
// neighbor-coupling profiles.
class ScalarFunction {
public:
    virtual ~ScalarFunction() = default;
    virtual ValueSlope eval(double s) const = 0;
};

class LinearShape : public ScalarFunction {
public:
    explicit LinearShape(double slope) : slope_(slope) {}
    ValueSlope eval(double s) const override { return {slope_ * s, slope_}; }
    double slope() const { return slope_; }

private:
    double slope_;
};

// C^1 ramp: 0 for s <= -width, (s+width)^2/(2*width) for -width < s < 0,
// s + width/2 for s >= 0.  Satisfies r(s) >= max(s, 0) and r'(s) in [0, 1].
class SmoothRamp : public ScalarFunction {
public:
    explicit SmoothRamp(double width);
    ValueSlope eval(double s) const override;
    double width() const { return width_; }

private:
    double width_;
};

// Natural cubic spline through (nodes, values); value and slope from the
// interpolant.  Evaluation outside [nodes.front(), nodes.back()] throws.
class TabulatedShape : public ScalarFunction {
public:
    TabulatedShape(std::vector<double> nodes, std::vector<double> values);
    ~TabulatedShape() override;
    TabulatedShape(const TabulatedShape&) = delete;
    TabulatedShape& operator=(const TabulatedShape&) = delete;
    ValueSlope eval(double s) const override;

private:
    struct Impl;
    Impl* impl_;
};

// The potential/coupling bundle a fleet model runs on.
//   pair_potential  V : repulsive separation barrier
//   pair_kernel     kappa : neighbor speed-coupling weight (viscous term)
//   wall            U : lateral confinement
//   ramp            r : one-sided soft max used by the speed-gain schedule
//   couple_long     g1: longitudinal speed coupling shape (odd, increasing)
//   couple_lat      g2: lateral speed coupling shape (odd, increasing)
struct PotentialSuite {
    std::shared_ptr<const PairFamily> pair_potential;
    std::shared_ptr<const PairFamily> pair_kernel;
    std::shared_ptr<const WallFamily> wall;
    std::shared_ptr<const ScalarFunction> ramp;
    std::shared_ptr<const ScalarFunction> couple_long;
    std::shared_ptr<const ScalarFunction> couple_lat;

    double interaction_radius() const { return pair_potential->radius(); }
};

struct StandardSuiteParams {
    double pair_strength = 0.0;      // barrier scale
    double viscous_strength = 0.0;   // kernel scale, 0 disables speed coupling
    double interaction_radius = 0.0; // common support radius
    double half_width = 0.0;         // wall extent (matches RoadSpec)
    double wall_flatness = 1.5;      // plateau parameter, > 1
    double ramp_width = 0.2;         // ramp smoothing half-width
};

// Cubic barrier + quadratic kernel + quartic wall + smooth ramp + identity
// couplings.
PotentialSuite make_standard_suite(const StandardSuiteParams& params);

// Checks the structural axioms the stability analysis needs: barrier
// nonnegative, decreasing on its support, divergent at every pair floor and
// flat beyond the radius; kernel nonnegative and vanishing at the radius;
// wall zero on its plateau, symmetric, increasing outward, divergent at the
// half-width; ramp dominating max(s, 0) with slope in [0, 1]; couplings odd
// and nondecreasing; interaction radius above every pair floor.  Throws
// std::invalid_argument describing the first failure.
void validate_suite(const PotentialSuite& suite, const PairMatrix& pairs,
                    const RoadSpec& road);

} // namespace lanefree
