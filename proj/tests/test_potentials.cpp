#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "support.hpp"

#include <stdexcept>

using namespace lanefree;

// d = 15.295 is the midpoint of (floor, radius) for floor 5.59, radius 25:
// both (radius - d) and (d - floor) equal 9.705, so the barrier collapses to
// strength * 9.705^2 and every derived value below is exact in decimal.
static const double kFloor = 5.59;
static const double kRadius = 25.0;
static const double kMid = 15.295;

TEST_CASE("cubic barrier matches hand-evaluated values") {
    CubicBarrier barrier(1e-3, kRadius);
    ValueSlope vs = barrier.eval(kMid, kFloor);
    CHECK(vs.value == doctest::Approx(0.094187025).epsilon(1e-14));
    CHECK(vs.slope == doctest::Approx(-0.03882).epsilon(1e-14));
    CHECK(barrier.curvature(kMid, kFloor) == doctest::Approx(0.014).epsilon(1e-9));
}

TEST_CASE("cubic barrier vanishes beyond the radius and diverges at the floor") {
    CubicBarrier barrier(1e-3, kRadius);
    CHECK(barrier.eval(kRadius, kFloor).value == 0.0);
    CHECK(barrier.eval(kRadius + 3.0, kFloor).value == 0.0);
    CHECK(barrier.eval(kRadius + 3.0, kFloor).slope == 0.0);
    CHECK(barrier.eval(kFloor + 1e-9, kFloor).value > 1e6);
    CHECK(barrier.eval(kFloor + 1e-9, kFloor).slope < -1e12);
    CHECK_THROWS_AS(barrier.eval(kFloor, kFloor), DomainViolation);
    CHECK_THROWS_AS(barrier.eval(kFloor - 0.1, kFloor), DomainViolation);
}

TEST_CASE("cubic barrier slope and curvature agree with finite differences") {
    CubicBarrier barrier(1e-3, kRadius);
    for (double d : {6.0, 8.0, 12.0, 18.0, 24.0}) {
        double h = 1e-6;
        double hi = barrier.eval(d + h, kFloor).value;
        double lo = barrier.eval(d - h, kFloor).value;
        double fd_slope = (hi - lo) / (2.0 * h);
        CHECK(barrier.eval(d, kFloor).slope ==
              doctest::Approx(fd_slope).epsilon(1e-7));
        double fd_curv = (barrier.eval(d + h, kFloor).slope -
                          barrier.eval(d - h, kFloor).slope) /
                         (2.0 * h);
        CHECK(barrier.curvature(d, kFloor) ==
              doctest::Approx(fd_curv).epsilon(1e-6));
    }
}

TEST_CASE("quadratic kernel matches hand-evaluated values") {
    QuadraticKernel kernel(0.5, kRadius);
    CHECK(kernel.eval(kMid, kFloor).value ==
          doctest::Approx(47.0935125).epsilon(1e-14));
    CHECK(kernel.eval(kMid, kFloor).slope ==
          doctest::Approx(-9.705).epsilon(1e-14));
    CHECK(kernel.eval(kRadius, kFloor).value == 0.0);
    CHECK(kernel.eval(kRadius + 1.0, kFloor).value == 0.0);
    CHECK(kernel.eval(6.0, kFloor).value ==
          doctest::Approx(0.5 * 19.0 * 19.0).epsilon(1e-14));
}

TEST_CASE("quartic wall: plateau, hand values, divergence") {
    QuarticWall wall(7.2, 1.5);
    CHECK(wall.flat_edge() ==
          doctest::Approx(4.15692193816530550446587121961).epsilon(1e-15));
    CHECK(wall.eval(0.0).value == 0.0);
    CHECK(wall.eval(4.0).value == 0.0);
    CHECK(wall.eval(4.0).slope == 0.0);
    CHECK(wall.eval(-wall.flat_edge()).value == 0.0);
    CHECK(wall.eval(5.5).value ==
          doctest::Approx(9.12965570331461484408767790078e-8).epsilon(1e-13));
    CHECK(wall.eval(5.5).slope ==
          doctest::Approx(4.95779073619791563618807735064e-7).epsilon(1e-13));
    CHECK(wall.eval(-5.5).value == wall.eval(5.5).value);
    CHECK(wall.eval(-5.5).slope == -wall.eval(5.5).slope);
    CHECK(wall.eval(7.2 * (1.0 - 1e-10)).value > 1e12);
    CHECK_THROWS_AS(wall.eval(7.2), DomainViolation);
    CHECK_THROWS_AS(wall.eval(-7.3), DomainViolation);
}

TEST_CASE("smooth ramp: branch values, slope range, domination") {
    SmoothRamp ramp(0.2);
    CHECK(ramp.eval(0.0).value == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(ramp.eval(1.0).value == doctest::Approx(1.1).epsilon(1e-15));
    CHECK(ramp.eval(-0.1).value == doctest::Approx(0.025).epsilon(1e-15));
    CHECK(ramp.eval(-0.2).value == 0.0);
    CHECK(ramp.eval(-5.0).value == 0.0);
    CHECK(ramp.eval(-5.0).slope == 0.0);
    CHECK(ramp.eval(2.0).slope == 1.0);
    for (int k = -40; k <= 40; ++k) {
        double s = k / 10.0;
        ValueSlope vs = ramp.eval(s);
        CHECK(vs.value >= std::max(s, 0.0));
        CHECK(vs.slope >= 0.0);
        CHECK(vs.slope <= 1.0);
        double h = 1e-7;
        double fd = (ramp.eval(s + h).value - ramp.eval(s - h).value) / (2.0 * h);
        CHECK(vs.slope == doctest::Approx(fd).epsilon(1e-5));
    }
}

TEST_CASE("tabulated shape reproduces node values and interpolates smoothly") {
    std::vector<double> nodes, values;
    for (int k = 0; k <= 16; ++k) {
        double s = -2.0 + 4.0 * k / 16.0;
        nodes.push_back(s);
        values.push_back(std::sin(s));
    }
    TabulatedShape shape(nodes, values);
    for (std::size_t i = 0; i < nodes.size(); ++i)
        CHECK(shape.eval(nodes[i]).value ==
              doctest::Approx(values[i]).epsilon(1e-12));
    CHECK(shape.eval(0.37).value == doctest::Approx(std::sin(0.37)).epsilon(1e-4));
    CHECK(shape.eval(0.37).slope == doctest::Approx(std::cos(0.37)).epsilon(1e-3));
    CHECK_THROWS_AS(shape.eval(2.5), std::domain_error);
    CHECK_THROWS_AS(shape.eval(-2.5), std::domain_error);
}

TEST_CASE("standard suite wiring and axioms") {
    StandardSuiteParams params;
    params.pair_strength = 1e-3;
    params.viscous_strength = 0.5;
    params.interaction_radius = kRadius;
    params.half_width = 7.2;
    PotentialSuite suite = make_standard_suite(params);
    CHECK(suite.interaction_radius() == kRadius);
    CHECK(suite.couple_long->eval(3.0).value == 3.0);
    CHECK(suite.couple_long->eval(3.0).slope == 1.0);
    CHECK(suite.couple_lat->eval(-2.0).value == -2.0);

    RoadSpec road{7.2, 0.25, 35.0, 30.0};
    PairMatrix pairs = PairMatrix::uniform(4, 5.11, kFloor);
    CHECK_NOTHROW(validate_suite(suite, pairs, road));

    PairMatrix tight = PairMatrix::uniform(4, 5.11, kRadius + 1.0);
    CHECK_THROWS_AS(validate_suite(suite, tight, road), std::invalid_argument);
}
