#include "doctest.h"
#include "fdm/rng.hpp"
#include "fdm/se2.hpp"

#include <cmath>

using namespace fdm;

namespace {
bool pose_close(const Se2Pose& a, const Se2Pose& b, double tol) {
    return std::abs(a.x - b.x) < tol && std::abs(a.y - b.y) < tol &&
           std::abs(wrap_angle(a.yaw - b.yaw)) < tol;
}
}  // namespace

TEST_CASE("wrap_angle maps into (-pi, pi] with correct boundaries") {
    CHECK(wrap_angle(0.0) == doctest::Approx(0.0));
    CHECK(wrap_angle(M_PI) == doctest::Approx(M_PI));
    CHECK(wrap_angle(-M_PI) == doctest::Approx(M_PI));
    CHECK(wrap_angle(3.0 * M_PI) == doctest::Approx(M_PI));
    CHECK(wrap_angle(2.0 * M_PI) == doctest::Approx(0.0));
    CHECK(wrap_angle(M_PI + 0.1) == doctest::Approx(-M_PI + 0.1));
    Rng rng = make_rng(7, 0);
    for (int i = 0; i < 200; ++i) {
        double a = uniform(rng, -50.0, 50.0);
        double w = wrap_angle(a);
        CHECK(w > -M_PI);
        CHECK(w <= M_PI + 1e-15);
        CHECK(std::abs(std::remainder(w - a, 2.0 * M_PI)) < 1e-9);
    }
}

TEST_CASE("se2_compose rotates the right operand into the left frame") {
    Se2Pose a{0.0, 0.0, M_PI / 2.0};
    Se2Pose b{1.0, 0.0, 0.0};
    Se2Pose c = se2_compose(a, b);
    CHECK(c.x == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(c.y == doctest::Approx(1.0));
    CHECK(c.yaw == doctest::Approx(M_PI / 2.0));
}

TEST_CASE("se2_relative inverts se2_compose") {
    Rng rng = make_rng(7, 1);
    for (int i = 0; i < 100; ++i) {
        Se2Pose base{uniform(rng, -5.0, 5.0), uniform(rng, -5.0, 5.0), uniform(rng, -4.0, 4.0)};
        base.yaw = wrap_angle(base.yaw);
        Se2Pose local{uniform(rng, -5.0, 5.0), uniform(rng, -5.0, 5.0), uniform(rng, -4.0, 4.0)};
        local.yaw = wrap_angle(local.yaw);
        Se2Pose world = se2_compose(base, local);
        Se2Pose back = se2_relative(base, world);
        CHECK(pose_close(back, local, 1e-12));
    }
}

TEST_CASE("se2_compose is associative") {
    Rng rng = make_rng(7, 2);
    for (int i = 0; i < 100; ++i) {
        Se2Pose a{uniform(rng, -2.0, 2.0), uniform(rng, -2.0, 2.0), uniform(rng, -3.0, 3.0)};
        Se2Pose b{uniform(rng, -2.0, 2.0), uniform(rng, -2.0, 2.0), uniform(rng, -3.0, 3.0)};
        Se2Pose c{uniform(rng, -2.0, 2.0), uniform(rng, -2.0, 2.0), uniform(rng, -3.0, 3.0)};
        Se2Pose lhs = se2_compose(se2_compose(a, b), c);
        Se2Pose rhs = se2_compose(a, se2_compose(b, c));
        CHECK(pose_close(lhs, rhs, 1e-12));
    }
}

TEST_CASE("se2_exp matches the closed-form arc for a half-turn step") {
    // vx = 1, omega = pi held for 0.5 s traces a quarter circle of radius
    // 1/pi: endpoint (1/pi, 1/pi), heading pi/2.
    Twist t{1.0, 0.0, M_PI};
    Se2Delta d = se2_exp(t, 0.5);
    CHECK(d.dx == doctest::Approx(1.0 / M_PI));
    CHECK(d.dy == doctest::Approx(1.0 / M_PI));
    CHECK(d.dyaw == doctest::Approx(M_PI / 2.0));
}

TEST_CASE("se2_exp with zero rotation is a straight step") {
    Se2Delta d = se2_exp({0.8, -0.3, 0.0}, 0.5);
    CHECK(d.dx == doctest::Approx(0.4));
    CHECK(d.dy == doctest::Approx(-0.15));
    CHECK(d.dyaw == doctest::Approx(0.0));
}

TEST_CASE("se2_exp series branch agrees with the exact branch") {
    // Just above and below the series switch the two formulas must agree to
    // near machine precision.
    for (double th : {9.9e-5, 1.01e-4, 5e-5, 2e-4}) {
        Twist t{0.7, -0.4, th / 0.5};
        Se2Delta d = se2_exp(t, 0.5);
        double s = std::sin(th) / th, c = (1.0 - std::cos(th)) / th;
        CHECK(d.dx == doctest::Approx(0.5 * (s * t.vx - c * t.vy)).epsilon(1e-12));
        CHECK(d.dy == doctest::Approx(0.5 * (c * t.vx + s * t.vy)).epsilon(1e-12));
    }
}

TEST_CASE("se2_exp pure rotation stays in place") {
    Se2Delta d = se2_exp({0.0, 0.0, 1.0}, 0.5);
    CHECK(d.dx == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(d.dy == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(d.dyaw == doctest::Approx(0.5));
}

TEST_CASE("integrate_twist composes per-step exponentials") {
    ActionSeq seq;
    seq.dt_p = 0.5;
    seq.twists = {{1.0, 0.0, M_PI}, {1.0, 0.0, M_PI}};
    ActionBounds wide;
    wide.min[2] = -4.0;
    wide.max[2] = 4.0;
    PoseTrajectory traj = integrate_twist(Se2Pose::identity(), seq, nullptr, wide);
    REQUIRE(traj.poses.size() == 2);
    CHECK(traj.poses[0].x == doctest::Approx(1.0 / M_PI));
    CHECK(traj.poses[0].y == doctest::Approx(1.0 / M_PI));
    CHECK(traj.poses[0].yaw == doctest::Approx(M_PI / 2.0));
    // Second quarter-circle ends the half turn at (0, 2/pi) facing backwards.
    CHECK(traj.poses[1].x == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(traj.poses[1].y == doctest::Approx(2.0 / M_PI));
    CHECK(std::abs(traj.poses[1].yaw) == doctest::Approx(M_PI));
}

TEST_CASE("integrate_twist applies residuals then clips to bounds") {
    ActionSeq seq;
    seq.dt_p = 0.5;
    seq.twists = {{0.9, 0.0, 0.0}};
    std::vector<Twist> residuals = {{0.4, -1.5, 0.2}};
    ActionBounds bounds;
    PoseTrajectory traj = integrate_twist(Se2Pose::identity(), seq, &residuals, bounds);
    // vx: 0.9 + 0.4 clips to 1.0; vy: -1.5 clips to -1.0; omega: 0.2 in range.
    Se2Delta d = se2_exp({1.0, -1.0, 0.2}, 0.5);
    CHECK(traj.poses[0].x == doctest::Approx(d.dx));
    CHECK(traj.poses[0].y == doctest::Approx(d.dy));
    CHECK(traj.poses[0].yaw == doctest::Approx(d.dyaw));
}

TEST_CASE("ActionBounds clip is idempotent and contains its output") {
    ActionBounds b;
    Rng rng = make_rng(7, 3);
    for (int i = 0; i < 100; ++i) {
        Twist t{uniform(rng, -3.0, 3.0), uniform(rng, -3.0, 3.0), uniform(rng, -3.0, 3.0)};
        Twist c = b.clip(t);
        CHECK(b.contains(c));
        Twist cc = b.clip(c);
        CHECK(cc.vx == c.vx);
        CHECK(cc.vy == c.vy);
        CHECK(cc.omega == c.omega);
    }
}
