#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "tuberrt/geometry.hpp"
#include "tuberrt/rng.hpp"

#include <Eigen/Dense>

#include <cmath>

using namespace tuberrt;

TEST_CASE("lens volume: full overlap equals the sphere volume") {
    const Sphere unit{Vec3::Zero(), 1.0};
    const auto lens = lens_of(unit, unit);
    REQUIRE(lens.has_value());
    CHECK(lens->volume == doctest::Approx(4.0 * kPi / 3.0).epsilon(1e-12));
    CHECK(lens->circle_radius == doctest::Approx(1.0));
}

TEST_CASE("lens volume: tangent spheres do not intersect") {
    const Sphere a{Vec3::Zero(), 1.0};
    const Sphere b{Vec3(2.0, 0.0, 0.0), 1.0};
    CHECK_FALSE(lens_of(a, b).has_value());
    CHECK_FALSE(lens_of(a, Sphere{Vec3(3.0, 0.0, 0.0), 1.0}).has_value());
}

TEST_CASE("lens volume: unit spheres at distance 1") {
    const Sphere a{Vec3::Zero(), 1.0};
    const Sphere b{Vec3(1.0, 0.0, 0.0), 1.0};
    const auto lens = lens_of(a, b);
    REQUIRE(lens.has_value());
    // 5*pi/12, cross-checked against the Monte-Carlo oracle below.
    CHECK(lens->volume == doctest::Approx(5.0 * kPi / 12.0).epsilon(1e-12));
    CHECK(lens->circle_radius == doctest::Approx(std::sqrt(3.0) / 2.0).epsilon(1e-12));
    CHECK(lens->circle_center.isApprox(Vec3(0.5, 0.0, 0.0), 1e-12));
    CHECK(lens->plane_normal.isApprox(Vec3::UnitX(), 1e-12));

    const auto mc = oracles::mc_lens_volume(a, b, 1000000, 42);
    CHECK(std::abs(lens->volume - mc.volume) < 0.01 * lens->volume);
}

TEST_CASE("lens volume: containment reports the smaller sphere") {
    const Sphere big{Vec3::Zero(), 2.0};
    const Sphere small{Vec3(0.3, 0.0, 0.0), 0.5};
    const auto lens = lens_of(big, small);
    REQUIRE(lens.has_value());
    CHECK(lens->volume == doctest::Approx(sphere_volume(0.5)).epsilon(1e-12));
    CHECK(lens->circle_radius == doctest::Approx(0.5));
    CHECK(lens->circle_center.isApprox(small.center, 1e-12));
}

TEST_CASE("lens volume: symmetric, monotone in distance, and bounded") {
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const auto [a, b] = oracles::random_intersecting_pair(rng);
        const auto lens_ab = lens_of(a, b);
        const auto lens_ba = lens_of(b, a);
        REQUIRE(lens_ab.has_value());
        REQUIRE(lens_ba.has_value());
        CHECK(lens_ab->volume == lens_ba->volume);  // exact symmetry
        CHECK(lens_ab->volume >= 0.0);
        CHECK(lens_ab->volume <=
              std::min(sphere_volume(a.radius), sphere_volume(b.radius)) + 1e-12);
        // The disc center sits on the center line; it is between the centers
        // whenever both caps are real (d^2 >= |ra^2 - rb^2|). In the
        // deep-overlap regime it lands beyond the smaller center, at most one
        // small-radius past the segment.
        const double d = (b.center - a.center).norm();
        const Vec3 far_a = a.center - 10.0 * (b.center - a.center);
        const Vec3 far_b = b.center + 10.0 * (b.center - a.center);
        if (d > 1e-9) {
            CHECK(segment_point_distance(lens_ab->circle_center, far_a, far_b) < 1e-9);
        }
        const double overshoot =
            segment_point_distance(lens_ab->circle_center, a.center, b.center);
        if (d * d >= std::abs(a.radius * a.radius - b.radius * b.radius)) {
            CHECK(overshoot < 1e-9);
        } else {
            CHECK(overshoot <= std::min(a.radius, b.radius) + 1e-9);
        }
    }

    // Volume is non-increasing as the centers move apart, radii fixed.
    const Sphere a{Vec3::Zero(), 1.3};
    double prev = sphere_volume(1.3);
    for (double d = 0.0; d <= 2.5; d += 0.01) {
        const Sphere b{Vec3(d, 0.0, 0.0), 1.2};
        const auto lens = lens_of(a, b);
        const double v = lens ? lens->volume : 0.0;
        CHECK(v <= prev + 1e-12);
        prev = v;
    }
}

TEST_CASE("lens volume: closed form matches Monte Carlo over random pairs") {
    Rng rng(11);
    for (int trial = 0; trial < 30; ++trial) {
        const auto [a, b] = oracles::random_intersecting_pair(rng);
        const auto lens = lens_of(a, b);
        REQUIRE(lens.has_value());
        const auto mc = oracles::mc_lens_volume(a, b, 200000, 1000 + trial);
        CHECK(std::abs(lens->volume - mc.volume) <= 3.0 * mc.std_error);
    }
}

TEST_CASE("segment_point_distance") {
    const Vec3 a(-1.0, 0.0, 0.0);
    const Vec3 b(1.0, 0.0, 0.0);
    CHECK(segment_point_distance(Vec3(0.25, 0.0, 0.0), a, b) == doctest::Approx(0.0));
    CHECK(segment_point_distance(Vec3(0.0, 1.0, 0.0), a, b) == doctest::Approx(1.0));
    // Clamped to the endpoint: distance from (3,4,0) to [(0,0,0),(1,0,0)].
    CHECK(segment_point_distance(Vec3(3.0, 4.0, 0.0), Vec3::Zero(), Vec3(1.0, 0.0, 0.0)) ==
          doctest::Approx(std::sqrt(20.0)).epsilon(1e-12));
    // Degenerate segment.
    CHECK(segment_point_distance(Vec3(0.0, 2.0, 0.0), a, a) == doctest::Approx(std::sqrt(5.0)));

    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const Vec3 p(uniform(rng, -5, 5), uniform(rng, -5, 5), uniform(rng, -5, 5));
        const Vec3 s(uniform(rng, -5, 5), uniform(rng, -5, 5), uniform(rng, -5, 5));
        const Vec3 t(uniform(rng, -5, 5), uniform(rng, -5, 5), uniform(rng, -5, 5));
        const double dense = oracles::sampled_segment_distance(p, s, t, 20000);
        CHECK(segment_point_distance(p, s, t) == doctest::Approx(dense).epsilon(1e-6));
        CHECK(segment_point_distance(p, s, t) <= dense + 1e-12);
    }
}

TEST_CASE("convex_combination: basics and errors") {
    const std::vector<Vec3> pts{Vec3(1, 2, 3), Vec3(-1, 0, 5), Vec3(4, 4, 4)};

    const std::vector<double> onehot{0.0, 1.0, 0.0};
    CHECK(convex_combination(pts, onehot) == pts[1]);  // bit-exact

    const std::vector<Vec3> two{Vec3(0, 0, 0), Vec3(2, 2, 2)};
    const std::vector<double> half{0.5, 0.5};
    CHECK(convex_combination(two, half).isApprox(Vec3(1, 1, 1), 1e-12));

    const std::vector<double> thirds{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    const Vec3 centroid = (pts[0] + pts[1] + pts[2]) / 3.0;  // coordinate-wise average
    CHECK(convex_combination(pts, thirds).isApprox(centroid, 1e-12));

    CHECK_THROWS_AS(convex_combination(pts, std::vector<double>{0.5, 0.5}),
                    std::invalid_argument);
    CHECK_THROWS_AS(convex_combination(pts, std::vector<double>{0.7, 0.2, 0.2}),
                    std::invalid_argument);
    CHECK_THROWS_AS(convex_combination(pts, std::vector<double>{1.2, -0.2, 0.0}),
                    std::invalid_argument);
}

TEST_CASE("convex_combination stays inside the simplex hull") {
    // Barycentric recovery on random tetrahedra: solving for the weights back
    // from the output must reproduce them (all >= 0, summing to 1), which
    // places the point inside the hull to solver precision.
    Rng rng(19);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Vec3> pts;
        for (int i = 0; i < 4; ++i) {
            pts.emplace_back(uniform(rng, -3, 3), uniform(rng, -3, 3), uniform(rng, -3, 3));
        }
        Eigen::Matrix4d basis;
        for (int i = 0; i < 4; ++i) {
            basis.block<3, 1>(0, i) = pts[static_cast<std::size_t>(i)];
            basis(3, i) = 1.0;
        }
        if (std::abs(basis.determinant()) < 1e-3) continue;  // skip flat tetrahedra

        const auto w = uniform_simplex(rng, 4);
        const Vec3 p = convex_combination(pts, w);
        Eigen::Vector4d rhs;
        rhs << p, 1.0;
        const Eigen::Vector4d bary = basis.fullPivLu().solve(rhs);
        for (int i = 0; i < 4; ++i) {
            CHECK(bary[i] >= -1e-9);
            CHECK(bary[i] == doctest::Approx(w[static_cast<std::size_t>(i)]).epsilon(1e-6));
        }
        CHECK(bary.sum() == doctest::Approx(1.0).epsilon(1e-9));
    }
}
