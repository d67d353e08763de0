#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <optional>
#include <span>

namespace tuberrt {

using Vec3 = Eigen::Vector3d;
using Aabb = Eigen::AlignedBox3d;

/// Comparison tolerance for geometric predicates, meters.
inline constexpr double kGeomTol = 1e-9;

inline constexpr double kPi = 3.14159265358979323846;

/// A free-space ball: center plus radius, both in meters.
struct Sphere {
    Vec3 center{Vec3::Zero()};
    double radius{0.0};
};

inline double sphere_volume(double radius) {
    return (4.0 / 3.0) * kPi * radius * radius * radius;
}

/// Intersection solid of two overlapping spheres. The boundary disc lies in
/// the plane orthogonal to the center line; `circle_center` sits on that line,
/// between the centers whenever both caps are real (d^2 >= |r1^2 - r2^2|) and
/// at most one small-sphere radius beyond the segment in deep overlap.
struct Lens {
    double volume{0.0};          // m^3
    Vec3 circle_center{Vec3::Zero()};
    double circle_radius{0.0};   // m
    Vec3 plane_normal{Vec3::UnitZ()};  // unit vector along the center line
};

/// Lens of two spheres, or nullopt when they do not overlap in the interior.
/// Tangency (d == r_a + r_b) counts as non-intersecting. When one sphere
/// contains the other, the volume is the smaller sphere's and the disc is its
/// great circle.
std::optional<Lens> lens_of(const Sphere& a, const Sphere& b);

/// Euclidean distance from p to the closed segment [a, b].
double segment_point_distance(const Vec3& p, const Vec3& a, const Vec3& b);

/// Weighted sum of points with nonnegative weights summing to 1 (tol 1e-9).
/// Throws std::invalid_argument on malformed weights.
Vec3 convex_combination(std::span<const Vec3> points, std::span<const double> weights);

inline double path_length(std::span<const Vec3> pts) {
    double len = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) len += (pts[i] - pts[i - 1]).norm();
    return len;
}

}  // namespace tuberrt
