#include "tuberrt/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace tuberrt {

std::optional<Lens> lens_of(const Sphere& a, const Sphere& b) {
    const Vec3 ab = b.center - a.center;
    const double d = ab.norm();
    const double ra = a.radius;
    const double rb = b.radius;

    if (d >= ra + rb) return std::nullopt;

    Lens lens;
    if (d <= std::abs(ra - rb)) {
        // One sphere contains the other; report the smaller sphere's volume
        // and its great circle as the intersection disc.
        const bool a_smaller = ra <= rb;
        const double r_small = a_smaller ? ra : rb;
        lens.volume = sphere_volume(r_small);
        lens.circle_center = a_smaller ? a.center : b.center;
        lens.circle_radius = r_small;
        lens.plane_normal = (d > kGeomTol) ? Vec3(ab / d) : Vec3::UnitZ();
        return lens;
    }

    // Two-cap lens. Both (ra - rb)^2 and the center distance are symmetric
    // under argument swap, so the volume is bit-exactly symmetric.
    const double rsum = ra + rb;
    const double rdiff = ra - rb;
    lens.volume = kPi * (rsum - d) * (rsum - d) *
                  (d * d + 2.0 * d * rsum - 3.0 * rdiff * rdiff) / (12.0 * d);

    const double xa = (d * d - rb * rb + ra * ra) / (2.0 * d);
    lens.circle_radius = std::sqrt(std::max(0.0, ra * ra - xa * xa));
    lens.circle_center = a.center + (xa / d) * ab;
    lens.plane_normal = ab / d;
    return lens;
}

double segment_point_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
    const Vec3 ab = b - a;
    const double len2 = ab.squaredNorm();
    if (len2 <= 0.0) return (p - a).norm();
    const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    return (p - (a + t * ab)).norm();
}

Vec3 convex_combination(std::span<const Vec3> points, std::span<const double> weights) {
    if (points.size() != weights.size() || points.empty()) {
        throw std::invalid_argument("convex_combination: points/weights size mismatch");
    }
    double sum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw std::invalid_argument("convex_combination: negative weight");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw std::invalid_argument("convex_combination: weights must sum to 1");
    }
    Vec3 out = Vec3::Zero();
    for (std::size_t k = 0; k < points.size(); ++k) out += weights[k] * points[k];
    return out;
}

}  // namespace tuberrt
