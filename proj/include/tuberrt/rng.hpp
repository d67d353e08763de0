#pragma once

#include "tuberrt/geometry.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace tuberrt {

using Rng = std::mt19937_64;

// Uniform draws are built directly from raw 64-bit words so that seeded
// sequences are identical across standard libraries.

/// Uniform double in [0, 1).
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

/// Uniform point in an axis-aligned box; draws in fixed x, y, z order.
inline Vec3 uniform_in_box(Rng& rng, const Aabb& box) {
    Vec3 p;
    p.x() = uniform(rng, box.min().x(), box.max().x());
    p.y() = uniform(rng, box.min().y(), box.max().y());
    p.z() = uniform(rng, box.min().z(), box.max().z());
    return p;
}

/// Uniform sample from the (m-1)-simplex via normalized exponentials.
inline std::vector<double> uniform_simplex(Rng& rng, int m) {
    std::vector<double> w(static_cast<std::size_t>(m));
    double sum = 0.0;
    for (auto& wk : w) {
        wk = -std::log(1.0 - uniform01(rng));
        sum += wk;
    }
    for (auto& wk : w) wk /= sum;
    return w;
}

}  // namespace tuberrt
