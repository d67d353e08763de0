#pragma once

#include "tuberrt/geometry.hpp"
#include "tuberrt/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace tuberrt {

/// Obstacles are closed solids: spheres or axis-aligned boxes.
using Obstacle = std::variant<Sphere, Aabb>;

/// Signed distance from p to the obstacle surface, negative inside.
double signed_distance(const Obstacle& obs, const Vec3& p);

/// True iff the closed segment [a, b] meets the closed solid.
bool segment_intersects(const Obstacle& obs, const Vec3& a, const Vec3& b);

Aabb bounding_box(const Obstacle& obs);

/// Distance from an interior point to the nearest face of `bounds`.
double face_distance(const Aabb& bounds, const Vec3& p);

struct WorldMeta {
    std::uint64_t seed{0};
    std::string generator{"manual"};
};

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bounded 3-D world with an obstacle set and a BVH answering distance and
/// segment queries exactly as brute force over the obstacle list would.
class Environment {
public:
    Environment(const Aabb& bounds, std::vector<Obstacle> obstacles, WorldMeta meta = {});

    const Aabb& bounds() const { return bounds_; }
    const std::vector<Obstacle>& obstacles() const { return obstacles_; }
    const WorldMeta& meta() const { return meta_; }

    /// Min signed distance over obstacles, capped by the distance to the
    /// bounds faces so spheres stay inside the configuration space.
    /// Throws std::domain_error when p is outside bounds.
    double distance_to_obstacles(const Vec3& p) const;

    /// Reference path: plain scan over the obstacle list, no index.
    double distance_to_obstacles_brute(const Vec3& p) const;

    /// True iff [a, b] misses every obstacle solid (bounds are not tested;
    /// callers keep endpoints inside bounds).
    bool segment_obstacle_free(const Vec3& a, const Vec3& b) const;
    bool segment_obstacle_free_brute(const Vec3& a, const Vec3& b) const;

private:
    struct BvhNode {
        Aabb box;
        int left{-1};
        int right{-1};
        int begin{0};
        int end{0};  // leaf covers order_[begin, end)
    };

    int build_bvh(int begin, int end, std::vector<Aabb>& boxes);
    void min_distance_rec(int node, const Vec3& p, double& best) const;
    bool segment_hit_rec(int node, const Vec3& a, const Vec3& b) const;

    Aabb bounds_;
    std::vector<Obstacle> obstacles_;
    WorldMeta meta_;
    std::vector<BvhNode> bvh_;
    std::vector<int> order_;
    int bvh_root_{-1};
};

struct WorldGenConfig {
    Vec3 extents{25.0, 25.0, 3.0};   // bounds span [0, extents], meters
    int obstacle_count{0};
    Vec3 footprint{1.0, 1.0, 3.0};   // box obstacle extents; full world height
                                     // when footprint z matches the bounds
    std::uint64_t seed{0};
    std::optional<Vec3> start;       // keep-out anchors; defaults to the
    std::optional<Vec3> goal;        // opposite-face mid-height rule
};

/// Start/goal placement rule: opposite x faces, mid height, 2 m inset.
Vec3 default_start(const Aabb& bounds);
Vec3 default_goal(const Aabb& bounds);

/// Keep-out clearance kept around start/goal during generation, meters.
inline constexpr double kKeepOutRadius = 2.0;

/// Deterministic random world: obstacle centers uniform over placements that
/// keep the box inside bounds, rejecting boxes within 2 m of start/goal.
/// Throws std::runtime_error after 10*count rejections.
Environment generate_world(const WorldGenConfig& cfg);

Environment load_world(const std::filesystem::path& path);
void save_world(const Environment& env, const std::filesystem::path& path);

/// Canonical file encoding (also the save_world payload), for byte tests.
std::string world_to_string(const Environment& env);
Environment world_from_string(const std::string& text);

}  // namespace tuberrt
