#pragma once

#include "tuberrt/environment.hpp"
#include "tuberrt/geometry.hpp"
#include "tuberrt/planner.hpp"
#include "tuberrt/rng.hpp"

#include <filesystem>
#include <span>
#include <vector>

namespace tuberrt {

/// One end of the tube: an ordered list of vertices spanning a bounded convex
/// region (a point for M=1, a segment for M=2, a convex polygon beyond).
struct Terminal {
    std::vector<Vec3> vertices;

    Vec3 centroid() const;
    int size() const { return static_cast<int>(vertices.size()); }
};

/// Intersection disc between two adjacent tube spheres.
struct IntersectionRecord {
    Vec3 center{Vec3::Zero()};          // q_{o,i}
    double disc_radius{0.0};            // m
    Vec3 plane_normal{Vec3::UnitZ()};   // unit, along the chain direction
    double lens_volume{0.0};            // m^3
};

/// The homotopic path family extracted from a solved tube: the sphere chain
/// sigma_c, the center path sigma_o, M boundary paths through the disc
/// boundaries, and the per-gap intersection records.
struct HomotopicPathSet {
    std::vector<Sphere> sigma_c;                    // m spheres
    std::vector<Vec3> sigma_o;                      // m+1 points
    std::vector<std::vector<Vec3>> boundary_paths;  // M paths of m+1 points
    std::vector<IntersectionRecord> records;        // m-1 discs
    bool boundary_feasible{true};  // all boundary segments obstacle-free

    int num_boundary_paths() const { return static_cast<int>(boundary_paths.size()); }
    int num_waypoints() const { return static_cast<int>(sigma_o.size()); }
};

struct BoundaryOptions {
    /// Default anchors sigma_o at the first/last sphere centers; set to anchor
    /// at the terminal centroids instead.
    bool anchor_at_terminal_centroids{false};
};

/// Root-to-goal spheres for a tree node; throws std::invalid_argument when the
/// node id is invalid or the parent chain does not reach the root.
std::vector<Sphere> extract_center_path(const TubeTree& tree, int goal_node);

/// Discs between consecutive chain spheres. Throws std::runtime_error when a
/// pair does not intersect or its disc is degenerate (radius <= 1e-9).
std::vector<IntersectionRecord> intersection_records(const std::vector<Sphere>& chain);

/// Builds the path set: M points equally spaced on every disc boundary using
/// a rotation-minimizing frame propagated along the chain, anchored at the
/// terminal vertices (matched rank-to-rank by angle about the path tangent).
/// Boundary segments are collision-checked; failures only clear
/// `boundary_feasible`. Both terminals must have the same vertex count.
HomotopicPathSet build_boundary_paths(const Environment& env, const std::vector<Sphere>& sigma_c,
                                      const Terminal& start, const Terminal& goal,
                                      const BoundaryOptions& options = {});

/// Pointwise convex combination of the boundary paths (theta on the simplex).
std::vector<Vec3> interpolate(const HomotopicPathSet& set, std::span<const double> theta);

/// l interpolations with theta uniform over the simplex; cost independent of
/// the tree size that produced the path set.
std::vector<std::vector<Vec3>> sample_homotopic_paths(const HomotopicPathSet& set, int l, Rng& rng);

struct PathMetrics {
    double apl{0.0};  // m, length of the center path
    double mgv{0.0};  // m^3, volume of the smallest chain sphere
    double vsd{0.0};  // m^2, variance of clearance over center-path points
};

/// Metrics for one solved chain (APL over sigma_o, MGV over chain radii, VSD
/// over clearance at sigma_o points).
PathMetrics chain_metrics(const Environment& env, const std::vector<Sphere>& chain);

/// Baseline equivalent: path points become spheres of radius
/// find_max_radius(point), so MGV/VSD are comparable across planners.
PathMetrics point_path_metrics(const Environment& env, const std::vector<Vec3>& path,
                               double r_max);

/// Mean-aggregated metrics over several solved chains; throws on empty input.
PathMetrics compute_metrics(const Environment& env,
                            const std::vector<std::vector<Sphere>>& chains);

/// L(sigma_c) - L(sigma_o) with sigma_o measured through the disc centers and
/// anchored at the first/last sphere centers; nonnegative by the triangle
/// inequality.
double lemma1_gap(const std::vector<Sphere>& sigma_c);
double lemma1_gap(const HomotopicPathSet& set);

struct AllocationResult {
    int m{0};                        // path-point count minimizing the cost
    std::vector<double> allocation;  // m-1 gap volumes
    double objective{0.0};
};

/// Brute-force minimizer of sum_i (V_i/sigma_v + eps)^-1 over grid-discretized
/// positive allocations of v_total, for every m in [m_lo, m_hi]. Test oracle
/// for the equal-split/minimum-m optimum.
AllocationResult proposition1_oracle(double v_total, int m_lo, int m_hi, double sigma_v,
                                     double epsilon, int grid);

/// Path-set file: sigma_c, sigma_o, boundary paths, and records.
void save_path_set(const HomotopicPathSet& set, const std::filesystem::path& path);

}  // namespace tuberrt
