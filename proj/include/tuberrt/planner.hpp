#pragma once

#include "tuberrt/environment.hpp"
#include "tuberrt/geometry.hpp"
#include "tuberrt/kdtree.hpp"
#include "tuberrt/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace tuberrt {

struct PlannerConfig {
    double rho_d{1.0};
    double rho_v{0.15};
    double sigma_v{1413.7};   // m^3
    double epsilon{0.01};
    double r_min{0.1};        // m, strict lower bound on accepted radii
    double r_max{2.0};        // m, clamp on sampled radii
    int max_samples{5000};
    double time_budget{0.0};  // seconds; 0 disables the wall-clock stop
    std::uint64_t seed{1};

    void validate() const;    // throws std::invalid_argument
};

/// Tree vertex: a free-space sphere plus parent linkage and the accumulated
/// connection cost from the root.
struct SphereNode {
    Sphere sphere;
    int parent{-1};
    double cost{0.0};
    double edge_score{0.0};              // score(parent, this); 0 at the root
    std::optional<Lens> lens_to_parent;  // engaged for every non-root node
    std::vector<int> children;
};

/// The planner graph: sphere nodes with parent edges and a kd-tree over the
/// node centers. Nodes are append-only; ids are stable.
class TubeTree {
public:
    explicit TubeTree(const Sphere& root);

    int size() const { return static_cast<int>(nodes_.size()); }
    const SphereNode& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
    const std::vector<SphereNode>& nodes() const { return nodes_; }
    double max_radius() const { return max_radius_; }
    const KdTree3& index() const { return index_; }

    /// Appends a node without wiring or indexing it; pair with wire-or-pop.
    int add_unwired(const Sphere& s);
    void pop_unwired();
    void commit(int id);  // index the node once wired

    SphereNode& mutable_node(int id) { return nodes_[static_cast<std::size_t>(id)]; }

private:
    std::vector<SphereNode> nodes_;
    KdTree3 index_;
    double max_radius_{0.0};
};

/// min(distance to obstacles at q, r_max); may be <= 0 inside obstacles.
double find_max_radius(const Environment& env, const Vec3& q, double r_max);

/// Uniform free-space sphere: center uniform over the free space by rejection,
/// radius from find_max_radius. Throws std::runtime_error after 1e4 rejects.
Sphere sample_free(const Environment& env, Rng& rng, double r_max);

/// Id of the tree node whose center is closest to q; ties to the lowest id.
int nearest(const TubeTree& tree, const Vec3& q);

/// Moves the sampled sphere toward the nearest sphere until they intersect:
/// while r_new + r_nearest <= d, set d = max(r_new, r_nearest), recenter at
/// q_nearest + d*t, and refresh the radius. Returns nullopt when the loop
/// fails to produce a positive radius within the iteration cap.
std::optional<Sphere> tube_steer(const Environment& env, const Sphere& nearest_sphere,
                                 const Sphere& rand_sphere, double r_max);

/// Ids of all tree nodes whose spheres strictly intersect `fresh`
/// (r_near + r_new > d), ascending.
std::vector<int> near_connect(const TubeTree& tree, const Sphere& fresh);

/// Connection score between adjacent spheres: rho_d * d / env_scale +
/// rho_v * (V_int / sigma_v + epsilon)^-1, with V_int = 0 when disjoint.
double score(const PlannerConfig& cfg, double env_scale, const Sphere& a, const Sphere& b);

/// Wires `new_id` to the feasible near node minimizing cost + score (ties to
/// the lowest id), then re-parents near nodes through the new node whenever
/// that strictly lowers their cost, propagating costs to descendants.
/// Returns false when no obstacle-free candidate exists.
bool rewire(TubeTree& tree, const Environment& env, const PlannerConfig& cfg, double env_scale,
            int new_id, const std::vector<int>& near_ids);

struct PlanResult {
    TubeTree tree;
    Sphere goal_sphere;
    std::optional<int> goal_node;  // candidate minimizing cost + score to goal
    double best_cost{std::numeric_limits<double>::infinity()};
    double env_scale{0.0};
    int samples_drawn{0};
    double wall_time_s{0.0};

    bool success() const { return goal_node.has_value(); }

    /// Root-to-goal-node spheres with the goal sphere appended; empty when
    /// no goal candidate was found.
    std::vector<Sphere> solution_chain() const;
};

/// Tube RRT*: grows the sphere tree for max_samples iterations (or until the
/// time budget, when set) and selects the goal candidate of minimum total
/// cost. Throws std::invalid_argument when an endpoint has no free radius.
PlanResult plan(const Environment& env, const PlannerConfig& cfg, const Vec3& q_init,
                const Vec3& q_goal);

struct BaselineResult {
    std::vector<Vec3> path;  // q_init ... q_goal
    double cost{0.0};        // path length, meters
    int node_count{0};
    int samples_drawn{0};
    double wall_time_s{0.0};
};

/// Vanilla RRT* over points: Euclidean edge cost, steering step r_max, and
/// the standard shrinking-ball connection radius. Same sampling and collision
/// queries as the tube planner.
std::optional<BaselineResult> plan_baseline_rrt_star(const Environment& env,
                                                     const PlannerConfig& cfg,
                                                     const Vec3& q_init, const Vec3& q_goal);

/// Planner result file: config echo, seed, wall time, node list, goal id.
void save_plan_result(const PlanResult& result, const PlannerConfig& cfg,
                      const std::filesystem::path& path);

}  // namespace tuberrt
