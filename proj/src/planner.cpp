#include "tuberrt/planner.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace tuberrt {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

void PlannerConfig::validate() const {
    if (rho_d < 0.0 || rho_v < 0.0) throw std::invalid_argument("PlannerConfig: weights must be >= 0");
    if (!(sigma_v > 0.0)) throw std::invalid_argument("PlannerConfig: sigma_v must be > 0");
    if (!(epsilon > 0.0)) throw std::invalid_argument("PlannerConfig: epsilon must be > 0");
    if (!(r_min > 0.0) || r_min > r_max) {
        throw std::invalid_argument("PlannerConfig: need 0 < r_min <= r_max");
    }
    if (max_samples <= 0) throw std::invalid_argument("PlannerConfig: max_samples must be > 0");
    if (time_budget < 0.0) throw std::invalid_argument("PlannerConfig: time_budget must be >= 0");
}

TubeTree::TubeTree(const Sphere& root) {
    SphereNode n;
    n.sphere = root;
    nodes_.push_back(std::move(n));
    index_.insert(root.center, 0);
    max_radius_ = root.radius;
}

int TubeTree::add_unwired(const Sphere& s) {
    SphereNode n;
    n.sphere = s;
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

void TubeTree::pop_unwired() { nodes_.pop_back(); }

void TubeTree::commit(int id) {
    index_.insert(nodes_[static_cast<std::size_t>(id)].sphere.center, id);
    max_radius_ = std::max(max_radius_, nodes_[static_cast<std::size_t>(id)].sphere.radius);
}

double find_max_radius(const Environment& env, const Vec3& q, double r_max) {
    return std::min(env.distance_to_obstacles(q), r_max);
}

Sphere sample_free(const Environment& env, Rng& rng, double r_max) {
    for (int attempt = 0; attempt < 10000; ++attempt) {
        const Vec3 q = uniform_in_box(rng, env.bounds());
        const double r = find_max_radius(env, q, r_max);
        if (r > 0.0) return Sphere{q, r};
    }
    throw std::runtime_error("sample_free: rejection cap exceeded; free volume too small");
}

int nearest(const TubeTree& tree, const Vec3& q) {
    if (tree.size() == 0) throw std::invalid_argument("nearest: empty tree");
    return tree.index().nearest(q);
}

std::optional<Sphere> tube_steer(const Environment& env, const Sphere& nearest_sphere,
                                 const Sphere& rand_sphere, double r_max) {
    constexpr int kMaxIterations = 32;

    Vec3 q_new = rand_sphere.center;
    double r_new = rand_sphere.radius;
    const Vec3& q_near = nearest_sphere.center;
    const double r_near = nearest_sphere.radius;

    double d = (q_new - q_near).norm();
    if (r_new + r_near > d) return Sphere{q_new, r_new};  // already intersecting

    const Vec3 t = (q_new - q_near) / d;
    int iter = 0;
    while (r_new + r_near <= d) {
        if (++iter > kMaxIterations) return std::nullopt;
        d = std::max(r_new, r_near);
        q_new = q_near + d * t;
        r_new = find_max_radius(env, q_new, r_max);
    }
    if (r_new <= 0.0) return std::nullopt;
    return Sphere{q_new, r_new};
}

std::vector<int> near_connect(const TubeTree& tree, const Sphere& fresh) {
    std::vector<int> candidates;
    tree.index().radius_search(fresh.center, fresh.radius + tree.max_radius(), candidates);
    std::vector<int> out;
    out.reserve(candidates.size());
    for (int id : candidates) {
        const Sphere& s = tree.node(id).sphere;
        const double d = (s.center - fresh.center).norm();
        if (s.radius + fresh.radius > d) out.push_back(id);
    }
    std::sort(out.begin(), out.end());
    return out;
}

double score(const PlannerConfig& cfg, double env_scale, const Sphere& a, const Sphere& b) {
    const double d = (a.center - b.center).norm();
    double v_int = 0.0;
    if (const auto lens = lens_of(a, b)) v_int = lens->volume;
    return cfg.rho_d * d / env_scale + cfg.rho_v / (v_int / cfg.sigma_v + cfg.epsilon);
}

namespace {

/// Recomputes costs below `id` as parent cost + stored edge score, keeping the
/// stored costs bit-identical to a fresh root-to-node accumulation.
void propagate_costs(TubeTree& tree, int id) {
    std::vector<int> stack(tree.node(id).children);
    while (!stack.empty()) {
        const int cur = stack.back();
        stack.pop_back();
        SphereNode& n = tree.mutable_node(cur);
        n.cost = tree.node(n.parent).cost + n.edge_score;
        stack.insert(stack.end(), n.children.begin(), n.children.end());
    }
}

}  // namespace

bool rewire(TubeTree& tree, const Environment& env, const PlannerConfig& cfg, double env_scale,
            int new_id, const std::vector<int>& near_ids) {
    const Sphere new_sphere = tree.node(new_id).sphere;

    int best = -1;
    double best_cost = std::numeric_limits<double>::infinity();
    for (int id : near_ids) {  // ascending ids, strict < keeps the lowest on ties
        const SphereNode& cand = tree.node(id);
        if (!env.segment_obstacle_free(cand.sphere.center, new_sphere.center)) continue;
        const double c = cand.cost + score(cfg, env_scale, cand.sphere, new_sphere);
        if (c < best_cost) {
            best_cost = c;
            best = id;
        }
    }
    if (best < 0) return false;

    SphereNode& fresh = tree.mutable_node(new_id);
    fresh.parent = best;
    fresh.edge_score = score(cfg, env_scale, tree.node(best).sphere, new_sphere);
    fresh.cost = tree.node(best).cost + fresh.edge_score;
    fresh.lens_to_parent = lens_of(tree.node(best).sphere, new_sphere);
    tree.mutable_node(best).children.push_back(new_id);

    // Second pass: pull near nodes through the new sphere when that lowers
    // their cost. Scores are nonnegative, so no candidate can be an ancestor
    // of new_id with a lower cost than new_id itself; re-parenting cannot
    // create a cycle.
    const double new_cost = tree.node(new_id).cost;
    for (int id : near_ids) {
        if (id == best) continue;
        SphereNode& near_node = tree.mutable_node(id);
        const double via_new =
            new_cost + score(cfg, env_scale, new_sphere, near_node.sphere);
        if (via_new >= near_node.cost) continue;
        if (!env.segment_obstacle_free(near_node.sphere.center, new_sphere.center)) continue;

        auto& siblings = tree.mutable_node(near_node.parent).children;
        siblings.erase(std::find(siblings.begin(), siblings.end(), id));
        near_node.parent = new_id;
        near_node.edge_score = score(cfg, env_scale, new_sphere, near_node.sphere);
        near_node.cost = new_cost + near_node.edge_score;
        near_node.lens_to_parent = lens_of(new_sphere, near_node.sphere);
        tree.mutable_node(new_id).children.push_back(id);
        propagate_costs(tree, id);
    }
    return true;
}

std::vector<Sphere> PlanResult::solution_chain() const {
    std::vector<Sphere> chain;
    if (!goal_node) return chain;
    for (int id = *goal_node; id >= 0; id = tree.node(id).parent) {
        chain.push_back(tree.node(id).sphere);
    }
    std::reverse(chain.begin(), chain.end());
    chain.push_back(goal_sphere);
    return chain;
}

PlanResult plan(const Environment& env, const PlannerConfig& cfg, const Vec3& q_init,
                const Vec3& q_goal) {
    cfg.validate();
    if (!env.bounds().contains(q_init) || !env.bounds().contains(q_goal)) {
        throw std::invalid_argument("plan: endpoints must lie inside bounds");
    }
    const double r_init = find_max_radius(env, q_init, cfg.r_max);
    const double r_goal = find_max_radius(env, q_goal, cfg.r_max);
    if (r_init <= 0.0 || r_goal <= 0.0) {
        throw std::invalid_argument("plan: endpoint has no free radius");
    }
    const double env_scale = (q_goal - q_init).norm();
    if (env_scale <= 0.0) throw std::invalid_argument("plan: start and goal coincide");

    const auto t0 = Clock::now();
    PlanResult result{TubeTree(Sphere{q_init, r_init}),
                      Sphere{q_goal, r_goal},
                      std::nullopt,
                      std::numeric_limits<double>::infinity(),
                      env_scale,
                      0,
                      0.0};
    TubeTree& tree = result.tree;
    Rng rng(cfg.seed);

    for (int i = 0; i < cfg.max_samples; ++i) {
        if (cfg.time_budget > 0.0 && seconds_since(t0) >= cfg.time_budget) break;
        ++result.samples_drawn;

        const Sphere rand_sphere = sample_free(env, rng, cfg.r_max);
        const int nearest_id = nearest(tree, rand_sphere.center);
        const auto steered = tube_steer(env, tree.node(nearest_id).sphere, rand_sphere, cfg.r_max);
        if (!steered || steered->radius <= cfg.r_min) continue;

        const auto near_ids = near_connect(tree, *steered);
        const int new_id = tree.add_unwired(*steered);
        if (rewire(tree, env, cfg, env_scale, new_id, near_ids)) {
            tree.commit(new_id);
        } else {
            tree.pop_unwired();
        }
    }

    for (int id = 0; id < tree.size(); ++id) {
        const Sphere& s = tree.node(id).sphere;
        const double d = (s.center - q_goal).norm();
        if (s.radius + r_goal <= d) continue;
        const double total = tree.node(id).cost + score(cfg, env_scale, s, result.goal_sphere);
        if (total < result.best_cost) {
            result.best_cost = total;
            result.goal_node = id;
        }
    }
    result.wall_time_s = seconds_since(t0);
    return result;
}

namespace {

struct PointNode {
    Vec3 p;
    int parent{-1};
    double cost{0.0};
    double edge_len{0.0};
    std::vector<int> children;
};

void propagate_point_costs(std::vector<PointNode>& nodes, int id) {
    std::vector<int> stack(nodes[static_cast<std::size_t>(id)].children);
    while (!stack.empty()) {
        const int cur = stack.back();
        stack.pop_back();
        auto& n = nodes[static_cast<std::size_t>(cur)];
        n.cost = nodes[static_cast<std::size_t>(n.parent)].cost + n.edge_len;
        stack.insert(stack.end(), n.children.begin(), n.children.end());
    }
}

Vec3 sample_free_point(const Environment& env, Rng& rng) {
    for (int attempt = 0; attempt < 10000; ++attempt) {
        const Vec3 q = uniform_in_box(rng, env.bounds());
        if (env.distance_to_obstacles(q) > 0.0) return q;
    }
    throw std::runtime_error("sample_free_point: rejection cap exceeded");
}

}  // namespace

std::optional<BaselineResult> plan_baseline_rrt_star(const Environment& env,
                                                     const PlannerConfig& cfg,
                                                     const Vec3& q_init, const Vec3& q_goal) {
    cfg.validate();
    if (!env.bounds().contains(q_init) || !env.bounds().contains(q_goal)) {
        throw std::invalid_argument("plan_baseline_rrt_star: endpoints must lie inside bounds");
    }
    if (env.distance_to_obstacles(q_init) <= 0.0 || env.distance_to_obstacles(q_goal) <= 0.0) {
        throw std::invalid_argument("plan_baseline_rrt_star: endpoint inside an obstacle");
    }

    const auto t0 = Clock::now();
    const double eta = cfg.r_max;
    const Vec3 span = env.bounds().max() - env.bounds().min();
    // Shrinking-ball constant with mu(X_free) bounded by the bounds volume.
    const double unit_ball = 4.0 * kPi / 3.0;
    const double gamma =
        2.0 * std::cbrt(1.0 + 1.0 / 3.0) * std::cbrt(span.prod() / unit_ball);
    const double r_goal = find_max_radius(env, q_goal, cfg.r_max);

    std::vector<PointNode> nodes;
    nodes.push_back(PointNode{q_init, -1, 0.0, 0.0, {}});
    KdTree3 index;
    index.insert(q_init, 0);
    Rng rng(cfg.seed);
    int samples = 0;

    for (int i = 0; i < cfg.max_samples; ++i) {
        if (cfg.time_budget > 0.0 && seconds_since(t0) >= cfg.time_budget) break;
        ++samples;

        const Vec3 q_rand = sample_free_point(env, rng);
        const int nearest_id = index.nearest(q_rand);
        const Vec3& q_near = nodes[static_cast<std::size_t>(nearest_id)].p;
        Vec3 q_new = q_rand;
        const double dist = (q_rand - q_near).norm();
        if (dist > eta) q_new = q_near + (eta / dist) * (q_rand - q_near);
        if (dist <= 0.0 || env.distance_to_obstacles(q_new) <= 0.0) continue;
        if (!env.segment_obstacle_free(q_near, q_new)) continue;

        const auto card = static_cast<double>(nodes.size());
        const double ball =
            (card > 1.0) ? std::min(gamma * std::cbrt(std::log(card) / card), eta) : eta;
        std::vector<int> near_ids;
        index.radius_search(q_new, ball, near_ids);
        if (near_ids.empty()) near_ids.push_back(nearest_id);
        std::sort(near_ids.begin(), near_ids.end());

        int best = -1;
        double best_cost = std::numeric_limits<double>::infinity();
        for (int id : near_ids) {
            const auto& cand = nodes[static_cast<std::size_t>(id)];
            if (!env.segment_obstacle_free(cand.p, q_new)) continue;
            const double c = cand.cost + (cand.p - q_new).norm();
            if (c < best_cost) {
                best_cost = c;
                best = id;
            }
        }
        if (best < 0) continue;

        const int new_id = static_cast<int>(nodes.size());
        PointNode n;
        n.p = q_new;
        n.parent = best;
        n.edge_len = (nodes[static_cast<std::size_t>(best)].p - q_new).norm();
        n.cost = nodes[static_cast<std::size_t>(best)].cost + n.edge_len;
        nodes.push_back(std::move(n));
        nodes[static_cast<std::size_t>(best)].children.push_back(new_id);
        index.insert(q_new, new_id);

        for (int id : near_ids) {
            if (id == best) continue;
            auto& near_node = nodes[static_cast<std::size_t>(id)];
            const double len = (near_node.p - q_new).norm();
            const double via_new = nodes[static_cast<std::size_t>(new_id)].cost + len;
            if (via_new >= near_node.cost) continue;
            if (!env.segment_obstacle_free(near_node.p, q_new)) continue;
            auto& siblings = nodes[static_cast<std::size_t>(near_node.parent)].children;
            siblings.erase(std::find(siblings.begin(), siblings.end(), id));
            near_node.parent = new_id;
            near_node.edge_len = len;
            near_node.cost = via_new;
            nodes[static_cast<std::size_t>(new_id)].children.push_back(id);
            propagate_point_costs(nodes, id);
        }
    }

    int best = -1;
    double best_total = std::numeric_limits<double>::infinity();
    for (int id = 0; id < static_cast<int>(nodes.size()); ++id) {
        const auto& n = nodes[static_cast<std::size_t>(id)];
        if ((n.p - q_goal).norm() > r_goal) continue;
        if (!env.segment_obstacle_free(n.p, q_goal)) continue;
        const double total = n.cost + (n.p - q_goal).norm();
        if (total < best_total) {
            best_total = total;
            best = id;
        }
    }
    if (best < 0) return std::nullopt;

    BaselineResult result;
    for (int id = best; id >= 0; id = nodes[static_cast<std::size_t>(id)].parent) {
        result.path.push_back(nodes[static_cast<std::size_t>(id)].p);
    }
    std::reverse(result.path.begin(), result.path.end());
    if ((result.path.back() - q_goal).norm() > 0.0) result.path.push_back(q_goal);
    result.cost = best_total;
    result.node_count = static_cast<int>(nodes.size());
    result.samples_drawn = samples;
    result.wall_time_s = seconds_since(t0);
    return result;
}

void save_plan_result(const PlanResult& result, const PlannerConfig& cfg,
                      const std::filesystem::path& path) {
    using ordered_json = nlohmann::ordered_json;
    ordered_json j;
    j["config"] = {{"rho_d", cfg.rho_d},       {"rho_v", cfg.rho_v},
                   {"sigma_v", cfg.sigma_v},   {"epsilon", cfg.epsilon},
                   {"r_min", cfg.r_min},       {"r_max", cfg.r_max},
                   {"max_samples", cfg.max_samples}, {"time_budget", cfg.time_budget}};
    j["seed"] = cfg.seed;
    j["wall_time_s"] = result.wall_time_s;
    j["goal_node_id"] = result.goal_node ? ordered_json(*result.goal_node) : ordered_json(nullptr);
    j["best_cost"] = result.success() ? ordered_json(result.best_cost) : ordered_json(nullptr);
    j["goal_sphere"] = {{"center", {result.goal_sphere.center.x(), result.goal_sphere.center.y(),
                                    result.goal_sphere.center.z()}},
                        {"radius", result.goal_sphere.radius}};
    j["nodes"] = ordered_json::array();
    for (int id = 0; id < result.tree.size(); ++id) {
        const SphereNode& n = result.tree.node(id);
        ordered_json nj;
        nj["id"] = id;
        nj["center"] = {n.sphere.center.x(), n.sphere.center.y(), n.sphere.center.z()};
        nj["radius"] = n.sphere.radius;
        nj["parent"] = (n.parent >= 0) ? ordered_json(n.parent) : ordered_json(nullptr);
        nj["cost"] = n.cost;
        j["nodes"].push_back(std::move(nj));
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_plan_result: cannot open " + path.string());
    out << j.dump(2) << "\n";
}

}  // namespace tuberrt
