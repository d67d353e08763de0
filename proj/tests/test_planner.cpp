#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "tuberrt/planner.hpp"

#include <cmath>
#include <set>

using namespace tuberrt;

namespace {

Environment empty_world(double side = 100.0) {
    return Environment(Aabb(Vec3::Constant(-side / 2), Vec3::Constant(side / 2)), {});
}

Environment pillar_world(int count, std::uint64_t seed) {
    WorldGenConfig cfg;
    cfg.extents = Vec3(25, 25, 3);
    cfg.footprint = Vec3(1, 1, 3);
    cfg.obstacle_count = count;
    cfg.seed = seed;
    return generate_world(cfg);
}

PlannerConfig test_config() {
    PlannerConfig cfg;
    cfg.rho_d = 1.0;
    cfg.rho_v = 0.15;
    cfg.sigma_v = 1413.7;
    cfg.epsilon = 0.01;
    cfg.r_min = 0.1;
    cfg.r_max = 1.5;
    cfg.max_samples = 2000;
    cfg.seed = 1;
    return cfg;
}

/// Recomputed root-to-node cost: the sum of score terms along the parent
/// chain, evaluated in root-to-leaf order like the planner accumulates it.
double recomputed_cost(const TubeTree& tree, const PlannerConfig& cfg, double env_scale,
                       int id) {
    std::vector<int> chain;
    for (int cur = id; cur >= 0; cur = tree.node(cur).parent) chain.push_back(cur);
    std::reverse(chain.begin(), chain.end());
    double cost = 0.0;
    for (std::size_t i = 1; i < chain.size(); ++i) {
        cost += score(cfg, env_scale, tree.node(chain[i - 1]).sphere, tree.node(chain[i]).sphere);
    }
    return cost;
}

}  // namespace

TEST_CASE("find_max_radius clamps and signs") {
    const Environment env = empty_world(200.0);
    CHECK(find_max_radius(env, Vec3::Zero(), 2.0) == doctest::Approx(2.0));

    Environment with_obstacle(Aabb(Vec3::Constant(-100.0), Vec3::Constant(100.0)),
                              {Sphere{Vec3(0.7, 0, 0), 1e-6}});
    CHECK(find_max_radius(with_obstacle, Vec3::Zero(), 2.0) ==
          doctest::Approx(0.7 - 1e-6).epsilon(1e-9));

    Environment blocked(Aabb(Vec3::Constant(-100.0), Vec3::Constant(100.0)),
                        {Sphere{Vec3::Zero(), 1.0}});
    CHECK(find_max_radius(blocked, Vec3(0.2, 0, 0), 2.0) <= 0.0);
}

TEST_CASE("sample_free: reproducible, always free, robust to clutter") {
    const Environment env = pillar_world(40, 3);
    Rng rng_a(42), rng_b(42);
    for (int i = 0; i < 50; ++i) {
        const Sphere a = sample_free(env, rng_a, 1.5);
        const Sphere b = sample_free(env, rng_b, 1.5);
        CHECK(a.center == b.center);
        CHECK(a.radius == b.radius);
        CHECK(a.radius > 0.0);
        CHECK(env.distance_to_obstacles_brute(a.center) > 0.0);
    }

    // Mostly-blocked world: one box covering all but a thin free slab.
    Environment tight(Aabb(Vec3::Zero(), Vec3(10, 10, 10)),
                      {Aabb(Vec3(0, 0, 0.5), Vec3(10, 10, 10))});
    Rng rng_c(7);
    for (int i = 0; i < 20; ++i) {
        const Sphere s = sample_free(tight, rng_c, 2.0);
        CHECK(tight.distance_to_obstacles_brute(s.center) > 0.0);
        CHECK(s.center.z() < 0.5);
    }
}

TEST_CASE("nearest matches a linear scan") {
    TubeTree tree(Sphere{Vec3::Zero(), 1.0});
    CHECK(nearest(tree, Vec3(9, 9, 9)) == 0);

    Rng rng(5);
    std::vector<Vec3> centers{Vec3::Zero()};
    for (int i = 1; i < 100; ++i) {
        const Vec3 p(uniform(rng, -10, 10), uniform(rng, -10, 10), uniform(rng, -10, 10));
        const int id = tree.add_unwired(Sphere{p, 0.5});
        tree.mutable_node(id).parent = 0;
        tree.commit(id);
        centers.push_back(p);
    }
    for (int i = 0; i < 200; ++i) {
        const Vec3 q(uniform(rng, -12, 12), uniform(rng, -12, 12), uniform(rng, -12, 12));
        CHECK(nearest(tree, q) == oracles::brute_nearest(centers, q));
    }
    // Query coinciding with a stored center returns that node.
    CHECK(nearest(tree, centers[37]) == 37);
}

TEST_CASE("tube_steer: already-intersecting sample returned unchanged") {
    const Environment env = empty_world();
    const Sphere near_sphere{Vec3::Zero(), 1.0};
    const Sphere rand_sphere{Vec3(1.5, 0, 0), 1.0};
    const auto steered = tube_steer(env, near_sphere, rand_sphere, 2.0);
    REQUIRE(steered.has_value());
    CHECK(steered->center == rand_sphere.center);
    CHECK(steered->radius == rand_sphere.radius);
}

TEST_CASE("tube_steer: hand-traced pull toward the nearest sphere") {
    // Large empty world; radii clamp at r_max = 2. Sample at (5,0,0) with
    // radius 2 against nearest ((0,0,0), 1): one iteration moves the center
    // to d = max(2,1) = 2 along t = +x and re-clamps the radius to 2; then
    // 2 + 1 > 2 stops the loop.
    const Environment env = empty_world(1000.0);
    const Sphere near_sphere{Vec3::Zero(), 1.0};
    const Sphere rand_sphere{Vec3(5, 0, 0), find_max_radius(env, Vec3(5, 0, 0), 2.0)};
    REQUIRE(rand_sphere.radius == doctest::Approx(2.0));

    const auto steered = tube_steer(env, near_sphere, rand_sphere, 2.0);
    REQUIRE(steered.has_value());
    CHECK(steered->center.isApprox(Vec3(2, 0, 0), 1e-12));
    CHECK(steered->radius == doctest::Approx(2.0));
}

TEST_CASE("tube_steer: rejects when the pulled-back center is inside an obstacle") {
    // The loop parks the center at d = max(r_new, r_near) = 0.5, which is
    // inside the box; the refreshed radius stays negative, the condition
    // never clears, and the iteration cap rejects the sample.
    Environment env(Aabb(Vec3::Constant(-100.0), Vec3::Constant(100.0)),
                    {Aabb(Vec3(0.4, -5, -5), Vec3(3, 5, 5))});
    const Sphere near_sphere{Vec3::Zero(), 0.5};
    const Sphere rand_sphere{Vec3(10, 0, 0), 0.4};
    CHECK_FALSE(tube_steer(env, near_sphere, rand_sphere, 2.0).has_value());
}

TEST_CASE("near_connect: strict intersection, tangency excluded") {
    TubeTree tree(Sphere{Vec3::Zero(), 1.0});
    int id = tree.add_unwired(Sphere{Vec3(5, 0, 0), 1.0});
    tree.mutable_node(id).parent = 0;
    tree.commit(id);
    // Tangent to node 0 (d = 2 = r + r), intersecting nothing else.
    const auto near_tangent = near_connect(tree, Sphere{Vec3(2, 0, 0), 1.0});
    CHECK(near_tangent.empty());
    // Strictly intersecting node 0 only.
    const auto near_one = near_connect(tree, Sphere{Vec3(1.9, 0, 0), 1.0});
    CHECK(near_one == std::vector<int>{0});
}

TEST_CASE("near_connect matches a pairwise scan on a random tree") {
    Rng rng(23);
    TubeTree tree(Sphere{Vec3::Zero(), 1.0});
    std::vector<Sphere> spheres{tree.node(0).sphere};
    for (int i = 1; i < 50; ++i) {
        const Sphere s{Vec3(uniform(rng, -8, 8), uniform(rng, -8, 8), uniform(rng, -8, 8)),
                       uniform(rng, 0.3, 2.0)};
        const int id = tree.add_unwired(s);
        tree.mutable_node(id).parent = 0;
        tree.commit(id);
        spheres.push_back(s);
    }
    for (int i = 0; i < 100; ++i) {
        const Sphere fresh{Vec3(uniform(rng, -9, 9), uniform(rng, -9, 9), uniform(rng, -9, 9)),
                           uniform(rng, 0.2, 2.5)};
        CHECK(near_connect(tree, fresh) == oracles::brute_near_set(spheres, fresh));
    }
}

TEST_CASE("score: hand-substituted values") {
    PlannerConfig cfg = test_config();
    const Sphere a{Vec3::Zero(), 0.5};
    const Sphere b{Vec3(1, 0, 0), 0.4};  // disjoint: V_int = 0

    cfg.rho_v = 0.0;
    CHECK(score(cfg, 10.0, a, b) == doctest::Approx(0.1).epsilon(1e-12));

    // rho_v = 0.15, sigma_v = 1413.7, eps = 0.01, V_int = sigma_v, d = 1:
    // 0.1 + 0.15 / 1.01 by direct substitution.
    cfg.rho_v = 0.15;
    const double r_sigma = std::cbrt(1413.7 / ((4.0 / 3.0) * kPi));
    const Sphere sa{Vec3::Zero(), r_sigma};
    const Sphere sb{Vec3(1.0, 0, 0), 50.0};  // contains sa entirely: V_int = vol(sa) = sigma_v
    CHECK(score(cfg, 10.0, sa, sb) == doctest::Approx(0.1 + 0.15 / 1.01).epsilon(1e-9));

    // Huge overlap drives the volume term to zero from above.
    const Sphere huge_a{Vec3::Zero(), 40.0};
    const Sphere huge_b{Vec3(1.0, 0, 0), 40.0};
    const double s = score(cfg, 10.0, huge_a, huge_b);
    CHECK(s > 0.1);
    CHECK(s < 0.1 + 1e-3);
}

TEST_CASE("rewire: singleton near set wires to it") {
    const Environment env = empty_world();
    PlannerConfig cfg = test_config();
    TubeTree tree(Sphere{Vec3::Zero(), 1.0});
    const int id = tree.add_unwired(Sphere{Vec3(1.5, 0, 0), 1.0});
    REQUIRE(rewire(tree, env, cfg, 10.0, id, {0}));
    tree.commit(id);
    CHECK(tree.node(id).parent == 0);
    CHECK(tree.node(id).lens_to_parent.has_value());
    CHECK(tree.node(id).cost ==
          doctest::Approx(score(cfg, 10.0, tree.node(0).sphere, tree.node(id).sphere)));
}

TEST_CASE("rewire: picks the exhaustive argmin parent") {
    const Environment env = empty_world();
    PlannerConfig cfg = test_config();
    cfg.rho_v = 0.05;
    const double env_scale = 10.0;

    TubeTree tree(Sphere{Vec3::Zero(), 1.2});
    // Child of root, further along +x but with a bigger cost offset.
    int a = tree.add_unwired(Sphere{Vec3(1.8, 0, 0), 1.2});
    REQUIRE(rewire(tree, env, cfg, env_scale, a, {0}));
    tree.commit(a);

    // New sphere intersecting both; the oracle scans both candidates.
    const Sphere fresh{Vec3(1.0, 0.8, 0), 1.0};
    const auto near_ids = near_connect(tree, fresh);
    REQUIRE(near_ids == std::vector<int>{0, 1});
    const int id = tree.add_unwired(fresh);
    REQUIRE(rewire(tree, env, cfg, env_scale, id, near_ids));
    tree.commit(id);

    int best = -1;
    double best_cost = std::numeric_limits<double>::infinity();
    for (int cand : near_ids) {
        const double c =
            tree.node(cand).cost + score(cfg, env_scale, tree.node(cand).sphere, fresh);
        if (c < best_cost) {
            best_cost = c;
            best = cand;
        }
    }
    CHECK(tree.node(id).parent == best);
    CHECK(tree.node(id).cost == doctest::Approx(best_cost));
}

TEST_CASE("rewire: obstacle-blocked candidate falls back to the feasible one") {
    // Hand-built tree: candidate 1 is cheap but a wall blocks the segment
    // between its center and the new sphere; candidate 0 stays feasible.
    Environment env(Aabb(Vec3::Constant(-50.0), Vec3::Constant(50.0)),
                    {Aabb(Vec3(4.9, -0.5, -50), Vec3(5.1, 0.5, 50))});
    PlannerConfig cfg = test_config();
    const double env_scale = 10.0;

    TubeTree tree(Sphere{Vec3(5, 3, 0), 2.5});  // segment to fresh clears the wall
    int cheap = tree.add_unwired(Sphere{Vec3(4, 0, 0), 3.0});  // hand-placed, not radius-valid
    tree.mutable_node(cheap).parent = 0;
    tree.mutable_node(cheap).cost = 0.0;  // artificially cheap, but behind the wall
    tree.commit(cheap);

    const Sphere fresh{Vec3(6.5, 0, 0), 1.0};
    const auto near_ids = near_connect(tree, fresh);
    REQUIRE(near_ids == std::vector<int>{0, 1});
    REQUIRE(env.segment_obstacle_free(tree.node(0).sphere.center, fresh.center));
    REQUIRE_FALSE(env.segment_obstacle_free(tree.node(cheap).sphere.center, fresh.center));
    const int id = tree.add_unwired(fresh);
    REQUIRE(rewire(tree, env, cfg, env_scale, id, near_ids));
    tree.commit(id);
    CHECK(tree.node(id).parent == 0);  // wall rules out the cheap candidate

    // With no free candidate at all, wiring fails.
    TubeTree walled(Sphere{Vec3(4, 0, 0), 3.0});
    const int blocked = walled.add_unwired(fresh);
    CHECK_FALSE(rewire(walled, env, cfg, env_scale, blocked, {0}));
}

TEST_CASE("rewire with rho_v = 0 reduces to normalized-distance argmin") {
    const Environment env = empty_world();
    PlannerConfig cfg = test_config();
    cfg.rho_v = 0.0;
    const double env_scale = 20.0;

    Rng rng(31);
    TubeTree tree(Sphere{Vec3::Zero(), 1.5});
    for (int i = 1; i < 40; ++i) {
        const Sphere rand_sphere{
            Vec3(uniform(rng, -6, 6), uniform(rng, -6, 6), uniform(rng, -6, 6)),
            uniform(rng, 0.8, 1.5)};
        const int near_id = nearest(tree, rand_sphere.center);
        const auto steered = tube_steer(env, tree.node(near_id).sphere, rand_sphere, 1.5);
        if (!steered) continue;
        const auto near_ids = near_connect(tree, *steered);
        const int id = tree.add_unwired(*steered);
        if (!rewire(tree, env, cfg, env_scale, id, near_ids)) {
            tree.pop_unwired();
            continue;
        }
        tree.commit(id);

        // Independent argmin over cost + rho_d * d / env_scale.
        int best = -1;
        double best_cost = std::numeric_limits<double>::infinity();
        for (int cand : near_ids) {
            const double c = tree.node(cand).cost +
                             cfg.rho_d *
                                 (tree.node(cand).sphere.center - steered->center).norm() /
                                 env_scale;
            if (c < best_cost) {
                best_cost = c;
                best = cand;
            }
        }
        CHECK(tree.node(id).parent == best);
    }
}

TEST_CASE("plan: goal sphere intersecting the init sphere is a one-edge solve") {
    const Environment env = empty_world(30.0);
    PlannerConfig cfg = test_config();
    cfg.r_max = 5.0;
    cfg.max_samples = 10;
    const PlanResult result = plan(env, cfg, Vec3(-2, 0, 0), Vec3(2, 0, 0));
    REQUIRE(result.success());
    const auto chain = result.solution_chain();
    CHECK(chain.front().center.isApprox(Vec3(-2, 0, 0)));
    CHECK(chain.back().center.isApprox(Vec3(2, 0, 0)));
}

TEST_CASE("plan: empty world gives near-straight center paths") {
    const Environment env = empty_world(26.0);
    PlannerConfig cfg = test_config();
    cfg.r_max = 2.0;
    cfg.max_samples = 2000;
    const Vec3 start(-10, 0, 0);
    const Vec3 goal(10, 0, 0);
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        cfg.seed = seed;
        const PlanResult result = plan(env, cfg, start, goal);
        REQUIRE(result.success());
        const auto chain = result.solution_chain();
        std::vector<Vec3> centers;
        for (const auto& s : chain) centers.push_back(s.center);
        CHECK(path_length(centers) <= 1.2 * (goal - start).norm());
    }
}

TEST_CASE("plan: fully walled-off goal yields no candidate") {
    Environment env(Aabb(Vec3::Zero(), Vec3(20, 10, 5)),
                    {Aabb(Vec3(9.5, 0, 0), Vec3(10.5, 10, 5))});
    PlannerConfig cfg = test_config();
    cfg.max_samples = 800;
    const PlanResult result = plan(env, cfg, Vec3(2, 5, 2.5), Vec3(18, 5, 2.5));
    CHECK_FALSE(result.success());
    CHECK(result.solution_chain().empty());
}

TEST_CASE("plan: infeasible endpoints raise invalid-problem errors") {
    Environment env(Aabb(Vec3::Zero(), Vec3(10, 10, 10)), {Sphere{Vec3(5, 5, 5), 1.0}});
    PlannerConfig cfg = test_config();
    CHECK_THROWS_AS(plan(env, cfg, Vec3(5, 5, 5), Vec3(9, 9, 9)), std::invalid_argument);
    CHECK_THROWS_AS(plan(env, cfg, Vec3(1, 1, 1), Vec3(1, 1, 1)), std::invalid_argument);
    CHECK_THROWS_AS(plan(env, cfg, Vec3(-5, 1, 1), Vec3(9, 9, 9)), std::invalid_argument);
}

TEST_CASE("plan: structural invariants hold on seeded runs") {
    PlannerConfig cfg = test_config();
    cfg.max_samples = 800;
    for (std::uint64_t seed : {11ULL, 12ULL, 13ULL}) {
        const Environment env = pillar_world(40, seed);
        cfg.seed = seed;
        const Vec3 start = default_start(env.bounds());
        const Vec3 goal = default_goal(env.bounds());
        const PlanResult result = plan(env, cfg, start, goal);
        const TubeTree& tree = result.tree;

        for (int id = 1; id < tree.size(); ++id) {
            const SphereNode& n = tree.node(id);
            const SphereNode& p = tree.node(n.parent);
            // Strict intersection with the parent, witnessed by the lens.
            REQUIRE(n.lens_to_parent.has_value());
            CHECK(n.lens_to_parent->volume > 0.0);
            CHECK(n.sphere.radius + p.sphere.radius >
                  (n.sphere.center - p.sphere.center).norm());
            // Obstacle-free center segment.
            CHECK(env.segment_obstacle_free_brute(n.sphere.center, p.sphere.center));
            // Radius bounds (root is endpoint-derived, not sampled).
            CHECK(n.sphere.radius > cfg.r_min);
            CHECK(n.sphere.radius <= cfg.r_max);
            // Cost consistency.
            CHECK(std::abs(n.cost - recomputed_cost(tree, cfg, result.env_scale, id)) <= 1e-9);
        }
    }
}

TEST_CASE("plan: best goal cost is non-increasing in the sample budget") {
    const Environment env = pillar_world(20, 77);
    PlannerConfig cfg = test_config();
    const Vec3 start = default_start(env.bounds());
    const Vec3 goal = default_goal(env.bounds());
    for (std::uint64_t seed : {1ULL, 2ULL}) {
        cfg.seed = seed;
        double prev = std::numeric_limits<double>::infinity();
        for (int n : {200, 400, 800, 1600}) {
            cfg.max_samples = n;
            const PlanResult result = plan(env, cfg, start, goal);
            if (result.success()) CHECK(result.best_cost <= prev + 1e-12);
            if (result.success()) prev = result.best_cost;
        }
    }
}

TEST_CASE("baseline RRT*: empty world, deterministic, near-straight") {
    // Slab-shaped empty world: the sample density at n=3000 is high enough
    // for the rewired tree to hug the straight line.
    const Environment env(Aabb(Vec3::Zero(), Vec3(25, 25, 3)), {});
    PlannerConfig cfg = test_config();
    cfg.max_samples = 3000;
    const Vec3 start = default_start(env.bounds());
    const Vec3 goal = default_goal(env.bounds());
    const auto a = plan_baseline_rrt_star(env, cfg, start, goal);
    const auto b = plan_baseline_rrt_star(env, cfg, start, goal);
    REQUIRE(a.has_value());
    REQUIRE(b.has_value());
    CHECK(a->cost == b->cost);
    CHECK(a->path.size() == b->path.size());
    CHECK(a->cost <= 1.2 * (goal - start).norm());
    CHECK(a->path.front().isApprox(start));
    CHECK(a->path.back().isApprox(goal));
    for (std::size_t i = 1; i < a->path.size(); ++i) {
        CHECK(env.segment_obstacle_free_brute(a->path[i - 1], a->path[i]));
    }
}

TEST_CASE("baseline RRT*: solves cluttered worlds reliably") {
    PlannerConfig cfg = test_config();
    cfg.max_samples = 3000;
    int successes = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const Environment env = pillar_world(20, 500 + seed);
        cfg.seed = seed;
        const auto result =
            plan_baseline_rrt_star(env, cfg, default_start(env.bounds()), default_goal(env.bounds()));
        if (result) ++successes;
    }
    CHECK(successes >= 8);
}
