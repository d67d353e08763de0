#include "tuberrt/bench.hpp"
#include "tuberrt/environment.hpp"
#include "tuberrt/homotopy.hpp"
#include "tuberrt/planner.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>

namespace {

using namespace tuberrt;

Vec3 to_vec3(const std::vector<double>& v, const std::string& flag) {
    if (v.size() != 3) throw CLI::ValidationError(flag, "expected three comma-separated values");
    return Vec3(v[0], v[1], v[2]);
}

/// Terminal cross-section: M vertices on a circle orthogonal to `tangent`,
/// centered at `anchor`, sized to stay inside the endpoint sphere.
Terminal make_terminal(const Vec3& anchor, const Vec3& tangent, double radius, int m) {
    Terminal t;
    if (m == 1) {
        t.vertices.push_back(anchor);
        return t;
    }
    const Vec3 n = tangent.normalized();
    int axis = 0;
    n.cwiseAbs().minCoeff(&axis);
    const Vec3 u = Vec3::Unit(axis).cross(n).normalized();
    const Vec3 v = n.cross(u);
    for (int k = 0; k < m; ++k) {
        const double a = 2.0 * kPi * k / m;
        t.vertices.push_back(anchor + radius * (std::cos(a) * u + std::sin(a) * v));
    }
    return t;
}

int cmd_gen_world(const std::vector<double>& size, int obstacles, std::uint64_t seed,
                  const std::vector<double>& footprint, const std::string& out) {
    WorldGenConfig cfg;
    cfg.extents = to_vec3(size, "--size");
    cfg.obstacle_count = obstacles;
    cfg.seed = seed;
    cfg.footprint = footprint.empty() ? Vec3(1.0, 1.0, cfg.extents.z())
                                      : to_vec3(footprint, "--footprint");
    const Environment env = generate_world(cfg);
    save_world(env, out);
    std::cout << "wrote " << out << " (" << env.obstacles().size() << " obstacles, bounds "
              << cfg.extents.transpose() << ")\n";
    return 0;
}

struct PlanArgs {
    std::string env_path;
    PlannerConfig cfg;
    int paths{0};
    int terminal_verts{4};
    std::string algorithm{"tube"};
    std::vector<double> start, goal;
    std::string out;
    std::string svg;
};

int cmd_plan(const PlanArgs& args) {
    const Environment env = load_world(args.env_path);
    const Vec3 start = args.start.empty() ? default_start(env.bounds())
                                          : to_vec3(args.start, "--start");
    const Vec3 goal = args.goal.empty() ? default_goal(env.bounds())
                                        : to_vec3(args.goal, "--goal");

    if (args.algorithm == "baseline") {
        const auto result = plan_baseline_rrt_star(env, args.cfg, start, goal);
        if (!result) {
            std::cout << "baseline: no path found\n";
            return 1;
        }
        const PathMetrics m = point_path_metrics(env, result->path, args.cfg.r_max);
        std::cout << "baseline: cost " << result->cost << " m, " << result->path.size()
                  << " waypoints, " << result->node_count << " nodes, APL " << m.apl
                  << " MGV " << m.mgv << " VSD " << m.vsd << "\n";
        if (!args.svg.empty()) render_plan_svg(env, {}, result->path, args.svg);
        return 0;
    }

    const PlanResult result = plan(env, args.cfg, start, goal);
    if (!args.out.empty()) save_plan_result(result, args.cfg, args.out);
    if (!result.success()) {
        std::cout << "tube: no goal candidate after " << result.samples_drawn << " samples ("
                  << result.tree.size() << " nodes)\n";
        return 1;
    }

    const auto chain = result.solution_chain();
    const PathMetrics m = chain_metrics(env, chain);
    std::cout << "tube: best cost " << result.best_cost << ", " << chain.size() << " spheres, "
              << result.tree.size() << " nodes, APL " << m.apl << " MGV " << m.mgv << " VSD "
              << m.vsd << " (" << result.wall_time_s << " s)\n";

    std::vector<Vec3> center_path;
    if (chain.size() >= 2) {
        const Vec3 t0 = chain[1].center - chain[0].center;
        const Vec3 t1 = chain[chain.size() - 1].center - chain[chain.size() - 2].center;
        const double r0 = 0.5 * chain.front().radius;
        const double r1 = 0.5 * chain.back().radius;
        const Terminal c0 = make_terminal(start, t0, r0, args.terminal_verts);
        const Terminal c1 = make_terminal(goal, t1, r1, args.terminal_verts);
        const HomotopicPathSet set = build_boundary_paths(env, chain, c0, c1);
        center_path = set.sigma_o;
        if (!args.out.empty()) {
            const auto path_set_file = args.out + ".paths.json";
            save_path_set(set, path_set_file);
            if (args.paths > 0) {
                Rng rng(args.cfg.seed);
                const auto sampled = sample_homotopic_paths(set, args.paths, rng);
                nlohmann::ordered_json j = nlohmann::ordered_json::array();
                for (const auto& p : sampled) {
                    nlohmann::ordered_json pj = nlohmann::ordered_json::array();
                    for (const auto& q : p) pj.push_back({q.x(), q.y(), q.z()});
                    j.push_back(std::move(pj));
                }
                std::ofstream out(args.out + ".homotopic.json");
                out << j.dump(2) << "\n";
            }
        }
        if (!set.boundary_feasible) {
            std::cout << "warning: boundary paths flagged infeasible (a segment grazes an"
                         " obstacle)\n";
        }
    }
    if (!args.svg.empty()) render_plan_svg(env, chain, center_path, args.svg);
    return 0;
}

int cmd_bench(const std::string& spec_path, const std::string& out_dir, int jobs) {
    const ExperimentSpec spec = load_experiment_spec(spec_path);
    const auto records = run_experiment(spec, jobs);
    std::filesystem::create_directories(out_dir);
    const auto csv_path = std::filesystem::path(out_dir) / "records.csv";
    {
        std::ofstream out(csv_path);
        out << records_csv(records);
    }
    {
        std::ofstream out(std::filesystem::path(out_dir) / "timings.csv");
        out << timings_csv(records);
    }
    const auto summary = summarize(records);
    {
        std::ofstream out(std::filesystem::path(out_dir) / "summary.csv");
        out << summary_csv(summary);
    }
    std::cout << "wrote " << records.size() << " records to " << csv_path.string() << "\n";
    for (const auto& row : summary) {
        std::cout << row.algorithm << " rho_v=" << row.rho_v << " obstacles=" << row.obstacles
                  << ": success " << row.successes << "/" << row.trials << ", median APL "
                  << row.apl_med << ", MGV " << row.mgv_med << ", VSD " << row.vsd_med << "\n";
    }
    return 0;
}

int cmd_plots(const std::string& summary_path, const std::string& out_dir) {
    std::ifstream in(summary_path);
    if (!in) throw std::runtime_error("plots: cannot open " + summary_path);
    std::ostringstream buf;
    buf << in.rdbuf();
    emit_plots(parse_summary_csv(buf.str()), out_dir);
    std::cout << "wrote apl.svg mgv.svg vsd.svg success.svg to " << out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tube RRT*: homotopic path sets for robot swarms"};
    app.require_subcommand(1);

    // gen-world
    auto* gen = app.add_subcommand("gen-world", "Generate a random obstacle world");
    std::vector<double> size{25.0, 25.0, 3.0};
    std::vector<double> footprint;
    int obstacles = 40;
    std::uint64_t gen_seed = 0;
    std::string gen_out = "world.json";
    gen->add_option("--size", size, "World extents x,y,z in meters")->delimiter(',');
    gen->add_option("--obstacles", obstacles, "Number of box obstacles");
    gen->add_option("--seed", gen_seed, "Generation seed");
    gen->add_option("--footprint", footprint, "Obstacle extents x,y,z (default 1,1,height)")
        ->delimiter(',');
    gen->add_option("--out", gen_out, "Output world file");

    // plan
    auto* plan_cmd = app.add_subcommand("plan", "Run one planning trial");
    PlanArgs pa;
    plan_cmd->add_option("--env", pa.env_path, "World file")->required();
    plan_cmd->add_option("--seed", pa.cfg.seed, "Planner seed");
    plan_cmd->add_option("--samples", pa.cfg.max_samples, "Sample budget n");
    plan_cmd->add_option("--time-budget", pa.cfg.time_budget, "Wall-clock budget, seconds (0 = off)");
    plan_cmd->add_option("--rho-v", pa.cfg.rho_v, "Gap-volume weight");
    plan_cmd->add_option("--rho-d", pa.cfg.rho_d, "Distance weight");
    plan_cmd->add_option("--sigma-v", pa.cfg.sigma_v, "Volume normalizer, m^3");
    plan_cmd->add_option("--epsilon", pa.cfg.epsilon, "Volume term offset");
    plan_cmd->add_option("--r-min", pa.cfg.r_min, "Minimum accepted sphere radius, m");
    plan_cmd->add_option("--r-max", pa.cfg.r_max, "Maximum sphere radius, m");
    plan_cmd->add_option("--paths", pa.paths, "Sample this many homotopic paths");
    plan_cmd->add_option("--terminal-verts", pa.terminal_verts, "Vertices per terminal (M)");
    plan_cmd->add_option("--algorithm", pa.algorithm, "tube or baseline")
        ->check(CLI::IsMember({"tube", "baseline"}));
    plan_cmd->add_option("--start", pa.start, "Start x,y,z (default: face rule)")->delimiter(',');
    plan_cmd->add_option("--goal", pa.goal, "Goal x,y,z (default: face rule)")->delimiter(',');
    plan_cmd->add_option("--out", pa.out, "Planner result file (JSON)");
    plan_cmd->add_option("--svg", pa.svg, "Top-down SVG rendering");

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "Run a seeded experiment batch");
    std::string spec_path, bench_out = "bench-out";
    int jobs = 1;
    bench_cmd->add_option("--spec", spec_path, "Experiment spec (JSON)")->required();
    bench_cmd->add_option("--out-dir", bench_out, "Output directory");
    bench_cmd->add_option("--jobs", jobs, "Concurrent trials");

    // plots
    auto* plots_cmd = app.add_subcommand("plots", "Render metric panels from a summary CSV");
    std::string summary_path, plots_out = "plots";
    plots_cmd->add_option("--summary", summary_path, "summary.csv from bench")->required();
    plots_cmd->add_option("--out-dir", plots_out, "Output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_world(size, obstacles, gen_seed, footprint, gen_out);
        if (plan_cmd->parsed()) return cmd_plan(pa);
        if (bench_cmd->parsed()) return cmd_bench(spec_path, bench_out, jobs);
        if (plots_cmd->parsed()) return cmd_plots(summary_path, plots_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
