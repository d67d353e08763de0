#pragma once

#include "tuberrt/environment.hpp"
#include "tuberrt/homotopy.hpp"
#include "tuberrt/planner.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace tuberrt {

/// Seeded batch description: a sweep over obstacle counts and rho_v values,
/// run for each algorithm and trial. The baseline ignores rho_v and runs one
/// cell per obstacle count.
struct ExperimentSpec {
    Vec3 world_size{25.0, 25.0, 3.0};
    Vec3 footprint{1.0, 1.0, 3.0};
    std::vector<int> obstacle_counts{20, 40, 60, 80};
    std::vector<double> rho_v_values{0.0, 0.15};
    std::vector<std::string> algorithms{"tube", "baseline"};
    int trials{30};
    std::uint64_t base_seed{1};
    PlannerConfig planner;  // rho_v and seed are overridden per cell/trial

    void validate() const;
};

ExperimentSpec load_experiment_spec(const std::filesystem::path& path);
void save_experiment_spec(const ExperimentSpec& spec, const std::filesystem::path& path);

/// One planning trial: cell coordinates, seed, and outcome. Metrics are
/// meaningful only when success is true.
struct RunRecord {
    std::string algorithm;
    double rho_v{0.0};
    int obstacles{0};
    int trial{0};
    std::uint64_t seed{0};
    bool success{false};
    PathMetrics metrics;
    double best_cost{0.0};
    int node_count{0};
    double wall_time_s{0.0};
};

/// Runs every (cell, trial) pair with trial seed = base_seed + trial; the
/// same seed drives world generation and planning, so runs across algorithms
/// and rho_v values are paired. Deterministic for any job count.
std::vector<RunRecord> run_experiment(const ExperimentSpec& spec, int jobs = 1);

struct SummaryRow {
    std::string algorithm;
    double rho_v{0.0};
    int obstacles{0};
    int trials{0};
    int successes{0};
    double success_rate{0.0};
    // Quartiles over successful trials (linear interpolation between ranks).
    double apl_q1{0.0}, apl_med{0.0}, apl_q3{0.0};
    double mgv_q1{0.0}, mgv_med{0.0}, mgv_q3{0.0};
    double vsd_q1{0.0}, vsd_med{0.0}, vsd_q3{0.0};
};

std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records);

/// Interpolated quantile (type 7) of an unsorted sample; q in [0, 1].
double quantile(std::vector<double> values, double q);

/// Deterministic CSV with a fixed column order and '.' decimals. Wall times
/// are excluded here (they are not reproducible) and go to the timings CSV.
std::string records_csv(const std::vector<RunRecord>& records);
std::string timings_csv(const std::vector<RunRecord>& records);
std::string summary_csv(const std::vector<SummaryRow>& rows);

std::vector<RunRecord> parse_records_csv(const std::string& text);
std::vector<SummaryRow> parse_summary_csv(const std::string& text);

/// One SVG panel per metric (APL/MGV/VSD/success rate) versus obstacle count,
/// one polyline series per (algorithm, rho_v).
void emit_plots(const std::vector<SummaryRow>& summary, const std::filesystem::path& out_dir);

/// Top-down world rendering: box obstacles as rects, sphere obstacles as
/// circles (class "obstacle"), chain spheres as circles (class
/// "path-sphere"), and the center path as a polyline.
std::string render_world_svg(const Environment& env, const std::vector<Sphere>& chain,
                             const std::vector<Vec3>& center_path);
void render_plan_svg(const Environment& env, const std::vector<Sphere>& chain,
                     const std::vector<Vec3>& center_path, const std::filesystem::path& path);

}  // namespace tuberrt
