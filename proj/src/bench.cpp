#include "tuberrt/bench.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace tuberrt {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string fmt(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

double parse_double(const std::string& s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{}) throw std::runtime_error("CSV: bad number '" + s + "'");
    return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

void ExperimentSpec::validate() const {
    if (trials < 1) throw std::invalid_argument("ExperimentSpec: trials must be >= 1");
    if (obstacle_counts.empty() || rho_v_values.empty() || algorithms.empty()) {
        throw std::invalid_argument("ExperimentSpec: sweeps must be non-empty");
    }
    for (const auto& alg : algorithms) {
        if (alg != "tube" && alg != "baseline") {
            throw std::invalid_argument("ExperimentSpec: unknown algorithm '" + alg + "'");
        }
    }
    planner.validate();
}

ExperimentSpec load_experiment_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_experiment_spec: cannot open " + path.string());
    ordered_json j = ordered_json::parse(in);
    ExperimentSpec spec;
    if (j.contains("world")) {
        const auto& w = j["world"];
        if (w.contains("size")) {
            spec.world_size = Vec3(w["size"][0], w["size"][1], w["size"][2]);
        }
        if (w.contains("footprint")) {
            spec.footprint = Vec3(w["footprint"][0], w["footprint"][1], w["footprint"][2]);
        }
        if (w.contains("obstacle_counts")) {
            spec.obstacle_counts = w["obstacle_counts"].get<std::vector<int>>();
        }
    }
    if (j.contains("planner")) {
        const auto& p = j["planner"];
        auto& cfg = spec.planner;
        cfg.rho_d = p.value("rho_d", cfg.rho_d);
        cfg.sigma_v = p.value("sigma_v", cfg.sigma_v);
        cfg.epsilon = p.value("epsilon", cfg.epsilon);
        cfg.r_min = p.value("r_min", cfg.r_min);
        cfg.r_max = p.value("r_max", cfg.r_max);
        cfg.max_samples = p.value("samples", cfg.max_samples);
        cfg.time_budget = p.value("time_budget", cfg.time_budget);
    }
    if (j.contains("rho_v_values")) spec.rho_v_values = j["rho_v_values"].get<std::vector<double>>();
    if (j.contains("algorithms")) spec.algorithms = j["algorithms"].get<std::vector<std::string>>();
    spec.trials = j.value("trials", spec.trials);
    spec.base_seed = j.value("base_seed", spec.base_seed);
    spec.validate();
    return spec;
}

void save_experiment_spec(const ExperimentSpec& spec, const std::filesystem::path& path) {
    ordered_json j;
    j["world"] = {{"size", {spec.world_size.x(), spec.world_size.y(), spec.world_size.z()}},
                  {"footprint", {spec.footprint.x(), spec.footprint.y(), spec.footprint.z()}},
                  {"obstacle_counts", spec.obstacle_counts}};
    j["planner"] = {{"rho_d", spec.planner.rho_d},     {"sigma_v", spec.planner.sigma_v},
                    {"epsilon", spec.planner.epsilon}, {"r_min", spec.planner.r_min},
                    {"r_max", spec.planner.r_max},     {"samples", spec.planner.max_samples},
                    {"time_budget", spec.planner.time_budget}};
    j["rho_v_values"] = spec.rho_v_values;
    j["algorithms"] = spec.algorithms;
    j["trials"] = spec.trials;
    j["base_seed"] = spec.base_seed;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_experiment_spec: cannot open " + path.string());
    out << j.dump(2) << "\n";
}

namespace {

struct Cell {
    std::string algorithm;
    double rho_v;
    int obstacles;
};

RunRecord run_trial(const ExperimentSpec& spec, const Cell& cell, int trial) {
    RunRecord rec;
    rec.algorithm = cell.algorithm;
    rec.rho_v = cell.rho_v;
    rec.obstacles = cell.obstacles;
    rec.trial = trial;
    rec.seed = spec.base_seed + static_cast<std::uint64_t>(trial);

    WorldGenConfig wcfg;
    wcfg.extents = spec.world_size;
    wcfg.footprint = spec.footprint;
    wcfg.obstacle_count = cell.obstacles;
    wcfg.seed = rec.seed;
    const Environment env = generate_world(wcfg);
    const Vec3 start = default_start(env.bounds());
    const Vec3 goal = default_goal(env.bounds());

    PlannerConfig cfg = spec.planner;
    cfg.rho_v = cell.rho_v;
    cfg.seed = rec.seed;

    try {
        if (cell.algorithm == "tube") {
            const PlanResult result = plan(env, cfg, start, goal);
            rec.wall_time_s = result.wall_time_s;
            rec.node_count = result.tree.size();
            if (result.success()) {
                rec.success = true;
                rec.best_cost = result.best_cost;
                rec.metrics = chain_metrics(env, result.solution_chain());
            }
        } else {
            const auto result = plan_baseline_rrt_star(env, cfg, start, goal);
            if (result) {
                rec.success = true;
                rec.best_cost = result->cost;
                rec.node_count = result->node_count;
                rec.wall_time_s = result->wall_time_s;
                rec.metrics = point_path_metrics(env, result->path, cfg.r_max);
            }
        }
    } catch (const std::exception&) {
        rec.success = false;  // per-trial failures never abort the batch
    }
    return rec;
}

}  // namespace

std::vector<RunRecord> run_experiment(const ExperimentSpec& spec, int jobs) {
    spec.validate();
    std::vector<Cell> cells;
    for (const auto& alg : spec.algorithms) {
        const std::vector<double> rho_vs =
            (alg == "tube") ? spec.rho_v_values : std::vector<double>{0.0};
        for (double rho_v : rho_vs) {
            for (int count : spec.obstacle_counts) cells.push_back(Cell{alg, rho_v, count});
        }
    }

    struct Task {
        int cell;
        int trial;
    };
    std::vector<Task> tasks;
    tasks.reserve(cells.size() * static_cast<std::size_t>(spec.trials));
    for (std::size_t c = 0; c < cells.size(); ++c) {
        for (int t = 0; t < spec.trials; ++t) tasks.push_back(Task{static_cast<int>(c), t});
    }

    std::vector<RunRecord> records(tasks.size());
    const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(tasks.size())));
    if (workers == 1) {
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            records[i] = run_trial(spec, cells[static_cast<std::size_t>(tasks[i].cell)],
                                   tasks[i].trial);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < tasks.size(); i = next.fetch_add(1)) {
                    records[i] = run_trial(spec, cells[static_cast<std::size_t>(tasks[i].cell)],
                                           tasks[i].trial);
                }
            });
        }
        for (auto& th : pool) th.join();
    }
    return records;  // task order is already (cell, trial)-sorted
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("quantile: empty sample");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records) {
    if (records.empty()) throw std::invalid_argument("summarize: no records");
    std::map<std::tuple<std::string, double, int>, std::vector<const RunRecord*>> groups;
    for (const auto& rec : records) {
        groups[{rec.algorithm, rec.rho_v, rec.obstacles}].push_back(&rec);
    }
    std::vector<SummaryRow> rows;
    rows.reserve(groups.size());
    for (const auto& [key, cell] : groups) {
        SummaryRow row;
        row.algorithm = std::get<0>(key);
        row.rho_v = std::get<1>(key);
        row.obstacles = std::get<2>(key);
        row.trials = static_cast<int>(cell.size());
        std::vector<double> apl, mgv, vsd;
        for (const auto* rec : cell) {
            if (!rec->success) continue;
            ++row.successes;
            apl.push_back(rec->metrics.apl);
            mgv.push_back(rec->metrics.mgv);
            vsd.push_back(rec->metrics.vsd);
        }
        row.success_rate = static_cast<double>(row.successes) / row.trials;
        if (row.successes > 0) {
            row.apl_q1 = quantile(apl, 0.25);
            row.apl_med = quantile(apl, 0.5);
            row.apl_q3 = quantile(apl, 0.75);
            row.mgv_q1 = quantile(mgv, 0.25);
            row.mgv_med = quantile(mgv, 0.5);
            row.mgv_q3 = quantile(mgv, 0.75);
            row.vsd_q1 = quantile(vsd, 0.25);
            row.vsd_med = quantile(vsd, 0.5);
            row.vsd_q3 = quantile(vsd, 0.75);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string records_csv(const std::vector<RunRecord>& records) {
    std::string out = "algorithm,rho_v,obstacles,trial,seed,success,apl,mgv,vsd,best_cost,node_count\n";
    for (const auto& r : records) {
        out += r.algorithm + ',' + fmt(r.rho_v) + ',' + std::to_string(r.obstacles) + ',' +
               std::to_string(r.trial) + ',' + std::to_string(r.seed) + ',' +
               (r.success ? "1" : "0") + ',';
        if (r.success) {
            out += fmt(r.metrics.apl) + ',' + fmt(r.metrics.mgv) + ',' + fmt(r.metrics.vsd) +
                   ',' + fmt(r.best_cost);
        } else {
            out += ",,,";
        }
        out += ',' + std::to_string(r.node_count) + '\n';
    }
    return out;
}

std::string timings_csv(const std::vector<RunRecord>& records) {
    std::string out = "algorithm,rho_v,obstacles,trial,wall_time_s\n";
    for (const auto& r : records) {
        out += r.algorithm + ',' + fmt(r.rho_v) + ',' + std::to_string(r.obstacles) + ',' +
               std::to_string(r.trial) + ',' + fmt(r.wall_time_s) + '\n';
    }
    return out;
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
    std::string out =
        "algorithm,rho_v,obstacles,trials,successes,success_rate,"
        "apl_q1,apl_med,apl_q3,mgv_q1,mgv_med,mgv_q3,vsd_q1,vsd_med,vsd_q3\n";
    for (const auto& r : rows) {
        out += r.algorithm + ',' + fmt(r.rho_v) + ',' + std::to_string(r.obstacles) + ',' +
               std::to_string(r.trials) + ',' + std::to_string(r.successes) + ',' +
               fmt(r.success_rate) + ',' + fmt(r.apl_q1) + ',' + fmt(r.apl_med) + ',' +
               fmt(r.apl_q3) + ',' + fmt(r.mgv_q1) + ',' + fmt(r.mgv_med) + ',' +
               fmt(r.mgv_q3) + ',' + fmt(r.vsd_q1) + ',' + fmt(r.vsd_med) + ',' +
               fmt(r.vsd_q3) + '\n';
    }
    return out;
}

std::vector<RunRecord> parse_records_csv(const std::string& text) {
    std::vector<RunRecord> records;
    std::stringstream ss(text);
    std::string line;
    bool header = true;
    while (std::getline(ss, line)) {
        if (header) {
            header = false;
            continue;
        }
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 11) throw std::runtime_error("records CSV: expected 11 fields");
        RunRecord r;
        r.algorithm = f[0];
        r.rho_v = parse_double(f[1]);
        r.obstacles = static_cast<int>(parse_double(f[2]));
        r.trial = static_cast<int>(parse_double(f[3]));
        r.seed = static_cast<std::uint64_t>(parse_double(f[4]));
        r.success = f[5] == "1";
        if (r.success) {
            r.metrics.apl = parse_double(f[6]);
            r.metrics.mgv = parse_double(f[7]);
            r.metrics.vsd = parse_double(f[8]);
            r.best_cost = parse_double(f[9]);
        }
        r.node_count = static_cast<int>(parse_double(f[10]));
        records.push_back(std::move(r));
    }
    return records;
}

std::vector<SummaryRow> parse_summary_csv(const std::string& text) {
    std::vector<SummaryRow> rows;
    std::stringstream ss(text);
    std::string line;
    bool header = true;
    while (std::getline(ss, line)) {
        if (header) {
            header = false;
            continue;
        }
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 15) throw std::runtime_error("summary CSV: expected 15 fields");
        SummaryRow r;
        r.algorithm = f[0];
        r.rho_v = parse_double(f[1]);
        r.obstacles = static_cast<int>(parse_double(f[2]));
        r.trials = static_cast<int>(parse_double(f[3]));
        r.successes = static_cast<int>(parse_double(f[4]));
        r.success_rate = parse_double(f[5]);
        r.apl_q1 = parse_double(f[6]);
        r.apl_med = parse_double(f[7]);
        r.apl_q3 = parse_double(f[8]);
        r.mgv_q1 = parse_double(f[9]);
        r.mgv_med = parse_double(f[10]);
        r.mgv_q3 = parse_double(f[11]);
        r.vsd_q1 = parse_double(f[12]);
        r.vsd_med = parse_double(f[13]);
        r.vsd_q3 = parse_double(f[14]);
        rows.push_back(std::move(r));
    }
    return rows;
}

namespace {

constexpr double kPlotW = 640.0;
constexpr double kPlotH = 420.0;
constexpr double kMargin = 60.0;

struct LinearScale {
    double lo, hi, out_lo, out_hi;
    double operator()(double v) const {
        const double t = (hi > lo) ? (v - lo) / (hi - lo) : 0.5;
        return out_lo + t * (out_hi - out_lo);
    }
};

const char* series_color(std::size_t i) {
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                   "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
    return colors[i % 8];
}

std::string metric_panel_svg(const std::vector<SummaryRow>& summary, const std::string& metric,
                             double SummaryRow::*q1, double SummaryRow::*med,
                             double SummaryRow::*q3, bool use_quartiles) {
    std::map<std::pair<std::string, double>, std::vector<const SummaryRow*>> series;
    double x_lo = 0.0, x_hi = 1.0, y_lo = 0.0, y_hi = 1.0;
    bool any = false;
    for (const auto& row : summary) {
        series[{row.algorithm, row.rho_v}].push_back(&row);
        const double lo = use_quartiles ? row.*q1 : row.*med;
        const double hi = use_quartiles ? row.*q3 : row.*med;
        if (!any) {
            x_lo = x_hi = row.obstacles;
            y_lo = lo;
            y_hi = hi;
            any = true;
        } else {
            x_lo = std::min(x_lo, static_cast<double>(row.obstacles));
            x_hi = std::max(x_hi, static_cast<double>(row.obstacles));
            y_lo = std::min(y_lo, lo);
            y_hi = std::max(y_hi, hi);
        }
    }
    if (y_hi <= y_lo) y_hi = y_lo + 1.0;
    if (x_hi <= x_lo) x_hi = x_lo + 1.0;
    const LinearScale sx{x_lo, x_hi, kMargin, kPlotW - kMargin};
    const LinearScale sy{y_lo, y_hi, kPlotH - kMargin, kMargin};

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kPlotW << "\" height=\""
        << kPlotH << "\" viewBox=\"0 0 " << kPlotW << " " << kPlotH << "\">\n";
    svg << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    // axes
    svg << "  <line class=\"axis\" x1=\"" << kMargin << "\" y1=\"" << kPlotH - kMargin
        << "\" x2=\"" << kPlotW - kMargin << "\" y2=\"" << kPlotH - kMargin
        << "\" stroke=\"black\"/>\n";
    svg << "  <line class=\"axis\" x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\""
        << kMargin << "\" y2=\"" << kPlotH - kMargin << "\" stroke=\"black\"/>\n";
    svg << "  <text x=\"" << kPlotW / 2 << "\" y=\"" << kPlotH - 15
        << "\" text-anchor=\"middle\" font-size=\"14\">obstacles</text>\n";
    svg << "  <text x=\"18\" y=\"" << kPlotH / 2 << "\" text-anchor=\"middle\" font-size=\"14\""
        << " transform=\"rotate(-90 18 " << kPlotH / 2 << ")\">" << metric << "</text>\n";
    for (int tick = 0; tick <= 4; ++tick) {
        const double v = y_lo + (y_hi - y_lo) * tick / 4.0;
        svg << "  <text x=\"" << kMargin - 6 << "\" y=\"" << sy(v) + 4
            << "\" text-anchor=\"end\" font-size=\"11\">" << fmt(std::round(v * 1000.0) / 1000.0)
            << "</text>\n";
    }

    std::size_t idx = 0;
    double legend_y = kMargin;
    for (const auto& [key, rows] : series) {
        const char* color = series_color(idx);
        std::ostringstream points;
        for (const auto* row : rows) points << sx(row->obstacles) << "," << sy(row->*med) << " ";
        svg << "  <polyline class=\"series\" fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"2\" points=\"" << points.str() << "\"/>\n";
        for (const auto* row : rows) {
            if (use_quartiles) {
                svg << "  <line class=\"iqr\" x1=\"" << sx(row->obstacles) << "\" y1=\""
                    << sy(row->*q1) << "\" x2=\"" << sx(row->obstacles) << "\" y2=\""
                    << sy(row->*q3) << "\" stroke=\"" << color << "\" stroke-width=\"1\"/>\n";
            }
            svg << "  <circle class=\"marker\" cx=\"" << sx(row->obstacles) << "\" cy=\""
                << sy(row->*med) << "\" r=\"3.5\" fill=\"" << color << "\"/>\n";
        }
        svg << "  <text x=\"" << kPlotW - kMargin - 150 << "\" y=\"" << legend_y
            << "\" font-size=\"12\" fill=\"" << color << "\">" << key.first
            << " rho_v=" << fmt(key.second) << "</text>\n";
        legend_y += 16.0;
        ++idx;
    }
    svg << "</svg>\n";
    return svg.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("emit_plots: cannot open " + path.string());
    out << content;
}

}  // namespace

void emit_plots(const std::vector<SummaryRow>& summary, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    write_file(out_dir / "apl.svg",
               metric_panel_svg(summary, "APL (m)", &SummaryRow::apl_q1, &SummaryRow::apl_med,
                                &SummaryRow::apl_q3, true));
    write_file(out_dir / "mgv.svg",
               metric_panel_svg(summary, "MGV (m^3)", &SummaryRow::mgv_q1, &SummaryRow::mgv_med,
                                &SummaryRow::mgv_q3, true));
    write_file(out_dir / "vsd.svg",
               metric_panel_svg(summary, "VSD (m^2)", &SummaryRow::vsd_q1, &SummaryRow::vsd_med,
                                &SummaryRow::vsd_q3, true));
    write_file(out_dir / "success.svg",
               metric_panel_svg(summary, "success rate", &SummaryRow::success_rate,
                                &SummaryRow::success_rate, &SummaryRow::success_rate, false));
}

std::string render_world_svg(const Environment& env, const std::vector<Sphere>& chain,
                             const std::vector<Vec3>& center_path) {
    const Vec3 lo = env.bounds().min();
    const Vec3 hi = env.bounds().max();
    const double scale = 800.0 / std::max(hi.x() - lo.x(), hi.y() - lo.y());
    const double w = (hi.x() - lo.x()) * scale;
    const double h = (hi.y() - lo.y()) * scale;
    const auto X = [&](double x) { return (x - lo.x()) * scale; };
    // SVG y grows downward; flip so the world reads map-style.
    const auto Y = [&](double y) { return h - (y - lo.y()) * scale; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
        << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
    svg << "  <rect class=\"world\" x=\"0\" y=\"0\" width=\"" << w << "\" height=\"" << h
        << "\" fill=\"#fafafa\" stroke=\"black\"/>\n";
    for (const auto& obs : env.obstacles()) {
        if (const auto* s = std::get_if<Sphere>(&obs)) {
            svg << "  <circle class=\"obstacle\" cx=\"" << X(s->center.x()) << "\" cy=\""
                << Y(s->center.y()) << "\" r=\"" << s->radius * scale
                << "\" fill=\"#b0b0b0\" stroke=\"#505050\"/>\n";
        } else {
            const Aabb& b = std::get<Aabb>(obs);
            svg << "  <rect class=\"obstacle\" x=\"" << X(b.min().x()) << "\" y=\""
                << Y(b.max().y()) << "\" width=\"" << (b.max().x() - b.min().x()) * scale
                << "\" height=\"" << (b.max().y() - b.min().y()) * scale
                << "\" fill=\"#b0b0b0\" stroke=\"#505050\"/>\n";
        }
    }
    for (const auto& s : chain) {
        svg << "  <circle class=\"path-sphere\" cx=\"" << X(s.center.x()) << "\" cy=\""
            << Y(s.center.y()) << "\" r=\"" << s.radius * scale
            << "\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>\n";
    }
    if (!center_path.empty()) {
        std::ostringstream points;
        for (const auto& p : center_path) points << X(p.x()) << "," << Y(p.y()) << " ";
        svg << "  <polyline class=\"center-path\" fill=\"none\" stroke=\"#d62728\""
            << " stroke-width=\"2\" points=\"" << points.str() << "\"/>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

void render_plan_svg(const Environment& env, const std::vector<Sphere>& chain,
                     const std::vector<Vec3>& center_path, const std::filesystem::path& path) {
    write_file(path, render_world_svg(env, chain, center_path));
}

}  // namespace tuberrt
