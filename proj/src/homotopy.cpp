#include "tuberrt/homotopy.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace tuberrt {

Vec3 Terminal::centroid() const {
    Vec3 c = Vec3::Zero();
    for (const auto& v : vertices) c += v;
    return c / static_cast<double>(vertices.size());
}

std::vector<Sphere> extract_center_path(const TubeTree& tree, int goal_node) {
    if (goal_node < 0 || goal_node >= tree.size()) {
        throw std::invalid_argument("extract_center_path: invalid goal node id");
    }
    std::vector<Sphere> chain;
    int guard = tree.size();
    for (int id = goal_node; id >= 0; id = tree.node(id).parent) {
        if (--guard < 0) throw std::invalid_argument("extract_center_path: goal unreachable");
        chain.push_back(tree.node(id).sphere);
    }
    std::reverse(chain.begin(), chain.end());
    return chain;
}

std::vector<IntersectionRecord> intersection_records(const std::vector<Sphere>& chain) {
    if (chain.size() < 2) {
        throw std::invalid_argument("intersection_records: need at least two spheres");
    }
    std::vector<IntersectionRecord> records;
    records.reserve(chain.size() - 1);
    for (std::size_t i = 1; i < chain.size(); ++i) {
        const auto lens = lens_of(chain[i - 1], chain[i]);
        if (!lens || lens->circle_radius <= kGeomTol) {
            throw std::runtime_error("intersection_records: degenerate gap at index " +
                                     std::to_string(i));
        }
        records.push_back(IntersectionRecord{lens->circle_center, lens->circle_radius,
                                             lens->plane_normal, lens->volume});
    }
    return records;
}

namespace {

Vec3 any_perpendicular(const Vec3& n) {
    // Seed axis: the coordinate direction least aligned with n.
    int axis = 0;
    n.cwiseAbs().minCoeff(&axis);
    return Vec3::Unit(axis).cross(n).normalized();
}

/// Frames (u_i, v_i) spanning each disc plane, propagated by projecting the
/// previous u onto the next plane so the family does not twist.
std::vector<std::pair<Vec3, Vec3>> disc_frames(const std::vector<IntersectionRecord>& records) {
    std::vector<std::pair<Vec3, Vec3>> frames;
    frames.reserve(records.size());
    Vec3 u = any_perpendicular(records.front().plane_normal);
    for (const auto& rec : records) {
        const Vec3& n = rec.plane_normal;
        Vec3 projected = u - u.dot(n) * n;
        if (projected.norm() < 1e-12) projected = any_perpendicular(n);
        u = projected.normalized();
        frames.emplace_back(u, n.cross(u));
    }
    return frames;
}

/// Vertex indices sorted by angle about `axis` (frame u, v) around the
/// terminal centroid; index breaks exact ties.
std::vector<int> angular_ranks(const Terminal& terminal, const Vec3& u, const Vec3& v) {
    const Vec3 c = terminal.centroid();
    const int m = terminal.size();
    std::vector<std::pair<double, int>> keyed;
    keyed.reserve(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) {
        const Vec3 w = terminal.vertices[static_cast<std::size_t>(k)] - c;
        keyed.emplace_back(std::atan2(w.dot(v), w.dot(u)), k);
    }
    std::sort(keyed.begin(), keyed.end());
    std::vector<int> order;
    order.reserve(keyed.size());
    for (const auto& [angle, k] : keyed) order.push_back(k);
    return order;
}

}  // namespace

HomotopicPathSet build_boundary_paths(const Environment& env, const std::vector<Sphere>& sigma_c,
                                      const Terminal& start, const Terminal& goal,
                                      const BoundaryOptions& options) {
    if (start.size() != goal.size() || start.size() < 1) {
        throw std::invalid_argument("build_boundary_paths: terminals need matching vertex counts");
    }
    const int num_paths = start.size();
    HomotopicPathSet set;
    set.sigma_c = sigma_c;
    set.records = intersection_records(sigma_c);
    const std::size_t waypoints = sigma_c.size() + 1;  // m+1 points per path

    set.sigma_o.reserve(waypoints);
    set.sigma_o.push_back(options.anchor_at_terminal_centroids ? start.centroid()
                                                               : sigma_c.front().center);
    for (const auto& rec : set.records) set.sigma_o.push_back(rec.center);
    set.sigma_o.push_back(options.anchor_at_terminal_centroids ? goal.centroid()
                                                               : sigma_c.back().center);

    const auto frames = disc_frames(set.records);

    // Slot j of every disc sits at angle offset + 2*pi*j/M in the propagated
    // frame; terminal vertices take slots in their angular order about the
    // path tangent at each end.
    const auto rank0 = angular_ranks(start, frames.front().first, frames.front().second);
    const auto rank1 = angular_ranks(goal, frames.back().first, frames.back().second);
    double offset = 0.0;
    if (num_paths > 1) {
        const Vec3 w = start.vertices[static_cast<std::size_t>(rank0.front())] - start.centroid();
        offset = std::atan2(w.dot(frames.front().second), w.dot(frames.front().first));
    }

    std::vector<int> slot_of_vertex(static_cast<std::size_t>(num_paths));
    for (int j = 0; j < num_paths; ++j) {
        slot_of_vertex[static_cast<std::size_t>(rank0[static_cast<std::size_t>(j)])] = j;
    }

    set.boundary_paths.assign(static_cast<std::size_t>(num_paths), {});
    for (int k = 0; k < num_paths; ++k) {
        const int slot = slot_of_vertex[static_cast<std::size_t>(k)];
        const double angle = offset + 2.0 * kPi * slot / num_paths;
        // A single boundary path collapses onto the disc centers.
        const double ring = (num_paths == 1) ? 0.0 : 1.0;
        auto& path = set.boundary_paths[static_cast<std::size_t>(k)];
        path.reserve(waypoints);
        path.push_back(start.vertices[static_cast<std::size_t>(k)]);
        for (std::size_t i = 0; i < set.records.size(); ++i) {
            const auto& rec = set.records[i];
            const auto& [u, v] = frames[i];
            path.push_back(rec.center + ring * rec.disc_radius *
                                            (std::cos(angle) * u + std::sin(angle) * v));
        }
        path.push_back(goal.vertices[static_cast<std::size_t>(rank1[static_cast<std::size_t>(slot)])]);
    }

    for (const auto& path : set.boundary_paths) {
        for (std::size_t i = 1; i < path.size() && set.boundary_feasible; ++i) {
            if (!env.segment_obstacle_free(path[i - 1], path[i])) set.boundary_feasible = false;
        }
    }
    return set;
}

std::vector<Vec3> interpolate(const HomotopicPathSet& set, std::span<const double> theta) {
    if (static_cast<int>(theta.size()) != set.num_boundary_paths()) {
        throw std::invalid_argument("interpolate: theta size must match boundary path count");
    }
    double sum = 0.0;
    for (double t : theta) {
        if (!(t >= 0.0)) throw std::invalid_argument("interpolate: theta must be nonnegative");
        sum += t;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw std::invalid_argument("interpolate: theta must sum to 1");
    }
    const std::size_t n = set.boundary_paths.front().size();
    std::vector<Vec3> out(n, Vec3::Zero());
    for (std::size_t k = 0; k < theta.size(); ++k) {
        const auto& path = set.boundary_paths[k];
        for (std::size_t i = 0; i < n; ++i) out[i] += theta[k] * path[i];
    }
    return out;
}

std::vector<std::vector<Vec3>> sample_homotopic_paths(const HomotopicPathSet& set, int l,
                                                      Rng& rng) {
    if (l < 1) throw std::invalid_argument("sample_homotopic_paths: l must be >= 1");
    std::vector<std::vector<Vec3>> paths;
    paths.reserve(static_cast<std::size_t>(l));
    for (int i = 0; i < l; ++i) {
        const auto theta = uniform_simplex(rng, set.num_boundary_paths());
        paths.push_back(interpolate(set, theta));
    }
    return paths;
}

namespace {

std::vector<Vec3> center_path_of(const std::vector<Sphere>& chain) {
    std::vector<Vec3> pts;
    pts.reserve(chain.size() + 1);
    pts.push_back(chain.front().center);
    for (const auto& rec : intersection_records(chain)) pts.push_back(rec.center);
    pts.push_back(chain.back().center);
    return pts;
}

double clearance_variance(const Environment& env, const std::vector<Vec3>& pts) {
    std::vector<double> clearance;
    clearance.reserve(pts.size());
    for (const auto& p : pts) clearance.push_back(env.distance_to_obstacles(p));
    const double mean =
        std::accumulate(clearance.begin(), clearance.end(), 0.0) / clearance.size();
    double var = 0.0;
    for (double c : clearance) var += (c - mean) * (c - mean);
    return var / static_cast<double>(clearance.size());
}

}  // namespace

PathMetrics chain_metrics(const Environment& env, const std::vector<Sphere>& chain) {
    if (chain.size() < 2) throw std::invalid_argument("chain_metrics: need at least two spheres");
    const auto sigma_o = center_path_of(chain);
    double r_min = chain.front().radius;
    for (const auto& s : chain) r_min = std::min(r_min, s.radius);
    return PathMetrics{path_length(sigma_o), sphere_volume(r_min),
                       clearance_variance(env, sigma_o)};
}

PathMetrics point_path_metrics(const Environment& env, const std::vector<Vec3>& path,
                               double r_max) {
    if (path.size() < 2) throw std::invalid_argument("point_path_metrics: need >= 2 points");
    double r_min = std::numeric_limits<double>::infinity();
    for (const auto& p : path) r_min = std::min(r_min, find_max_radius(env, p, r_max));
    return PathMetrics{path_length(path), sphere_volume(std::max(0.0, r_min)),
                       clearance_variance(env, path)};
}

PathMetrics compute_metrics(const Environment& env,
                            const std::vector<std::vector<Sphere>>& chains) {
    if (chains.empty()) throw std::invalid_argument("compute_metrics: no solved runs");
    PathMetrics total{0.0, 0.0, 0.0};
    for (const auto& chain : chains) {
        const PathMetrics m = chain_metrics(env, chain);
        total.apl += m.apl;
        total.mgv += m.mgv;
        total.vsd += m.vsd;
    }
    const auto n = static_cast<double>(chains.size());
    return PathMetrics{total.apl / n, total.mgv / n, total.vsd / n};
}

double lemma1_gap(const std::vector<Sphere>& sigma_c) {
    const auto records = intersection_records(sigma_c);
    // L(sigma_c) through the disc centers: each disc center lies on the
    // segment between its two sphere centers, so the two legs sum to the
    // center-to-center distance.
    double len_c = 0.0;
    for (std::size_t i = 1; i < sigma_c.size(); ++i) {
        const auto& rec = records[i - 1];
        len_c += (sigma_c[i].center - rec.center).norm() +
                 (rec.center - sigma_c[i - 1].center).norm();
    }
    std::vector<Vec3> sigma_o;
    sigma_o.reserve(records.size() + 2);
    sigma_o.push_back(sigma_c.front().center);
    for (const auto& rec : records) sigma_o.push_back(rec.center);
    sigma_o.push_back(sigma_c.back().center);
    return len_c - path_length(sigma_o);
}

double lemma1_gap(const HomotopicPathSet& set) { return lemma1_gap(set.sigma_c); }

AllocationResult proposition1_oracle(double v_total, int m_lo, int m_hi, double sigma_v,
                                     double epsilon, int grid) {
    if (!(v_total > 0.0) || m_lo < 2 || m_hi < m_lo || grid < 100) {
        throw std::invalid_argument("proposition1_oracle: invalid arguments");
    }
    const double cell = v_total / grid;
    const auto term = [&](int cells) { return 1.0 / (cells * cell / sigma_v + epsilon); };

    AllocationResult best;
    best.objective = std::numeric_limits<double>::infinity();

    std::vector<int> cells;
    for (int m = m_lo; m <= m_hi; ++m) {
        const int parts = m - 1;
        cells.assign(static_cast<std::size_t>(parts), 1);
        double local_best = std::numeric_limits<double>::infinity();
        std::vector<int> local_alloc;

        // Enumerate all positive integer compositions of `grid` into `parts`
        // cells, accumulating the partial objective on the way down.
        const std::function<void(int, int, double)> enumerate = [&](int idx, int remaining,
                                                                    double partial) {
            if (idx == parts - 1) {
                const double obj = partial + term(remaining);
                if (obj < local_best) {
                    local_best = obj;
                    cells[static_cast<std::size_t>(idx)] = remaining;
                    local_alloc = cells;
                }
                return;
            }
            const int tail = parts - idx - 1;  // cells still to fill, each >= 1
            for (int c = 1; c + tail <= remaining; ++c) {
                cells[static_cast<std::size_t>(idx)] = c;
                enumerate(idx + 1, remaining - c, partial + term(c));
            }
        };
        enumerate(0, grid, 0.0);

        if (local_best < best.objective) {
            best.objective = local_best;
            best.m = m;
            best.allocation.assign(local_alloc.size(), 0.0);
            for (std::size_t i = 0; i < local_alloc.size(); ++i) {
                best.allocation[i] = local_alloc[i] * cell;
            }
        }
    }
    return best;
}

void save_path_set(const HomotopicPathSet& set, const std::filesystem::path& path) {
    using ordered_json = nlohmann::ordered_json;
    const auto vec = [](const Vec3& v) { return ordered_json::array({v.x(), v.y(), v.z()}); };
    ordered_json j;
    j["sigma_c"] = ordered_json::array();
    for (const auto& s : set.sigma_c) {
        j["sigma_c"].push_back({{"center", vec(s.center)}, {"radius", s.radius}});
    }
    j["sigma_o"] = ordered_json::array();
    for (const auto& p : set.sigma_o) j["sigma_o"].push_back(vec(p));
    j["boundary_paths"] = ordered_json::array();
    for (const auto& path_k : set.boundary_paths) {
        ordered_json pj = ordered_json::array();
        for (const auto& p : path_k) pj.push_back(vec(p));
        j["boundary_paths"].push_back(std::move(pj));
    }
    j["records"] = ordered_json::array();
    for (const auto& rec : set.records) {
        j["records"].push_back({{"center", vec(rec.center)},
                                {"disc_radius", rec.disc_radius},
                                {"plane_normal", vec(rec.plane_normal)},
                                {"lens_volume", rec.lens_volume}});
    }
    j["boundary_feasible"] = set.boundary_feasible;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_path_set: cannot open " + path.string());
    out << j.dump(2) << "\n";
}

}  // namespace tuberrt
