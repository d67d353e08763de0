#include "tuberrt/environment.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace tuberrt {

namespace {

using ordered_json = nlohmann::ordered_json;

double sphere_signed_distance(const Sphere& s, const Vec3& p) {
    return (p - s.center).norm() - s.radius;
}

double box_signed_distance(const Aabb& b, const Vec3& p) {
    const Vec3 half = 0.5 * (b.max() - b.min());
    const Vec3 center = 0.5 * (b.max() + b.min());
    const Vec3 q = (p - center).cwiseAbs() - half;
    const double outside = q.cwiseMax(0.0).norm();
    const double inside = std::min(q.maxCoeff(), 0.0);
    return outside + inside;
}

bool segment_hits_box(const Aabb& box, const Vec3& a, const Vec3& b) {
    // Slab clipping of p(t) = a + t (b - a), t in [0, 1]; closed solid, so
    // touching a face counts as a hit.
    double tmin = 0.0;
    double tmax = 1.0;
    const Vec3 d = b - a;
    for (int axis = 0; axis < 3; ++axis) {
        if (std::abs(d[axis]) < 1e-15) {
            if (a[axis] < box.min()[axis] || a[axis] > box.max()[axis]) return false;
            continue;
        }
        double t0 = (box.min()[axis] - a[axis]) / d[axis];
        double t1 = (box.max()[axis] - a[axis]) / d[axis];
        if (t0 > t1) std::swap(t0, t1);
        tmin = std::max(tmin, t0);
        tmax = std::min(tmax, t1);
        if (tmin > tmax) return false;
    }
    return true;
}

}  // namespace

double signed_distance(const Obstacle& obs, const Vec3& p) {
    if (const auto* s = std::get_if<Sphere>(&obs)) return sphere_signed_distance(*s, p);
    return box_signed_distance(std::get<Aabb>(obs), p);
}

bool segment_intersects(const Obstacle& obs, const Vec3& a, const Vec3& b) {
    if (const auto* s = std::get_if<Sphere>(&obs)) {
        return segment_point_distance(s->center, a, b) <= s->radius;
    }
    return segment_hits_box(std::get<Aabb>(obs), a, b);
}

Aabb bounding_box(const Obstacle& obs) {
    if (const auto* s = std::get_if<Sphere>(&obs)) {
        const Vec3 r = Vec3::Constant(s->radius);
        return Aabb(s->center - r, s->center + r);
    }
    return std::get<Aabb>(obs);
}

double face_distance(const Aabb& bounds, const Vec3& p) {
    const double lo = (p - bounds.min()).minCoeff();
    const double hi = (bounds.max() - p).minCoeff();
    return std::min(lo, hi);
}

Environment::Environment(const Aabb& bounds, std::vector<Obstacle> obstacles, WorldMeta meta)
    : bounds_(bounds), obstacles_(std::move(obstacles)), meta_(std::move(meta)) {
    if ((bounds_.max() - bounds_.min()).minCoeff() <= 0.0) {
        throw std::invalid_argument("Environment: bounds must have positive extent");
    }
    std::vector<Aabb> boxes;
    boxes.reserve(obstacles_.size());
    for (std::size_t i = 0; i < obstacles_.size(); ++i) {
        const Aabb box = bounding_box(obstacles_[i]);
        if (!box.intersects(bounds_)) {
            throw std::invalid_argument("Environment: obstacle " + std::to_string(i) +
                                        " does not intersect bounds");
        }
        boxes.push_back(box);
    }
    order_.resize(obstacles_.size());
    std::iota(order_.begin(), order_.end(), 0);
    if (!obstacles_.empty()) bvh_root_ = build_bvh(0, static_cast<int>(obstacles_.size()), boxes);
}

int Environment::build_bvh(int begin, int end, std::vector<Aabb>& boxes) {
    BvhNode node;
    node.box = boxes[static_cast<std::size_t>(order_[static_cast<std::size_t>(begin)])];
    for (int i = begin + 1; i < end; ++i) {
        node.box.extend(boxes[static_cast<std::size_t>(order_[static_cast<std::size_t>(i)])]);
    }
    const int idx = static_cast<int>(bvh_.size());
    bvh_.push_back(node);
    if (end - begin <= 2) {
        bvh_[static_cast<std::size_t>(idx)].begin = begin;
        bvh_[static_cast<std::size_t>(idx)].end = end;
        return idx;
    }
    int axis = 0;
    (node.box.max() - node.box.min()).maxCoeff(&axis);
    const int mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](int lhs, int rhs) {
                         const double cl = boxes[static_cast<std::size_t>(lhs)].center()[axis];
                         const double cr = boxes[static_cast<std::size_t>(rhs)].center()[axis];
                         return cl < cr || (cl == cr && lhs < rhs);
                     });
    const int left = build_bvh(begin, mid, boxes);
    const int right = build_bvh(mid, end, boxes);
    bvh_[static_cast<std::size_t>(idx)].left = left;
    bvh_[static_cast<std::size_t>(idx)].right = right;
    return idx;
}

void Environment::min_distance_rec(int node, const Vec3& p, double& best) const {
    const BvhNode& n = bvh_[static_cast<std::size_t>(node)];
    // Every obstacle in this subtree lies inside n.box, so its signed
    // distance is bounded below by the exterior distance to n.box.
    if (std::sqrt(n.box.squaredExteriorDistance(p)) >= best) return;
    if (n.left < 0) {
        for (int i = n.begin; i < n.end; ++i) {
            const int obs = order_[static_cast<std::size_t>(i)];
            best = std::min(best, signed_distance(obstacles_[static_cast<std::size_t>(obs)], p));
        }
        return;
    }
    min_distance_rec(n.left, p, best);
    min_distance_rec(n.right, p, best);
}

bool Environment::segment_hit_rec(int node, const Vec3& a, const Vec3& b) const {
    const BvhNode& n = bvh_[static_cast<std::size_t>(node)];
    if (!segment_hits_box(n.box, a, b)) return false;
    if (n.left < 0) {
        for (int i = n.begin; i < n.end; ++i) {
            const int obs = order_[static_cast<std::size_t>(i)];
            if (segment_intersects(obstacles_[static_cast<std::size_t>(obs)], a, b)) return true;
        }
        return false;
    }
    return segment_hit_rec(n.left, a, b) || segment_hit_rec(n.right, a, b);
}

double Environment::distance_to_obstacles(const Vec3& p) const {
    if (!bounds_.contains(p)) {
        throw std::domain_error("distance_to_obstacles: point outside bounds");
    }
    double best = face_distance(bounds_, p);
    if (bvh_root_ >= 0) min_distance_rec(bvh_root_, p, best);
    return best;
}

double Environment::distance_to_obstacles_brute(const Vec3& p) const {
    if (!bounds_.contains(p)) {
        throw std::domain_error("distance_to_obstacles: point outside bounds");
    }
    double best = face_distance(bounds_, p);
    for (const auto& obs : obstacles_) best = std::min(best, signed_distance(obs, p));
    return best;
}

bool Environment::segment_obstacle_free(const Vec3& a, const Vec3& b) const {
    if (bvh_root_ < 0) return true;
    return !segment_hit_rec(bvh_root_, a, b);
}

bool Environment::segment_obstacle_free_brute(const Vec3& a, const Vec3& b) const {
    for (const auto& obs : obstacles_) {
        if (segment_intersects(obs, a, b)) return false;
    }
    return true;
}

Vec3 default_start(const Aabb& bounds) {
    const Vec3 mid = bounds.center();
    return Vec3(bounds.min().x() + 2.0, mid.y(), mid.z());
}

Vec3 default_goal(const Aabb& bounds) {
    const Vec3 mid = bounds.center();
    return Vec3(bounds.max().x() - 2.0, mid.y(), mid.z());
}

Environment generate_world(const WorldGenConfig& cfg) {
    if (cfg.obstacle_count < 0 || cfg.extents.minCoeff() <= 0.0) {
        throw std::invalid_argument("generate_world: invalid config");
    }
    if ((cfg.footprint.array() > cfg.extents.array()).any() || cfg.footprint.minCoeff() <= 0.0) {
        throw std::invalid_argument("generate_world: footprint must fit inside extents");
    }
    const Aabb bounds(Vec3::Zero(), cfg.extents);
    const Vec3 start = cfg.start.value_or(default_start(bounds));
    const Vec3 goal = cfg.goal.value_or(default_goal(bounds));
    const Vec3 half = 0.5 * cfg.footprint;
    const bool full_height = cfg.footprint.z() >= cfg.extents.z() - kGeomTol;

    Rng rng(cfg.seed);
    std::vector<Obstacle> obstacles;
    obstacles.reserve(static_cast<std::size_t>(cfg.obstacle_count));
    long rejections = 0;
    const long limit = 10L * std::max(1, cfg.obstacle_count);
    while (static_cast<int>(obstacles.size()) < cfg.obstacle_count) {
        Vec3 center;
        center.x() = uniform(rng, half.x(), cfg.extents.x() - half.x());
        center.y() = uniform(rng, half.y(), cfg.extents.y() - half.y());
        center.z() = full_height ? 0.5 * cfg.extents.z()
                                 : uniform(rng, half.z(), cfg.extents.z() - half.z());
        const Aabb box(center - half, center + half);
        const Obstacle obs{box};
        if (signed_distance(obs, start) < kKeepOutRadius ||
            signed_distance(obs, goal) < kKeepOutRadius) {
            if (++rejections > limit) {
                throw std::runtime_error("generate_world: placement rejection limit exceeded");
            }
            continue;
        }
        obstacles.push_back(obs);
    }
    return Environment(bounds, std::move(obstacles), WorldMeta{cfg.seed, "tube-rrt gen-world"});
}

namespace {

ordered_json vec_to_json(const Vec3& v) { return ordered_json::array({v.x(), v.y(), v.z()}); }

Vec3 vec_from_json(const ordered_json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 3 || !j[0].is_number()) {
        throw ParseError("world file: field '" + where + "' must be a 3-number array");
    }
    return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

const ordered_json& require(const ordered_json& j, const std::string& key,
                            const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) {
        throw ParseError("world file: missing field '" + where + key + "'");
    }
    return *it;
}

int line_of_byte(const std::string& text, std::size_t byte) {
    return 1 + static_cast<int>(std::count(text.begin(),
                                           text.begin() + static_cast<long>(std::min(byte, text.size())),
                                           '\n'));
}

}  // namespace

std::string world_to_string(const Environment& env) {
    ordered_json j;
    j["bounds"] = {{"min", vec_to_json(env.bounds().min())},
                   {"max", vec_to_json(env.bounds().max())}};
    j["obstacles"] = ordered_json::array();
    for (const auto& obs : env.obstacles()) {
        ordered_json o;
        if (const auto* s = std::get_if<Sphere>(&obs)) {
            o["type"] = "sphere";
            o["center"] = vec_to_json(s->center);
            o["radius"] = s->radius;
        } else {
            const Aabb& b = std::get<Aabb>(obs);
            o["type"] = "box";
            o["min"] = vec_to_json(b.min());
            o["max"] = vec_to_json(b.max());
        }
        j["obstacles"].push_back(std::move(o));
    }
    j["meta"] = {{"seed", env.meta().seed}, {"generator", env.meta().generator}};
    return j.dump(2) + "\n";
}

Environment world_from_string(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("world file: JSON parse error at line " +
                         std::to_string(line_of_byte(text, e.byte)) + ": " + e.what());
    }
    const auto& jb = require(j, "bounds", "");
    const Aabb bounds(vec_from_json(require(jb, "min", "bounds."), "bounds.min"),
                      vec_from_json(require(jb, "max", "bounds."), "bounds.max"));
    if ((bounds.max() - bounds.min()).minCoeff() <= 0.0) {
        throw ParseError("world file: bounds.min must be componentwise below bounds.max");
    }

    std::vector<Obstacle> obstacles;
    const auto& jo = require(j, "obstacles", "");
    if (!jo.is_array()) throw ParseError("world file: field 'obstacles' must be an array");
    for (std::size_t i = 0; i < jo.size(); ++i) {
        const std::string where = "obstacles[" + std::to_string(i) + "].";
        const auto& o = jo[i];
        const std::string type = require(o, "type", where).get<std::string>();
        if (type == "sphere") {
            Sphere s;
            s.center = vec_from_json(require(o, "center", where), where + "center");
            s.radius = require(o, "radius", where).get<double>();
            if (!(s.radius > 0.0)) throw ParseError("world file: " + where + "radius must be > 0");
            obstacles.emplace_back(s);
        } else if (type == "box") {
            const Vec3 lo = vec_from_json(require(o, "min", where), where + "min");
            const Vec3 hi = vec_from_json(require(o, "max", where), where + "max");
            if ((hi - lo).minCoeff() <= 0.0) {
                throw ParseError("world file: " + where + "min must be componentwise below max");
            }
            obstacles.emplace_back(Aabb(lo, hi));
        } else {
            throw ParseError("world file: " + where + "type must be 'sphere' or 'box'");
        }
    }

    WorldMeta meta;
    if (auto it = j.find("meta"); it != j.end()) {
        meta.seed = it->value("seed", std::uint64_t{0});
        meta.generator = it->value("generator", std::string{"manual"});
    }
    return Environment(bounds, std::move(obstacles), std::move(meta));
}

Environment load_world(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_world: cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return world_from_string(buf.str());
}

void save_world(const Environment& env, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_world: cannot open " + path.string());
    out << world_to_string(env);
}

}  // namespace tuberrt
