#include "hapticsim/geometry.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace hapticsim::geometry {

ConvexShape::ConvexShape(std::vector<Vec3> vertices) : vertices_(std::move(vertices)) {
  if (vertices_.empty()) throw std::invalid_argument("convex shape needs at least one vertex");
  for (const auto& v : vertices_) require_finite(v, "convex shape vertex");
}

ConvexShape ConvexShape::box(const Vec3& h, const Vec3& c) {
  std::vector<Vec3> v;
  v.reserve(8);
  for (int i = 0; i < 8; ++i) {
    v.emplace_back(c.x() + ((i & 1) ? h.x() : -h.x()), c.y() + ((i & 2) ? h.y() : -h.y()),
                   c.z() + ((i & 4) ? h.z() : -h.z()));
  }
  return ConvexShape(std::move(v));
}

namespace {

// GJK over the Minkowski difference A - B of two world-space vertex clouds. Simplex
// vertices remember which source vertices produced them, which gives exact termination
// on polytopes (a repeated support pair means no further descent is possible).

struct SupportVertex {
  Vec3 w;
  int ia;
  int ib;
};

struct Simplex {
  std::array<SupportVertex, 4> v;
  int size = 0;
};

struct SubSimplex {
  Vec3 point = Vec3::Zero();
  std::array<double, 4> lambda{};
  unsigned mask = 0;
};

constexpr double kBarycentricSlack = 1e-13;

// Closest point of conv(simplex) to the origin by enumerating every face of the simplex.
// At most 15 faces; smaller faces are tried first so that ties keep the lower dimension.
SubSimplex closest_on_simplex(const Simplex& s) {
  SubSimplex best;
  double best_d2 = std::numeric_limits<double>::infinity();
  const unsigned full = (1u << s.size) - 1u;
  for (int count = 1; count <= s.size; ++count) {
    for (unsigned mask = 1; mask <= full; ++mask) {
      if (std::popcount(mask) != count) continue;
      std::array<int, 4> idx{};
      int k = 0;
      for (int i = 0; i < s.size; ++i) {
        if (mask & (1u << i)) idx[k++] = i;
      }
      std::array<double, 4> lambda{};
      Vec3 point;
      if (k == 1) {
        point = s.v[idx[0]].w;
        lambda[idx[0]] = 1.0;
      } else {
        const Vec3& w0 = s.v[idx[0]].w;
        Eigen::Matrix<double, 3, Eigen::Dynamic, 0, 3, 3> edges(3, k - 1);
        for (int j = 1; j < k; ++j) edges.col(j - 1) = s.v[idx[j]].w - w0;
        Eigen::ColPivHouseholderQR<Eigen::Matrix<double, 3, Eigen::Dynamic, 0, 3, 3>> qr(edges);
        if (qr.rank() < k - 1) continue;
        const Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1> mu = qr.solve(-w0);
        double sum = 0.0;
        bool inside = true;
        for (int j = 1; j < k; ++j) {
          if (mu(j - 1) < -kBarycentricSlack) inside = false;
          lambda[idx[j]] = std::max(mu(j - 1), 0.0);
          sum += lambda[idx[j]];
        }
        if (1.0 - sum < -kBarycentricSlack) inside = false;
        if (!inside) continue;
        lambda[idx[0]] = std::max(1.0 - sum, 0.0);
        point = w0 + edges * mu;
      }
      const double d2 = point.squaredNorm();
      if (d2 < best_d2) {
        best_d2 = d2;
        best.point = point;
        best.lambda = lambda;
        best.mask = mask;
      }
    }
  }
  return best;
}

struct GjkOutput {
  Vec3 point_a;
  Vec3 point_b;
  double distance;
  bool colliding;
};

int argmax_dot(const std::vector<Vec3>& pts, const Vec3& dir) {
  int best = 0;
  double best_dot = pts[0].dot(dir);
  for (int i = 1; i < static_cast<int>(pts.size()); ++i) {
    const double d = pts[i].dot(dir);
    if (d > best_dot) {
      best_dot = d;
      best = i;
    }
  }
  return best;
}

GjkOutput gjk(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  double scale = 1.0;
  for (const auto& p : a) scale = std::max(scale, p.cwiseAbs().maxCoeff());
  for (const auto& p : b) scale = std::max(scale, p.cwiseAbs().maxCoeff());
  const double contact_eps = 1e-13 * scale;

  Simplex s;
  s.v[0] = {a[0] - b[0], 0, 0};
  s.size = 1;
  std::array<double, 4> lambda{1.0, 0.0, 0.0, 0.0};
  Vec3 v = s.v[0].w;
  bool colliding = false;

  for (int iter = 0; iter < 256; ++iter) {
    const double vv = v.squaredNorm();
    if (std::sqrt(vv) <= contact_eps) {
      colliding = true;
      break;
    }
    const int ia = argmax_dot(a, -v);
    const int ib = argmax_dot(b, v);
    const SupportVertex w{a[ia] - b[ib], ia, ib};

    bool repeated = false;
    for (int i = 0; i < s.size; ++i) repeated |= (s.v[i].ia == ia && s.v[i].ib == ib);
    if (repeated) break;
    if (vv - v.dot(w.w) <= 1e-15 * vv) break;

    Simplex next = s;
    next.v[next.size++] = w;
    const SubSimplex sub = closest_on_simplex(next);
    if (sub.mask == 0 || sub.point.squaredNorm() >= vv) break;

    Simplex reduced;
    std::array<double, 4> reduced_lambda{};
    for (int i = 0; i < next.size; ++i) {
      if (sub.mask & (1u << i)) {
        reduced_lambda[reduced.size] = sub.lambda[i];
        reduced.v[reduced.size++] = next.v[i];
      }
    }
    s = reduced;
    lambda = reduced_lambda;
    v = sub.point;
  }

  Vec3 pa = Vec3::Zero();
  Vec3 pb = Vec3::Zero();
  double total = 0.0;
  for (int i = 0; i < s.size; ++i) total += lambda[i];
  for (int i = 0; i < s.size; ++i) {
    pa += (lambda[i] / total) * a[s.v[i].ia];
    pb += (lambda[i] / total) * b[s.v[i].ib];
  }
  const double d = (pa - pb).norm();
  if (colliding || d <= contact_eps) return {pa, pb, 0.0, true};
  return {pa, pb, d, false};
}

std::vector<Vec3> to_world(const ConvexShape& shape, const Pose& pose) {
  std::vector<Vec3> out;
  out.reserve(shape.vertices().size());
  for (const auto& v : shape.vertices()) out.push_back(pose.transform(v));
  return out;
}

bool lexicographically_less(const std::vector<Vec3>& x, const std::vector<Vec3>& y) {
  if (x.size() != y.size()) return x.size() < y.size();
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (int c = 0; c < 3; ++c) {
      if (x[i][c] != y[i][c]) return x[i][c] < y[i][c];
    }
  }
  return false;
}

}  // namespace

ProximityResult closest_points(const ConvexShape& shape_a, const Pose& pose_a,
                               const ConvexShape& shape_b, const Pose& pose_b) {
  require_valid(pose_a, "closest_points pose A");
  require_valid(pose_b, "closest_points pose B");
  const auto wa = to_world(shape_a, pose_a);
  const auto wb = to_world(shape_b, pose_b);
  for (const auto& p : wa) require_finite(p, "closest_points shape A");
  for (const auto& p : wb) require_finite(p, "closest_points shape B");

  // Evaluate in a canonical argument order so that swapping inputs swaps outputs exactly.
  ProximityResult r;
  if (lexicographically_less(wb, wa)) {
    const GjkOutput g = gjk(wb, wa);
    r.point_a = g.point_b;
    r.point_b = g.point_a;
    r.distance = g.distance;
    r.colliding = g.colliding;
  } else {
    const GjkOutput g = gjk(wa, wb);
    r.point_a = g.point_a;
    r.point_b = g.point_b;
    r.distance = g.distance;
    r.colliding = g.colliding;
  }
  return r;
}

ProximityResult entity_distance(const SceneEntity& a, const SceneEntity& b) {
  std::optional<ProximityResult> best;
  for (const auto& sa : a.shapes) {
    for (const auto& sb : b.shapes) {
      ProximityResult r = closest_points(sa, a.pose, sb, b.pose);
      if (r.colliding) {
        best = std::move(r);
        break;
      }
      if (!best || r.distance < best->distance) best = std::move(r);
    }
    if (best && best->colliding) break;
  }
  if (!best) throw std::invalid_argument("entity '" + (a.shapes.empty() ? a.id : b.id) + "' has no shapes");
  best->id_a = a.id;
  best->id_b = b.id;
  return *best;
}

void validate_pair(std::span<const SceneEntity> scene, const CheckGroupPair& pair) {
  if (pair.group_a.empty() || pair.group_b.empty()) {
    throw std::invalid_argument("check group pair has an empty group");
  }
  std::set<std::string> ids;
  for (const auto& e : scene) ids.insert(e.id);
  for (const auto* group : {&pair.group_a, &pair.group_b}) {
    for (const auto& id : *group) {
      if (!ids.contains(id)) throw UnknownEntityError(id);
    }
  }
  const std::set<std::string> a(pair.group_a.begin(), pair.group_a.end());
  for (const auto& id : pair.group_b) {
    if (a.contains(id)) throw std::invalid_argument("entity '" + id + "' is in both check groups");
  }
}

ProximityResult group_min_distance(std::span<const SceneEntity> scene, const CheckGroupPair& pair) {
  validate_pair(scene, pair);
  std::map<std::string, const SceneEntity*> by_id;
  for (const auto& e : scene) by_id.emplace(e.id, &e);

  // std::set iterates in lexicographic order, which realizes the tie-break rule.
  const std::set<std::string> ga(pair.group_a.begin(), pair.group_a.end());
  const std::set<std::string> gb(pair.group_b.begin(), pair.group_b.end());
  std::optional<ProximityResult> best;
  for (const auto& ida : ga) {
    for (const auto& idb : gb) {
      ProximityResult r = entity_distance(*by_id.at(ida), *by_id.at(idb));
      if (r.colliding) return r;
      if (!best || r.distance < best->distance) best = std::move(r);
    }
  }
  return *best;
}

double distance_in_safety_zone(const ProximityResult& result, double margin) {
  if (!(margin > 0.0) || !std::isfinite(margin)) {
    throw std::invalid_argument("safety margin must be positive and finite");
  }
  return std::max(0.0, margin - result.distance);
}

Scene::Scene(std::vector<SceneEntity> entities, std::vector<CheckGroupPair> groups) {
  for (auto& e : entities) add(std::move(e));
  for (auto& g : groups) add_check_group(std::move(g));
}

void Scene::add(SceneEntity entity) {
  if (entity.id.empty()) throw std::invalid_argument("scene entity id must not be empty");
  if (contains(entity.id)) throw std::invalid_argument("duplicate entity id '" + entity.id + "'");
  if (entity.shapes.empty()) throw std::invalid_argument("entity '" + entity.id + "' has no shapes");
  require_valid(entity.pose, "entity '" + entity.id + "' pose");
  entities_.push_back(std::move(entity));
}

void Scene::add_check_group(CheckGroupPair pair) {
  validate_pair(entities_, pair);
  groups_.push_back(std::move(pair));
}

const SceneEntity& Scene::entity(const std::string& id) const {
  for (const auto& e : entities_) {
    if (e.id == id) return e;
  }
  throw UnknownEntityError(id);
}

bool Scene::contains(const std::string& id) const {
  return std::any_of(entities_.begin(), entities_.end(), [&](const auto& e) { return e.id == id; });
}

void Scene::set_pose(const std::string& id, const Pose& pose) {
  for (auto& e : entities_) {
    if (e.id == id) {
      e.pose = pose;
      return;
    }
  }
  throw UnknownEntityError(id);
}

}  // namespace hapticsim::geometry
