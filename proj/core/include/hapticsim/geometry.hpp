#pragma once

#include "hapticsim/pose.hpp"

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hapticsim::geometry {

/// Convex hull of a non-empty vertex cloud, vertices in the owning entity's frame.
/// A single vertex (or all-identical vertices) is a valid point shape.
class ConvexShape {
 public:
  explicit ConvexShape(std::vector<Vec3> vertices);

  /// Axis-aligned box centered at `center` in the local frame.
  static ConvexShape box(const Vec3& half_extents, const Vec3& center = Vec3::Zero());

  const std::vector<Vec3>& vertices() const { return vertices_; }

 private:
  std::vector<Vec3> vertices_;
};

enum class EntityKind { Solid, RobotLink, MannequinSegment };

/// Rigid compound of convex shapes placed in the scene.
struct SceneEntity {
  std::string id;
  std::vector<ConvexShape> shapes;
  Pose pose;
  EntityKind kind = EntityKind::Solid;
};

/// Two disjoint, non-empty sets of entity ids tested against each other.
struct CheckGroupPair {
  std::vector<std::string> group_a;
  std::vector<std::string> group_b;
};

struct ProximityResult {
  Vec3 point_a = Vec3::Zero();  // world, on the group-A entity
  Vec3 point_b = Vec3::Zero();  // world, on the group-B entity
  double distance = 0.0;        // zero iff colliding
  bool colliding = false;
  std::string id_a;
  std::string id_b;
};

class UnknownEntityError : public std::out_of_range {
 public:
  explicit UnknownEntityError(std::string id)
      : std::out_of_range("unknown entity id '" + id + "'"), id_(std::move(id)) {}
  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

/// Exact minimum distance between the convex hulls of two placed shapes.
/// Symmetric: swapping the arguments swaps the returned points bit-for-bit.
ProximityResult closest_points(const ConvexShape& shape_a, const Pose& pose_a,
                               const ConvexShape& shape_b, const Pose& pose_b);

/// Minimum over every shape pair of two compound entities; ids are copied into the result.
ProximityResult entity_distance(const SceneEntity& a, const SceneEntity& b);

/// Minimal-distance pair over groupA x groupB. Colliding pairs short-circuit; ties go to
/// the lexicographically smallest (idA, idB).
ProximityResult group_min_distance(std::span<const SceneEntity> scene, const CheckGroupPair& pair);

/// Penetration depth into the safety band of width `margin`: max(0, margin - distance).
double distance_in_safety_zone(const ProximityResult& result, double margin);

/// Checks the structural invariants of a pair (non-empty, disjoint, known ids).
void validate_pair(std::span<const SceneEntity> scene, const CheckGroupPair& pair);

/// Entities plus the declared check-group pairs.
class Scene {
 public:
  Scene() = default;
  Scene(std::vector<SceneEntity> entities, std::vector<CheckGroupPair> groups);

  void add(SceneEntity entity);
  void add_check_group(CheckGroupPair pair);

  const std::vector<SceneEntity>& entities() const { return entities_; }
  const std::vector<CheckGroupPair>& check_groups() const { return groups_; }

  const SceneEntity& entity(const std::string& id) const;
  bool contains(const std::string& id) const;
  void set_pose(const std::string& id, const Pose& pose);

 private:
  std::vector<SceneEntity> entities_;
  std::vector<CheckGroupPair> groups_;
};

}  // namespace hapticsim::geometry
