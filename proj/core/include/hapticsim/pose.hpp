#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <string_view>

namespace hapticsim {

using Vec3 = Eigen::Vector3d;
using Quat = Eigen::Quaterniond;
using Mat3 = Eigen::Matrix3d;

/// Rigid placement: position in meters plus a unit quaternion (w, x, y, z).
struct Pose {
  Vec3 position = Vec3::Zero();
  Quat orientation = Quat::Identity();

  Pose() = default;
  Pose(const Vec3& p, const Quat& q) : position(p), orientation(q) {}

  static Pose identity() { return {}; }
  static Pose translation(const Vec3& p) { return {p, Quat::Identity()}; }

  /// Maps a point expressed in this frame into the parent frame.
  Vec3 transform(const Vec3& local) const { return position + orientation * local; }
  Vec3 rotate(const Vec3& v) const { return orientation * v; }

  /// Frame composition: (*this) then rhs, i.e. parent_T_child = parent_T_this * this_T_child.
  Pose operator*(const Pose& rhs) const {
    return {position + orientation * rhs.position, orientation * rhs.orientation};
  }

  Pose inverse() const {
    const Quat inv = orientation.conjugate();
    return {-(inv * position), inv};
  }

  /// Finite components and quaternion norm within 1e-9 of one.
  bool valid() const;

  friend bool operator==(const Pose& a, const Pose& b) {
    return a.position == b.position && a.orientation.coeffs() == b.orientation.coeffs();
  }
};

bool is_finite(const Vec3& v);
bool is_finite(const Quat& q);

/// Quaternion whose vector part is exactly zero; composing with it is skipped so
/// that "no rotation" never perturbs an orientation by rounding.
inline bool is_exact_identity(const Quat& q) { return q.vec().isZero(0.0); }

/// Throws std::invalid_argument naming `what` if the pose is not valid.
void require_valid(const Pose& pose, std::string_view what);
void require_finite(const Vec3& v, std::string_view what);

/// Angle of the rotation taking `from` to `to`, in [0, pi].
double angular_distance(const Quat& from, const Quat& to);

/// Rotation vector (axis * angle) of `q`, angle in [0, pi].
Vec3 rotation_vector(const Quat& q);

}  // namespace hapticsim
