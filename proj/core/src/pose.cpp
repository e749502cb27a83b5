#include "hapticsim/pose.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace hapticsim {

bool is_finite(const Vec3& v) { return v.allFinite(); }

bool is_finite(const Quat& q) { return q.coeffs().allFinite(); }

bool Pose::valid() const {
  return is_finite(position) && is_finite(orientation) &&
         std::abs(orientation.norm() - 1.0) <= 1e-9;
}

void require_valid(const Pose& pose, std::string_view what) {
  if (!is_finite(pose.position) || !is_finite(pose.orientation)) {
    throw std::invalid_argument(std::string(what) + ": non-finite pose");
  }
  if (std::abs(pose.orientation.norm() - 1.0) > 1e-9) {
    throw std::invalid_argument(std::string(what) + ": quaternion is not unit-norm");
  }
}

void require_finite(const Vec3& v, std::string_view what) {
  if (!is_finite(v)) throw std::invalid_argument(std::string(what) + ": non-finite vector");
}

Vec3 rotation_vector(const Quat& q) {
  Quat u = q.normalized();
  if (u.w() < 0.0) u.coeffs() = -u.coeffs();
  const double s = u.vec().norm();
  if (s < 1e-300) return Vec3::Zero();
  const double angle = 2.0 * std::atan2(s, u.w());
  return u.vec() * (angle / s);
}

double angular_distance(const Quat& from, const Quat& to) {
  return rotation_vector(to * from.conjugate()).norm();
}

}  // namespace hapticsim
