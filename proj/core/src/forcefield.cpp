#include "hapticsim/forcefield.hpp"

#include <cmath>
#include <numeric>

namespace hapticsim::forcefield {

void ForceParams::validate() const {
  if (!(margin > 0.0) || !std::isfinite(margin)) throw std::invalid_argument("force margin must be > 0");
  for (double v : {constant_magnitude, stiffness, damping, mass_scale}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("force magnitudes, stiffness, damping and mass_scale must be >= 0");
    }
  }
}

Vec3 contact_normal(const geometry::ProximityResult& result, const std::optional<Vec3>& fallback) {
  const bool has_fallback = fallback && fallback->norm() > 0.0;
  // Closest points of an overlapping pair carry no surface information.
  if (result.colliding && has_fallback) return fallback->normalized();
  const Vec3 d = result.point_a - result.point_b;
  const double n = d.norm();
  if (n > 0.0 && std::isfinite(n)) return d / n;
  if (has_fallback) return fallback->normalized();
  throw DegenerateContactError();
}

ForceCommand render_along(const Vec3& normal, double penetration, const ForceParams& params,
                          ForceClass force_class, const Vec3& stylus_velocity) {
  ForceCommand cmd;
  cmd.force_class = force_class;
  if (!(penetration > 0.0)) return cmd;

  switch (force_class) {
    case ForceClass::ConstantContact:
      cmd.force = params.constant_magnitude * normal;
      break;
    case ForceClass::PenetrationProportional:
      cmd.force = (params.mass_scale * params.stiffness * penetration) * normal;
      break;
    case ForceClass::SpringDamper: {
      require_finite(stylus_velocity, "stylus velocity");
      // Damping acts along the normal only and is weighted by the normalized depth, so the
      // force still vanishes at the zone boundary. Never pulls toward the obstacle.
      const double vn = stylus_velocity.dot(normal);
      const double depth_weight = penetration / params.margin;
      const double magnitude =
          params.stiffness * penetration - params.damping * depth_weight * vn;
      cmd.force = (params.mass_scale * std::max(0.0, magnitude)) * normal;
      break;
    }
  }
  return cmd;
}

ForceCommand render_force(const geometry::ProximityResult& result, const ForceParams& params,
                          ForceClass force_class, const Vec3& stylus_velocity,
                          const std::optional<Vec3>& fallback_normal) {
  const double p = geometry::distance_in_safety_zone(result, params.margin);
  if (p <= 0.0) {
    ForceCommand cmd;
    cmd.force_class = force_class;
    return cmd;
  }
  return render_along(contact_normal(result, fallback_normal), p, params, force_class, stylus_velocity);
}

ForceCommand clamp_force(const ForceCommand& cmd, double peak, double continuous, double window_rms) {
  if (!(peak >= continuous) || !(continuous > 0.0)) {
    throw std::invalid_argument("clamp_force requires peak >= continuous > 0");
  }
  ForceCommand out = cmd;
  const double magnitude = cmd.force.norm();
  if (magnitude == 0.0) return out;

  double scale = 1.0;
  if (magnitude > peak) scale = peak / magnitude;
  if (window_rms > continuous) scale *= continuous / window_rms;
  if (scale < 1.0) {
    out.force = cmd.force * scale;
    out.clamped = true;
    // Rounding in the rescale may leave the norm one ulp above the limit.
    const double limit = std::min(peak, magnitude * scale);
    for (int i = 0; i < 4 && out.force.norm() > limit; ++i) {
      out.force *= std::nextafter(limit / out.force.norm(), 0.0);
    }
  }
  return out;
}

Vec3 NormalTracker::normal_for(const geometry::ProximityResult& result) {
  const Vec3 n = contact_normal(result, last_);
  if (!result.colliding) last_ = n;
  return n;
}

RmsGovernor::RmsGovernor(double peak, double continuous, std::size_t window_ticks)
    : peak_(peak), continuous_(continuous), squares_(window_ticks, 0.0) {
  if (window_ticks == 0) throw std::invalid_argument("RMS window must be at least one tick");
  if (!(peak >= continuous) || !(continuous > 0.0)) {
    throw std::invalid_argument("RMS governor requires peak >= continuous > 0");
  }
}

double RmsGovernor::window_rms() const {
  return std::sqrt(std::max(0.0, sum_) / static_cast<double>(squares_.size()));
}

ForceCommand RmsGovernor::apply(const ForceCommand& cmd) {
  const double commanded = std::min(cmd.force.norm(), peak_);
  const double sq = commanded * commanded;
  sum_ += sq - squares_[head_];
  squares_[head_] = sq;
  head_ = (head_ + 1) % squares_.size();
  if (++since_resum_ >= squares_.size()) {
    sum_ = std::accumulate(squares_.begin(), squares_.end(), 0.0);
    since_resum_ = 0;
  }
  return clamp_force(cmd, peak_, continuous_, window_rms());
}

}  // namespace hapticsim::forcefield
