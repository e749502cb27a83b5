#pragma once

#include "hapticsim/geometry.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace hapticsim::forcefield {

/// The three force-feedback classes. Wire value is the enumerator value.
enum class ForceClass : std::uint8_t {
  ConstantContact = 1,          // presence/absence of contact only
  PenetrationProportional = 2,  // spring on safety-zone penetration, weighted by mass_scale
  SpringDamper = 3,             // spring plus depth-weighted normal damping
};

struct ForceParams {
  double margin = 0.005;             // safety-zone width, m
  double constant_magnitude = 1.0;   // N, ConstantContact
  double stiffness = 200.0;          // N/m
  double damping = 2.0;              // N*s/m
  double mass_scale = 1.0;           // per-entity weight factor

  /// Throws std::invalid_argument on margin <= 0 or negative magnitudes.
  void validate() const;
};

/// 3-DOF force on the stylus. Never carries torque.
struct ForceCommand {
  Vec3 force = Vec3::Zero();
  ForceClass force_class = ForceClass::PenetrationProportional;
  bool clamped = false;
};

class DegenerateContactError : public std::runtime_error {
 public:
  DegenerateContactError() : std::runtime_error("degenerate contact") {}
};

/// Unit vector from point_b (environment) toward point_a (manipulated entity). For a
/// colliding result, or when the two points coincide, `fallback` (normalized) is used
/// instead; with coincident points and no fallback, DegenerateContactError.
Vec3 contact_normal(const geometry::ProximityResult& result,
                    const std::optional<Vec3>& fallback = std::nullopt);

/// Force law for a given normal and safety-zone penetration depth.
ForceCommand render_along(const Vec3& normal, double penetration, const ForceParams& params,
                          ForceClass force_class, const Vec3& stylus_velocity);

ForceCommand render_force(const geometry::ProximityResult& result, const ForceParams& params,
                          ForceClass force_class, const Vec3& stylus_velocity,
                          const std::optional<Vec3>& fallback_normal = std::nullopt);

/// Peak clamp followed by the continuous-rating governor (scale by continuous / window_rms
/// whenever window_rms exceeds the continuous rating). Direction is preserved.
ForceCommand clamp_force(const ForceCommand& cmd, double peak, double continuous, double window_rms);

/// Remembers the last well-defined contact normal so that a full collision (coincident
/// closest points) can still be rendered.
class NormalTracker {
 public:
  /// Normal for `result`; non-colliding results refresh the stored normal.
  Vec3 normal_for(const geometry::ProximityResult& result);
  const std::optional<Vec3>& last() const { return last_; }
  void reset() { last_.reset(); }

 private:
  std::optional<Vec3> last_;
};

/// Running RMS of the peak-clamped commanded magnitude over a fixed tick window, feeding
/// clamp_force. The window starts empty (device at rest), so short bursts up to the peak
/// pass untouched while sustained overdrive settles at the continuous rating.
class RmsGovernor {
 public:
  RmsGovernor(double peak, double continuous, std::size_t window_ticks);

  /// Clamps `cmd` and records it; call exactly once per haptic tick.
  ForceCommand apply(const ForceCommand& cmd);

  double window_rms() const;
  double peak() const { return peak_; }
  double continuous() const { return continuous_; }
  std::size_t window() const { return squares_.size(); }

 private:
  double peak_;
  double continuous_;
  std::vector<double> squares_;
  std::size_t head_ = 0;
  double sum_ = 0.0;
  std::size_t since_resum_ = 0;
};

}  // namespace hapticsim::forcefield
