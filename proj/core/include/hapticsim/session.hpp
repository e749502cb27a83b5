#pragma once

#include "hapticsim/forcefield.hpp"
#include "hapticsim/geometry.hpp"
#include "hapticsim/mannequin.hpp"
#include "hapticsim/mapping.hpp"
#include "hapticsim/robot.hpp"
#include "hapticsim/solid.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace hapticsim::runtime {

struct SolidDriver {
  std::string entity_id;
  entities::PivotMode pivot;
};

/// Robot placed in the scene as entities "<id>.base" and "<id>.link<i>" (links with shapes).
struct RobotDriver {
  std::string id;
  entities::RobotModel model;
  entities::JointConfig q;
  entities::IkOptions ik;
  double limit_zone = 0.05;        // rad (or m) band inside each joint limit
  double limit_stiffness = 20.0;   // N per unit of band penetration
  double reach_stiffness = 200.0;  // N/m spring back toward the last reachable TCP pose
};

/// Mannequin placed in the scene as entities "<id>.<segment>" (segments with shapes).
struct MannequinDriver {
  std::string id;
  entities::MannequinModel model;
  entities::MannequinState state;
  entities::MannequinTarget mode = entities::MannequinTarget::Right;
  entities::DlsOptions dls;
};

using Driver = std::variant<SolidDriver, RobotDriver, MannequinDriver>;

struct MappingConfig {
  mapping::FrameMode frame = mapping::FrameMode::screen();
  mapping::ScaleKind scale = mapping::ScaleKind::Medium;
  mapping::ScaleLevels levels;
  Pose camera;                   // camera looks along its local -Z, +Y up
  double viewport_extent = 1.6;  // m of scene visible across the larger viewport side
};

struct ForceConfig {
  bool enabled = true;
  forcefield::ForceClass force_class = forcefield::ForceClass::PenetrationProportional;
  forcefield::ForceParams params;
  std::size_t rms_window = 1000;  // haptic ticks
};

struct SessionConfig {
  geometry::Scene scene;
  Driver driver;
  MappingConfig mapping;
  ForceConfig force;
  mapping::DeviceSpec device;
  int haptic_hz = 1000;
};

/// Outcome of one proximity evaluation of the current candidate.
struct ProximityStep {
  std::optional<geometry::ProximityResult> result;  // empty when no check group applies
  bool committed = false;
  bool rejected = false;  // candidate collided; last free pose kept
  std::optional<std::string> driver_error;
};

/// Force sample produced on a haptic tick.
struct ForceSample {
  forcefield::ForceCommand scene;   // before clamping, scene axes
  forcefield::ForceCommand device;  // clamped, device axes (what the stylus receives)
};

/// One manipulated entity in a scene: clutch/mapping state, kinematic driver, proximity
/// against the check groups, commit-or-reject and force rendering. Poses become visible in
/// scene() only when committed, i.e. when the candidate does not collide.
class ManipulationSession {
 public:
  explicit ManipulationSession(SessionConfig config);

  /// Button edges engage/disengage the clutch; updates the mapped handle pose and velocity.
  void update_stylus(const mapping::StylusState& state);

  /// Drive + proximity + commit for the latest mapped handle pose.
  ProximityStep proximity_step();

  /// Force for the current stylus pose from the latest proximity result, re-evaluated along
  /// the stored normal, then clamped by the device governor.
  ForceSample haptic_force();

  /// Forgets the clutch (e.g. after a connection loss); motion resumes at the next engage.
  void release();

  const geometry::Scene& scene() const { return scene_; }
  const SessionConfig& config() const { return config_; }
  const mapping::WorkspaceMapping& mapping() const { return mapping_; }
  const Driver& driver() const { return config_.driver; }
  bool engaged() const { return mapping_.engaged; }

  /// Ids of the scene entities that move with the manipulated entity.
  const std::vector<std::string>& manipulated_ids() const { return manipulated_ids_; }
  /// Entity id used in trajectories and reports.
  std::string primary_id() const;
  /// Committed pose of the driven handle (solid pivot frame, robot base/TCP, mannequin hand/root).
  Pose committed_handle() const;
  /// Committed pose recorded in trajectories (solid pose, robot base/TCP, hand/root pose).
  Pose committed_pose() const;
  const std::optional<geometry::ProximityResult>& last_proximity() const { return last_result_; }
  const std::optional<Pose>& mapped_handle() const { return mapped_; }
  Vec3 handle_velocity() const { return velocity_; }
  /// Rotation from device axes to scene axes for the active frame mode.
  Mat3 device_to_scene() const;

  void set_scale(mapping::ScaleKind kind, std::optional<double> value = std::nullopt);
  void set_frame(const mapping::FrameMode& mode);
  void set_camera(const Pose& camera, double viewport_extent);
  void set_pivot(const entities::PivotMode& pivot);
  void set_force_class(forcefield::ForceClass c);
  void set_force_enabled(bool enabled);

 private:
  struct Candidate {
    std::vector<std::pair<std::string, Pose>> poses;
    Driver driver;
  };
  Candidate make_candidate(const Pose& mapped) const;
  std::vector<std::pair<std::string, Pose>> entity_poses(const Driver& d) const;
  std::optional<geometry::ProximityResult> proximity(const std::vector<std::pair<std::string, Pose>>& poses) const;
  void engage(const mapping::StylusState& state);
  /// Clutch re-anchor after a mapping change so the new setting causes no jump.
  void reanchor();

  SessionConfig config_;
  geometry::Scene scene_;
  mapping::WorkspaceMapping mapping_;
  std::vector<std::string> manipulated_ids_;
  std::optional<geometry::SceneEntity> engaged_entity_;  // solid as it was at engage
  std::optional<Pose> engaged_left_hand_;
  std::optional<Pose> engaged_right_hand_;
  std::optional<Pose> mapped_;
  std::optional<Pose> mapped_at_result_;
  std::optional<geometry::ProximityResult> last_result_;
  bool reach_failed_ = false;
  Vec3 velocity_ = Vec3::Zero();
  bool last_button_ = false;
  std::optional<mapping::StylusState> last_state_;
  forcefield::NormalTracker normals_;
  forcefield::RmsGovernor governor_;
};

/// Force for the current mapped pose from the last proximity result: the distance is
/// moved along the stored normal by the handle displacement since that result.
/// Without a prior result the force is zero.
forcefield::ForceCommand interpolate_force(const std::optional<geometry::ProximityResult>& last,
                                           const Pose& last_mapped_pose, const Pose& current_mapped_pose,
                                           const forcefield::ForceParams& params, forcefield::ForceClass force_class,
                                           const Vec3& velocity = Vec3::Zero(),
                                           const std::optional<Vec3>& fallback_normal = std::nullopt);

/// Builds the scene entities of a robot ("<id>.base", "<id>.link<i>") at configuration q.
std::vector<geometry::SceneEntity> robot_entities(const std::string& id, const entities::RobotModel& model,
                                                  const entities::JointConfig& q);

/// Builds the scene entities of a mannequin ("<id>.<segment>") for segments with shapes.
std::vector<geometry::SceneEntity> mannequin_entities(const std::string& id, const entities::MannequinModel& model,
                                                      const entities::MannequinState& state);

}  // namespace hapticsim::runtime
