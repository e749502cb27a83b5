#pragma once

#include "hapticsim/geometry.hpp"
#include "hapticsim/kinematics.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hapticsim::entities {

enum class Hand { Left, Right };

/// Frame rigidly attached after a joint, e.g. the palm after the last wrist joint.
struct EndEffector {
  int joint = -1;
  Pose offset;
};

/// Articulated human figure: a tree of 1-DOF joints under a free-floating pelvis.
struct MannequinModel {
  std::string name;
  int declared_dof = 0;
  KinematicTree tree;
  std::vector<std::string> segment_of_joint;  // segment moved by each joint
  EndEffector left_hand;
  EndEffector right_hand;
  std::vector<int> trunk_joints;
  bool trunk_locked = false;
  std::map<std::string, std::vector<geometry::ConvexShape>> segment_shapes;

  std::size_t dof() const { return tree.dof(); }
  const EndEffector& hand(Hand h) const { return h == Hand::Left ? left_hand : right_hand; }
  int joint_index(const std::string& name) const;  // -1 when absent
  /// Throws std::invalid_argument when the joint count differs from declared_dof or the
  /// tree/end-effector/trunk references are inconsistent.
  void validate() const;
};

struct MannequinState {
  Pose root;  // pelvis placement
  JointConfig q;
};

enum class MannequinTarget { Left, Right, Both, WholeBody };

struct MannequinDriveResult {
  MannequinState state;
  double left_residual = 0.0;   // m, hand position error (hand modes)
  double right_residual = 0.0;  // m
  int iterations = 0;
  bool converged = true;
};

/// Neutral configuration: every joint at zero clamped into its limits.
MannequinState neutral_state(const MannequinModel& model, const Pose& root = {});

Pose hand_pose(const MannequinModel& model, const MannequinState& state, Hand hand);

/// World pose of every segment frame, keyed by segment name ("pelvis" is the root).
std::map<std::string, Pose> segment_poses(const MannequinModel& model, const MannequinState& state);

/// WholeBody moves the pelvis rigidly to `target`. Hand modes solve DLS over the arm chain(s);
/// trunk joints join the solve unless the trunk is locked, in which case they are untouched.
/// Both takes the left-hand target first and the right-hand target in `second`.
/// Hand modes always run with position priority: the hand orientation is corrected only where
/// it does not cost position. Unreachable targets return the best effort with residuals and
/// converged=false.
MannequinDriveResult drive_mannequin(const MannequinModel& model, MannequinTarget mode, const Pose& target,
                                     const std::optional<Pose>& second, const MannequinState& state,
                                     const DlsOptions& options = {});

}  // namespace hapticsim::entities
