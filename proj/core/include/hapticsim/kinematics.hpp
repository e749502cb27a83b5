#pragma once

#include "hapticsim/pose.hpp"

#include <Eigen/Core>

#include <span>
#include <string>
#include <vector>

namespace hapticsim::entities {

using JointConfig = Eigen::VectorXd;

enum class JointType { Revolute, Prismatic };

/// One 1-DOF joint. `origin` places the joint frame in the parent's moving frame; the
/// joint then rotates about (or slides along) `axis`, expressed in that joint frame.
struct Joint {
  std::string name;
  JointType type = JointType::Revolute;
  Vec3 axis = Vec3::UnitZ();
  Pose origin;
  double lo = -3.141592653589793;
  double hi = 3.141592653589793;
  int parent = -1;  // index of the parent joint, -1 for the root
};

/// Joint tree, topologically ordered (every parent index precedes its children).
struct KinematicTree {
  std::vector<Joint> joints;

  std::size_t dof() const { return joints.size(); }
  void validate() const;
  /// Indices from the root down to `joint` inclusive.
  std::vector<int> chain_to(int joint) const;
};

/// World pose of every joint's moving frame for root placement `root` and config `q`.
std::vector<Pose> joint_frames(const KinematicTree& tree, const Pose& root, const JointConfig& q);

/// Indices of joints whose value lies outside [lo, hi].
std::vector<int> limit_violations(const KinematicTree& tree, const JointConfig& q);

/// 6 x dof geometric Jacobian (linear rows first) of the point `tip` rigidly attached after
/// `end_joint`; columns of joints outside the end joint's chain are zero.
Eigen::Matrix<double, 6, Eigen::Dynamic> point_jacobian(const KinematicTree& tree,
                                                        const std::vector<Pose>& frames, int end_joint,
                                                        const Vec3& tip);

/// Pose target on a frame attached to `end_joint` through `tool`.
struct DlsTask {
  int end_joint = -1;
  Pose tool;
  Pose target;
  double orientation_weight = 1.0;  // 0 solves position only
};

struct DlsOptions {
  double damping = 0.01;
  int max_iterations = 200;
  double tolerance = 1e-6;
  double max_step = 0.3;  // rad (or m) per joint per iteration
  /// Orientation error is corrected only in the null space of the position task, so a
  /// conflicting orientation never holds the position back.
  bool position_priority = false;
};

struct DlsResult {
  JointConfig q;
  double position_residual = 0.0;     // worst task, m
  double orientation_residual = 0.0;  // worst task, rad (weighted tasks only)
  int iterations = 0;
  bool converged = false;
  bool limit_active = false;
};

/// Damped least squares over the joints flagged in `movable`, projected onto the joint
/// limits after every step. Joints not flagged keep their value bit-for-bit.
DlsResult solve_dls(const KinematicTree& tree, const Pose& root, const JointConfig& seed,
                    const std::vector<bool>& movable, std::span<const DlsTask> tasks,
                    const DlsOptions& options);

}  // namespace hapticsim::entities
