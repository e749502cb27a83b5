#pragma once

#include "hapticsim/geometry.hpp"
#include "hapticsim/kinematics.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace hapticsim::entities {

/// Which part of the robot the stylus drives: the base (rigid motion) or the tool frame.
enum class AttachMode { Base, Tcpf };

/// Closed-form solvers available for specific chain structures.
enum class AnalyticSolver { None, Planar2R, Planar3R };

/// Distance used to pick the branch closest to the previous configuration.
enum class BranchMetric { MaxNorm, Euclidean };

/// Serial manipulator. Joint i's parent is joint i-1; `base_pose` places joint 0's parent
/// frame and `tool_frame` is the TCP offset after the last joint.
struct RobotModel {
  std::string name;
  KinematicTree chain;
  Pose base_pose;
  Pose tool_frame;
  AttachMode attach_mode = AttachMode::Tcpf;
  AnalyticSolver analytic = AnalyticSolver::None;
  std::vector<geometry::ConvexShape> base_shapes;
  std::vector<std::vector<geometry::ConvexShape>> link_shapes;  // per joint, may be empty

  std::size_t dof() const { return chain.dof(); }
  /// Structural checks, including the planar layout required by an analytic solver.
  void validate() const;
};

class JointLimitError : public std::out_of_range {
 public:
  explicit JointLimitError(std::vector<int> joints);
  const std::vector<int>& joints() const noexcept { return joints_; }

 private:
  std::vector<int> joints_;
};

class IkError : public std::runtime_error {
 public:
  enum class Kind { Unreachable, Limits };
  IkError(Kind kind, JointConfig best_effort, double residual);

  Kind kind() const noexcept { return kind_; }
  const JointConfig& best_effort() const noexcept { return best_effort_; }
  double residual() const noexcept { return residual_; }

 private:
  Kind kind_;
  JointConfig best_effort_;
  double residual_;
};

struct IkOptions {
  BranchMetric metric = BranchMetric::MaxNorm;
  std::optional<int> forced_branch;  // analytic models: 0 = positive elbow, 1 = negative
  DlsOptions dls;
};

/// World pose of the tool frame. Throws JointLimitError listing out-of-range joints.
Pose forward_kinematics(const RobotModel& model, const JointConfig& q);

/// World pose of each link's moving frame (index 0 is the base), without limit checks.
std::vector<Pose> link_poses(const RobotModel& model, const JointConfig& q);

/// Every closed-form solution for `target`, before joint-limit filtering and 2*pi shifts.
/// Empty when the target is out of reach. Requires an analytic model.
std::vector<JointConfig> analytic_branches(const RobotModel& model, const Pose& target);

double branch_distance(const JointConfig& a, const JointConfig& b, BranchMetric metric);

/// Joint configuration reaching `target`, nearest to `q_prev` among all solutions.
/// Analytic models enumerate every branch; other chains run DLS seeded at q_prev.
/// Throws IkError (Unreachable or Limits) carrying the best-effort configuration.
JointConfig inverse_kinematics(const RobotModel& model, const Pose& target, const JointConfig& q_prev,
                               const IkOptions& options = {});

/// Signed penetration of each joint into a band of width `zone` inside its limits: positive
/// pushes toward hi, negative toward lo, zero outside the band, +/-zone at the limit.
std::vector<double> joint_limit_force(const RobotModel& model, const JointConfig& q, double zone);

/// Cartesian push on the TCP from the joint-limit bands: each offending joint contributes
/// stiffness * depth along the TCP's linear motion direction for that joint.
Vec3 joint_limit_cartesian_force(const RobotModel& model, const JointConfig& q, double zone,
                                 double stiffness);

using RobotDrive = std::variant<Pose, JointConfig>;

/// Base mode: the mapped pose becomes the new base pose. Tcpf mode: inverse kinematics.
RobotDrive drive_robot(const RobotModel& model, const Pose& mapped_pose, const JointConfig& q_prev,
                       const IkOptions& options = {});

/// Pose the stylus handle is anchored to at engage: base pose or TCP pose.
Pose robot_handle_pose(const RobotModel& model, const JointConfig& q);

}  // namespace hapticsim::entities
