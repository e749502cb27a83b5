#include "hapticsim/robot.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace hapticsim::entities {

namespace {

constexpr double kPi = std::numbers::pi;

struct PlanarLayout {
  Vec3 offset;                  // joint 0 origin translation
  std::vector<double> lengths;  // link lengths, last one is the tool offset
};

bool is_unit_z(const Vec3& axis) { return (axis - Vec3::UnitZ()).norm() <= 1e-12; }

bool pure_x_translation(const Pose& p) {
  return p.orientation.vec().norm() <= 1e-12 && std::abs(p.position.y()) <= 1e-12 &&
         std::abs(p.position.z()) <= 1e-12 && p.position.x() > 0.0;
}

PlanarLayout planar_layout(const RobotModel& model) {
  const std::size_t expected = model.analytic == AnalyticSolver::Planar2R ? 2 : 3;
  const auto fail = [&](const std::string& why) {
    throw std::invalid_argument("robot '" + model.name + "': planar analytic solver: " + why);
  };
  if (model.dof() != expected) fail("expected " + std::to_string(expected) + " joints");
  const auto& joints = model.chain.joints;
  for (const auto& j : joints) {
    if (j.type != JointType::Revolute || !is_unit_z(j.axis)) fail("joints must be revolute about +Z");
  }
  if (joints[0].origin.orientation.vec().norm() > 1e-12) fail("joint 0 origin must not rotate");
  PlanarLayout layout;
  layout.offset = joints[0].origin.position;
  for (std::size_t i = 1; i < joints.size(); ++i) {
    if (!pure_x_translation(joints[i].origin)) fail("link offsets must be +X translations");
    layout.lengths.push_back(joints[i].origin.position.x());
  }
  if (!pure_x_translation(model.tool_frame)) fail("tool frame must be a +X translation");
  layout.lengths.push_back(model.tool_frame.position.x());
  return layout;
}

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * kPi);
  return a <= -kPi ? a + 2.0 * kPi : a;
}

struct Residual {
  double position;
  double orientation;
};

Residual tcp_residual(const RobotModel& model, const JointConfig& q, const Pose& target) {
  const Pose tcp = link_poses(model, q).back() * model.tool_frame;
  Residual r{(tcp.position - target.position).norm(), angular_distance(tcp.orientation, target.orientation)};
  // A planar 2R arm only controls the TCP position.
  if (model.analytic == AnalyticSolver::Planar2R) r.orientation = 0.0;
  return r;
}

// Solutions of the planar two-link problem for wrist point (x, y).
std::vector<std::pair<double, double>> two_link(double x, double y, double l1, double l2) {
  double c2 = (x * x + y * y - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);
  if (c2 > 1.0 + 1e-12 || c2 < -1.0 - 1e-12) return {};
  c2 = std::clamp(c2, -1.0, 1.0);
  const double s2 = std::sqrt(std::max(0.0, 1.0 - c2 * c2));
  std::vector<std::pair<double, double>> out;
  for (double sign : {1.0, -1.0}) {
    const double q2 = std::atan2(sign * s2, c2);
    const double q1 = std::atan2(y, x) - std::atan2(l2 * std::sin(q2), l1 + l2 * std::cos(q2));
    out.emplace_back(wrap_angle(q1), wrap_angle(q2));
    if (s2 == 0.0) break;
  }
  return out;
}

// All 2*pi-shifted copies of `q` that respect the joint limits.
void limit_shifts(const KinematicTree& tree, const JointConfig& q, std::vector<JointConfig>& out) {
  std::vector<std::vector<double>> options(tree.dof());
  for (std::size_t i = 0; i < tree.dof(); ++i) {
    const Joint& j = tree.joints[i];
    const double v = q[static_cast<Eigen::Index>(i)];
    if (j.type == JointType::Prismatic) {
      if (v >= j.lo && v <= j.hi) options[i].push_back(v);
      continue;
    }
    for (int k = -3; k <= 3; ++k) {
      const double s = v + 2.0 * kPi * k;
      if (s >= j.lo && s <= j.hi) options[i].push_back(s);
    }
  }
  std::vector<std::size_t> pick(tree.dof(), 0);
  for (const auto& o : options) {
    if (o.empty()) return;
  }
  while (true) {
    JointConfig c(static_cast<Eigen::Index>(tree.dof()));
    for (std::size_t i = 0; i < tree.dof(); ++i) c[static_cast<Eigen::Index>(i)] = options[i][pick[i]];
    out.push_back(std::move(c));
    std::size_t i = 0;
    while (i < tree.dof() && ++pick[i] == options[i].size()) pick[i++] = 0;
    if (i == tree.dof()) break;
  }
}

JointConfig clamp_to_limits(const KinematicTree& tree, JointConfig q) {
  for (std::size_t i = 0; i < tree.dof(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    q[k] = std::clamp(q[k], tree.joints[i].lo, tree.joints[i].hi);
  }
  return q;
}

}  // namespace

void RobotModel::validate() const {
  chain.validate();
  for (std::size_t i = 0; i < chain.dof(); ++i) {
    if (chain.joints[i].parent != static_cast<int>(i) - 1) {
      throw std::invalid_argument("robot '" + name + "': joints must form a serial chain");
    }
  }
  require_valid(base_pose, "robot '" + name + "' base pose");
  require_valid(tool_frame, "robot '" + name + "' tool frame");
  if (!link_shapes.empty() && link_shapes.size() != chain.dof()) {
    throw std::invalid_argument("robot '" + name + "': link_shapes must list one entry per joint");
  }
  if (analytic != AnalyticSolver::None) planar_layout(*this);
}

JointLimitError::JointLimitError(std::vector<int> joints)
    : std::out_of_range([&] {
        std::ostringstream os;
        os << "joint configuration outside limits at joint(s)";
        for (int j : joints) os << ' ' << j;
        return os.str();
      }()),
      joints_(std::move(joints)) {}

IkError::IkError(Kind kind, JointConfig best_effort, double residual)
    : std::runtime_error(kind == Kind::Limits ? "limits" : "unreachable"),
      kind_(kind),
      best_effort_(std::move(best_effort)),
      residual_(residual) {}

std::vector<Pose> link_poses(const RobotModel& model, const JointConfig& q) {
  std::vector<Pose> out{model.base_pose};
  const auto frames = joint_frames(model.chain, model.base_pose, q);
  out.insert(out.end(), frames.begin(), frames.end());
  return out;
}

Pose forward_kinematics(const RobotModel& model, const JointConfig& q) {
  if (q.size() != static_cast<Eigen::Index>(model.dof())) {
    throw std::invalid_argument("joint configuration size does not match robot '" + model.name + "'");
  }
  if (auto bad = limit_violations(model.chain, q); !bad.empty()) throw JointLimitError(std::move(bad));
  return link_poses(model, q).back() * model.tool_frame;
}

std::vector<JointConfig> analytic_branches(const RobotModel& model, const Pose& target) {
  if (model.analytic == AnalyticSolver::None) {
    throw std::invalid_argument("robot '" + model.name + "' has no analytic solver");
  }
  require_valid(target, "IK target");
  const PlanarLayout layout = planar_layout(model);
  const Pose local = (model.base_pose * Pose::translation(layout.offset)).inverse() * target;
  const double x = local.position.x();
  const double y = local.position.y();

  std::vector<JointConfig> out;
  if (model.analytic == AnalyticSolver::Planar2R) {
    for (auto [q1, q2] : two_link(x, y, layout.lengths[0], layout.lengths[1])) {
      out.push_back((JointConfig(2) << q1, q2).finished());
    }
    return out;
  }
  const Mat3 r = local.orientation.toRotationMatrix();
  const double heading = std::atan2(r(1, 0), r(0, 0));
  const double l3 = layout.lengths[2];
  const double wx = x - l3 * std::cos(heading);
  const double wy = y - l3 * std::sin(heading);
  for (auto [q1, q2] : two_link(wx, wy, layout.lengths[0], layout.lengths[1])) {
    out.push_back((JointConfig(3) << q1, q2, wrap_angle(heading - q1 - q2)).finished());
  }
  return out;
}

double branch_distance(const JointConfig& a, const JointConfig& b, BranchMetric metric) {
  const Eigen::VectorXd d = a - b;
  return metric == BranchMetric::MaxNorm ? d.cwiseAbs().maxCoeff() : d.norm();
}

JointConfig inverse_kinematics(const RobotModel& model, const Pose& target, const JointConfig& q_prev,
                               const IkOptions& options) {
  require_valid(target, "IK target");
  if (q_prev.size() != static_cast<Eigen::Index>(model.dof()) || !q_prev.allFinite()) {
    throw std::invalid_argument("previous joint configuration is invalid for robot '" + model.name + "'");
  }
  const double tol = options.dls.tolerance;
  const bool prev_in_limits = limit_violations(model.chain, q_prev).empty();
  if (prev_in_limits) {
    const Residual r = tcp_residual(model, q_prev, target);
    if (r.position <= 1e-12 && r.orientation <= 1e-12) return q_prev;
  }

  if (model.analytic != AnalyticSolver::None) {
    const auto branches = analytic_branches(model, target);
    if (branches.empty()) {
      const Residual r = tcp_residual(model, q_prev, target);
      throw IkError(IkError::Kind::Unreachable, q_prev, r.position + r.orientation);
    }
    if (options.forced_branch &&
        (*options.forced_branch < 0 || *options.forced_branch >= static_cast<int>(branches.size()))) {
      throw std::invalid_argument("forced IK branch index out of range");
    }
    std::optional<JointConfig> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < branches.size(); ++b) {
      if (options.forced_branch && static_cast<int>(b) != *options.forced_branch) continue;
      std::vector<JointConfig> candidates;
      limit_shifts(model.chain, branches[b], candidates);
      for (auto& c : candidates) {
        const double d = branch_distance(c, q_prev, options.metric);
        if (d < best_d) {
          best_d = d;
          best = std::move(c);
        }
      }
    }
    if (!best) {
      JointConfig effort = clamp_to_limits(model.chain, branches.front());
      const Residual r = tcp_residual(model, effort, target);
      throw IkError(IkError::Kind::Limits, std::move(effort), r.position + r.orientation);
    }
    const Residual r = tcp_residual(model, *best, target);
    if (r.position > tol || r.orientation > tol) {
      throw IkError(IkError::Kind::Unreachable, *best, r.position + r.orientation);
    }
    return *best;
  }

  const DlsTask task{static_cast<int>(model.dof()) - 1, model.tool_frame, target, 1.0};
  const std::vector<bool> movable(model.dof(), true);
  const DlsResult res = solve_dls(model.chain, model.base_pose, q_prev, movable, {&task, 1}, options.dls);
  if (res.converged) return res.q;
  throw IkError(res.limit_active ? IkError::Kind::Limits : IkError::Kind::Unreachable, res.q,
                res.position_residual + res.orientation_residual);
}

std::vector<double> joint_limit_force(const RobotModel& model, const JointConfig& q, double zone) {
  if (!(zone > 0.0)) throw std::invalid_argument("joint limit zone must be > 0");
  std::vector<double> out(model.dof(), 0.0);
  for (std::size_t i = 0; i < model.dof(); ++i) {
    const Joint& j = model.chain.joints[i];
    const double v = q[static_cast<Eigen::Index>(i)];
    const double up = std::clamp(zone - (v - j.lo), 0.0, zone);
    const double down = std::clamp(zone - (j.hi - v), 0.0, zone);
    out[i] = up >= down ? up : -down;
  }
  return out;
}

Vec3 joint_limit_cartesian_force(const RobotModel& model, const JointConfig& q, double zone,
                                 double stiffness) {
  const auto depths = joint_limit_force(model, q, zone);
  const auto frames = joint_frames(model.chain, model.base_pose, q);
  const Vec3 tcp = (frames.back() * model.tool_frame).position;
  const auto jac = point_jacobian(model.chain, frames, static_cast<int>(model.dof()) - 1, tcp);
  Vec3 force = Vec3::Zero();
  for (std::size_t i = 0; i < depths.size(); ++i) {
    if (depths[i] == 0.0) continue;
    const Vec3 dir = jac.block<3, 1>(0, static_cast<Eigen::Index>(i));
    const double n = dir.norm();
    if (n > 1e-12) force += (stiffness * depths[i] / n) * dir;
  }
  return force;
}

RobotDrive drive_robot(const RobotModel& model, const Pose& mapped_pose, const JointConfig& q_prev,
                       const IkOptions& options) {
  require_valid(mapped_pose, "mapped pose");
  if (model.attach_mode == AttachMode::Base) return mapped_pose;
  return inverse_kinematics(model, mapped_pose, q_prev, options);
}

Pose robot_handle_pose(const RobotModel& model, const JointConfig& q) {
  if (model.attach_mode == AttachMode::Base) return model.base_pose;
  return link_poses(model, q).back() * model.tool_frame;
}

}  // namespace hapticsim::entities
