#include "hapticsim/kinematics.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hapticsim::entities {

void KinematicTree::validate() const {
  if (joints.empty()) throw std::invalid_argument("kinematic tree needs at least one joint");
  for (std::size_t i = 0; i < joints.size(); ++i) {
    const Joint& j = joints[i];
    const std::string label = "joint '" + j.name + "'";
    if (j.parent >= static_cast<int>(i) || j.parent < -1) {
      throw std::invalid_argument(label + ": parent must precede the joint");
    }
    if (!j.axis.allFinite() || std::abs(j.axis.norm() - 1.0) > 1e-9) {
      throw std::invalid_argument(label + ": axis must be a unit vector");
    }
    require_valid(j.origin, label + " origin");
    if (!(j.lo < j.hi)) throw std::invalid_argument(label + ": limits require lo < hi");
  }
}

std::vector<int> KinematicTree::chain_to(int joint) const {
  std::vector<int> chain;
  for (int j = joint; j >= 0; j = joints[j].parent) chain.push_back(j);
  std::reverse(chain.begin(), chain.end());
  return chain;
}

namespace {

Pose joint_motion(const Joint& j, double value) {
  if (j.type == JointType::Prismatic) return Pose::translation(j.axis * value);
  return {Vec3::Zero(), Quat(Eigen::AngleAxisd(value, j.axis))};
}

}  // namespace

std::vector<Pose> joint_frames(const KinematicTree& tree, const Pose& root, const JointConfig& q) {
  if (q.size() != static_cast<Eigen::Index>(tree.dof())) {
    throw std::invalid_argument("joint configuration size does not match the joint count");
  }
  std::vector<Pose> frames(tree.dof());
  for (std::size_t i = 0; i < tree.dof(); ++i) {
    const Joint& j = tree.joints[i];
    const Pose& parent = j.parent < 0 ? root : frames[j.parent];
    frames[i] = parent * j.origin * joint_motion(j, q[static_cast<Eigen::Index>(i)]);
  }
  return frames;
}

std::vector<int> limit_violations(const KinematicTree& tree, const JointConfig& q) {
  std::vector<int> out;
  for (std::size_t i = 0; i < tree.dof(); ++i) {
    const double v = q[static_cast<Eigen::Index>(i)];
    if (!(v >= tree.joints[i].lo && v <= tree.joints[i].hi)) out.push_back(static_cast<int>(i));
  }
  return out;
}

Eigen::Matrix<double, 6, Eigen::Dynamic> point_jacobian(const KinematicTree& tree,
                                                        const std::vector<Pose>& frames, int end_joint,
                                                        const Vec3& tip) {
  Eigen::Matrix<double, 6, Eigen::Dynamic> jac = Eigen::Matrix<double, 6, Eigen::Dynamic>::Zero(6, tree.dof());
  for (int j : tree.chain_to(end_joint)) {
    const Vec3 axis = frames[j].rotate(tree.joints[j].axis);
    if (tree.joints[j].type == JointType::Prismatic) {
      jac.block<3, 1>(0, j) = axis;
    } else {
      jac.block<3, 1>(0, j) = axis.cross(tip - frames[j].position);
      jac.block<3, 1>(3, j) = axis;
    }
  }
  return jac;
}

namespace {

constexpr double kPositionSettled = 1e-4;  // m

/// Damped pseudo-inverse applied to `e`.
Eigen::VectorXd damped_solve(const Eigen::MatrixXd& j, const Eigen::VectorXd& e, double damping) {
  const Eigen::MatrixXd gram = j * j.transpose() + damping * damping * Eigen::MatrixXd::Identity(j.rows(), j.rows());
  return j.transpose() * gram.ldlt().solve(e);
}

/// Position rows first; orientation rows only act in the null space of the position task.
Eigen::VectorXd prioritized_step(const Eigen::MatrixXd& jac, const Eigen::VectorXd& error, double damping,
                                 bool with_orientation = true) {
  const Eigen::Index tasks = jac.rows() / 6;
  const Eigen::Index n = jac.cols();
  Eigen::MatrixXd jp(3 * tasks, n), jo(3 * tasks, n);
  Eigen::VectorXd ep(3 * tasks), eo(3 * tasks);
  for (Eigen::Index t = 0; t < tasks; ++t) {
    jp.middleRows<3>(3 * t) = jac.middleRows<3>(6 * t);
    jo.middleRows<3>(3 * t) = jac.middleRows<3>(6 * t + 3);
    ep.segment<3>(3 * t) = error.segment<3>(6 * t);
    eo.segment<3>(3 * t) = error.segment<3>(6 * t + 3);
  }
  const Eigen::MatrixXd gram = jp * jp.transpose() + damping * damping * Eigen::MatrixXd::Identity(jp.rows(), jp.rows());
  const Eigen::MatrixXd jp_pinv = jp.transpose() * gram.ldlt().solve(Eigen::MatrixXd::Identity(jp.rows(), jp.rows()));
  const Eigen::VectorXd dq1 = jp_pinv * ep;
  if (!with_orientation) return dq1;
  const Eigen::MatrixXd null = Eigen::MatrixXd::Identity(n, n) - jp_pinv * jp;
  return dq1 + null * damped_solve(jo * null, eo - jo * dq1, damping);
}

}  // namespace

DlsResult solve_dls(const KinematicTree& tree, const Pose& root, const JointConfig& seed,
                    const std::vector<bool>& movable, std::span<const DlsTask> tasks,
                    const DlsOptions& options) {
  const auto n = static_cast<Eigen::Index>(tree.dof());
  if (seed.size() != n || movable.size() != tree.dof()) {
    throw std::invalid_argument("DLS seed/movable size does not match the joint count");
  }
  std::vector<Eigen::Index> active;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (movable[static_cast<std::size_t>(i)]) active.push_back(i);
  }
  const auto rows = static_cast<Eigen::Index>(6 * tasks.size());

  DlsResult result;
  result.q = seed;
  for (Eigen::Index i : active) {
    const Joint& j = tree.joints[static_cast<std::size_t>(i)];
    result.q[i] = std::clamp(result.q[i], j.lo, j.hi);
  }

  JointConfig best_q = result.q;
  double best_score = std::numeric_limits<double>::infinity();
  double best_pos = 0.0;
  double best_ori = 0.0;
  if (options.position_priority) best_pos = std::numeric_limits<double>::infinity();
  bool orienting = false;  // priority mode: orientation joins once the position has settled

  Eigen::VectorXd error(rows);
  Eigen::MatrixXd jac(rows, static_cast<Eigen::Index>(active.size()));
  for (int iter = 0;; ++iter) {
    const auto frames = joint_frames(tree, root, result.q);
    double pos_res = 0.0;
    double ori_res = 0.0;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      const DlsTask& task = tasks[t];
      const Pose ee = frames[static_cast<std::size_t>(task.end_joint)] * task.tool;
      const Vec3 dp = task.target.position - ee.position;
      const Vec3 dr = rotation_vector(task.target.orientation * ee.orientation.conjugate());
      pos_res = std::max(pos_res, dp.norm());
      if (task.orientation_weight > 0.0) ori_res = std::max(ori_res, dr.norm());
      const auto r0 = static_cast<Eigen::Index>(6 * t);
      error.segment<3>(r0) = dp;
      error.segment<3>(r0 + 3) = task.orientation_weight * dr;
      const auto full = point_jacobian(tree, frames, task.end_joint, ee.position);
      for (std::size_t k = 0; k < active.size(); ++k) {
        jac.block<3, 1>(r0, static_cast<Eigen::Index>(k)) = full.block<3, 1>(0, active[k]);
        jac.block<3, 1>(r0 + 3, static_cast<Eigen::Index>(k)) =
            task.orientation_weight * full.block<3, 1>(3, active[k]);
      }
    }
    bool better;
    if (options.position_priority) {
      // Position first; among positions already within kPositionSettled, orientation decides.
      const double key = std::max(pos_res, kPositionSettled);
      const double best_key = std::max(best_pos, kPositionSettled);
      better = key < best_key || (key == best_key && pos_res + ori_res < best_score);
      if (!orienting && pos_res <= kPositionSettled) orienting = true;
    } else {
      better = pos_res + ori_res < best_score;
    }
    if (better) {
      best_score = pos_res + ori_res;
      best_q = result.q;
      best_pos = pos_res;
      best_ori = ori_res;
    }
    result.iterations = iter;
    if (pos_res <= options.tolerance && ori_res <= options.tolerance) {
      result.converged = true;
      break;
    }
    if (iter >= options.max_iterations || active.empty()) break;

    // Joints pinned at a limit and pushed outward drop out of the step, which is then
    // re-solved over the rest; otherwise the projection alone stalls at the limit.
    const Eigen::MatrixXd damp = (options.damping * options.damping) * Eigen::MatrixXd::Identity(rows, rows);
    Eigen::VectorXd dq;
    std::vector<bool> pinned(active.size(), false);
    for (std::size_t pass = 0; pass <= active.size(); ++pass) {
      Eigen::MatrixXd j_free = jac;
      for (std::size_t k = 0; k < active.size(); ++k)
        if (pinned[k]) j_free.col(static_cast<Eigen::Index>(k)).setZero();
      if (!options.position_priority) {
        dq = j_free.transpose() * (j_free * j_free.transpose() + damp).ldlt().solve(error);
      } else if (orienting) {
        dq = prioritized_step(j_free, error, options.damping);
      } else {
        dq = prioritized_step(j_free, error, options.damping, false);
      }
      bool changed = false;
      for (std::size_t k = 0; k < active.size(); ++k) {
        if (pinned[k]) continue;
        const Joint& j = tree.joints[static_cast<std::size_t>(active[k])];
        const double qk = result.q[active[k]];
        const double step = dq(static_cast<Eigen::Index>(k));
        if ((qk <= j.lo && step < 0.0) || (qk >= j.hi && step > 0.0)) {
          pinned[k] = true;
          changed = true;
        }
      }
      if (!changed) break;
    }
    const double largest = dq.cwiseAbs().maxCoeff();
    if (largest > options.max_step) dq *= options.max_step / largest;
    for (std::size_t k = 0; k < active.size(); ++k) {
      const Eigen::Index i = active[k];
      const Joint& j = tree.joints[static_cast<std::size_t>(i)];
      result.q[i] = std::clamp(result.q[i] + dq(static_cast<Eigen::Index>(k)), j.lo, j.hi);
    }
  }

  result.q = best_q;
  result.position_residual = best_pos;
  result.orientation_residual = best_ori;
  for (Eigen::Index i : active) {
    const Joint& j = tree.joints[static_cast<std::size_t>(i)];
    if (result.q[i] <= j.lo || result.q[i] >= j.hi) result.limit_active = true;
  }
  return result;
}

}  // namespace hapticsim::entities
