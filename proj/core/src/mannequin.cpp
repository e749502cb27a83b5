#include "hapticsim/mannequin.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace hapticsim::entities {

namespace {

// Orientation error is weighted against position error (m) in the hand tasks; an arm is
// roughly half a meter long, so one radian counts like half a meter of position error.
constexpr double kHandOrientationWeight = 1.0;

}  // namespace

int MannequinModel::joint_index(const std::string& joint_name) const {
  for (std::size_t i = 0; i < tree.joints.size(); ++i) {
    if (tree.joints[i].name == joint_name) return static_cast<int>(i);
  }
  return -1;
}

void MannequinModel::validate() const {
  tree.validate();
  if (static_cast<int>(tree.dof()) != declared_dof) {
    throw std::invalid_argument("mannequin '" + name + "' declares " + std::to_string(declared_dof) +
                                " joints but defines " + std::to_string(tree.dof()));
  }
  if (segment_of_joint.size() != tree.dof()) {
    throw std::invalid_argument("mannequin '" + name + "': every joint needs a segment name");
  }
  std::set<std::string> names;
  for (const auto& j : tree.joints) {
    if (!names.insert(j.name).second) {
      throw std::invalid_argument("mannequin '" + name + "': duplicate joint '" + j.name + "'");
    }
  }
  for (const EndEffector* ee : {&left_hand, &right_hand}) {
    if (ee->joint < 0 || ee->joint >= static_cast<int>(tree.dof())) {
      throw std::invalid_argument("mannequin '" + name + "': hand end-effector references no joint");
    }
    require_valid(ee->offset, "mannequin hand offset");
  }
  for (int t : trunk_joints) {
    if (t < 0 || t >= static_cast<int>(tree.dof())) {
      throw std::invalid_argument("mannequin '" + name + "': trunk joint index out of range");
    }
  }
}

MannequinState neutral_state(const MannequinModel& model, const Pose& root) {
  MannequinState s{root, JointConfig::Zero(static_cast<Eigen::Index>(model.dof()))};
  for (std::size_t i = 0; i < model.dof(); ++i) {
    const auto& j = model.tree.joints[i];
    s.q[static_cast<Eigen::Index>(i)] = std::clamp(0.0, j.lo, j.hi);
  }
  return s;
}

Pose hand_pose(const MannequinModel& model, const MannequinState& state, Hand hand) {
  const EndEffector& ee = model.hand(hand);
  return joint_frames(model.tree, state.root, state.q)[static_cast<std::size_t>(ee.joint)] * ee.offset;
}

std::map<std::string, Pose> segment_poses(const MannequinModel& model, const MannequinState& state) {
  std::map<std::string, Pose> out{{"pelvis", state.root}};
  const auto frames = joint_frames(model.tree, state.root, state.q);
  // A segment driven by several joints takes the frame of the last (deepest) one.
  for (std::size_t i = 0; i < frames.size(); ++i) out[model.segment_of_joint[i]] = frames[i];
  return out;
}

MannequinDriveResult drive_mannequin(const MannequinModel& model, MannequinTarget mode, const Pose& target,
                                     const std::optional<Pose>& second, const MannequinState& state,
                                     const DlsOptions& options) {
  require_valid(target, "mannequin target");
  if (state.q.size() != static_cast<Eigen::Index>(model.dof())) {
    throw std::invalid_argument("mannequin state does not match the model joint count");
  }
  MannequinDriveResult result;
  result.state = state;
  if (mode == MannequinTarget::WholeBody) {
    result.state.root = target;
    return result;
  }
  if (mode == MannequinTarget::Both && !second) {
    throw std::invalid_argument("driving both hands requires two targets");
  }
  if (second) require_valid(*second, "mannequin second target");

  std::vector<DlsTask> tasks;
  std::vector<Hand> hands;
  if (mode == MannequinTarget::Left || mode == MannequinTarget::Both) hands.push_back(Hand::Left);
  if (mode == MannequinTarget::Right || mode == MannequinTarget::Both) hands.push_back(Hand::Right);
  std::vector<bool> movable(model.dof(), false);
  for (std::size_t k = 0; k < hands.size(); ++k) {
    const EndEffector& ee = model.hand(hands[k]);
    const Pose& goal = (mode == MannequinTarget::Both && k == 1) ? *second : target;
    tasks.push_back({ee.joint, ee.offset, goal, kHandOrientationWeight});
    for (int j : model.tree.chain_to(ee.joint)) movable[static_cast<std::size_t>(j)] = true;
  }
  if (model.trunk_locked) {
    for (int t : model.trunk_joints) movable[static_cast<std::size_t>(t)] = false;
  }

  DlsOptions prioritized = options;
  prioritized.position_priority = true;
  const DlsResult dls = solve_dls(model.tree, state.root, state.q, movable, tasks, prioritized);
  result.state.q = dls.q;
  result.iterations = dls.iterations;
  result.converged = dls.converged;
  for (Hand h : hands) {
    const double err = (hand_pose(model, result.state, h).position -
                        ((mode == MannequinTarget::Both && h == Hand::Right) ? *second : target).position)
                           .norm();
    (h == Hand::Left ? result.left_residual : result.right_residual) = err;
  }
  return result;
}

}  // namespace hapticsim::entities
