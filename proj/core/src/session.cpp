#include "hapticsim/session.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

namespace hapticsim::runtime {

using entities::MannequinTarget;

namespace {

bool contains_any(const std::vector<std::string>& group, const std::set<std::string>& ids) {
  return std::any_of(group.begin(), group.end(), [&](const auto& id) { return ids.count(id) > 0; });
}

Pose mannequin_handle(const entities::MannequinModel& model, const entities::MannequinState& state,
                      MannequinTarget mode) {
  switch (mode) {
    case MannequinTarget::WholeBody: return state.root;
    case MannequinTarget::Right: return entities::hand_pose(model, state, entities::Hand::Right);
    case MannequinTarget::Left:
    case MannequinTarget::Both: return entities::hand_pose(model, state, entities::Hand::Left);
  }
  return state.root;
}

}  // namespace

std::vector<geometry::SceneEntity> robot_entities(const std::string& id, const entities::RobotModel& model,
                                                  const entities::JointConfig& q) {
  const auto frames = entities::link_poses(model, q);
  std::vector<geometry::SceneEntity> out;
  if (!model.base_shapes.empty()) {
    out.push_back({id + ".base", model.base_shapes, frames[0], geometry::EntityKind::RobotLink});
  }
  for (std::size_t i = 0; i < model.link_shapes.size() && i + 1 < frames.size(); ++i) {
    if (model.link_shapes[i].empty()) continue;
    out.push_back({id + ".link" + std::to_string(i), model.link_shapes[i], frames[i + 1],
                   geometry::EntityKind::RobotLink});
  }
  return out;
}

std::vector<geometry::SceneEntity> mannequin_entities(const std::string& id, const entities::MannequinModel& model,
                                                      const entities::MannequinState& state) {
  const auto poses = entities::segment_poses(model, state);
  std::vector<geometry::SceneEntity> out;
  for (const auto& [segment, shapes] : model.segment_shapes) {
    if (shapes.empty()) continue;
    auto it = poses.find(segment);
    if (it == poses.end()) throw std::invalid_argument("mannequin shape for unknown segment '" + segment + "'");
    out.push_back({id + "." + segment, shapes, it->second, geometry::EntityKind::MannequinSegment});
  }
  return out;
}

forcefield::ForceCommand interpolate_force(const std::optional<geometry::ProximityResult>& last,
                                           const Pose& last_mapped_pose, const Pose& current_mapped_pose,
                                           const forcefield::ForceParams& params, forcefield::ForceClass force_class,
                                           const Vec3& velocity, const std::optional<Vec3>& fallback_normal) {
  forcefield::ForceCommand zero;
  zero.force_class = force_class;
  if (!last) return zero;
  params.validate();
  require_finite(last_mapped_pose.position, "last mapped pose");
  require_finite(current_mapped_pose.position, "current mapped pose");

  const Vec3 n = forcefield::contact_normal(*last, fallback_normal);
  // Moving along +n (away from the environment) opens the gap.
  const Vec3 displacement = current_mapped_pose.position - last_mapped_pose.position;
  const double effective = std::max(0.0, last->distance + displacement.dot(n));
  geometry::ProximityResult adjusted = *last;
  adjusted.distance = effective;
  const double p = geometry::distance_in_safety_zone(adjusted, params.margin);
  if (p <= 0.0) return zero;
  return forcefield::render_along(n, p, params, force_class, velocity);
}

ManipulationSession::ManipulationSession(SessionConfig config)
    : config_(std::move(config)),
      governor_(config_.device.peak_force, config_.device.continuous_force, config_.force.rms_window) {
  config_.device.validate();
  config_.force.params.validate();
  config_.mapping.levels.validate();
  require_valid(config_.mapping.camera, "camera frame");
  if (!(config_.mapping.viewport_extent > 0.0)) throw std::invalid_argument("viewport extent must be > 0");
  if (config_.haptic_hz <= 0) throw std::invalid_argument("haptic rate must be > 0");

  scene_ = config_.scene;
  mapping_.frame_mode = config_.mapping.frame;
  mapping_.scale_kind = config_.mapping.scale;
  mapping_.levels = config_.mapping.levels;

  auto place = [&](const std::vector<geometry::SceneEntity>& ents) {
    for (const auto& e : ents) {
      if (scene_.contains(e.id)) {
        scene_.set_pose(e.id, e.pose);
      } else {
        scene_.add(e);
      }
      manipulated_ids_.push_back(e.id);
    }
  };

  std::visit(
      [&](auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, SolidDriver>) {
          scene_.entity(d.entity_id);  // throws UnknownEntityError
          if (d.pivot.kind == entities::PivotKind::UserFrame) require_valid(d.pivot.frame, "pivot frame");
          manipulated_ids_.push_back(d.entity_id);
        } else if constexpr (std::is_same_v<T, RobotDriver>) {
          d.model.validate();
          if (d.q.size() != static_cast<Eigen::Index>(d.model.dof())) {
            throw std::invalid_argument("robot '" + d.id + "' initial configuration has wrong size");
          }
          if (auto bad = entities::limit_violations(d.model.chain, d.q); !bad.empty()) {
            throw entities::JointLimitError(bad);
          }
          if (!(d.limit_zone > 0.0)) throw std::invalid_argument("joint limit zone must be > 0");
          place(robot_entities(d.id, d.model, d.q));
        } else {
          d.model.validate();
          if (d.state.q.size() != static_cast<Eigen::Index>(d.model.dof())) {
            throw std::invalid_argument("mannequin '" + d.id + "' state has wrong size");
          }
          place(mannequin_entities(d.id, d.model, d.state));
        }
      },
      config_.driver);
  if (manipulated_ids_.empty()) throw std::invalid_argument("manipulated entity has no geometry in the scene");
}

std::string ManipulationSession::primary_id() const {
  return std::visit(
      [](const auto& d) -> std::string {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, SolidDriver>) {
          return d.entity_id;
        } else {
          return d.id;
        }
      },
      config_.driver);
}

Pose ManipulationSession::committed_handle() const {
  return std::visit(
      [&](const auto& d) -> Pose {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, SolidDriver>) {
          return entities::pivot_frame(scene_.entity(d.entity_id), d.pivot);
        } else if constexpr (std::is_same_v<T, RobotDriver>) {
          return entities::robot_handle_pose(d.model, d.q);
        } else {
          return mannequin_handle(d.model, d.state, d.mode);
        }
      },
      config_.driver);
}

Pose ManipulationSession::committed_pose() const {
  if (const auto* s = std::get_if<SolidDriver>(&config_.driver)) return scene_.entity(s->entity_id).pose;
  return committed_handle();
}

Mat3 ManipulationSession::device_to_scene() const {
  return mapping::frame_rotation(mapping_.frame_mode, config_.mapping.camera);
}

void ManipulationSession::engage(const mapping::StylusState& state) {
  mapping_ = mapping::engage(mapping_, state, committed_handle());
  engaged_entity_.reset();
  engaged_left_hand_.reset();
  engaged_right_hand_.reset();
  if (const auto* s = std::get_if<SolidDriver>(&config_.driver)) {
    engaged_entity_ = scene_.entity(s->entity_id);
  } else if (const auto* m = std::get_if<MannequinDriver>(&config_.driver)) {
    engaged_left_hand_ = entities::hand_pose(m->model, m->state, entities::Hand::Left);
    engaged_right_hand_ = entities::hand_pose(m->model, m->state, entities::Hand::Right);
  }
  reach_failed_ = false;
}

void ManipulationSession::update_stylus(const mapping::StylusState& state) {
  require_valid(state.pose, "stylus pose");
  const bool pressed = state.button && !last_button_;
  const bool released = !state.button && last_button_;
  last_button_ = state.button;
  const std::optional<mapping::StylusState> previous = last_state_;
  last_state_ = state;
  if (pressed) engage(state);
  if (released) {
    mapping_ = mapping::disengage(mapping_);
    mapped_.reset();
    velocity_ = Vec3::Zero();
    reach_failed_ = false;
    return;
  }
  if (!mapping_.engaged) return;

  const auto mapped = mapping::map_stylus(state, mapping_, config_.mapping.camera, config_.mapping.viewport_extent,
                                          config_.device);
  if (mapped_ && !pressed && previous && state.tick > previous->tick) {
    // Samples may be several ticks apart (e.g. a remote client polling the device).
    const double dt = static_cast<double>(state.tick - previous->tick) / config_.haptic_hz;
    velocity_ = (mapped.pose.position - mapped_->position) / dt;
  } else {
    velocity_ = Vec3::Zero();
  }
  mapped_ = mapped.pose;
}

ManipulationSession::Candidate ManipulationSession::make_candidate(const Pose& mapped) const {
  Candidate c{{}, config_.driver};
  std::visit(
      [&](auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, SolidDriver>) {
          const Pose delta = entities::handle_delta(mapping_.anchor_scene, mapped);
          c.poses.emplace_back(d.entity_id, entities::move_solid(*engaged_entity_, d.pivot, delta));
        } else if constexpr (std::is_same_v<T, RobotDriver>) {
          auto drive = entities::drive_robot(d.model, mapped, d.q, d.ik);
          if (auto* base = std::get_if<Pose>(&drive)) {
            d.model.base_pose = *base;
          } else {
            d.q = std::get<entities::JointConfig>(drive);
          }
        } else {
          std::optional<Pose> second;
          Pose first = mapped;
          if (d.mode == MannequinTarget::Both) {
            // Both hands keep the grip they had at engage.
            second = mapped * (engaged_left_hand_->inverse() * *engaged_right_hand_);
          }
          d.state = entities::drive_mannequin(d.model, d.mode, first, second, d.state, d.dls).state;
        }
      },
      c.driver);
  if (c.poses.empty()) c.poses = entity_poses(c.driver);
  return c;
}

std::vector<std::pair<std::string, Pose>> ManipulationSession::entity_poses(const Driver& driver) const {
  std::vector<std::pair<std::string, Pose>> out;
  std::vector<geometry::SceneEntity> ents;
  if (const auto* s = std::get_if<SolidDriver>(&driver)) {
    out.emplace_back(s->entity_id, scene_.entity(s->entity_id).pose);
    return out;
  }
  if (const auto* r = std::get_if<RobotDriver>(&driver)) ents = robot_entities(r->id, r->model, r->q);
  if (const auto* m = std::get_if<MannequinDriver>(&driver)) ents = mannequin_entities(m->id, m->model, m->state);
  for (auto& e : ents) out.emplace_back(e.id, e.pose);
  return out;
}

std::optional<geometry::ProximityResult> ManipulationSession::proximity(
    const std::vector<std::pair<std::string, Pose>>& poses) const {
  const std::set<std::string> moving(manipulated_ids_.begin(), manipulated_ids_.end());
  std::vector<geometry::SceneEntity> ents = scene_.entities();
  for (auto& e : ents) {
    for (const auto& [id, pose] : poses) {
      if (e.id == id) e.pose = pose;
    }
  }
  std::optional<geometry::ProximityResult> best;
  for (const auto& g : scene_.check_groups()) {
    geometry::CheckGroupPair oriented;
    if (contains_any(g.group_a, moving)) {
      oriented = g;
    } else if (contains_any(g.group_b, moving)) {
      oriented = {g.group_b, g.group_a};
    } else {
      continue;
    }
    auto r = geometry::group_min_distance(ents, oriented);
    const bool better = !best || r.distance < best->distance ||
                        (r.distance == best->distance && std::tie(r.id_a, r.id_b) < std::tie(best->id_a, best->id_b));
    if (better) best = std::move(r);
    if (best->colliding) break;
  }
  return best;
}

ProximityStep ManipulationSession::proximity_step() {
  ProximityStep step;
  Candidate cand;
  const bool moving = mapping_.engaged && mapped_.has_value();
  bool reach_failed = false;
  if (moving) {
    try {
      cand = make_candidate(*mapped_);
    } catch (const entities::IkError& e) {
      step.driver_error = std::string("inverse kinematics: ") + e.what();
      reach_failed = true;
      cand = {entity_poses(config_.driver), config_.driver};
    } catch (const std::exception& e) {
      step.driver_error = e.what();
      cand = {entity_poses(config_.driver), config_.driver};
    }
  } else {
    cand = {entity_poses(config_.driver), config_.driver};
  }
  reach_failed_ = reach_failed;

  try {
    step.result = proximity(cand.poses);
  } catch (const std::exception& e) {
    step.driver_error = e.what();
    return step;
  }

  if (step.result) {
    try {
      normals_.normal_for(*step.result);
    } catch (const forcefield::DegenerateContactError& e) {
      // Colliding before any free result: there is no normal to render along yet.
      step.driver_error = e.what();
    }
  }

  if (step.result && step.result->colliding) {
    step.rejected = moving;
  } else if (moving && !reach_failed) {
    for (const auto& [id, pose] : cand.poses) scene_.set_pose(id, pose);
    config_.driver = std::move(cand.driver);
    step.committed = true;
  }
  last_result_ = step.result;
  mapped_at_result_ = mapped_;
  return step;
}

ForceSample ManipulationSession::haptic_force() {
  ForceSample out;
  out.scene.force_class = config_.force.force_class;
  if (config_.force.enabled && mapping_.engaged && mapped_) {
    const Pose reference = mapped_at_result_ ? *mapped_at_result_ : *mapped_;
    try {
      out.scene = interpolate_force(last_result_, reference, *mapped_, config_.force.params,
                                    config_.force.force_class, velocity_, normals_.last());
    } catch (const forcefield::DegenerateContactError&) {
      out.scene = {};
      out.scene.force_class = config_.force.force_class;
    }
    if (const auto* r = std::get_if<RobotDriver>(&config_.driver)) {
      if (r->model.attach_mode == entities::AttachMode::Tcpf) {
        out.scene.force += entities::joint_limit_cartesian_force(r->model, r->q, r->limit_zone, r->limit_stiffness);
        if (reach_failed_) {
          // Unreachable or limit-only targets behave as an obstacle around the last reachable TCP.
          const Vec3 tcp = entities::robot_handle_pose(r->model, r->q).position;
          out.scene.force += r->reach_stiffness * (tcp - mapped_->position);
        }
      }
    }
  }
  forcefield::ForceCommand device = out.scene;
  device.force = device_to_scene().transpose() * out.scene.force;
  out.device = governor_.apply(device);
  return out;
}

void ManipulationSession::release() {
  mapping_ = mapping::disengage(mapping_);
  last_button_ = false;
  mapped_.reset();
  mapped_at_result_.reset();
  velocity_ = Vec3::Zero();
  reach_failed_ = false;
}

void ManipulationSession::reanchor() {
  if (mapping_.engaged && last_state_) {
    engage(*last_state_);
    mapped_ = mapping::map_stylus(*last_state_, mapping_, config_.mapping.camera, config_.mapping.viewport_extent,
                                  config_.device)
                  .pose;
    mapped_at_result_ = mapped_;
    velocity_ = Vec3::Zero();
  }
}

void ManipulationSession::set_scale(mapping::ScaleKind kind, std::optional<double> value) {
  if (value) {
    if (!(*value > 0.0) || !std::isfinite(*value)) throw std::invalid_argument("scale value must be > 0");
    switch (kind) {
      case mapping::ScaleKind::Rough: mapping_.levels.rough = *value; break;
      case mapping::ScaleKind::Medium: mapping_.levels.medium = *value; break;
      case mapping::ScaleKind::Fine: mapping_.levels.fine = *value; break;
      case mapping::ScaleKind::ScreenAdaptive: config_.mapping.viewport_extent = *value; break;
    }
  }
  mapping_.scale_kind = kind;
  config_.mapping.scale = kind;
  config_.mapping.levels = mapping_.levels;
  reanchor();
}

void ManipulationSession::set_frame(const mapping::FrameMode& mode) {
  if (mode.kind == mapping::FrameKind::UserDefined) require_valid(mode.frame, "user frame");
  mapping_.frame_mode = mode;
  config_.mapping.frame = mode;
  reanchor();
}

void ManipulationSession::set_camera(const Pose& camera, double viewport_extent) {
  require_valid(camera, "camera frame");
  if (!(viewport_extent > 0.0) || !std::isfinite(viewport_extent)) {
    throw std::invalid_argument("viewport extent must be > 0");
  }
  config_.mapping.camera = camera;
  config_.mapping.viewport_extent = viewport_extent;
  reanchor();
}

void ManipulationSession::set_pivot(const entities::PivotMode& pivot) {
  auto* s = std::get_if<SolidDriver>(&config_.driver);
  if (!s) throw std::logic_error("pivot modes apply to solids only");
  if (pivot.kind == entities::PivotKind::UserFrame) require_valid(pivot.frame, "pivot frame");
  s->pivot = pivot;
  reanchor();
}

void ManipulationSession::set_force_class(forcefield::ForceClass c) { config_.force.force_class = c; }

void ManipulationSession::set_force_enabled(bool enabled) { config_.force.enabled = enabled; }

}  // namespace hapticsim::runtime
