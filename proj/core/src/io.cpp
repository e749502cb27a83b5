#include "hapticsim/io.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <fstream>
#include <set>
#include <sstream>

namespace hapticsim::io {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string Diagnostic::to_string() const {
  std::string s = file;
  s += pointer.empty() ? std::string(": ") : ":" + pointer + ": ";
  return s + message;
}

namespace {

std::string join_messages(const std::vector<Diagnostic>& d) {
  std::string s;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (i) s += "\n";
    s += d[i].to_string();
  }
  return s;
}

constexpr double kQuatTolerance = 1e-6;

std::string escape_token(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') {
      out += "~0";
    } else if (c == '/') {
      out += "~1";
    } else {
      out += c;
    }
  }
  return out;
}

std::string at(const std::string& ptr, const std::string& key) { return ptr + "/" + escape_token(key); }
std::string at(const std::string& ptr, std::size_t i) { return ptr + "/" + std::to_string(i); }

/// Collects diagnostics for one file instead of stopping at the first problem.
struct Ctx {
  std::string file;
  fs::path dir;
  std::vector<Diagnostic>* diags;

  void error(const std::string& ptr, const std::string& msg) const { diags->push_back({file, ptr, msg}); }
  fs::path resolve(const std::string& p) const {
    const fs::path path(p);
    return path.is_absolute() ? path : dir / path;
  }
};

const json* field(const Ctx& c, const json& obj, const std::string& key, const std::string& ptr, bool required) {
  if (!obj.is_object()) return nullptr;
  auto it = obj.find(key);
  if (it == obj.end()) {
    if (required) c.error(at(ptr, key), "missing required field '" + key + "'");
    return nullptr;
  }
  return &*it;
}

std::optional<double> number(const Ctx& c, const json& j, const std::string& ptr) {
  if (!j.is_number()) {
    c.error(ptr, "expected a number");
    return std::nullopt;
  }
  const double v = j.get<double>();
  if (!std::isfinite(v)) {
    c.error(ptr, "number must be finite");
    return std::nullopt;
  }
  return v;
}

double number_or(const Ctx& c, const json& obj, const std::string& key, const std::string& ptr, double fallback,
                 bool required = false) {
  const json* j = field(c, obj, key, ptr, required);
  if (!j) return fallback;
  return number(c, *j, at(ptr, key)).value_or(fallback);
}

std::optional<std::string> string(const Ctx& c, const json& j, const std::string& ptr) {
  if (!j.is_string()) {
    c.error(ptr, "expected a string");
    return std::nullopt;
  }
  return j.get<std::string>();
}

std::optional<bool> boolean(const Ctx& c, const json& j, const std::string& ptr) {
  if (!j.is_boolean()) {
    c.error(ptr, "expected true or false");
    return std::nullopt;
  }
  return j.get<bool>();
}

template <int N>
std::optional<Eigen::Matrix<double, N, 1>> vector_n(const Ctx& c, const json& j, const std::string& ptr) {
  if (!j.is_array() || j.size() != N) {
    c.error(ptr, "expected an array of " + std::to_string(N) + " numbers");
    return std::nullopt;
  }
  Eigen::Matrix<double, N, 1> v;
  bool ok = true;
  for (int i = 0; i < N; ++i) {
    auto x = number(c, j[i], at(ptr, static_cast<std::size_t>(i)));
    if (x) {
      v[i] = *x;
    } else {
      ok = false;
    }
  }
  if (!ok) return std::nullopt;
  return v;
}

std::optional<Vec3> vec3(const Ctx& c, const json& j, const std::string& ptr) { return vector_n<3>(c, j, ptr); }

std::optional<Quat> quaternion(const Ctx& c, const json& j, const std::string& ptr) {
  auto v = vector_n<4>(c, j, ptr);
  if (!v) return std::nullopt;
  Quat q((*v)[0], (*v)[1], (*v)[2], (*v)[3]);
  if (std::abs(q.norm() - 1.0) > kQuatTolerance) {
    c.error(ptr, "quaternion [w, x, y, z] must have unit norm");
    return std::nullopt;
  }
  // Accept hand-typed decimals (e.g. 0.7071) and store an exactly normalized value.
  if (q.norm() != 1.0) q.normalize();
  return q;
}

/// {"position": [x,y,z], "orientation": [w,x,y,z]} or {"position", "axis_angle_deg": {"axis", "angle"}}.
Pose pose(const Ctx& c, const json& j, const std::string& ptr) {
  Pose p;
  if (!j.is_object()) {
    c.error(ptr, "expected a pose object {position, orientation}");
    return p;
  }
  for (const auto& [k, _] : j.items()) {
    if (k != "position" && k != "orientation" && k != "axis_angle_deg") c.error(at(ptr, k), "unknown pose field");
  }
  if (const json* pos = field(c, j, "position", ptr, false)) p.position = vec3(c, *pos, at(ptr, "position")).value_or(Vec3::Zero());
  const json* ori = field(c, j, "orientation", ptr, false);
  const json* aa = field(c, j, "axis_angle_deg", ptr, false);
  if (ori && aa) c.error(ptr, "give either orientation or axis_angle_deg, not both");
  if (ori) p.orientation = quaternion(c, *ori, at(ptr, "orientation")).value_or(Quat::Identity());
  if (aa) {
    const std::string aptr = at(ptr, "axis_angle_deg");
    const json* axis = field(c, *aa, "axis", aptr, true);
    const double deg = number_or(c, *aa, "angle", aptr, 0.0, true);
    if (axis) {
      if (auto ax = vec3(c, *axis, at(aptr, "axis"))) {
        if (ax->norm() == 0.0) {
          c.error(at(aptr, "axis"), "rotation axis must be non-zero");
        } else {
          p.orientation = Quat(Eigen::AngleAxisd(deg * std::numbers::pi / 180.0, ax->normalized()));
        }
      }
    }
  }
  return p;
}

Pose pose_field(const Ctx& c, const json& obj, const std::string& key, const std::string& ptr) {
  const json* j = field(c, obj, key, ptr, false);
  return j ? pose(c, *j, at(ptr, key)) : Pose{};
}

std::optional<geometry::ConvexShape> shape(const Ctx& c, const json& j, const std::string& ptr) {
  if (!j.is_object()) {
    c.error(ptr, "expected a shape object ({\"box\": ...} or {\"vertices\": ...})");
    return std::nullopt;
  }
  if (const json* box = field(c, j, "box", ptr, false)) {
    const std::string bptr = at(ptr, "box");
    const json* half = field(c, *box, "half_extents", bptr, true);
    auto h = half ? vec3(c, *half, at(bptr, "half_extents")) : std::nullopt;
    Vec3 center = Vec3::Zero();
    if (const json* ce = field(c, *box, "center", bptr, false)) center = vec3(c, *ce, at(bptr, "center")).value_or(center);
    if (!h) return std::nullopt;
    if ((h->array() < 0.0).any()) {
      c.error(at(bptr, "half_extents"), "half extents must be >= 0");
      return std::nullopt;
    }
    return geometry::ConvexShape::box(*h, center);
  }
  if (const json* verts = field(c, j, "vertices", ptr, false)) {
    const std::string vptr = at(ptr, "vertices");
    if (!verts->is_array() || verts->empty()) {
      c.error(vptr, "a shape needs at least one vertex");
      return std::nullopt;
    }
    std::vector<Vec3> vs;
    bool ok = true;
    for (std::size_t i = 0; i < verts->size(); ++i) {
      auto v = vec3(c, (*verts)[i], at(vptr, i));
      if (v) {
        vs.push_back(*v);
      } else {
        ok = false;
      }
    }
    if (!ok) return std::nullopt;
    return geometry::ConvexShape(std::move(vs));
  }
  c.error(ptr, "shape needs a 'box' or 'vertices' field");
  return std::nullopt;
}

std::vector<geometry::ConvexShape> shapes(const Ctx& c, const json& j, const std::string& ptr) {
  std::vector<geometry::ConvexShape> out;
  if (!j.is_array()) {
    c.error(ptr, "expected an array of shapes");
    return out;
  }
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (auto s = shape(c, j[i], at(ptr, i))) out.push_back(std::move(*s));
  }
  return out;
}

std::optional<json> read_json(const fs::path& path, std::vector<Diagnostic>& diags) {
  std::ifstream in(path);
  if (!in) {
    diags.push_back({path.string(), "", "cannot open file " + path.string()});
    return std::nullopt;
  }
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    diags.push_back({path.string(), "", std::string("invalid JSON: ") + e.what()});
    return std::nullopt;
  }
}

void check_header(const Ctx& c, const json& j, const std::string& expected) {
  if (!j.is_object()) {
    c.error("", "top level must be a JSON object");
    return;
  }
  if (const json* f = field(c, j, "format", "", true)) {
    auto s = string(c, *f, "/format");
    if (s && *s != expected) c.error("/format", "expected format '" + expected + "', found '" + *s + "'");
  }
  if (const json* v = field(c, j, "version", "", true)) {
    if (!v->is_number_integer() || v->get<int>() != 1) c.error("/version", "unsupported version (expected 1)");
  }
}

geometry::EntityKind entity_kind(const Ctx& c, const json& j, const std::string& ptr) {
  auto s = string(c, j, ptr);
  if (!s) return geometry::EntityKind::Solid;
  if (*s == "solid") return geometry::EntityKind::Solid;
  if (*s == "robot_link") return geometry::EntityKind::RobotLink;
  if (*s == "mannequin_segment") return geometry::EntityKind::MannequinSegment;
  c.error(ptr, "unknown entity kind '" + *s + "' (solid, robot_link, mannequin_segment)");
  return geometry::EntityKind::Solid;
}

std::vector<std::string> id_list(const Ctx& c, const json& j, const std::string& ptr) {
  std::vector<std::string> out;
  if (!j.is_array()) {
    c.error(ptr, "expected an array of entity ids");
    return out;
  }
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (auto s = string(c, j[i], at(ptr, i))) out.push_back(*s);
  }
  return out;
}

/// `extra` entities (robot links, mannequin segments) join the scene before check groups
/// are resolved, so groups may name them. A scene read on its own (`standalone`) cannot see
/// those parts: dotted ids ("<id>.<part>") are left for the scenario to resolve.
geometry::Scene parse_scene(const Ctx& c, const json& j, const std::vector<geometry::SceneEntity>& extra,
                            bool standalone = false) {
  check_header(c, j, "hapticsim.scene");
  geometry::Scene scene;
  std::set<std::string> ids;
  if (const json* ents = field(c, j, "entities", "", true)) {
    if (!ents->is_array()) c.error("/entities", "expected an array");
    for (std::size_t i = 0; ents->is_array() && i < ents->size(); ++i) {
      const json& e = (*ents)[i];
      const std::string ptr = at("/entities", i);
      geometry::SceneEntity ent;
      if (const json* id = field(c, e, "id", ptr, true)) ent.id = string(c, *id, at(ptr, "id")).value_or("");
      if (const json* k = field(c, e, "kind", ptr, false)) ent.kind = entity_kind(c, *k, at(ptr, "kind"));
      ent.pose = pose_field(c, e, "pose", ptr);
      if (const json* s = field(c, e, "shapes", ptr, true)) ent.shapes = shapes(c, *s, at(ptr, "shapes"));
      if (ent.id.empty()) {
        c.error(at(ptr, "id"), "entity id must be a non-empty string");
        continue;
      }
      if (!ids.insert(ent.id).second) {
        c.error(at(ptr, "id"), "duplicate entity id '" + ent.id + "'");
        continue;
      }
      if (ent.shapes.empty()) {
        c.error(at(ptr, "shapes"), "entity '" + ent.id + "' has no valid shapes");
        continue;
      }
      scene.add(std::move(ent));
    }
  }
  for (const auto& e : extra) {
    if (!ids.insert(e.id).second) {
      c.error("/entities", "entity id '" + e.id + "' collides with a manipulated robot/mannequin part");
      continue;
    }
    scene.add(e);
  }
  if (const json* groups = field(c, j, "check_groups", "", false)) {
    if (!groups->is_array()) c.error("/check_groups", "expected an array");
    for (std::size_t i = 0; groups->is_array() && i < groups->size(); ++i) {
      const json& g = (*groups)[i];
      const std::string ptr = at("/check_groups", i);
      geometry::CheckGroupPair pair;
      if (const json* a = field(c, g, "a", ptr, true)) pair.group_a = id_list(c, *a, at(ptr, "a"));
      if (const json* b = field(c, g, "b", ptr, true)) pair.group_b = id_list(c, *b, at(ptr, "b"));
      bool ok = true;
      for (const auto& [key, list] : {std::pair{"a", &pair.group_a}, std::pair{"b", &pair.group_b}}) {
        for (std::size_t k = 0; k < list->size(); ++k) {
          if (!ids.count((*list)[k]) && standalone && (*list)[k].find('.') != std::string::npos) {
            ok = false;
          } else if (!ids.count((*list)[k])) {
            c.error(at(at(ptr, key), k), "unknown entity id '" + (*list)[k] + "'");
            ok = false;
          }
        }
      }
      if (!ok) continue;
      try {
        scene.add_check_group(std::move(pair));
      } catch (const std::exception& e) {
        c.error(ptr, e.what());
      }
    }
  }
  return scene;
}

std::pair<double, double> limits(const Ctx& c, const json& j, const std::string& ptr) {
  auto v = vector_n<2>(c, j, ptr);
  if (!v) return {-std::numbers::pi, std::numbers::pi};
  if (!((*v)[0] < (*v)[1])) c.error(ptr, "joint limits need lo < hi");
  return {(*v)[0], (*v)[1]};
}

entities::JointType joint_type(const Ctx& c, const json& obj, const std::string& ptr) {
  const json* t = field(c, obj, "type", ptr, false);
  if (!t) return entities::JointType::Revolute;
  auto s = string(c, *t, at(ptr, "type"));
  if (s && *s == "prismatic") return entities::JointType::Prismatic;
  if (s && *s != "revolute") c.error(at(ptr, "type"), "joint type must be 'revolute' or 'prismatic'");
  return entities::JointType::Revolute;
}

Vec3 unit_axis(const Ctx& c, const json& obj, const std::string& ptr) {
  const json* a = field(c, obj, "axis", ptr, false);
  if (!a) return Vec3::UnitZ();
  auto v = vec3(c, *a, at(ptr, "axis"));
  if (!v) return Vec3::UnitZ();
  if (std::abs(v->norm() - 1.0) > 1e-9) {
    c.error(at(ptr, "axis"), "joint axis must be a unit vector");
    return Vec3::UnitZ();
  }
  return *v;
}

entities::RobotModel parse_robot(const Ctx& c, const json& j) {
  check_header(c, j, "hapticsim.robot");
  entities::RobotModel m;
  if (const json* n = field(c, j, "name", "", false)) m.name = string(c, *n, "/name").value_or("");
  m.base_pose = pose_field(c, j, "base_pose", "");
  m.tool_frame = pose_field(c, j, "tool_frame", "");
  if (const json* a = field(c, j, "attach_mode", "", false)) {
    auto s = string(c, *a, "/attach_mode");
    if (s && *s == "base") {
      m.attach_mode = entities::AttachMode::Base;
    } else if (s && *s != "tcpf") {
      c.error("/attach_mode", "attach_mode must be 'base' or 'tcpf'");
    }
  }
  if (const json* a = field(c, j, "analytic", "", false)) {
    auto s = string(c, *a, "/analytic");
    if (s && *s == "planar2r") {
      m.analytic = entities::AnalyticSolver::Planar2R;
    } else if (s && *s == "planar3r") {
      m.analytic = entities::AnalyticSolver::Planar3R;
    } else if (s && *s != "none") {
      c.error("/analytic", "analytic must be 'none', 'planar2r' or 'planar3r'");
    }
  }
  if (const json* s = field(c, j, "base_shapes", "", false)) m.base_shapes = shapes(c, *s, "/base_shapes");
  const std::size_t errors_before = c.diags->size();
  if (const json* js = field(c, j, "joints", "", true)) {
    if (!js->is_array() || js->empty()) c.error("/joints", "a robot needs at least one joint");
    for (std::size_t i = 0; js->is_array() && i < js->size(); ++i) {
      const json& e = (*js)[i];
      const std::string ptr = at("/joints", i);
      entities::Joint jt;
      jt.name = "j" + std::to_string(i + 1);
      if (const json* n = field(c, e, "name", ptr, false)) jt.name = string(c, *n, at(ptr, "name")).value_or(jt.name);
      jt.type = joint_type(c, e, ptr);
      jt.axis = unit_axis(c, e, ptr);
      jt.origin = pose_field(c, e, "origin", ptr);
      if (const json* l = field(c, e, "limits", ptr, true)) std::tie(jt.lo, jt.hi) = limits(c, *l, at(ptr, "limits"));
      jt.parent = static_cast<int>(i) - 1;
      m.chain.joints.push_back(jt);
      std::vector<geometry::ConvexShape> link;
      if (const json* s = field(c, e, "shapes", ptr, false)) link = shapes(c, *s, at(ptr, "shapes"));
      m.link_shapes.push_back(std::move(link));
    }
  }
  if (c.diags->size() == errors_before && !m.chain.joints.empty()) {
    try {
      m.validate();
    } catch (const std::exception& e) {
      c.error("", e.what());
    }
  }
  return m;
}

entities::MannequinModel parse_mannequin(const Ctx& c, const json& j) {
  check_header(c, j, "hapticsim.mannequin");
  entities::MannequinModel m;
  if (const json* n = field(c, j, "name", "", false)) m.name = string(c, *n, "/name").value_or("");
  if (const json* d = field(c, j, "dof", "", true)) {
    if (!d->is_number_integer() || d->get<int>() <= 0) {
      c.error("/dof", "dof must be a positive integer");
    } else {
      m.declared_dof = d->get<int>();
    }
  }
  std::map<std::string, int> index;
  const std::size_t errors_before = c.diags->size();
  if (const json* js = field(c, j, "joints", "", true)) {
    if (!js->is_array()) c.error("/joints", "expected an array");
    for (std::size_t i = 0; js->is_array() && i < js->size(); ++i) {
      const json& e = (*js)[i];
      const std::string ptr = at("/joints", i);
      entities::Joint jt;
      if (const json* n = field(c, e, "name", ptr, true)) jt.name = string(c, *n, at(ptr, "name")).value_or("");
      std::string segment;
      if (const json* s = field(c, e, "segment", ptr, true)) segment = string(c, *s, at(ptr, "segment")).value_or("");
      if (const json* p = field(c, e, "parent", ptr, false); p && !p->is_null()) {
        auto pn = string(c, *p, at(ptr, "parent"));
        if (pn) {
          auto it = index.find(*pn);
          if (it == index.end()) {
            c.error(at(ptr, "parent"), "parent joint '" + *pn + "' must be declared before its children");
          } else {
            jt.parent = it->second;
          }
        }
      }
      jt.type = joint_type(c, e, ptr);
      jt.axis = unit_axis(c, e, ptr);
      jt.origin = pose_field(c, e, "origin", ptr);
      if (const json* l = field(c, e, "limits", ptr, true)) std::tie(jt.lo, jt.hi) = limits(c, *l, at(ptr, "limits"));
      if (!jt.name.empty() && !index.emplace(jt.name, static_cast<int>(i)).second) {
        c.error(at(ptr, "name"), "duplicate joint name '" + jt.name + "'");
      }
      m.tree.joints.push_back(jt);
      m.segment_of_joint.push_back(segment);
    }
  }
  if (m.declared_dof > 0 && static_cast<int>(m.tree.joints.size()) != m.declared_dof) {
    c.error("/joints", "declares " + std::to_string(m.declared_dof) + " DOF but lists " +
                           std::to_string(m.tree.joints.size()) + " joints");
  }
  auto end_effector = [&](const char* key) {
    entities::EndEffector ee;
    const std::string ptr = at("", key);
    const json* h = field(c, j, key, "", true);
    if (!h) return ee;
    if (const json* jn = field(c, *h, "joint", ptr, true)) {
      if (auto name = string(c, *jn, at(ptr, "joint"))) {
        auto it = index.find(*name);
        if (it == index.end()) {
          c.error(at(ptr, "joint"), "unknown joint '" + *name + "'");
        } else {
          ee.joint = it->second;
        }
      }
    }
    ee.offset = pose_field(c, *h, "offset", ptr);
    return ee;
  };
  m.left_hand = end_effector("left_hand");
  m.right_hand = end_effector("right_hand");
  if (const json* t = field(c, j, "trunk_joints", "", false)) {
    const auto names = id_list(c, *t, "/trunk_joints");
    for (std::size_t i = 0; i < names.size(); ++i) {
      auto it = index.find(names[i]);
      if (it == index.end()) {
        c.error(at("/trunk_joints", i), "unknown joint '" + names[i] + "'");
      } else {
        m.trunk_joints.push_back(it->second);
      }
    }
  }
  if (const json* t = field(c, j, "trunk_locked", "", false)) m.trunk_locked = boolean(c, *t, "/trunk_locked").value_or(false);
  if (const json* segs = field(c, j, "segments", "", false)) {
    if (!segs->is_object()) c.error("/segments", "expected an object mapping segment names to shape lists");
    std::set<std::string> known(m.segment_of_joint.begin(), m.segment_of_joint.end());
    known.insert("pelvis");
    for (const auto& [name, list] : segs->items()) {
      if (!known.count(name)) c.error(at("/segments", name), "segment '" + name + "' is not moved by any joint");
      m.segment_shapes[name] = shapes(c, list, at("/segments", name));
    }
  }
  if (c.diags->size() == errors_before) {
    try {
      m.validate();
    } catch (const std::exception& e) {
      c.error("", e.what());
    }
  }
  return m;
}

protocol::ScriptSegment script_segment(const Ctx& c, const json& j, const std::string& ptr) {
  protocol::ScriptSegment s;
  std::string kind = "hold";
  if (const json* k = field(c, j, "kind", ptr, true)) kind = string(c, *k, at(ptr, "kind")).value_or("hold");
  s.duration = number_or(c, j, "duration", ptr, 0.0, true);
  if (s.duration < 0.0) c.error(at(ptr, "duration"), "duration must be >= 0");
  auto v3 = [&](const char* key, Vec3& out, bool required) {
    if (const json* x = field(c, j, key, ptr, required)) out = vec3(c, *x, at(ptr, key)).value_or(out);
  };
  if (kind == "hold") {
    s.kind = protocol::SegmentKind::Hold;
  } else if (kind == "line") {
    s.kind = protocol::SegmentKind::Line;
    v3("target", s.target, true);
    if (const json* r = field(c, j, "rotation", ptr, false)) {
      s.rotation = quaternion(c, *r, at(ptr, "rotation")).value_or(Quat::Identity());
    }
  } else if (kind == "arc") {
    s.kind = protocol::SegmentKind::Arc;
    v3("center", s.center, true);
    v3("axis", s.axis, false);
    s.angle = number_or(c, j, "angle", ptr, 0.0, true);
    if (s.axis.norm() == 0.0) c.error(at(ptr, "axis"), "arc axis must be non-zero");
  } else if (kind == "sinusoid") {
    s.kind = protocol::SegmentKind::Sinusoid;
    v3("amplitude", s.amplitude, true);
    s.frequency = number_or(c, j, "frequency", ptr, 0.0, true);
  } else {
    c.error(at(ptr, "kind"), "segment kind must be hold, line, arc or sinusoid");
  }
  return s;
}

std::optional<protocol::StylusScript> parse_script(const Ctx& c, const json& j, const std::string& ptr,
                                                   const mapping::DeviceSpec& spec, int hz) {
  if (!j.is_object()) {
    c.error(ptr, "expected a stylus script object");
    return std::nullopt;
  }
  const std::size_t before = c.diags->size();
  Pose start = pose_field(c, j, "start", ptr);
  std::vector<protocol::ScriptSegment> segs;
  if (const json* s = field(c, j, "segments", ptr, true)) {
    if (!s->is_array()) c.error(at(ptr, "segments"), "expected an array");
    for (std::size_t i = 0; s->is_array() && i < s->size(); ++i) {
      segs.push_back(script_segment(c, (*s)[i], at(at(ptr, "segments"), i)));
    }
  }
  std::vector<protocol::ButtonEvent> buttons;
  if (const json* b = field(c, j, "buttons", ptr, false)) {
    if (!b->is_array()) c.error(at(ptr, "buttons"), "expected an array");
    for (std::size_t i = 0; b->is_array() && i < b->size(); ++i) {
      const json& e = (*b)[i];
      const std::string bptr = at(at(ptr, "buttons"), i);
      protocol::ButtonEvent ev;
      if (const json* t = field(c, e, "tick", bptr, false)) {
        if (!t->is_number_unsigned()) {
          c.error(at(bptr, "tick"), "tick must be a non-negative integer");
        } else {
          ev.tick = t->get<std::uint64_t>();
        }
      } else if (const json* ts = field(c, e, "t", bptr, false)) {
        const double sec = number(c, *ts, at(bptr, "t")).value_or(0.0);
        if (sec < 0.0) c.error(at(bptr, "t"), "time must be >= 0");
        ev.tick = static_cast<std::uint64_t>(std::llround(std::max(0.0, sec) * hz));
      } else {
        c.error(bptr, "button event needs 'tick' or 't'");
      }
      if (const json* p = field(c, e, "pressed", bptr, true)) ev.pressed = boolean(c, *p, at(bptr, "pressed")).value_or(false);
      buttons.push_back(ev);
    }
  }
  if (c.diags->size() != before) return std::nullopt;
  try {
    protocol::StylusScript script(start, std::move(segs), std::move(buttons), hz, spec);
    script.validate();
    return script;
  } catch (const std::exception& e) {
    c.error(ptr, e.what());
    return std::nullopt;
  }
}

void apply_overrides(json& j, const Overrides& overrides, std::vector<Diagnostic>& diags, const std::string& file) {
  for (const auto& [key, value] : overrides) {
    if (key.empty()) continue;
    json* node = &j;
    std::stringstream ss(key);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) parts.push_back(part);
    bool ok = true;
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
      if (!node->is_object()) {
        ok = false;
        break;
      }
      if (!node->contains(parts[i]) || (*node)[parts[i]].is_null()) (*node)[parts[i]] = json::object();
      node = &(*node)[parts[i]];
    }
    if (!ok || !node->is_object()) {
      diags.push_back({file, "", "cannot apply override '" + key + "'"});
      continue;
    }
    json parsed = json::parse(value, nullptr, false);
    (*node)[parts.back()] = parsed.is_discarded() ? json(value) : parsed;
  }
}

template <class T, class F>
std::optional<T> load_referenced(const Ctx& c, const json& obj, const std::string& ptr, const std::string& key,
                                 F&& parse) {
  const json* f = field(c, obj, key, ptr, true);
  if (!f) return std::nullopt;
  auto rel = string(c, *f, at(ptr, key));
  if (!rel) return std::nullopt;
  const fs::path p = c.resolve(*rel);
  if (!fs::exists(p)) {
    c.error(at(ptr, key), "file not found: " + p.string());
    return std::nullopt;
  }
  std::vector<Diagnostic> sub;
  auto doc = read_json(p, sub);
  std::optional<T> out;
  if (doc) {
    Ctx sc{p.string(), p.parent_path(), &sub};
    out = parse(sc, *doc);
  }
  if (!sub.empty()) out.reset();
  for (auto& d : sub) c.diags->push_back(std::move(d));
  return out;
}

entities::DlsOptions dls_options(const Ctx& c, const json& obj, const std::string& ptr) {
  entities::DlsOptions o;
  const json* d = field(c, obj, "dls", ptr, false);
  if (!d) return o;
  const std::string dp = at(ptr, "dls");
  o.damping = number_or(c, *d, "damping", dp, o.damping);
  o.tolerance = number_or(c, *d, "tolerance", dp, o.tolerance);
  o.max_step = number_or(c, *d, "max_step", dp, o.max_step);
  o.max_iterations = static_cast<int>(number_or(c, *d, "max_iterations", dp, o.max_iterations));
  if (o.damping < 0 || o.tolerance <= 0 || o.max_step <= 0 || o.max_iterations <= 0) {
    c.error(dp, "DLS options must be positive");
  }
  return o;
}

Scenario parse_scenario(const Ctx& c, const json& j) {
  check_header(c, j, "hapticsim.scenario");
  Scenario sc;

  // Rates first: the stylus script and the session use haptic_hz.
  if (const json* r = field(c, j, "rates", "", false)) {
    sc.rates.haptic_hz = static_cast<int>(number_or(c, *r, "haptic_hz", "/rates", 1000));
    sc.rates.proximity_hz = static_cast<int>(number_or(c, *r, "proximity_hz", "/rates", 100));
    sc.rates.publish_hz = static_cast<int>(number_or(c, *r, "publish_hz", "/rates", 10));
    if (const json* k = field(c, *r, "clock", "/rates", false)) {
      auto s = string(c, *k, "/rates/clock");
      if (s) {
        if (auto ck = runtime::parse_clock(*s)) {
          sc.rates.clock = *ck;
        } else {
          c.error("/rates/clock", "clock must be 'simulated' or 'wallclock'");
        }
      }
    }
    try {
      sc.rates.validate();
    } catch (const std::exception& e) {
      c.error("/rates", e.what());
    }
  }
  sc.session.haptic_hz = sc.rates.haptic_hz;

  if (const json* d = field(c, j, "duration", "", false)) {
    if (d->is_number()) {
      sc.duration = d->get<double>();
    } else if (d->is_string()) {
      try {
        sc.duration = parse_duration(d->get<std::string>());
      } catch (const std::exception& e) {
        c.error("/duration", e.what());
      }
    } else {
      c.error("/duration", "duration must be a number of seconds or a string like \"2s\"");
    }
    if (!(sc.duration >= 0.0) || !std::isfinite(sc.duration)) c.error("/duration", "duration must be >= 0");
  }

  // Manipulated entity.
  std::vector<geometry::SceneEntity> extra;
  std::optional<runtime::Driver> driver;
  const json* ent = field(c, j, "entity", "", true);
  if (ent) {
    std::string kind = "solid";
    if (const json* k = field(c, *ent, "kind", "/entity", true)) kind = string(c, *k, "/entity/kind").value_or("solid");
    std::string id;
    if (const json* i = field(c, *ent, "id", "/entity", true)) id = string(c, *i, "/entity/id").value_or("");
    if (kind == "solid") {
      runtime::SolidDriver s;
      s.entity_id = id;
      if (const json* p = field(c, *ent, "pivot", "/entity", false)) {
        std::string pk = "self_origin";
        if (p->is_string()) {
          pk = p->get<std::string>();
        } else if (const json* k = field(c, *p, "kind", "/entity/pivot", true)) {
          pk = string(c, *k, "/entity/pivot/kind").value_or(pk);
        }
        if (pk == "self_origin") {
          s.pivot = entities::PivotMode::self_origin();
        } else if (pk == "geometric_center") {
          s.pivot = entities::PivotMode::geometric_center();
        } else if (pk == "user") {
          s.pivot = entities::PivotMode::user(p->is_object() ? pose_field(c, *p, "frame", "/entity/pivot") : Pose{});
        } else {
          c.error("/entity/pivot", "pivot must be self_origin, geometric_center or user");
        }
      }
      driver = s;
    } else if (kind == "robot") {
      auto model = load_referenced<entities::RobotModel>(c, *ent, "/entity", "file",
                                                         [](const Ctx& sc2, const json& doc) { return parse_robot(sc2, doc); });
      if (model) {
        runtime::RobotDriver r;
        r.id = id;
        r.model = std::move(*model);
        if (const json* a = field(c, *ent, "attach", "/entity", false)) {
          auto s = string(c, *a, "/entity/attach");
          if (s && *s == "base") {
            r.model.attach_mode = entities::AttachMode::Base;
          } else if (s && *s == "tcpf") {
            r.model.attach_mode = entities::AttachMode::Tcpf;
          } else if (s) {
            c.error("/entity/attach", "attach must be 'base' or 'tcpf'");
          }
        }
        if (field(c, *ent, "base_pose", "/entity", false)) r.model.base_pose = pose_field(c, *ent, "base_pose", "/entity");
        r.q = entities::JointConfig::Zero(static_cast<Eigen::Index>(r.model.dof()));
        for (std::size_t i = 0; i < r.model.dof(); ++i) {
          r.q[static_cast<Eigen::Index>(i)] = std::clamp(0.0, r.model.chain.joints[i].lo, r.model.chain.joints[i].hi);
        }
        if (const json* q = field(c, *ent, "q", "/entity", false)) {
          if (!q->is_array() || q->size() != r.model.dof()) {
            c.error("/entity/q", "expected " + std::to_string(r.model.dof()) + " joint values");
          } else {
            for (std::size_t i = 0; i < q->size(); ++i) {
              r.q[static_cast<Eigen::Index>(i)] = number(c, (*q)[i], at("/entity/q", i)).value_or(0.0);
            }
            if (auto bad = entities::limit_violations(r.model.chain, r.q); !bad.empty()) {
              for (int b : bad) c.error(at("/entity/q", static_cast<std::size_t>(b)), "joint value outside its limits");
            }
          }
        }
        if (const json* m = field(c, *ent, "branch_metric", "/entity", false)) {
          auto s = string(c, *m, "/entity/branch_metric");
          if (s && *s == "euclidean") {
            r.ik.metric = entities::BranchMetric::Euclidean;
          } else if (s && *s != "max_norm") {
            c.error("/entity/branch_metric", "branch_metric must be 'max_norm' or 'euclidean'");
          }
        }
        if (const json* fb = field(c, *ent, "forced_branch", "/entity", false); fb && !fb->is_null()) {
          if (!fb->is_number_integer() || fb->get<int>() < 0) {
            c.error("/entity/forced_branch", "forced_branch must be a non-negative integer or null");
          } else {
            r.ik.forced_branch = fb->get<int>();
          }
        }
        r.ik.dls = dls_options(c, *ent, "/entity");
        r.limit_zone = number_or(c, *ent, "limit_zone", "/entity", r.limit_zone);
        r.limit_stiffness = number_or(c, *ent, "limit_stiffness", "/entity", r.limit_stiffness);
        r.reach_stiffness = number_or(c, *ent, "reach_stiffness", "/entity", r.reach_stiffness);
        if (!(r.limit_zone > 0.0)) c.error("/entity/limit_zone", "limit_zone must be > 0");
        if (!id.empty() && entities::limit_violations(r.model.chain, r.q).empty()) {
          extra = runtime::robot_entities(id, r.model, r.q);
        }
        driver = std::move(r);
      }
    } else if (kind == "mannequin") {
      auto model = load_referenced<entities::MannequinModel>(
          c, *ent, "/entity", "file", [](const Ctx& sc2, const json& doc) { return parse_mannequin(sc2, doc); });
      if (model) {
        runtime::MannequinDriver m;
        m.id = id;
        m.model = std::move(*model);
        if (const json* t = field(c, *ent, "trunk_locked", "/entity", false)) {
          m.model.trunk_locked = boolean(c, *t, "/entity/trunk_locked").value_or(m.model.trunk_locked);
        }
        if (const json* t = field(c, *ent, "target", "/entity", false)) {
          auto s = string(c, *t, "/entity/target");
          if (s && *s == "left") {
            m.mode = entities::MannequinTarget::Left;
          } else if (s && *s == "right") {
            m.mode = entities::MannequinTarget::Right;
          } else if (s && *s == "both") {
            m.mode = entities::MannequinTarget::Both;
          } else if (s && *s == "whole_body") {
            m.mode = entities::MannequinTarget::WholeBody;
          } else if (s) {
            c.error("/entity/target", "target must be left, right, both or whole_body");
          }
        }
        m.dls = dls_options(c, *ent, "/entity");
        m.state = entities::neutral_state(m.model, pose_field(c, *ent, "root", "/entity"));
        if (!id.empty()) extra = runtime::mannequin_entities(id, m.model, m.state);
        driver = std::move(m);
      }
    } else {
      c.error("/entity/kind", "entity kind must be solid, robot or mannequin");
    }
    if (id.empty()) c.error("/entity/id", "entity id must be a non-empty string");
  }

  auto scene = load_referenced<geometry::Scene>(c, j, "", "scene", [&](const Ctx& sc2, const json& doc) {
    return parse_scene(sc2, doc, extra);
  });
  if (scene) sc.session.scene = std::move(*scene);
  if (scene && driver) {
    if (auto* s = std::get_if<runtime::SolidDriver>(&*driver); s && !s->entity_id.empty() &&
                                                                !sc.session.scene.contains(s->entity_id)) {
      c.error("/entity/id", "entity '" + s->entity_id + "' is not in the scene");
    }
  }
  if (driver) sc.session.driver = std::move(*driver);

  // Force.
  if (const json* f = field(c, j, "force", "", false)) {
    auto& fc = sc.session.force;
    if (const json* e = field(c, *f, "enabled", "/force", false)) fc.enabled = boolean(c, *e, "/force/enabled").value_or(true);
    if (const json* k = field(c, *f, "class", "/force", false)) {
      std::optional<forcefield::ForceClass> cls;
      if (k->is_number_integer()) {
        const int v = k->get<int>();
        if (v >= 1 && v <= 3) cls = static_cast<forcefield::ForceClass>(v);
      } else if (k->is_string()) {
        cls = parse_force_class(k->get<std::string>());
      }
      if (cls) {
        fc.force_class = *cls;
      } else {
        c.error("/force/class", "force class must be 1, 2, 3 or constant_contact, penetration_proportional, spring_damper");
      }
    }
    fc.params.margin = number_or(c, *f, "margin", "/force", fc.params.margin);
    fc.params.constant_magnitude = number_or(c, *f, "constant_magnitude", "/force", fc.params.constant_magnitude);
    fc.params.stiffness = number_or(c, *f, "stiffness", "/force", fc.params.stiffness);
    fc.params.damping = number_or(c, *f, "damping", "/force", fc.params.damping);
    fc.params.mass_scale = number_or(c, *f, "mass_scale", "/force", fc.params.mass_scale);
    const double window = number_or(c, *f, "rms_window", "/force", static_cast<double>(fc.rms_window));
    if (!(window >= 1.0)) {
      c.error("/force/rms_window", "rms_window must be >= 1 tick");
    } else {
      fc.rms_window = static_cast<std::size_t>(window);
    }
    try {
      fc.params.validate();
    } catch (const std::exception& e) {
      c.error("/force", e.what());
    }
  }

  // Mapping.
  if (const json* m = field(c, j, "mapping", "", false)) {
    auto& mc = sc.session.mapping;
    if (const json* fr = field(c, *m, "frame", "/mapping", false)) {
      auto s = string(c, *fr, "/mapping/frame");
      auto k = s ? mapping::parse_frame_kind(*s) : std::nullopt;
      if (s && !k) c.error("/mapping/frame", "frame must be screen, world or user");
      if (k) mc.frame = {*k, pose_field(c, *m, "user_frame", "/mapping")};
    }
    if (const json* s = field(c, *m, "scale", "/mapping", false)) {
      auto str = string(c, *s, "/mapping/scale");
      auto k = str ? mapping::parse_scale_kind(*str) : std::nullopt;
      if (str && !k) c.error("/mapping/scale", "scale must be rough, medium, fine or screen");
      if (k) mc.scale = *k;
    }
    if (const json* l = field(c, *m, "levels", "/mapping", false)) {
      mc.levels.rough = number_or(c, *l, "rough", "/mapping/levels", mc.levels.rough);
      mc.levels.medium = number_or(c, *l, "medium", "/mapping/levels", mc.levels.medium);
      mc.levels.fine = number_or(c, *l, "fine", "/mapping/levels", mc.levels.fine);
      try {
        mc.levels.validate();
      } catch (const std::exception& e) {
        c.error("/mapping/levels", e.what());
      }
    }
    mc.camera = pose_field(c, *m, "camera", "/mapping");
    mc.viewport_extent = number_or(c, *m, "viewport_extent", "/mapping", mc.viewport_extent);
    if (!(mc.viewport_extent > 0.0)) c.error("/mapping/viewport_extent", "viewport_extent must be > 0");
  }

  // Stylus.
  if (const json* s = field(c, j, "stylus", "", true)) {
    if (s->is_string()) {
      if (s->get<std::string>() != "external") c.error("/stylus", "stylus must be a script object, {\"file\": ...} or \"external\"");
    } else if (s->is_object() && s->contains("file")) {
      sc.stylus = load_referenced<protocol::StylusScript>(c, *s, "/stylus", "file", [&](const Ctx& sc2, const json& doc) {
        check_header(sc2, doc, "hapticsim.script");
        return parse_script(sc2, doc, "", sc.session.device, sc.rates.haptic_hz);
      });
    } else {
      sc.stylus = parse_script(c, *s, "/stylus", sc.session.device, sc.rates.haptic_hz);
    }
  }

  // Recording.
  if (const json* r = field(c, j, "record", "", false); r && !r->is_null()) {
    std::string mode = "manual";
    if (const json* m = field(c, *r, "mode", "/record", true)) mode = string(c, *m, "/record/mode").value_or(mode);
    const double value = number_or(c, *r, "value", "/record", 0.0, mode != "manual");
    if (mode == "manual") {
      sc.record = runtime::RecordMode::manual();
    } else if (mode == "auto_time") {
      sc.record = runtime::RecordMode::auto_time(value);
    } else if (mode == "auto_distance") {
      sc.record = runtime::RecordMode::auto_distance(value);
    } else {
      c.error("/record/mode", "record mode must be manual, auto_time or auto_distance");
    }
    if (sc.record && sc.record->kind != runtime::RecordKind::Manual && !(value > 0.0)) {
      c.error("/record/value", "recording interval must be > 0");
    }
  }

  if (const json* o = field(c, j, "output", "", false)) {
    if (const json* p = field(c, *o, "report", "/output", false); p && !p->is_null()) {
      if (auto s = string(c, *p, "/output/report")) sc.report_path = fs::path(*s);
    }
    if (const json* p = field(c, *o, "trajectory", "/output", false); p && !p->is_null()) {
      if (auto s = string(c, *p, "/output/trajectory")) sc.trajectory_path = fs::path(*s);
    }
  }

  // Cross-check: constructing the session applies the remaining structural checks.
  if (c.diags->empty()) {
    try {
      runtime::ManipulationSession probe(sc.session);
    } catch (const std::exception& e) {
      c.error("/entity", e.what());
    }
  }
  return sc;
}

template <class T, class F>
T load_single(const fs::path& path, F&& parse) {
  std::vector<Diagnostic> diags;
  auto doc = read_json(path, diags);
  if (!doc) throw ValidationError(diags);
  Ctx c{path.string(), path.parent_path(), &diags};
  T out = parse(c, *doc);
  if (!diags.empty()) throw ValidationError(diags);
  return out;
}

json pose_json(const Pose& p) {
  return json{{"position", {p.position.x(), p.position.y(), p.position.z()}},
              {"quaternion", {p.orientation.w(), p.orientation.x(), p.orientation.y(), p.orientation.z()}}};
}

}  // namespace

ValidationError::ValidationError(std::vector<Diagnostic> diagnostics)
    : std::runtime_error(join_messages(diagnostics)), diagnostics_(std::move(diagnostics)) {}

double parse_duration(const std::string& text) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("invalid duration '" + text + "'");
  }
  const std::string unit = text.substr(pos);
  double scale = 1.0;
  if (unit.empty() || unit == "s") {
    scale = 1.0;
  } else if (unit == "ms") {
    scale = 1e-3;
  } else if (unit == "min") {
    scale = 60.0;
  } else {
    throw std::invalid_argument("invalid duration unit in '" + text + "' (use s, ms or min)");
  }
  if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("duration must be >= 0");
  return v * scale;
}

geometry::Scene load_scene(const fs::path& path) {
  return load_single<geometry::Scene>(path, [](const Ctx& c, const json& j) { return parse_scene(c, j, {}); });
}

entities::RobotModel load_robot(const fs::path& path) {
  return load_single<entities::RobotModel>(path, [](const Ctx& c, const json& j) { return parse_robot(c, j); });
}

entities::MannequinModel load_mannequin(const fs::path& path) {
  return load_single<entities::MannequinModel>(path, [](const Ctx& c, const json& j) { return parse_mannequin(c, j); });
}

protocol::StylusScript load_script(const fs::path& path, const mapping::DeviceSpec& spec, int haptic_hz) {
  auto s = load_single<std::optional<protocol::StylusScript>>(path, [&](const Ctx& c, const json& j) {
    check_header(c, j, "hapticsim.script");
    return parse_script(c, j, "", spec, haptic_hz);
  });
  return *s;
}

Scenario load_scenario(const fs::path& path, const Overrides& overrides) {
  std::vector<Diagnostic> diags;
  auto doc = read_json(path, diags);
  if (!doc) throw ValidationError(diags);
  apply_overrides(*doc, overrides, diags, path.string());
  Ctx c{path.string(), path.parent_path(), &diags};
  Scenario sc = parse_scenario(c, *doc);
  if (!diags.empty()) throw ValidationError(diags);
  sc.path = path;
  return sc;
}

std::vector<Diagnostic> validate_file(const fs::path& path, const Overrides& overrides) {
  std::vector<Diagnostic> diags;
  auto doc = read_json(path, diags);
  if (!doc) return diags;
  apply_overrides(*doc, overrides, diags, path.string());
  Ctx c{path.string(), path.parent_path(), &diags};
  const std::string format = doc->is_object() && doc->contains("format") && (*doc)["format"].is_string()
                                 ? (*doc)["format"].get<std::string>()
                                 : "";
  if (format == "hapticsim.scene") {
    parse_scene(c, *doc, {}, true);
  } else if (format == "hapticsim.robot") {
    parse_robot(c, *doc);
  } else if (format == "hapticsim.mannequin") {
    parse_mannequin(c, *doc);
  } else if (format == "hapticsim.scenario") {
    parse_scenario(c, *doc);
  } else if (format == "hapticsim.script") {
    check_header(c, *doc, "hapticsim.script");
    parse_script(c, *doc, "", {}, 1000);
  } else {
    c.error("/format", "unknown or missing format (expected hapticsim.scene, .robot, .mannequin, .scenario or .script)");
  }
  return diags;
}

std::string report_json(const runtime::RunReport& r, const std::string& scenario_name) {
  json j;
  if (!scenario_name.empty()) j["scenario"] = scenario_name;
  j["clock"] = std::string(runtime::to_string(r.clock));
  j["duration_s"] = r.duration;
  j["ticks"] = {{"haptic", r.haptic_ticks}, {"proximity", r.proximity_ticks}, {"publish", r.snapshots}};
  j["snapshots_delivered"] = r.snapshots_delivered;
  j["force"] = {{"max", r.force_max}, {"mean", r.force_mean}, {"clamped_ticks", r.clamped}};
  j["min_distance"] = r.min_distance ? json(*r.min_distance) : json(nullptr);
  j["commits"] = r.commits;
  j["rejections"] = r.rejections;
  j["driver_errors"] = r.driver_errors;
  j["errors"] = r.errors;
  j["wall_seconds"] = r.wall_seconds;
  if (r.jitter) {
    j["jitter_us"] = {{"samples", r.jitter->samples},
                      {"mean", r.jitter->mean_us},
                      {"max", r.jitter->max_us},
                      {"stddev", r.jitter->stddev_us}};
  } else {
    j["jitter_us"] = nullptr;
  }
  return j.dump(2) + "\n";
}

std::string trajectory_jsonl(const runtime::Trajectory& t) {
  std::string out;
  for (const auto& f : t.frames) {
    json j = pose_json(f.pose);
    json line;
    line["t"] = f.t;
    line["entity_id"] = f.entity_id;
    line["position"] = j["position"];
    line["quaternion"] = j["quaternion"];
    out += line.dump();
    out += "\n";
  }
  return out;
}

runtime::Trajectory parse_trajectory_jsonl(const std::string& text) {
  runtime::Trajectory t;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    runtime::TrajectoryFrame f;
    f.t = j.at("t").get<double>();
    f.entity_id = j.at("entity_id").get<std::string>();
    const auto& p = j.at("position");
    const auto& q = j.at("quaternion");
    f.pose.position = Vec3(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
    f.pose.orientation = Quat(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>());
    t.frames.push_back(std::move(f));
  }
  return t;
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string_view to_string(forcefield::ForceClass c) {
  switch (c) {
    case forcefield::ForceClass::ConstantContact: return "constant_contact";
    case forcefield::ForceClass::PenetrationProportional: return "penetration_proportional";
    case forcefield::ForceClass::SpringDamper: return "spring_damper";
  }
  return "unknown";
}

std::optional<forcefield::ForceClass> parse_force_class(std::string_view s) {
  if (s == "constant_contact" || s == "1") return forcefield::ForceClass::ConstantContact;
  if (s == "penetration_proportional" || s == "2") return forcefield::ForceClass::PenetrationProportional;
  if (s == "spring_damper" || s == "3") return forcefield::ForceClass::SpringDamper;
  return std::nullopt;
}

}  // namespace hapticsim::io
