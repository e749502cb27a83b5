#include "bridge.hpp"

#include "websocket.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <variant>

namespace hapticsim::bridge {

using nlohmann::json;

namespace {

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json pose_json(const Pose& p) {
  const Quat& q = p.orientation;
  return {{"position", vec_json(p.position)}, {"orientation", json::array({q.w(), q.x(), q.y(), q.z()})}};
}

Vec3 parse_vec(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument(std::string(what) + " must be [x, y, z]");
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number()) throw std::invalid_argument(std::string(what) + " must be numeric");
    v[i] = j[i].get<double>();
  }
  require_finite(v, what);
  return v;
}

Quat parse_quat(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 4) throw std::invalid_argument(std::string(what) + " must be [w, x, y, z]");
  double c[4];
  for (int i = 0; i < 4; ++i) {
    if (!j[i].is_number()) throw std::invalid_argument(std::string(what) + " must be numeric");
    c[i] = j[i].get<double>();
  }
  Quat q(c[0], c[1], c[2], c[3]);
  const double n = q.norm();
  if (!std::isfinite(n) || std::abs(n - 1.0) > 1e-6) throw std::invalid_argument(std::string(what) + " must be a unit quaternion");
  q.normalize();
  return q;
}

Pose parse_pose(const json& j, const char* what) {
  if (!j.is_object()) throw std::invalid_argument(std::string(what) + " must be an object");
  Pose p;
  if (j.contains("position")) p.position = parse_vec(j.at("position"), what);
  if (j.contains("orientation")) p.orientation = parse_quat(j.at("orientation"), what);
  return p;
}

json proximity_json(const std::optional<geometry::ProximityResult>& r, double margin) {
  if (!r) return nullptr;
  return {{"distance", r->distance},
          {"colliding", r->colliding},
          {"in_safety_zone", r->distance < margin},
          {"penetration", geometry::distance_in_safety_zone(*r, margin)},
          {"point_a", vec_json(r->point_a)},
          {"point_b", vec_json(r->point_b)},
          {"id_a", r->id_a},
          {"id_b", r->id_b}};
}

std::string_view kind_name(geometry::EntityKind k) {
  switch (k) {
    case geometry::EntityKind::Solid: return "solid";
    case geometry::EntityKind::RobotLink: return "robot_link";
    case geometry::EntityKind::MannequinSegment: return "mannequin_segment";
  }
  return "solid";
}

std::optional<runtime::RecordKind> parse_record_kind(const std::string& s) {
  if (s == "manual") return runtime::RecordKind::Manual;
  if (s == "auto_time") return runtime::RecordKind::AutoTime;
  if (s == "auto_distance") return runtime::RecordKind::AutoDistance;
  return std::nullopt;
}

std::string_view record_kind_name(runtime::RecordKind k) {
  switch (k) {
    case runtime::RecordKind::Manual: return "manual";
    case runtime::RecordKind::AutoTime: return "auto_time";
    case runtime::RecordKind::AutoDistance: return "auto_distance";
  }
  return "manual";
}

std::string_view pivot_name(entities::PivotKind k) {
  switch (k) {
    case entities::PivotKind::SelfOrigin: return "self_origin";
    case entities::PivotKind::GeometricCenter: return "geometric_center";
    case entities::PivotKind::UserFrame: return "user";
  }
  return "self_origin";
}

/// Mode and recording state as the UI should display it; echoed in snapshots and acks.
json state_json(const runtime::ManipulationSession& session, const runtime::TrajectoryRecorder& recorder) {
  const auto& cfg = session.config();
  const auto& m = session.mapping();
  json j = {{"scale", mapping::to_string(m.scale_kind)},
            {"scale_factor", mapping::active_scale(m, cfg.mapping.viewport_extent, cfg.device)},
            {"frame", mapping::to_string(m.frame_mode.kind)},
            {"force_class", static_cast<int>(cfg.force.force_class)},
            {"force_enabled", cfg.force.enabled},
            {"viewport_extent", cfg.mapping.viewport_extent},
            {"recording",
             {{"armed", recorder.armed()},
              {"mode", record_kind_name(recorder.mode().kind)},
              {"value", recorder.mode().value},
              {"frames", recorder.trajectory().frames.size()}}}};
  if (const auto* solid = std::get_if<runtime::SolidDriver>(&cfg.driver)) j["pivot"] = pivot_name(solid->pivot.kind);
  return j;
}

}  // namespace

BridgeCore::BridgeCore(io::Scenario scenario)
    : scenario_(std::move(scenario)),
      rates_(scenario_.rates),
      session_(scenario_.session),
      script_(scenario_.stylus) {
  rates_.validate();
  external_.pose = Pose::identity();
  if (scenario_.record) recorder_.set_mode(*scenario_.record);
}

std::vector<std::string> BridgeCore::tick() {
  const std::uint64_t k = tick_++;
  const int hz = rates_.haptic_hz;
  const double t = static_cast<double>(k) / hz;

  mapping::StylusState s = script_ ? script_->sample(k) : external_;
  s.tick = k;
  session_.update_stylus(s);

  if (runtime::fires(k, rates_.proximity_hz, hz)) {
    session_.proximity_step();
    if (recorder_.armed()) recorder_.observe(t, session_.committed_pose());
  }
  try {
    last_force_ = session_.haptic_force().device;
  } catch (const forcefield::DegenerateContactError&) {
    last_force_ = {};
  }

  std::vector<std::string> out;
  if (runtime::fires(k, rates_.publish_hz, hz)) out.push_back(snapshot_message());
  return out;
}

std::string BridgeCore::snapshot_message() const {
  const auto& cfg = session_.config();
  const double t = tick_ == 0 ? 0.0 : static_cast<double>(tick_ - 1) / rates_.haptic_hz;
  json entities = json::array();
  for (const auto& e : session_.scene().entities()) {
    json p = pose_json(e.pose);
    p["id"] = e.id;
    entities.push_back(std::move(p));
  }
  json j = {
      {"type", "snapshot"},
      {"tick", tick_ == 0 ? 0 : tick_ - 1},
      {"t", t},
      {"entities", std::move(entities)},
      {"manipulated", session_.manipulated_ids()},
      {"engaged", session_.engaged()},
      {"proximity", proximity_json(session_.last_proximity(), cfg.force.params.margin)},
      {"force",
       {{"vector", vec_json(last_force_.force)},
        {"magnitude", last_force_.force.norm()},
        {"clamped", last_force_.clamped}}},
      {"state", state_json(session_, recorder_)},
  };
  return j.dump();
}

std::string BridgeCore::scene_message() const {
  const auto& scene = session_.scene();
  json entities = json::array();
  for (const auto& e : scene.entities()) {
    json shapes = json::array();
    for (const auto& s : e.shapes) {
      json verts = json::array();
      for (const auto& v : s.vertices()) verts.push_back(vec_json(v));
      shapes.push_back({{"vertices", std::move(verts)}});
    }
    json je = pose_json(e.pose);
    je["id"] = e.id;
    je["kind"] = kind_name(e.kind);
    je["shapes"] = std::move(shapes);
    entities.push_back(std::move(je));
  }
  json groups = json::array();
  for (const auto& g : scene.check_groups()) groups.push_back({{"a", g.group_a}, {"b", g.group_b}});
  const auto& cfg = session_.config();
  json j = {{"type", "scene"},
            {"scenario", scenario_.path.stem().string()},
            {"entities", std::move(entities)},
            {"check_groups", std::move(groups)},
            {"manipulated", session_.manipulated_ids()},
            {"camera", pose_json(cfg.mapping.camera)},
            {"viewport_extent", cfg.mapping.viewport_extent},
            {"margin", cfg.force.params.margin},
            {"device",
             {{"workspace_extents", vec_json(cfg.device.workspace_extents)},
              {"position_resolution", cfg.device.position_resolution},
              {"peak_force", cfg.device.peak_force},
              {"continuous_force", cfg.device.continuous_force}}},
            {"rates", {{"haptic", rates_.haptic_hz}, {"proximity", rates_.proximity_hz}, {"publish", rates_.publish_hz}}},
            {"external_stylus", external_stylus()}};
  return j.dump();
}

std::string BridgeCore::ack(const std::string& command) const {
  return json{{"type", "ack"}, {"command", command}, {"tick", tick_}, {"state", state_json(session_, recorder_)}}.dump();
}

std::string BridgeCore::error(const std::string& message) const {
  return json{{"type", "error"}, {"message", message}}.dump();
}

std::vector<std::string> BridgeCore::handle(const std::string& text) {
  json msg = json::parse(text, nullptr, false);
  if (msg.is_discarded() || !msg.is_object()) return {error("message is not a JSON object")};
  if (!msg.contains("type") || !msg["type"].is_string()) return {error("message has no string \"type\"")};
  const std::string type = msg["type"];
  const double t = static_cast<double>(tick_) / rates_.haptic_hz;

  try {
    if (type == "hello") return {scene_message(), snapshot_message()};

    if (type == "stylus") {
      if (script_) return {error("stylus input ignored: the scenario drives a scripted stylus")};
      mapping::StylusState s = external_;
      if (msg.contains("position")) {
        // Readings are confined to the device box and its resolution, like the real encoder.
        s.pose.position = mapping::quantize(parse_vec(msg["position"], "position"), session_.config().device).position;
      }
      if (msg.contains("quaternion")) s.pose.orientation = parse_quat(msg["quaternion"], "quaternion");
      if (msg.contains("button")) {
        if (!msg["button"].is_boolean()) return {error("button must be a boolean")};
        s.button = msg["button"].get<bool>();
      }
      external_ = s;
      return {};
    }

    if (type == "mode") {
      if (msg.contains("camera") || msg.contains("viewport_extent")) {
        const Pose cam = msg.contains("camera") ? parse_pose(msg["camera"], "camera") : session_.config().mapping.camera;
        const double extent = msg.contains("viewport_extent") ? msg["viewport_extent"].get<double>()
                                                              : session_.config().mapping.viewport_extent;
        if (!(extent > 0.0) || !std::isfinite(extent)) return {error("viewport_extent must be > 0")};
        session_.set_camera(cam, extent);
      }
      if (msg.contains("scale")) {
        const auto k = mapping::parse_scale_kind(msg["scale"].get<std::string>());
        if (!k) return {error("unknown scale mode")};
        std::optional<double> v;
        if (msg.contains("scale_value")) v = msg["scale_value"].get<double>();
        session_.set_scale(*k, v);
      }
      if (msg.contains("frame")) {
        const auto k = mapping::parse_frame_kind(msg["frame"].get<std::string>());
        if (!k) return {error("unknown frame mode")};
        mapping::FrameMode fm{*k, {}};
        if (*k == mapping::FrameKind::UserDefined) {
          if (!msg.contains("user_frame")) return {error("frame \"user\" needs user_frame")};
          fm.frame = parse_pose(msg["user_frame"], "user_frame");
        }
        session_.set_frame(fm);
      }
      if (msg.contains("pivot")) {
        const json& p = msg["pivot"];
        const std::string kind = p.is_string() ? p.get<std::string>() : p.value("kind", std::string{});
        if (kind == "self_origin") {
          session_.set_pivot(entities::PivotMode::self_origin());
        } else if (kind == "geometric_center") {
          session_.set_pivot(entities::PivotMode::geometric_center());
        } else if (kind == "user") {
          session_.set_pivot(entities::PivotMode::user(p.is_object() && p.contains("frame") ? parse_pose(p["frame"], "pivot.frame") : Pose{}));
        } else {
          return {error("pivot must be self_origin, geometric_center or user")};
        }
      }
      if (msg.contains("force_class")) {
        const json& c = msg["force_class"];
        std::optional<forcefield::ForceClass> fc;
        if (c.is_number_integer()) {
          const int v = c.get<int>();
          if (v >= 1 && v <= 3) fc = static_cast<forcefield::ForceClass>(v);
        } else if (c.is_string()) {
          fc = io::parse_force_class(c.get<std::string>());
        }
        if (!fc) return {error("force_class must be 1, 2 or 3")};
        session_.set_force_class(*fc);
      }
      if (msg.contains("force_enabled")) session_.set_force_enabled(msg["force_enabled"].get<bool>());
      return {ack("mode")};
    }

    if (type == "record") {
      const std::string action = msg.value("action", std::string{});
      if (action == "arm") {
        runtime::RecordMode mode = recorder_.mode();
        if (msg.contains("mode")) {
          const auto k = parse_record_kind(msg["mode"].get<std::string>());
          if (!k) return {error("record mode must be manual, auto_time or auto_distance")};
          mode = {*k, msg.value("value", 0.0)};
        }
        mode.validate();
        if (recorder_.armed()) return {error("recorder already armed")};
        recorder_.set_mode(mode);
        recorder_.arm(mode, t, session_.committed_pose(), session_.primary_id());
        return {ack("record.arm")};
      }
      if (action == "capture") {
        if (!recorder_.armed()) return {error("recorder not armed")};
        recorder_.capture(t, session_.committed_pose());
        return {ack("record.capture")};
      }
      if (action == "disarm") {
        if (!recorder_.armed()) return {error("recorder not armed")};
        const runtime::Trajectory traj = recorder_.disarm(t, session_.committed_pose());
        json frames = json::array();
        for (const auto& f : traj.frames) {
          json jf = pose_json(f.pose);
          jf["t"] = f.t;
          jf["entity_id"] = f.entity_id;
          frames.push_back(std::move(jf));
        }
        return {ack("record.disarm"),
                json{{"type", "trajectory"}, {"mode", record_kind_name(traj.mode.kind)}, {"frames", std::move(frames)}}.dump()};
      }
      return {error("record action must be arm, capture or disarm")};
    }
  } catch (const json::exception& e) {
    return {error(std::string("bad field type: ") + e.what())};
  } catch (const std::exception& e) {
    return {error(e.what())};
  }
  return {error("unknown message type \"" + type + "\"")};
}

// ---------------------------------------------------------------------------------------------

struct BridgeServer::Client {
  net::Socket socket;
  std::string http_head;
  bool upgraded = false;
  bool closing = false;  // flush output, then drop
  std::vector<std::uint8_t> in;
  std::vector<std::uint8_t> out;
  std::string fragments;
  bool dead = false;
};

namespace {

constexpr std::size_t kMaxHead = 16 * 1024;
constexpr std::size_t kMaxPending = 8u << 20;

std::string content_type(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".html") return "text/html";
  if (ext == ".js" || ext == ".mjs") return "text/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  return "application/octet-stream";
}

std::string http_response(int code, const std::string& reason, const std::string& type, const std::string& body) {
  std::ostringstream os;
  os << "HTTP/1.1 " << code << ' ' << reason << "\r\nContent-Type: " << type << "\r\nContent-Length: " << body.size()
     << "\r\nConnection: close\r\n\r\n"
     << body;
  return os.str();
}

void queue(std::vector<std::uint8_t>& out, const std::string& s) { out.insert(out.end(), s.begin(), s.end()); }

}  // namespace

BridgeServer::BridgeServer(BridgeCore& core, BridgeServerOptions options)
    : core_(core), options_(std::move(options)) {
  listener_ = net::listen_tcp(options_.host, options_.port, 16);
  port_ = net::local_port(listener_);
}

BridgeServer::~BridgeServer() = default;

std::size_t BridgeServer::clients() const {
  std::size_t n = 0;
  for (const auto& c : clients_) n += c->upgraded ? 1 : 0;
  return n;
}

void BridgeServer::poll_client(Client& c) {
  std::uint8_t buf[16384];
  for (int reads = 0; reads < 8 && !c.closing; ++reads) {
    const auto r = net::recv_some(c.socket, buf);
    if (r.status == net::IoStatus::Closed) {
      c.dead = true;
      return;
    }
    if (r.status == net::IoStatus::WouldBlock) break;
    if (!c.upgraded) {
      c.http_head.append(reinterpret_cast<const char*>(buf), r.bytes);
    } else {
      c.in.insert(c.in.end(), buf, buf + r.bytes);
    }
  }

  if (!c.upgraded && !c.closing) {
    const auto end = c.http_head.find("\r\n\r\n");
    if (end == std::string::npos) {
      if (c.http_head.size() > kMaxHead) c.dead = true;
    } else {
      const std::string rest = c.http_head.substr(end + 4);
      const auto req = ws::parse_request(c.http_head.substr(0, end + 4));
      if (req && req->is_websocket_upgrade()) {
        queue(c.out, ws::handshake_response(*req->header("sec-websocket-key")));
        c.upgraded = true;
        c.in.assign(rest.begin(), rest.end());
      } else if (req && req->method == "GET" && options_.static_dir) {
        std::string target = req->target.substr(0, req->target.find('?'));
        if (target.empty() || target.back() == '/') target += "index.html";
        const auto path = (*options_.static_dir / target.substr(1)).lexically_normal();
        std::ifstream f(path, std::ios::binary);
        if (target.find("..") == std::string::npos && f) {
          std::ostringstream ss;
          ss << f.rdbuf();
          queue(c.out, http_response(200, "OK", content_type(path), ss.str()));
        } else {
          queue(c.out, http_response(404, "Not Found", "text/plain", "not found\n"));
        }
        c.closing = true;
      } else {
        queue(c.out, http_response(400, "Bad Request", "text/plain", "expected a WebSocket upgrade\n"));
        c.closing = true;
      }
    }
  }

  while (c.upgraded && !c.closing) {
    const auto r = ws::parse_frame(c.in, true);
    if (r.status == ws::ParseStatus::NeedMore) break;
    if (r.status == ws::ParseStatus::Error) {
      const auto f = ws::encode_frame(ws::Opcode::Close, std::string("\x03\xea", 2) + r.error);
      c.out.insert(c.out.end(), f.begin(), f.end());
      c.closing = true;
      break;
    }
    c.in.erase(c.in.begin(), c.in.begin() + static_cast<std::ptrdiff_t>(r.consumed));
    const ws::Frame& fr = r.frame;
    switch (fr.opcode) {
      case ws::Opcode::Ping: {
        const auto f = ws::encode_frame(ws::Opcode::Pong, fr.payload);
        c.out.insert(c.out.end(), f.begin(), f.end());
        break;
      }
      case ws::Opcode::Pong: break;
      case ws::Opcode::Close: {
        const auto f = ws::encode_frame(ws::Opcode::Close, fr.payload.substr(0, 2));
        c.out.insert(c.out.end(), f.begin(), f.end());
        c.closing = true;
        break;
      }
      case ws::Opcode::Text:
      case ws::Opcode::Binary:
      case ws::Opcode::Continuation: {
        c.fragments += fr.payload;
        if (c.fragments.size() > ws::kMaxPayload) {
          c.dead = true;
          return;
        }
        if (!fr.fin) break;
        std::string text = std::move(c.fragments);
        c.fragments.clear();
        for (const auto& reply : core_.handle(text)) {
          const auto f = ws::encode_frame(ws::Opcode::Text, reply);
          c.out.insert(c.out.end(), f.begin(), f.end());
        }
        break;
      }
    }
  }
}

void BridgeServer::step() {
  for (;;) {
    net::Socket s = net::try_accept(listener_);
    if (!s.valid()) break;
    auto c = std::make_unique<Client>();
    c->socket = std::move(s);
    clients_.push_back(std::move(c));
  }

  for (auto& c : clients_) poll_client(*c);

  for (const auto& msg : core_.tick()) {
    const auto f = ws::encode_frame(ws::Opcode::Text, msg);
    for (auto& c : clients_) {
      if (c->upgraded && !c->closing) c->out.insert(c->out.end(), f.begin(), f.end());
    }
  }

  for (auto& c : clients_) {
    while (!c->dead && !c->out.empty()) {
      const auto r = net::send_some(c->socket, c->out);
      if (r.status == net::IoStatus::Closed) {
        c->dead = true;
      } else if (r.status == net::IoStatus::WouldBlock) {
        break;
      } else {
        c->out.erase(c->out.begin(), c->out.begin() + static_cast<std::ptrdiff_t>(r.bytes));
      }
    }
    if (c->out.size() > kMaxPending) c->dead = true;  // a UI that never reads
    if (c->closing && c->out.empty()) c->dead = true;
  }
  std::erase_if(clients_, [](const auto& c) { return c->dead; });
}

}  // namespace hapticsim::bridge
