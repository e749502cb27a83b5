// hapticsim command-line tool.
#include "bridge/bridge.hpp"

#include "hapticsim/io.hpp"
#include "hapticsim/server.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

namespace fs = std::filesystem;
using namespace hapticsim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;  // input files failed validation
constexpr int kExitRuntime = 3;  // the run itself reported errors
constexpr int kExitUsage = 64;

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

std::string default_endpoint() {
  if (const char* e = std::getenv("HAPTICSIM_ENDPOINT"); e && *e) return e;
  return "127.0.0.1:5555";
}

/// Turns unmatched "--a.b=value" / "--a.b value" arguments into dotted overrides.
io::Overrides parse_overrides(const std::vector<std::string>& extras) {
  io::Overrides out;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& a = extras[i];
    if (a.rfind("--", 0) != 0 || a.size() <= 2) throw CLI::ValidationError("unexpected argument '" + a + "'");
    const std::string body = a.substr(2);
    if (const auto eq = body.find('='); eq != std::string::npos) {
      out.emplace_back(body.substr(0, eq), body.substr(eq + 1));
    } else if (i + 1 < extras.size() && extras[i + 1].rfind("--", 0) != 0) {
      out.emplace_back(body, extras[++i]);
    } else {
      out.emplace_back(body, "true");
    }
  }
  return out;
}

void print_diagnostics(const std::vector<io::Diagnostic>& ds) {
  for (const auto& d : ds) std::cerr << d.to_string() << '\n';
}

std::string read_format(const fs::path& path) {
  std::ifstream f(path);
  const auto j = nlohmann::json::parse(f, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("format") || !j["format"].is_string()) return {};
  return j["format"].get<std::string>();
}

int cmd_run(const fs::path& scenario_path, const std::vector<std::string>& extras, bool quiet) {
  io::Scenario sc;
  try {
    sc = io::load_scenario(scenario_path, parse_overrides(extras));
  } catch (const io::ValidationError& e) {
    print_diagnostics(e.diagnostics());
    return kExitInvalid;
  }
  if (!sc.stylus) {
    std::cerr << scenario_path.string() << ": stylus is \"external\"; use `hapticsim bridge` or `hapticsim client`\n";
    return kExitInvalid;
  }
  runtime::ManipulationSession session(sc.session);
  runtime::RunOptions opt;
  opt.duration = sc.duration;
  opt.rates = sc.rates;
  opt.record = sc.record;
  opt.log_commits = false;
  const protocol::StylusScript script = *sc.stylus;
  const runtime::RunResult res = runtime::run(session, [&](std::uint64_t k) { return script.sample(k); }, opt);

  const std::string report = io::report_json(res.report, scenario_path.stem().string());
  if (sc.report_path) io::write_file(*sc.report_path, report);
  if (sc.trajectory_path && res.trajectory) io::write_file(*sc.trajectory_path, io::trajectory_jsonl(*res.trajectory));
  if (!quiet) std::cout << report << '\n';
  for (const auto& e : res.report.errors) std::cerr << "error: " << e << '\n';
  return res.report.errors.empty() ? kExitOk : kExitRuntime;
}

int cmd_validate(const std::vector<fs::path>& files, const std::vector<std::string>& extras) {
  const io::Overrides ov = parse_overrides(extras);
  bool ok = true;
  for (const auto& f : files) {
    const auto ds = io::validate_file(f, ov);
    if (ds.empty()) {
      std::cout << f.string() << ": ok\n";
    } else {
      ok = false;
      print_diagnostics(ds);
    }
  }
  return ok ? kExitOk : kExitInvalid;
}

int cmd_serve(const fs::path& input, const std::string& endpoint, double duration,
              const std::vector<std::string>& extras) {
  protocol::StylusScript script;
  protocol::ServerConfig cfg;
  cfg.rates.clock = runtime::ClockKind::WallClock;
  try {
    if (read_format(input) == "hapticsim.script") {
      script = io::load_script(input);
    } else {
      const io::Scenario sc = io::load_scenario(input, parse_overrides(extras));
      if (!sc.stylus) {
        std::cerr << input.string() << ": serve needs a scripted stylus\n";
        return kExitInvalid;
      }
      script = *sc.stylus;
      cfg.device = sc.session.device;
      cfg.rates.haptic_hz = sc.rates.haptic_hz;
      cfg.rms_window = sc.session.force.rms_window;
      if (duration <= 0.0) duration = sc.duration;
    }
  } catch (const io::ValidationError& e) {
    print_diagnostics(e.diagnostics());
    return kExitInvalid;
  }
  std::tie(cfg.host, cfg.port) = net::parse_endpoint(endpoint);
  protocol::HapticServer server(script, cfg);
  std::cerr << "serving virtual stylus on " << cfg.host << ':' << server.port() << '\n';

  const std::uint64_t total = duration > 0.0 ? runtime::ticks_for(duration, cfg.rates.haptic_hz) : 0;
  while (!g_stop && (total == 0 || server.tick() < total)) server.run_ticks(cfg.rates.haptic_hz / 10);

  const auto& s = server.stats();
  nlohmann::json j = {{"ticks", s.ticks},           {"frames_in", s.frames_in},
                      {"frames_out", s.frames_out}, {"invalid_frames", s.invalid_frames},
                      {"connections", s.connections}, {"disconnects", s.disconnects},
                      {"max_output", s.max_output}, {"clamped_ticks", s.clamped_ticks},
                      {"force_changes", server.force_log().size()}};
  if (const auto jt = server.jitter()) {
    j["jitter_us"] = {{"mean", jt->mean_us}, {"max", jt->max_us}, {"stddev", jt->stddev_us}};
  }
  std::cout << j.dump(2) << '\n';
  return kExitOk;
}

int cmd_client(const fs::path& scenario_path, const std::string& endpoint, double duration,
               const std::vector<std::string>& extras) {
  io::Scenario sc;
  try {
    sc = io::load_scenario(scenario_path, parse_overrides(extras));
  } catch (const io::ValidationError& e) {
    print_diagnostics(e.diagnostics());
    return kExitInvalid;
  }
  const auto [host, port] = net::parse_endpoint(endpoint);
  protocol::HapticClient client = protocol::HapticClient::connect(host, port, std::chrono::seconds(5));
  runtime::ManipulationSession session(sc.session);
  if (duration <= 0.0) duration = sc.duration;

  const auto start = std::chrono::steady_clock::now();
  const auto period = std::chrono::duration<double>(1.0 / sc.rates.proximity_hz);
  std::uint64_t cycles = 0, commits = 0, rejections = 0;
  std::optional<double> min_distance;
  while (!g_stop) {
    const auto now = std::chrono::steady_clock::now();
    if (duration > 0.0 && now - start >= std::chrono::duration<double>(duration)) break;
    const auto r = protocol::client_cycle(client, session);
    if (r.status == protocol::CycleStatus::Disconnected) {
      std::cerr << "server closed the connection\n";
      break;
    }
    ++cycles;
    commits += r.step.committed;
    rejections += r.step.rejected;
    if (r.step.result) min_distance = std::min(min_distance.value_or(r.step.result->distance), r.step.result->distance);
    std::this_thread::sleep_until(start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(period * (cycles)));
  }
  nlohmann::json j = {{"cycles", cycles}, {"commits", commits}, {"rejections", rejections}};
  j["min_distance"] = min_distance ? nlohmann::json(*min_distance) : nlohmann::json(nullptr);
  std::cout << j.dump(2) << '\n';
  return kExitOk;
}

int cmd_bridge(const fs::path& scenario_path, const std::string& listen, double duration,
               const std::optional<fs::path>& static_dir, const std::vector<std::string>& extras) {
  io::Scenario sc;
  try {
    sc = io::load_scenario(scenario_path, parse_overrides(extras));
  } catch (const io::ValidationError& e) {
    print_diagnostics(e.diagnostics());
    return kExitInvalid;
  }
  bridge::BridgeCore core(std::move(sc));
  bridge::BridgeServerOptions opt;
  std::tie(opt.host, opt.port) = net::parse_endpoint(listen);
  opt.static_dir = static_dir;
  bridge::BridgeServer server(core, opt);
  std::cerr << "bridge listening on ws://" << opt.host << ':' << server.port() << '\n';

  using clock = std::chrono::steady_clock;
  const int hz = core.rates().haptic_hz;
  const auto period = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(1.0 / hz));
  const std::uint64_t total = duration > 0.0 ? runtime::ticks_for(duration, hz) : 0;
  const auto start = clock::now();
  while (!g_stop && (total == 0 || core.ticks() < total)) {
    std::this_thread::sleep_until(start + period * static_cast<clock::rep>(core.ticks()));
    server.step();
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Haptic manipulation simulator: scenarios, virtual stylus server and UI bridge"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "hapticsim 0.1.0");

  fs::path run_path;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "Run a scenario headless; --key=value overrides any scenario field");
  run->add_option("scenario", run_path, "Scenario file")->required()->check(CLI::ExistingFile);
  run->add_flag("-q,--quiet", quiet, "Do not print the report");
  run->allow_extras();

  std::vector<fs::path> files;
  auto* validate = app.add_subcommand("validate", "Check input files and print every diagnostic");
  validate->add_option("files", files, "Scene, robot, mannequin, script or scenario files")->required();
  validate->allow_extras();

  fs::path serve_path;
  std::string endpoint = default_endpoint();
  double serve_duration = 0.0;
  auto* serve = app.add_subcommand("serve", "Serve a scripted virtual stylus over TCP (wall clock)");
  serve->add_option("input", serve_path, "Script or scenario file")->required()->check(CLI::ExistingFile);
  serve->add_option("--endpoint", endpoint, "host:port (default $HAPTICSIM_ENDPOINT or 127.0.0.1:5555)");
  serve->add_option("--for", serve_duration, "Stop after this many seconds (0: scenario duration or forever)");
  serve->allow_extras();

  fs::path client_path;
  double client_duration = 0.0;
  auto* client = app.add_subcommand("client", "Drive a scenario from a remote stylus server");
  client->add_option("scenario", client_path, "Scenario file")->required()->check(CLI::ExistingFile);
  client->add_option("--endpoint", endpoint, "host:port (default $HAPTICSIM_ENDPOINT or 127.0.0.1:5555)");
  client->add_option("--for", client_duration, "Stop after this many seconds (0: scenario duration)");
  client->allow_extras();

  fs::path bridge_path;
  std::string listen = "127.0.0.1:8765";
  double bridge_duration = 0.0;
  std::optional<fs::path> static_dir;
  auto* br = app.add_subcommand("bridge", "Serve a scenario to the browser UI as JSON over WebSocket");
  br->add_option("scenario", bridge_path, "Scenario file")->required()->check(CLI::ExistingFile);
  br->add_option("--listen", listen, "host:port to listen on");
  br->add_option("--for", bridge_duration, "Stop after this many seconds (0: until interrupted)");
  br->add_option("--static", static_dir, "Directory served for plain HTTP GETs")->check(CLI::ExistingDirectory);
  br->allow_extras();

  CLI11_PARSE(app, argc, argv);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);

  try {
    if (*run) return cmd_run(run_path, run->remaining(), quiet);
    if (*validate) return cmd_validate(files, validate->remaining());
    if (*serve) return cmd_serve(serve_path, endpoint, serve_duration, serve->remaining());
    if (*client) return cmd_client(client_path, endpoint, client_duration, client->remaining());
    if (*br) return cmd_bridge(bridge_path, listen, bridge_duration, static_dir, br->remaining());
  } catch (const CLI::Error& e) {
    std::cerr << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
