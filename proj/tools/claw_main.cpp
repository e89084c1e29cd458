// Copyright 2026 The CLAW Toolkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// claw: command-line front end.
//
// Exit codes: 0 success, 1 domain error, 2 usage error.

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "claw/config_io.hpp"
#include "claw/episode.hpp"
#include "claw/format.hpp"
#include "claw/geometry.hpp"
#include "claw/scenario.hpp"
#include "claw/server.hpp"
#include "claw/service.hpp"
#include "claw/wrist.hpp"

namespace {

using namespace claw;

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

struct Globals {
  bool verbose = false;
  std::optional<std::uint64_t> seed;
  std::string out;
};

// Writes to --out atomically, or to stdout when no path was given.
void emit(const Globals& g, const std::string& text) {
  if (g.out.empty()) {
    std::fwrite(text.data(), 1, text.size(), stdout);
    std::fflush(stdout);
    return;
  }
  write_file_atomic(g.out, text);
  spdlog::info("wrote {}", g.out);
}

void setup_logging(bool verbose) {
  auto logger = spdlog::stderr_color_mt("claw");
  logger->set_pattern("%^[%l]%$ %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("CLAW_LOG")) {
    spdlog::set_level(spdlog::level::from_str(env));
  }
  if (verbose) spdlog::set_level(spdlog::level::debug);
}

scenario::ScenarioConfig load_with_seed(const std::string& path, const Globals& g) {
  scenario::ScenarioConfig c = config::load_config(path);
  if (g.seed) c.seed = *g.seed;
  return c;
}

// --- design ---------------------------------------------------------------------

struct DesignArgs {
  std::optional<double> R, L_total, d, D, L_clamp, L_joint_arm, X0;
  std::string sweep;
  std::optional<double> max_D, min_X_allow;
};

int run_design(const DesignArgs& a, const Globals& g) {
  geometry::LeafSpringSpec spec = geometry::default_spec();
  if (a.R) spec.R = *a.R;
  if (a.L_total) spec.L_total = *a.L_total;
  if (a.L_clamp) spec.L_clamp = *a.L_clamp;
  if (a.L_joint_arm) spec.L_joint_arm = *a.L_joint_arm;
  if (a.X0) spec.X_0 = *a.X0;
  if (a.d) spec.d = *a.d;
  if (a.D) spec.d = geometry::compute_joint_distance(*a.D, spec.L_total, spec.R);
  for (const std::string& f : geometry::placeholder_fields()) {
    spdlog::debug("{} uses a placeholder default", f);
  }

  if (!a.sweep.empty()) {
    const geometry::SweepRanges ranges = geometry::parse_sweep_ranges(a.sweep);
    const auto points = geometry::sweep_designs(spec, ranges, {a.max_D, a.min_X_allow});
    std::string csv = std::string(geometry::kDesignCsvHeader) + "\n";
    for (const auto& p : points) csv += geometry::design_csv_row(p) + "\n";
    spdlog::info("{} feasible designs", points.size());
    emit(g, csv);
    return kExitOk;
  }

  const geometry::LoopGeometry loop = geometry::analyze(spec);
  if (!g.out.empty()) {
    emit(g, std::string(geometry::kDesignCsvHeader) + "\n" +
                geometry::design_csv_row({spec, loop}) + "\n");
  }
  std::printf("R           %12.6f mm\n", spec.R);
  std::printf("L_total     %12.6f mm\n", spec.L_total);
  std::printf("d           %12.6f mm\n", spec.d);
  std::printf("L_clamp     %12.6f mm\n", spec.L_clamp);
  std::printf("L_joint_arm %12.6f mm\n", spec.L_joint_arm);
  std::printf("X0          %12.6f mm\n", spec.X_0);
  std::printf("D           %12.6f mm\n", loop.D);
  std::printf("L_bc        %12.6f mm\n", loop.L_bc);
  std::printf("X_max       %12.6f mm\n", loop.X_max);
  std::printf("X_allow     %12.6f mm\n", loop.X_allow);
  return kExitOk;
}

// --- characterize -----------------------------------------------------------------

struct CharacterizeArgs {
  std::string axis = "y";
  std::string mode = "free";
  int steps = 40;
  std::string gripper = "claw";
};

int run_characterize(const CharacterizeArgs& a, const Globals& g) {
  const Axis axis = parse_axis(a.axis);
  const auto mode = lock::parse_mode(a.mode);
  if (!mode) throw Error(ErrorCode::kInvalidArgument, "unknown mode '" + a.mode + "'", "mode");
  const auto choice = scenario::parse_gripper(a.gripper);
  if (!choice) {
    throw Error(ErrorCode::kInvalidArgument, "unknown gripper '" + a.gripper + "'", "gripper");
  }
  const wrist::GripperModel model = scenario::make_gripper(*choice);
  const auto points = wrist::characterize(model, axis, *mode, a.steps);
  emit(g, wrist::characterize_csv(axis, *mode, points));
  return kExitOk;
}

// --- simulate ----------------------------------------------------------------------

struct SimulateArgs {
  std::string config;
  std::string sweep;
  std::vector<std::string> grippers;
  bool print_config = false;
  std::string kind = "peg_in_hole";
};

// "max:step", e.g. "5:0.25".
std::pair<double, double> parse_offset_sweep(const std::string& text) {
  const auto colon = text.find(':');
  double max = 0.0;
  double step = 0.0;
  if (colon == std::string::npos || !parse_double(text.substr(0, colon), max) ||
      !parse_double(text.substr(colon + 1), step) || !(max >= 0.0) || !(step > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "sweep must be <max>:<step> with max >= 0 and step > 0", "sweep");
  }
  return {max, step};
}

scenario::Kind kind_or_throw(const std::string& name) {
  const auto k = scenario::parse_kind(name);
  if (!k) throw Error(ErrorCode::kInvalidArgument, "unknown kind '" + name + "'", "kind");
  return *k;
}

int print_config(const std::string& path, const std::string& kind, const Globals& g) {
  scenario::ScenarioConfig c =
      path.empty() ? scenario::default_config(kind_or_throw(kind)) : config::load_config(path);
  if (g.seed) c.seed = *g.seed;
  emit(g, config::dump_config(c));
  return kExitOk;
}

int run_simulate(const SimulateArgs& a, const Globals& g) {
  if (a.print_config) return print_config(a.config, a.kind, g);
  if (a.config.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "a config file is required", "config");
  }
  const scenario::ScenarioConfig c = load_with_seed(a.config, g);
  std::string csv = std::string(scenario::kSweepCsvHeader) + "\n";

  if (!a.sweep.empty()) {
    if (c.kind != scenario::Kind::kPegInHole) {
      throw Error(ErrorCode::kInvalidArgument, "sweeps need a peg_in_hole config", "sweep");
    }
    const auto [max, step] = parse_offset_sweep(a.sweep);
    const auto offsets = scenario::axis_offset_grid(max, step);
    std::vector<scenario::SweepGripper> grippers;
    for (const std::string& name : a.grippers) {
      const auto sg = scenario::parse_sweep_gripper(name);
      if (!sg) throw Error(ErrorCode::kInvalidArgument, "unknown gripper '" + name + "'", "gripper");
      grippers.push_back(*sg);
    }
    if (grippers.empty()) grippers.assign(std::begin(scenario::kAllSweepGrippers),
                                          std::end(scenario::kAllSweepGrippers));
    // One worker per gripper; rows are merged in gripper order.
    std::vector<std::vector<scenario::SweepPoint>> results(grippers.size());
    std::vector<std::thread> workers;
    for (std::size_t i = 0; i < grippers.size(); ++i) {
      workers.emplace_back([&, i] { results[i] = scenario::misalignment_sweep(c, grippers[i], offsets); });
    }
    for (auto& w : workers) w.join();
    for (std::size_t i = 0; i < grippers.size(); ++i) {
      std::size_t ok = 0;
      for (const auto& p : results[i]) {
        csv += scenario::sweep_csv_row(p) + "\n";
        ok += p.outcome == scenario::Outcome::kSuccess;
      }
      spdlog::info("{}: {}/{} succeeded", scenario::sweep_gripper_name(grippers[i]), ok,
                   results[i].size());
    }
    emit(g, csv);
    return kExitOk;
  }

  const scenario::Scenario sim(c);
  const scenario::RunResult r = scenario::run_scenario(sim, scenario::default_script(c));
  const scenario::ScenarioStatus& s = r.final_state.status;
  scenario::SweepPoint row;
  row.offset_x = c.initial_misalignment[0];
  row.offset_y = c.initial_misalignment[1];
  row.outcome = s.outcome;
  row.depth = s.insertion_depth;
  row.peak_force = r.final_state.peak_force;
  row.elapsed = s.elapsed;
  std::string line = scenario::sweep_csv_row(row);
  // Replace the sweep gripper column with the config's gripper.
  const auto first = line.find(',', line.find(',') + 1);
  const auto second = line.find(',', first + 1);
  line = line.substr(0, first + 1) + std::string(scenario::gripper_name(c.gripper)) +
         line.substr(second);
  spdlog::info("{} {} after {:.3f} s, peak force {:.2f} N", scenario::kind_name(c.kind),
               scenario::outcome_name(s.outcome), s.elapsed, r.final_state.peak_force);
  emit(g, csv + line + "\n");
  return kExitOk;
}

// --- record / replay ----------------------------------------------------------------

struct RecordArgs {
  std::string config;
  std::string started;
};

int run_record(const RecordArgs& a, const Globals& g) {
  const scenario::ScenarioConfig c = load_with_seed(a.config, g);
  const std::string started = a.started.empty() ? iso8601_now() : a.started;
  const episode::EpisodeLog log = episode::record(c, scenario::default_script(c), started);
  spdlog::info("recorded {} rows, outcome {}", log.rows.size(),
               scenario::outcome_name(log.outcome().value_or(scenario::Outcome::kRunning)));
  emit(g, episode::write_episode(log));
  return kExitOk;
}

struct ReplayArgs {
  std::string episode;
  std::string config;
  std::string mode_override;
};

int run_replay(const ReplayArgs& a, const Globals& g) {
  const episode::EpisodeLog log = episode::load_episode(a.episode);
  const scenario::ScenarioConfig c = load_with_seed(a.config, g);
  episode::ReplayOverride override;
  if (!a.mode_override.empty()) {
    if (auto m = lock::parse_mode(a.mode_override)) {
      override.mode = *m;
    } else {
      override.schedule = config::parse_schedule(read_file(a.mode_override));
    }
  }
  const episode::EpisodeLog out = episode::replay(log, c, override);
  spdlog::info("replayed {} rows, outcome {}", out.rows.size(),
               scenario::outcome_name(out.outcome().value_or(scenario::Outcome::kRunning)));
  emit(g, episode::write_episode(out));
  return kExitOk;
}

// --- serve ---------------------------------------------------------------------------

struct ServeArgs {
  std::string bind = "127.0.0.1:8080";
  std::string log_dir;
  std::size_t max_sessions = 16;
  std::string static_dir;
  double time_scale = 1.0;
  bool no_pacing = false;
  int io_threads = 2;
};

int run_serve(const ServeArgs& a, const Globals&) {
  // Signals are taken synchronously by this thread; every other thread
  // inherits the blocked mask.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  service::ManagerOptions mo;
  mo.max_sessions = a.max_sessions;
  mo.pacing = {a.time_scale, a.no_pacing};
  if (!a.log_dir.empty()) mo.log_dir = a.log_dir;
  service::SessionManager manager(mo);
  server::ServerOptions so;
  so.bind = a.bind;
  so.io_threads = a.io_threads;
  if (!a.static_dir.empty()) so.static_dir = a.static_dir;
  server::Server server(manager, so);
  server.start();
  spdlog::set_level(std::min(spdlog::get_level(), spdlog::level::info));
  spdlog::info("listening on {} (port {})", a.bind, server.port());
  std::printf("listening on port %u\n", server.port());
  std::fflush(stdout);
  int sig = 0;
  sigwait(&signals, &sig);
  spdlog::info("signal {}, shutting down", sig);
  server.stop();
  manager.stop_all();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CLAW compliant wrist toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_flag("-v,--verbose", g.verbose, "Debug logging (CLAW_LOG sets the level otherwise)");
  app.add_option("--seed", g.seed, "Seed written into scenario configs");
  app.add_option("--out", g.out, "Output file (written atomically); stdout when omitted");

  DesignArgs da;
  auto* design = app.add_subcommand("design", "Leaf-spring loop geometry");
  design->add_option("--R", da.R, "Arc radius, mm");
  design->add_option("--L-total", da.L_total, "Total spring length, mm");
  auto* d_opt = design->add_option("--d", da.d, "Inter-axial joint distance, mm");
  design->add_option("--D", da.D, "Loop width, mm (solves for d)")->excludes(d_opt);
  design->add_option("--L-clamp", da.L_clamp, "Clamped section length, mm");
  design->add_option("--L-joint-arm", da.L_joint_arm, "Joint-to-arc length, mm");
  design->add_option("--X0", da.X0, "Unloaded clamp point position, mm");
  design->add_option("--sweep", da.sweep, "Grid sweep, e.g. R=10:5:20,L_total=160:10:200");
  design->add_option("--max-D", da.max_D, "Sweep constraint: D <= value, mm");
  design->add_option("--min-X-allow", da.min_X_allow, "Sweep constraint: X_allow >= value, mm");

  CharacterizeArgs ca;
  auto* characterize = app.add_subcommand("characterize", "Single-axis load curve as CSV");
  characterize->add_option("--axis", ca.axis, "x|y|z|roll|pitch|yaw")->capture_default_str();
  characterize->add_option("--mode", ca.mode, "free|half_lock|full_lock")->capture_default_str();
  characterize->add_option("--steps", ca.steps, "Increments from 0 to the envelope bound")
      ->capture_default_str();
  characterize->add_option("--gripper", ca.gripper, "claw|rigid|finray")->capture_default_str();

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "Run a scenario or a misalignment sweep");
  simulate->add_option("config", sa.config, "Scenario config JSON");
  simulate->add_option("--sweep", sa.sweep, "Lateral offset sweep <max>:<step>, mm");
  simulate->add_option("--gripper", sa.grippers,
                       "Sweep grippers: claw_free, claw_half, claw_full, rigid, finray")
      ->delimiter(',');
  simulate->add_flag("--print-config", sa.print_config, "Print the resolved config and exit");
  simulate->add_option("--kind", sa.kind, "Kind for --print-config without a file")
      ->capture_default_str();

  RecordArgs ra;
  auto* record = app.add_subcommand("record", "Run a scenario's script and write its episode log");
  record->add_option("config", ra.config, "Scenario config JSON")->required();
  record->add_option("--started", ra.started, "Header timestamp (default: now)");

  ReplayArgs pa;
  auto* replay = app.add_subcommand("replay", "Re-run an episode log");
  replay->add_option("episode", pa.episode, "Episode CSV")->required();
  replay->add_option("--config", pa.config, "Scenario config the episode was recorded with")
      ->required();
  replay->add_option("--mode-override", pa.mode_override,
                     "free|half_lock|full_lock or a schedule JSON file");

  ServeArgs va;
  auto* serve = app.add_subcommand("serve", "HTTP/WebSocket session server");
  serve->add_option("--bind", va.bind, "host:port")->capture_default_str();
  serve->add_option("--log-dir", va.log_dir, "Directory for finished episode logs");
  serve->add_option("--max-sessions", va.max_sessions, "Session limit")->capture_default_str();
  serve->add_option("--static-dir", va.static_dir, "Static assets served at /");
  serve->add_option("--time-scale", va.time_scale, "Simulated seconds per wall second, 0.1-10")
      ->capture_default_str();
  serve->add_flag("--no-pacing", va.no_pacing, "Step as fast as the leader's commands allow");
  serve->add_option("--io-threads", va.io_threads, "Network threads")->capture_default_str();

  std::string pc_kind = "peg_in_hole";
  std::string pc_config;
  auto* print = app.add_subcommand("print-config", "Print a default or resolved scenario config");
  print->add_option("config", pc_config, "Scenario config JSON to resolve");
  print->add_option("--kind", pc_kind, "peg_in_hole|door_handle|wall_touch")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  setup_logging(g.verbose);
  try {
    if (*design) return run_design(da, g);
    if (*characterize) return run_characterize(ca, g);
    if (*simulate) return run_simulate(sa, g);
    if (*record) return run_record(ra, g);
    if (*replay) return run_replay(pa, g);
    if (*serve) return run_serve(va, g);
    if (*print) return print_config(pc_config, pc_kind, g);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s: %s", std::string(error_code_name(e.code())).c_str(), e.what());
    if (!e.field().empty()) std::fprintf(stderr, " (field %s)", e.field().c_str());
    std::fprintf(stderr, "\n");
    return kExitDomain;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitDomain;
  }
  return kExitUsage;
}
