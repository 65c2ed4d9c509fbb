// Copyright 2026 The gripsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <csignal>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "gripsim/gripsim.hpp"

namespace fs = std::filesystem;
using namespace gripsim;

namespace {

SimConfig load_or_default(const std::string& path) { return path.empty() ? SimConfig{} : load_config(path); }

std::string phase_trace_string(const TrialRecord& record) {
  std::string out;
  for (const auto& [t, p] : record.phase_trace) {
    if (!out.empty()) out += ",";
    out += to_string(p);
  }
  return out;
}

int run_sim(const std::string& config_path, const std::string& scene_path, const std::string& script_path,
            std::uint64_t seed, std::optional<std::uint16_t> serve_port, const std::string& out_path,
            double duration) {
  const SimConfig config = load_or_default(config_path);
  auto scene = load_scene(scene_path, config.pipeline.known_classes);
  std::vector<ScriptEntry> script;
  if (!script_path.empty()) script = load_command_script(script_path);

  ScenarioOptions options;
  CommandQueue queue;
  std::optional<TelemetryServer> server;
  if (serve_port) {
    server.emplace(queue);
    server->start(*serve_port);
    std::cerr << "telemetry on port " << server->port() << "\n";
    options.realtime = true;
    options.stop_after_cycle = false;
    options.external_commands = &queue;
    options.on_tick = [&](const TelemetrySnapshot& s) { server->broadcast(telemetry_line(s)); };
  }
  options.max_duration_s = duration > 0.0 ? duration : (serve_port ? 600.0 : 120.0);

  const TrialRecord record = run_pipeline_scenario(config, std::move(scene), script, seed, options);
  trial_csv(record).save(out_path);
  std::cout << "phases: " << phase_trace_string(record) << "\n"
            << "cycles: " << record.completed_cycles << "  grasp failures: " << record.grasp_failures << "\n"
            << "log: " << out_path << "\n";
  return 0;
}

int run_experiment(const std::string& kind, const std::string& config_path, const std::string& out_dir) {
  const SimConfig c = load_or_default(config_path);
  fs::create_directories(out_dir);
  const auto& x = c.experiments;
  fs::path out;
  if (kind == "force-sweep") {
    out = fs::path(out_dir) / "force_sweep.csv";
    force_sweep_csv(run_force_sweep(x.force_sweep.torques_nm, c.geometry, c.actuator)).save(out);
  } else if (kind == "thermal") {
    out = fs::path(out_dir) / "thermal.csv";
    const auto curves =
        run_thermal_endurance(x.thermal.torques_nm, x.thermal.stop_temp_c, c.thermal, x.thermal.dt_s,
                              x.thermal.max_duration_s);
    thermal_csv(curves).save(out);
    for (const auto& cv : curves)
      std::cout << format_number(cv.torque_nm) << " N·m: steady " << format_number(cv.steady_state_c)
                << " C, hold to " << format_number(x.thermal.stop_temp_c) << " C " << format_number(cv.hold_time_s)
                << " s\n";
  } else if (kind == "static-payload") {
    out = fs::path(out_dir) / "static_payload.csv";
    const auto contact = contact_for(x.static_payload.material, c.materials, c.contact_count);
    static_payload_csv(run_static_payload(x.static_payload.masses_kg, contact, c.geometry, c.actuator, c.thermal,
                                          c.gravity))
        .save(out);
  } else if (kind == "dynamic-payload") {
    out = fs::path(out_dir) / "dynamic_payload.csv";
    const auto contact = contact_for(c.experiments.static_payload.material, c.materials, c.contact_count);
    dynamic_payload_csv(run_dynamic_payload(x.dynamic_payload.masses_kg, x.dynamic_payload.torque_nm,
                                            x.dynamic_payload, contact, c.geometry, c.actuator, c.arm, c.gravity))
        .save(out);
  } else {
    std::cerr << "unknown experiment '" << kind << "'\n";
    return 2;
  }
  std::cout << "wrote " << out.string() << "\n";
  return 0;
}

int run_fit(const std::string& anchors_path, double ambient) {
  std::ifstream in(anchors_path);
  if (!in) throw ValidationError("cannot open " + anchors_path);
  const ThermalFit fit = fit_thermal_params(parse_thermal_anchors(in), ambient);
  json out = {{"thermal", thermal_to_json(fit.params)},
              {"residual_rms_c", fit.residual_rms_c},
              {"time_constant_identified", fit.time_constant_identified}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

int run_replay(const std::string& log_path, std::optional<std::uint16_t> serve_port) {
  std::ifstream in(log_path);
  if (!in) throw ValidationError("cannot open " + log_path);
  const std::vector<TelemetrySnapshot> snaps = parse_trial_log(in);
  std::string trace;
  std::string last_phase;
  for (const auto& s : snaps) {
    if (s.phase == last_phase) continue;
    if (!trace.empty()) trace += ",";
    trace += s.phase;
    last_phase = s.phase;
  }
  std::cout << "rows: " << snaps.size() << "\nphases: " << trace << "\n";
  if (!serve_port) return 0;

  CommandQueue ignored;
  TelemetryServer server(ignored);
  server.start(*serve_port);
  std::cerr << "replaying on port " << server.port() << "\n";
  const auto start = std::chrono::steady_clock::now();
  const double t0 = snaps.empty() ? 0.0 : snaps.front().t;
  for (const auto& s : snaps) {
    std::this_thread::sleep_until(start + std::chrono::duration<double>(s.t - t0));
    server.broadcast(telemetry_line(s));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gripsim: high-force gripper simulator and experiment harness"};
  app.require_subcommand(1);

  auto* sim = app.add_subcommand("sim", "Closed-loop grasping pipeline");
  auto* sim_run = sim->add_subcommand("run", "Run a scene with a command script");
  sim->require_subcommand(1);
  std::string scene, script, config, out = "trial.csv";
  std::uint64_t seed = 1;
  std::optional<std::uint16_t> serve_port;
  double duration = 0.0;
  sim_run->add_option("--scene", scene, "Scene file (JSON)")->required()->check(CLI::ExistingFile);
  sim_run->add_option("--script", script, "Command script (lines of '<time_s> <text>')")->check(CLI::ExistingFile);
  sim_run->add_option("--seed", seed, "RNG seed");
  sim_run->add_option("--serve", serve_port, "Serve telemetry/commands on this TCP port (real-time)");
  sim_run->add_option("--config", config, "Configuration file (JSON)")->check(CLI::ExistingFile);
  sim_run->add_option("--out", out, "Trial log CSV");
  sim_run->add_option("--duration", duration, "Maximum simulated seconds");

  auto* exp = app.add_subcommand("experiment", "Run an evaluation protocol");
  std::string kind, out_dir = "results";
  exp->add_option("kind", kind, "force-sweep | thermal | static-payload | dynamic-payload")
      ->required()
      ->check(CLI::IsMember({"force-sweep", "thermal", "static-payload", "dynamic-payload"}));
  exp->add_option("--config", config, "Configuration file (JSON)")->check(CLI::ExistingFile);
  exp->add_option("--out", out_dir, "Output directory");

  auto* fit = app.add_subcommand("fit-thermal", "Fit the winding model to endurance anchors");
  std::string anchors;
  double ambient = 25.0;
  fit->add_option("--anchors", anchors, "CSV of torque_nm,time_s,temp_c")->required()->check(CLI::ExistingFile);
  fit->add_option("--ambient", ambient, "Ambient temperature, C");

  auto* replay = app.add_subcommand("replay", "Replay a trial log");
  std::string log;
  replay->add_option("--log", log, "Trial log CSV")->required()->check(CLI::ExistingFile);
  replay->add_option("--serve", serve_port, "Stream the log as telemetry on this TCP port");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*sim_run) return run_sim(config, scene, script, seed, serve_port, out, duration);
    if (*exp) return run_experiment(kind, config, out_dir);
    if (*fit) return run_fit(anchors, ambient);
    if (*replay) return run_replay(log, serve_port);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
