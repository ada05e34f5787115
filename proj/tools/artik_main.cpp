// artik: reconstruct simulatable articulated mechanisms from rigid-body
// pose trajectories. Subcommands cover the full pipeline:
//   generate   synthesize observations from a benchmark scene
//   infer      articulation discovery (joint types, axes, tree)
//   fit-params parameter estimation on the inferred mechanism
//   control    MPPI swing-up / balancing on an estimated model
//   eval       the fixed experiment protocol, one summary JSON
//
// Exit codes: 0 success, 1 usage, 2 malformed input, 3 numerical failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "artik/control.hpp"
#include "artik/dynamics.hpp"
#include "artik/errors.hpp"
#include "artik/estimation.hpp"
#include "artik/json_io.hpp"
#include "artik/mechanism.hpp"
#include "artik/parallel.hpp"
#include "artik/topology.hpp"

namespace fs = std::filesystem;
using namespace artik;

namespace {

// Command-line misuse distinct from malformed input files.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- logging ----

enum class LogLevel { kDebug = 0, kInfo = 1, kWarn = 2 };

LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("ARTIK_LOG");
    if (!env) return LogLevel::kInfo;
    const std::string v(env);
    if (v == "debug") return LogLevel::kDebug;
    if (v == "warn") return LogLevel::kWarn;
    return LogLevel::kInfo;
  }();
  return level;
}

void log_msg(LogLevel lvl, const std::string& msg) {
  if (lvl < log_level()) return;
  const char* tag = lvl == LogLevel::kDebug ? "debug"
                    : lvl == LogLevel::kInfo ? "info"
                                             : "warn";
  std::cerr << "[" << tag << "] " << msg << "\n";
}

void log_debug(const std::string& msg) { log_msg(LogLevel::kDebug, msg); }
void log_info(const std::string& msg) { log_msg(LogLevel::kInfo, msg); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

// ---- shared helpers ----

Preset load_scene(const std::string& scene, int frames = -1, double dt = -1) {
  const std::vector<std::string> names = preset_names();
  if (std::find(names.begin(), names.end(), scene) == names.end()) {
    std::string list;
    for (const std::string& n : names) list += (list.empty() ? "" : ", ") + n;
    throw UsageError("unknown scene \"" + scene + "\"; available scenes: " +
                     list);
  }
  return preset(scene, frames, dt);
}

void ensure_out_dir(const std::string& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create output directory " + out + ": " +
                        ec.message());
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

FitMethod parse_method(const std::string& m) {
  if (m == "adam") return FitMethod::kAdam;
  if (m == "svgd") return FitMethod::kSvgd;
  throw UsageError("unknown method \"" + m + "\"; expected adam or svgd");
}

std::optional<GroundTruth> load_truth(const std::string& explicit_path,
                                      const std::string& obs_path) {
  std::string path = explicit_path;
  if (path.empty()) {
    const fs::path sidecar =
        fs::path(obs_path).parent_path() / "ground_truth.json";
    std::error_code ec;
    if (!fs::exists(sidecar, ec)) return std::nullopt;
    path = sidecar.string();
  }
  log_debug("ground truth from " + path);
  return ground_truth_from_json(load_json(path));
}

std::string csv_of_history(const std::vector<double>& history) {
  std::ostringstream out;
  out.precision(17);
  out << "step,loss\n";
  for (std::size_t i = 0; i < history.size(); ++i)
    out << i << "," << history[i] << "\n";
  return out.str();
}

// ---- generate ----

struct GenerateOpts {
  std::string scene;
  int frames = -1;
  double dt = -1.0;
  double noise_p = 0.0;
  double noise_r = 0.0;
  std::uint64_t seed = 0;
  std::string out = ".";
  int threads = 0;
};

void run_generate(const GenerateOpts& o) {
  set_thread_count(o.threads);
  const Preset pre = load_scene(o.scene, o.frames, o.dt);
  ensure_out_dir(o.out);

  ObservationNoise noise;
  noise.sigma_p = o.noise_p;
  noise.sigma_r = o.noise_r;
  noise.seed = o.seed;
  ObservationSet obs = generate_observations(pre.mech, pre.x0, pre.frames,
                                             pre.dt, pre.controls, noise);
  obs.scene = o.scene;
  obs.seed = o.seed;

  json jobs = observations_to_json(obs);
  jobs["noise_p"] = o.noise_p;
  jobs["noise_r"] = o.noise_r;

  GroundTruth gt;
  gt.scene = o.scene;
  gt.dt = pre.dt;
  gt.frames = pre.frames;
  gt.mech = pre.mech;
  gt.params = pre.params;
  gt.theta = pre.params.get(pre.mech);
  gt.x0 = pre.x0;
  gt.controls = pre.controls;

  const std::string obs_path = join_path(o.out, "observations.json");
  const std::string gt_path = join_path(o.out, "ground_truth.json");
  write_json_atomic(obs_path, jobs);
  write_json_atomic(gt_path, ground_truth_to_json(gt));
  log_info("wrote " + obs_path + " (" + std::to_string(pre.frames) +
           " frames, " + std::to_string(obs.n_bodies()) + " bodies)");
  log_info("wrote " + gt_path);
}

// ---- infer ----

struct InferOpts {
  std::string input;
  std::string out = ".";
  std::uint64_t seed = 0;
  int ransac_iterations = -1;
  double ransac_threshold = -1.0;
  int threads = 0;
};

void run_infer(const InferOpts& o) {
  set_thread_count(o.threads);
  const ObservationSet obs = observations_from_json(load_json(o.input));
  ensure_out_dir(o.out);

  TopologyConfig cfg;
  cfg.ransac.seed = o.seed;
  if (o.ransac_iterations > 0) cfg.ransac.iterations = o.ransac_iterations;
  if (o.ransac_threshold > 0) cfg.ransac.inlier_threshold = o.ransac_threshold;

  const WorldModel wm = infer_articulation(obs, cfg);
  const std::string summary = tree_summary(wm);

  json jwm = world_model_to_json(wm);
  jwm["config"] = {{"seed", o.seed},
                   {"ransac_iterations", cfg.ransac.iterations},
                   {"ransac_threshold", cfg.ransac.inlier_threshold}};

  write_json_atomic(join_path(o.out, "world_model.json"), jwm);
  write_text_atomic(join_path(o.out, "joints.csv"), joints_csv(wm));
  write_text_atomic(join_path(o.out, "tree.txt"), summary + "\n");
  std::cout << summary << "\n";
  log_info("reconstruction error " +
           std::to_string(reconstruction_error(wm, obs)));
}

// ---- fit-params ----

struct FitOpts {
  std::string input;
  std::string truth_path;
  std::string method = "adam";
  int particles = 16;
  int steps = 2000;
  double lr = 0.05;
  int window = 10;
  std::uint64_t seed = 0;
  double ransac_threshold = -1.0;
  std::string out = ".";
  int threads = 0;
};

void run_fit(const FitOpts& o) {
  set_thread_count(o.threads);
  const FitMethod method = parse_method(o.method);
  const ObservationSet obs = observations_from_json(load_json(o.input));
  const std::optional<GroundTruth> truth = load_truth(o.truth_path, o.input);
  ensure_out_dir(o.out);

  Mechanism defaults;
  ParamSpec params;
  std::vector<std::vector<double>> controls;
  if (truth) {
    defaults = truth->mech;
    params = truth->params;
    controls = truth->controls;
  } else if (!obs.scene.empty()) {
    const Preset pre = load_scene(obs.scene);
    defaults = pre.mech;
    params = pre.params;
    log_info("no ground-truth sidecar; scene \"" + obs.scene +
             "\" defaults, excitation assumed absent");
  } else {
    throw ConfigError(
        "no ground-truth sidecar and no scene tag in the observations; "
        "parameter boxes are unknown");
  }

  TopologyConfig tcfg;
  tcfg.ransac.seed = o.seed;
  if (o.ransac_threshold > 0)
    tcfg.ransac.inlier_threshold = o.ransac_threshold;
  const WorldModel wm = infer_articulation(obs, tcfg);
  const Mechanism skeleton = mechanism_from_world(wm, defaults);

  ShootingConfig scfg;
  scfg.window_length = o.window;
  ShootingProblem problem(skeleton, params, obs, controls, scfg);

  AdamConfig acfg;
  acfg.lr = o.lr;
  acfg.steps = o.steps;
  const std::optional<std::vector<double>> truth_theta =
      truth ? std::optional<std::vector<double>>(truth->theta) : std::nullopt;

  const auto t0 = std::chrono::steady_clock::now();
  const EstimateResult r =
      estimate(problem, method, acfg, o.particles, o.seed, truth_theta);
  log_info("estimation finished in " + std::to_string(seconds_since(t0)) +
           " s, loss " + std::to_string(r.loss));

  json jfit;
  jfit["scene"] = obs.scene;
  jfit["method"] = o.method;
  jfit["loss"] = r.loss;
  jfit["theta"] = r.theta;
  json paths = json::array();
  for (const ParamEntry& e : params.entries) paths.push_back(e.path);
  jfit["paths"] = std::move(paths);
  jfit["nmae"] = r.nmae ? json(*r.nmae) : json();
  if (!r.particle_thetas.empty()) {
    json jp = json::array();
    for (const std::vector<double>& t : r.particle_thetas) jp.push_back(t);
    jfit["particle_thetas"] = std::move(jp);
  }
  jfit["config"] = {{"seed", o.seed},
                    {"steps", o.steps},
                    {"particles", o.particles},
                    {"lr", o.lr},
                    {"window_length", o.window},
                    {"ransac_threshold", tcfg.ransac.inlier_threshold}};

  write_json_atomic(join_path(o.out, "fit.json"), jfit);
  write_text_atomic(join_path(o.out, "loss.csv"), csv_of_history(r.history));
  if (r.nmae) log_info("NMAE " + std::to_string(*r.nmae));
}

// ---- control ----

struct ControlOpts {
  std::string scene;
  std::string task = "both";
  std::string params_path;
  std::uint64_t seed = 0;
  int steps = 200;
  std::string out = ".";
  int threads = 0;
};

std::string episode_csv(const EpisodeResult& ep) {
  std::ostringstream out;
  out.precision(17);
  const int dof = ep.q.empty() ? 0 : static_cast<int>(ep.q.front().size());
  const int n_u = ep.u.empty() ? 0 : static_cast<int>(ep.u.front().size());
  out << "frame";
  for (int i = 0; i < dof; ++i) out << ",q" << i;
  for (int i = 0; i < dof; ++i) out << ",qd" << i;
  for (int i = 0; i < n_u; ++i) out << ",u" << i;
  out << "\n";
  for (std::size_t t = 0; t < ep.q.size(); ++t) {
    out << t;
    for (double v : ep.q[t]) out << "," << v;
    for (double v : ep.qd[t]) out << "," << v;
    for (int i = 0; i < n_u; ++i)
      out << "," << (t < ep.u.size() ? ep.u[t][i] : 0.0);
    out << "\n";
  }
  return out.str();
}

void run_control(const ControlOpts& o) {
  set_thread_count(o.threads);
  if (o.task != "swingup" && o.task != "balance" && o.task != "both")
    throw UsageError("unknown task \"" + o.task +
                     "\"; expected swingup, balance, or both");
  const Preset pre = load_scene(o.scene);
  if (o.scene != "cartpole")
    throw UsageError("control tasks are defined for the cartpole scene");
  ensure_out_dir(o.out);

  Mechanism plan_model = pre.mech;
  if (!o.params_path.empty()) {
    const json j = load_json(o.params_path);
    if (!j.contains("theta") || !j["theta"].is_array())
      throw ParseError(o.params_path + ": missing array field \"theta\"");
    std::vector<double> theta;
    for (const json& v : j["theta"]) {
      if (!v.is_number())
        throw ParseError(o.params_path +
                         ": field \"theta\" has a non-numeric entry");
      theta.push_back(v.get<double>());
    }
    if (static_cast<int>(theta.size()) != pre.params.size())
      throw DimensionMismatch(
          "field \"theta\" has " + std::to_string(theta.size()) +
          " entries, scene " + o.scene + " expects " +
          std::to_string(pre.params.size()));
    pre.params.apply(&plan_model, theta);
  }

  MppiConfig cfg;
  cfg.seed = o.seed;

  json jtasks;
  if (o.task == "swingup" || o.task == "both") {
    const SimState x0{{0.0, 0.0}, {0.0, 0.0}};
    const auto t0 = std::chrono::steady_clock::now();
    const EpisodeResult ep = run_episode(plan_model, pre.mech, x0, o.steps,
                                         cartpole_swingup_cost(), cfg);
    log_info("swing-up episode in " + std::to_string(seconds_since(t0)) +
             " s");
    jtasks["swingup"] = {{"success", swingup_success(ep)},
                         {"mean_reward", ep.mean_reward},
                         {"diverged", ep.diverged}};
    write_text_atomic(join_path(o.out, "episode_swingup.csv"),
                      episode_csv(ep));
  }
  if (o.task == "balance" || o.task == "both") {
    const SimState x0{{0.0, M_PI - 20.0 * M_PI / 180.0}, {0.1, 0.0}};
    const auto t0 = std::chrono::steady_clock::now();
    const EpisodeResult ep = run_episode(plan_model, pre.mech, x0, o.steps,
                                         cartpole_balance_cost(), cfg);
    log_info("balance episode in " + std::to_string(seconds_since(t0)) + " s");
    jtasks["balance"] = {{"success", balance_success(ep)},
                         {"mean_reward", ep.mean_reward},
                         {"diverged", ep.diverged}};
    write_text_atomic(join_path(o.out, "episode_balance.csv"),
                      episode_csv(ep));
  }

  json jout;
  jout["scene"] = o.scene;
  jout["tasks"] = std::move(jtasks);
  jout["config"] = {{"seed", o.seed},
                    {"steps", o.steps},
                    {"samples", cfg.samples},
                    {"horizon", cfg.horizon},
                    {"params", o.params_path}};
  write_json_atomic(join_path(o.out, "control.json"), jout);
}

// ---- eval ----

struct EvalOpts {
  std::string scene;
  int seeds = 10;
  int steps = 2000;
  int particles = 16;
  std::string out = "eval_out";
  int threads = 0;
};

// Plan-side parameters for the control stage: truth shifted by 4% of each
// box, alternating sign, clipped to the box. A model this far off must
// still swing up and balance the true system.
std::vector<double> offset_params(const ParamSpec& spec,
                                  const std::vector<double>& theta) {
  std::vector<double> out = theta;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double range = spec.entries[i].hi - spec.entries[i].lo;
    out[i] += (i % 2 == 0 ? 1.0 : -1.0) * 0.04 * range;
    out[i] = std::clamp(out[i], spec.entries[i].lo, spec.entries[i].hi);
  }
  return out;
}

void run_eval(const EvalOpts& o) {
  set_thread_count(o.threads);
  const Preset pre = load_scene(o.scene);
  ensure_out_dir(o.out);
  const std::vector<double> theta_true = pre.params.get(pre.mech);

  struct NoiseLevel {
    double p, r;
  };
  const std::vector<NoiseLevel> levels = {{0.0, 0.0}, {0.005, 0.01}};
  constexpr double kNmaeClean = 0.05;
  constexpr double kNmaeNoisy = 0.161;
  constexpr double kAxisTol = 1e-6;
  // Inlier gate for noisy runs; the pose residual of the true model under
  // the protocol noise sits near 0.03, well past the noiseless default.
  constexpr double kNoisyThreshold = 0.05;

  std::ostringstream timings;
  timings.precision(6);
  timings << "stage,seed,noise_p,method,seconds\n";

  int topo_clean = 0, topo_noisy = 0;
  double worst_clean_axis = 0.0;
  int adam_clean = 0, svgd_clean = 0, adam_noisy = 0, svgd_noisy = 0;
  json runs = json::array();

  for (int s = 0; s < o.seeds; ++s) {
    for (const NoiseLevel& nl : levels) {
      const bool noisy = nl.p > 0.0 || nl.r > 0.0;
      ObservationNoise noise;
      noise.sigma_p = nl.p;
      noise.sigma_r = nl.r;
      noise.seed = static_cast<std::uint64_t>(s);
      ObservationSet obs = generate_observations(
          pre.mech, pre.x0, pre.frames, pre.dt, pre.controls, noise);
      obs.scene = o.scene;
      obs.seed = static_cast<std::uint64_t>(s);

      TopologyConfig tcfg;
      tcfg.ransac.seed = static_cast<std::uint64_t>(s);
      if (noisy) tcfg.ransac.inlier_threshold = kNoisyThreshold;
      const WorldModel wm = infer_articulation(obs, tcfg);
      const TopologyMatch tm = compare_topology(wm, pre.mech);

      json run;
      run["seed"] = s;
      run["noise_p"] = nl.p;
      run["noise_r"] = nl.r;
      run["topology_exact"] = tm.exact;
      run["axis_err"] = tm.exact ? json(tm.max_axis_err) : json();
      if (!tm.exact) run["topology_detail"] = tm.detail;
      if (tm.exact) {
        (noisy ? topo_noisy : topo_clean) += 1;
        if (!noisy) worst_clean_axis = std::max(worst_clean_axis,
                                                tm.max_axis_err);
      }

      for (const char* mname : {"adam", "svgd"}) {
        json jm;
        if (!tm.exact) {
          jm["nmae"] = json();
          jm["error"] = "topology mismatch";
        } else {
          try {
            const Mechanism skeleton = mechanism_from_world(wm, pre.mech);
            ShootingProblem problem(skeleton, pre.params, obs, pre.controls,
                                    ShootingConfig{});
            AdamConfig acfg;
            acfg.steps = o.steps;
            const auto t0 = std::chrono::steady_clock::now();
            const EstimateResult r = estimate(
                problem, parse_method(mname), acfg, o.particles,
                static_cast<std::uint64_t>(s), theta_true);
            timings << "fit," << s << "," << nl.p << "," << mname << ","
                    << seconds_since(t0) << "\n";
            jm["nmae"] = r.nmae ? json(*r.nmae) : json();
            jm["loss"] = r.loss;
            if (r.nmae) {
              const bool clean_ok = *r.nmae < kNmaeClean;
              const bool noisy_ok = *r.nmae <= kNmaeNoisy;
              if (!noisy && clean_ok)
                (std::string(mname) == "adam" ? adam_clean : svgd_clean) += 1;
              if (noisy && noisy_ok)
                (std::string(mname) == "adam" ? adam_noisy : svgd_noisy) += 1;
            }
          } catch (const Error& e) {
            jm["nmae"] = json();
            jm["error"] = e.what();
            log_msg(LogLevel::kWarn, std::string("fit failed (seed ") +
                                         std::to_string(s) + ", " + mname +
                                         "): " + e.what());
          }
        }
        run[mname] = std::move(jm);
      }
      runs.push_back(std::move(run));
      log_info("seed " + std::to_string(s) + (noisy ? " noisy" : " clean") +
               " done");
    }
  }

  // Control stage: plan on slightly-off parameters, execute on the truth.
  json control = json::array();
  int swing_ok = 0, bal_ok = 0;
  const bool control_applicable = o.scene == "cartpole";
  if (control_applicable) {
    Mechanism plan_model = pre.mech;
    pre.params.apply(&plan_model, offset_params(pre.params, theta_true));
    for (int s = 0; s < o.seeds; ++s) {
      MppiConfig cfg;
      cfg.seed = static_cast<std::uint64_t>(s);
      json jc;
      jc["seed"] = s;
      try {
        const auto t0 = std::chrono::steady_clock::now();
        const EpisodeResult swing =
            run_episode(plan_model, pre.mech, SimState{{0.0, 0.0}, {0.0, 0.0}},
                        200, cartpole_swingup_cost(), cfg);
        const EpisodeResult bal = run_episode(
            plan_model, pre.mech,
            SimState{{0.0, M_PI - 20.0 * M_PI / 180.0}, {0.1, 0.0}}, 200,
            cartpole_balance_cost(), cfg);
        timings << "control," << s << ",0,mppi," << seconds_since(t0) << "\n";
        const bool sw = swingup_success(swing);
        const bool ba = balance_success(bal);
        swing_ok += sw ? 1 : 0;
        bal_ok += ba ? 1 : 0;
        jc["swingup"] = {{"success", sw}, {"mean_reward", swing.mean_reward}};
        jc["balance"] = {{"success", ba}, {"mean_reward", bal.mean_reward}};
      } catch (const Error& e) {
        jc["error"] = e.what();
        log_msg(LogLevel::kWarn, std::string("control failed (seed ") +
                                     std::to_string(s) + "): " + e.what());
      }
      control.push_back(std::move(jc));
      log_info("control seed " + std::to_string(s) + " done");
    }
  }

  const auto enough = [&](int k) { return k * 10 >= 8 * o.seeds; };
  json criteria;
  criteria["topology_noiseless"] = {
      {"pass", topo_clean == o.seeds && worst_clean_axis < kAxisTol},
      {"exact", topo_clean},
      {"total", o.seeds},
      {"max_axis_err", worst_clean_axis}};
  criteria["topology_noisy"] = {{"exact", topo_noisy}, {"total", o.seeds}};
  criteria["parameter_recovery_noiseless"] = {
      {"pass", enough(adam_clean) && enough(svgd_clean)},
      {"adam_ok", adam_clean},
      {"svgd_ok", svgd_clean},
      {"total", o.seeds},
      {"nmae_threshold", kNmaeClean}};
  criteria["parameter_recovery_noisy"] = {
      {"pass", enough(adam_noisy) && enough(svgd_noisy)},
      {"adam_ok", adam_noisy},
      {"svgd_ok", svgd_noisy},
      {"total", o.seeds},
      {"nmae_threshold", kNmaeNoisy}};
  if (control_applicable) {
    criteria["swingup"] = {{"pass", enough(swing_ok)},
                           {"successes", swing_ok},
                           {"total", o.seeds}};
    criteria["balance"] = {{"pass", enough(bal_ok)},
                           {"successes", bal_ok},
                           {"total", o.seeds}};
  }
  bool all_pass = true;
  for (const auto& [name, c] : criteria.items())
    if (c.contains("pass")) all_pass = all_pass && c["pass"].get<bool>();

  json summary;
  summary["scene"] = o.scene;
  summary["protocol"] = {{"seeds", o.seeds},
                         {"noise_levels", {{{"p", 0.0}, {"r", 0.0}},
                                           {{"p", 0.005}, {"r", 0.01}}}},
                         {"steps", o.steps},
                         {"particles", o.particles},
                         {"noisy_ransac_threshold", kNoisyThreshold}};
  summary["runs"] = std::move(runs);
  if (control_applicable) summary["control"] = std::move(control);
  summary["criteria"] = std::move(criteria);
  summary["pass"] = all_pass;

  write_json_atomic(join_path(o.out, "summary.json"), summary);
  write_text_atomic(join_path(o.out, "timings.csv"), timings.str());
  std::cout << (all_pass ? "PASS" : "FAIL") << " "
            << join_path(o.out, "summary.json") << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "articulated-mechanism reconstruction from pose trajectories"};
  app.require_subcommand(1);

  GenerateOpts gen;
  CLI::App* cmd_gen =
      app.add_subcommand("generate", "synthesize observations from a scene");
  cmd_gen->add_option("--scene", gen.scene, "scene name")->required();
  cmd_gen->add_option("--frames", gen.frames, "recording length (frames)");
  cmd_gen->add_option("--dt", gen.dt, "sampling interval (s)");
  cmd_gen->add_option("--noise-p", gen.noise_p, "translation noise (m)");
  cmd_gen->add_option("--noise-r", gen.noise_r, "rotation noise (rad)");
  cmd_gen->add_option("--seed", gen.seed, "noise seed");
  cmd_gen->add_option("--out", gen.out, "output directory");
  cmd_gen->add_option("--threads", gen.threads, "worker threads (0 = auto)");

  InferOpts inf;
  CLI::App* cmd_inf =
      app.add_subcommand("infer", "discover the articulation of a recording");
  cmd_inf->add_option("input", inf.input, "observations JSON")->required();
  cmd_inf->add_option("--out", inf.out, "output directory");
  cmd_inf->add_option("--seed", inf.seed, "fit seed");
  cmd_inf->add_option("--ransac-iterations", inf.ransac_iterations,
                      "hypothesis count per candidate joint");
  cmd_inf->add_option("--ransac-threshold", inf.ransac_threshold,
                      "pose-residual inlier gate");
  cmd_inf->add_option("--threads", inf.threads, "worker threads (0 = auto)");

  FitOpts fit;
  CLI::App* cmd_fit = app.add_subcommand(
      "fit-params", "estimate inertial parameters on the inferred mechanism");
  cmd_fit->add_option("input", fit.input, "observations JSON")->required();
  cmd_fit->add_option("--truth", fit.truth_path,
                      "ground-truth sidecar (default: sibling of input)");
  cmd_fit->add_option("--method", fit.method, "adam or svgd");
  cmd_fit->add_option("--particles", fit.particles, "svgd particle count")
      ->check(CLI::PositiveNumber);
  cmd_fit->add_option("--steps", fit.steps, "optimizer steps")
      ->check(CLI::PositiveNumber);
  cmd_fit->add_option("--lr", fit.lr, "optimizer learning rate");
  cmd_fit->add_option("--window", fit.window, "shooting window length")
      ->check(CLI::PositiveNumber);
  cmd_fit->add_option("--seed", fit.seed, "draw seed");
  cmd_fit->add_option("--ransac-threshold", fit.ransac_threshold,
                      "pose-residual inlier gate for the inference stage");
  cmd_fit->add_option("--out", fit.out, "output directory");
  cmd_fit->add_option("--threads", fit.threads, "worker threads (0 = auto)");

  ControlOpts ctl;
  CLI::App* cmd_ctl = app.add_subcommand(
      "control", "MPPI swing-up and balancing on an estimated model");
  cmd_ctl->add_option("--scene", ctl.scene, "scene name")->required();
  cmd_ctl->add_option("--task", ctl.task, "swingup, balance, or both");
  cmd_ctl->add_option("--params", ctl.params_path,
                      "fit result JSON providing plan-model theta");
  cmd_ctl->add_option("--seed", ctl.seed, "exploration noise seed");
  cmd_ctl->add_option("--steps", ctl.steps, "episode length")
      ->check(CLI::PositiveNumber);
  cmd_ctl->add_option("--out", ctl.out, "output directory");
  cmd_ctl->add_option("--threads", ctl.threads, "worker threads (0 = auto)");

  EvalOpts ev;
  CLI::App* cmd_ev = app.add_subcommand(
      "eval", "fixed experiment protocol; writes one summary JSON");
  cmd_ev->add_option("--scene", ev.scene, "scene name")->required();
  cmd_ev->add_option("--seeds", ev.seeds, "seeds 0..N-1")
      ->check(CLI::PositiveNumber);
  cmd_ev->add_option("--steps", ev.steps, "optimizer steps per fit")
      ->check(CLI::PositiveNumber);
  cmd_ev->add_option("--particles", ev.particles, "svgd particle count")
      ->check(CLI::PositiveNumber);
  cmd_ev->add_option("--out", ev.out, "output directory");
  cmd_ev->add_option("--threads", ev.threads, "worker threads (0 = auto)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (cmd_gen->parsed()) run_generate(gen);
    if (cmd_inf->parsed()) run_infer(inf);
    if (cmd_fit->parsed()) run_fit(fit);
    if (cmd_ctl->parsed()) run_control(ctl);
    if (cmd_ev->parsed()) run_eval(ev);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DimensionMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
