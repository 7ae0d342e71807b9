// neuroline: calibrate, screen, decode, simulate and augment a Bayesian
// intent decoder over EEG band-power streams.

#include <algorithm>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "neuroline/augment.hpp"
#include "neuroline/calibration.hpp"
#include "neuroline/decoder.hpp"
#include "neuroline/io.hpp"
#include "neuroline/sim.hpp"

namespace {

using namespace neuroline;
using io::json;

constexpr const char* kToolVersion = "0.1.0";

// NEUROLINE_CONFIG points at a simple key=value file whose keys mirror the
// long option names (e.g. "window-ms=800"). Values act as defaults; explicit
// flags always win.
std::map<std::string, std::string> load_config_map() {
  std::map<std::string, std::string> map;
  const char* path = std::getenv("NEUROLINE_CONFIG");
  if (!path || !*path) return map;
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::Io, std::string("NEUROLINE_CONFIG: cannot open ") + path);
  }
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!key.empty()) map[key] = value;
  }
  return map;
}

struct ConfigDefaults {
  std::map<std::string, std::string> map;

  template <typename T>
  void apply(const std::string& key, T& target) const {
    const auto it = map.find(key);
    if (it == map.end()) return;
    std::istringstream ss(it->second);
    T value;
    if (ss >> value) target = value;
  }
};

std::int64_t resolve_created_at() {
  // SOURCE_DATE_EPOCH keeps profile bytes reproducible in scripted runs.
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
    return std::atoll(epoch);
  }
  return static_cast<std::int64_t>(std::time(nullptr));
}

int exit_code_for(const Error& e) {
  return e.kind() == ErrorKind::Screening ? 2 : 1;
}

// ---------------------------------------------------------------------------

struct CalibrateArgs {
  std::string trials_path;
  std::string relax_path;
  std::string out_profile;
  std::string report_path;
  std::string hist_dir;
  calibration::CalibrationConfig config;
  bool strict = true;
};

json selection_report_json(const calibration::BuildResult& result) {
  json features = json::array();
  for (const auto& entry : result.selection.report) {
    features.push_back(json{{"channel",
                             signal::kChannelNames[static_cast<std::size_t>(
                                 entry.key.channel)]},
                            {"band", signal::band_name(entry.key.band)},
                            {"window_index", entry.window_index},
                            {"p_value", entry.p_value},
                            {"effect_r", entry.effect_r}});
  }
  auto ranking_json = [](const std::vector<std::pair<stats::Family, double>>& r) {
    json out = json::array();
    for (const auto& [fam, d] : r) {
      out.push_back(json{{"family", stats::family_name(fam)}, {"ks_d", d}});
    }
    return out;
  };
  json warnings = json::array();
  for (const auto& w : result.warnings) {
    warnings.push_back(json{{"trial", w.trial_index}, {"message", w.message}});
  }
  return json{
      {"format", "neuroline-feature-report"},
      {"version", io::kFormatVersion},
      {"selected", result.selection.selected.label()},
      {"region_ms",
       {result.selection.region_start_ms, result.selection.region_end_ms}},
      {"features", features},
      {"normality",
       {{"speed_up",
         {{"w", result.fit.normality_speedup.statistic},
          {"p", result.fit.normality_speedup.p_value}}},
        {"slow_down",
         {{"w", result.fit.normality_slowdown.statistic},
          {"p", result.fit.normality_slowdown.p_value}}}}},
      {"family_ranking",
       {{"speed_up", ranking_json(result.fit.ranking_speedup)},
        {"slow_down", ranking_json(result.fit.ranking_slowdown)}}},
      {"screen",
       {{"kl_norm", result.screen.kl_norm},
        {"pass", result.screen.pass},
        {"support_mismatch", result.screen.support_mismatch}}},
      {"warnings", warnings}};
}

int run_calibrate(const CalibrateArgs& args) {
  std::ifstream trials_in(args.trials_path);
  if (!trials_in) {
    std::cerr << "error: cannot open trials file: " << args.trials_path << "\n";
    return 1;
  }
  calibration::TrialSet set = io::read_trials(trials_in, args.strict);

  std::ifstream relax_in(args.relax_path);
  if (!relax_in) {
    std::cerr << "error: cannot open relaxation file: " << args.relax_path << "\n";
    return 1;
  }
  set.relaxation = io::read_frames(relax_in, args.strict);

  calibration::BuildResult result;
  try {
    result = calibration::build_profile(set, args.config);
  } catch (const ScreeningError& e) {
    std::cerr << "screening failed, kl_norm=" << std::fixed
              << std::setprecision(2) << e.kl_norm() << " (" << e.what()
              << ")\n";
    return 2;
  }

  if (!args.report_path.empty()) {
    io::write_file(args.report_path,
                   selection_report_json(result).dump(2) + "\n");
  }
  if (!args.hist_dir.empty()) {
    const auto& p = result.profile;
    io::write_file(args.hist_dir + "/hist_speedup.json",
                   io::histogram_json(p.values_speedup, 24).dump(2) + "\n");
    io::write_file(args.hist_dir + "/hist_slowdown.json",
                   io::histogram_json(p.values_slowdown, 24).dump(2) + "\n");
  }

  if (!result.screen.pass) {
    std::cerr << "screening failed, kl_norm=" << std::fixed
              << std::setprecision(2) << result.screen.kl_norm << "\n";
    return 2;
  }

  result.profile.created_at_unix_s = resolve_created_at();
  io::ProfileFile file;
  file.profile = result.profile;
  file.provenance.tool_version = kToolVersion;
  io::save_profile(args.out_profile, file);
  std::cout << "profile written: " << args.out_profile
            << " selected=" << result.profile.selected.label()
            << " kl_norm=" << result.profile.kl_norm << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct DecodeArgs {
  std::string profile_path;
  std::string frames_in;  // path or "-"
  std::string twist_out;
  std::string decisions_out;
  int window_ms = -1;  // -1: use the profile's calibrated value
  int hop_ms = -1;
  double z_threshold = -1.0;
  double gain = -1.0;
  double dv_max = -1.0;
  double v_max = 4.17;
  double damping = 0.5;
  bool strict = true;
};

int run_decode(const DecodeArgs& args) {
  const io::ProfileFile file = io::load_profile(args.profile_path);
  const calibration::UserProfile& profile = file.profile;

  decoder::DecoderConfig dconfig;
  if (args.z_threshold >= 0.0) dconfig.z_threshold = args.z_threshold;
  if (args.gain > 0.0) dconfig.gain_k = args.gain;
  if (args.dv_max > 0.0) dconfig.delta_v_max = args.dv_max;
  const int window_ms = args.window_ms > 0 ? args.window_ms : profile.window_ms;
  const int hop_ms = args.hop_ms > 0 ? args.hop_ms : profile.hop_ms;

  std::ifstream file_in;
  std::istream* in = &std::cin;
  if (args.frames_in != "-") {
    file_in.open(args.frames_in);
    if (!file_in) {
      std::cerr << "error: cannot open frames input: " << args.frames_in << "\n";
      return 1;
    }
    in = &file_in;
  }

  std::ofstream twist_out(args.twist_out);
  std::ofstream decisions_out(args.decisions_out);
  if (!twist_out || !decisions_out) {
    std::cerr << "error: cannot open output files\n";
    return 1;
  }
  twist_out << io::make_header("neuroline-twist").dump() << "\n";
  decisions_out << io::make_header("neuroline-decisions").dump() << "\n";

  // Synchronous line-at-a-time processing; one window of frames retained.
  signal::WindowAssembler assembler(window_ms, hop_ms);
  const double hop_s = static_cast<double>(hop_ms) / 1000.0;
  double velocity = 0.0;
  std::size_t line_no = 1;
  std::size_t skipped = 0;
  std::size_t n_decisions = 0;

  auto handle_window = [&](const signal::Window& w) {
    if (w.partial && dconfig.skip_partial_windows) return;
    const auto decision = decoder::decide(w, profile, dconfig);
    velocity = std::clamp((1.0 - args.damping * hop_s) * velocity +
                              decision.delta_v,
                          0.0, args.v_max);
    decisions_out << io::decision_to_json(decision).dump() << "\n";
    twist_out << io::twist_to_json(decision.window_end_ms, velocity).dump()
              << "\n";
    ++n_decisions;
  };

  std::string line;
  if (!std::getline(*in, line)) {
    std::cout << "0 decisions\n";
    return 0;  // empty input is not an error
  }
  try {
    io::check_header(json::parse(line, nullptr, false), "neuroline-frames");
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  while (std::getline(*in, line)) {
    ++line_no;
    if (line.empty()) continue;
    signal::PowerFrame frame;
    try {
      frame = io::frame_from_line(line, args.strict);
      for (const auto& w : assembler.push_frame(frame)) handle_window(w);
    } catch (const Error& e) {
      if (args.strict) {
        std::cerr << "error: line " << line_no << ": " << e.what() << "\n";
        return 1;
      }
      ++skipped;
      continue;
    }
  }
  for (const auto& w : assembler.finish()) handle_window(w);

  std::cout << n_decisions << " decisions";
  if (skipped > 0) std::cout << ", " << skipped << " lines skipped";
  std::cout << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string user_path;
  std::string profile_path;  // empty: self-calibrate from the synthetic user
  std::string out_dir;
  std::int64_t duration_ms = 60000;
  std::optional<std::uint64_t> seed;
  int window_ms = 1000;
  int hop_ms = 500;
  double z_threshold = 2.0;
  double gain = 0.05;
  double dv_max = 0.2;
  sim::SimConfig sim_config;
  int calib_trials = 10;
  int calib_trial_ms = 4000;
};

calibration::TrialSet self_calibration_trials(const sim::SyntheticUser& user,
                                              const SimulateArgs& args) {
  calibration::TrialSet set;
  set.trial_duration_ms = args.calib_trial_ms;
  for (int t = 0; t < 2 * args.calib_trials; ++t) {
    sim::SyntheticUser trial_user = user;
    trial_user.seed = user.seed * 1000003ull + static_cast<std::uint64_t>(t);
    trial_user.schedule = {{0, t % 2 == 0 ? sim::SchedState::SpeedUp
                                          : sim::SchedState::SlowDown}};
    calibration::Trial trial;
    trial.label = t % 2 == 0 ? calibration::Label::SpeedUp
                             : calibration::Label::SlowDown;
    trial.onset_ms = 0;
    trial.frames = sim::emit_frames(trial_user, args.calib_trial_ms);
    set.trials.push_back(std::move(trial));
  }
  sim::SyntheticUser relax_user = user;
  relax_user.seed = user.seed * 1000003ull + 999983ull;
  relax_user.schedule = {{0, sim::SchedState::Idle}};
  set.relaxation = sim::emit_frames(relax_user, 16000);
  return set;
}

int run_simulate(const SimulateArgs& args) {
  sim::SyntheticUser user = io::load_user(args.user_path);
  if (args.seed.has_value()) user.seed = *args.seed;

  decoder::DecoderConfig dconfig;
  dconfig.z_threshold = args.z_threshold;
  dconfig.gain_k = args.gain;
  dconfig.delta_v_max = args.dv_max;

  calibration::UserProfile profile;
  bool self_calibrated = false;
  if (!args.profile_path.empty()) {
    profile = io::load_profile(args.profile_path).profile;
  } else {
    calibration::CalibrationConfig cconfig;
    cconfig.window_ms = args.window_ms;
    cconfig.hop_ms = args.hop_ms;
    const auto set = self_calibration_trials(user, args);
    auto built = calibration::build_profile(set, cconfig);
    if (!built.screen.pass) {
      std::cerr << "screening failed, kl_norm=" << std::fixed
                << std::setprecision(2) << built.screen.kl_norm << "\n";
      return 2;
    }
    built.profile.created_at_unix_s = resolve_created_at();
    profile = built.profile;
    self_calibrated = true;
  }

  sim::SimConfig scfg = args.sim_config;
  scfg.duration_ms = args.duration_ms;
  const auto result = sim::run_closed_loop(user, profile, dconfig, scfg,
                                           args.window_ms, args.hop_ms);

  std::ostringstream trajectory;
  trajectory << io::make_header("neuroline-trajectory").dump() << "\n";
  for (const auto& s : result.trajectory) {
    trajectory << json{{"t", s.t_ms},
                       {"position_m", s.position_m},
                       {"velocity_mps", s.velocity_mps}}
                      .dump()
               << "\n";
  }
  io::write_file(args.out_dir + "/trajectory.jsonl", trajectory.str());

  std::ostringstream decisions;
  std::ostringstream twist;
  decisions << io::make_header("neuroline-decisions").dump() << "\n";
  twist << io::make_header("neuroline-twist").dump() << "\n";
  {
    // Rebuild the velocity-at-command-time view from the trajectory.
    std::size_t traj_idx = 0;
    for (const auto& d : result.decisions) {
      decisions << io::decision_to_json(d).dump() << "\n";
      while (traj_idx + 1 < result.trajectory.size() &&
             result.trajectory[traj_idx].t_ms < d.window_end_ms) {
        ++traj_idx;
      }
      twist << io::twist_to_json(d.window_end_ms,
                                 result.trajectory[traj_idx].velocity_mps)
                   .dump()
            << "\n";
    }
  }
  io::write_file(args.out_dir + "/decisions.jsonl", decisions.str());
  io::write_file(args.out_dir + "/twist.jsonl", twist.str());

  const json metrics{{"format", "neuroline-metrics"},
                     {"version", io::kFormatVersion},
                     {"active_windows", result.metrics.active_windows},
                     {"correct", result.metrics.correct},
                     {"accuracy", result.metrics.accuracy},
                     {"mean_confidence", result.metrics.mean_confidence},
                     {"max_velocity_mps", result.metrics.max_velocity_mps},
                     {"final_velocity_mps", result.metrics.final_velocity_mps},
                     {"final_position_m", result.metrics.final_position_m},
                     {"seed", user.seed},
                     {"self_calibrated", self_calibrated}};
  io::write_file(args.out_dir + "/metrics.json", metrics.dump(2) + "\n");

  if (self_calibrated) {
    io::ProfileFile file;
    file.profile = profile;
    file.provenance.seed = user.seed;
    file.provenance.tool_version = kToolVersion;
    io::save_profile(args.out_dir + "/profile.json", file);
  }

  std::cout << "accuracy=" << result.metrics.accuracy
            << " active_windows=" << result.metrics.active_windows
            << " final_v=" << result.metrics.final_velocity_mps << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct AugmentArgs {
  std::string profile_path;
  std::string out_dir;
  std::string loss = "stat";  // ce | stat | both
  std::string state = "speed_up";
  augment::GanConfig config;
  int n_out = 1000;
};

json augment_report_json(const augment::AugmentReport& report) {
  return json{{"format", "neuroline-augment-report"},
              {"version", io::kFormatVersion},
              {"loss_mode", augment::loss_mode_name(report.loss_mode)},
              {"epochs", report.epochs},
              {"completed_epochs", report.completed_epochs},
              {"aborted", report.aborted},
              {"real_stats", io::shape_stats_to_json(report.real_stats)},
              {"synth_stats", io::shape_stats_to_json(report.synth_stats)},
              {"gaps", report.gaps},
              {"normalized_gaps", report.normalized_gaps},
              {"d_loss", report.d_loss},
              {"g_loss", report.g_loss},
              {"stat_loss", report.stat_loss}};
}

int run_augment(const AugmentArgs& args) {
  const io::ProfileFile file = io::load_profile(args.profile_path);
  const auto& values = args.state == "slow_down"
                           ? file.profile.values_slowdown
                           : file.profile.values_speedup;
  if (values.size() < 16) {
    std::cerr << "error: profile carries " << values.size() << " " << args.state
              << " calibration values; need >= 16 for augmentation\n";
    return 1;
  }

  auto run_mode = [&](augment::LossMode mode) {
    augment::GanConfig config = args.config;
    config.loss_mode = mode;
    const auto trained = augment::train_gan(values, config);
    const char* tag = mode == augment::LossMode::CrossEntropy ? "ce" : "stat";
    io::write_file(args.out_dir + "/report_" + tag + ".json",
                   augment_report_json(trained.report).dump(2) + "\n");

    auto synth = augment::generate(trained.generator, args.n_out,
                                   config.seed ^ 0x5bf03635ull);
    std::sort(synth.begin(), synth.end());
    std::ostringstream samples;
    for (double v : synth) samples << json(v).dump() << "\n";
    io::write_file(args.out_dir + "/samples_" + std::string(tag) + ".txt",
                   samples.str());
    io::write_file(args.out_dir + "/hist_" + tag + ".json",
                   json{{"real", io::histogram_json(values, 24)},
                        {"synthetic", io::histogram_json(synth, 24)}}
                           .dump(2) +
                       "\n");
    io::save_gan(io::gan_sidecar_path(args.profile_path, mode), trained, config);
    return trained;
  };

  if (args.loss == "both") {
    augment::GanConfig ce = args.config;
    ce.loss_mode = augment::LossMode::CrossEntropy;
    augment::GanConfig st = args.config;
    st.loss_mode = augment::LossMode::StatMatched;
    // Validates the pairing invariants (same seed and epochs).
    (void)augment::compare_losses(values, ce, st);
    run_mode(augment::LossMode::CrossEntropy);
    run_mode(augment::LossMode::StatMatched);
  } else if (args.loss == "ce") {
    run_mode(augment::LossMode::CrossEntropy);
  } else if (args.loss == "stat") {
    run_mode(augment::LossMode::StatMatched);
  } else {
    std::cerr << "error: --loss must be ce, stat or both\n";
    return 1;
  }
  std::cout << "augmentation reports written to " << args.out_dir << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

int run_screen(const std::string& profile_path, double threshold) {
  const io::ProfileFile file = io::load_profile(profile_path);
  const auto result = calibration::screen_user(
      file.profile.like_speedup, file.profile.like_slowdown, threshold);
  std::cout << "kl_norm=" << result.kl_norm
            << (result.pass ? " pass" : " fail")
            << (result.support_mismatch ? " (support mismatch)" : "") << "\n";
  return result.pass ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  ConfigDefaults defaults;
  try {
    defaults.map = load_config_map();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  CLI::App app{"Bayesian intent decoding for BCI-controlled mobility"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  // calibrate ---------------------------------------------------------------
  CalibrateArgs cal;
  defaults.apply("window-ms", cal.config.window_ms);
  defaults.apply("hop-ms", cal.config.hop_ms);
  defaults.apply("alpha", cal.config.alpha);
  defaults.apply("region-start-ms", cal.config.region_start_ms);
  defaults.apply("screen-threshold", cal.config.screen_threshold);
  auto* cal_cmd = app.add_subcommand("calibrate",
                                     "Build a user profile from labeled trials");
  cal_cmd->add_option("--trials", cal.trials_path, "Trials JSONL file")->required();
  cal_cmd->add_option("--relax", cal.relax_path, "Relaxation frames JSONL")->required();
  cal_cmd->add_option("--out", cal.out_profile, "Output profile path")->required();
  cal_cmd->add_option("--report", cal.report_path, "Ranked feature report path");
  cal_cmd->add_option("--hist-dir", cal.hist_dir, "Directory for histogram data");
  cal_cmd->add_option("--window-ms", cal.config.window_ms, "Sliding window length");
  cal_cmd->add_option("--hop-ms", cal.config.hop_ms, "Window hop");
  cal_cmd->add_option("--alpha", cal.config.alpha, "Significance threshold");
  cal_cmd->add_option("--region-start-ms", cal.config.region_start_ms,
                      "Analysis region start after onset");
  cal_cmd->add_option("--screen-threshold", cal.config.screen_threshold,
                      "kl_norm onboarding threshold");
  auto* cal_strict = cal_cmd->add_flag("--strict", "Reject malformed lines (default)");
  auto* cal_lenient = cal_cmd->add_flag("--lenient", "Skip malformed lines");

  // screen ------------------------------------------------------------------
  std::string screen_profile;
  double screen_threshold = 0.2;
  defaults.apply("screen-threshold", screen_threshold);
  auto* screen_cmd = app.add_subcommand("screen", "Re-check a profile's kl_norm");
  screen_cmd->add_option("--profile", screen_profile, "Profile path")->required();
  screen_cmd->add_option("--threshold", screen_threshold, "kl_norm threshold");

  // decode ------------------------------------------------------------------
  DecodeArgs dec;
  defaults.apply("z-threshold", dec.z_threshold);
  defaults.apply("gain", dec.gain);
  defaults.apply("dv-max", dec.dv_max);
  defaults.apply("v-max", dec.v_max);
  defaults.apply("damping", dec.damping);
  auto* dec_cmd = app.add_subcommand("decode",
                                     "Decode a frame stream into velocity commands");
  dec_cmd->add_option("--profile", dec.profile_path, "Profile path")->required();
  dec_cmd->add_option("--in", dec.frames_in, "Frames JSONL path or - for stdin")
      ->required();
  dec_cmd->add_option("--twist-out", dec.twist_out, "Twist JSONL output")->required();
  dec_cmd->add_option("--decisions-out", dec.decisions_out, "Decision JSONL output")
      ->required();
  dec_cmd->add_option("--window-ms", dec.window_ms, "Override the profile's window");
  dec_cmd->add_option("--hop-ms", dec.hop_ms, "Override the profile's hop");
  dec_cmd->add_option("--z-threshold", dec.z_threshold, "Idle gate threshold");
  dec_cmd->add_option("--gain", dec.gain, "m/s per nat of confidence");
  dec_cmd->add_option("--dv-max", dec.dv_max, "Velocity increment cap");
  dec_cmd->add_option("--v-max", dec.v_max, "Velocity cap for the twist stream");
  dec_cmd->add_option("--damping", dec.damping, "Damping applied per hop");
  auto* dec_strict = dec_cmd->add_flag("--strict", "Fail on malformed lines (default)");
  auto* dec_lenient = dec_cmd->add_flag("--lenient", "Skip malformed lines");

  // simulate ----------------------------------------------------------------
  SimulateArgs simargs;
  defaults.apply("window-ms", simargs.window_ms);
  defaults.apply("hop-ms", simargs.hop_ms);
  defaults.apply("z-threshold", simargs.z_threshold);
  defaults.apply("gain", simargs.gain);
  defaults.apply("dv-max", simargs.dv_max);
  defaults.apply("v-max", simargs.sim_config.v_max_mps);
  defaults.apply("damping", simargs.sim_config.damping_gamma);
  defaults.apply("dt-ms", simargs.sim_config.dt_ms);
  std::uint64_t sim_seed = 0;
  auto* sim_cmd = app.add_subcommand("simulate",
                                     "Closed-loop run against a synthetic user");
  sim_cmd->add_option("--user", simargs.user_path, "Synthetic user spec")->required();
  sim_cmd->add_option("--profile", simargs.profile_path,
                      "Calibrated profile (omit to self-calibrate)");
  sim_cmd->add_option("--out-dir", simargs.out_dir, "Output directory")->required();
  sim_cmd->add_option("--duration-ms", simargs.duration_ms, "Simulated duration");
  auto* sim_seed_opt =
      sim_cmd->add_option("--seed", sim_seed, "Override the user spec's seed");
  sim_cmd->add_option("--window-ms", simargs.window_ms, "Sliding window length");
  sim_cmd->add_option("--hop-ms", simargs.hop_ms, "Window hop");
  sim_cmd->add_option("--z-threshold", simargs.z_threshold, "Idle gate threshold");
  sim_cmd->add_option("--gain", simargs.gain, "m/s per nat");
  sim_cmd->add_option("--dv-max", simargs.dv_max, "Velocity increment cap");
  sim_cmd->add_option("--v-max", simargs.sim_config.v_max_mps, "Speed cap (m/s)");
  sim_cmd->add_option("--damping", simargs.sim_config.damping_gamma,
                      "Damping per second");
  sim_cmd->add_option("--dt-ms", simargs.sim_config.dt_ms, "Integrator step");
  sim_cmd->add_option("--calib-trials", simargs.calib_trials,
                      "Self-calibration trials per label");

  // augment -----------------------------------------------------------------
  AugmentArgs aug;
  defaults.apply("epochs", aug.config.epochs);
  defaults.apply("batch-size", aug.config.batch_size);
  defaults.apply("lr", aug.config.learning_rate);
  defaults.apply("lambda-stat", aug.config.lambda_stat);
  defaults.apply("n-out", aug.n_out);
  defaults.apply("loss", aug.loss);
  auto* aug_cmd = app.add_subcommand("augment",
                                     "GAN augmentation of calibration data");
  aug_cmd->add_option("--profile", aug.profile_path, "Profile path")->required();
  aug_cmd->add_option("--out-dir", aug.out_dir, "Output directory")->required();
  aug_cmd->add_option("--loss", aug.loss, "Loss mode: ce | stat | both");
  aug_cmd->add_option("--state", aug.state, "speed_up | slow_down");
  aug_cmd->add_option("--epochs", aug.config.epochs, "Training epochs");
  aug_cmd->add_option("--seed", aug.config.seed, "Training seed");
  aug_cmd->add_option("--batch-size", aug.config.batch_size, "Minibatch size");
  aug_cmd->add_option("--lr", aug.config.learning_rate, "Adam learning rate");
  aug_cmd->add_option("--lambda-stat", aug.config.lambda_stat,
                      "Weight of the five-statistic loss term");
  aug_cmd->add_option("--n-out", aug.n_out, "Synthetic sample count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  cal.strict = !*cal_lenient || *cal_strict;
  dec.strict = !*dec_lenient || *dec_strict;
  if (sim_seed_opt->count() > 0) simargs.seed = sim_seed;

  try {
    if (*cal_cmd) return run_calibrate(cal);
    if (*screen_cmd) return run_screen(screen_profile, screen_threshold);
    if (*dec_cmd) return run_decode(dec);
    if (*sim_cmd) return run_simulate(simargs);
    if (*aug_cmd) return run_augment(aug);
  } catch (const Error& e) {
    std::cerr << "error (" << error_kind_name(e.kind()) << "): " << e.what()
              << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
