#include "neuroline/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace neuroline::io {

namespace {

json get_required(const json& j, const char* key) {
  if (!j.contains(key)) {
    throw Error(ErrorKind::Format, std::string("missing key \"") + key + "\"");
  }
  return j.at(key);
}

[[noreturn]] void format_error(const std::string& what) {
  throw Error(ErrorKind::Format, what);
}

}  // namespace

json make_header(const std::string& format) {
  return json{{"format", format}, {"version", kFormatVersion}};
}

void check_header(const json& header, const std::string& format) {
  if (!header.is_object() || !header.contains("format") ||
      !header.contains("version")) {
    format_error("missing format header line");
  }
  if (header.at("format").get<std::string>() != format) {
    format_error("expected format \"" + format + "\", found \"" +
                 header.at("format").get<std::string>() + "\"");
  }
  const int version = header.at("version").get<int>();
  if (version != kFormatVersion) {
    format_error("unsupported " + format + " version " +
                 std::to_string(version) + " (expected " +
                 std::to_string(kFormatVersion) + "); migration required");
  }
}

// --------------------------------------------------------------------------

json frame_to_json(const signal::PowerFrame& frame) {
  return json{{"t", frame.timestamp_ms},
              {"pow", std::vector<double>(frame.values.begin(),
                                          frame.values.end())}};
}

signal::PowerFrame frame_from_json(const json& j, bool strict) {
  if (!j.is_object()) format_error("frame record must be an object");
  if (strict) {
    for (const auto& [key, value] : j.items()) {
      (void)value;
      if (key != "t" && key != "pow") {
        format_error("unknown key \"" + key + "\" in frame record");
      }
    }
  }
  signal::PowerFrame frame;
  const json t = get_required(j, "t");
  if (!t.is_number_integer()) format_error("frame \"t\" must be an integer");
  frame.timestamp_ms = t.get<std::int64_t>();
  const json pow = get_required(j, "pow");
  if (!pow.is_array() || pow.size() != signal::kFeatureCount) {
    format_error("frame \"pow\" must hold exactly 70 values");
  }
  for (std::size_t i = 0; i < signal::kFeatureCount; ++i) {
    if (!pow[i].is_number()) format_error("frame power must be numeric");
    const double v = pow[i].get<double>();
    if (!std::isfinite(v) || v < 0.0) {
      format_error("frame power must be finite and >= 0");
    }
    frame.values[i] = v;
  }
  return frame;
}

std::string frame_to_line(const signal::PowerFrame& frame) {
  return frame_to_json(frame).dump();
}

signal::PowerFrame frame_from_line(const std::string& line, bool strict) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    format_error(std::string("bad JSON: ") + e.what());
  }
  return frame_from_json(j, strict);
}

std::vector<signal::PowerFrame> read_frames(std::istream& in, bool strict,
                                            std::size_t* skipped) {
  std::string line;
  if (!std::getline(in, line)) format_error("empty frame stream (no header)");
  check_header(json::parse(line, nullptr, false), "neuroline-frames");

  std::vector<signal::PowerFrame> frames;
  std::size_t line_no = 1;
  std::size_t skip_count = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      frames.push_back(frame_from_line(line, strict));
      if (frames.size() >= 2 &&
          frames.back().timestamp_ms <= frames[frames.size() - 2].timestamp_ms) {
        frames.pop_back();
        throw Error(ErrorKind::Format, "timestamps must strictly increase");
      }
    } catch (const Error& e) {
      if (strict) {
        format_error("line " + std::to_string(line_no) + ": " + e.what());
      }
      ++skip_count;
    }
  }
  if (skipped) *skipped = skip_count;
  return frames;
}

void write_frames(std::ostream& out,
                  std::span<const signal::PowerFrame> frames) {
  out << make_header("neuroline-frames").dump() << '\n';
  for (const auto& f : frames) out << frame_to_line(f) << '\n';
}

// --------------------------------------------------------------------------

json twist_to_json(std::int64_t t_ms, double linear_x) {
  return json{{"t", t_ms},
              {"linear", {{"x", linear_x}, {"y", 0.0}, {"z", 0.0}}},
              {"angular", {{"x", 0.0}, {"y", 0.0}, {"z", 0.0}}}};
}

json decision_to_json(const decoder::Decision& d) {
  json j{{"t0", d.window_start_ms},
         {"t1", d.window_end_ms},
         {"state", decoder::intent_name(d.state)},
         {"confidence", d.confidence},
         {"delta_v", d.delta_v},
         {"value", d.measurement},
         {"gate_z", d.gate_z}};
  if (d.log_odds.has_value()) j["d"] = *d.log_odds;
  json flags = json::array();
  if (d.saturated) flags.push_back("saturated");
  if (d.undecidable) flags.push_back("undecidable");
  if (!flags.empty()) j["flags"] = flags;
  return j;
}

decoder::Decision decision_from_json(const json& j) {
  decoder::Decision d;
  d.window_start_ms = get_required(j, "t0").get<std::int64_t>();
  d.window_end_ms = get_required(j, "t1").get<std::int64_t>();
  const std::string state = get_required(j, "state").get<std::string>();
  if (state == "speed_up") {
    d.state = decoder::Intent::SpeedUp;
  } else if (state == "slow_down") {
    d.state = decoder::Intent::SlowDown;
  } else if (state == "idle") {
    d.state = decoder::Intent::Idle;
  } else {
    format_error("unknown decision state \"" + state + "\"");
  }
  d.confidence = get_required(j, "confidence").get<double>();
  d.delta_v = get_required(j, "delta_v").get<double>();
  d.measurement = get_required(j, "value").get<double>();
  d.gate_z = get_required(j, "gate_z").get<double>();
  if (j.contains("d")) d.log_odds = j.at("d").get<double>();
  if (j.contains("flags")) {
    for (const auto& f : j.at("flags")) {
      const std::string name = f.get<std::string>();
      if (name == "saturated") d.saturated = true;
      if (name == "undecidable") d.undecidable = true;
    }
  }
  return d;
}

// --------------------------------------------------------------------------

json dist_to_json(const stats::DistFamily& d) {
  return json{{"family", stats::family_name(d.family)}, {"params", d.params}};
}

stats::DistFamily dist_from_json(const json& j) {
  const std::string name = get_required(j, "family").get<std::string>();
  const auto family = stats::family_from_name(name);
  if (!family) format_error("unknown distribution family \"" + name + "\"");
  std::vector<double> params =
      get_required(j, "params").get<std::vector<double>>();
  try {
    return stats::DistFamily(*family, std::move(params));
  } catch (const Error& e) {
    format_error(std::string("invalid distribution parameters: ") + e.what());
  }
}

namespace {

json feature_to_json(const signal::FeatureKey& key) {
  return json{{"channel", signal::kChannelNames[static_cast<std::size_t>(
                   key.channel)]},
              {"band", signal::band_name(key.band)}};
}

signal::FeatureKey feature_from_json(const json& j) {
  const std::string channel = get_required(j, "channel").get<std::string>();
  const std::string band = get_required(j, "band").get<std::string>();
  const auto ch = signal::channel_from_name(channel);
  const auto bd = signal::band_from_name(band);
  if (!ch) format_error("unknown channel \"" + channel + "\"");
  if (!bd) format_error("unknown band \"" + band + "\"");
  return signal::FeatureKey{*ch, *bd};
}

}  // namespace

json profile_to_json(const ProfileFile& file) {
  const auto& p = file.profile;
  json j{{"format", "neuroline-profile"},
         {"version", kFormatVersion},
         {"selected", feature_to_json(p.selected)},
         {"region_ms", {p.region_start_ms, p.region_end_ms}},
         {"window_ms", p.window_ms},
         {"hop_ms", p.hop_ms},
         {"like_speedup", dist_to_json(p.like_speedup)},
         {"like_slowdown", dist_to_json(p.like_slowdown)},
         {"idle", {{"mean", p.idle.mean}, {"sd", p.idle.sd}, {"n", p.idle.n}}},
         {"kl_norm", p.kl_norm},
         {"created_at_unix_s", p.created_at_unix_s},
         {"config_hash", p.config_hash},
         {"values",
          {{"speed_up", p.values_speedup}, {"slow_down", p.values_slowdown}}}};
  json prov{{"tool_version", file.provenance.tool_version}};
  if (file.provenance.seed.has_value()) prov["seed"] = *file.provenance.seed;
  j["provenance"] = prov;
  return j;
}

ProfileFile profile_from_json(const json& j) {
  check_header(j, "neuroline-profile");
  ProfileFile file;
  calibration::UserProfile& p = file.profile;
  p.selected = feature_from_json(get_required(j, "selected"));
  const json region = get_required(j, "region_ms");
  if (!region.is_array() || region.size() != 2) {
    format_error("region_ms must be [start, end]");
  }
  p.region_start_ms = region[0].get<int>();
  p.region_end_ms = region[1].get<int>();
  p.window_ms = get_required(j, "window_ms").get<int>();
  p.hop_ms = get_required(j, "hop_ms").get<int>();
  p.like_speedup = dist_from_json(get_required(j, "like_speedup"));
  p.like_slowdown = dist_from_json(get_required(j, "like_slowdown"));
  const json idle = get_required(j, "idle");
  p.idle.mean = get_required(idle, "mean").get<double>();
  p.idle.sd = get_required(idle, "sd").get<double>();
  p.idle.n = get_required(idle, "n").get<int>();
  p.kl_norm = get_required(j, "kl_norm").get<double>();
  p.created_at_unix_s = get_required(j, "created_at_unix_s").get<std::int64_t>();
  p.config_hash = get_required(j, "config_hash").get<std::string>();
  const json values = get_required(j, "values");
  p.values_speedup = get_required(values, "speed_up").get<std::vector<double>>();
  p.values_slowdown =
      get_required(values, "slow_down").get<std::vector<double>>();
  const json prov = get_required(j, "provenance");
  file.provenance.tool_version =
      get_required(prov, "tool_version").get<std::string>();
  if (prov.contains("seed")) {
    file.provenance.seed = prov.at("seed").get<std::uint64_t>();
  }
  return file;
}

void save_profile(const std::string& path, const ProfileFile& file) {
  write_file(path, profile_to_json(file).dump(2) + "\n");
}

ProfileFile load_profile(const std::string& path) {
  json j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) format_error("profile is not valid JSON: " + path);
  return profile_from_json(j);
}

// --------------------------------------------------------------------------

std::string gan_sidecar_path(const std::string& profile_path,
                             augment::LossMode mode) {
  return profile_path + ".gan-" +
         (mode == augment::LossMode::CrossEntropy ? "ce" : "stat") + ".json";
}

json mlp_to_json(const augment::MlpNet& net) {
  return json{{"sizes", net.sizes},
              {"weights", net.weights},
              {"biases", net.biases},
              {"logistic_output", net.logistic_output},
              {"leak", net.leak}};
}

augment::MlpNet mlp_from_json(const json& j) {
  augment::MlpNet net = augment::MlpNet::make(
      get_required(j, "sizes").get<std::vector<int>>(),
      get_required(j, "logistic_output").get<bool>());
  net.leak = get_required(j, "leak").get<double>();
  auto weights =
      get_required(j, "weights").get<std::vector<std::vector<double>>>();
  auto biases =
      get_required(j, "biases").get<std::vector<std::vector<double>>>();
  if (weights.size() != net.weights.size() || biases.size() != net.biases.size()) {
    format_error("mlp layer count mismatch");
  }
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].size() != net.weights[l].size() ||
        biases[l].size() != net.biases[l].size()) {
      format_error("mlp layer size mismatch");
    }
  }
  net.weights = std::move(weights);
  net.biases = std::move(biases);
  return net;
}

void save_gan(const std::string& path, const augment::TrainedGan& gan,
              const augment::GanConfig& config) {
  json j{{"format", "neuroline-gan"},
         {"version", kFormatVersion},
         {"loss_mode", augment::loss_mode_name(config.loss_mode)},
         {"epochs", config.epochs},
         {"batch_size", config.batch_size},
         {"learning_rate", config.learning_rate},
         {"seed", config.seed},
         {"lambda_stat", config.lambda_stat},
         {"generator", mlp_to_json(gan.generator)},
         {"discriminator", mlp_to_json(gan.discriminator)}};
  write_file(path, j.dump(2) + "\n");
}

// --------------------------------------------------------------------------

void write_trials(std::ostream& out, const calibration::TrialSet& set) {
  json header = make_header("neuroline-trials");
  header["trial_duration_ms"] = set.trial_duration_ms;
  out << header.dump() << '\n';
  for (const auto& trial : set.trials) {
    json frames = json::array();
    for (const auto& f : trial.frames) frames.push_back(frame_to_json(f));
    out << json{{"label", calibration::label_name(trial.label)},
                {"onset_ms", trial.onset_ms},
                {"frames", frames}}
               .dump()
        << '\n';
  }
}

calibration::TrialSet read_trials(std::istream& in, bool strict) {
  std::string line;
  if (!std::getline(in, line)) format_error("empty trials stream (no header)");
  const json header = json::parse(line, nullptr, false);
  check_header(header, "neuroline-trials");

  calibration::TrialSet set;
  if (header.contains("trial_duration_ms")) {
    set.trial_duration_ms = header.at("trial_duration_ms").get<int>();
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      format_error("line " + std::to_string(line_no) + ": bad JSON");
    }
    calibration::Trial trial;
    const std::string label = get_required(j, "label").get<std::string>();
    if (label == "speed_up") {
      trial.label = calibration::Label::SpeedUp;
    } else if (label == "slow_down") {
      trial.label = calibration::Label::SlowDown;
    } else {
      format_error("line " + std::to_string(line_no) + ": unknown label \"" +
                   label + "\"");
    }
    trial.onset_ms = get_required(j, "onset_ms").get<std::int64_t>();
    for (const auto& fj : get_required(j, "frames")) {
      trial.frames.push_back(frame_from_json(fj, strict));
    }
    set.trials.push_back(std::move(trial));
  }
  return set;
}

// --------------------------------------------------------------------------

json user_to_json(const sim::SyntheticUser& user) {
  json schedule = json::array();
  for (const auto& entry : user.schedule) {
    schedule.push_back(json{{"t_ms", entry.t_start_ms},
                            {"state", sim::sched_state_name(entry.state)}});
  }
  return json{{"format", "neuroline-user"},
              {"version", kFormatVersion},
              {"feature", feature_to_json(user.feature)},
              {"like_speedup", dist_to_json(user.like_speedup)},
              {"like_slowdown", dist_to_json(user.like_slowdown)},
              {"idle", {{"mean", user.idle_mean}, {"sd", user.idle_sd}}},
              {"schedule", schedule},
              {"seed", user.seed}};
}

sim::SyntheticUser user_from_json(const json& j) {
  check_header(j, "neuroline-user");
  sim::SyntheticUser user;
  user.feature = feature_from_json(get_required(j, "feature"));
  user.like_speedup = dist_from_json(get_required(j, "like_speedup"));
  user.like_slowdown = dist_from_json(get_required(j, "like_slowdown"));
  const json idle = get_required(j, "idle");
  user.idle_mean = get_required(idle, "mean").get<double>();
  user.idle_sd = get_required(idle, "sd").get<double>();
  for (const auto& entry : get_required(j, "schedule")) {
    sim::ScheduleEntry e;
    e.t_start_ms = get_required(entry, "t_ms").get<std::int64_t>();
    const std::string state = get_required(entry, "state").get<std::string>();
    if (state == "idle") {
      e.state = sim::SchedState::Idle;
    } else if (state == "speed_up") {
      e.state = sim::SchedState::SpeedUp;
    } else if (state == "slow_down") {
      e.state = sim::SchedState::SlowDown;
    } else {
      format_error("unknown schedule state \"" + state + "\"");
    }
    user.schedule.push_back(e);
  }
  user.seed = get_required(j, "seed").get<std::uint64_t>();
  user.validate();
  return user;
}

sim::SyntheticUser load_user(const std::string& path) {
  json j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) format_error("user spec is not valid JSON: " + path);
  return user_from_json(j);
}

// --------------------------------------------------------------------------

json shape_stats_to_json(const stats::ShapeStats& s) {
  return json{{"median", s.median},
              {"iqr", s.iqr},
              {"mad", s.mad},
              {"skewness", s.skewness},
              {"kurtosis_excess", s.kurtosis_excess}};
}

json histogram_json(std::span<const double> values, int bins) {
  if (bins <= 0 || values.empty()) {
    return json{{"edges", json::array()}, {"counts", json::array()}};
  }
  const auto [mn_it, mx_it] = std::minmax_element(values.begin(), values.end());
  double lo = *mn_it;
  double hi = *mx_it;
  if (lo == hi) hi = lo + 1.0;
  std::vector<double> edges(static_cast<std::size_t>(bins) + 1);
  for (int i = 0; i <= bins; ++i) {
    edges[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / bins;
  }
  std::vector<int> counts(static_cast<std::size_t>(bins), 0);
  for (double v : values) {
    auto idx = static_cast<std::size_t>((v - lo) / (hi - lo) * bins);
    if (idx >= counts.size()) idx = counts.size() - 1;
    ++counts[idx];
  }
  return json{{"edges", edges}, {"counts", counts}};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  out << content;
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path);
}

}  // namespace neuroline::io
