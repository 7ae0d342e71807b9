#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "fixtures.hpp"
#include "neuroline/io.hpp"
#include "neuroline/rng.hpp"

using namespace neuroline;
using io::json;

namespace {

signal::PowerFrame random_frame(Rng& rng, std::int64_t t) {
  signal::PowerFrame f;
  f.timestamp_ms = t;
  for (auto& v : f.values) {
    // Exercise very small and large magnitudes; round-trips must be exact.
    v = std::exp(rng.normal(0.0, 6.0));
  }
  return f;
}

stats::DistFamily random_family(Rng& rng) {
  switch (rng.below(5)) {
    case 0:
      return stats::DistFamily(stats::Family::Gaussian,
                               {rng.normal(10, 4), 0.1 + rng.uniform() * 3});
    case 1:
      return stats::DistFamily(stats::Family::Exponential,
                               {0.1 + rng.uniform() * 3});
    case 2:
      return stats::DistFamily(stats::Family::Gamma,
                               {0.5 + rng.uniform() * 4, 0.2 + rng.uniform()});
    case 3:
      return stats::DistFamily(
          stats::Family::StudentT,
          {rng.normal(0, 3), 0.3 + rng.uniform(), 1.0 + rng.uniform() * 20});
    default:
      return stats::DistFamily(stats::Family::Weibull,
                               {0.5 + rng.uniform() * 3, 0.5 + rng.uniform() * 4});
  }
}

io::ProfileFile random_profile(Rng& rng) {
  io::ProfileFile file;
  auto& p = file.profile;
  p.selected = signal::FeatureKey::from_index(static_cast<int>(rng.below(70)));
  p.region_start_ms = static_cast<int>(rng.below(1000));
  p.region_end_ms = p.region_start_ms + 1000 + static_cast<int>(rng.below(4000));
  p.like_speedup = random_family(rng);
  p.like_slowdown = random_family(rng);
  p.idle = {rng.normal(10, 2), 0.1 + rng.uniform(), 8 + static_cast<int>(rng.below(200))};
  p.kl_norm = rng.uniform();
  p.window_ms = 1000;
  p.hop_ms = 500;
  p.created_at_unix_s = static_cast<std::int64_t>(rng.below(1u << 30));
  p.config_hash = "deadbeef01234567";
  p.values_speedup.resize(8 + rng.below(50));
  p.values_slowdown.resize(8 + rng.below(50));
  for (auto& v : p.values_speedup) v = rng.normal(12, 2);
  for (auto& v : p.values_slowdown) v = rng.normal(8, 2);
  file.provenance.tool_version = "test";
  if (rng.below(2) == 0) file.provenance.seed = rng.below(1u << 20);
  return file;
}

}  // namespace

TEST_CASE("frame records round-trip exactly") {
  Rng rng(1);
  for (int rep = 0; rep < 200; ++rep) {
    const auto frame = random_frame(rng, rep * 125);
    const auto back = io::frame_from_line(io::frame_to_line(frame), true);
    CHECK(back == frame);
  }
}

TEST_CASE("frame records: strict-mode violations") {
  CHECK_THROWS_AS((void)io::frame_from_line("{not json", true), Error);
  CHECK_THROWS_AS((void)io::frame_from_line(R"({"t": 0})", true), Error);
  CHECK_THROWS_AS(
      (void)io::frame_from_line(R"({"t": 0, "pow": [1, 2, 3]})", true), Error);

  json ok = io::frame_to_json(signal::PowerFrame{});
  json extra = ok;
  extra["mystery"] = 1;
  CHECK_THROWS_AS((void)io::frame_from_json(extra, true), Error);
  CHECK_NOTHROW((void)io::frame_from_json(extra, false));  // lenient ignores

  json negative = ok;
  negative["pow"][3] = -1.0;
  CHECK_THROWS_AS((void)io::frame_from_json(negative, true), Error);
  json fractional_t = ok;
  fractional_t["t"] = 1.5;
  CHECK_THROWS_AS((void)io::frame_from_json(fractional_t, true), Error);
}

TEST_CASE("frame stream: header checked, lenient counts skips") {
  Rng rng(2);
  std::ostringstream out;
  std::vector<signal::PowerFrame> frames;
  for (int i = 0; i < 5; ++i) frames.push_back(random_frame(rng, i * 125));
  io::write_frames(out, frames);

  std::istringstream in(out.str());
  const auto back = io::read_frames(in, true);
  REQUIRE(back.size() == frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) CHECK(back[i] == frames[i]);

  // Corrupt one line: strict fails with the line number, lenient skips.
  std::string text = out.str();
  const auto pos = text.find('\n', text.find('\n', text.find('\n') + 1) + 1);
  std::string corrupted = text.substr(0, pos + 1) + "garbage\n" +
                          text.substr(pos + 1);
  std::istringstream bad(corrupted);
  CHECK_THROWS_WITH_AS((void)io::read_frames(bad, true),
                       doctest::Contains("line 4"), Error);
  std::istringstream bad2(corrupted);
  std::size_t skipped = 0;
  const auto partial = io::read_frames(bad2, false, &skipped);
  CHECK(skipped == 1);
  CHECK(partial.size() == frames.size());
}

TEST_CASE("frame stream: version mismatch is a migration error") {
  std::istringstream in(
      R"({"format":"neuroline-frames","version":2})"
      "\n");
  CHECK_THROWS_WITH_AS((void)io::read_frames(in, true),
                       doctest::Contains("migration"), Error);
  std::istringstream wrong(
      R"({"format":"neuroline-twist","version":1})"
      "\n");
  CHECK_THROWS_AS((void)io::read_frames(wrong, true), Error);
}

TEST_CASE("profiles round-trip exactly through json text") {
  Rng rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    const auto file = random_profile(rng);
    const std::string text = io::profile_to_json(file).dump(2);
    const auto back = io::profile_from_json(json::parse(text));
    CHECK(back == file);
  }
}

TEST_CASE("profile files: save/load identity on disk") {
  Rng rng(4);
  const auto file = random_profile(rng);
  const std::string path = "/tmp/neuroline_test_profile.json";
  io::save_profile(path, file);
  const auto back = io::load_profile(path);
  CHECK(back == file);
  // Double-save produces identical bytes.
  const std::string first = io::read_file(path);
  io::save_profile(path, back);
  CHECK(io::read_file(path) == first);
}

TEST_CASE("decisions round-trip") {
  decoder::Decision d;
  d.state = decoder::Intent::SlowDown;
  d.log_odds = -3.25;
  d.confidence = 3.25;
  d.delta_v = -0.1625;
  d.window_start_ms = 500;
  d.window_end_ms = 1500;
  d.measurement = 7.75;
  d.gate_z = -2.5;
  d.saturated = true;
  const auto back = io::decision_from_json(io::decision_to_json(d));
  CHECK(back.state == d.state);
  CHECK(back.log_odds == d.log_odds);
  CHECK(back.delta_v == d.delta_v);
  CHECK(back.saturated == d.saturated);
  CHECK_FALSE(back.undecidable);

  decoder::Decision idle;
  const auto idle_back = io::decision_from_json(io::decision_to_json(idle));
  CHECK_FALSE(idle_back.log_odds.has_value());
}

TEST_CASE("twist records carry only linear.x") {
  const json t = io::twist_to_json(1500, 0.875);
  CHECK(t["linear"]["x"] == 0.875);
  CHECK(t["linear"]["y"] == 0.0);
  CHECK(t["linear"]["z"] == 0.0);
  CHECK(t["angular"]["x"] == 0.0);
  CHECK(t["angular"]["y"] == 0.0);
  CHECK(t["angular"]["z"] == 0.0);
  CHECK(t["t"] == 1500);
}

TEST_CASE("trial sets round-trip through the trials format") {
  fixtures::SynthSpec spec;
  spec.n_trials_per_label = 5;
  spec.trial_duration_ms = 2000;
  const auto set = fixtures::make_trial_set(spec);
  std::ostringstream out;
  io::write_trials(out, set);
  std::istringstream in(out.str());
  const auto back = io::read_trials(in, true);
  CHECK(back.trial_duration_ms == set.trial_duration_ms);
  REQUIRE(back.trials.size() == set.trials.size());
  for (std::size_t i = 0; i < set.trials.size(); ++i) {
    CHECK(back.trials[i].label == set.trials[i].label);
    CHECK(back.trials[i].onset_ms == set.trials[i].onset_ms);
    CHECK(back.trials[i].frames == set.trials[i].frames);
  }
}

TEST_CASE("synthetic user specs round-trip") {
  sim::SyntheticUser user;
  user.feature = signal::FeatureKey{10, signal::Band::Alpha};
  user.like_speedup = stats::DistFamily(stats::Family::Gaussian, {12.0, 2.0});
  user.like_slowdown = stats::DistFamily(stats::Family::Gaussian, {8.0, 2.0});
  user.idle_mean = 10.0;
  user.idle_sd = 1.0;
  user.schedule = {{0, sim::SchedState::Idle},
                   {4000, sim::SchedState::SpeedUp},
                   {9000, sim::SchedState::SlowDown}};
  user.seed = 1234;
  const auto back = io::user_from_json(io::user_to_json(user));
  CHECK(back.feature == user.feature);
  CHECK(back.like_speedup == user.like_speedup);
  CHECK(back.like_slowdown == user.like_slowdown);
  CHECK(back.idle_mean == user.idle_mean);
  CHECK(back.seed == user.seed);
  REQUIRE(back.schedule.size() == 3);
  CHECK(back.schedule[1].state == sim::SchedState::SpeedUp);
}

TEST_CASE("gan nets round-trip through the sidecar format") {
  Rng rng(5);
  augment::TrainedGan gan;
  gan.generator = augment::default_generator();
  gan.discriminator = augment::default_discriminator();
  gan.generator.init_params(rng);
  gan.discriminator.init_params(rng);
  const auto gj = io::mlp_to_json(gan.generator);
  const auto back = io::mlp_from_json(gj);
  CHECK(back == gan.generator);

  const std::string path = io::gan_sidecar_path("/tmp/neuroline_prof.json",
                                                augment::LossMode::StatMatched);
  CHECK(path == "/tmp/neuroline_prof.json.gan-stat.json");
  io::save_gan(path, gan, augment::GanConfig{});
  const auto doc = json::parse(io::read_file(path));
  CHECK(io::mlp_from_json(doc.at("generator")) == gan.generator);
  CHECK(io::mlp_from_json(doc.at("discriminator")) == gan.discriminator);
}
