#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "neuroline/decoder.hpp"
#include "neuroline/io.hpp"
#include "neuroline/sim.hpp"

using namespace neuroline;
using io::json;
namespace fs = std::filesystem;

namespace {

std::string cli_path() {
  const char* bin = std::getenv("NEUROLINE_BIN");
  REQUIRE_MESSAGE(bin != nullptr,
                  "NEUROLINE_BIN must point at the neuroline binary");
  return bin;
}

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

RunResult run(const std::string& args) {
  const std::string cmd = cli_path() + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult result;
  std::array<char, 4096> buf;
  while (fgets(buf.data(), buf.size(), pipe)) result.output += buf.data();
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("neuroline_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  static int& counter() {
    static int n = 0;
    return n;
  }
  std::string operator/(const std::string& name) const {
    return (path / name).string();
  }
};

void write_fixture_inputs(const TempDir& dir, const fixtures::SynthSpec& spec) {
  const auto set = fixtures::make_trial_set(spec);
  std::ofstream trials(dir / "trials.jsonl");
  io::write_trials(trials, set);
  std::ofstream relax(dir / "relax.jsonl");
  io::write_frames(relax, set.relaxation);
}

std::string default_user_spec(const TempDir& dir) {
  sim::SyntheticUser user;
  user.feature = signal::FeatureKey{10, signal::Band::Alpha};
  user.like_speedup = stats::DistFamily(stats::Family::Gaussian, {12.0, 2.0});
  user.like_slowdown = stats::DistFamily(stats::Family::Gaussian, {8.0, 2.0});
  user.idle_mean = 10.0;
  user.idle_sd = 1.0;
  user.schedule = {{0, sim::SchedState::SpeedUp},
                   {20000, sim::SchedState::SlowDown}};
  user.seed = 7;
  const std::string path = dir / "user.json";
  io::write_file(path, io::user_to_json(user).dump(2) + "\n");
  return path;
}

}  // namespace

TEST_CASE("calibrate: valid fixture exits 0 and writes a loadable profile") {
  TempDir dir;
  write_fixture_inputs(dir, fixtures::SynthSpec{});
  const auto r = run("calibrate --trials " + (dir / "trials.jsonl") +
                     " --relax " + (dir / "relax.jsonl") + " --out " +
                     (dir / "profile.json") + " --report " +
                     (dir / "report.json"));
  CAPTURE(r.output);
  CHECK(r.exit_code == 0);
  const auto file = io::load_profile(dir / "profile.json");
  CHECK(file.profile.selected.label() == "FC6.alpha");
  CHECK(file.profile.kl_norm > 0.2);
  const auto report = json::parse(io::read_file(dir / "report.json"));
  CHECK(report.at("selected") == "FC6.alpha");
  CHECK(report.at("features").size() >= 1);
}

TEST_CASE("calibrate: missing input exits 1 and names the path") {
  TempDir dir;
  const auto r = run("calibrate --trials " + (dir / "nope.jsonl") + " --relax " +
                     (dir / "nope2.jsonl") + " --out " + (dir / "p.json"));
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("nope.jsonl") != std::string::npos);
}

TEST_CASE("calibrate: indistinguishable states exit 2 with kl_norm") {
  TempDir dir;
  fixtures::SynthSpec spec;
  auto set = fixtures::make_trial_set(spec);
  for (auto& trial : set.trials) {
    for (auto& frame : trial.frames) {
      for (int f = 0; f < signal::kFeatureCount; ++f) {
        frame.values[static_cast<std::size_t>(f)] =
            10.0 + 0.1 * std::sin(0.002 * static_cast<double>(frame.timestamp_ms));
      }
    }
  }
  std::ofstream trials(dir / "trials.jsonl");
  io::write_trials(trials, set);
  std::ofstream relax(dir / "relax.jsonl");
  io::write_frames(relax, set.relaxation);
  const auto r = run("calibrate --trials " + (dir / "trials.jsonl") +
                     " --relax " + (dir / "relax.jsonl") + " --out " +
                     (dir / "profile.json"));
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("screening failed, kl_norm=0.00") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "profile.json"));
}

TEST_CASE("screen: pass/fail/corrupt exit codes") {
  TempDir dir;
  write_fixture_inputs(dir, fixtures::SynthSpec{});
  REQUIRE(run("calibrate --trials " + (dir / "trials.jsonl") + " --relax " +
              (dir / "relax.jsonl") + " --out " + (dir / "profile.json"))
              .exit_code == 0);

  auto r = run("screen --profile " + (dir / "profile.json"));
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("pass") != std::string::npos);

  // Identical likelihoods: kl_norm = 0 -> domain rejection.
  auto file = io::load_profile(dir / "profile.json");
  file.profile.like_slowdown = file.profile.like_speedup;
  io::save_profile(dir / "same.json", file);
  r = run("screen --profile " + (dir / "same.json"));
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("kl_norm=0") != std::string::npos);

  io::write_file(dir / "corrupt.json", "{ not json\n");
  r = run("screen --profile " + (dir / "corrupt.json"));
  CHECK(r.exit_code == 1);

  // Future format version: explicit migration error.
  auto doc = io::profile_to_json(file);
  doc["version"] = 2;
  io::write_file(dir / "future.json", doc.dump(2) + "\n");
  r = run("screen --profile " + (dir / "future.json"));
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("migration") != std::string::npos);
}

TEST_CASE("decode: idle fixture gives one idle decision and zero twist") {
  TempDir dir;
  write_fixture_inputs(dir, fixtures::SynthSpec{});
  REQUIRE(run("calibrate --trials " + (dir / "trials.jsonl") + " --relax " +
              (dir / "relax.jsonl") + " --out " + (dir / "profile.json"))
              .exit_code == 0);
  const auto profile = io::load_profile(dir / "profile.json").profile;

  // 8 frames at the idle mean: exactly one full window, gated idle.
  std::vector<signal::PowerFrame> frames;
  for (int i = 0; i < 8; ++i) {
    signal::PowerFrame f;
    f.timestamp_ms = 125 * i;
    f.values.fill(profile.idle.mean);
    frames.push_back(f);
  }
  std::ofstream stream(dir / "frames.jsonl");
  io::write_frames(stream, frames);
  stream.close();

  const auto r = run("decode --profile " + (dir / "profile.json") + " --in " +
                     (dir / "frames.jsonl") + " --twist-out " +
                     (dir / "twist.jsonl") + " --decisions-out " +
                     (dir / "decisions.jsonl"));
  CAPTURE(r.output);
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("1 decisions") != std::string::npos);

  std::ifstream dec_in(dir / "decisions.jsonl");
  std::string header, line;
  REQUIRE(std::getline(dec_in, header));
  REQUIRE(std::getline(dec_in, line));
  const auto decision = io::decision_from_json(json::parse(line));
  CHECK(decision.state == decoder::Intent::Idle);

  std::ifstream twist_in(dir / "twist.jsonl");
  REQUIRE(std::getline(twist_in, header));
  REQUIRE(std::getline(twist_in, line));
  CHECK(json::parse(line).at("linear").at("x") == 0.0);
}

TEST_CASE("decode: empty input exits 0 with zero decisions") {
  TempDir dir;
  write_fixture_inputs(dir, fixtures::SynthSpec{});
  REQUIRE(run("calibrate --trials " + (dir / "trials.jsonl") + " --relax " +
              (dir / "relax.jsonl") + " --out " + (dir / "profile.json"))
              .exit_code == 0);
  io::write_file(dir / "empty.jsonl",
                 io::make_header("neuroline-frames").dump() + "\n");
  const auto r = run("decode --profile " + (dir / "profile.json") + " --in " +
                     (dir / "empty.jsonl") + " --twist-out " + (dir / "t.jsonl") +
                     " --decisions-out " + (dir / "d.jsonl"));
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("0 decisions") != std::string::npos);
}

TEST_CASE("decode: corrupt line 3 fails strict, skips lenient") {
  TempDir dir;
  write_fixture_inputs(dir, fixtures::SynthSpec{});
  REQUIRE(run("calibrate --trials " + (dir / "trials.jsonl") + " --relax " +
              (dir / "relax.jsonl") + " --out " + (dir / "profile.json"))
              .exit_code == 0);
  std::ostringstream text;
  text << io::make_header("neuroline-frames").dump() << "\n";
  signal::PowerFrame f;
  f.values.fill(10.0);
  f.timestamp_ms = 0;
  text << io::frame_to_line(f) << "\n";
  text << "{broken\n";
  f.timestamp_ms = 125;
  text << io::frame_to_line(f) << "\n";
  io::write_file(dir / "frames.jsonl", text.str());

  auto r = run("decode --profile " + (dir / "profile.json") + " --in " +
               (dir / "frames.jsonl") + " --twist-out " + (dir / "t.jsonl") +
               " --decisions-out " + (dir / "d.jsonl"));
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("line 3") != std::string::npos);

  r = run("decode --lenient --profile " + (dir / "profile.json") + " --in " +
          (dir / "frames.jsonl") + " --twist-out " + (dir / "t.jsonl") +
          " --decisions-out " + (dir / "d.jsonl"));
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("1 lines skipped") != std::string::npos);
}

TEST_CASE("decode: streaming decisions equal the library's batch decisions") {
  TempDir dir;
  write_fixture_inputs(dir, fixtures::SynthSpec{});
  REQUIRE(run("calibrate --trials " + (dir / "trials.jsonl") + " --relax " +
              (dir / "relax.jsonl") + " --out " + (dir / "profile.json"))
              .exit_code == 0);
  const auto profile = io::load_profile(dir / "profile.json").profile;

  sim::SyntheticUser user;
  user.feature = profile.selected;
  user.like_speedup = profile.like_speedup;
  user.like_slowdown = profile.like_slowdown;
  user.idle_mean = profile.idle.mean;
  user.idle_sd = profile.idle.sd;
  user.schedule = {{0, sim::SchedState::SpeedUp},
                   {10000, sim::SchedState::Idle},
                   {15000, sim::SchedState::SlowDown}};
  user.seed = 11;
  const auto frames = sim::emit_frames(user, 30000);
  std::ofstream stream(dir / "frames.jsonl");
  io::write_frames(stream, frames);
  stream.close();

  const auto r = run("decode --profile " + (dir / "profile.json") + " --in " +
                     (dir / "frames.jsonl") + " --twist-out " +
                     (dir / "twist.jsonl") + " --decisions-out " +
                     (dir / "decisions.jsonl"));
  REQUIRE(r.exit_code == 0);

  const auto batch = decoder::decode_stream(frames, profile, {},
                                            profile.window_ms, profile.hop_ms);
  std::ifstream dec_in(dir / "decisions.jsonl");
  std::string line;
  REQUIRE(std::getline(dec_in, line));  // header
  std::size_t i = 0;
  while (std::getline(dec_in, line)) {
    REQUIRE(i < batch.size());
    const auto d = io::decision_from_json(json::parse(line));
    CHECK(d.state == batch[i].state);
    CHECK(d.window_start_ms == batch[i].window_start_ms);
    CHECK(d.delta_v == batch[i].delta_v);
    CHECK(d.measurement == batch[i].measurement);
    ++i;
  }
  CHECK(i == batch.size());
}

TEST_CASE("simulate: fixed seed reproduces byte-identical outputs") {
  TempDir dir;
  const auto user_path = default_user_spec(dir);
  fs::create_directories(dir.path / "a");
  fs::create_directories(dir.path / "b");
  const std::string common = "simulate --user " + user_path +
                             " --duration-ms 30000 --z-threshold 0";
  auto ra = run(common + " --out-dir " + (dir / "a"));
  CAPTURE(ra.output);
  REQUIRE(ra.exit_code == 0);
  auto rb = run(common + " --out-dir " + (dir / "b"));
  REQUIRE(rb.exit_code == 0);
  for (const char* name :
       {"trajectory.jsonl", "decisions.jsonl", "twist.jsonl", "metrics.json"}) {
    CHECK(io::read_file(dir / (std::string("a/") + name)) ==
          io::read_file(dir / (std::string("b/") + name)));
  }
  // Self-calibration also produced a loadable profile.
  CHECK_NOTHROW((void)io::load_profile(dir / "a/profile.json"));
  // A different seed changes the trajectory.
  fs::create_directories(dir.path / "c");
  auto rc = run(common + " --out-dir " + (dir / "c") + " --seed 99");
  REQUIRE(rc.exit_code == 0);
  CHECK(io::read_file(dir / "a/trajectory.jsonl") !=
        io::read_file(dir / "c/trajectory.jsonl"));
}

TEST_CASE("simulate: invalid schedule exits 1") {
  TempDir dir;
  json doc = json::parse(io::read_file(default_user_spec(dir)));
  doc["schedule"] = json::array({json{{"t_ms", 1000}, {"state", "speed_up"}},
                                 json{{"t_ms", 500}, {"state", "idle"}}});
  io::write_file(dir / "bad_user.json", doc.dump(2) + "\n");
  const auto r = run("simulate --user " + (dir / "bad_user.json") +
                     " --out-dir " + (dir / "out"));
  CHECK(r.exit_code == 1);
}

TEST_CASE("augment: epochs=0 runs both modes and writes paired reports") {
  TempDir dir;
  write_fixture_inputs(dir, fixtures::SynthSpec{});
  REQUIRE(run("calibrate --trials " + (dir / "trials.jsonl") + " --relax " +
              (dir / "relax.jsonl") + " --out " + (dir / "profile.json"))
              .exit_code == 0);
  const auto r = run("augment --profile " + (dir / "profile.json") +
                     " --out-dir " + dir.path.string() +
                     " --loss both --epochs 0 --seed 5 --n-out 64");
  CAPTURE(r.output);
  CHECK(r.exit_code == 0);
  const auto ce = json::parse(io::read_file(dir / "report_ce.json"));
  const auto st = json::parse(io::read_file(dir / "report_stat.json"));
  CHECK(ce.at("epochs") == 0);
  CHECK(st.at("epochs") == 0);
  CHECK(ce.at("real_stats") == st.at("real_stats"));
  CHECK(fs::exists(dir / "samples_ce.txt"));
  CHECK(fs::exists(dir / "hist_stat.json"));
  CHECK(fs::exists(dir / "profile.json.gan-ce.json"));
  CHECK(fs::exists(dir / "profile.json.gan-stat.json"));
}

TEST_CASE("config file: NEUROLINE_CONFIG supplies defaults, flags win") {
  TempDir dir;
  io::write_file(dir / "config.txt", "window-ms=2000\nhop-ms=1000\n");
  write_fixture_inputs(dir, fixtures::SynthSpec{});
  const std::string base = "calibrate --trials " + (dir / "trials.jsonl") +
                           " --relax " + (dir / "relax.jsonl") + " --out " +
                           (dir / "profile.json");
  // With config: window 2000 is applied (profile records it).
  const std::string env = "NEUROLINE_CONFIG=" + (dir / "config.txt") + " ";
  const std::string cmd = env + cli_path() + " " + base + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf;
  std::string output;
  while (fgets(buf.data(), buf.size(), pipe)) output += buf.data();
  REQUIRE(pclose(pipe) == 0);
  CHECK(io::load_profile(dir / "profile.json").profile.window_ms == 2000);

  // Explicit flag overrides the config value.
  const std::string cmd2 = env + cli_path() + " " + base +
                           " --window-ms 1000 --hop-ms 500 2>&1";
  FILE* pipe2 = popen(cmd2.c_str(), "r");
  REQUIRE(pipe2 != nullptr);
  while (fgets(buf.data(), buf.size(), pipe2)) output += buf.data();
  REQUIRE(pclose(pipe2) == 0);
  CHECK(io::load_profile(dir / "profile.json").profile.window_ms == 1000);
}

TEST_CASE("usage errors exit 1") {
  CHECK(run("decode").exit_code == 1);
  CHECK(run("unknown-subcommand").exit_code == 1);
}
