#pragma once

#include <cstdint>
#include <vector>

#include "neuroline/calibration.hpp"
#include "neuroline/decoder.hpp"
#include "neuroline/distributions.hpp"
#include "neuroline/signal.hpp"

namespace neuroline::sim {

enum class SchedState { Idle, SpeedUp, SlowDown };

const char* sched_state_name(SchedState s);

struct ScheduleEntry {
  std::int64_t t_start_ms = 0;
  SchedState state = SchedState::Idle;
};

/// The generative process: hidden world states emitting band-power
/// observations. The selected feature draws from the scheduled state's
/// distribution; the remaining 69 features draw from the idle distribution.
struct SyntheticUser {
  signal::FeatureKey feature;
  stats::DistFamily like_speedup;
  stats::DistFamily like_slowdown;
  double idle_mean = 10.0;
  double idle_sd = 1.0;
  std::vector<ScheduleEntry> schedule;
  std::uint64_t seed = 0;

  void validate() const;
};

SchedState scheduled_state(const SyntheticUser& user, std::int64_t t_ms);

struct WheelchairState {
  double position_m = 0.0;
  double velocity_mps = 0.0;
  std::int64_t t_ms = 0;
};

struct SimConfig {
  double v_max_mps = 4.17;     // 15 km/h
  double damping_gamma = 0.5;  // per second
  int dt_ms = 125;             // one frame period
  std::int64_t duration_ms = 0;

  void validate() const;
};

/// Seeded 8 Hz stream; deterministic in (user, duration).
std::vector<signal::PowerFrame> emit_frames(const SyntheticUser& user,
                                            std::int64_t duration_ms);

/// Damped explicit-Euler step:
///   v' = clamp((1 - gamma*dt) * v + delta_v, 0, v_max)
/// position advances by v'*dt. Clamping is the contract, not an error.
WheelchairState step(const WheelchairState& state, double delta_v,
                     const SimConfig& cfg);

struct LoopMetrics {
  int active_windows = 0;  // windows whose scheduled state is not Idle
  int correct = 0;
  double accuracy = 0.0;
  double mean_confidence = 0.0;
  double max_velocity_mps = 0.0;
  double final_velocity_mps = 0.0;
  double final_position_m = 0.0;
};

struct ClosedLoopResult {
  std::vector<WheelchairState> trajectory;  // one state per dt step
  std::vector<decoder::Decision> decisions;
  LoopMetrics metrics;
};

/// emit_frames -> decode_stream -> step; each decision's velocity increment
/// applies once, at its window end. Accuracy compares decoded state with the
/// scheduled state at the window start, over non-Idle-scheduled windows.
ClosedLoopResult run_closed_loop(const SyntheticUser& user,
                                 const calibration::UserProfile& profile,
                                 const decoder::DecoderConfig& decoder_config,
                                 const SimConfig& sim_config, int window_ms,
                                 int hop_ms);

}  // namespace neuroline::sim
