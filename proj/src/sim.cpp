#include "neuroline/sim.hpp"

#include <algorithm>
#include <cmath>

#include "neuroline/rng.hpp"

namespace neuroline::sim {

const char* sched_state_name(SchedState s) {
  switch (s) {
    case SchedState::Idle: return "idle";
    case SchedState::SpeedUp: return "speed_up";
    case SchedState::SlowDown: return "slow_down";
  }
  return "unknown";
}

void SyntheticUser::validate() const {
  like_speedup.validate();
  like_slowdown.validate();
  if (!(idle_sd > 0.0)) {
    throw Error(ErrorKind::Config, "SyntheticUser: idle_sd must be > 0");
  }
  for (std::size_t i = 1; i < schedule.size(); ++i) {
    if (schedule[i].t_start_ms <= schedule[i - 1].t_start_ms) {
      throw Error(ErrorKind::Config,
                  "SyntheticUser: schedule times must be increasing");
    }
  }
}

void SimConfig::validate() const {
  if (!(v_max_mps > 0.0)) throw Error(ErrorKind::Config, "SimConfig: v_max <= 0");
  if (!(damping_gamma > 0.0)) {
    throw Error(ErrorKind::Config, "SimConfig: damping_gamma <= 0");
  }
  if (dt_ms <= 0 || signal::kFramePeriodMs % dt_ms != 0) {
    throw Error(ErrorKind::Config,
                "SimConfig: dt_ms must divide the frame period");
  }
}

SchedState scheduled_state(const SyntheticUser& user, std::int64_t t_ms) {
  SchedState state = SchedState::Idle;
  for (const auto& entry : user.schedule) {
    if (entry.t_start_ms > t_ms) break;
    state = entry.state;
  }
  return state;
}

std::vector<signal::PowerFrame> emit_frames(const SyntheticUser& user,
                                            std::int64_t duration_ms) {
  user.validate();
  Rng rng(user.seed);

  // Quantile inversion keeps sampling deterministic for every family with one
  // uniform draw per value.
  const stats::DistFamily idle(stats::Family::Gaussian,
                               {user.idle_mean, user.idle_sd});
  auto draw = [&](const stats::DistFamily& dist) {
    return dist.quantile(rng.uniform_open());
  };

  std::vector<signal::PowerFrame> frames;
  const int selected = user.feature.index();
  for (std::int64_t t = 0; t < duration_ms; t += signal::kFramePeriodMs) {
    signal::PowerFrame frame;
    frame.timestamp_ms = t;
    const SchedState state = scheduled_state(user, t);
    for (int f = 0; f < signal::kFeatureCount; ++f) {
      const auto idx = static_cast<std::size_t>(f);
      if (f == selected && state == SchedState::SpeedUp) {
        frame.values[idx] = draw(user.like_speedup);
      } else if (f == selected && state == SchedState::SlowDown) {
        frame.values[idx] = draw(user.like_slowdown);
      } else {
        frame.values[idx] = draw(idle);
      }
    }
    frames.push_back(frame);
  }
  return frames;
}

WheelchairState step(const WheelchairState& state, double delta_v,
                     const SimConfig& cfg) {
  cfg.validate();
  const double dt_s = static_cast<double>(cfg.dt_ms) / 1000.0;
  WheelchairState next;
  const double damped = (1.0 - cfg.damping_gamma * dt_s) * state.velocity_mps;
  next.velocity_mps = std::clamp(damped + delta_v, 0.0, cfg.v_max_mps);
  next.position_m = state.position_m + next.velocity_mps * dt_s;
  next.t_ms = state.t_ms + cfg.dt_ms;
  return next;
}

ClosedLoopResult run_closed_loop(const SyntheticUser& user,
                                 const calibration::UserProfile& profile,
                                 const decoder::DecoderConfig& decoder_config,
                                 const SimConfig& sim_config, int window_ms,
                                 int hop_ms) {
  sim_config.validate();
  if (sim_config.duration_ms <= 0) {
    throw Error(ErrorKind::Config, "run_closed_loop: duration_ms must be > 0");
  }

  ClosedLoopResult out;
  const auto frames = emit_frames(user, sim_config.duration_ms);
  out.decisions =
      decoder::decode_stream(frames, profile, decoder_config, window_ms, hop_ms);

  // Pending velocity increments keyed by window end time.
  std::size_t next_decision = 0;
  WheelchairState state;
  out.trajectory.push_back(state);
  for (std::int64_t t = 0; t < sim_config.duration_ms; t += sim_config.dt_ms) {
    double delta_v = 0.0;
    // A decision fires when the step crossing its window end executes.
    while (next_decision < out.decisions.size() &&
           out.decisions[next_decision].window_end_ms <= t + sim_config.dt_ms) {
      delta_v += out.decisions[next_decision].delta_v;
      ++next_decision;
    }
    state = step(state, delta_v, sim_config);
    out.trajectory.push_back(state);
    out.metrics.max_velocity_mps =
        std::max(out.metrics.max_velocity_mps, state.velocity_mps);
  }

  double conf_sum = 0.0;
  int conf_n = 0;
  for (const auto& d : out.decisions) {
    if (d.log_odds.has_value()) {
      conf_sum += d.confidence;
      ++conf_n;
    }
    const SchedState sched = scheduled_state(user, d.window_start_ms);
    if (sched == SchedState::Idle) continue;
    ++out.metrics.active_windows;
    const bool match =
        (sched == SchedState::SpeedUp && d.state == decoder::Intent::SpeedUp) ||
        (sched == SchedState::SlowDown && d.state == decoder::Intent::SlowDown);
    if (match) ++out.metrics.correct;
  }
  out.metrics.accuracy =
      out.metrics.active_windows > 0
          ? static_cast<double>(out.metrics.correct) / out.metrics.active_windows
          : 0.0;
  out.metrics.mean_confidence = conf_n > 0 ? conf_sum / conf_n : 0.0;
  out.metrics.final_velocity_mps = state.velocity_mps;
  out.metrics.final_position_m = state.position_m;
  return out;
}

}  // namespace neuroline::sim
