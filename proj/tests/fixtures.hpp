// Synthetic calibration data shared by the calibration, CLI and acceptance
// suites: one planted discriminative feature, everything else idle noise.
#pragma once

#include <cstdint>

#include "neuroline/calibration.hpp"
#include "neuroline/rng.hpp"
#include "neuroline/signal.hpp"

namespace fixtures {

struct SynthSpec {
  int n_trials_per_label = 10;
  int trial_duration_ms = 4000;
  int feature_index = 51;  // FC6.alpha
  double mu_speedup = 12.0;
  double sd_speedup = 2.0;
  double mu_slowdown = 8.0;
  double sd_slowdown = 2.0;
  double idle_mean = 10.0;
  double idle_sd = 1.0;
  /// Draw cadence of the planted feature: 125 redraws per frame; 1000 holds
  /// one draw per window-length block so window means keep the state sd.
  int block_ms = 125;
  int relaxation_ms = 16000;
  std::uint64_t seed = 1;
};

inline neuroline::calibration::TrialSet make_trial_set(const SynthSpec& spec) {
  using neuroline::calibration::Label;
  using neuroline::signal::kFeatureCount;
  using neuroline::signal::kFramePeriodMs;

  neuroline::Rng rng(spec.seed);
  neuroline::calibration::TrialSet set;
  set.trial_duration_ms = spec.trial_duration_ms;

  for (int t = 0; t < 2 * spec.n_trials_per_label; ++t) {
    neuroline::calibration::Trial trial;
    trial.label = t % 2 == 0 ? Label::SpeedUp : Label::SlowDown;
    trial.onset_ms = 0;
    const double mu =
        trial.label == Label::SpeedUp ? spec.mu_speedup : spec.mu_slowdown;
    const double sd =
        trial.label == Label::SpeedUp ? spec.sd_speedup : spec.sd_slowdown;
    double block_value = 0.0;
    std::int64_t block_id = -1;
    for (std::int64_t ms = 0; ms < spec.trial_duration_ms;
         ms += kFramePeriodMs) {
      neuroline::signal::PowerFrame frame;
      frame.timestamp_ms = ms;
      for (int f = 0; f < kFeatureCount; ++f) {
        frame.values[static_cast<std::size_t>(f)] =
            rng.normal(spec.idle_mean, spec.idle_sd);
      }
      if (ms / spec.block_ms != block_id) {
        block_id = ms / spec.block_ms;
        block_value = rng.normal(mu, sd);
      }
      frame.values[static_cast<std::size_t>(spec.feature_index)] = block_value;
      trial.frames.push_back(frame);
    }
    set.trials.push_back(std::move(trial));
  }

  for (std::int64_t ms = 0; ms < spec.relaxation_ms; ms += kFramePeriodMs) {
    neuroline::signal::PowerFrame frame;
    frame.timestamp_ms = ms;
    for (int f = 0; f < kFeatureCount; ++f) {
      frame.values[static_cast<std::size_t>(f)] =
          rng.normal(spec.idle_mean, spec.idle_sd);
    }
    set.relaxation.push_back(frame);
  }
  return set;
}

}  // namespace fixtures
