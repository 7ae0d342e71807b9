#include "neuroline/decoder.hpp"

#include <algorithm>
#include <cmath>

namespace neuroline::decoder {

void Prior::validate() const {
  if (!(p1 > 0.0 && p1 < 1.0)) {
    throw Error(ErrorKind::Config, "Prior: p1 must lie in (0,1)");
  }
}

void DecoderConfig::validate() const {
  if (!(gain_k > 0.0)) throw Error(ErrorKind::Config, "DecoderConfig: gain_k <= 0");
  if (!(delta_v_max > 0.0)) {
    throw Error(ErrorKind::Config, "DecoderConfig: delta_v_max <= 0");
  }
  if (z_threshold < 0.0) {
    throw Error(ErrorKind::Config, "DecoderConfig: z_threshold < 0");
  }
  prior.validate();
}

const char* intent_name(Intent s) {
  switch (s) {
    case Intent::SpeedUp: return "speed_up";
    case Intent::SlowDown: return "slow_down";
    case Intent::Idle: return "idle";
  }
  return "unknown";
}

namespace {

struct OddsEval {
  double d = 0.0;
  bool saturated = false;
};

OddsEval eval_log_odds(double a, const calibration::UserProfile& profile,
                       const Prior& prior) {
  prior.validate();
  const double l1 = profile.like_speedup.log_pdf(a);
  const double l2 = profile.like_slowdown.log_pdf(a);
  const bool dead1 = !std::isfinite(l1);
  const bool dead2 = !std::isfinite(l2);
  if (dead1 && dead2) {
    throw Error(ErrorKind::Undecidable,
                "log_posterior_odds: measurement outside both likelihood supports");
  }

  OddsEval out;
  if (dead1) {
    out.d = -kLogOddsClamp;
    out.saturated = true;
    return out;
  }
  if (dead2) {
    out.d = kLogOddsClamp;
    out.saturated = true;
    return out;
  }
  const double d = (l1 - l2) + std::log(prior.p1 / prior.p2());
  if (d > kLogOddsClamp) {
    out.d = kLogOddsClamp;
    out.saturated = true;
  } else if (d < -kLogOddsClamp) {
    out.d = -kLogOddsClamp;
    out.saturated = true;
  } else {
    out.d = d;
  }
  return out;
}

}  // namespace

double posterior_odds(double a, const calibration::UserProfile& profile,
                      const Prior& prior) {
  return std::exp(eval_log_odds(a, profile, prior).d);
}

double log_posterior_odds(double a, const calibration::UserProfile& profile,
                          const Prior& prior) {
  return eval_log_odds(a, profile, prior).d;
}

Decision decide(const signal::Window& window,
                const calibration::UserProfile& profile,
                const DecoderConfig& config) {
  config.validate();

  Decision decision;
  decision.window_start_ms = window.start_ms;
  decision.window_end_ms = window.end_ms;
  decision.measurement =
      window.mean_power[static_cast<std::size_t>(profile.selected.index())];

  const auto gate = signal::idle_gate(window, profile.selected, profile.idle,
                                      config.z_threshold, config.gate_two_sided);
  decision.gate_z = gate.z;
  if (!gate.active) return decision;

  OddsEval odds;
  try {
    odds = eval_log_odds(decision.measurement, profile, config.prior);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Undecidable) {
      decision.undecidable = true;
      return decision;
    }
    throw;
  }

  decision.log_odds = odds.d;
  decision.saturated = odds.saturated;
  decision.confidence = std::abs(odds.d);
  if (odds.d == 0.0) {
    // Zero confidence: no command.
    return decision;
  }
  decision.state = odds.d > 0.0 ? Intent::SpeedUp : Intent::SlowDown;
  const double magnitude =
      std::min(config.gain_k * decision.confidence, config.delta_v_max);
  decision.delta_v = odds.d > 0.0 ? magnitude : -magnitude;
  return decision;
}

std::vector<Decision> decode_stream(std::span<const signal::PowerFrame> frames,
                                    const calibration::UserProfile& profile,
                                    const DecoderConfig& config, int window_ms,
                                    int hop_ms) {
  const auto windows = signal::slide_windows(frames, window_ms, hop_ms);
  std::vector<Decision> decisions;
  decisions.reserve(windows.size());
  for (const auto& w : windows) {
    if (w.partial && config.skip_partial_windows) continue;
    decisions.push_back(decide(w, profile, config));
  }
  return decisions;
}

}  // namespace neuroline::decoder
