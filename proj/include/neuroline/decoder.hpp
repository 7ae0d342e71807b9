#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "neuroline/calibration.hpp"
#include "neuroline/signal.hpp"

namespace neuroline::decoder {

/// Belief over the two world states before seeing the measurement.
/// Flat (0.5/0.5) in the deployed configuration.
struct Prior {
  double p1 = 0.5;  // P(SpeedUp)

  double p2() const { return 1.0 - p1; }
  void validate() const;
};

enum class Intent { SpeedUp, SlowDown, Idle };

const char* intent_name(Intent s);

/// One decoding outcome. Idle decisions (gated, tied or undecidable windows)
/// carry no log odds and a zero velocity increment.
struct Decision {
  Intent state = Intent::Idle;
  std::optional<double> log_odds;
  double confidence = 0.0;
  double delta_v = 0.0;
  std::int64_t window_start_ms = 0;
  std::int64_t window_end_ms = 0;
  double measurement = 0.0;
  double gate_z = 0.0;
  bool saturated = false;
  bool undecidable = false;
};

struct DecoderConfig {
  double gain_k = 0.05;       // m/s per nat of confidence
  double delta_v_max = 0.2;   // m/s cap on one increment
  double z_threshold = 2.0;   // idle gate threshold, 0 disables gating
  bool gate_two_sided = true;
  Prior prior;
  bool skip_partial_windows = true;

  void validate() const;
};

/// Log odds are clamped to +/- 50 nats when a likelihood underflows at an
/// extreme measurement; the decision keeps its sign and flags saturation.
inline constexpr double kLogOddsClamp = 50.0;

/// [p(a|B1) p(B1)] / [p(a|B2) p(B2)], evaluated in log space.
/// Throws Error(Undecidable) when the measurement lies outside both supports.
double posterior_odds(double a, const calibration::UserProfile& profile,
                      const Prior& prior);

/// d(a) = log-likelihood ratio + log prior ratio. Sign decides MAP, magnitude
/// is the confidence.
double log_posterior_odds(double a, const calibration::UserProfile& profile,
                          const Prior& prior);

/// Gate, then MAP with confidence-proportional velocity increment:
/// delta_v = sign(d) * min(gain_k * |d|, delta_v_max). An exact d = 0 tie
/// issues no command.
Decision decide(const signal::Window& window,
                const calibration::UserProfile& profile,
                const DecoderConfig& config);

/// slide_windows + decide per window. Partial windows are skipped outright
/// when skip_partial_windows is set (no decision emitted: under-sampled
/// evidence earns no command). Per-window trouble (undecidable measurements)
/// is recorded in the Decision, never aborts the stream.
std::vector<Decision> decode_stream(std::span<const signal::PowerFrame> frames,
                                    const calibration::UserProfile& profile,
                                    const DecoderConfig& config,
                                    int window_ms, int hop_ms);

}  // namespace neuroline::decoder
