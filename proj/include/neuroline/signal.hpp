#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "neuroline/errors.hpp"

namespace neuroline::signal {

// --------------------------------------------------------------------------
// Feature space: 14 channels x 5 frequency bands = 70 dimensions,
// channel-major, band-minor.

enum class Band : std::uint8_t { Theta, Alpha, LowBeta, HighBeta, Gamma };

inline constexpr int kBandCount = 5;
inline constexpr int kChannelCount = 14;
inline constexpr int kFeatureCount = kChannelCount * kBandCount;

inline constexpr std::array<const char*, kChannelCount> kChannelNames = {
    "AF3", "F7", "F3", "FC5", "T7",  "P7", "O1",
    "O2",  "P8", "T8", "FC6", "F4",  "F8", "AF4"};

/// Band edges in Hz; a periodogram bin belongs to a band when its center
/// frequency f satisfies low <= f < high.
std::pair<double, double> band_range(Band b);
const char* band_name(Band b);
std::optional<Band> band_from_name(const std::string& name);

struct FeatureKey {
  int channel = 0;  // index into kChannelNames
  Band band = Band::Theta;

  int index() const { return channel * kBandCount + static_cast<int>(band); }
  static FeatureKey from_index(int idx);
  std::string label() const;  // e.g. "FC6.alpha"

  bool operator==(const FeatureKey&) const = default;
};

std::optional<int> channel_from_name(const std::string& name);

/// One timestamped band-power observation (uV^2/Hz), nominally at 8 Hz.
struct PowerFrame {
  std::int64_t timestamp_ms = 0;
  std::array<double, kFeatureCount> values{};

  bool operator==(const PowerFrame&) const = default;
};

inline constexpr int kFrameRateHz = 8;
inline constexpr int kFramePeriodMs = 1000 / kFrameRateHz;

struct Window {
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;  // window covers [start_ms, end_ms)
  std::array<double, kFeatureCount> mean_power{};
  int frame_count = 0;
  /// Trailing windows that hold fewer frames than the stream's cadence
  /// implies are emitted but flagged; the decoder skips them by default.
  bool partial = false;
};

struct IdleBaseline {
  double mean = 0.0;
  double sd = 0.0;
  int n = 0;

  bool operator==(const IdleBaseline&) const = default;
};

// --------------------------------------------------------------------------
// Spectral estimation.

/// One-sided Hann-tapered periodogram (power spectral density). Bin k covers
/// center frequency k * sample_rate / N for k = 0..N/2.
std::vector<double> periodogram(std::span<const double> raw_samples,
                                double sample_rate_hz);

/// Mean periodogram power within the band's frequency range.
/// Requires len >= sample_rate/2 (two cycles of the lowest band edge) and
/// sample_rate >= 90 Hz (Nyquist above the 45 Hz gamma edge).
double band_power(std::span<const double> raw_samples, double sample_rate_hz,
                  Band band);

// --------------------------------------------------------------------------
// Windowing and gating.

/// Frames a window should hold given the stream's recent cadence (median of
/// the supplied inter-frame gaps). No gaps observed yet -> 1.
int capacity_from_gaps(std::span<const std::int64_t> recent_gaps,
                       int window_ms);

/// Incremental sliding-window builder over a strictly increasing frame
/// stream. Bounded memory: one window of frames plus a capped gap history.
/// slide_windows and the streaming CLI decoder share this exact machinery, so
/// batch and line-at-a-time decoding produce identical windows.
class WindowAssembler {
 public:
  WindowAssembler(int window_ms, int hop_ms);

  /// Feeds one frame; returns the windows completed by its arrival.
  std::vector<Window> push_frame(const PowerFrame& frame);
  /// Flushes the trailing (possibly partial) windows at end of stream.
  std::vector<Window> finish();

 private:
  Window assemble() const;

  int window_ms_;
  int hop_ms_;
  bool any_frame_ = false;
  std::int64_t next_start_ = 0;
  std::int64_t last_t_ = 0;
  std::vector<PowerFrame> buffer_;  // frames in [next_start_, next_start_+window)
  std::vector<std::int64_t> recent_gaps_;  // capped history for cadence
};

/// Sliding mean-power windows anchored at the first frame timestamp.
/// Windows advance by hop_ms; zero-frame windows are omitted; under-filled
/// windows are flagged partial.
std::vector<Window> slide_windows(std::span<const PowerFrame> frames,
                                  int window_ms, int hop_ms);

struct GateResult {
  bool active = false;
  double z = 0.0;
};

/// Z-score gate against the relaxation baseline. Two-sided by default
/// (|z| > threshold); one-sided mode tests z > threshold only.
GateResult idle_gate(const Window& window, const FeatureKey& key,
                     const IdleBaseline& baseline, double z_threshold,
                     bool two_sided = true);

}  // namespace neuroline::signal
