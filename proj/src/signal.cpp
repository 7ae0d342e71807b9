#include "neuroline/signal.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "neuroline/mathutil.hpp"

namespace neuroline::signal {

std::pair<double, double> band_range(Band b) {
  switch (b) {
    case Band::Theta: return {4.0, 8.0};
    case Band::Alpha: return {8.0, 12.0};
    case Band::LowBeta: return {12.0, 16.0};
    case Band::HighBeta: return {16.0, 25.0};
    case Band::Gamma: return {25.0, 45.0};
  }
  return {0.0, 0.0};
}

const char* band_name(Band b) {
  switch (b) {
    case Band::Theta: return "theta";
    case Band::Alpha: return "alpha";
    case Band::LowBeta: return "low_beta";
    case Band::HighBeta: return "high_beta";
    case Band::Gamma: return "gamma";
  }
  return "unknown";
}

std::optional<Band> band_from_name(const std::string& name) {
  for (int i = 0; i < kBandCount; ++i) {
    const Band b = static_cast<Band>(i);
    if (name == band_name(b)) return b;
  }
  return std::nullopt;
}

FeatureKey FeatureKey::from_index(int idx) {
  if (idx < 0 || idx >= kFeatureCount) {
    throw Error(ErrorKind::Config, "FeatureKey: index outside [0, 70)");
  }
  return FeatureKey{idx / kBandCount, static_cast<Band>(idx % kBandCount)};
}

std::string FeatureKey::label() const {
  return std::string(kChannelNames[static_cast<std::size_t>(channel)]) + "." +
         band_name(band);
}

std::optional<int> channel_from_name(const std::string& name) {
  for (int i = 0; i < kChannelCount; ++i) {
    if (name == kChannelNames[static_cast<std::size_t>(i)]) return i;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Periodogram.

namespace {

// Iterative radix-2 Cooley-Tukey; n must be a power of two.
void fft_pow2(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * math::kPi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

// Direct O(n^2) transform for non-power-of-two lengths.
std::vector<std::complex<double>> dft_direct(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc(0.0);
    for (std::size_t t = 0; t < n; ++t) {
      const double ang =
          -2.0 * math::kPi * static_cast<double>(k) * static_cast<double>(t) /
          static_cast<double>(n);
      acc += x[t] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

bool is_pow2(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

std::vector<double> periodogram(std::span<const double> raw_samples,
                                double sample_rate_hz) {
  const std::size_t n = raw_samples.size();
  if (n < 2) throw Error(ErrorKind::Length, "periodogram: need >= 2 samples");
  for (double v : raw_samples) {
    if (!std::isfinite(v)) {
      throw Error(ErrorKind::Data, "periodogram: non-finite sample");
    }
  }

  // Periodic Hann taper.
  std::vector<double> tapered(n);
  double win_sumsq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w =
        0.5 * (1.0 - std::cos(2.0 * math::kPi * static_cast<double>(i) /
                              static_cast<double>(n)));
    tapered[i] = raw_samples[i] * w;
    win_sumsq += w * w;
  }

  std::vector<std::complex<double>> spectrum;
  if (is_pow2(n)) {
    spectrum.assign(tapered.begin(), tapered.end());
    fft_pow2(spectrum);
  } else {
    spectrum = dft_direct(tapered);
  }

  // One-sided PSD: interior bins carry the mirrored half's power too.
  const std::size_t half = n / 2;
  std::vector<double> psd(half + 1);
  const double scale = 1.0 / (sample_rate_hz * win_sumsq);
  for (std::size_t k = 0; k <= half; ++k) {
    double p = std::norm(spectrum[k]) * scale;
    if (k != 0 && !(n % 2 == 0 && k == half)) p *= 2.0;
    psd[k] = p;
  }
  return psd;
}

double band_power(std::span<const double> raw_samples, double sample_rate_hz,
                  Band band) {
  if (sample_rate_hz < 90.0) {
    throw Error(ErrorKind::Config,
                "band_power: sample rate must be >= 90 Hz (2 x 45 Hz)");
  }
  const double min_len = 2.0 * sample_rate_hz / 4.0;  // two cycles at 4 Hz
  if (static_cast<double>(raw_samples.size()) < min_len) {
    throw Error(ErrorKind::Length,
                "band_power: input shorter than two cycles of the lowest band");
  }

  const auto psd = periodogram(raw_samples, sample_rate_hz);
  const auto [lo, hi] = band_range(band);
  const double df = sample_rate_hz / static_cast<double>(raw_samples.size());

  double sum = 0.0;
  int count = 0;
  for (std::size_t k = 0; k < psd.size(); ++k) {
    const double f = df * static_cast<double>(k);
    if (f >= lo && f < hi) {
      sum += psd[k];
      ++count;
    }
  }
  return count > 0 ? sum / count : 0.0;
}

// ---------------------------------------------------------------------------
// Windowing.

namespace {
constexpr std::size_t kGapHistory = 64;
}

int capacity_from_gaps(std::span<const std::int64_t> recent_gaps,
                       int window_ms) {
  if (recent_gaps.empty()) return 1;
  std::vector<std::int64_t> gaps(recent_gaps.begin(), recent_gaps.end());
  std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
  const std::int64_t spacing = gaps[gaps.size() / 2];
  if (spacing <= 0) return 1;
  return std::max(1, static_cast<int>(window_ms / spacing));
}

WindowAssembler::WindowAssembler(int window_ms, int hop_ms)
    : window_ms_(window_ms), hop_ms_(hop_ms) {
  if (hop_ms <= 0) throw Error(ErrorKind::Config, "windowing: hop_ms <= 0");
  if (window_ms <= 0 || hop_ms > window_ms) {
    throw Error(ErrorKind::Config, "windowing: need 0 < hop_ms <= window_ms");
  }
}

Window WindowAssembler::assemble() const {
  Window w;
  w.start_ms = next_start_;
  w.end_ms = next_start_ + window_ms_;
  for (const auto& f : buffer_) {
    for (int d = 0; d < kFeatureCount; ++d) {
      w.mean_power[static_cast<std::size_t>(d)] +=
          f.values[static_cast<std::size_t>(d)];
    }
    ++w.frame_count;
  }
  for (int d = 0; d < kFeatureCount; ++d) {
    w.mean_power[static_cast<std::size_t>(d)] /= w.frame_count;
  }
  w.partial = w.frame_count < capacity_from_gaps(recent_gaps_, window_ms_);
  return w;
}

std::vector<Window> WindowAssembler::push_frame(const PowerFrame& frame) {
  if (any_frame_ && frame.timestamp_ms <= last_t_) {
    throw Error(ErrorKind::Data, "windowing: timestamps not strictly increasing");
  }
  std::vector<Window> completed;
  if (!any_frame_) {
    any_frame_ = true;
    next_start_ = frame.timestamp_ms;
  } else {
    // Close every window that ends at or before this arrival.
    while (next_start_ + window_ms_ <= frame.timestamp_ms) {
      if (!buffer_.empty()) completed.push_back(assemble());
      next_start_ += hop_ms_;
      std::erase_if(buffer_, [&](const PowerFrame& f) {
        return f.timestamp_ms < next_start_;
      });
    }
    recent_gaps_.push_back(frame.timestamp_ms - last_t_);
    if (recent_gaps_.size() > kGapHistory) {
      recent_gaps_.erase(recent_gaps_.begin());
    }
  }
  last_t_ = frame.timestamp_ms;
  buffer_.push_back(frame);
  return completed;
}

std::vector<Window> WindowAssembler::finish() {
  std::vector<Window> completed;
  if (!any_frame_) return completed;
  while (next_start_ <= last_t_) {
    if (!buffer_.empty()) completed.push_back(assemble());
    next_start_ += hop_ms_;
    std::erase_if(buffer_, [&](const PowerFrame& f) {
      return f.timestamp_ms < next_start_;
    });
  }
  return completed;
}

std::vector<Window> slide_windows(std::span<const PowerFrame> frames,
                                  int window_ms, int hop_ms) {
  WindowAssembler assembler(window_ms, hop_ms);
  std::vector<Window> windows;
  for (const auto& f : frames) {
    auto batch = assembler.push_frame(f);
    windows.insert(windows.end(), batch.begin(), batch.end());
  }
  auto tail = assembler.finish();
  windows.insert(windows.end(), tail.begin(), tail.end());
  return windows;
}

GateResult idle_gate(const Window& window, const FeatureKey& key,
                     const IdleBaseline& baseline, double z_threshold,
                     bool two_sided) {
  if (!(baseline.sd > 0.0)) {
    throw Error(ErrorKind::Baseline, "idle_gate: baseline sd must be > 0");
  }
  GateResult g;
  g.z = (window.mean_power[static_cast<std::size_t>(key.index())] -
         baseline.mean) /
        baseline.sd;
  g.active = two_sided ? std::abs(g.z) > z_threshold : g.z > z_threshold;
  return g;
}

}  // namespace neuroline::signal
