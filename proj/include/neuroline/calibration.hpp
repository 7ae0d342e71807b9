#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "neuroline/distributions.hpp"
#include "neuroline/signal.hpp"
#include "neuroline/stats.hpp"

namespace neuroline::calibration {

enum class Label { SpeedUp, SlowDown };

const char* label_name(Label l);

struct Trial {
  Label label = Label::SpeedUp;
  std::int64_t onset_ms = 0;
  std::vector<signal::PowerFrame> frames;
};

/// Labeled, onset-marked calibration recordings plus a relaxation recording.
struct TrialSet {
  std::vector<Trial> trials;
  std::vector<signal::PowerFrame> relaxation;
  int trial_duration_ms = 4000;

  /// >= 5 trials per label, >= 8 s of relaxation, onsets inside recordings.
  void validate() const;
};

struct CalibrationConfig {
  int window_ms = 1000;
  int hop_ms = 500;
  double alpha = 0.05;        // Mann-Whitney significance threshold
  int region_start_ms = 500;  // analysis region start relative to onset
  double sw_alpha = 0.05;     // normality gate for preferring the Gaussian fit
  double screen_threshold = 0.2;
  int mwu_exact_max_n = 12;
};

struct FeatureReport {
  signal::FeatureKey key;
  int window_index = 0;  // window start = index * hop_ms after onset
  double p_value = 1.0;
  double effect_r = 0.0;
};

struct SegmentedTrial {
  Label label = Label::SpeedUp;
  std::vector<signal::Window> windows;  // start/end relative to onset
};

struct TrialWarning {
  std::size_t trial_index = 0;
  std::string message;
};

struct Segmented {
  std::vector<SegmentedTrial> trials;
  std::vector<TrialWarning> warnings;
};

/// Windows each trial from its onset marker; window index 0 starts at the
/// onset and only windows fully inside [onset, onset + trial_duration] are
/// kept. Trials too short for a single window are skipped with a warning.
Segmented segment_trials(const TrialSet& set, int window_ms, int hop_ms);

struct SelectionResult {
  std::vector<FeatureReport> report;  // p < alpha, ranked by effect_r desc
  signal::FeatureKey selected;
  int window_index = 0;
  int region_start_ms = 0;
  int region_end_ms = 0;
};

/// Mann-Whitney per (feature, window index) between the two labels, ranked by
/// effect size. The winning entry must start inside the analysis region.
/// Throws ScreeningError when nothing in the region clears alpha.
SelectionResult select_feature(const Segmented& segmented,
                               const CalibrationConfig& config,
                               int trial_duration_ms);

struct LikelihoodFit {
  stats::DistFamily like_speedup;
  stats::DistFamily like_slowdown;
  stats::TestResult normality_speedup;
  stats::TestResult normality_slowdown;
  /// (family, KS D) per state, ascending D; families whose support excludes
  /// the data are absent.
  std::vector<std::pair<stats::Family, double>> ranking_speedup;
  std::vector<std::pair<stats::Family, double>> ranking_slowdown;
};

/// Fits all 11 families per state and ranks them by KS distance. When
/// Shapiro-Wilk does not reject normality at sw_alpha the Gaussian fit wins
/// regardless of ranking; otherwise the KS-best family is selected.
LikelihoodFit fit_likelihoods(std::span<const double> values_speedup,
                              std::span<const double> values_slowdown,
                              double sw_alpha = 0.05);

struct ScreenResult {
  double kl_norm = 0.0;
  bool pass = false;
  bool support_mismatch = false;
};

/// Normalized symmetric KL: kl_norm = 1 - exp(-(KL(P||Q)+KL(Q||P))/2).
/// Infinite divergence screens as maximally separated (pass) with a note.
ScreenResult screen_user(const stats::DistFamily& like_speedup,
                         const stats::DistFamily& like_slowdown,
                         double threshold = 0.2);

/// Calibrated decoder state.
struct UserProfile {
  signal::FeatureKey selected;
  int region_start_ms = 500;
  int region_end_ms = 4000;
  stats::DistFamily like_speedup;
  stats::DistFamily like_slowdown;
  signal::IdleBaseline idle;
  double kl_norm = 0.0;
  int window_ms = 1000;
  int hop_ms = 500;
  std::int64_t created_at_unix_s = 0;
  std::string config_hash;
  /// Pooled per-state measurements from the analysis region; kept for
  /// augmentation and for histogram outputs.
  std::vector<double> values_speedup;
  std::vector<double> values_slowdown;

  bool operator==(const UserProfile&) const = default;
};

struct BuildResult {
  UserProfile profile;
  SelectionResult selection;
  LikelihoodFit fit;
  ScreenResult screen;
  std::vector<TrialWarning> warnings;
};

/// Full pipeline: segment -> select -> fit -> screen -> idle baseline.
/// Deterministic in (set, config). Screening failure inside selection throws
/// ScreeningError; a below-threshold kl_norm is reported via `screen.pass`.
BuildResult build_profile(const TrialSet& set, const CalibrationConfig& config);

std::string config_hash(const CalibrationConfig& config);

}  // namespace neuroline::calibration
