#include "neuroline/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "neuroline/mathutil.hpp"

namespace neuroline::calibration {

const char* label_name(Label l) {
  return l == Label::SpeedUp ? "speed_up" : "slow_down";
}

void TrialSet::validate() const {
  if (trial_duration_ms <= 0) {
    throw Error(ErrorKind::Config, "TrialSet: trial_duration_ms must be > 0");
  }
  int per_label[2] = {0, 0};
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const Trial& t = trials[i];
    ++per_label[t.label == Label::SpeedUp ? 0 : 1];
    if (t.frames.empty()) {
      throw Error(ErrorKind::Data,
                  "TrialSet: trial " + std::to_string(i) + " has no frames");
    }
    if (t.onset_ms < t.frames.front().timestamp_ms ||
        t.onset_ms > t.frames.back().timestamp_ms) {
      throw Error(ErrorKind::Data, "TrialSet: trial " + std::to_string(i) +
                                       " onset outside its recording");
    }
  }
  if (per_label[0] < 5 || per_label[1] < 5) {
    throw Error(ErrorKind::Size, "TrialSet: need >= 5 trials per label");
  }
  if (relaxation.empty() ||
      relaxation.back().timestamp_ms - relaxation.front().timestamp_ms < 8000) {
    throw Error(ErrorKind::Size, "TrialSet: relaxation must span >= 8 s");
  }
}

Segmented segment_trials(const TrialSet& set, int window_ms, int hop_ms) {
  set.validate();
  if (hop_ms <= 0 || window_ms <= 0 || hop_ms > window_ms) {
    throw Error(ErrorKind::Config, "segment_trials: bad window/hop");
  }
  if (window_ms > set.trial_duration_ms) {
    throw Error(ErrorKind::Config,
                "segment_trials: window longer than trial duration");
  }

  Segmented out;
  for (std::size_t i = 0; i < set.trials.size(); ++i) {
    const Trial& trial = set.trials[i];

    // Frames inside [onset, onset + duration), re-based so onset = 0.
    std::vector<signal::PowerFrame> rel;
    for (const auto& f : trial.frames) {
      const std::int64_t t = f.timestamp_ms - trial.onset_ms;
      if (t >= 0 && t < set.trial_duration_ms) {
        signal::PowerFrame g = f;
        g.timestamp_ms = t;
        rel.push_back(g);
      }
    }
    std::int64_t spacing = signal::kFramePeriodMs;
    if (rel.size() >= 2) {
      std::vector<std::int64_t> gaps;
      for (std::size_t k = 1; k < rel.size(); ++k) {
        gaps.push_back(rel[k].timestamp_ms - rel[k - 1].timestamp_ms);
      }
      std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
      spacing = gaps[gaps.size() / 2];
    }
    const std::int64_t coverage =
        rel.empty() ? 0
                    : rel.back().timestamp_ms - rel.front().timestamp_ms + spacing;
    if (coverage < window_ms) {
      out.warnings.push_back({i, "trial shorter than one window, skipped"});
      continue;
    }
    std::vector<std::int64_t> gaps;
    for (std::size_t k = 1; k < rel.size(); ++k) {
      gaps.push_back(rel[k].timestamp_ms - rel[k - 1].timestamp_ms);
    }

    // Window grid anchored at the onset (index 0 starts at t = 0), windows
    // kept only when they fit inside the trial duration.
    std::vector<signal::Window> windows;
    for (std::int64_t start = 0; start + window_ms <= set.trial_duration_ms;
         start += hop_ms) {
      signal::Window w;
      w.start_ms = start;
      w.end_ms = start + window_ms;
      std::size_t gaps_before_end = 0;
      for (std::size_t k = 0; k < rel.size(); ++k) {
        const auto& f = rel[k];
        if (k > 0 && f.timestamp_ms < w.end_ms) gaps_before_end = k;
        if (f.timestamp_ms >= w.start_ms && f.timestamp_ms < w.end_ms) {
          for (int d = 0; d < signal::kFeatureCount; ++d) {
            w.mean_power[static_cast<std::size_t>(d)] +=
                f.values[static_cast<std::size_t>(d)];
          }
          ++w.frame_count;
        }
      }
      if (w.frame_count == 0) continue;
      for (int d = 0; d < signal::kFeatureCount; ++d) {
        w.mean_power[static_cast<std::size_t>(d)] /= w.frame_count;
      }
      w.partial =
          w.frame_count <
          signal::capacity_from_gaps(
              std::span<const std::int64_t>(gaps).first(gaps_before_end),
              window_ms);
      windows.push_back(w);
    }
    if (windows.empty()) {
      out.warnings.push_back({i, "no usable windows, skipped"});
      continue;
    }
    out.trials.push_back({trial.label, std::move(windows)});
  }
  return out;
}

SelectionResult select_feature(const Segmented& segmented,
                               const CalibrationConfig& config,
                               int trial_duration_ms) {
  // Collect full windows by (feature, window start) and label.
  struct Samples {
    std::vector<double> speedup;
    std::vector<double> slowdown;
  };
  std::map<std::int64_t, Samples> by_start[signal::kFeatureCount];
  for (const auto& trial : segmented.trials) {
    for (const auto& w : trial.windows) {
      if (w.partial) continue;
      for (int f = 0; f < signal::kFeatureCount; ++f) {
        auto& s = by_start[f][w.start_ms];
        auto& dst = trial.label == Label::SpeedUp ? s.speedup : s.slowdown;
        dst.push_back(w.mean_power[static_cast<std::size_t>(f)]);
      }
    }
  }

  stats::MannWhitneyOptions mwu_opts;
  mwu_opts.exact_max_n = config.mwu_exact_max_n;

  std::vector<FeatureReport> significant;
  for (int f = 0; f < signal::kFeatureCount; ++f) {
    for (const auto& [start, samples] : by_start[f]) {
      if (samples.speedup.size() < 5 || samples.slowdown.size() < 5) continue;
      // A feature/window slice where every value matches is uninformative,
      // not an error at the scan level.
      const bool all_same =
          std::equal(samples.speedup.begin() + 1, samples.speedup.end(),
                     samples.speedup.begin()) &&
          std::equal(samples.slowdown.begin() + 1, samples.slowdown.end(),
                     samples.slowdown.begin()) &&
          samples.speedup.front() == samples.slowdown.front();
      if (all_same) continue;
      const auto [test, effect] =
          stats::mann_whitney_u(samples.speedup, samples.slowdown, mwu_opts);
      if (test.p_value < config.alpha) {
        FeatureReport entry;
        entry.key = signal::FeatureKey::from_index(f);
        entry.window_index = static_cast<int>(start / config.hop_ms);
        entry.p_value = test.p_value;
        entry.effect_r = effect.r;
        significant.push_back(entry);
      }
    }
  }

  // Rank: effect size descending, then p ascending, then the fixed
  // channel-major feature order, then window index.
  std::sort(significant.begin(), significant.end(),
            [](const FeatureReport& a, const FeatureReport& b) {
              if (a.effect_r != b.effect_r) return a.effect_r > b.effect_r;
              if (a.p_value != b.p_value) return a.p_value < b.p_value;
              if (a.key.index() != b.key.index()) {
                return a.key.index() < b.key.index();
              }
              return a.window_index < b.window_index;
            });

  SelectionResult result;
  result.report = significant;
  result.region_start_ms = config.region_start_ms;
  result.region_end_ms = trial_duration_ms;

  for (const auto& entry : significant) {
    if (entry.window_index * config.hop_ms >= config.region_start_ms) {
      result.selected = entry.key;
      result.window_index = entry.window_index;
      return result;
    }
  }
  throw ScreeningError(
      0.0, "select_feature: no feature reaches p < alpha in the analysis region");
}

LikelihoodFit fit_likelihoods(std::span<const double> values_speedup,
                              std::span<const double> values_slowdown,
                              double sw_alpha) {
  if (values_speedup.size() < 8 || values_slowdown.size() < 8) {
    throw Error(ErrorKind::Size, "fit_likelihoods: need >= 8 values per state");
  }

  auto fit_state = [&](std::span<const double> values,
                       stats::TestResult& normality,
                       std::vector<std::pair<stats::Family, double>>& ranking)
      -> stats::DistFamily {
    normality = stats::shapiro_wilk(values);

    ranking.clear();
    std::map<stats::Family, stats::DistFamily> fitted;
    for (stats::Family fam : stats::kAllFamilies) {
      auto fit = stats::fit_family(values, fam);
      if (!fit) continue;
      const auto ks = stats::ks_statistic(
          values, [&](double v) { return fit->cdf(v); }, /*fitted=*/true);
      ranking.emplace_back(fam, ks.d);
      fitted.emplace(fam, std::move(*fit));
    }
    std::sort(ranking.begin(), ranking.end(),
              [](const auto& a, const auto& b) { return a.second < b.second; });

    // A clean normality result buys the closed-form Gaussian even when some
    // exotic family edges it out on KS distance.
    if (normality.p_value >= sw_alpha) {
      return fitted.at(stats::Family::Gaussian);
    }
    return fitted.at(ranking.front().first);
  };

  LikelihoodFit out;
  out.like_speedup = fit_state(values_speedup, out.normality_speedup,
                               out.ranking_speedup);
  out.like_slowdown = fit_state(values_slowdown, out.normality_slowdown,
                                out.ranking_slowdown);
  return out;
}

ScreenResult screen_user(const stats::DistFamily& like_speedup,
                         const stats::DistFamily& like_slowdown,
                         double threshold) {
  ScreenResult r;
  const double kl_pq = stats::kl_divergence_auto(like_speedup, like_slowdown);
  const double kl_qp = stats::kl_divergence_auto(like_slowdown, like_speedup);
  if (std::isinf(kl_pq) || std::isinf(kl_qp)) {
    r.kl_norm = 1.0 - 1e-12;
    r.pass = true;
    r.support_mismatch = true;
    return r;
  }
  const double kl_sym = 0.5 * (kl_pq + kl_qp);
  r.kl_norm = -std::expm1(-kl_sym);
  r.pass = r.kl_norm >= threshold;
  return r;
}

std::string config_hash(const CalibrationConfig& c) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "w=%d h=%d a=%.17g r=%d sw=%.17g t=%.17g m=%d",
                c.window_ms, c.hop_ms, c.alpha, c.region_start_ms, c.sw_alpha,
                c.screen_threshold, c.mwu_exact_max_n);
  // FNV-1a 64.
  std::uint64_t h = 1469598103934665603ull;
  for (const char* p = buf; *p; ++p) {
    h ^= static_cast<unsigned char>(*p);
    h *= 1099511628211ull;
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

BuildResult build_profile(const TrialSet& set, const CalibrationConfig& config) {
  BuildResult out;

  Segmented segmented = segment_trials(set, config.window_ms, config.hop_ms);
  out.warnings = segmented.warnings;

  out.selection = select_feature(segmented, config, set.trial_duration_ms);
  const int key_index = out.selection.selected.index();

  // Pool every full window inside the analysis region, per state, in trial
  // order: small calibration sets need every usable window.
  std::vector<double> values_su;
  std::vector<double> values_sd;
  for (const auto& trial : segmented.trials) {
    for (const auto& w : trial.windows) {
      if (w.partial) continue;
      if (w.start_ms < config.region_start_ms) continue;
      const double v = w.mean_power[static_cast<std::size_t>(key_index)];
      (trial.label == Label::SpeedUp ? values_su : values_sd).push_back(v);
    }
  }
  out.fit = fit_likelihoods(values_su, values_sd, config.sw_alpha);
  out.screen = screen_user(out.fit.like_speedup, out.fit.like_slowdown,
                           config.screen_threshold);

  // Idle baseline over the relaxation frames of the selected feature.
  std::vector<double> idle_values;
  idle_values.reserve(set.relaxation.size());
  for (const auto& f : set.relaxation) {
    idle_values.push_back(f.values[static_cast<std::size_t>(key_index)]);
  }
  if (idle_values.size() < 8) {
    throw Error(ErrorKind::Baseline,
                "build_profile: need >= 8 relaxation frames");
  }
  const double idle_var = math::sample_variance(idle_values);
  if (!(idle_var > 0.0)) {
    throw Error(ErrorKind::Baseline,
                "build_profile: relaxation recording has zero variance");
  }

  UserProfile& p = out.profile;
  p.selected = out.selection.selected;
  p.region_start_ms = out.selection.region_start_ms;
  p.region_end_ms = out.selection.region_end_ms;
  p.like_speedup = out.fit.like_speedup;
  p.like_slowdown = out.fit.like_slowdown;
  p.idle = {math::mean(idle_values), std::sqrt(idle_var),
            static_cast<int>(idle_values.size())};
  p.kl_norm = out.screen.kl_norm;
  p.window_ms = config.window_ms;
  p.hop_ms = config.hop_ms;
  p.config_hash = config_hash(config);
  p.values_speedup = std::move(values_su);
  p.values_slowdown = std::move(values_sd);
  return out;
}

}  // namespace neuroline::calibration
