#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "neuroline/rng.hpp"
#include "neuroline/stats.hpp"

namespace neuroline::augment {

/// Small fully connected net. Hidden layers use a leaky rectifier (slope 0.2);
/// the output layer is linear, optionally squashed by a logistic when
/// logistic_output is set (discriminator). weights[l] is row-major
/// (out x in).
struct MlpNet {
  std::vector<int> sizes;
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;
  bool logistic_output = false;
  double leak = 0.2;

  static MlpNet make(std::vector<int> sizes, bool logistic_output);
  void init_params(Rng& rng);

  int input_size() const { return sizes.front(); }
  int layer_count() const { return static_cast<int>(sizes.size()) - 1; }
  std::size_t param_count() const;

  /// Scalar forward pass (output size must be 1).
  double forward_scalar(std::span<const double> input) const;
  /// Pre-squash output, used for the numerically stable loss formulations.
  double forward_logit(std::span<const double> input) const;

  bool operator==(const MlpNet&) const = default;
};

/// Default architecture: generator latent 8 -> 16 -> 16 -> 1,
/// discriminator 1 -> 16 -> 16 -> 1 with logistic output.
inline constexpr int kLatentDim = 8;
MlpNet default_generator();
MlpNet default_discriminator();

enum class LossMode { CrossEntropy, StatMatched };

const char* loss_mode_name(LossMode m);

struct GanConfig {
  int epochs = 2000;
  int batch_size = 64;
  double learning_rate = 0.01;
  std::uint64_t seed = 0;
  LossMode loss_mode = LossMode::CrossEntropy;
  double lambda_stat = 1.0;

  void validate() const;
};

// ---------------------------------------------------------------------------
// Loss evaluation with analytic gradients (shared by training and the
// finite-difference checks).

struct GradBuf {
  std::vector<std::vector<double>> w;
  std::vector<std::vector<double>> b;

  static GradBuf zeros_like(const MlpNet& net);
};

/// Non-saturating GAN discriminator loss on one real/fake batch:
///   mean softplus(-o(real)) + mean softplus(o(fake)).
/// Accumulates dLoss/dparams into *grads when non-null.
double d_step_loss(const MlpNet& d, std::span<const double> real_batch,
                   std::span<const double> fake_batch, GradBuf* grads);

/// Five-statistic matching target; scale_real = max(IQR_real, 1e-9).
struct StatTarget {
  stats::ShapeStats real_stats;
  double scale = 1.0;
  double lambda = 1.0;
};

StatTarget make_stat_target(std::span<const double> real_values, double lambda);

struct GLoss {
  double cross_entropy = 0.0;
  double stat = 0.0;
  double total() const { return cross_entropy + stat; }
};

/// Generator loss on a batch of latents: non-saturating cross-entropy
/// mean softplus(-o(G(z))), plus, when `stat` is non-null,
/// lambda * sum over the five shape statistics of ((s_synth - s_real)/scale)^2
/// with median/IQR subgradients flowing through the batch's sort permutation.
GLoss g_step_loss(const MlpNet& g, const MlpNet& d,
                  std::span<const std::vector<double>> latents,
                  const StatTarget* stat, GradBuf* g_grads);

/// Shape statistics of a batch plus d(stat)/d(value) for every entry, in the
/// order {median, iqr, mad, skewness, kurtosis_excess}.
struct ShapeStatsGrad {
  stats::ShapeStats value;
  std::array<std::vector<double>, 5> d;
};

ShapeStatsGrad shape_stats_with_grad(std::span<const double> values);

// ---------------------------------------------------------------------------
// Training.

struct AugmentReport {
  LossMode loss_mode = LossMode::CrossEntropy;
  int epochs = 0;
  int completed_epochs = 0;
  bool aborted = false;  // non-finite loss; nets hold the last good checkpoint
  stats::ShapeStats real_stats;
  stats::ShapeStats synth_stats;  // on a fresh 1000-sample generated batch
  std::array<double, 5> gaps{};   // |synth - real| per statistic
  std::array<double, 5> normalized_gaps{};  // gap / scale_real
  std::vector<double> d_loss;     // per epoch
  std::vector<double> g_loss;     // cross-entropy part, per epoch
  std::vector<double> stat_loss;  // stat term, per epoch (zero in CE mode)
};

struct TrainedGan {
  MlpNet generator;
  MlpNet discriminator;
  AugmentReport report;
};

/// Alternating Adam updates, one discriminator and one generator step per
/// epoch, deterministic in (real_values, config) with batch-index-ascending
/// accumulation order.
TrainedGan train_gan(std::span<const double> real_values,
                     const GanConfig& config);

/// n forward passes on seeded standard-normal latents.
std::vector<double> generate(const MlpNet& generator, int n,
                             std::uint64_t seed);

/// Trains both loss modes with identical seed/epochs and returns the paired
/// results (CrossEntropy first). Mismatched epochs or seeds are a config
/// error.
std::pair<TrainedGan, TrainedGan> compare_losses(
    std::span<const double> real_values, const GanConfig& cross_entropy_config,
    const GanConfig& stat_matched_config);

}  // namespace neuroline::augment
