#include "neuroline/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "neuroline/errors.hpp"
#include "neuroline/mathutil.hpp"

namespace neuroline::augment {

namespace {

double softplus(double x) {
  // log(1 + e^x) without overflow.
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                  : std::exp(x) / (1.0 + std::exp(x));
}

// Forward pass retaining pre-activations and activations for backprop.
struct ForwardCache {
  std::vector<std::vector<double>> acts;  // acts[0] = input
  std::vector<std::vector<double>> zs;    // pre-activation per layer
};

void forward(const MlpNet& net, std::span<const double> input,
             ForwardCache& cache) {
  const int layers = net.layer_count();
  cache.acts.assign(static_cast<std::size_t>(layers) + 1, {});
  cache.zs.assign(static_cast<std::size_t>(layers), {});
  cache.acts[0].assign(input.begin(), input.end());
  for (int l = 0; l < layers; ++l) {
    const int in = net.sizes[static_cast<std::size_t>(l)];
    const int out = net.sizes[static_cast<std::size_t>(l) + 1];
    auto& z = cache.zs[static_cast<std::size_t>(l)];
    z.assign(static_cast<std::size_t>(out), 0.0);
    const auto& w = net.weights[static_cast<std::size_t>(l)];
    const auto& b = net.biases[static_cast<std::size_t>(l)];
    const auto& a = cache.acts[static_cast<std::size_t>(l)];
    for (int o = 0; o < out; ++o) {
      double acc = b[static_cast<std::size_t>(o)];
      for (int i = 0; i < in; ++i) {
        acc += w[static_cast<std::size_t>(o * in + i)] *
               a[static_cast<std::size_t>(i)];
      }
      z[static_cast<std::size_t>(o)] = acc;
    }
    auto& next = cache.acts[static_cast<std::size_t>(l) + 1];
    next.assign(static_cast<std::size_t>(out), 0.0);
    const bool hidden = l + 1 < layers;
    for (int o = 0; o < out; ++o) {
      const double v = z[static_cast<std::size_t>(o)];
      next[static_cast<std::size_t>(o)] =
          hidden ? (v > 0.0 ? v : net.leak * v) : v;  // output stays linear
    }
  }
}

// Backward from dLoss/d(output pre-activation); accumulates parameter
// gradients (when grads != nullptr) and returns dLoss/d(input).
std::vector<double> backward(const MlpNet& net, const ForwardCache& cache,
                             std::vector<double> delta, GradBuf* grads) {
  const int layers = net.layer_count();
  for (int l = layers - 1; l >= 0; --l) {
    const int in = net.sizes[static_cast<std::size_t>(l)];
    const int out = net.sizes[static_cast<std::size_t>(l) + 1];
    const auto& a = cache.acts[static_cast<std::size_t>(l)];
    const auto& w = net.weights[static_cast<std::size_t>(l)];
    if (grads) {
      auto& gw = grads->w[static_cast<std::size_t>(l)];
      auto& gb = grads->b[static_cast<std::size_t>(l)];
      for (int o = 0; o < out; ++o) {
        gb[static_cast<std::size_t>(o)] += delta[static_cast<std::size_t>(o)];
        for (int i = 0; i < in; ++i) {
          gw[static_cast<std::size_t>(o * in + i)] +=
              delta[static_cast<std::size_t>(o)] * a[static_cast<std::size_t>(i)];
        }
      }
    }
    std::vector<double> prev(static_cast<std::size_t>(in), 0.0);
    for (int i = 0; i < in; ++i) {
      double acc = 0.0;
      for (int o = 0; o < out; ++o) {
        acc += w[static_cast<std::size_t>(o * in + i)] *
               delta[static_cast<std::size_t>(o)];
      }
      prev[static_cast<std::size_t>(i)] = acc;
    }
    if (l > 0) {
      // Chain through the hidden leaky rectifier of layer l-1.
      const auto& z = cache.zs[static_cast<std::size_t>(l) - 1];
      for (int i = 0; i < in; ++i) {
        prev[static_cast<std::size_t>(i)] *=
            z[static_cast<std::size_t>(i)] > 0.0 ? 1.0 : net.leak;
      }
    }
    delta = std::move(prev);
  }
  return delta;
}

}  // namespace

MlpNet MlpNet::make(std::vector<int> sizes, bool logistic_output) {
  if (sizes.size() < 2) {
    throw Error(ErrorKind::Config, "MlpNet: need at least one layer");
  }
  for (int s : sizes) {
    if (s <= 0) throw Error(ErrorKind::Config, "MlpNet: layer size <= 0");
  }
  MlpNet net;
  net.sizes = std::move(sizes);
  net.logistic_output = logistic_output;
  const int layers = net.layer_count();
  net.weights.resize(static_cast<std::size_t>(layers));
  net.biases.resize(static_cast<std::size_t>(layers));
  for (int l = 0; l < layers; ++l) {
    const auto in = static_cast<std::size_t>(net.sizes[static_cast<std::size_t>(l)]);
    const auto out =
        static_cast<std::size_t>(net.sizes[static_cast<std::size_t>(l) + 1]);
    net.weights[static_cast<std::size_t>(l)].assign(in * out, 0.0);
    net.biases[static_cast<std::size_t>(l)].assign(out, 0.0);
  }
  return net;
}

void MlpNet::init_params(Rng& rng) {
  for (int l = 0; l < layer_count(); ++l) {
    const double in = sizes[static_cast<std::size_t>(l)];
    const double out = sizes[static_cast<std::size_t>(l) + 1];
    const double bound = std::sqrt(6.0 / (in + out));
    for (auto& v : weights[static_cast<std::size_t>(l)]) {
      v = rng.uniform(-bound, bound);
    }
    for (auto& v : biases[static_cast<std::size_t>(l)]) v = 0.0;
  }
}

std::size_t MlpNet::param_count() const {
  std::size_t n = 0;
  for (const auto& w : weights) n += w.size();
  for (const auto& b : biases) n += b.size();
  return n;
}

double MlpNet::forward_logit(std::span<const double> input) const {
  if (static_cast<int>(input.size()) != input_size()) {
    throw Error(ErrorKind::Config, "MlpNet: input size mismatch");
  }
  ForwardCache cache;
  forward(*this, input, cache);
  return cache.acts.back()[0];
}

double MlpNet::forward_scalar(std::span<const double> input) const {
  const double o = forward_logit(input);
  return logistic_output ? sigmoid(o) : o;
}

MlpNet default_generator() { return MlpNet::make({kLatentDim, 16, 16, 1}, false); }

MlpNet default_discriminator() { return MlpNet::make({1, 16, 16, 1}, true); }

const char* loss_mode_name(LossMode m) {
  return m == LossMode::CrossEntropy ? "cross_entropy" : "stat_matched";
}

void GanConfig::validate() const {
  if (epochs < 0) throw Error(ErrorKind::Config, "GanConfig: epochs < 0");
  if (batch_size < 4) throw Error(ErrorKind::Config, "GanConfig: batch_size < 4");
  if (!(learning_rate > 0.0)) {
    throw Error(ErrorKind::Config, "GanConfig: learning_rate <= 0");
  }
  if (lambda_stat < 0.0) {
    throw Error(ErrorKind::Config, "GanConfig: lambda_stat < 0");
  }
}

GradBuf GradBuf::zeros_like(const MlpNet& net) {
  GradBuf g;
  g.w.resize(net.weights.size());
  g.b.resize(net.biases.size());
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    g.w[l].assign(net.weights[l].size(), 0.0);
    g.b[l].assign(net.biases[l].size(), 0.0);
  }
  return g;
}

double d_step_loss(const MlpNet& d, std::span<const double> real_batch,
                   std::span<const double> fake_batch, GradBuf* grads) {
  const double inv_real = 1.0 / static_cast<double>(real_batch.size());
  const double inv_fake = 1.0 / static_cast<double>(fake_batch.size());
  double loss = 0.0;
  ForwardCache cache;
  for (double x : real_batch) {
    forward(d, std::span<const double>(&x, 1), cache);
    const double o = cache.acts.back()[0];
    loss += inv_real * softplus(-o);
    if (grads) {
      backward(d, cache, {inv_real * (sigmoid(o) - 1.0)}, grads);
    }
  }
  for (double y : fake_batch) {
    forward(d, std::span<const double>(&y, 1), cache);
    const double o = cache.acts.back()[0];
    loss += inv_fake * softplus(o);
    if (grads) {
      backward(d, cache, {inv_fake * sigmoid(o)}, grads);
    }
  }
  return loss;
}

ShapeStatsGrad shape_stats_with_grad(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 4) {
    throw Error(ErrorKind::Size, "shape_stats_with_grad: need >= 4 values");
  }
  ShapeStatsGrad out;
  for (auto& g : out.d) g.assign(n, 0.0);

  // Sort permutation (value-then-index keeps ties deterministic).
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] != values[b] ? values[a] < values[b] : a < b;
  });

  const double nd = static_cast<double>(n);

  // Linear-interpolation quantile and its subgradient through the two
  // participating order statistics.
  auto quantile_with_grad = [&](double p, std::vector<double>& grad,
                                double sign) {
    const double h = p * (nd - 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= n) {
      grad[order[n - 1]] += sign;
      return values[order[n - 1]];
    }
    const double frac = h - static_cast<double>(lo);
    grad[order[lo]] += sign * (1.0 - frac);
    grad[order[lo + 1]] += sign * frac;
    return values[order[lo]] + frac * (values[order[lo + 1]] - values[order[lo]]);
  };

  out.value.median = quantile_with_grad(0.5, out.d[0], 1.0);
  const double q75 = quantile_with_grad(0.75, out.d[1], 1.0);
  const double q25 = quantile_with_grad(0.25, out.d[1], -1.0);
  out.value.iqr = q75 - q25;

  const double m = math::mean(values);
  double mad = 0.0;
  double sign_sum = 0.0;
  for (double v : values) {
    mad += std::abs(v - m);
    sign_sum += v > m ? 1.0 : (v < m ? -1.0 : 0.0);
  }
  mad /= nd;
  out.value.mad = mad;
  for (std::size_t j = 0; j < n; ++j) {
    const double sj =
        values[j] > m ? 1.0 : (values[j] < m ? -1.0 : 0.0);
    out.d[2][j] = sj / nd - sign_sum / (nd * nd);
  }

  const double m2 = math::central_moment(values, 2);
  const double m3 = math::central_moment(values, 3);
  const double m4 = math::central_moment(values, 4);
  if (m2 > 0.0) {
    out.value.skewness = m3 / std::pow(m2, 1.5);
    out.value.kurtosis_excess = m4 / (m2 * m2) - 3.0;
    const double m2_15 = std::pow(m2, 1.5);
    const double m2_25 = std::pow(m2, 2.5);
    for (std::size_t j = 0; j < n; ++j) {
      const double dj = values[j] - m;
      const double dm2 = 2.0 / nd * dj;
      const double dm3 = 3.0 / nd * (dj * dj - m2);
      const double dm4 = 4.0 / nd * (dj * dj * dj - m3);
      out.d[3][j] = dm3 / m2_15 - 1.5 * m3 / m2_25 * dm2;
      out.d[4][j] = dm4 / (m2 * m2) - 2.0 * m4 / (m2 * m2 * m2) * dm2;
    }
  }
  return out;
}

StatTarget make_stat_target(std::span<const double> real_values,
                            double lambda) {
  StatTarget t;
  t.real_stats = stats::shape_stats(real_values);
  t.scale = std::max(t.real_stats.iqr, 1e-9);
  t.lambda = lambda;
  return t;
}

GLoss g_step_loss(const MlpNet& g, const MlpNet& d,
                  std::span<const std::vector<double>> latents,
                  const StatTarget* stat, GradBuf* g_grads) {
  const std::size_t batch = latents.size();
  if (batch == 0) throw Error(ErrorKind::Size, "g_step_loss: empty batch");
  const double inv_b = 1.0 / static_cast<double>(batch);

  // Generator forward for the whole batch (caches retained for backprop).
  std::vector<ForwardCache> g_caches(batch);
  std::vector<double> y(batch);
  for (std::size_t j = 0; j < batch; ++j) {
    forward(g, latents[j], g_caches[j]);
    y[j] = g_caches[j].acts.back()[0];
  }

  GLoss loss;
  std::vector<double> dy(batch, 0.0);

  // Cross-entropy part through the (frozen) discriminator.
  ForwardCache d_cache;
  for (std::size_t j = 0; j < batch; ++j) {
    forward(d, std::span<const double>(&y[j], 1), d_cache);
    const double o = d_cache.acts.back()[0];
    loss.cross_entropy += inv_b * softplus(-o);
    if (g_grads) {
      const auto din =
          backward(d, d_cache, {inv_b * (sigmoid(o) - 1.0)}, nullptr);
      dy[j] += din[0];
    }
  }

  // Stat-matching part on the generated batch.
  if (stat) {
    const auto sg = shape_stats_with_grad(y);
    const double synth[5] = {sg.value.median, sg.value.iqr, sg.value.mad,
                             sg.value.skewness, sg.value.kurtosis_excess};
    const double real[5] = {stat->real_stats.median, stat->real_stats.iqr,
                            stat->real_stats.mad, stat->real_stats.skewness,
                            stat->real_stats.kurtosis_excess};
    for (int k = 0; k < 5; ++k) {
      const double gap = (synth[k] - real[k]) / stat->scale;
      loss.stat += stat->lambda * gap * gap;
      if (g_grads) {
        const double coef = stat->lambda * 2.0 * gap / stat->scale;
        for (std::size_t j = 0; j < batch; ++j) {
          dy[j] += coef * sg.d[static_cast<std::size_t>(k)][j];
        }
      }
    }
  }

  if (g_grads) {
    for (std::size_t j = 0; j < batch; ++j) {
      backward(g, g_caches[j], {dy[j]}, g_grads);
    }
  }
  return loss;
}

// ---------------------------------------------------------------------------
// Training.

namespace {

struct Adam {
  double lr;
  double b1 = 0.9;
  double b2 = 0.999;
  double eps = 1e-8;
  int t = 0;
  GradBuf m;
  GradBuf v;

  explicit Adam(const MlpNet& net, double lr_in)
      : lr(lr_in), m(GradBuf::zeros_like(net)), v(GradBuf::zeros_like(net)) {}

  void update(MlpNet& net, const GradBuf& g) {
    ++t;
    const double bc1 = 1.0 - std::pow(b1, t);
    const double bc2 = 1.0 - std::pow(b2, t);
    auto apply = [&](std::vector<double>& p, const std::vector<double>& grad,
                     std::vector<double>& mm, std::vector<double>& vv) {
      for (std::size_t i = 0; i < p.size(); ++i) {
        mm[i] = b1 * mm[i] + (1.0 - b1) * grad[i];
        vv[i] = b2 * vv[i] + (1.0 - b2) * grad[i] * grad[i];
        p[i] -= lr * (mm[i] / bc1) / (std::sqrt(vv[i] / bc2) + eps);
      }
    };
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
      apply(net.weights[l], g.w[l], m.w[l], v.w[l]);
      apply(net.biases[l], g.b[l], m.b[l], v.b[l]);
    }
  }
};

void zero(GradBuf& g) {
  for (auto& w : g.w) std::fill(w.begin(), w.end(), 0.0);
  for (auto& b : g.b) std::fill(b.begin(), b.end(), 0.0);
}

std::vector<double> draw_latent(Rng& rng) {
  std::vector<double> z(kLatentDim);
  for (auto& v : z) v = rng.normal();
  return z;
}

}  // namespace

TrainedGan train_gan(std::span<const double> real_values,
                     const GanConfig& config) {
  config.validate();
  if (real_values.size() < 16) {
    throw Error(ErrorKind::Size, "train_gan: need >= 16 real values");
  }
  for (double v : real_values) {
    if (!std::isfinite(v)) {
      throw Error(ErrorKind::Data, "train_gan: non-finite real value");
    }
  }

  Rng rng(config.seed);
  TrainedGan out;
  out.generator = default_generator();
  out.discriminator = default_discriminator();
  out.generator.init_params(rng);
  out.discriminator.init_params(rng);

  StatTarget stat_target;
  const bool use_stat = config.loss_mode == LossMode::StatMatched;
  if (use_stat) {
    stat_target = make_stat_target(real_values, config.lambda_stat);
  }

  auto& report = out.report;
  report.loss_mode = config.loss_mode;
  report.epochs = config.epochs;
  report.real_stats = stats::shape_stats(real_values);

  Adam d_opt(out.discriminator, config.learning_rate);
  Adam g_opt(out.generator, config.learning_rate);
  GradBuf d_grads = GradBuf::zeros_like(out.discriminator);
  GradBuf g_grads = GradBuf::zeros_like(out.generator);

  const std::size_t n_real = real_values.size();
  const auto batch = static_cast<std::size_t>(config.batch_size);
  MlpNet g_checkpoint = out.generator;
  MlpNet d_checkpoint = out.discriminator;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    // Real minibatch: cycle through the sample in order.
    std::vector<double> real_batch(batch);
    for (std::size_t j = 0; j < batch; ++j) {
      real_batch[j] =
          real_values[(static_cast<std::size_t>(epoch) * batch + j) % n_real];
    }

    // Discriminator step.
    std::vector<double> fake_batch(batch);
    for (std::size_t j = 0; j < batch; ++j) {
      const auto z = draw_latent(rng);
      fake_batch[j] = out.generator.forward_scalar(z);
    }
    zero(d_grads);
    const double d_loss =
        d_step_loss(out.discriminator, real_batch, fake_batch, &d_grads);

    // Generator step on fresh latents.
    std::vector<std::vector<double>> latents(batch);
    for (auto& z : latents) z = draw_latent(rng);
    zero(g_grads);
    const GLoss g_loss =
        g_step_loss(out.generator, out.discriminator, latents,
                    use_stat ? &stat_target : nullptr, &g_grads);

    if (!std::isfinite(d_loss) || !std::isfinite(g_loss.total())) {
      out.generator = g_checkpoint;
      out.discriminator = d_checkpoint;
      report.aborted = true;
      break;
    }
    g_checkpoint = out.generator;
    d_checkpoint = out.discriminator;

    d_opt.update(out.discriminator, d_grads);
    g_opt.update(out.generator, g_grads);

    report.d_loss.push_back(d_loss);
    report.g_loss.push_back(g_loss.cross_entropy);
    report.stat_loss.push_back(g_loss.stat);
    report.completed_epochs = epoch + 1;
  }

  // Final statistics on a fresh evaluation batch.
  const auto synth =
      generate(out.generator, 1000, config.seed ^ 0x9e3779b97f4a7c15ull);
  report.synth_stats = stats::shape_stats(synth);
  const double scale = std::max(report.real_stats.iqr, 1e-9);
  const double real[5] = {report.real_stats.median, report.real_stats.iqr,
                          report.real_stats.mad, report.real_stats.skewness,
                          report.real_stats.kurtosis_excess};
  const double got[5] = {report.synth_stats.median, report.synth_stats.iqr,
                         report.synth_stats.mad, report.synth_stats.skewness,
                         report.synth_stats.kurtosis_excess};
  for (int k = 0; k < 5; ++k) {
    report.gaps[static_cast<std::size_t>(k)] = std::abs(got[k] - real[k]);
    report.normalized_gaps[static_cast<std::size_t>(k)] =
        report.gaps[static_cast<std::size_t>(k)] / scale;
  }
  return out;
}

std::vector<double> generate(const MlpNet& generator, int n,
                             std::uint64_t seed) {
  if (n <= 0) throw Error(ErrorKind::Size, "generate: n must be > 0");
  Rng rng(seed);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (auto& v : out) {
    const auto z = draw_latent(rng);
    v = generator.forward_scalar(z);
  }
  return out;
}

std::pair<TrainedGan, TrainedGan> compare_losses(
    std::span<const double> real_values, const GanConfig& cross_entropy_config,
    const GanConfig& stat_matched_config) {
  if (cross_entropy_config.loss_mode != LossMode::CrossEntropy ||
      stat_matched_config.loss_mode != LossMode::StatMatched) {
    throw Error(ErrorKind::Config, "compare_losses: configs must pair CE/stat");
  }
  if (cross_entropy_config.epochs != stat_matched_config.epochs) {
    throw Error(ErrorKind::Config,
                "compare_losses: epochs must match across loss modes");
  }
  if (cross_entropy_config.seed != stat_matched_config.seed) {
    throw Error(ErrorKind::Config,
                "compare_losses: seeds must match across loss modes");
  }
  return {train_gan(real_values, cross_entropy_config),
          train_gan(real_values, stat_matched_config)};
}

}  // namespace neuroline::augment
