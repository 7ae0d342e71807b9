// Finite-difference gradient verification helpers for the GAN losses,
// shared by the unit and acceptance suites.
#pragma once

#include <cmath>
#include <vector>

#include "neuroline/augment.hpp"
#include "neuroline/rng.hpp"

namespace gan_check {

using neuroline::Rng;
using neuroline::augment::GradBuf;
using neuroline::augment::MlpNet;
using neuroline::augment::StatTarget;

struct CheckResult {
  double max_rel_err = 0.0;
  int checked = 0;
};

inline double rel_err(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), 1.0});
}

// Random net with non-degenerate biases so the loss surface is generic.
inline MlpNet random_net(Rng& rng, std::vector<int> sizes, bool logistic) {
  MlpNet net = MlpNet::make(std::move(sizes), logistic);
  net.init_params(rng);
  for (auto& layer : net.biases) {
    for (auto& b : layer) b = rng.normal(0.0, 0.3);
  }
  return net;
}

// Evaluation points too close to an activation kink or a sort boundary are
// excluded: the loss is only piecewise differentiable there.
inline bool near_kink(const MlpNet& net, std::span<const double> input,
                      double margin) {
  std::vector<double> a(input.begin(), input.end());
  for (int l = 0; l < net.layer_count(); ++l) {
    const int in = net.sizes[static_cast<std::size_t>(l)];
    const int out = net.sizes[static_cast<std::size_t>(l) + 1];
    std::vector<double> z(static_cast<std::size_t>(out));
    for (int o = 0; o < out; ++o) {
      double acc = net.biases[static_cast<std::size_t>(l)][static_cast<std::size_t>(o)];
      for (int i = 0; i < in; ++i) {
        acc += net.weights[static_cast<std::size_t>(l)]
                          [static_cast<std::size_t>(o * in + i)] *
               a[static_cast<std::size_t>(i)];
      }
      z[static_cast<std::size_t>(o)] = acc;
    }
    if (l + 1 < net.layer_count()) {
      for (double v : z) {
        if (std::abs(v) < margin) return true;
      }
    }
    a.resize(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
      a[i] = l + 1 < net.layer_count()
                 ? (z[i] > 0.0 ? z[i] : net.leak * z[i])
                 : z[i];
    }
  }
  return false;
}

inline bool batch_near_stat_kink(std::span<const double> y, double margin) {
  std::vector<double> sorted(y.begin(), y.end());
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i] - sorted[i - 1] < margin) return true;  // sort boundary
  }
  double mean = 0.0;
  for (double v : sorted) mean += v;
  mean /= static_cast<double>(sorted.size());
  for (double v : sorted) {
    if (std::abs(v - mean) < margin) return true;  // MAD kink
  }
  return false;
}

template <typename LossFn>
CheckResult check_grads(MlpNet& net, const GradBuf& analytic, LossFn loss,
                        double step = 1e-5) {
  CheckResult result;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    auto probe = [&](std::vector<double>& params, const std::vector<double>& ga) {
      for (std::size_t i = 0; i < params.size(); ++i) {
        const double saved = params[i];
        params[i] = saved + step;
        const double hi = loss();
        params[i] = saved - step;
        const double lo = loss();
        params[i] = saved;
        const double numeric = (hi - lo) / (2.0 * step);
        result.max_rel_err = std::max(result.max_rel_err, rel_err(ga[i], numeric));
        ++result.checked;
      }
    };
    probe(net.weights[l], analytic.w[l]);
    probe(net.biases[l], analytic.b[l]);
  }
  return result;
}

struct GanGradCase {
  MlpNet g;
  MlpNet d;
  std::vector<double> real_batch;
  std::vector<std::vector<double>> latents;
  std::vector<double> fake_batch;
};

// Draws a generic evaluation point, rejecting kink-adjacent configurations.
inline GanGradCase make_case(Rng& rng, bool with_stat) {
  using neuroline::augment::g_step_loss;
  for (int attempt = 0; attempt < 100; ++attempt) {
    GanGradCase c;
    const int latent = 2 + static_cast<int>(rng.below(3));
    c.g = random_net(rng, {latent, static_cast<int>(3 + rng.below(4)),
                           static_cast<int>(3 + rng.below(4)), 1},
                     false);
    c.d = random_net(rng, {1, static_cast<int>(3 + rng.below(5)),
                           static_cast<int>(3 + rng.below(4)), 1},
                     true);
    const std::size_t batch = 8 + rng.below(9);
    c.real_batch.resize(batch);
    for (auto& v : c.real_batch) v = rng.normal(0.5, 1.0);
    c.latents.resize(batch);
    for (auto& z : c.latents) {
      z.resize(static_cast<std::size_t>(latent));
      for (auto& v : z) v = rng.normal();
    }

    bool bad = false;
    c.fake_batch.resize(batch);
    for (std::size_t j = 0; j < batch && !bad; ++j) {
      if (near_kink(c.g, c.latents[j], 1e-3)) bad = true;
      c.fake_batch[j] = c.g.forward_logit(c.latents[j]);
      if (near_kink(c.d, std::span<const double>(&c.fake_batch[j], 1), 1e-3)) {
        bad = true;
      }
    }
    for (std::size_t j = 0; j < batch && !bad; ++j) {
      if (near_kink(c.d, std::span<const double>(&c.real_batch[j], 1), 1e-3)) {
        bad = true;
      }
    }
    if (!bad && with_stat && batch_near_stat_kink(c.fake_batch, 1e-3)) {
      bad = true;
    }
    if (!bad) return c;
  }
  throw std::runtime_error("could not find a kink-free gradient case");
}

}  // namespace gan_check
