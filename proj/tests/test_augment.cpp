#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "gan_check.hpp"
#include "neuroline/augment.hpp"
#include "neuroline/rng.hpp"

using namespace neuroline;
using augment::GanConfig;
using augment::GradBuf;
using augment::LossMode;
using augment::MlpNet;

TEST_CASE("zero-parameter nets: generator emits the bias, discriminator 0.5") {
  const MlpNet g = augment::default_generator();
  const std::vector<double> z(augment::kLatentDim, 1.7);
  CHECK(g.forward_scalar(z) == 0.0);

  const MlpNet d = augment::default_discriminator();
  for (double x : {-100.0, -1.0, 0.0, 3.5, 1e6}) {
    CHECK(d.forward_scalar(std::span<const double>(&x, 1)) == 0.5);
  }
}

TEST_CASE("generate: errors, constants, determinism") {
  const MlpNet g = augment::default_generator();
  CHECK_THROWS_AS((void)augment::generate(g, 0, 1), Error);
  CHECK_THROWS_AS((void)augment::generate(g, -3, 1), Error);
  const auto constant = augment::generate(g, 32, 9);
  for (double v : constant) CHECK(v == 0.0);

  Rng rng(2);
  MlpNet g2 = augment::default_generator();
  g2.init_params(rng);
  CHECK(augment::generate(g2, 64, 5) == augment::generate(g2, 64, 5));
  CHECK(augment::generate(g2, 64, 5) != augment::generate(g2, 64, 6));
}

TEST_CASE("discriminator output stays inside (0,1)") {
  Rng rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    const MlpNet d = gan_check::random_net(rng, {1, 16, 16, 1}, true);
    for (int k = 0; k < 50; ++k) {
      const double x = rng.normal(0.0, 20.0);
      const double out = d.forward_scalar(std::span<const double>(&x, 1));
      CHECK(out > 0.0);
      CHECK(out < 1.0);
    }
  }
}

TEST_CASE("shape stats with grad: values match stats::shape_stats") {
  Rng rng(4);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> y(16 + rng.below(49));
    for (auto& v : y) v = rng.normal(3.0, 2.0);
    const auto sg = augment::shape_stats_with_grad(y);
    const auto expected = stats::shape_stats(y);
    CHECK(sg.value.median == doctest::Approx(expected.median).epsilon(1e-12));
    CHECK(sg.value.iqr == doctest::Approx(expected.iqr).epsilon(1e-12));
    CHECK(sg.value.mad == doctest::Approx(expected.mad).epsilon(1e-12));
    CHECK(sg.value.skewness == doctest::Approx(expected.skewness).epsilon(1e-12));
    CHECK(sg.value.kurtosis_excess ==
          doctest::Approx(expected.kurtosis_excess).epsilon(1e-12));
  }
}

TEST_CASE("shape stats with grad: subgradients match central differences") {
  Rng rng(6);
  const double h = 1e-6;
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<double> y(24);
    for (auto& v : y) v = rng.normal(0.0, 2.0);
    if (gan_check::batch_near_stat_kink(y, 1e-4)) continue;
    const auto sg = augment::shape_stats_with_grad(y);
    for (std::size_t j = 0; j < y.size(); j += 3) {
      auto stat_at = [&](double value) {
        std::vector<double> mod = y;
        mod[j] = value;
        const auto s = stats::shape_stats(mod);
        return std::array<double, 5>{s.median, s.iqr, s.mad, s.skewness,
                                     s.kurtosis_excess};
      };
      const auto hi = stat_at(y[j] + h);
      const auto lo = stat_at(y[j] - h);
      for (int k = 0; k < 5; ++k) {
        const double numeric = (hi[static_cast<std::size_t>(k)] -
                                lo[static_cast<std::size_t>(k)]) /
                               (2.0 * h);
        const double analytic = sg.d[static_cast<std::size_t>(k)][j];
        CHECK(gan_check::rel_err(analytic, numeric) < 1e-4);
      }
    }
  }
}

TEST_CASE("gradient check: discriminator loss") {
  Rng rng(8);
  double worst = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    auto c = gan_check::make_case(rng, false);
    GradBuf grads = GradBuf::zeros_like(c.d);
    augment::d_step_loss(c.d, c.real_batch, c.fake_batch, &grads);
    const auto result = gan_check::check_grads(c.d, grads, [&]() {
      return augment::d_step_loss(c.d, c.real_batch, c.fake_batch, nullptr);
    });
    worst = std::max(worst, result.max_rel_err);
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("gradient check: generator loss, both modes") {
  Rng rng(9);
  for (bool with_stat : {false, true}) {
    CAPTURE(with_stat);
    double worst = 0.0;
    for (int rep = 0; rep < 8; ++rep) {
      auto c = gan_check::make_case(rng, with_stat);
      augment::StatTarget target;
      if (with_stat) {
        std::vector<double> real(64);
        for (auto& v : real) v = rng.normal(1.0, 2.0);
        target = augment::make_stat_target(real, 1.0);
      }
      const augment::StatTarget* stat = with_stat ? &target : nullptr;
      GradBuf grads = GradBuf::zeros_like(c.g);
      augment::g_step_loss(c.g, c.d, c.latents, stat, &grads);
      const auto result = gan_check::check_grads(c.g, grads, [&]() {
        return augment::g_step_loss(c.g, c.d, c.latents, stat, nullptr).total();
      });
      worst = std::max(worst, result.max_rel_err);
    }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("stat target is invariant to shuffling the real sample") {
  Rng rng(10);
  std::vector<double> real(200);
  for (auto& v : real) v = rng.normal(5.0, 3.0);
  const auto base = augment::make_stat_target(real, 1.0);
  auto shuffled = real;
  std::shuffle(shuffled.begin(), shuffled.end(), rng.engine());
  const auto again = augment::make_stat_target(shuffled, 1.0);
  CHECK(base.real_stats.median == again.real_stats.median);
  CHECK(base.real_stats.iqr == again.real_stats.iqr);
  CHECK(base.real_stats.mad == doctest::Approx(again.real_stats.mad).epsilon(1e-12));
  CHECK(base.scale == again.scale);
}

TEST_CASE("training: identical config and seed give bit-identical curves") {
  Rng rng(12);
  std::vector<double> real(200);
  for (auto& v : real) v = rng.normal(10.0, 2.0);
  GanConfig config;
  config.epochs = 40;
  config.seed = 77;
  config.loss_mode = LossMode::StatMatched;
  const auto a = augment::train_gan(real, config);
  const auto b = augment::train_gan(real, config);
  CHECK(a.report.d_loss == b.report.d_loss);
  CHECK(a.report.g_loss == b.report.g_loss);
  CHECK(a.report.stat_loss == b.report.stat_loss);
  CHECK(a.generator == b.generator);
  CHECK(a.report.d_loss.size() == 40);
}

TEST_CASE("training: epochs = 0 reports untrained constant-output stats") {
  Rng rng(13);
  std::vector<double> real(100);
  for (auto& v : real) v = rng.normal(10.0, 2.0);
  GanConfig config;
  config.epochs = 0;
  const auto result = augment::train_gan(real, config);
  CHECK(result.report.d_loss.empty());
  CHECK(result.report.synth_stats.iqr > 0.0);  // init weights, not all-zero
  CHECK(result.report.completed_epochs == 0);
}

TEST_CASE("training: too little data is a size error") {
  std::vector<double> real(10, 1.0);
  CHECK_THROWS_AS((void)augment::train_gan(real, GanConfig{}), Error);
}

TEST_CASE("compare_losses: mismatched epochs or seeds are config errors") {
  Rng rng(14);
  std::vector<double> real(64);
  for (auto& v : real) v = rng.normal(0.0, 1.0);
  GanConfig ce;
  ce.loss_mode = LossMode::CrossEntropy;
  ce.epochs = 10;
  GanConfig st;
  st.loss_mode = LossMode::StatMatched;
  st.epochs = 20;
  CHECK_THROWS_AS((void)augment::compare_losses(real, ce, st), Error);
  st.epochs = 10;
  st.seed = 5;
  CHECK_THROWS_AS((void)augment::compare_losses(real, ce, st), Error);
  st.seed = ce.seed;
  const auto [a, b] = augment::compare_losses(real, ce, st);
  CHECK(a.report.loss_mode == LossMode::CrossEntropy);
  CHECK(b.report.loss_mode == LossMode::StatMatched);
  CHECK(a.report.d_loss.size() == b.report.d_loss.size());
}

TEST_CASE("training: stat-matched mode pulls the statistics toward the data") {
  Rng rng(15);
  std::vector<double> real(500);
  for (auto& v : real) v = rng.normal(10.0, 2.0);
  GanConfig config;
  config.loss_mode = LossMode::StatMatched;
  config.epochs = 600;
  config.seed = 3;
  const auto result = augment::train_gan(real, config);
  CHECK_FALSE(result.report.aborted);
  // Location must be essentially recovered even in a short run.
  CHECK(result.report.normalized_gaps[0] < 0.3);  // median
  CHECK(result.report.synth_stats.median ==
        doctest::Approx(10.0).epsilon(0.12));
}
