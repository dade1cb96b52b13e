#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pimpc/errors.hpp"
#include "pimpc/loss.hpp"
#include "pimpc/nn.hpp"
#include "pimpc/optimizer.hpp"
#include "test_util.hpp"

using namespace pimpc;
using namespace pimpc::testutil;

TEST_CASE("balanced classes with gamma 0 reduce to plain cross-entropy") {
  Rng rng(3);
  Tape tape;
  Tensor logits = random_tensor({8, 3}, rng);
  Tensor probs = tape.softmax_rows(logits);
  std::vector<int> labels = {0, 1, 2, 0, 1, 2, 0, 1};  // last class short
  std::vector<int> mask = {0, 1, 2, 3, 4, 5};          // balanced on the mask

  LossConfig cfg;
  cfg.focal_gamma = 0.0;
  Tensor loss = class_balanced_focal_ce(tape, probs, labels, mask, 3, cfg);

  double plain = 0.0;
  for (int i : mask) plain += -std::log(probs(i, labels[i]));
  plain /= mask.size();
  CHECK(loss.item() == doctest::Approx(plain).epsilon(1e-12));
}

TEST_CASE("perfect predictions give zero loss") {
  Tape tape;
  Tensor probs = Tensor::from_values({2, 2}, {1.0, 0.0, 0.0, 1.0});
  std::vector<int> labels = {0, 1};
  std::vector<int> mask = {0, 1};
  LossConfig cfg;
  Tensor loss = class_balanced_focal_ce(tape, probs, labels, mask, 2, cfg);
  CHECK(loss.item() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("imbalanced counts: hand-evaluated focal loss") {
  // Counts (9, 1) => beta = (10/18, 10/2); uniform predictions p = 0.5.
  Tape tape;
  Tensor probs = Tensor::full({10, 2}, 0.5);
  std::vector<int> labels(10, 0);
  labels[9] = 1;
  std::vector<int> mask(10);
  for (int i = 0; i < 10; ++i) mask[i] = i;

  LossConfig cfg;
  cfg.focal_gamma = 2.5;
  const auto beta = class_balance_weights(labels, mask, 2, cfg);
  CHECK(beta[0] == doctest::Approx(10.0 / 18.0));
  CHECK(beta[1] == doctest::Approx(5.0));

  Tensor loss = class_balanced_focal_ce(tape, probs, labels, mask, 2, cfg);
  const double focal = std::pow(0.5, 2.5) * std::log(2.0);
  const double expect = (9.0 * beta[0] + beta[1]) / 10.0 * focal;
  CHECK(loss.item() == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("effective-number weights are decreasing in count") {
  std::vector<int> labels = {0, 0, 0, 0, 0, 0, 1, 1, 2};
  std::vector<int> mask = {0, 1, 2, 3, 4, 5, 6, 7, 8};
  LossConfig cfg;
  cfg.class_balance = ClassBalance::EffectiveNumber;
  const auto beta = class_balance_weights(labels, mask, 3, cfg);
  CHECK(beta[0] < beta[1]);
  CHECK(beta[1] < beta[2]);
  CHECK(beta[0] + beta[1] + beta[2] == doctest::Approx(3.0));
}

TEST_CASE("empty mask throws") {
  Tape tape;
  Tensor probs = Tensor::full({2, 2}, 0.5);
  std::vector<int> labels = {0, 1};
  CHECK_THROWS_AS(class_balanced_focal_ce(tape, probs, labels, {}, 2, {}),
                  DataError);
}

TEST_CASE("total loss composition and ablation") {
  Tape tape;
  Tensor class_loss = Tensor::scalar(0.7);
  Tensor weights = Tensor::from_values(
      {2, 3}, {0.5, 0.3, 0.2, 0.1, 0.7, 0.2});
  std::vector<Tensor> cons = {Tensor::scalar(0.2), Tensor::scalar(0.4),
                              Tensor::scalar(0.6)};

  LossConfig only_class;
  only_class.lambda_physics = 0.0;
  CHECK(total_loss(tape, class_loss, cons, weights, only_class).item() ==
        doctest::Approx(0.7));

  LossConfig both;
  both.lambda_class = 1.0;
  both.lambda_physics = 2.0;
  // Mean weights: (0.3, 0.5, 0.2).
  const double physics = 0.3 * 0.2 + 0.5 * 0.4 + 0.2 * 0.6;
  CHECK(total_loss(tape, class_loss, cons, weights, both).item() ==
        doctest::Approx(0.7 + 2.0 * physics).epsilon(1e-12));

  LossConfig zero_class;
  zero_class.lambda_class = 0.0;
  std::vector<Tensor> zeros = {Tensor::scalar(0.0), Tensor::scalar(0.0),
                               Tensor::scalar(0.0)};
  CHECK(total_loss(tape, Tensor::scalar(0.0), zeros, weights, zero_class)
            .item() == doctest::Approx(0.0));

  LossConfig with_entropy = zero_class;
  with_entropy.lambda_entropy = 0.01;
  const double entropy = 0.3 * std::log(0.3) + 0.5 * std::log(0.5) +
                         0.2 * std::log(0.2);
  CHECK(total_loss(tape, Tensor::scalar(0.0), zeros, weights, with_entropy)
            .item() == doctest::Approx(0.01 * entropy).epsilon(1e-12));

  LossConfig degenerate;
  degenerate.lambda_class = 0.0;
  degenerate.lambda_physics = 0.0;
  CHECK_THROWS_AS(total_loss(tape, class_loss, cons, weights, degenerate),
                  ConfigError);
}

TEST_CASE("adamw: no-op on zero gradients without decay") {
  ParamRegistry reg;
  Tensor p = reg.create("w.weight", {2, 2});
  Rng rng(5);
  glorot_init(reg, rng);
  const auto before = p.values();
  OptimConfig cfg;
  cfg.weight_decay = 0.0;
  AdamW opt(reg, cfg);
  reg.zero_grad();
  opt.step(0);
  CHECK(p.values() == before);
}

TEST_CASE("gradient clipping scales to the requested norm") {
  ParamRegistry reg;
  Tensor p = reg.create("w.weight", {1, 2});
  p.grad()[0] = 6.0;
  p.grad()[1] = 8.0;  // norm 10
  OptimConfig cfg;
  cfg.clip_norm = 1.0;
  AdamW opt(reg, cfg);
  CHECK(opt.clip_gradients() == doctest::Approx(10.0));
  CHECK(p.grad()[0] == doctest::Approx(0.6));
  CHECK(p.grad()[1] == doctest::Approx(0.8));
}

TEST_CASE("single-parameter adamw step matches the closed form") {
  ParamRegistry reg;
  Tensor p = reg.create("w.weight", {1, 1});
  p.values()[0] = 1.0;
  p.grad()[0] = 0.5;

  OptimConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.weight_decay = 0.01;
  cfg.schedule = LrSchedule::Constant;
  AdamW opt(reg, cfg);
  opt.step(0);

  // Hand evaluation: m = 0.05, v = 2.5e-4; mhat = 0.5, vhat = 2.5e-4 /
  // (1 - 0.999) = 0.25; update = lr (mhat / (sqrt(vhat) + eps) + wd p).
  const double mhat = 0.5;
  const double vhat = 0.25;
  const double expect =
      1.0 - 0.1 * (mhat / (std::sqrt(vhat) + 1e-8) + 0.01 * 1.0);
  CHECK(p.values()[0] == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("cosine schedule endpoints") {
  ParamRegistry reg;
  reg.create("w.weight", {1, 1});
  OptimConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.epochs = 100;
  AdamW opt(reg, cfg);
  CHECK(opt.lr_at(0) == doctest::Approx(1e-3));
  CHECK(opt.lr_at(50) == doctest::Approx(0.5e-3));
  CHECK(opt.lr_at(100) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("invalid optimizer configs are rejected") {
  ParamRegistry reg;
  reg.create("w.weight", {1, 1});
  OptimConfig bad_lr;
  bad_lr.learning_rate = 0.0;
  CHECK_THROWS_AS(AdamW(reg, bad_lr), ConfigError);
  OptimConfig bad_patience;
  bad_patience.patience = 0;
  CHECK_THROWS_AS(AdamW(reg, bad_patience), ConfigError);
}
