#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "pimpc/errors.hpp"
#include "pimpc/nn.hpp"
#include "test_util.hpp"

using namespace pimpc;
using namespace pimpc::testutil;

TEST_CASE("registry rejects duplicates and keeps insertion order") {
  ParamRegistry reg;
  reg.create("a.weight", {2, 3});
  reg.create("b.weight", {1, 1});
  CHECK_THROWS_AS(reg.create("a.weight", {2, 3}), ConfigError);
  CHECK(reg.items()[0].first == "a.weight");
  CHECK(reg.items()[1].first == "b.weight");
  CHECK(reg.total_parameters() == 7);
}

TEST_CASE("glorot init: deterministic, bounded, seed-sensitive") {
  auto build = [](std::uint64_t seed) {
    ParamRegistry reg;
    Linear lin(reg, "layer", 20, 30);
    Rng rng(seed);
    glorot_init(reg, rng);
    return lin.weight.values();
  };
  auto a = build(5), b = build(5), c = build(6);
  CHECK(a == b);
  CHECK(a != c);
  const double bound = std::sqrt(6.0 / (20 + 30));
  for (double w : a) CHECK(std::abs(w) <= bound);

  ParamRegistry reg;
  Linear lin(reg, "layer", 4, 4);
  Rng rng(1);
  glorot_init(reg, rng);
  for (double v : lin.bias.values()) CHECK(v == 0.0);
}

TEST_CASE("phase projection: degenerate input stays finite") {
  ParamRegistry reg;
  PhaseProjection proj(reg, "proj", 5, 8);
  Rng rng(3);
  glorot_init(reg, rng);
  Tape tape;
  Tensor zero = Tensor::zeros({4, 5});
  Rng drop(1);
  Tensor out = proj.forward(tape, zero, 0.0, true, drop);
  CHECK(out.all_finite());
  CHECK(out.rows() == 4);
  CHECK(out.cols() == 8);
}

TEST_CASE("phase projection: eval equals train when dropout is off") {
  ParamRegistry reg;
  PhaseProjection proj(reg, "proj", 6, 8);
  Rng rng(11);
  glorot_init(reg, rng);
  Tensor x = random_tensor({5, 6}, rng);
  Tape tape;
  Rng d1(7), d2(7);
  Tensor train_out = proj.forward(tape, x, 0.0, true, d1);
  Tensor eval_out = proj.forward(tape, x, 0.3, false, d2);
  for (std::size_t i = 0; i < train_out.size(); ++i) {
    CHECK(train_out.values()[i] == eval_out.values()[i]);
  }
}

TEST_CASE("phase projection gradcheck") {
  ParamRegistry reg;
  PhaseProjection proj(reg, "proj", 4, 6);
  Rng rng(13);
  glorot_init(reg, rng);
  Tensor x = random_tensor({5, 4}, rng);
  Tensor cot = random_tensor({5, 6}, rng);
  Rng drop(1);
  auto prog = [&](Tape& t) {
    return t.sum(t.mul(proj.forward(t, x, 0.0, false, drop), cot));
  };
  std::vector<Tensor> leaves = {x, proj.lin.weight, proj.lin.bias,
                                proj.ln_gain, proj.ln_bias};
  CHECK(gradcheck(prog, leaves) < 1e-5);
}

TEST_CASE("mlp heads apply their output activation") {
  ParamRegistry reg;
  MlpHead softplus_head(reg, "sp", 3, 4, 2, MlpHead::Output::Softplus);
  MlpHead tanh_head(reg, "th", 3, 4, 2, MlpHead::Output::Tanh);
  MlpHead sig_head(reg, "sg", 3, 4, 2, MlpHead::Output::Sigmoid);
  Rng rng(17);
  glorot_init(reg, rng);
  Tensor x = random_tensor({6, 3}, rng, 2.0);
  Tape tape;
  for (double v : softplus_head.forward(tape, x).values()) CHECK(v > 0.0);
  for (double v : tanh_head.forward(tape, x).values()) {
    CHECK(v > -1.0);
    CHECK(v < 1.0);
  }
  for (double v : sig_head.forward(tape, x).values()) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("checkpoint save/load round-trips exactly") {
  namespace fs = std::filesystem;
  const std::string path = (fs::temp_directory_path() / "pimpc_ckpt.json").string();
  ParamRegistry reg;
  MlpHead head(reg, "head", 4, 5, 3, MlpHead::Output::Identity);
  Rng rng(23);
  glorot_init(reg, rng);
  reg.save(path);

  ParamRegistry other;
  MlpHead head2(other, "head", 4, 5, 3, MlpHead::Output::Identity);
  other.load(path);
  for (std::size_t i = 0; i < reg.items().size(); ++i) {
    CHECK(reg.items()[i].second.values() == other.items()[i].second.values());
  }

  ParamRegistry fresh;  // load into an empty registry creates entries
  fresh.load(path);
  CHECK(fresh.total_parameters() == reg.total_parameters());

  ParamRegistry wrong;
  MlpHead head3(wrong, "head", 4, 6, 3, MlpHead::Output::Identity);
  CHECK_THROWS_AS(wrong.load(path), DataError);
  fs::remove(path);
}
