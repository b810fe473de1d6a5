#include <doctest.h>

#include <filesystem>
#include <limits>

#include "lcsum/checkpoint.hpp"
#include "lcsum/knapsack_net.hpp"
#include "lcsum/rng.hpp"

using namespace lcsum;
namespace fs = std::filesystem;

namespace {

KnapsackNetConfig small_config() {
  KnapsackNetConfig c;
  c.layers = 2;
  c.heads = 2;
  c.width = 32;
  c.ffn = 64;
  return c;
}

std::vector<LabeledInstance> records(std::size_t count, KnapsackSolver solver, std::uint64_t seed = 42) {
  auto p = SimulatorParams::cnewsum(seed);
  std::vector<LabeledInstance> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(label_instance(sample_instance(p, i), solver));
  return out;
}

}  // namespace

TEST_CASE("knapsack net output matches the item count") {
  KnapsackNet net(small_config());
  Rng rng(1);
  for (int n : {2, 10, 64}) {
    std::vector<double> p(static_cast<std::size_t>(n), 1.0 / n), s(static_cast<std::size_t>(n));
    for (auto& x : s) x = rng.uniform();
    auto out = net.forward(p, s);
    CHECK(out.scores.size() == static_cast<std::size_t>(n));
    CHECK(out.hard.size() == static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < out.scores.size(); ++i) {
      CHECK(out.scores[i] > 0);
      CHECK(out.scores[i] < 1);
      CHECK(out.hard[i] == (out.scores[i] >= 0.5 ? 1 : 0));
    }
  }
}

TEST_CASE("knapsack net is permutation equivariant") {
  KnapsackNet net(small_config());
  std::vector<double> p{0.1, 0.5, 0.15, 0.25}, s{0.3, 0.6, 0.1, 0.2};
  std::vector<int> perm{2, 0, 3, 1};
  std::vector<double> pp, sp;
  for (int i : perm) {
    pp.push_back(p[static_cast<std::size_t>(i)]);
    sp.push_back(s[static_cast<std::size_t>(i)]);
  }
  auto a = net.forward(p, s);
  auto b = net.forward(pp, sp);
  for (std::size_t j = 0; j < perm.size(); ++j) {
    CHECK(b.scores[j] == doctest::Approx(a.scores[static_cast<std::size_t>(perm[j])]).epsilon(1e-5));
  }
}

TEST_CASE("zero-epoch training round-trips the initialisation") {
  KnapsackNet net(small_config());
  const auto before = net.params().checksum();
  auto data = records(40, KnapsackSolver::kDp);
  KnapsackTrainOptions opts;
  opts.epochs = 0;
  train_knapsack_net(net, data, data, opts);
  const fs::path dir = fs::temp_directory_path() / "lcsum_unit_kt0";
  fs::remove_all(dir);
  net.save(dir);
  auto loaded = KnapsackNet::load(dir);
  CHECK(loaded.params().checksum() == before);
  CHECK(loaded.config().width == 32);
}

TEST_CASE("loading a checkpoint into a different architecture fails") {
  const fs::path dir = fs::temp_directory_path() / "lcsum_unit_kt_mismatch";
  fs::remove_all(dir);
  KnapsackNet(small_config()).save(dir);
  nlohmann::json cfg = read_json_file(dir / "config.json");
  cfg["width"] = 64;
  cfg["ffn"] = 128;
  write_text_atomic(dir / "config.json", cfg.dump());
  CHECK_THROWS_AS(KnapsackNet::load(dir), ContractError);
  write_text_atomic(dir / "config.json", R"({"model":"summarizer"})");
  CHECK_THROWS_AS(KnapsackNet::load(dir), ContractError);
}

TEST_CASE("labels evaluated against themselves are perfect") {
  auto data = records(30, KnapsackSolver::kGreedyDensity);
  std::vector<std::vector<std::uint8_t>> labels;
  for (const auto& r : data) labels.push_back(r.label);
  auto m = eval_metrics(labels, labels);
  CHECK(m.error_rate == 0);
  CHECK(m.matched_rate == 1);
}

TEST_CASE("training is bit-reproducible and lowers validation loss") {
  auto train = records(120, KnapsackSolver::kGreedyDensity, 1);
  auto valid = records(40, KnapsackSolver::kGreedyDensity, 2);
  KnapsackTrainOptions opts;
  opts.epochs = 3;
  opts.batch_size = 16;
  opts.lr = 1e-3;
  KnapsackNet a(small_config()), b(small_config());
  auto ra = train_knapsack_net(a, train, valid, opts);
  auto rb = train_knapsack_net(b, train, valid, opts);
  CHECK(a.params().checksum() == b.params().checksum());
  CHECK(ra.final_val_loss == rb.final_val_loss);
  CHECK(ra.final_val_loss < ra.initial_val_loss);
  CHECK(ra.steps == 3 * 8);
}

TEST_CASE("overfitting a fixed set drives the error under one percent") {
  auto data = records(100, KnapsackSolver::kGreedyDensity, 5);
  KnapsackNetConfig cfg;
  cfg.layers = 2;
  cfg.heads = 4;
  cfg.width = 64;
  cfg.ffn = 256;
  KnapsackNet net(cfg);
  KnapsackTrainOptions opts;
  opts.epochs = 500;
  opts.batch_size = 100;
  opts.lr = 2e-3;
  opts.warmup_steps = 20;
  opts.final_lr_fraction = 0.1;
  train_knapsack_net(net, data, {}, opts);
  CHECK(evaluate_knapsack_net(net, data).error_rate <= 0.01);
}

TEST_CASE("non-finite weights abort training") {
  KnapsackNet net(small_config());
  Tensor w = net.params().get("kt.output.bias");
  w.mutable_data()[0] = std::numeric_limits<Real>::quiet_NaN();
  auto data = records(20, KnapsackSolver::kDp);
  KnapsackTrainOptions opts;
  opts.epochs = 1;
  CHECK_THROWS_AS(train_knapsack_net(net, data, {}, opts), NumericError);
}

TEST_CASE("learning-rate schedule") {
  KnapsackTrainOptions o;
  o.lr = 1.0;
  o.warmup_steps = 10;
  o.final_lr_fraction = 0.5;
  CHECK(scheduled_lr(o, 5, 110) == doctest::Approx(0.5));
  CHECK(scheduled_lr(o, 10, 110) == doctest::Approx(1.0));
  CHECK(scheduled_lr(o, 110, 110) == doctest::Approx(0.5));
}
