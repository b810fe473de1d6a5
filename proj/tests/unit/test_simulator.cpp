#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lcsum/rng.hpp"
#include "lcsum/simulator.hpp"

using namespace lcsum;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t line_count(const fs::path& p) {
  const auto s = slurp(p);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST_CASE("samples are determined by seed and index") {
  auto params = SimulatorParams::cnewsum(42);
  auto a = sample_instance(params, 17);
  auto b = sample_instance(params, 17);
  CHECK(a.profits == b.profits);
  CHECK(a.sizes == b.sizes);
  CHECK(a.capacity == b.capacity);
  auto c = sample_instance(params, 18);
  CHECK(c.profits != a.profits);
}

TEST_CASE("sentence count and length means match the presets") {
  auto cn = SimulatorParams::cnewsum(1);
  double count_sum = 0;
  for (int i = 0; i < 100000; ++i) count_sum += static_cast<double>(sample_instance(cn, i).item_count());
  const double mean_count = count_sum / 100000;
  CHECK(mean_count >= 9.1);
  CHECK(mean_count <= 9.5);

  auto dm = SimulatorParams::cnndm(1);
  Rng rng(5);
  double len_sum = 0;
  for (int i = 0; i < 100000; ++i) {
    len_sum += static_cast<double>(std::max<std::int64_t>(1, std::llround(rng.gamma(2.0, dm.gamma_beta()))));
  }
  const double mean_len = len_sum / 100000;
  CHECK(mean_len >= 118);
  CHECK(mean_len <= 124);
}

TEST_CASE("counts are clamped and capacities come from the target set") {
  auto p = SimulatorParams::cnewsum(3);
  for (int i = 0; i < 2000; ++i) {
    auto inst = sample_instance(p, i);
    CHECK(inst.item_count() >= 2);
    CHECK(inst.item_count() <= 64);
    CHECK(std::find(p.target_capacities.begin(), p.target_capacities.end(), inst.capacity) !=
          p.target_capacities.end());
  }
}

TEST_CASE("uniform profits pass a KS check") {
  Rng rng(77);
  std::vector<double> xs(100000);
  for (auto& x : xs) x = rng.uniform();
  std::sort(xs.begin(), xs.end());
  double d = 0;
  const double n = static_cast<double>(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    d = std::max({d, std::abs(static_cast<double>(i + 1) / n - xs[i]), std::abs(xs[i] - static_cast<double>(i) / n)});
  }
  CHECK(d < 0.01);
}

TEST_CASE("labelling examples") {
  KnapsackInstance inst{{60, 100, 120}, {10, 20, 30}, 50};
  auto dp = label_instance(inst, KnapsackSolver::kDp);
  CHECK(dp.label == std::vector<std::uint8_t>{0, 1, 1});
  CHECK(dp.sizes[0] == doctest::Approx(0.2));
  CHECK(dp.profits[0] == doctest::Approx(60.0 / 280));
  auto gr = label_instance(inst, KnapsackSolver::kGreedyDensity);
  CHECK(gr.label == std::vector<std::uint8_t>{1, 1, 0});
  inst.capacity = 0;
  auto zero = label_instance(inst, KnapsackSolver::kDp);
  CHECK(zero.label == std::vector<std::uint8_t>{0, 0, 0});
}

TEST_CASE("dataset split, determinism and record invariants") {
  const fs::path dir = fs::temp_directory_path() / "lcsum_unit_sim";
  fs::remove_all(dir);
  auto p = SimulatorParams::cnewsum(42);
  auto paths = generate_dataset(100, p, KnapsackSolver::kDp, dir / "a");
  CHECK(line_count(paths.train) == 95);
  CHECK(line_count(paths.valid) == 5);

  auto big1 = generate_dataset(1000, p, KnapsackSolver::kGreedyDensity, dir / "b1");
  auto big2 = generate_dataset(1000, p, KnapsackSolver::kGreedyDensity, dir / "b2");
  CHECK(slurp(big1.train) == slurp(big2.train));
  CHECK(slurp(big1.valid) == slurp(big2.valid));

  for (const auto& path : {big1.train, big1.valid, paths.train}) {
    for (const auto& rec : load_dataset(path)) {
      double total = 0;
      for (double v : rec.profits) total += v;
      CHECK(std::abs(total - 1) <= 1e-6);
      CHECK(solve(rec.instance(), rec.solver).selected == rec.label);
    }
  }
  CHECK_THROWS_AS(generate_dataset(19, p, KnapsackSolver::kDp, dir / "c"), ContractError);
}

TEST_CASE("malformed records report their line") {
  const fs::path file = fs::temp_directory_path() / "lcsum_unit_bad.jsonl";
  std::ofstream(file) << R"({"profits":[0.5,0.5],"sizes":[0.1,0.1],"raw_sizes":[10,10],"capacity":100,"label":[1,1],"solver":"dp"})"
                      << "\n"
                      << R"({"profits":[0.2,0.2],"sizes":[0.1,0.1],"raw_sizes":[10,10],"capacity":100,"label":[1,1],"solver":"dp"})"
                      << "\n";
  try {
    load_dataset(file);
    FAIL("expected an error");
  } catch (const ContractError& e) {
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }
  CHECK_THROWS_AS(load_dataset(file.string() + ".missing"), IoError);
}
