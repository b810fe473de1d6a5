#include "lcsum/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "lcsum/checkpoint.hpp"
#include "lcsum/errors.hpp"
#include "lcsum/rng.hpp"

namespace lcsum {
namespace fs = std::filesystem;

void SimulatorParams::validate() const {
  LCSUM_REQUIRE(lambda_sentences > 0, "simulator: lambda must be positive");
  LCSUM_REQUIRE(mean_sentence_length > 0, "simulator: mean sentence length must be positive");
  LCSUM_REQUIRE(gamma_alpha > 0, "simulator: gamma alpha must be positive");
  LCSUM_REQUIRE(!target_capacities.empty(), "simulator: target capacities must be non-empty");
  for (auto c : target_capacities) LCSUM_REQUIRE(c > 0, "simulator: capacities must be positive");
  LCSUM_REQUIRE(min_items >= 1 && min_items <= max_items, "simulator: bad item-count clamp");
}

nlohmann::json SimulatorParams::to_json() const {
  return {{"lambda_sentences", lambda_sentences},
          {"gamma_alpha", gamma_alpha},
          {"mean_sentence_length", mean_sentence_length},
          {"target_capacities", target_capacities},
          {"seed", seed},
          {"min_items", min_items},
          {"max_items", max_items}};
}

SimulatorParams SimulatorParams::cnewsum(std::uint64_t seed) {
  SimulatorParams p;
  p.lambda_sentences = 9.3;
  p.mean_sentence_length = 69.7;
  p.target_capacities = {75, 100, 125, 150, 175, 200, 225};
  p.seed = seed;
  return p;
}

SimulatorParams SimulatorParams::cnndm(std::uint64_t seed) {
  SimulatorParams p;
  p.lambda_sentences = 17.4;
  p.mean_sentence_length = 121.1;
  p.target_capacities = {300, 350, 400, 450, 500, 550, 600};
  p.seed = seed;
  return p;
}

void LabeledInstance::validate() const {
  const std::size_t n = profits.size();
  LCSUM_REQUIRE(n >= 1, "record has no items");
  LCSUM_REQUIRE(sizes.size() == n && raw_sizes.size() == n && label.size() == n,
                "record fields differ in length");
  LCSUM_REQUIRE(capacity >= 0, "record capacity must be non-negative");
  const double total = std::accumulate(profits.begin(), profits.end(), 0.0);
  LCSUM_REQUIRE(std::abs(total - 1.0) <= 1e-6, "record profits do not sum to 1");
  std::int64_t used = 0;
  for (std::size_t i = 0; i < n; ++i) {
    LCSUM_REQUIRE(profits[i] >= 0, "record profit is negative");
    LCSUM_REQUIRE(raw_sizes[i] >= 1, "record raw size below 1");
    LCSUM_REQUIRE(label[i] <= 1, "record label is not binary");
    if (capacity > 0) {
      LCSUM_REQUIRE(std::abs(sizes[i] - static_cast<double>(raw_sizes[i]) / static_cast<double>(capacity)) <= 1e-9,
                    "record size is not raw_size / capacity");
    }
    if (label[i]) used += raw_sizes[i];
  }
  LCSUM_REQUIRE(used <= capacity, "record label exceeds capacity");
}

KnapsackInstance LabeledInstance::instance() const {
  return {profits, raw_sizes, capacity};
}

KnapsackInstance sample_instance(const SimulatorParams& params, std::uint64_t index) {
  params.validate();
  Rng rng(hash64(params.seed, index));
  const auto n = static_cast<std::size_t>(
      std::clamp<std::int64_t>(rng.poisson(params.lambda_sentences), params.min_items, params.max_items));
  KnapsackInstance inst;
  inst.sizes.reserve(n);
  inst.profits.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double len = rng.gamma(params.gamma_alpha, params.gamma_beta());
    inst.sizes.push_back(std::max<std::int64_t>(1, std::llround(len)));
  }
  for (std::size_t i = 0; i < n; ++i) inst.profits.push_back(rng.uniform());
  const auto pick = rng.uniform_int(0, static_cast<std::int64_t>(params.target_capacities.size()) - 1);
  inst.capacity = params.target_capacities[static_cast<std::size_t>(pick)];
  return inst;
}

LabeledInstance label_instance(const KnapsackInstance& instance, KnapsackSolver solver) {
  instance.validate();
  LabeledInstance rec;
  rec.solver = solver;
  rec.capacity = instance.capacity;
  rec.raw_sizes = instance.sizes;
  const double total = std::accumulate(instance.profits.begin(), instance.profits.end(), 0.0);
  const std::size_t n = instance.item_count();
  for (std::size_t i = 0; i < n; ++i) {
    rec.profits.push_back(total > 0 ? instance.profits[i] / total : 1.0 / static_cast<double>(n));
    rec.sizes.push_back(instance.capacity > 0
                            ? static_cast<double>(instance.sizes[i]) / static_cast<double>(instance.capacity)
                            : static_cast<double>(instance.sizes[i]));
  }
  // Scaling profits leaves the argmax unchanged; solving on the stored values
  // makes relabelling a record reproduce its label bit for bit.
  rec.label = solve(rec.instance(), solver).selected;
  return rec;
}

namespace {

// Field order fixed by the record format, so files are byte-stable.
std::string record_line(const LabeledInstance& r) {
  nlohmann::ordered_json j;
  j["profits"] = r.profits;
  j["sizes"] = r.sizes;
  j["raw_sizes"] = r.raw_sizes;
  j["capacity"] = r.capacity;
  std::vector<int> label(r.label.begin(), r.label.end());
  j["label"] = label;
  j["solver"] = to_string(r.solver);
  return j.dump();
}

}  // namespace

nlohmann::json to_json(const LabeledInstance& r) { return nlohmann::json::parse(record_line(r)); }

LabeledInstance labeled_instance_from_json(const nlohmann::json& j) {
  LabeledInstance r;
  try {
    r.profits = j.at("profits").get<std::vector<double>>();
    r.sizes = j.at("sizes").get<std::vector<double>>();
    r.raw_sizes = j.at("raw_sizes").get<std::vector<std::int64_t>>();
    r.capacity = j.at("capacity").get<std::int64_t>();
    for (int v : j.at("label").get<std::vector<int>>()) {
      LCSUM_REQUIRE(v == 0 || v == 1, "record label is not binary");
      r.label.push_back(static_cast<std::uint8_t>(v));
    }
    r.solver = parse_knapsack_solver(j.at("solver").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ContractError(std::string("malformed knapsack record: ") + e.what());
  }
  r.validate();
  return r;
}

DatasetPaths generate_dataset(std::size_t count, const SimulatorParams& params, KnapsackSolver solver,
                              const fs::path& out_dir) {
  LCSUM_REQUIRE(count >= 20, "generate_dataset: count must be at least 20");
  params.validate();
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  const std::size_t train_count = count * 95 / 100;
  std::string train, valid;
  for (std::size_t i = 0; i < count; ++i) {
    const LabeledInstance rec = label_instance(sample_instance(params, i), solver);
    std::string& dst = i < train_count ? train : valid;
    dst += record_line(rec);
    dst += '\n';
  }
  DatasetPaths paths{out_dir / "train.jsonl", out_dir / "valid.jsonl"};
  write_text_atomic(paths.train, train);
  write_text_atomic(paths.valid, valid);
  return paths;
}

std::vector<LabeledInstance> load_dataset(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset " + path.string());
  std::vector<LabeledInstance> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(labeled_instance_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const ContractError& e) {
      throw ContractError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace lcsum
