#pragma once

// Transformer that maps a set of (profit, size) items to per-item selection
// probabilities, trained against exact or greedy solver labels.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "lcsum/knapsack.hpp"
#include "lcsum/nn.hpp"
#include "lcsum/simulator.hpp"

namespace lcsum {

struct KnapsackNetConfig {
  int layers = 4;
  int heads = 4;
  int width = 128;
  int ffn = 512;
  std::uint64_t seed = 42;

  void validate() const;
  TransformerConfig encoder() const { return {layers, heads, width, ffn}; }
  nlohmann::json to_json() const;
  static KnapsackNetConfig from_json(const nlohmann::json& j);
};

struct KnapsackNetOutput {
  std::vector<Real> scores;         // sigmoid outputs in (0, 1)
  std::vector<std::uint8_t> hard;   // scores >= 0.5
};

class KnapsackNet {
 public:
  explicit KnapsackNet(const KnapsackNetConfig& cfg);
  static KnapsackNet load(const std::filesystem::path& dir);
  void save(const std::filesystem::path& dir, const nlohmann::json& extra = {}) const;

  // features: [m, 2] rows of (profit, size), segments = instances.
  Tensor logits(const Tensor& features, const SegmentLayout& layout) const;
  Tensor scores(const Tensor& features, const SegmentLayout& layout) const {
    return sigmoid(logits(features, layout));
  }
  KnapsackNetOutput forward(std::span<const double> profits, std::span<const double> sizes) const;

  const KnapsackNetConfig& config() const { return cfg_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }

 private:
  void bind();

  KnapsackNetConfig cfg_;
  ParamStore store_;
  Linear input_, output_;
  TransformerEncoder encoder_;
};

// Packs records into (features [m,2], layout, labels).
struct KnapsackBatch {
  Tensor features;
  SegmentLayout layout;
  std::vector<Real> labels;
};
KnapsackBatch pack_records(std::span<const LabeledInstance* const> records);

struct KnapsackTrainOptions {
  int epochs = 3;
  double lr = 1e-4;
  int batch_size = 256;
  int warmup_steps = 0;          // linear warmup
  double final_lr_fraction = 1;  // then linear decay to lr * this at the last step
  std::uint64_t seed = 42;
  // Called with (epoch, step, train loss) every `log_every` steps.
  int log_every = 100;
  std::function<void(int, long, double)> on_log;
};

struct KnapsackTrainReport {
  double initial_val_loss = 0;
  double final_val_loss = 0;
  long steps = 0;
  std::vector<double> epoch_val_loss;
};

// Learning rate at 1-based `step` of `total_steps`.
double scheduled_lr(const KnapsackTrainOptions& opts, long step, long total_steps);

double knapsack_val_loss(const KnapsackNet& net, std::span<const LabeledInstance> records, int batch_size = 512);

// Trains in place. Throws NumericError if the loss becomes non-finite.
KnapsackTrainReport train_knapsack_net(KnapsackNet& net, std::span<const LabeledInstance> train,
                                       std::span<const LabeledInstance> valid, const KnapsackTrainOptions& opts);

std::vector<std::vector<std::uint8_t>> predict_knapsack_net(const KnapsackNet& net,
                                                            std::span<const LabeledInstance> records,
                                                            int batch_size = 512);
SelectionMetrics evaluate_knapsack_net(const KnapsackNet& net, std::span<const LabeledInstance> records);

}  // namespace lcsum
