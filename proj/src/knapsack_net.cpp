#include "lcsum/knapsack_net.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <spdlog/spdlog.h>

#include "lcsum/checkpoint.hpp"
#include "lcsum/optim.hpp"

namespace lcsum {

void KnapsackNetConfig::validate() const { encoder().validate(); }

nlohmann::json KnapsackNetConfig::to_json() const {
  return {{"model", "knapsack_net"}, {"layers", layers}, {"heads", heads}, {"width", width},
          {"ffn", ffn},             {"seed", seed},     {"input_features", 2}};
}

KnapsackNetConfig KnapsackNetConfig::from_json(const nlohmann::json& j) {
  KnapsackNetConfig c;
  try {
    if (j.value("model", std::string("knapsack_net")) != "knapsack_net") {
      throw ContractError("checkpoint is not a knapsack net: model=" + j.value("model", std::string()));
    }
    c.layers = j.at("layers").get<int>();
    c.heads = j.at("heads").get<int>();
    c.width = j.at("width").get<int>();
    c.ffn = j.at("ffn").get<int>();
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ContractError(std::string("bad knapsack net config: ") + e.what());
  }
  c.validate();
  return c;
}

KnapsackNet::KnapsackNet(const KnapsackNetConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(cfg_.seed);
  Linear::init(store_, "kt.input", 2, cfg_.width, rng);
  TransformerEncoder::init(store_, "kt.encoder", cfg_.encoder(), rng);
  Linear::init(store_, "kt.output", cfg_.width, 1, rng);
  bind();
}

void KnapsackNet::bind() {
  input_ = Linear::bind(store_, "kt.input");
  encoder_ = TransformerEncoder::bind(store_, "kt.encoder", cfg_.encoder());
  output_ = Linear::bind(store_, "kt.output");
}

KnapsackNet KnapsackNet::load(const std::filesystem::path& dir) {
  KnapsackNet net(KnapsackNetConfig::from_json(load_checkpoint_config(dir)));
  load_checkpoint_weights(dir, net.store_);
  return net;
}

void KnapsackNet::save(const std::filesystem::path& dir, const nlohmann::json& extra) const {
  nlohmann::json cfg = cfg_.to_json();
  if (extra.is_object()) cfg.update(extra);
  save_checkpoint(dir, cfg, store_);
}

Tensor KnapsackNet::logits(const Tensor& features, const SegmentLayout& layout) const {
  LCSUM_REQUIRE(features.rank() == 2 && features.cols() == 2, "knapsack net expects [m, 2] features");
  LCSUM_REQUIRE(features.rows() == layout.total(), "knapsack net: features do not match the layout");
  Tensor h = encoder_(input_(features), layout);
  return reshape(output_(h), {features.rows()});
}

KnapsackNetOutput KnapsackNet::forward(std::span<const double> profits, std::span<const double> sizes) const {
  LCSUM_REQUIRE(profits.size() == sizes.size() && !profits.empty(), "knapsack net: bad instance");
  const double total = std::accumulate(profits.begin(), profits.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-3) spdlog::warn("knapsack net input profits sum to {:.6f}, expected 1", total);
  std::vector<Real> feat;
  for (std::size_t i = 0; i < profits.size(); ++i) {
    feat.push_back(static_cast<Real>(profits[i]));
    feat.push_back(static_cast<Real>(sizes[i]));
  }
  NoGradGuard ng;
  const int n = static_cast<int>(profits.size());
  Tensor s = scores(Tensor::constant({n, 2}, std::move(feat)), SegmentLayout::single(n));
  KnapsackNetOutput out;
  out.scores = s.to_vector();
  for (Real v : out.scores) out.hard.push_back(v >= Real(0.5) ? 1 : 0);
  return out;
}

KnapsackBatch pack_records(std::span<const LabeledInstance* const> records) {
  KnapsackBatch b;
  std::vector<Real> feat;
  std::vector<int> lengths;
  for (const LabeledInstance* r : records) {
    for (std::size_t i = 0; i < r->item_count(); ++i) {
      feat.push_back(static_cast<Real>(r->profits[i]));
      feat.push_back(static_cast<Real>(r->sizes[i]));
      b.labels.push_back(static_cast<Real>(r->label[i]));
    }
    lengths.push_back(static_cast<int>(r->item_count()));
  }
  b.layout = SegmentLayout::from_lengths(lengths);
  b.features = Tensor::constant({b.layout.total(), 2}, std::move(feat));
  return b;
}

namespace {

template <class Fn>
void for_batches(std::span<const LabeledInstance> records, int batch_size, Fn&& fn) {
  std::vector<const LabeledInstance*> ptrs;
  for (std::size_t start = 0; start < records.size(); start += static_cast<std::size_t>(batch_size)) {
    ptrs.clear();
    const std::size_t stop = std::min(records.size(), start + static_cast<std::size_t>(batch_size));
    for (std::size_t i = start; i < stop; ++i) ptrs.push_back(&records[i]);
    fn(pack_records(ptrs));
  }
}

}  // namespace

double scheduled_lr(const KnapsackTrainOptions& opts, long step, long total_steps) {
  if (opts.warmup_steps > 0 && step < opts.warmup_steps) {
    return opts.lr * static_cast<double>(step) / opts.warmup_steps;
  }
  const long decay_steps = total_steps - opts.warmup_steps;
  if (decay_steps <= 0 || opts.final_lr_fraction == 1) return opts.lr;
  const double t = std::clamp(static_cast<double>(step - opts.warmup_steps) / decay_steps, 0.0, 1.0);
  return opts.lr * (1 - t * (1 - opts.final_lr_fraction));
}

double knapsack_val_loss(const KnapsackNet& net, std::span<const LabeledInstance> records, int batch_size) {
  LCSUM_REQUIRE(!records.empty(), "knapsack validation set is empty");
  NoGradGuard ng;
  double total = 0;
  std::size_t items = 0;
  for_batches(records, batch_size, [&](const KnapsackBatch& b) {
    const Tensor loss = bce_with_logits(net.logits(b.features, b.layout), b.labels);
    total += static_cast<double>(loss.item()) * static_cast<double>(b.labels.size());
    items += b.labels.size();
  });
  return total / static_cast<double>(items);
}

KnapsackTrainReport train_knapsack_net(KnapsackNet& net, std::span<const LabeledInstance> train,
                                       std::span<const LabeledInstance> valid, const KnapsackTrainOptions& opts) {
  LCSUM_REQUIRE(opts.epochs >= 0, "epochs must be non-negative");
  LCSUM_REQUIRE(opts.batch_size >= 1, "batch size must be positive");
  LCSUM_REQUIRE(opts.lr > 0, "learning rate must be positive");
  LCSUM_REQUIRE(opts.final_lr_fraction > 0 && opts.final_lr_fraction <= 1, "final lr fraction must lie in (0, 1]");
  LCSUM_REQUIRE(!train.empty() || opts.epochs == 0, "knapsack training set is empty");
  KnapsackTrainReport report;
  report.initial_val_loss = valid.empty() ? 0 : knapsack_val_loss(net, valid);
  report.final_val_loss = report.initial_val_loss;

  Adam adam(net.params().tensors());
  const std::size_t per_epoch = (train.size() + static_cast<std::size_t>(opts.batch_size) - 1) /
                                static_cast<std::size_t>(opts.batch_size);
  const long total_steps = static_cast<long>(per_epoch) * opts.epochs;
  Rng rng(Rng(opts.seed).derive(hash_string("knapsack-train")));
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<const LabeledInstance*> batch;
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(opts.batch_size)) {
      batch.clear();
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(opts.batch_size));
      for (std::size_t i = start; i < stop; ++i) batch.push_back(&train[order[i]]);
      const KnapsackBatch b = pack_records(batch);
      adam.zero_grad();
      const Tensor loss = bce_with_logits(net.logits(b.features, b.layout), b.labels);
      const double value = loss.item();
      if (!std::isfinite(value)) {
        throw NumericError("knapsack training diverged at epoch " + std::to_string(epoch) + ", step " +
                           std::to_string(report.steps) + " (loss " + std::to_string(value) + ")");
      }
      backward(loss);
      ++report.steps;
      adam.step(scheduled_lr(opts, report.steps, total_steps));
      if (opts.on_log && opts.log_every > 0 && report.steps % opts.log_every == 0) {
        opts.on_log(epoch, report.steps, value);
      }
    }
    if (!valid.empty()) {
      report.final_val_loss = knapsack_val_loss(net, valid);
      report.epoch_val_loss.push_back(report.final_val_loss);
      if (!std::isfinite(report.final_val_loss)) {
        throw NumericError("knapsack validation loss is non-finite after epoch " + std::to_string(epoch));
      }
    }
  }
  return report;
}

std::vector<std::vector<std::uint8_t>> predict_knapsack_net(const KnapsackNet& net,
                                                            std::span<const LabeledInstance> records,
                                                            int batch_size) {
  NoGradGuard ng;
  std::vector<std::vector<std::uint8_t>> out;
  for_batches(records, batch_size, [&](const KnapsackBatch& b) {
    const Tensor p = net.scores(b.features, b.layout);
    for (int s = 0; s < b.layout.count(); ++s) {
      std::vector<std::uint8_t> hard;
      for (int i = b.layout.begin(s); i < b.layout.end(s); ++i) {
        hard.push_back(p[static_cast<std::size_t>(i)] >= Real(0.5) ? 1 : 0);
      }
      out.push_back(std::move(hard));
    }
  });
  return out;
}

SelectionMetrics evaluate_knapsack_net(const KnapsackNet& net, std::span<const LabeledInstance> records) {
  std::vector<std::vector<std::uint8_t>> labels;
  labels.reserve(records.size());
  for (const auto& r : records) labels.push_back(r.label);
  return eval_metrics(predict_knapsack_net(net, records), labels);
}

}  // namespace lcsum
