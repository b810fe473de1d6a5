#pragma once

// Parameter registry and the transformer building blocks shared by the
// knapsack network and the summarizer.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lcsum/rng.hpp"
#include "lcsum/tensor.hpp"

namespace lcsum {

// Named parameters in registration order. Copies share the underlying
// tensors, so a module bound twice to the same store shares weights.
class ParamStore {
 public:
  Tensor add(const std::string& name, Shape shape, std::vector<Real> init);
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  const std::vector<std::string>& names() const { return names_; }
  std::vector<Tensor> tensors() const;
  std::vector<Tensor> tensors_with_prefix(const std::string& prefix) const;
  std::size_t parameter_count() const;

  // Store whose tensors hold copies of the values and never collect gradients.
  ParamStore detached() const;
  void set_trainable(bool on);
  void zero_grad();
  // Order-sensitive hash of every value, for frozen-weight assertions.
  std::uint64_t checksum() const;

  // Merges entries of `other`; duplicate names are a contract violation.
  void merge(const ParamStore& other);

 private:
  std::vector<std::string> names_;
  std::map<std::string, Tensor> index_;
};

std::uint64_t checksum_values(std::span<const Real> values, std::uint64_t h = 0);

// U(-1/sqrt(fan_in), +1/sqrt(fan_in))
std::vector<Real> uniform_fan_in(Rng& rng, std::size_t count, int fan_in);

struct Linear {
  Tensor weight;  // [in, out]
  Tensor bias;    // [out]

  static void init(ParamStore& store, const std::string& prefix, int in, int out, Rng& rng);
  static Linear bind(const ParamStore& store, const std::string& prefix);
  Tensor operator()(const Tensor& x) const { return linear(x, weight, bias); }
};

struct LayerNorm {
  Tensor gain;
  Tensor bias;

  static void init(ParamStore& store, const std::string& prefix, int width);
  static LayerNorm bind(const ParamStore& store, const std::string& prefix);
  Tensor operator()(const Tensor& x) const { return layer_norm(x, gain, bias); }
};

struct TransformerConfig {
  int layers = 2;
  int heads = 4;
  int width = 128;
  int ffn = 512;

  void validate() const;
  nlohmann::json to_json() const;
  static TransformerConfig from_json(const nlohmann::json& j);
};

// Pre-layer-norm encoder: x += Attn(LN(x)); x += FFN(LN(x)); final LN.
class TransformerEncoder {
 public:
  static void init(ParamStore& store, const std::string& prefix, const TransformerConfig& cfg,
                   Rng& rng);
  static TransformerEncoder bind(const ParamStore& store, const std::string& prefix,
                                 const TransformerConfig& cfg);

  Tensor operator()(const Tensor& x, const SegmentLayout& layout) const;
  const TransformerConfig& config() const { return cfg_; }

 private:
  struct Block {
    LayerNorm ln_attn, ln_ffn;
    Linear q, k, v, o, ff_in, ff_out;
  };
  TransformerConfig cfg_;
  std::vector<Block> blocks_;
  LayerNorm ln_final_;
};

// Adds row `position within segment` of a learned table to every row.
Tensor add_positions(const Tensor& x, const Tensor& table, const SegmentLayout& layout);

}  // namespace lcsum
