#include "lcsum/nn.hpp"

#include <cmath>
#include <cstring>

namespace lcsum {

Tensor ParamStore::add(const std::string& name, Shape shape, std::vector<Real> init) {
  if (contains(name)) throw ContractError("duplicate parameter name: " + name);
  Tensor t = Tensor::parameter(std::move(shape), std::move(init));
  names_.push_back(name);
  index_.emplace(name, t);
  return t;
}

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("unknown parameter: " + name);
  return it->second;
}

std::vector<Tensor> ParamStore::tensors() const {
  std::vector<Tensor> out;
  out.reserve(names_.size());
  for (const auto& n : names_) out.push_back(index_.at(n));
  return out;
}

std::vector<Tensor> ParamStore::tensors_with_prefix(const std::string& prefix) const {
  std::vector<Tensor> out;
  for (const auto& n : names_) {
    if (n.rfind(prefix, 0) == 0) out.push_back(index_.at(n));
  }
  return out;
}

std::size_t ParamStore::parameter_count() const {
  std::size_t total = 0;
  for (const auto& [_, t] : index_) total += t.size();
  return total;
}

ParamStore ParamStore::detached() const {
  ParamStore out;
  for (const auto& n : names_) {
    out.names_.push_back(n);
    out.index_.emplace(n, detach(index_.at(n)));
  }
  return out;
}

void ParamStore::set_trainable(bool on) {
  for (auto& [_, t] : index_) {
    Tensor copy = t;
    copy.set_requires_grad(on);
  }
}

void ParamStore::zero_grad() {
  for (auto& [_, t] : index_) {
    Tensor copy = t;
    copy.zero_grad();
  }
}

std::uint64_t checksum_values(std::span<const Real> values, std::uint64_t h) {
  for (Real v : values) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof(Real));
    h = hash64(h, bits);
  }
  return h;
}

std::uint64_t ParamStore::checksum() const {
  std::uint64_t h = 0;
  for (const auto& n : names_) h = checksum_values(index_.at(n).data(), hash64(h, hash_string(n)));
  return h;
}

void ParamStore::merge(const ParamStore& other) {
  for (const auto& n : other.names_) {
    if (contains(n)) throw ContractError("duplicate parameter name: " + n);
    names_.push_back(n);
    index_.emplace(n, other.index_.at(n));
  }
}

std::vector<Real> uniform_fan_in(Rng& rng, std::size_t count, int fan_in) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<Real> out(count);
  for (auto& v : out) v = static_cast<Real>(rng.uniform(-bound, bound));
  return out;
}

void Linear::init(ParamStore& store, const std::string& prefix, int in, int out, Rng& rng) {
  const auto n = static_cast<std::size_t>(in) * static_cast<std::size_t>(out);
  store.add(prefix + ".weight", {in, out}, uniform_fan_in(rng, n, in));
  store.add(prefix + ".bias", {out}, uniform_fan_in(rng, static_cast<std::size_t>(out), in));
}

Linear Linear::bind(const ParamStore& store, const std::string& prefix) {
  return {store.get(prefix + ".weight"), store.get(prefix + ".bias")};
}

void LayerNorm::init(ParamStore& store, const std::string& prefix, int width) {
  store.add(prefix + ".gain", {width}, std::vector<Real>(static_cast<std::size_t>(width), Real(1)));
  store.add(prefix + ".bias", {width}, std::vector<Real>(static_cast<std::size_t>(width), Real(0)));
}

LayerNorm LayerNorm::bind(const ParamStore& store, const std::string& prefix) {
  return {store.get(prefix + ".gain"), store.get(prefix + ".bias")};
}

void TransformerConfig::validate() const {
  LCSUM_REQUIRE(layers >= 1, "transformer needs at least one layer");
  LCSUM_REQUIRE(heads >= 1 && width % heads == 0, "transformer width must be divisible by heads");
  LCSUM_REQUIRE(ffn >= 1, "transformer ffn width must be positive");
}

nlohmann::json TransformerConfig::to_json() const {
  return {{"layers", layers}, {"heads", heads}, {"width", width}, {"ffn", ffn}};
}

TransformerConfig TransformerConfig::from_json(const nlohmann::json& j) {
  TransformerConfig c;
  c.layers = j.at("layers").get<int>();
  c.heads = j.at("heads").get<int>();
  c.width = j.at("width").get<int>();
  c.ffn = j.at("ffn").get<int>();
  c.validate();
  return c;
}

void TransformerEncoder::init(ParamStore& store, const std::string& prefix,
                              const TransformerConfig& cfg, Rng& rng) {
  cfg.validate();
  for (int l = 0; l < cfg.layers; ++l) {
    const std::string p = prefix + ".layers." + std::to_string(l);
    LayerNorm::init(store, p + ".ln_attn", cfg.width);
    Linear::init(store, p + ".attn.q", cfg.width, cfg.width, rng);
    Linear::init(store, p + ".attn.k", cfg.width, cfg.width, rng);
    Linear::init(store, p + ".attn.v", cfg.width, cfg.width, rng);
    Linear::init(store, p + ".attn.o", cfg.width, cfg.width, rng);
    LayerNorm::init(store, p + ".ln_ffn", cfg.width);
    Linear::init(store, p + ".ffn.in", cfg.width, cfg.ffn, rng);
    Linear::init(store, p + ".ffn.out", cfg.ffn, cfg.width, rng);
  }
  LayerNorm::init(store, prefix + ".ln_final", cfg.width);
}

TransformerEncoder TransformerEncoder::bind(const ParamStore& store, const std::string& prefix,
                                            const TransformerConfig& cfg) {
  TransformerEncoder enc;
  enc.cfg_ = cfg;
  for (int l = 0; l < cfg.layers; ++l) {
    const std::string p = prefix + ".layers." + std::to_string(l);
    enc.blocks_.push_back({LayerNorm::bind(store, p + ".ln_attn"), LayerNorm::bind(store, p + ".ln_ffn"),
                           Linear::bind(store, p + ".attn.q"), Linear::bind(store, p + ".attn.k"),
                           Linear::bind(store, p + ".attn.v"), Linear::bind(store, p + ".attn.o"),
                           Linear::bind(store, p + ".ffn.in"), Linear::bind(store, p + ".ffn.out")});
  }
  enc.ln_final_ = LayerNorm::bind(store, prefix + ".ln_final");
  return enc;
}

Tensor TransformerEncoder::operator()(const Tensor& x, const SegmentLayout& layout) const {
  Tensor h = x;
  for (const auto& b : blocks_) {
    const Tensor a = b.ln_attn(h);
    h = add(h, b.o(attention(b.q(a), b.k(a), b.v(a), layout, cfg_.heads)));
    const Tensor f = b.ln_ffn(h);
    h = add(h, b.ff_out(gelu(b.ff_in(f))));
  }
  return ln_final_(h);
}

Tensor add_positions(const Tensor& x, const Tensor& table, const SegmentLayout& layout) {
  std::vector<int> pos(static_cast<std::size_t>(layout.total()));
  const int max_pos = table.dim(0);
  for (int s = 0; s < layout.count(); ++s) {
    if (layout.length(s) > max_pos) {
      throw ContractError("segment of length " + std::to_string(layout.length(s)) +
                          " exceeds positional table of " + std::to_string(max_pos));
    }
    for (int r = layout.begin(s); r < layout.end(s); ++r) pos[static_cast<std::size_t>(r)] = r - layout.begin(s);
  }
  return add(x, take_rows(table, pos));
}

}  // namespace lcsum
