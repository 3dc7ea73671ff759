#include "hag/model.hpp"

#include <cmath>

#include "hag/errors.hpp"
#include "hag/rng.hpp"

namespace hag {

namespace {

Tensor glorot(Rng& rng, std::size_t rows, std::size_t cols) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::vector<double> v(rows * cols);
  for (double& x : v) x = uniform(rng, -limit, limit);
  return Tensor::parameter({rows, cols}, std::move(v));
}

Tensor embedding(Rng& rng, std::size_t rows, std::size_t cols) {
  std::vector<double> v(rows * cols);
  for (double& x : v) x = normal(rng, 0.0, 0.1);
  return Tensor::parameter({rows, cols}, std::move(v));
}

Tensor zeros(std::size_t rows, std::size_t cols) { return Tensor::zeros({rows, cols}, true); }

}  // namespace

Tensor HagModel::add(const std::string& name, Tensor t) {
  params_.emplace_back(name, t);
  return t;
}

HagModel::HagModel(const HagConfig& config, const ModelDims& dims, std::uint64_t seed) : config_(config), dims_(dims) {
  config_.validate();
  if (dims.vocab < 5 || dims.aspect_vocab < 3 || dims.relations < 1 || dims.users < 1 || dims.items < 1) {
    throw ConfigError("model dimensions too small");
  }
  Rng rng(seed);
  const std::size_t d0 = config.d0, d1 = config.d1, d2 = config.d2, dp = config.d_prime();

  word_emb = add("word_emb", embedding(rng, dims.vocab, d1));
  node_emb = config.tie_node_embeddings ? word_emb : add("node_emb", embedding(rng, dims.vocab, d0));
  rel_emb = add("rel_emb", embedding(rng, dims.relations, d0));
  no_aspect_input = add("no_aspect_input", embedding(rng, 1, d1));
  placeholder_node = add("placeholder_node", embedding(rng, 1, d0));

  auto lstm = [&](const std::string& prefix, std::size_t in, std::size_t hidden) {
    LstmParams p;
    p.w_input = add(prefix + ".w_input", glorot(rng, in, 4 * hidden));
    p.w_hidden = add(prefix + ".w_hidden", glorot(rng, hidden, 4 * hidden));
    p.bias = add(prefix + ".bias", zeros(1, 4 * hidden));
    return p;
  };
  aspect_fwd = lstm("aspect_enc.fwd", d1, d1);
  aspect_bwd = lstm("aspect_enc.bwd", d1, d1);

  for (std::size_t l = 0; l < config.pool_layers; ++l) {
    const std::string p = "pool" + std::to_string(l) + ".";
    PoolLayer layer;
    layer.w1 = add(p + "w1", glorot(rng, d0, d0));
    layer.w2 = add(p + "w2", glorot(rng, d0, d0));
    layer.w3 = add(p + "w3", glorot(rng, d0, d0));
    layer.w4 = add(p + "w4", glorot(rng, d0, d0));
    layer.w5 = add(p + "w5", glorot(rng, d0, d0));
    layer.b1 = add(p + "b1", zeros(1, d0));
    layers.push_back(std::move(layer));
  }
  score_proj = add("score_proj", glorot(rng, d1, d0));

  w_s = add("match.w_s", glorot(rng, dp, dp));
  w_us = add("match.w_us", glorot(rng, dp, dp));
  w_is = add("match.w_is", glorot(rng, dp, dp));

  user_emb = add("user_emb", embedding(rng, dims.users, d2));
  item_emb = add("item_emb", embedding(rng, dims.items, d2));
  mlp_u_w = add("mlp_u.w", glorot(rng, d2, d2));
  mlp_u_b = add("mlp_u.b", zeros(1, d2));
  mlp_i_w = add("mlp_i.w", glorot(rng, d2, d2));
  mlp_i_b = add("mlp_i.b", zeros(1, d2));
  w_uv = add("w_uv", glorot(rng, 2 * dp, d2));
  w_iv = add("w_iv", glorot(rng, 2 * dp, d2));
  fm_bias = add("fm.b0", zeros(1, 1));
  user_bias = add("fm.user_bias", zeros(dims.users, 1));
  item_bias = add("fm.item_bias", zeros(dims.items, 1));
  fm_w = add("fm.w", glorot(rng, 1, 4 * d2));
  fm_factors = add("fm.factors", embedding(rng, 4 * d2, config.fm_factors));

  w_ur = add("init.w_ur", glorot(rng, 1, d1));
  b_ur = add("init.b_ur", zeros(1, d1));
  mlp_h_w1 = add("init.mlp_h.w1", glorot(rng, d1 + 4 * dp, d1));
  mlp_h_b1 = add("init.mlp_h.b1", zeros(1, d1));
  mlp_h_w2 = add("init.mlp_h.w2", glorot(rng, d1, d1));
  mlp_h_b2 = add("init.mlp_h.b2", zeros(1, d1));

  aspect_emb = add("aspect_emb", embedding(rng, dims.aspect_vocab, d1));

  auto decoder = [&](const std::string& prefix, std::size_t out_vocab) {
    DecoderParams d;
    d.attention.w_node = add(prefix + ".att.w_node", glorot(rng, d0, d1));
    d.attention.w_hidden = add(prefix + ".att.w_hidden", glorot(rng, d1, d1));
    d.attention.bias = add(prefix + ".att.bias", zeros(1, d1));
    d.attention.w_out = add(prefix + ".att.w_out", glorot(rng, d1, 1));
    d.proj_w = add(prefix + ".proj.w", glorot(rng, 2 * d1 + 2 * d0, d1));
    d.proj_b = add(prefix + ".proj.b", zeros(1, d1));
    d.lstm = lstm(prefix + ".lstm", d1, d1);
    d.out_w = add(prefix + ".out.w", glorot(rng, d1, out_vocab));
    d.out_b = add(prefix + ".out.b", zeros(1, out_vocab));
    return d;
  };
  aspect_dec = decoder("aspect_dec", dims.aspect_vocab);
  expl_dec = decoder("expl_dec", dims.vocab);
}

std::vector<Tensor> HagModel::parameters() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const auto& [_, t] : params_) out.push_back(t);
  return out;
}

std::size_t HagModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : params_) n += t.size();
  return n;
}

void HagModel::zero_grad() {
  for (auto& [_, t] : params_) t.zero_grad();
}

void HagModel::copy_values_from(const HagModel& other) {
  if (other.params_.size() != params_.size()) throw ConfigError("copy_values_from: parameter sets differ");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& [name, dst] = params_[i];
    const auto& [oname, src] = other.params_[i];
    if (name != oname || dst.shape() != src.shape()) throw ConfigError("copy_values_from: mismatch at " + name);
    std::copy(src.values().begin(), src.values().end(), dst.mutable_values().begin());
  }
}

}  // namespace hag
