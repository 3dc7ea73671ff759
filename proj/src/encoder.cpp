#include "hag/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hag {

std::size_t pooled_size(std::size_t k, double ratio) {
  const double x = ratio * static_cast<double>(k);
  const double r = std::round(x);
  const double c = std::abs(x - r) < 1e-9 ? r : std::ceil(x);
  return std::max<std::size_t>(1, std::min(k, static_cast<std::size_t>(c)));
}

Tensor encode_aspect(Tape& tape, const HagModel& model, const std::vector<std::size_t>& tokens) {
  if (tokens.empty()) throw ShapeError("encode_aspect: empty aspect");
  std::vector<Tensor> inputs;
  inputs.reserve(tokens.size());
  for (std::size_t id : tokens) inputs.push_back(tape.gather_rows(model.word_emb, std::span(&id, 1)));
  return tape.bilstm_encode(inputs, model.aspect_fwd, model.aspect_bwd).backward.front();
}

Tensor encode_aspect(Tape& tape, const HagModel& model, const AspectTokens& aspect) {
  if (aspect) return encode_aspect(tape, model, *aspect);
  return tape.bilstm_encode({model.no_aspect_input}, model.aspect_fwd, model.aspect_bwd).backward.front();
}

GraphState initial_state(Tape& tape, const HagModel& model, const GraphInput& graph) {
  GraphState s;
  if (graph.empty()) {
    s.x = model.placeholder_node;
    s.n = 1;
    s.adj = {0};
    s.rel = {-1};
    s.ids = {0};
    return s;
  }
  if (graph.adj.n != graph.node_ids.size()) throw ShapeError("initial_state: adjacency does not match node list");
  s.x = tape.embedding_lookup(model.node_emb, graph.node_ids);
  s.n = graph.node_ids.size();
  s.adj = graph.adj.a;
  s.rel = graph.adj.rel;
  s.ids.resize(s.n);
  std::iota(s.ids.begin(), s.ids.end(), 0);
  return s;
}

Tensor gat_encode(Tape& tape, const HagModel& model, std::size_t layer, const GraphState& state, Tensor* alpha_out) {
  const PoolLayer& w = model.layers.at(layer);
  const Tensor q = tape.matmul(state.x, w.w2);
  Tensor logits = tape.matmul(q, tape.transpose(tape.matmul(state.x, w.w3)));
  if (!model.config().no_relation) {
    // (x_h W2)(r W4)^T for every relation, then pick the one on each edge
    const Tensor per_rel = tape.matmul(q, tape.transpose(tape.matmul(model.rel_emb, w.w4)));
    std::vector<std::size_t> index(state.n * state.n, 0);
    for (std::size_t i = 0; i < index.size(); ++i)
      if (state.rel[i] >= 0) index[i] = static_cast<std::size_t>(state.rel[i]);
    logits = tape.add(logits, tape.gather_entries(per_rel, index, state.n));
  }
  const Tensor alpha = tape.masked_softmax_row(tape.leaky_relu(logits, model.config().leaky_slope), state.adj);
  if (alpha_out) *alpha_out = alpha;
  return tape.add(state.x, tape.matmul(alpha, tape.matmul(state.x, w.w1)));
}

PoolOutput agp(Tape& tape, const HagModel& model, std::size_t layer, const GraphState& state, const Tensor& encoded,
               const Tensor& query) {
  if (state.n == 0) throw ShapeError("agp: empty graph");
  const std::size_t d0 = model.config().d0;
  PoolOutput out;

  // Selection is piecewise constant, so the score needs no tape entry.
  std::vector<double> proj(d0, 0.0);
  for (std::size_t j = 0; j < query.cols(); ++j)
    for (std::size_t c = 0; c < d0; ++c) proj[c] += query.at(0, j) * model.score_proj.at(j, c);
  out.score.resize(state.n);
  for (std::size_t h = 0; h < state.n; ++h) {
    double dot = 0.0;
    for (std::size_t c = 0; c < d0; ++c) dot += encoded.at(h, c) * proj[c];
    out.score[h] = std::abs(dot);
  }

  const std::size_t k = model.config().gat_only ? state.n : pooled_size(state.n, model.config().pool_ratio);
  std::vector<std::size_t> order(state.n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return out.score[a] > out.score[b]; });
  out.kept.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(out.kept.begin(), out.kept.end());

  const PoolLayer& w = model.layers.at(layer);
  GraphState& next = out.next;
  next.x = tape.relu(tape.add(tape.matmul(tape.gather_rows(encoded, out.kept), w.w5), w.b1));
  next.n = k;
  next.adj.resize(k * k);
  next.rel.resize(k * k);
  next.ids.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    next.ids[i] = state.ids[out.kept[i]];
    for (std::size_t j = 0; j < k; ++j) {
      next.adj[i * k + j] = state.adj[out.kept[i] * state.n + out.kept[j]];
      next.rel[i * k + j] = state.rel[out.kept[i] * state.n + out.kept[j]];
    }
  }
  out.g = tape.max_rows(next.x);
  return out;
}

HierarchyOutput hierarchical_pool(Tape& tape, const HagModel& model, const SideInput& side) {
  const HagConfig& cfg = model.config();
  if (side.aspects.size() != cfg.n_aspects) throw ShapeError("hierarchical_pool: expected " + std::to_string(cfg.n_aspects) + " aspects, got " + std::to_string(side.aspects.size()));
  HierarchyOutput out;
  const GraphState start = initial_state(tape, model, side.graph);

  std::vector<Tensor> rows, bank;
  if (cfg.no_agp) {
    const Tensor g = tape.max_rows(start.x);
    for (const auto& aspect : side.aspects) {
      const Tensor fq = encode_aspect(tape, model, aspect);
      PooledStack stack;
      stack.g.assign(cfg.pool_layers, g);
      stack.sizes.assign(cfg.pool_layers + 1, start.n);
      stack.last = start;
      std::vector<Tensor> parts = stack.g;
      parts.push_back(fq);
      rows.push_back(tape.concat_cols(parts));
      bank.push_back(start.x);
      out.aspect_repr.push_back(fq);
      out.stacks.push_back(std::move(stack));
    }
  } else {
    const Tensor first = gat_encode(tape, model, 0, start);
    for (const auto& aspect : side.aspects) {
      const Tensor fq = encode_aspect(tape, model, aspect);
      PooledStack stack;
      stack.sizes.push_back(start.n);
      GraphState cur = start;
      Tensor encoded = first;
      for (std::size_t l = 0; l < cfg.pool_layers; ++l) {
        if (l > 0) encoded = gat_encode(tape, model, l, cur);
        PoolOutput p = agp(tape, model, l, cur, encoded, fq);
        stack.g.push_back(p.g);
        stack.sizes.push_back(p.next.n);
        cur = std::move(p.next);
      }
      std::vector<Tensor> parts = stack.g;
      parts.push_back(fq);
      rows.push_back(tape.concat_cols(parts));
      bank.push_back(cur.x);
      stack.last = std::move(cur);
      out.aspect_repr.push_back(fq);
      out.stacks.push_back(std::move(stack));
    }
  }
  out.s = tape.concat_rows(rows);
  out.bank = tape.concat_rows(bank);
  return out;
}

MatchOutput aspect_match(Tape& tape, const HagModel& model, const Tensor& s_u, const Tensor& s_i) {
  MatchOutput out;
  out.m_s = tape.relu(tape.matmul(tape.matmul(s_u, model.w_s), tape.transpose(s_i)));
  const Tensor su = tape.matmul(s_u, model.w_us);
  const Tensor si = tape.matmul(s_i, model.w_is);
  out.v_u = tape.mean_rows(tape.concat_cols({su, tape.matmul(out.m_s, si)}));
  out.v_i = tape.mean_rows(tape.concat_cols({si, tape.matmul(tape.transpose(out.m_s), su)}));
  return out;
}

Tensor fm_pairwise(Tape& tape, const Tensor& x, const Tensor& factors) {
  const Tensor xv = tape.matmul(x, factors);
  const Tensor sq = tape.matmul(tape.mul(x, x), tape.mul(factors, factors));
  return tape.scale(tape.sum(tape.sub(tape.mul(xv, xv), sq)), 0.5);
}

Tensor predict_rating(Tape& tape, const HagModel& model, std::size_t user, std::size_t item, const Tensor& v_u,
                      const Tensor& v_i) {
  const Tensor e_u = tape.gather_rows(model.user_emb, std::span(&user, 1));
  const Tensor e_i = tape.gather_rows(model.item_emb, std::span(&item, 1));
  const Tensor x_u = tape.concat_cols({tape.relu(tape.add(tape.matmul(e_u, model.mlp_u_w), model.mlp_u_b)),
                                       tape.matmul(v_u, model.w_uv)});
  const Tensor x_i = tape.concat_cols({tape.relu(tape.add(tape.matmul(e_i, model.mlp_i_w), model.mlp_i_b)),
                                       tape.matmul(v_i, model.w_iv)});
  const Tensor x = tape.concat_cols({x_u, x_i});
  Tensor r = tape.add(model.fm_bias, tape.pick(model.user_bias, user, 0));
  r = tape.add(r, tape.pick(model.item_bias, item, 0));
  r = tape.add(r, tape.matmul(x, tape.transpose(model.fm_w)));
  return tape.add(r, fm_pairwise(tape, x, model.fm_factors));
}

PairEncoding encode_pair(Tape& tape, const HagModel& model, const SideInput& user_side, const SideInput& item_side,
                         std::size_t user, std::size_t item) {
  PairEncoding out;
  out.user = hierarchical_pool(tape, model, user_side);
  out.item = hierarchical_pool(tape, model, item_side);
  out.match = aspect_match(tape, model, out.user.s, out.item.s);
  out.rating = predict_rating(tape, model, user, item, out.match.v_u, out.match.v_i);
  return out;
}

}  // namespace hag
