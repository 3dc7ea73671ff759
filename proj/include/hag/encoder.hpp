#pragma once

// Graph representation learning, aspect matching and rating prediction.

#include <cstddef>
#include <optional>
#include <vector>

#include "hag/autodiff.hpp"
#include "hag/model.hpp"
#include "hag/syngraph.hpp"

namespace hag {

// A syntax graph ready for the encoder: node word ids plus adjacency.
// An empty graph stands for a cold-start user or item.
struct GraphInput {
  std::vector<std::size_t> node_ids;
  AdjacencyView adj;

  bool empty() const { return node_ids.empty(); }
};

// nullopt marks a padded (NO_ASPECT) slot.
using AspectTokens = std::optional<std::vector<std::size_t>>;

struct SideInput {
  GraphInput graph;
  std::vector<AspectTokens> aspects;  // exactly n
};

// Working graph during pooling. `ids` are indices into the original graph.
struct GraphState {
  Tensor x;
  std::size_t n = 0;
  std::vector<unsigned char> adj;
  std::vector<int> rel;
  std::vector<std::size_t> ids;
};

struct PoolOutput {
  GraphState next;
  Tensor g;                   // 1 x d0, column max over the pooled features
  std::vector<double> score;  // importance score per input node
  std::vector<std::size_t> kept;  // positions in the input state, ascending
};

struct PooledStack {
  std::vector<Tensor> g;            // one 1 x d0 per layer
  std::vector<std::size_t> sizes;   // K_0 .. K_L
  GraphState last;                  // X^L with node trace
};

struct HierarchyOutput {
  std::vector<PooledStack> stacks;  // one per aspect
  Tensor s;                         // n x d'
  Tensor bank;                      // stacked final node features
  std::vector<Tensor> aspect_repr;  // f(q_k), 1 x d1
};

struct MatchOutput {
  Tensor v_u;  // 1 x 2d'
  Tensor v_i;
  Tensor m_s;  // n x n
};

struct PairEncoding {
  HierarchyOutput user;
  HierarchyOutput item;
  MatchOutput match;
  Tensor rating;  // 1 x 1, unclamped
};

// ceil(ratio * k), at least 1, robust to binary rounding of the ratio.
std::size_t pooled_size(std::size_t k, double ratio);

// Backward direction output at position 0 of a BiLSTM over the word
// embeddings. Throws ShapeError on an empty aspect.
Tensor encode_aspect(Tape& tape, const HagModel& model, const std::vector<std::size_t>& tokens);
Tensor encode_aspect(Tape& tape, const HagModel& model, const AspectTokens& aspect);

GraphState initial_state(Tape& tape, const HagModel& model, const GraphInput& graph);

// x_h + sum_t alpha(h, r, t) x_t W1 with alpha a softmax over neighbours of
// LeakyReLU((x_h W2)(x_t W3 + r W4)^T). `alpha_out`, if given, receives the
// attention matrix.
Tensor gat_encode(Tape& tape, const HagModel& model, std::size_t layer, const GraphState& state,
                  Tensor* alpha_out = nullptr);

// One aspect-guided pooling step. `encoded` is gat_encode(state) (shared
// across aspects at the first layer); `query` is f(q) (1 x d1).
PoolOutput agp(Tape& tape, const HagModel& model, std::size_t layer, const GraphState& state, const Tensor& encoded,
               const Tensor& query);

HierarchyOutput hierarchical_pool(Tape& tape, const HagModel& model, const SideInput& side);

MatchOutput aspect_match(Tape& tape, const HagModel& model, const Tensor& s_u, const Tensor& s_i);

// Pairwise FM term sum_{p<q} <v_p, v_q> x_p x_q via the O(k n) identity.
Tensor fm_pairwise(Tape& tape, const Tensor& x, const Tensor& factors);

Tensor predict_rating(Tape& tape, const HagModel& model, std::size_t user, std::size_t item, const Tensor& v_u,
                      const Tensor& v_i);

PairEncoding encode_pair(Tape& tape, const HagModel& model, const SideInput& user_side, const SideInput& item_side,
                         std::size_t user, std::size_t item);

}  // namespace hag
