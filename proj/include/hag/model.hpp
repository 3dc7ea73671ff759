#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hag/autodiff.hpp"
#include "hag/config.hpp"

namespace hag {

// Table sizes that come from the data rather than the configuration.
struct ModelDims {
  std::size_t vocab = 0;         // d_v, including reserved tokens
  std::size_t aspect_vocab = 0;  // d_a, including BOS_ASPECT / EOS_ASPECT
  std::size_t relations = 1;     // relation embeddings, id 0 = unknown
  std::size_t users = 1;         // id 0 = cold start
  std::size_t items = 1;
};

// Per-layer weights of the attention encoder and the pooling transform.
struct PoolLayer {
  Tensor w1;  // d0 x d0, neighbour message
  Tensor w2;  // d0 x d0, query side of the attention logit
  Tensor w3;  // d0 x d0, key side
  Tensor w4;  // d0 x d0, relation embedding projection
  Tensor w5;  // d0 x d0, post-selection transform
  Tensor b1;  // 1 x d0
};

struct AttentionMlp {
  Tensor w_node;    // d0 x d1
  Tensor w_hidden;  // d1 x d1
  Tensor bias;      // 1 x d1
  Tensor w_out;     // d1 x 1
};

struct DecoderParams {
  AttentionMlp attention;
  Tensor proj_w;  // (2 d1 + 2 d0) x d1, concatenated state down to the LSTM hidden slot
  Tensor proj_b;
  LstmParams lstm;  // input d1, hidden d1
  Tensor out_w;     // d1 x output vocab
  Tensor out_b;
};

class HagModel {
 public:
  HagModel(const HagConfig& config, const ModelDims& dims, std::uint64_t seed);
  HagModel(const HagModel&) = delete;
  HagModel& operator=(const HagModel&) = delete;

  const HagConfig& config() const { return config_; }
  const ModelDims& dims() const { return dims_; }

  // Stable order; the names key checkpoints.
  const std::vector<std::pair<std::string, Tensor>>& named_parameters() const { return params_; }
  std::vector<Tensor> parameters() const;
  std::size_t parameter_count() const;
  void zero_grad();
  // Copies every value from `other`, which must have identical names and shapes.
  void copy_values_from(const HagModel& other);

  // Graph side.
  Tensor word_emb;          // d_v x d1
  Tensor node_emb;          // d_v x d0, aliases word_emb when tied
  Tensor rel_emb;           // relations x d0
  Tensor no_aspect_input;   // 1 x d1, BiLSTM input for a padded aspect slot
  Tensor placeholder_node;  // 1 x d0, lone node for cold-start graphs
  LstmParams aspect_fwd;
  LstmParams aspect_bwd;
  std::vector<PoolLayer> layers;
  Tensor score_proj;  // d1 x d0, brings f(q) into node space

  // Aspect matching.
  Tensor w_s, w_us, w_is;  // d' x d'

  // Rating prediction.
  Tensor user_emb, item_emb;  // (users|items) x d2
  Tensor mlp_u_w, mlp_u_b, mlp_i_w, mlp_i_b;
  Tensor w_uv, w_iv;  // 2d' x d2
  Tensor fm_bias;     // 1 x 1
  Tensor user_bias, item_bias;
  Tensor fm_w;        // 1 x 4 d2
  Tensor fm_factors;  // 4 d2 x k

  // Decoder initialisation.
  Tensor w_ur, b_ur;  // 1 x d1
  Tensor mlp_h_w1, mlp_h_b1, mlp_h_w2, mlp_h_b2;

  Tensor aspect_emb;  // d_a x d1
  DecoderParams aspect_dec;
  DecoderParams expl_dec;

 private:
  Tensor add(const std::string& name, Tensor t);

  HagConfig config_;
  ModelDims dims_;
  std::vector<std::pair<std::string, Tensor>> params_;
};

}  // namespace hag
