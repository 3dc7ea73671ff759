#pragma once

// Hierarchical decoding: an aspect LSTM emits aspect ids, then one
// explanation LSTM run per aspect emits words. Both attend over the pooled
// node features of the user and item graphs.

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "hag/autodiff.hpp"
#include "hag/corpus.hpp"
#include "hag/encoder.hpp"
#include "hag/model.hpp"
#include "json.hpp"

namespace hag {

// Decoder-side aspect ids. Corpus aspect k has id kAspectOffset + k.
inline constexpr std::size_t kBosAspect = 0;
inline constexpr std::size_t kEosAspect = 1;
inline constexpr std::size_t kAspectOffset = 2;

struct DecoderState {
  Tensor h;
  Tensor c;
  std::size_t step = 0;
  std::size_t token = 0;  // token consumed to reach this state
};

struct NodeBank {
  Tensor x;  // rows x d0
  std::vector<std::pair<std::size_t, std::size_t>> provenance;  // (aspect slot, original node index)

  static NodeBank from_hierarchy(const HierarchyOutput& h);
};

struct InitStates {
  Tensor v_r;  // 1 x d1
  Tensor h0;   // 1 x d1
};

InitStates init_states(Tape& tape, const HagModel& model, const Tensor& rating, const Tensor& v_u, const Tensor& v_i);

struct Attention {
  Tensor context;  // 1 x d0
  Tensor weights;  // 1 x rows
};

// `keys` is bank * w_node, which does not change between steps.
Attention attend(Tape& tape, const AttentionMlp& mlp, const Tensor& h, const Tensor& bank, const Tensor& keys);
Attention attend(Tape& tape, const AttentionMlp& mlp, const Tensor& h, const Tensor& bank);

// Everything a decoder step needs besides its own state.
struct DecoderContext {
  NodeBank bank_u;
  NodeBank bank_i;
  InitStates init;
  Tensor aspect_keys_u, aspect_keys_i;
  Tensor expl_keys_u, expl_keys_i;

  static DecoderContext build(Tape& tape, const HagModel& model, const PairEncoding& enc);
};

struct StepOutput {
  DecoderState state;
  Tensor logits;  // 1 x output vocab
  Attention att_u;
  Attention att_i;
};

StepOutput aspect_step(Tape& tape, const HagModel& model, const DecoderContext& ctx, const DecoderState& state,
                       std::size_t prev_aspect);
// `anchor` is h_j^a, the aspect-decoder state that emitted aspect j.
StepOutput explanation_step(Tape& tape, const HagModel& model, const DecoderContext& ctx, const DecoderState& state,
                            std::size_t prev_word, const Tensor& anchor);

DecoderState initial_aspect_state(const HagModel& model, const DecoderContext& ctx);
DecoderState initial_explanation_state(const HagModel& model, const Tensor& anchor);

struct GenerationOutput {
  double rating = 0.0;  // raw model output
  std::vector<std::size_t> aspects;                // decoder aspect ids
  std::vector<std::vector<std::size_t>> explanations;  // word ids, EOS stripped
  std::vector<std::vector<std::vector<double>>> attention_u;  // [aspect][step][row], optional

  double clamped_rating() const;
};

struct GenerateOptions {
  bool trace_attention = false;
};

GenerationOutput generate(const HagModel& model, const SideInput& user_side, const SideInput& item_side,
                          std::size_t user, std::size_t item, const GenerateOptions& opts = {});

// Maps decoder aspect ids to strings using the corpus aspect list.
std::string aspect_name(std::size_t decoder_id, const std::vector<std::string>& corpus_aspects);

nlohmann::json to_json(const GenerationOutput& out, const std::string& user, const std::string& item,
                       const Vocabulary& vocab, const std::vector<std::string>& corpus_aspects);

}  // namespace hag
