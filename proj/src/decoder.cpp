#include "hag/decoder.hpp"

#include <algorithm>
#include <limits>

namespace hag {

NodeBank NodeBank::from_hierarchy(const HierarchyOutput& h) {
  NodeBank b;
  b.x = h.bank;
  for (std::size_t k = 0; k < h.stacks.size(); ++k)
    for (std::size_t id : h.stacks[k].last.ids) b.provenance.emplace_back(k, id);
  return b;
}

InitStates init_states(Tape& tape, const HagModel& model, const Tensor& rating, const Tensor& v_u, const Tensor& v_i) {
  InitStates s;
  s.v_r = tape.relu(tape.add(tape.matmul(rating, model.w_ur), model.b_ur));
  const Tensor in = tape.concat_cols({s.v_r, v_u, v_i});
  const Tensor hidden = tape.relu(tape.add(tape.matmul(in, model.mlp_h_w1), model.mlp_h_b1));
  s.h0 = tape.add(tape.matmul(hidden, model.mlp_h_w2), model.mlp_h_b2);
  return s;
}

Attention attend(Tape& tape, const AttentionMlp& mlp, const Tensor& h, const Tensor& bank, const Tensor& keys) {
  if (bank.rows() == 0) throw ShapeError("attend: empty bank");
  const Tensor pre = tape.add(keys, tape.add(tape.matmul(h, mlp.w_hidden), mlp.bias));
  const Tensor scores = tape.matmul(tape.tanh(pre), mlp.w_out);  // rows x 1
  Attention a;
  a.weights = tape.softmax_row(tape.transpose(scores));
  a.context = tape.matmul(a.weights, bank);
  return a;
}

Attention attend(Tape& tape, const AttentionMlp& mlp, const Tensor& h, const Tensor& bank) {
  return attend(tape, mlp, h, bank, tape.matmul(bank, mlp.w_node));
}

DecoderContext DecoderContext::build(Tape& tape, const HagModel& model, const PairEncoding& enc) {
  DecoderContext ctx;
  ctx.bank_u = NodeBank::from_hierarchy(enc.user);
  ctx.bank_i = NodeBank::from_hierarchy(enc.item);
  ctx.init = init_states(tape, model, enc.rating, enc.match.v_u, enc.match.v_i);
  ctx.aspect_keys_u = tape.matmul(ctx.bank_u.x, model.aspect_dec.attention.w_node);
  ctx.aspect_keys_i = tape.matmul(ctx.bank_i.x, model.aspect_dec.attention.w_node);
  ctx.expl_keys_u = tape.matmul(ctx.bank_u.x, model.expl_dec.attention.w_node);
  ctx.expl_keys_i = tape.matmul(ctx.bank_i.x, model.expl_dec.attention.w_node);
  return ctx;
}

namespace {

StepOutput step(Tape& tape, const DecoderParams& p, const Tensor& table, const DecoderContext& ctx,
                const Tensor& keys_u, const Tensor& keys_i, const DecoderState& state, std::size_t prev,
                const Tensor& anchor) {
  StepOutput out;
  out.att_u = attend(tape, p.attention, state.h, ctx.bank_u.x, keys_u);
  out.att_i = attend(tape, p.attention, state.h, ctx.bank_i.x, keys_i);
  const Tensor joined = tape.concat_cols({state.h, out.att_u.context, out.att_i.context, anchor});
  const Tensor hidden = tape.add(tape.matmul(joined, p.proj_w), p.proj_b);
  const LstmState next = tape.lstm_step(tape.gather_rows(table, std::span(&prev, 1)), {hidden, state.c}, p.lstm);
  out.state = {next.h, next.c, state.step + 1, prev};
  out.logits = tape.add(tape.matmul(next.h, p.out_w), p.out_b);
  return out;
}

std::size_t argmax(std::span<const double> v, const std::vector<std::size_t>& banned) {
  std::size_t best = 0;
  double best_v = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (std::find(banned.begin(), banned.end(), i) != banned.end()) continue;
    if (v[i] > best_v) {
      best_v = v[i];
      best = i;
    }
  }
  return best;
}

}  // namespace

StepOutput aspect_step(Tape& tape, const HagModel& model, const DecoderContext& ctx, const DecoderState& state,
                       std::size_t prev_aspect) {
  return step(tape, model.aspect_dec, model.aspect_emb, ctx, ctx.aspect_keys_u, ctx.aspect_keys_i, state, prev_aspect,
              ctx.init.h0);
}

StepOutput explanation_step(Tape& tape, const HagModel& model, const DecoderContext& ctx, const DecoderState& state,
                            std::size_t prev_word, const Tensor& anchor) {
  return step(tape, model.expl_dec, model.word_emb, ctx, ctx.expl_keys_u, ctx.expl_keys_i, state, prev_word, anchor);
}

DecoderState initial_aspect_state(const HagModel& model, const DecoderContext& ctx) {
  return {ctx.init.h0, Tensor::zeros({1, model.config().d1}), 0, kBosAspect};
}

DecoderState initial_explanation_state(const HagModel& model, const Tensor& anchor) {
  return {anchor, Tensor::zeros({1, model.config().d1}), 0, Vocabulary::kBos};
}

double GenerationOutput::clamped_rating() const { return std::clamp(rating, 1.0, 5.0); }

GenerationOutput generate(const HagModel& model, const SideInput& user_side, const SideInput& item_side,
                          std::size_t user, std::size_t item, const GenerateOptions& opts) {
  const HagConfig& cfg = model.config();
  Tape tape(false);
  const PairEncoding enc = encode_pair(tape, model, user_side, item_side, user, item);
  const DecoderContext ctx = DecoderContext::build(tape, model, enc);

  GenerationOutput out;
  out.rating = enc.rating.item();

  const bool single = cfg.mode == GenerationMode::kSingle;
  const std::size_t max_aspects = single ? 1 : cfg.max_aspects;
  std::vector<Tensor> anchors;
  DecoderState state = initial_aspect_state(model, ctx);
  std::size_t prev = kBosAspect;
  for (std::size_t j = 0; j < max_aspects; ++j) {
    StepOutput s = aspect_step(tape, model, ctx, state, prev);
    std::vector<std::size_t> banned{kBosAspect};
    if (j == 0 || single) banned.push_back(kEosAspect);
    const std::size_t pick = argmax(s.logits.values(), banned);
    if (pick == kEosAspect) break;
    out.aspects.push_back(pick);
    anchors.push_back(s.state.h);
    state = s.state;
    prev = pick;
  }

  const std::size_t max_len = cfg.max_len();
  const std::vector<std::size_t> banned{Vocabulary::kPad, Vocabulary::kBos};
  for (const Tensor& anchor : anchors) {
    std::vector<std::size_t> words;
    std::vector<std::vector<double>> trace;
    DecoderState st = initial_explanation_state(model, anchor);
    std::size_t w = Vocabulary::kBos;
    for (std::size_t t = 0; t < max_len; ++t) {
      StepOutput s = explanation_step(tape, model, ctx, st, w, anchor);
      if (opts.trace_attention) trace.emplace_back(s.att_u.weights.values().begin(), s.att_u.weights.values().end());
      w = argmax(s.logits.values(), banned);
      if (w == Vocabulary::kEos) break;
      words.push_back(w);
      st = s.state;
    }
    out.explanations.push_back(std::move(words));
    if (opts.trace_attention) out.attention_u.push_back(std::move(trace));
  }
  return out;
}

std::string aspect_name(std::size_t decoder_id, const std::vector<std::string>& corpus_aspects) {
  if (decoder_id == kBosAspect) return "<bos_aspect>";
  if (decoder_id == kEosAspect) return "<eos_aspect>";
  return corpus_aspects.at(decoder_id - kAspectOffset);
}

nlohmann::json to_json(const GenerationOutput& out, const std::string& user, const std::string& item,
                       const Vocabulary& vocab, const std::vector<std::string>& corpus_aspects) {
  nlohmann::json j;
  j["user"] = user;
  j["item"] = item;
  j["rating_pred"] = out.clamped_rating();
  j["aspects"] = nlohmann::json::array();
  for (std::size_t a : out.aspects) j["aspects"].push_back(aspect_name(a, corpus_aspects));
  j["explanations"] = nlohmann::json::array();
  for (const auto& e : out.explanations) {
    nlohmann::json words = nlohmann::json::array();
    for (std::size_t w : e) words.push_back(vocab.token(w));
    j["explanations"].push_back(std::move(words));
  }
  if (!out.attention_u.empty()) j["attention"] = out.attention_u;
  return j;
}

}  // namespace hag
