#include "hag/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "hag/decoder.hpp"
#include "hag/encoder.hpp"
#include "hag/errors.hpp"

namespace hag {

namespace {

// -sum_t log p(target_t) over one teacher-forced sequence, divided by its length.
Tensor mean_nll(Tape& tape, const std::vector<Tensor>& picked) {
  Tensor acc = picked.front();
  for (std::size_t t = 1; t < picked.size(); ++t) acc = tape.add(acc, picked[t]);
  return tape.scale(acc, -1.0 / static_cast<double>(picked.size()));
}

void accumulate(LossBreakdown& into, const LossBreakdown& x) {
  into.l_a += x.l_a;
  into.l_p += x.l_p;
  into.l_r += x.l_r;
  into.total += x.total;
  into.rating += x.rating;
}

LossBreakdown divided(LossBreakdown x, std::size_t n) {
  if (n == 0) return x;
  const double d = static_cast<double>(n);
  return {x.l_a / d, x.l_p / d, x.l_r / d, x.total / d, x.rating / d};
}

nlohmann::json loss_json(const LossBreakdown& l) {
  return {{"l_a", l.l_a}, {"l_p", l.l_p}, {"l_r", l.l_r}, {"total", l.total}, {"rating", l.rating}};
}

LossBreakdown loss_from_json(const nlohmann::json& j) {
  return {j.at("l_a"), j.at("l_p"), j.at("l_r"), j.at("total"), j.at("rating")};
}

double params_norm(const std::vector<Tensor>& params) {
  double s = 0.0;
  for (const auto& p : params)
    for (double v : p.values()) s += v * v;
  return std::sqrt(s);
}

}  // namespace

Tensor example_loss(Tape& tape, const HagModel& model, const SideInput& user_side, const SideInput& item_side,
                    const EncodedExample& ex, LossBreakdown* parts, const LossWeights& w) {
  if (ex.explanation_targets.empty()) throw DataError("example " + ex.user + "/" + ex.item + " has no targets");
  const PairEncoding enc = encode_pair(tape, model, user_side, item_side, ex.user_idx, ex.item_idx);
  const DecoderContext ctx = DecoderContext::build(tape, model, enc);

  std::vector<Tensor> aspect_terms, anchors;
  DecoderState state = initial_aspect_state(model, ctx);
  std::size_t prev = kBosAspect;
  for (std::size_t target : ex.aspect_targets) {
    StepOutput s = aspect_step(tape, model, ctx, state, prev);
    aspect_terms.push_back(tape.pick(tape.log_softmax_row(s.logits), 0, target));
    if (target != kEosAspect) anchors.push_back(s.state.h);
    state = s.state;
    prev = target;
  }
  const Tensor l_a = mean_nll(tape, aspect_terms);

  std::vector<Tensor> per_expl;
  for (std::size_t j = 0; j < ex.explanation_targets.size(); ++j) {
    std::vector<Tensor> terms;
    DecoderState st = initial_explanation_state(model, anchors.at(j));
    std::size_t word = Vocabulary::kBos;
    for (std::size_t target : ex.explanation_targets[j]) {
      StepOutput s = explanation_step(tape, model, ctx, st, word, anchors[j]);
      terms.push_back(tape.pick(tape.log_softmax_row(s.logits), 0, target));
      st = s.state;
      word = target;
    }
    per_expl.push_back(mean_nll(tape, terms));
  }
  Tensor l_p = per_expl.front();
  for (std::size_t j = 1; j < per_expl.size(); ++j) l_p = tape.add(l_p, per_expl[j]);
  l_p = tape.scale(l_p, 1.0 / static_cast<double>(per_expl.size()));

  const Tensor diff = tape.add_scalar(enc.rating, -ex.rating);
  const Tensor l_r = tape.mul(diff, diff);
  const Tensor total =
      tape.add(tape.add(tape.scale(l_a, w.aspect), tape.scale(l_p, w.explanation)), tape.scale(l_r, w.rating));
  if (parts) *parts = {l_a.item(), l_p.item(), l_r.item(), total.item(), enc.rating.item()};
  return total;
}

LossBreakdown compute_loss(const HagModel& model, const SideInput& user_side, const SideInput& item_side,
                           const EncodedExample& ex, const LossWeights& w) {
  Tape tape(false);
  LossBreakdown parts;
  example_loss(tape, model, user_side, item_side, ex, &parts, w);
  return parts;
}

LossBreakdown compute_loss(const HagModel& model, const Bundle& bundle, const EncodedExample& ex, const LossWeights& w) {
  return compute_loss(model, bundle.user_inputs.at(ex.user_idx), bundle.item_inputs.at(ex.item_idx), ex, w);
}

SplitLoss evaluate_loss(const HagModel& model, const Bundle& bundle, const std::vector<EncodedExample>& examples,
                        const LossWeights& w) {
  SplitLoss out;
  LossBreakdown sum;
  for (const auto& ex : examples) {
    const LossBreakdown l = compute_loss(model, bundle, ex, w);
    accumulate(sum, l);
    out.mae += std::abs(std::clamp(l.rating, 1.0, 5.0) - ex.rating);
  }
  out.n = examples.size();
  out.mean = divided(sum, out.n);
  if (out.n) out.mae /= static_cast<double>(out.n);
  return out;
}

std::string format_history_csv(const std::vector<EpochRecord>& history) {
  std::ostringstream os;
  os.precision(10);
  os << "epoch,l_a,l_p,l_r,total,valid_l_a,valid_l_p,valid_l_r,valid_total,valid_mae,lr\n";
  for (const auto& r : history) {
    os << r.epoch << ',' << r.train.l_a << ',' << r.train.l_p << ',' << r.train.l_r << ',' << r.train.total << ','
       << r.valid.mean.l_a << ',' << r.valid.mean.l_p << ',' << r.valid.mean.l_r << ',' << r.valid.mean.total << ','
       << r.valid.mae << ',' << r.lr << '\n';
  }
  return os.str();
}

Trainer::Trainer(HagModel& model, const Bundle& bundle, const TrainConfig& cfg, std::uint64_t seed)
    : model_(model),
      bundle_(bundle),
      cfg_(cfg),
      weights_{cfg.w_aspect, cfg.w_explanation, cfg.w_rating},
      params_(model.parameters()),
      adam_(AdamState::for_params(params_)),
      rng_(seed) {
  cfg_.validate();
  if (bundle.train.empty()) throw DataError("training split has no usable examples");
}

std::size_t Trainer::batches_per_epoch() const { return (bundle_.train.size() + cfg_.batch - 1) / cfg_.batch; }

void Trainer::begin_epoch() {
  order_.resize(bundle_.train.size());
  std::iota(order_.begin(), order_.end(), 0);
  shuffle(std::span(order_), rng_);
  epoch_sum_ = {};
  epoch_seen_ = 0;
}

LossBreakdown Trainer::step() {
  if (finished()) throw std::logic_error("Trainer::step: training already finished");
  if (batch_in_epoch_ == 0) begin_epoch();
  const std::size_t begin = batch_in_epoch_ * cfg_.batch;
  const std::size_t end = std::min(order_.size(), begin + cfg_.batch);
  const double inv = 1.0 / static_cast<double>(end - begin);

  model_.zero_grad();
  LossBreakdown batch;
  for (std::size_t k = begin; k < end; ++k) {
    const EncodedExample& ex = bundle_.train[order_[k]];
    Tape tape;
    LossBreakdown parts;
    const Tensor loss = example_loss(tape, model_, bundle_.user_inputs.at(ex.user_idx),
                                     bundle_.item_inputs.at(ex.item_idx), ex, &parts, weights_);
    if (!std::isfinite(parts.total)) {
      std::ostringstream os;
      os << "non-finite loss at epoch " << epoch_ + 1 << ", batch " << batch_in_epoch_ + 1 << " (example "
         << ex.user << "/" << ex.item << ", l_a " << parts.l_a << ", l_p " << parts.l_p << ", l_r " << parts.l_r
         << "); parameter norm " << params_norm(params_);
      throw NumericError(os.str());
    }
    tape.backward(tape.scale(loss, inv));
    accumulate(batch, parts);
    accumulate(epoch_sum_, parts);
    ++epoch_seen_;
  }
  clip_grad_norm(params_, cfg_.clip_norm);
  last_lr_ = cosine_lr(static_cast<long long>(step_), static_cast<long long>(total_steps()), cfg_.lr);
  adam_step(params_, adam_, last_lr_);
  ++step_;
  if (++batch_in_epoch_ == batches_per_epoch()) {
    close_epoch();
    batch_in_epoch_ = 0;
  }
  return divided(batch, end - begin);
}

void Trainer::close_epoch() {
  ++epoch_;
  EpochRecord rec;
  rec.epoch = epoch_;
  rec.train = divided(epoch_sum_, epoch_seen_);
  rec.lr = last_lr_;
  if (!bundle_.valid.empty()) rec.valid = evaluate_loss(model_, bundle_, bundle_.valid, weights_);
  const double criterion = rec.valid.n ? rec.valid.mean.total : rec.train.total;
  if (!best_epoch_ || criterion < best_valid_) {
    best_epoch_ = epoch_;
    best_valid_ = criterion;
    best_values_.clear();
    for (const auto& p : params_) best_values_.emplace_back(p.values().begin(), p.values().end());
  }
  history_.push_back(rec);
}

void Trainer::fit(const std::function<void(const EpochRecord&)>& on_epoch) {
  while (!finished()) {
    const std::size_t before = epoch_;
    step();
    if (epoch_ != before && on_epoch) on_epoch(history_.back());
  }
}

void Trainer::copy_best_into(HagModel& target) const {
  if (best_values_.empty()) {
    if (&target != &model_) target.copy_values_from(model_);
    return;
  }
  auto dst = target.parameters();
  if (dst.size() != best_values_.size()) throw ConfigError("copy_best_into: parameter sets differ");
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (dst[i].size() != best_values_[i].size()) throw ConfigError("copy_best_into: shape mismatch");
    std::copy(best_values_[i].begin(), best_values_[i].end(), dst[i].mutable_values().begin());
  }
}

Checkpoint Trainer::to_checkpoint(const RunConfig& config) const {
  Checkpoint ckpt;
  ckpt.config = config;
  ckpt.dims = model_.dims();
  ckpt.vocab = bundle_vocab_json(bundle_);
  add_model_tensors(ckpt, model_);
  const auto& named = model_.named_parameters();
  for (std::size_t i = 0; i < named.size(); ++i) {
    const Shape s = named[i].second.shape();
    ckpt.tensors.push_back({"adam.m/" + named[i].first, s, adam_.m[i]});
    ckpt.tensors.push_back({"adam.v/" + named[i].first, s, adam_.v[i]});
    if (!best_values_.empty()) ckpt.tensors.push_back({"best/" + named[i].first, s, best_values_[i]});
  }
  std::ostringstream rng_state;
  rng_state << rng_;
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& r : history_) {
    hist.push_back({{"epoch", r.epoch},
                    {"train", loss_json(r.train)},
                    {"valid", loss_json(r.valid.mean)},
                    {"valid_mae", r.valid.mae},
                    {"valid_n", r.valid.n},
                    {"lr", r.lr}});
  }
  ckpt.trainer = {{"adam_t", adam_.t},
                  {"rng", rng_state.str()},
                  {"step", step_},
                  {"epoch", epoch_},
                  {"batch_in_epoch", batch_in_epoch_},
                  {"order", order_},
                  {"epoch_sum", loss_json(epoch_sum_)},
                  {"epoch_seen", epoch_seen_},
                  {"last_lr", last_lr_},
                  {"best_epoch", best_epoch_ ? nlohmann::json(*best_epoch_) : nlohmann::json()},
                  {"best_valid", best_valid_},
                  {"history", hist}};
  return ckpt;
}

void Trainer::restore(const Checkpoint& ckpt) {
  check_vocab_matches(ckpt.vocab, bundle_);
  load_model_tensors(ckpt, model_);
  if (ckpt.trainer.is_null()) throw CheckpointError("checkpoint has no trainer state to resume from");
  const auto& named = model_.named_parameters();
  std::vector<std::vector<double>> best;
  for (std::size_t i = 0; i < named.size(); ++i) {
    const TensorBlob* m = ckpt.find("adam.m/" + named[i].first);
    const TensorBlob* v = ckpt.find("adam.v/" + named[i].first);
    if (!m || !v) throw CheckpointError("checkpoint lacks optimizer state for " + named[i].first);
    adam_.m[i] = m->data;
    adam_.v[i] = v->data;
    if (const TensorBlob* b = ckpt.find("best/" + named[i].first)) best.push_back(b->data);
  }
  best_values_ = std::move(best);
  const auto& t = ckpt.trainer;
  try {
    adam_.t = t.at("adam_t").get<long long>();
    std::istringstream rs(t.at("rng").get<std::string>());
    rs >> rng_;
    if (!rs) throw CheckpointError("checkpoint RNG state is unreadable");
    step_ = t.at("step");
    epoch_ = t.at("epoch");
    batch_in_epoch_ = t.at("batch_in_epoch");
    order_ = t.at("order").get<std::vector<std::size_t>>();
    epoch_sum_ = loss_from_json(t.at("epoch_sum"));
    epoch_seen_ = t.at("epoch_seen");
    last_lr_ = t.at("last_lr");
    best_epoch_.reset();
    if (!t.at("best_epoch").is_null()) best_epoch_ = t.at("best_epoch").get<std::size_t>();
    best_valid_ = t.at("best_valid");
    history_.clear();
    for (const auto& h : t.at("history")) {
      EpochRecord r;
      r.epoch = h.at("epoch");
      r.train = loss_from_json(h.at("train"));
      r.valid.mean = loss_from_json(h.at("valid"));
      r.valid.mae = h.at("valid_mae");
      r.valid.n = h.at("valid_n");
      r.lr = h.at("lr");
      history_.push_back(r);
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("bad trainer state: ") + e.what());
  }
  if (batch_in_epoch_ > 0 && order_.size() != bundle_.train.size()) {
    throw CheckpointError("checkpoint epoch order does not match the training split");
  }
}

nlohmann::json bundle_vocab_json(const Bundle& bundle) {
  return {{"words", bundle.vocab.tokens()},
          {"aspects", bundle.aspects.aspects},
          {"relations", bundle.relations},
          {"users", bundle.users},
          {"items", bundle.items}};
}

void check_vocab_matches(const nlohmann::json& stored, const Bundle& bundle) {
  const nlohmann::json have = bundle_vocab_json(bundle);
  for (const auto& [key, value] : have.items()) {
    if (!stored.contains(key) || stored.at(key) != value) {
      throw ConfigError("checkpoint " + key + " table does not match the dataset bundle");
    }
  }
}

}  // namespace hag
