#pragma once

// Multi-task objective and the teacher-forced optimisation loop.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hag/checkpoint.hpp"
#include "hag/dataset.hpp"
#include "hag/model.hpp"
#include "hag/optim.hpp"
#include "hag/rng.hpp"

namespace hag {

struct LossBreakdown {
  double l_a = 0.0;
  double l_p = 0.0;
  double l_r = 0.0;
  double total = 0.0;  // w_a l_a + w_p l_p + w_r l_r
  double rating = 0.0;  // raw prediction
};

struct LossWeights {
  double aspect = 1.0;
  double explanation = 1.0;
  double rating = 1.0;
};

// Records the example's loss on `tape` and returns the scalar total.
Tensor example_loss(Tape& tape, const HagModel& model, const SideInput& user_side, const SideInput& item_side,
                    const EncodedExample& ex, LossBreakdown* parts = nullptr, const LossWeights& w = {});

// Forward only.
LossBreakdown compute_loss(const HagModel& model, const SideInput& user_side, const SideInput& item_side,
                           const EncodedExample& ex, const LossWeights& w = {});
LossBreakdown compute_loss(const HagModel& model, const Bundle& bundle, const EncodedExample& ex,
                           const LossWeights& w = {});

// Mean of per-example breakdowns; `mae` is over clamped predictions.
struct SplitLoss {
  LossBreakdown mean;
  double mae = 0.0;
  std::size_t n = 0;
};
SplitLoss evaluate_loss(const HagModel& model, const Bundle& bundle, const std::vector<EncodedExample>& examples,
                        const LossWeights& w = {});

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  LossBreakdown train;    // mean over the epoch's examples, as seen during the epoch
  SplitLoss valid;
  double lr = 0.0;        // rate of the epoch's last step
};

std::string format_history_csv(const std::vector<EpochRecord>& history);

class Trainer {
 public:
  Trainer(HagModel& model, const Bundle& bundle, const TrainConfig& cfg, std::uint64_t seed);

  // One optimizer step on the next batch. Closes the epoch (validation,
  // history, best-weight tracking) when the batch was its last.
  LossBreakdown step();
  bool finished() const { return step_ >= total_steps(); }
  // Runs until finished(); `on_epoch` sees each closed epoch.
  void fit(const std::function<void(const EpochRecord&)>& on_epoch = {});

  std::size_t batches_per_epoch() const;
  std::size_t total_steps() const { return cfg_.epochs * batches_per_epoch(); }
  std::size_t global_step() const { return step_; }
  std::size_t epoch() const { return epoch_; }
  const std::vector<EpochRecord>& history() const { return history_; }
  std::optional<std::size_t> best_epoch() const { return best_epoch_; }
  // Weights of the epoch with the lowest validation loss (current weights
  // before the first epoch closes).
  void copy_best_into(HagModel& target) const;

  // Full resumable state: model, optimizer, RNG, counters, history, best weights.
  Checkpoint to_checkpoint(const RunConfig& config) const;
  // Restores state written by to_checkpoint into this trainer and its model.
  void restore(const Checkpoint& ckpt);

 private:
  void begin_epoch();
  void close_epoch();

  HagModel& model_;
  const Bundle& bundle_;
  TrainConfig cfg_;
  LossWeights weights_;
  std::vector<Tensor> params_;
  AdamState adam_;
  Rng rng_;
  std::size_t step_ = 0;
  std::size_t epoch_ = 0;  // epochs closed so far
  std::size_t batch_in_epoch_ = 0;
  std::vector<std::size_t> order_;
  LossBreakdown epoch_sum_;
  std::size_t epoch_seen_ = 0;
  double last_lr_ = 0.0;
  std::vector<EpochRecord> history_;
  std::optional<std::size_t> best_epoch_;
  double best_valid_ = 0.0;
  std::vector<std::vector<double>> best_values_;
};

// Vocabularies and id maps of a bundle, for storing in checkpoints.
nlohmann::json bundle_vocab_json(const Bundle& bundle);
// Throws ConfigError when a checkpoint was trained on a different bundle.
void check_vocab_matches(const nlohmann::json& stored, const Bundle& bundle);

}  // namespace hag
