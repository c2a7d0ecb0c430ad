#pragma once

#include <functional>
#include <ostream>
#include <vector>

#include "deskmt/transformer.hpp"

namespace deskmt {

// One training example in id space. tgt ends with </s>. tgt_enc is the target
// sentence prepared as encoder input (used by the alignment loss); it may be
// empty when lambda is 0.
struct TrainExample {
  std::vector<int> src;
  std::vector<int> tgt;
  std::vector<int> tgt_enc;
};

struct TrainingConfig {
  int batch_tokens = 1200;       // source+target tokens per update
  double label_smoothing = 0.1;
  double initial_learning_rate = 0.001;
  double lr_reduce_factor = 0.7;
  int lr_reduce_patience = 4;
  int stop_patience = 10;
  int checkpoint_interval = 200;  // updates between dev evaluations
  int max_updates = 20000;
  double lambda = 0.0;           // alignment-loss weight
  double dropout = 0.1;
  uint64_t seed = 1;

  void validate() const;
};

// The published large-scale settings, kept as a documented preset.
TrainingConfig base_training_preset();

struct CheckpointEntry {
  int checkpoint = 0;
  uint64_t update = 0;
  double ce = 0.0;       // mean training CE since the previous checkpoint
  double cd = 0.0;
  double loss = 0.0;
  double dev_bleu = 0.0;
  double learning_rate = 0.0;
};

struct TrainResult {
  Model best;                            // best checkpoint by dev BLEU
  std::vector<CheckpointEntry> history;  // one entry per checkpoint
  bool diverged = false;
  uint64_t updates_done = 0;
};

using DevScorer = std::function<double(const Model&)>;

// Adam training with dev-BLEU checkpointing: keeps the best checkpoint,
// reduces the learning rate after lr_reduce_patience non-improving
// checkpoints, stops after stop_patience of them or at max_updates.
// Deterministic per (config, seed). Non-finite loss aborts with the best
// checkpoint so far and diverged = true.
TrainResult train_loop(const Model& start, const std::vector<TrainExample>& train, const TrainingConfig& config,
                       const DevScorer& dev_scorer, std::ostream* log = nullptr);

// Loss of one batch without gradient tracking or dropout.
LossBreakdown batch_loss_value(const Model& model, const std::vector<TrainExample>& batch,
                               double label_smoothing, double lambda);

struct GradCheckReport {
  double max_rel_err = 0.0;
  size_t probes = 0;
  size_t skipped = 0;  // probes where both analytic and numeric were ~0
};

// Central-difference validation of the analytic gradient of the combined
// loss, h = 1e-3, probes spread over every parameter tensor.
GradCheckReport grad_check(const Model& model, const std::vector<TrainExample>& batch, size_t probe_count,
                           double lambda, double label_smoothing, uint64_t seed);

}  // namespace deskmt
