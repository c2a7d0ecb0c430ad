#include "deskmt/train.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "deskmt/error.hpp"

namespace deskmt {

namespace {

struct BatchGraph {
  Node* ce = nullptr;    // mean over non-pad target positions in the batch
  Node* cd = nullptr;    // mean over pairs; null when lambda == 0
  Node* loss = nullptr;  // (1-lambda) CE + lambda CD
};

BatchGraph build_batch_graph(Tape& tape, const BoundModel& bm, const std::vector<TrainExample>& batch,
                             double label_smoothing, double lambda, const ForwardOptions& opts) {
  if (batch.empty()) throw DataError("empty batch");
  Node* ce_sum = nullptr;
  Node* cd_sum = nullptr;
  size_t total_positions = 0;
  for (const TrainExample& ex : batch) {
    ForwardResult fwd = forward(bm, ex.src, ex.tgt, opts);
    size_t n_valid = 0;
    Node* pair_ce = tape.cross_entropy_smoothed_sum(fwd.logits, ex.tgt, label_smoothing,
                                                    Vocabulary::kPadId, &n_valid);
    total_positions += n_valid;
    ce_sum = ce_sum ? tape.add(ce_sum, pair_ce) : pair_ce;
    if (lambda > 0.0) {
      if (ex.tgt_enc.empty())
        throw DataError("alignment loss requires encoder-side target sequences");
      EncoderStates tgt_enc = encode(bm, ex.tgt_enc, opts);
      Node* pair_cd = cosine_alignment_loss(tape, fwd.encoder, tgt_enc);
      cd_sum = cd_sum ? tape.add(cd_sum, pair_cd) : pair_cd;
    }
  }
  BatchGraph g;
  g.ce = tape.scale(ce_sum, 1.0 / static_cast<double>(total_positions));
  if (cd_sum) {
    g.cd = tape.scale(cd_sum, 1.0 / static_cast<double>(batch.size()));
    g.loss = tape.affine2(g.ce, g.cd, 1.0 - lambda, lambda);
  } else {
    g.loss = lambda == 0.0 ? g.ce : tape.scale(g.ce, 1.0 - lambda);
  }
  return g;
}

double to_f32_grid(double x) { return static_cast<double>(static_cast<float>(x)); }

class AdamOptimizer {
 public:
  explicit AdamOptimizer(const Model& model) {
    for (const auto& [_, p] : model.params) {
      m_.push_back(Matrix::Zero(p.rows(), p.cols()));
      v_.push_back(Matrix::Zero(p.rows(), p.cols()));
    }
  }

  void step(Model& model, const BoundModel& bm, double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (size_t i = 0; i < model.params.size(); ++i) {
      auto& [name, p] = model.params[i];
      const Node* node = bm.at(name);
      if (node->grad.size() == 0) continue;
      const Matrix& g = node->grad;
      m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * g;
      v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * g.cwiseProduct(g);
      const Matrix mhat = m_[i] / bc1;
      const Matrix vhat = v_[i] / bc2;
      p.array() -= lr * mhat.array() / (vhat.array().sqrt() + kEps);
      // keep parameters exactly representable in the float32 checkpoint format
      p = p.unaryExpr([](double x) { return to_f32_grid(x); });
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  std::vector<Matrix> m_, v_;
  uint64_t t_ = 0;
};

std::vector<std::vector<size_t>> make_batches(const std::vector<TrainExample>& train, int batch_tokens,
                                              Rng& rng) {
  std::vector<size_t> order(train.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<std::vector<size_t>> batches;
  std::vector<size_t> current;
  size_t tokens = 0;
  for (size_t idx : order) {
    const size_t cost = train[idx].src.size() + train[idx].tgt.size();
    if (!current.empty() && tokens + cost > static_cast<size_t>(batch_tokens)) {
      batches.push_back(std::move(current));
      current.clear();
      tokens = 0;
    }
    current.push_back(idx);
    tokens += cost;
  }
  if (!current.empty()) batches.push_back(std::move(current));
  return batches;
}

}  // namespace

void TrainingConfig::validate() const {
  if (batch_tokens < 1) throw DataError("batch_tokens must be >= 1");
  if (label_smoothing < 0.0 || label_smoothing >= 1.0) throw DataError("label_smoothing must be in [0, 1)");
  if (lambda < 0.0 || lambda > 1.0) throw DataError("lambda must be in [0, 1]");
  if (lr_reduce_patience < 1 || stop_patience < 1) throw DataError("patience values must be >= 1");
  if (checkpoint_interval < 1) throw DataError("checkpoint_interval must be >= 1");
  if (dropout < 0.0 || dropout >= 1.0) throw DataError("dropout must be in [0, 1)");
}

TrainingConfig base_training_preset() {
  TrainingConfig c;
  c.batch_tokens = 16384;
  c.label_smoothing = 0.1;
  c.initial_learning_rate = 0.0001;
  c.lr_reduce_factor = 0.7;
  c.lr_reduce_patience = 8;
  c.stop_patience = 10;
  c.checkpoint_interval = 4000;
  c.max_updates = 1001000;
  c.dropout = 0.1;
  return c;
}

TrainResult train_loop(const Model& start, const std::vector<TrainExample>& train,
                       const TrainingConfig& config, const DevScorer& dev_scorer, std::ostream* log) {
  config.validate();
  if (train.empty()) throw DataError("train_loop: empty training set");

  Model model = start;
  model.update_count = 0;
  model.best_dev_bleu = -1.0;
  model.ckpts_without_improvement = 0;

  AdamOptimizer adam(model);
  double lr = config.initial_learning_rate;
  int lr_bad_checkpoints = 0;

  TrainResult result;
  result.best = model;

  double ce_accum = 0.0, cd_accum = 0.0, loss_accum = 0.0;
  uint64_t accum_n = 0;
  int checkpoint_index = 0;
  uint64_t epoch = 0;
  bool stop = false;

  while (!stop) {
    Rng shuffle_rng(derive_seed(config.seed, "epoch " + std::to_string(epoch)));
    const auto batches = make_batches(train, config.batch_tokens, shuffle_rng);
    ++epoch;

    for (const auto& batch_idx : batches) {
      std::vector<TrainExample> batch;
      batch.reserve(batch_idx.size());
      for (size_t i : batch_idx) batch.push_back(train[i]);

      Rng dropout_rng(derive_seed(config.seed, "dropout " + std::to_string(model.update_count)));
      ForwardOptions opts;
      opts.dropout = config.dropout;
      opts.rng = &dropout_rng;

      Tape tape;
      BoundModel bm = bind(model, tape);
      BatchGraph g = build_batch_graph(tape, bm, batch, config.label_smoothing, config.lambda, opts);

      const double loss_value = g.loss->value(0, 0);
      if (!std::isfinite(loss_value)) {
        // abort with the last finite checkpoint
        if (log) *log << "divergence at update " << model.update_count << ", aborting\n";
        result.diverged = true;
        result.updates_done = model.update_count;
        if (result.history.empty()) result.best = start;
        return result;
      }
      tape.backward(g.loss);
      adam.step(model, bm, lr);
      ++model.update_count;

      ce_accum += g.ce->value(0, 0);
      cd_accum += g.cd ? g.cd->value(0, 0) : 0.0;
      loss_accum += loss_value;
      ++accum_n;

      if (model.update_count % static_cast<uint64_t>(config.checkpoint_interval) == 0) {
        ++checkpoint_index;
        const double dev_bleu = dev_scorer(model);

        CheckpointEntry entry;
        entry.checkpoint = checkpoint_index;
        entry.update = model.update_count;
        entry.ce = ce_accum / static_cast<double>(accum_n);
        entry.cd = cd_accum / static_cast<double>(accum_n);
        entry.loss = loss_accum / static_cast<double>(accum_n);
        entry.dev_bleu = dev_bleu;
        entry.learning_rate = lr;
        ce_accum = cd_accum = loss_accum = 0.0;
        accum_n = 0;

        if (dev_bleu > model.best_dev_bleu) {
          model.best_dev_bleu = dev_bleu;
          model.ckpts_without_improvement = 0;
          lr_bad_checkpoints = 0;
          result.best = model;
        } else {
          ++model.ckpts_without_improvement;
          ++lr_bad_checkpoints;
          if (lr_bad_checkpoints >= config.lr_reduce_patience) {
            lr *= config.lr_reduce_factor;
            lr_bad_checkpoints = 0;
          }
        }
        result.history.push_back(entry);
        if (log) {
          *log << "ckpt=" << entry.checkpoint << " update=" << entry.update << std::setprecision(6)
               << " ce=" << entry.ce << " cd=" << entry.cd << " loss=" << entry.loss
               << " dev_bleu=" << entry.dev_bleu << " lr=" << entry.learning_rate
               << " best=" << model.best_dev_bleu << " stale=" << model.ckpts_without_improvement << "\n";
        }
        if (model.ckpts_without_improvement >= config.stop_patience) {
          stop = true;
          break;
        }
      }
      if (model.update_count >= static_cast<uint64_t>(config.max_updates)) {
        stop = true;
        break;
      }
    }
  }
  result.updates_done = model.update_count;
  // best dev score and staleness counters travel with the best checkpoint
  result.best.best_dev_bleu = model.best_dev_bleu;
  result.best.ckpts_without_improvement = model.ckpts_without_improvement;
  return result;
}

LossBreakdown batch_loss_value(const Model& model, const std::vector<TrainExample>& batch,
                               double label_smoothing, double lambda) {
  Tape tape;
  BoundModel bm = bind(model, tape);
  BatchGraph g = build_batch_graph(tape, bm, batch, label_smoothing, lambda, ForwardOptions{});
  LossBreakdown out;
  out.ce = g.ce->value(0, 0);
  out.cd = g.cd ? g.cd->value(0, 0) : 0.0;
  out.combined = g.loss->value(0, 0);
  return out;
}

GradCheckReport grad_check(const Model& model, const std::vector<TrainExample>& batch, size_t probe_count,
                           double lambda, double label_smoothing, uint64_t seed) {
  if (probe_count < 1) throw DataError("probe_count must be >= 1");
  Model work = model;

  // Analytic gradients once.
  Tape tape;
  BoundModel bm = bind(work, tape);
  BatchGraph g = build_batch_graph(tape, bm, batch, label_smoothing, lambda, ForwardOptions{});
  tape.backward(g.loss);
  std::vector<Matrix> grads;
  for (const auto& [name, p] : work.params) {
    const Node* node = bm.at(name);
    grads.push_back(node->grad.size() == 0 ? Matrix::Zero(p.rows(), p.cols()) : node->grad);
  }

  const double h = 1e-3;
  Rng rng(derive_seed(seed, "grad probes"));
  GradCheckReport report;
  const size_t n_tensors = work.params.size();
  const size_t per_tensor = (probe_count + n_tensors - 1) / n_tensors;

  for (size_t ti = 0; ti < n_tensors; ++ti) {
    Matrix& p = work.params[ti].second;
    for (size_t k = 0; k < per_tensor; ++k) {
      const Eigen::Index flat = static_cast<Eigen::Index>(rng.below(static_cast<uint64_t>(p.size())));
      const Eigen::Index r = flat / p.cols();
      const Eigen::Index c = flat % p.cols();
      const double orig = p(r, c);

      p(r, c) = orig + h;
      const double up = batch_loss_value(work, batch, label_smoothing, lambda).combined;
      p(r, c) = orig - h;
      const double down = batch_loss_value(work, batch, label_smoothing, lambda).combined;
      p(r, c) = orig;

      const double numeric = (up - down) / (2.0 * h);
      const double analytic = grads[ti](r, c);
      ++report.probes;
      if (std::abs(numeric) < 1e-12 && std::abs(analytic) < 1e-12) {
        ++report.skipped;
        continue;
      }
      const double rel = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
      report.max_rel_err = std::max(report.max_rel_err, rel);
    }
  }
  return report;
}

}  // namespace deskmt
