#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "deskmt/bpe.hpp"
#include "deskmt/decode.hpp"
#include "deskmt/langid.hpp"
#include "deskmt/metrics.hpp"
#include "deskmt/toygen.hpp"
#include "deskmt/train.hpp"

namespace deskmt {

enum class BridgeMode { kSingle, kMulti };
enum class SegmentationMode { kJoint, kPerLanguageOverlap, kPerLanguageTagged };

std::string to_string(BridgeMode m);
std::string to_string(SegmentationMode m);
BridgeMode bridge_mode_from_string(const std::string& s);
SegmentationMode segmentation_mode_from_string(const std::string& s);

// Declarative experiment description. Supervised pairs are hub<->L for every
// non-hub language, plus extra_pairs (both directions) in multi-bridge mode.
struct ExperimentPlan {
  std::string name = "toy";
  ToyLanguageSpec toy;
  BridgeMode bridge = BridgeMode::kSingle;
  SegmentationMode segmentation = SegmentationMode::kJoint;
  std::string hub = "en";
  std::vector<std::pair<std::string, std::string>> extra_pairs;     // multi-bridge additions
  std::vector<std::pair<std::string, std::string>> zero_shot_eval;  // evaluated, never trained

  size_t train_per_direction = 3000;
  size_t extra_per_direction = 400;
  size_t dev_per_direction = 40;
  size_t test_size = 300;

  size_t bpe_ops_joint = 240;
  size_t bpe_ops_per_lang = 90;
  uint64_t vocab_min_count = 1;

  ModelConfig model;        // vocab_size is filled from the data
  TrainingConfig training;  // seed is overridden per run
  std::vector<uint64_t> seeds = {1, 2, 3};
  int eval_beam = 1;

  void validate() const;
  std::vector<std::pair<std::string, std::string>> supervised_pairs() const;
};

nlohmann::json plan_to_json(const ExperimentPlan& plan);
ExperimentPlan plan_from_json(const nlohmann::json& j);
std::string plan_fingerprint(const ExperimentPlan& plan);

// Learned segmentation plus the network vocabulary; everything needed to map
// raw text to ids and decoder output back to text.
class SegmentationContext {
 public:
  SegmentationContext() = default;
  SegmentationContext(SegmentationMode mode, std::map<std::string, MergeTable> tables, Vocabulary vocab,
                      std::vector<std::string> languages);

  SegmentationMode mode() const { return mode_; }
  const Vocabulary& vocab() const { return vocab_; }
  const std::map<std::string, MergeTable>& tables() const { return tables_; }
  const std::vector<std::string>& languages() const { return languages_; }
  bool tagged() const { return mode_ == SegmentationMode::kPerLanguageTagged; }

  // Subword tokens of a raw sentence in its language (tagged in tagged mode).
  std::vector<SubwordToken> segment(const std::string& raw, const std::string& lang) const;

  // "<2tgt>" + segmented text, as network ids.
  std::vector<int> encoder_ids(const std::string& raw, const std::string& text_lang,
                               const std::string& tgt_lang) const;

  // Segmented text + </s>, as network ids.
  std::vector<int> target_ids(const std::string& raw, const std::string& lang) const;

  // Decoder ids back to text: reserved tokens dropped, tags stripped per
  // mode, continuation markers joined.
  std::string postprocess(const std::vector<int>& ids, const std::string& tgt_lang, StripMode strip) const;

  // Rendered subword tokens (reserved ids dropped), for overlap diagnostics.
  std::vector<std::string> rendered_tokens(const std::vector<int>& ids) const;

 private:
  const BpeApplier& applier_for(const std::string& lang) const;

  SegmentationMode mode_ = SegmentationMode::kJoint;
  std::map<std::string, MergeTable> tables_;
  std::map<std::string, std::shared_ptr<BpeApplier>> appliers_;
  Vocabulary vocab_;
  std::vector<std::string> languages_;
};

struct EvalSet {
  std::string direction;
  std::string src_lang, tgt_lang;
  bool zero_shot = false;
  std::vector<std::string> src_raw;
  std::vector<std::string> ref_raw;
};

// Everything shared across seeds: corpora, segmentation, id-mapped training
// data, dev and test sets, the language identifier.
struct PreparedExperiment {
  ExperimentPlan plan;
  ToyCorpora corpora;
  SegmentationContext ctx;
  std::vector<TrainExample> train;
  std::vector<EvalSet> dev_sets;
  std::vector<EvalSet> test_sets;
  LangIdModel langid;
};

PreparedExperiment prepare_experiment(const ExperimentPlan& plan);

// One evaluated direction for one checkpoint.
struct DirectionEval {
  std::string direction;
  bool zero_shot = false;
  double bleu = 0.0;                  // strict-mode score in tagged mode
  std::optional<double> bleu_lenient; // tagged mode only
  LanguageReport languages;
  double copy_rate = 0.0;
  double overlap_word = 0.0;
  double overlap_subword = 0.0;
};

struct EvalOptions {
  int beam = 1;
};

// Decode + score every direction of the given sets on a frozen checkpoint.
std::vector<DirectionEval> evaluate_matrix(const Model& model, const SegmentationContext& ctx,
                                           const std::vector<EvalSet>& sets, const LangIdModel& langid,
                                           const EvalOptions& options = {});

// Translates already-decoded text again through a pivot language using the
// same multilingual model: src -> pivot, re-segmentation, pivot -> tgt.
std::vector<std::string> pivot_translate(const Model& model, const SegmentationContext& ctx,
                                         const std::vector<std::string>& src_raw, const std::string& src_lang,
                                         const std::string& pivot_lang, const std::string& tgt_lang,
                                         int beam = 1);

// Dev scorer over the concatenated multi-direction dev set (scored as one
// corpus).
DevScorer make_dev_scorer(const SegmentationContext& ctx, const std::vector<EvalSet>& dev_sets, int beam);

struct SeedRun {
  uint64_t seed = 0;
  Model best;
  std::vector<CheckpointEntry> train_history;
  bool diverged = false;
  std::vector<DirectionEval> rows;
};

SeedRun run_seed(const PreparedExperiment& prep, uint64_t seed, std::ostream* log = nullptr);

struct EvalReport {
  std::string plan_name;
  std::string fingerprint;
  bool complete = true;
  std::vector<SeedRun> seeds;
  std::map<std::string, RunAggregate> bleu_by_direction;          // strict
  std::map<std::string, RunAggregate> bleu_lenient_by_direction;  // tagged mode
};

EvalReport assemble_report(const PreparedExperiment& prep, std::vector<SeedRun> seed_runs);

nlohmann::json report_to_json(const EvalReport& report);
std::string render_report_table(const EvalReport& report);

struct RunOptions {
  int jobs = 1;
  std::ostream* log = nullptr;
  std::filesystem::path artifacts_dir;  // empty: keep everything in memory
};

// The full protocol: prepare once, train/evaluate every seed, aggregate.
EvalReport run_experiment(const ExperimentPlan& plan, const RunOptions& options = {});

// Writes merges, vocab, language-ID model, per-seed checkpoints and the
// report (JSON + rendered table) under dir.
void save_experiment_artifacts(const PreparedExperiment& prep, const EvalReport& report,
                               const std::filesystem::path& dir);

struct BtOptions {
  std::vector<std::pair<std::string, std::string>> zero_resource;  // first entry: early-stop direction
  size_t n_synth = 400;
  size_t n_supervised = 400;
  int beam = 1;
  TrainingConfig training;
  uint64_t seed = 1;
};

struct BtResult {
  Model model;
  std::string held_out_direction;  // excluded from purely zero-resource claims
  size_t synthetic_pairs = 0;
  std::vector<CheckpointEntry> history;
};

// Direct zero-shot back-translation fine-tuning: synthesize sources for each
// zero-resource direction from monolingual target text, mix with supervised
// subsamples, fine-tune with early stopping on the first listed direction.
BtResult back_translate_finetune(const PreparedExperiment& prep, const Model& start, const BtOptions& options,
                                 std::ostream* log = nullptr);

struct AlignResult {
  Model model;
  std::vector<CheckpointEntry> history;  // cd column traces the alignment term
  double cd_heldout_start = 0.0;
  double cd_heldout_best = 0.0;
};

// Continues training with L = (1-lambda) CE + lambda CD for at most
// `patience` non-improving checkpoints; reports held-out mean CD before and
// after.
AlignResult align_finetune(const PreparedExperiment& prep, const Model& start, double lambda, int patience,
                           const TrainingConfig& training, std::ostream* log = nullptr);

// Mean cosine distance between pooled encoder states of parallel pairs.
double mean_cd(const Model& model, const SegmentationContext& ctx, const std::vector<EvalSet>& sets,
               size_t max_pairs_per_set = 50);

}  // namespace deskmt
