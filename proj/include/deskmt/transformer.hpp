#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "deskmt/tensor.hpp"
#include "deskmt/vocab.hpp"

namespace deskmt {

// Architecture description. Positional encoding is fixed sinusoidal; source
// embedding, target embedding and output projection share one matrix.
struct ModelConfig {
  int enc_layers = 2;
  int dec_layers = 2;
  int model_dim = 64;
  int num_heads = 4;
  int ff_dim = 256;
  int vocab_size = 0;
  int max_seq_len = 64;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

// The published base-scale configuration, kept as a named preset for
// parameter accounting; the executable default above is desk-sized.
ModelConfig base_preset(int vocab_size);

// Parameters as named matrices in a fixed order, plus training counters.
// Parameter values always sit on the float32 grid so checkpoints round-trip
// exactly (files store 32-bit floats).
struct Model {
  ModelConfig config;
  std::vector<std::pair<std::string, Matrix>> params;
  uint64_t update_count = 0;
  double best_dev_bleu = -1.0;
  int ckpts_without_improvement = 0;

  Matrix& param(const std::string& name);
  const Matrix& param(const std::string& name) const;
};

// Xavier fan-average initialization, deterministic per seed.
Model init_model(const ModelConfig& config, uint64_t seed);

// Exact element count; tied tensors are stored (and counted) once.
int64_t count_params(const Model& model);

// Tape-bound parameters for one forward/backward pass.
struct BoundModel {
  const Model* model = nullptr;
  Tape* tape = nullptr;
  std::map<std::string, Node*> nodes;

  Node* at(const std::string& name) const;
};
BoundModel bind(const Model& model, Tape& tape);

struct ForwardOptions {
  double dropout = 0.0;
  Rng* rng = nullptr;  // required when dropout > 0
};

// Final encoder layer states, one row per source position; pad positions
// (id == <pad>) are masked out of attention and flagged invalid.
struct EncoderStates {
  Node* states = nullptr;
  std::vector<bool> valid;
};

EncoderStates encode(const BoundModel& bm, const std::vector<int>& src_ids, const ForwardOptions& opts = {});

// Teacher-forced decoder pass. tgt_ids must end with </s>; the decoder input
// is <s> plus tgt_ids shifted right, so logits row i scores tgt_ids[i].
Node* decode_logits(const BoundModel& bm, const EncoderStates& enc, const std::vector<int>& tgt_ids,
                    const ForwardOptions& opts = {});

struct ForwardResult {
  Node* logits = nullptr;  // (tgt_len, vocab)
  EncoderStates encoder;
};
ForwardResult forward(const BoundModel& bm, const std::vector<int>& src_ids, const std::vector<int>& tgt_ids,
                      const ForwardOptions& opts = {});

// Mean label-smoothed cross entropy over non-pad positions (spec Eq. form).
Node* cross_entropy_smoothed(Tape& tape, Node* logits, const std::vector<int>& target_ids, double epsilon);

// 1 - cosine similarity of the two mean-pooled state sequences.
Node* cosine_alignment_loss(Tape& tape, const EncoderStates& src, const EncoderStates& tgt);

struct LossBreakdown {
  double ce = 0.0;
  double cd = 0.0;
  double combined = 0.0;
};
LossBreakdown combined_loss(double ce, double cd, double lambda);

// Sinusoidal position table (max_len, dim).
Matrix positional_encoding(int max_len, int dim);

// Versioned checkpoint container: text config block followed by named
// tensors with explicit shapes, little-endian float32 payload.
void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace deskmt
