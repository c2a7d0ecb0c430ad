#pragma once

#include <vector>

#include "deskmt/transformer.hpp"

namespace deskmt {

struct DecodeResult {
  std::vector<int> ids;      // generated tokens, <s>/</s> stripped
  double norm_score = 0.0;   // sum of token log-probs / generated length
  bool ended_with_eos = false;
};

// Length-normalized beam search over the frozen model; beam_size 1 is greedy.
// Terminates at </s> or after max_seq_len steps. Pure function of
// (model, src_ids, beam_size); safe to call concurrently.
DecodeResult decode(const Model& model, const std::vector<int>& src_ids, int beam_size);

// Inference-path encoder (no tape); exposed for tests that compare it
// against the training-path forward.
Matrix encode_inference(const Model& model, const std::vector<int>& src_ids);

// Teacher-forced logits on the inference path, mirroring forward().
Matrix forced_logits_inference(const Model& model, const std::vector<int>& src_ids,
                               const std::vector<int>& tgt_ids);

}  // namespace deskmt
