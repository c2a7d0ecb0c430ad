#include "deskmt/decode.hpp"

#include <algorithm>
#include <cmath>

#include "deskmt/error.hpp"

namespace deskmt {

namespace {

constexpr double kMaskValue = -1e9;

Eigen::RowVectorXd layer_norm_row(const Eigen::RowVectorXd& x, const Matrix& gain, const Matrix& bias,
                                  double eps = 1e-5) {
  const double mean = x.mean();
  const double var = (x.array() - mean).square().sum() / static_cast<double>(x.size());
  Eigen::RowVectorXd normed = (x.array() - mean) / std::sqrt(var + eps);
  return (normed.array() * gain.row(0).array()) + bias.row(0).array();
}

Matrix layer_norm_rows(const Matrix& x, const Matrix& gain, const Matrix& bias, double eps = 1e-5) {
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) out.row(r) = layer_norm_row(x.row(r), gain, bias, eps);
  return out;
}

Eigen::RowVectorXd softmax_row(Eigen::RowVectorXd x) {
  const double m = x.maxCoeff();
  Eigen::ArrayXd e = (x.array() - m).exp();
  return (e / e.sum()).matrix().transpose();
}

struct Attn {
  const Matrix *wq, *wk, *wv, *wo, *bq, *bk, *bv, *bo;
};
struct Norm {
  const Matrix *gain, *bias;
};
struct Ff {
  const Matrix *w1, *b1, *w2, *b2;
};

Attn attn_of(const Model& m, const std::string& p) {
  return {&m.param(p + ".wq"), &m.param(p + ".wk"), &m.param(p + ".wv"), &m.param(p + ".wo"),
          &m.param(p + ".bq"), &m.param(p + ".bk"), &m.param(p + ".bv"), &m.param(p + ".bo")};
}
Norm norm_of(const Model& m, const std::string& p) { return {&m.param(p + ".gain"), &m.param(p + ".bias")}; }
Ff ff_of(const Model& m, const std::string& p) {
  return {&m.param(p + ".w1"), &m.param(p + ".b1"), &m.param(p + ".w2"), &m.param(p + ".b2")};
}

// Multi-head attention of a single query row against cached keys/values.
Eigen::RowVectorXd attend_row(const ModelConfig& c, const Attn& a, const Eigen::RowVectorXd& query_in,
                              const Matrix& k_cache, const Matrix& v_cache,
                              const std::vector<bool>* key_valid) {
  const int head_dim = c.model_dim / c.num_heads;
  Eigen::RowVectorXd q = query_in * (*a.wq) + a.bq->row(0);
  Eigen::RowVectorXd out(c.model_dim);
  for (int h = 0; h < c.num_heads; ++h) {
    const auto qh = q.segment(h * head_dim, head_dim);
    Eigen::RowVectorXd scores =
        (k_cache.middleCols(h * head_dim, head_dim) * qh.transpose()).transpose() /
        std::sqrt(static_cast<double>(head_dim));
    if (key_valid)
      for (Eigen::Index k = 0; k < scores.size(); ++k)
        if (!(*key_valid)[static_cast<size_t>(k)]) scores(k) = kMaskValue;
    Eigen::RowVectorXd weights = softmax_row(scores);
    out.segment(h * head_dim, head_dim) = weights * v_cache.middleCols(h * head_dim, head_dim);
  }
  return out * (*a.wo) + a.bo->row(0);
}

Eigen::RowVectorXd ff_row(const Ff& f, const Eigen::RowVectorXd& x) {
  Eigen::RowVectorXd h = (x * (*f.w1) + f.b1->row(0)).cwiseMax(0.0);
  return h * (*f.w2) + f.b2->row(0);
}

Matrix embed_rows(const Model& m, const std::vector<int>& ids, int pos_offset, const Matrix& pe) {
  const ModelConfig& c = m.config;
  const Matrix& emb = m.param("embedding");
  Matrix x(static_cast<Eigen::Index>(ids.size()), c.model_dim);
  const double scale = std::sqrt(static_cast<double>(c.model_dim));
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= c.vocab_size) throw DataError("token id out of vocabulary");
    x.row(static_cast<Eigen::Index>(i)) =
        emb.row(ids[i]) * scale + pe.row(pos_offset + static_cast<int>(i));
  }
  return x;
}

// Per-layer decoder cache: self-attention keys/values grown step by step,
// cross-attention keys/values fixed after encoding.
struct LayerCache {
  Matrix self_k, self_v;
  Matrix cross_k, cross_v;
};

struct DecoderState {
  std::vector<LayerCache> layers;
  int length = 0;
};

class IncrementalDecoder {
 public:
  IncrementalDecoder(const Model& model, const Matrix& enc_out, const std::vector<bool>& src_valid)
      : model_(model), src_valid_(src_valid), pe_(positional_encoding(model.config.max_seq_len,
                                                                      model.config.model_dim)) {
    const ModelConfig& c = model.config;
    base_.layers.resize(c.dec_layers);
    for (int l = 0; l < c.dec_layers; ++l) {
      const Attn cross = attn_of(model, "dec" + std::to_string(l) + ".cross");
      base_.layers[l].cross_k = enc_out * (*cross.wk);
      base_.layers[l].cross_k.rowwise() += cross.bk->row(0);
      base_.layers[l].cross_v = enc_out * (*cross.wv);
      base_.layers[l].cross_v.rowwise() += cross.bv->row(0);
    }
  }

  const DecoderState& base() const { return base_; }

  // Feeds one token, grows the cache, returns log-probs for the next token.
  Eigen::RowVectorXd step(DecoderState& state, int token) const {
    const ModelConfig& c = model_.config;
    if (state.length >= c.max_seq_len) throw RuntimeFailure("decoder exceeded max_seq_len");
    Eigen::RowVectorXd x =
        model_.param("embedding").row(token) * std::sqrt(static_cast<double>(c.model_dim)) +
        pe_.row(state.length);

    for (int l = 0; l < c.dec_layers; ++l) {
      const std::string p = "dec" + std::to_string(l);
      LayerCache& cache = state.layers[static_cast<size_t>(l)];

      const Norm ln_self = norm_of(model_, p + ".ln_self");
      Eigen::RowVectorXd normed = layer_norm_row(x, *ln_self.gain, *ln_self.bias);
      const Attn self = attn_of(model_, p + ".self");
      Eigen::RowVectorXd k_new = normed * (*self.wk) + self.bk->row(0);
      Eigen::RowVectorXd v_new = normed * (*self.wv) + self.bv->row(0);
      cache.self_k.conservativeResize(cache.self_k.rows() + 1, c.model_dim);
      cache.self_k.row(cache.self_k.rows() - 1) = k_new;
      cache.self_v.conservativeResize(cache.self_v.rows() + 1, c.model_dim);
      cache.self_v.row(cache.self_v.rows() - 1) = v_new;
      x += attend_row(c, self, normed, cache.self_k, cache.self_v, nullptr);

      const Norm ln_cross = norm_of(model_, p + ".ln_cross");
      normed = layer_norm_row(x, *ln_cross.gain, *ln_cross.bias);
      x += attend_row(c, attn_of(model_, p + ".cross"), normed, cache.cross_k, cache.cross_v, &src_valid_);

      const Norm ln_ff = norm_of(model_, p + ".ln_ff");
      normed = layer_norm_row(x, *ln_ff.gain, *ln_ff.bias);
      x += ff_row(ff_of(model_, p + ".ff"), normed);
    }
    ++state.length;

    const Norm ln_out = norm_of(model_, "dec.ln_out");
    Eigen::RowVectorXd out = layer_norm_row(x, *ln_out.gain, *ln_out.bias);
    Eigen::RowVectorXd logits =
        (model_.param("embedding") * out.transpose()).transpose() + model_.param("output.bias").row(0);

    const double m = logits.maxCoeff();
    const double lse = m + std::log((logits.array() - m).exp().sum());
    return logits.array() - lse;
  }

 private:
  const Model& model_;
  std::vector<bool> src_valid_;
  Matrix pe_;
  DecoderState base_;
};

}  // namespace

Matrix encode_inference(const Model& model, const std::vector<int>& src_ids) {
  if (src_ids.empty()) throw DataError("encode: empty source");
  const ModelConfig& c = model.config;
  if (static_cast<int>(src_ids.size()) > c.max_seq_len) throw DataError("source longer than max_seq_len");
  const Matrix pe = positional_encoding(c.max_seq_len, c.model_dim);
  Matrix x = embed_rows(model, src_ids, 0, pe);

  std::vector<bool> valid(src_ids.size());
  for (size_t i = 0; i < src_ids.size(); ++i) valid[i] = src_ids[i] != Vocabulary::kPadId;

  const int head_dim = c.model_dim / c.num_heads;
  for (int l = 0; l < c.enc_layers; ++l) {
    const std::string p = "enc" + std::to_string(l);
    const Norm ln_attn = norm_of(model, p + ".ln_attn");
    Matrix normed = layer_norm_rows(x, *ln_attn.gain, *ln_attn.bias);
    const Attn a = attn_of(model, p + ".attn");
    Matrix q = normed * (*a.wq);
    q.rowwise() += a.bq->row(0);
    Matrix k = normed * (*a.wk);
    k.rowwise() += a.bk->row(0);
    Matrix v = normed * (*a.wv);
    v.rowwise() += a.bv->row(0);
    Matrix merged(x.rows(), c.model_dim);
    for (int h = 0; h < c.num_heads; ++h) {
      Matrix scores = q.middleCols(h * head_dim, head_dim) *
                      k.middleCols(h * head_dim, head_dim).transpose() /
                      std::sqrt(static_cast<double>(head_dim));
      for (size_t kk = 0; kk < valid.size(); ++kk)
        if (!valid[kk]) scores.col(static_cast<Eigen::Index>(kk)).setConstant(kMaskValue);
      for (Eigen::Index r = 0; r < scores.rows(); ++r) scores.row(r) = softmax_row(scores.row(r));
      merged.middleCols(h * head_dim, head_dim) = scores * v.middleCols(h * head_dim, head_dim);
    }
    Matrix attn_out = merged * (*a.wo);
    attn_out.rowwise() += a.bo->row(0);
    x += attn_out;

    const Norm ln_ff = norm_of(model, p + ".ln_ff");
    normed = layer_norm_rows(x, *ln_ff.gain, *ln_ff.bias);
    const Ff f = ff_of(model, p + ".ff");
    Matrix h1 = normed * (*f.w1);
    h1.rowwise() += f.b1->row(0);
    h1 = h1.cwiseMax(0.0);
    Matrix h2 = h1 * (*f.w2);
    h2.rowwise() += f.b2->row(0);
    x += h2;
  }
  const Norm ln_out = norm_of(model, "enc.ln_out");
  return layer_norm_rows(x, *ln_out.gain, *ln_out.bias);
}

Matrix forced_logits_inference(const Model& model, const std::vector<int>& src_ids,
                               const std::vector<int>& tgt_ids) {
  Matrix enc = encode_inference(model, src_ids);
  std::vector<bool> src_valid(src_ids.size());
  for (size_t i = 0; i < src_ids.size(); ++i) src_valid[i] = src_ids[i] != Vocabulary::kPadId;
  IncrementalDecoder dec(model, enc, src_valid);
  DecoderState state = dec.base();
  Matrix logits(static_cast<Eigen::Index>(tgt_ids.size()), model.config.vocab_size);
  int input = Vocabulary::kBosId;
  for (size_t i = 0; i < tgt_ids.size(); ++i) {
    logits.row(static_cast<Eigen::Index>(i)) = dec.step(state, input);
    input = tgt_ids[i];
  }
  return logits;  // rows are log-probabilities
}

DecodeResult decode(const Model& model, const std::vector<int>& src_ids, int beam_size) {
  if (beam_size < 1) throw DataError("beam_size must be >= 1");
  if (src_ids.empty()) return {};

  Matrix enc = encode_inference(model, src_ids);
  std::vector<bool> src_valid(src_ids.size());
  for (size_t i = 0; i < src_ids.size(); ++i) src_valid[i] = src_ids[i] != Vocabulary::kPadId;
  const IncrementalDecoder dec(model, enc, src_valid);

  struct Hypothesis {
    std::vector<int> ids;
    double score = 0.0;  // cumulative log-prob
    DecoderState state;
    Eigen::RowVectorXd next_log_probs;
  };

  Hypothesis root;
  root.state = dec.base();
  root.next_log_probs = dec.step(root.state, Vocabulary::kBosId);
  std::vector<Hypothesis> live = {std::move(root)};

  struct Finished {
    std::vector<int> ids;
    double norm_score;
    bool eos;
  };
  std::vector<Finished> finished;
  // Steps are bounded by max_seq_len; one slot is taken by <s>.
  const int max_steps = model.config.max_seq_len - 1;

  for (int step = 0; step < max_steps && !live.empty(); ++step) {
    struct Candidate {
      size_t hyp;
      int token;
      double score;
    };
    std::vector<Candidate> candidates;
    candidates.reserve(live.size() * static_cast<size_t>(beam_size));
    for (size_t hi = 0; hi < live.size(); ++hi) {
      const Eigen::RowVectorXd& lp = live[hi].next_log_probs;
      // top beam_size tokens of this hypothesis, deterministic tie-break on id
      std::vector<int> order(static_cast<size_t>(lp.size()));
      for (size_t t = 0; t < order.size(); ++t) order[t] = static_cast<int>(t);
      std::partial_sort(order.begin(), order.begin() + std::min<size_t>(beam_size, order.size()),
                        order.end(), [&lp](int a, int b) {
                          if (lp(a) != lp(b)) return lp(a) > lp(b);
                          return a < b;
                        });
      for (int t = 0; t < beam_size && t < static_cast<int>(order.size()); ++t)
        candidates.push_back({hi, order[static_cast<size_t>(t)], live[hi].score + lp(order[static_cast<size_t>(t)])});
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.hyp != b.hyp) return a.hyp < b.hyp;
      return a.token < b.token;
    });

    std::vector<Hypothesis> next;
    for (const Candidate& cand : candidates) {
      if (static_cast<int>(next.size()) >= beam_size) break;
      if (cand.token == Vocabulary::kEosId) {
        const double len = static_cast<double>(live[cand.hyp].ids.size() + 1);
        finished.push_back({live[cand.hyp].ids, cand.score / len, true});
        continue;
      }
      Hypothesis h;
      h.ids = live[cand.hyp].ids;
      h.ids.push_back(cand.token);
      h.score = cand.score;
      h.state = live[cand.hyp].state;
      h.next_log_probs = dec.step(h.state, cand.token);
      next.push_back(std::move(h));
    }
    live = std::move(next);
    if (static_cast<int>(finished.size()) >= beam_size) break;
  }

  for (const Hypothesis& h : live)
    if (!h.ids.empty()) finished.push_back({h.ids, h.score / static_cast<double>(h.ids.size()), false});

  DecodeResult result;
  if (finished.empty()) return result;
  size_t best = 0;
  for (size_t i = 1; i < finished.size(); ++i)
    if (finished[i].norm_score > finished[best].norm_score) best = i;
  result.ids = finished[best].ids;
  result.norm_score = finished[best].norm_score;
  result.ended_with_eos = finished[best].eos;
  return result;
}

}  // namespace deskmt
