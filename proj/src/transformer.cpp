#include "deskmt/transformer.hpp"

#include <cmath>
#include <cstring>
#include <functional>

#include <nlohmann/json.hpp>

#include "deskmt/error.hpp"
#include "deskmt/io.hpp"

namespace deskmt {

namespace {

constexpr double kMaskValue = -1e9;

double to_f32_grid(double x) { return static_cast<double>(static_cast<float>(x)); }

void quantize(Matrix& m) {
  m = m.unaryExpr([](double x) { return to_f32_grid(x); });
}

// Fixed parameter enumeration; init, Adam state and checkpoints all follow it.
struct ParamSpec {
  std::string name;
  int rows, cols;
  enum Kind { kWeight, kBias, kGain } kind;
};

std::vector<ParamSpec> param_specs(const ModelConfig& c) {
  std::vector<ParamSpec> specs;
  auto weight = [&specs](const std::string& n, int r, int co) { specs.push_back({n, r, co, ParamSpec::kWeight}); };
  auto bias = [&specs](const std::string& n, int co) { specs.push_back({n, 1, co, ParamSpec::kBias}); };
  auto norm = [&specs, &bias](const std::string& n, int d) {
    specs.push_back({n + ".gain", 1, d, ParamSpec::kGain});
    bias(n + ".bias", d);
  };
  const int d = c.model_dim;

  weight("embedding", c.vocab_size, d);
  bias("output.bias", c.vocab_size);

  auto attention = [&](const std::string& prefix) {
    for (const char* w : {"wq", "wk", "wv", "wo"}) weight(prefix + "." + w, d, d);
    for (const char* b : {"bq", "bk", "bv", "bo"}) bias(prefix + "." + b, d);
  };
  auto ff = [&](const std::string& prefix) {
    weight(prefix + ".w1", d, c.ff_dim);
    bias(prefix + ".b1", c.ff_dim);
    weight(prefix + ".w2", c.ff_dim, d);
    bias(prefix + ".b2", d);
  };

  for (int l = 0; l < c.enc_layers; ++l) {
    const std::string p = "enc" + std::to_string(l);
    norm(p + ".ln_attn", d);
    attention(p + ".attn");
    norm(p + ".ln_ff", d);
    ff(p + ".ff");
  }
  norm("enc.ln_out", d);

  for (int l = 0; l < c.dec_layers; ++l) {
    const std::string p = "dec" + std::to_string(l);
    norm(p + ".ln_self", d);
    attention(p + ".self");
    norm(p + ".ln_cross", d);
    attention(p + ".cross");
    norm(p + ".ln_ff", d);
    ff(p + ".ff");
  }
  norm("dec.ln_out", d);
  return specs;
}

}  // namespace

void ModelConfig::validate() const {
  if (model_dim < 1 || num_heads < 1 || ff_dim < 1 || enc_layers < 1 || dec_layers < 1 || max_seq_len < 1)
    throw DataError("model config: all dimensions must be >= 1");
  if (model_dim % num_heads != 0)
    throw DataError("model config: model_dim " + std::to_string(model_dim) + " not divisible by " +
                    std::to_string(num_heads) + " heads");
  if (vocab_size < 5) throw DataError("model config: vocab_size must cover the reserved ids");
}

ModelConfig base_preset(int vocab_size) {
  ModelConfig c;
  c.enc_layers = 6;
  c.dec_layers = 6;
  c.model_dim = 512;
  c.num_heads = 8;
  c.ff_dim = 2048;
  c.vocab_size = vocab_size;
  c.max_seq_len = 100;
  return c;
}

Matrix& Model::param(const std::string& name) {
  for (auto& [n, m] : params)
    if (n == name) return m;
  throw RuntimeFailure("unknown parameter: " + name);
}

const Matrix& Model::param(const std::string& name) const {
  for (const auto& [n, m] : params)
    if (n == name) return m;
  throw RuntimeFailure("unknown parameter: " + name);
}

Model init_model(const ModelConfig& config, uint64_t seed) {
  config.validate();
  Model model;
  model.config = config;
  Rng rng(derive_seed(seed, "model init"));
  for (const auto& spec : param_specs(config)) {
    Matrix m(spec.rows, spec.cols);
    switch (spec.kind) {
      case ParamSpec::kWeight: {
        const double bound = std::sqrt(6.0 / static_cast<double>(spec.rows + spec.cols));
        for (int r = 0; r < spec.rows; ++r)
          for (int c = 0; c < spec.cols; ++c) m(r, c) = (2.0 * rng.uniform01() - 1.0) * bound;
        break;
      }
      case ParamSpec::kBias:
        m.setZero();
        break;
      case ParamSpec::kGain:
        m.setOnes();
        break;
    }
    quantize(m);
    model.params.emplace_back(spec.name, std::move(m));
  }
  return model;
}

int64_t count_params(const Model& model) {
  int64_t total = 0;
  for (const auto& [_, m] : model.params) total += static_cast<int64_t>(m.size());
  return total;
}

Node* BoundModel::at(const std::string& name) const {
  auto it = nodes.find(name);
  if (it == nodes.end()) throw RuntimeFailure("parameter not bound: " + name);
  return it->second;
}

BoundModel bind(const Model& model, Tape& tape) {
  BoundModel bm;
  bm.model = &model;
  bm.tape = &tape;
  for (const auto& [name, m] : model.params) bm.nodes[name] = tape.leaf(m);
  return bm;
}

Matrix positional_encoding(int max_len, int dim) {
  Matrix pe(max_len, dim);
  for (int pos = 0; pos < max_len; ++pos) {
    for (int i = 0; i < dim / 2; ++i) {
      const double angle = pos / std::pow(10000.0, 2.0 * i / static_cast<double>(dim));
      pe(pos, 2 * i) = std::sin(angle);
      pe(pos, 2 * i + 1) = std::cos(angle);
    }
  }
  return pe;
}

namespace {

// (rows=query, cols=key) additive mask: 0 or kMaskValue.
Matrix key_padding_mask(int q_len, const std::vector<bool>& key_valid) {
  Matrix mask = Matrix::Zero(q_len, static_cast<Eigen::Index>(key_valid.size()));
  for (size_t k = 0; k < key_valid.size(); ++k)
    if (!key_valid[k]) mask.col(static_cast<Eigen::Index>(k)).setConstant(kMaskValue);
  return mask;
}

Matrix causal_mask(int len, const std::vector<bool>& valid) {
  Matrix mask = Matrix::Zero(len, len);
  for (int q = 0; q < len; ++q)
    for (int k = 0; k < len; ++k)
      if (k > q || !valid[static_cast<size_t>(k)]) mask(q, k) = kMaskValue;
  return mask;
}

Node* multi_head_attention(const BoundModel& bm, const std::string& prefix, Node* queries, Node* keys,
                           const Matrix& mask, const ForwardOptions& opts) {
  Tape& t = *bm.tape;
  const ModelConfig& c = bm.model->config;
  const int head_dim = c.model_dim / c.num_heads;

  Node* q = t.add_rowvec(t.matmul(queries, bm.at(prefix + ".wq")), bm.at(prefix + ".bq"));
  Node* k = t.add_rowvec(t.matmul(keys, bm.at(prefix + ".wk")), bm.at(prefix + ".bk"));
  Node* v = t.add_rowvec(t.matmul(keys, bm.at(prefix + ".wv")), bm.at(prefix + ".bv"));

  std::vector<Node*> heads;
  for (int h = 0; h < c.num_heads; ++h) {
    Node* qh = t.slice_cols(q, h * head_dim, head_dim);
    Node* kh = t.slice_cols(k, h * head_dim, head_dim);
    Node* vh = t.slice_cols(v, h * head_dim, head_dim);
    Node* scores = t.scale(t.matmul_nt(qh, kh), 1.0 / std::sqrt(static_cast<double>(head_dim)));
    scores = t.add_const(scores, mask);
    Node* attn = t.softmax_rows(scores);
    if (opts.dropout > 0.0) attn = t.dropout(attn, opts.dropout, *opts.rng);
    heads.push_back(t.matmul(attn, vh));
  }
  Node* merged = t.concat_cols(heads);
  return t.add_rowvec(t.matmul(merged, bm.at(prefix + ".wo")), bm.at(prefix + ".bo"));
}

Node* feed_forward(const BoundModel& bm, const std::string& prefix, Node* x, const ForwardOptions& opts) {
  Tape& t = *bm.tape;
  Node* h = t.relu(t.add_rowvec(t.matmul(x, bm.at(prefix + ".w1")), bm.at(prefix + ".b1")));
  if (opts.dropout > 0.0) h = t.dropout(h, opts.dropout, *opts.rng);
  return t.add_rowvec(t.matmul(h, bm.at(prefix + ".w2")), bm.at(prefix + ".b2"));
}

// Pre-norm sublayer: x + dropout(f(norm(x))).
Node* sublayer(const BoundModel& bm, const std::string& norm_prefix, Node* x, const ForwardOptions& opts,
               const std::function<Node*(Node*)>& f) {
  Tape& t = *bm.tape;
  Node* normed = t.layer_norm(x, bm.at(norm_prefix + ".gain"), bm.at(norm_prefix + ".bias"));
  Node* out = f(normed);
  if (opts.dropout > 0.0) out = t.dropout(out, opts.dropout, *opts.rng);
  return t.add(x, out);
}

Node* embed(const BoundModel& bm, const std::vector<int>& ids) {
  Tape& t = *bm.tape;
  const ModelConfig& c = bm.model->config;
  for (int id : ids)
    if (id < 0 || id >= c.vocab_size) throw DataError("token id out of vocabulary: " + std::to_string(id));
  if (static_cast<int>(ids.size()) > c.max_seq_len)
    throw DataError("sequence longer than max_seq_len: " + std::to_string(ids.size()));
  Node* e = t.gather_rows(bm.at("embedding"), ids);
  e = t.scale(e, std::sqrt(static_cast<double>(c.model_dim)));
  const Matrix pe = positional_encoding(c.max_seq_len, c.model_dim);
  return t.add_const(e, pe.topRows(static_cast<Eigen::Index>(ids.size())));
}

std::vector<bool> valid_mask(const std::vector<int>& ids) {
  std::vector<bool> valid(ids.size());
  for (size_t i = 0; i < ids.size(); ++i) valid[i] = ids[i] != Vocabulary::kPadId;
  return valid;
}

}  // namespace

EncoderStates encode(const BoundModel& bm, const std::vector<int>& src_ids, const ForwardOptions& opts) {
  if (src_ids.empty()) throw DataError("encode: empty source");
  EncoderStates enc;
  enc.valid = valid_mask(src_ids);
  Node* x = embed(bm, src_ids);
  const Matrix self_mask = key_padding_mask(static_cast<int>(src_ids.size()), enc.valid);
  for (int l = 0; l < bm.model->config.enc_layers; ++l) {
    const std::string p = "enc" + std::to_string(l);
    x = sublayer(bm, p + ".ln_attn", x, opts,
                 [&](Node* h) { return multi_head_attention(bm, p + ".attn", h, h, self_mask, opts); });
    x = sublayer(bm, p + ".ln_ff", x, opts, [&](Node* h) { return feed_forward(bm, p + ".ff", h, opts); });
  }
  enc.states = bm.tape->layer_norm(x, bm.at("enc.ln_out.gain"), bm.at("enc.ln_out.bias"));
  return enc;
}

Node* decode_logits(const BoundModel& bm, const EncoderStates& enc, const std::vector<int>& tgt_ids,
                    const ForwardOptions& opts) {
  if (tgt_ids.empty()) throw DataError("decode_logits: empty target");
  Tape& t = *bm.tape;

  std::vector<int> dec_input(tgt_ids.size());
  dec_input[0] = Vocabulary::kBosId;
  for (size_t i = 1; i < tgt_ids.size(); ++i) dec_input[i] = tgt_ids[i - 1];
  // Positions whose gold token is padding stay masked in self attention.
  std::vector<bool> valid = valid_mask(tgt_ids);

  Node* x = embed(bm, dec_input);
  const Matrix self_mask = causal_mask(static_cast<int>(dec_input.size()), valid);
  const Matrix cross_mask = key_padding_mask(static_cast<int>(dec_input.size()), enc.valid);
  for (int l = 0; l < bm.model->config.dec_layers; ++l) {
    const std::string p = "dec" + std::to_string(l);
    x = sublayer(bm, p + ".ln_self", x, opts,
                 [&](Node* h) { return multi_head_attention(bm, p + ".self", h, h, self_mask, opts); });
    x = sublayer(bm, p + ".ln_cross", x, opts, [&](Node* h) {
      return multi_head_attention(bm, p + ".cross", h, enc.states, cross_mask, opts);
    });
    x = sublayer(bm, p + ".ln_ff", x, opts, [&](Node* h) { return feed_forward(bm, p + ".ff", h, opts); });
  }
  x = t.layer_norm(x, bm.at("dec.ln_out.gain"), bm.at("dec.ln_out.bias"));
  // Tied output projection: logits = x E^T + b.
  return t.add_rowvec(t.matmul_nt(x, bm.at("embedding")), bm.at("output.bias"));
}

ForwardResult forward(const BoundModel& bm, const std::vector<int>& src_ids, const std::vector<int>& tgt_ids,
                      const ForwardOptions& opts) {
  ForwardResult r;
  r.encoder = encode(bm, src_ids, opts);
  r.logits = decode_logits(bm, r.encoder, tgt_ids, opts);
  return r;
}

Node* cross_entropy_smoothed(Tape& tape, Node* logits, const std::vector<int>& target_ids, double epsilon) {
  if (epsilon < 0.0 || epsilon >= 1.0) throw DataError("label smoothing must be in [0, 1)");
  size_t n_valid = 0;
  Node* sum = tape.cross_entropy_smoothed_sum(logits, target_ids, epsilon, Vocabulary::kPadId, &n_valid);
  return tape.scale(sum, 1.0 / static_cast<double>(n_valid));
}

Node* cosine_alignment_loss(Tape& tape, const EncoderStates& src, const EncoderStates& tgt) {
  Node* u = tape.mean_pool_rows(src.states, src.valid);
  Node* v = tape.mean_pool_rows(tgt.states, tgt.valid);
  return tape.cosine_distance(u, v);
}

LossBreakdown combined_loss(double ce, double cd, double lambda) {
  if (lambda < 0.0 || lambda > 1.0) throw DataError("lambda must be in [0, 1]");
  LossBreakdown out;
  out.ce = ce;
  out.cd = cd;
  out.combined = (1.0 - lambda) * ce + lambda * cd;
  return out;
}

namespace {

void put_u32(std::string& buf, uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

uint32_t get_u32(const std::string& buf, size_t& at) {
  if (at + 4 > buf.size()) throw DataError("truncated checkpoint");
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<uint8_t>(buf[at + i])) << (8 * i);
  at += 4;
  return v;
}

}  // namespace

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  nlohmann::json cfg;
  cfg["enc_layers"] = model.config.enc_layers;
  cfg["dec_layers"] = model.config.dec_layers;
  cfg["model_dim"] = model.config.model_dim;
  cfg["num_heads"] = model.config.num_heads;
  cfg["ff_dim"] = model.config.ff_dim;
  cfg["vocab_size"] = model.config.vocab_size;
  cfg["max_seq_len"] = model.config.max_seq_len;
  nlohmann::json meta;
  meta["model"] = cfg;
  meta["update_count"] = model.update_count;
  meta["best_dev_bleu"] = model.best_dev_bleu;
  meta["ckpts_without_improvement"] = model.ckpts_without_improvement;
  const std::string meta_text = meta.dump();

  std::string buf = "deskmt-ckpt v1\n";
  put_u32(buf, static_cast<uint32_t>(meta_text.size()));
  buf += meta_text;
  put_u32(buf, static_cast<uint32_t>(model.params.size()));
  for (const auto& [name, m] : model.params) {
    put_u32(buf, static_cast<uint32_t>(name.size()));
    buf += name;
    put_u32(buf, static_cast<uint32_t>(m.rows()));
    put_u32(buf, static_cast<uint32_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const float f = static_cast<float>(m(r, c));
        uint32_t bits;
        std::memcpy(&bits, &f, 4);
        put_u32(buf, bits);
      }
  }
  io::atomic_write(path, buf);
}

Model load_checkpoint(const std::filesystem::path& path) {
  const std::string buf = io::read_file(path);
  const std::string magic = "deskmt-ckpt v1\n";
  if (buf.compare(0, magic.size(), magic) != 0) throw DataError("not a deskmt checkpoint: " + path.string());
  size_t at = magic.size();
  const uint32_t meta_len = get_u32(buf, at);
  if (at + meta_len > buf.size()) throw DataError("truncated checkpoint");
  nlohmann::json meta = nlohmann::json::parse(buf.substr(at, meta_len));
  at += meta_len;

  Model model;
  const auto& cfg = meta.at("model");
  model.config.enc_layers = cfg.at("enc_layers").get<int>();
  model.config.dec_layers = cfg.at("dec_layers").get<int>();
  model.config.model_dim = cfg.at("model_dim").get<int>();
  model.config.num_heads = cfg.at("num_heads").get<int>();
  model.config.ff_dim = cfg.at("ff_dim").get<int>();
  model.config.vocab_size = cfg.at("vocab_size").get<int>();
  model.config.max_seq_len = cfg.at("max_seq_len").get<int>();
  model.update_count = meta.at("update_count").get<uint64_t>();
  model.best_dev_bleu = meta.at("best_dev_bleu").get<double>();
  model.ckpts_without_improvement = meta.at("ckpts_without_improvement").get<int>();

  const uint32_t n_tensors = get_u32(buf, at);
  for (uint32_t i = 0; i < n_tensors; ++i) {
    const uint32_t name_len = get_u32(buf, at);
    if (at + name_len > buf.size()) throw DataError("truncated checkpoint");
    std::string name = buf.substr(at, name_len);
    at += name_len;
    const uint32_t rows = get_u32(buf, at);
    const uint32_t cols = get_u32(buf, at);
    Matrix m(rows, cols);
    for (uint32_t r = 0; r < rows; ++r)
      for (uint32_t c = 0; c < cols; ++c) {
        const uint32_t bits = get_u32(buf, at);
        float f;
        std::memcpy(&f, &bits, 4);
        m(r, c) = static_cast<double>(f);
      }
    model.params.emplace_back(std::move(name), std::move(m));
  }

  const auto specs = param_specs(model.config);
  if (specs.size() != model.params.size()) throw DataError("checkpoint parameter list mismatch");
  for (size_t i = 0; i < specs.size(); ++i) {
    const auto& [name, m] = model.params[i];
    if (name != specs[i].name || m.rows() != specs[i].rows || m.cols() != specs[i].cols)
      throw DataError("checkpoint tensor mismatch at " + specs[i].name);
  }
  return model;
}

}  // namespace deskmt
