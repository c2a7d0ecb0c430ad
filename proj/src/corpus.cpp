#include "deskmt/corpus.hpp"

#include <algorithm>

#include "deskmt/error.hpp"
#include "deskmt/io.hpp"
#include "deskmt/rng.hpp"
#include "deskmt/unicode.hpp"

namespace deskmt {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\v\f");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\v\f");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string target_tag(const std::string& lang) { return "<2" + lang + ">"; }

bool valid_lang_code(const std::string& code) {
  if (code.size() < 2 || code.size() > 3) return false;
  return std::all_of(code.begin(), code.end(), [](char c) { return c >= 'a' && c <= 'z'; });
}

bool is_tag_token(const std::string& token) {
  if (token.size() < 5 || token.size() > 6) return false;
  if (token[0] != '<' || token[1] != '2' || token.back() != '>') return false;
  return valid_lang_code(token.substr(2, token.size() - 3));
}

ParallelCorpus load_parallel(const std::filesystem::path& src_path, const std::filesystem::path& tgt_path,
                             const std::string& src_lang, const std::string& tgt_lang) {
  if (!valid_lang_code(src_lang) || !valid_lang_code(tgt_lang))
    throw DataError("invalid language code: " + src_lang + "/" + tgt_lang);
  if (src_lang == tgt_lang) throw DataError("source and target language must differ: " + src_lang);

  auto src_lines = io::read_lines(src_path);
  auto tgt_lines = io::read_lines(tgt_path);
  if (src_lines.size() != tgt_lines.size())
    throw DataError("line count mismatch: " + src_path.string() + " has " + std::to_string(src_lines.size()) +
                    " lines, " + tgt_path.string() + " has " + std::to_string(tgt_lines.size()));

  ParallelCorpus corpus;
  corpus.source_lang = src_lang;
  corpus.target_lang = tgt_lang;
  corpus.pairs.reserve(src_lines.size());
  for (size_t i = 0; i < src_lines.size(); ++i) {
    SentencePair p;
    p.source_text = unicode::nfc(trim(src_lines[i]));
    p.target_text = unicode::nfc(trim(tgt_lines[i]));
    p.source_lang = src_lang;
    p.target_lang = tgt_lang;
    corpus.pairs.push_back(std::move(p));
  }
  return corpus;
}

ParallelCorpus prefix_target_tag(const ParallelCorpus& corpus) {
  ParallelCorpus out = corpus;
  for (auto& p : out.pairs) {
    const size_t sp = p.source_text.find(' ');
    const std::string first = sp == std::string::npos ? p.source_text : p.source_text.substr(0, sp);
    if (is_tag_token(first)) throw DataError("source already carries a target tag: " + p.source_text);
    p.source_text = target_tag(p.target_lang) + (p.source_text.empty() ? "" : " " + p.source_text);
  }
  return out;
}

ParallelCorpus oversample(const ParallelCorpus& corpus, size_t target_size, uint64_t seed) {
  const size_t n = corpus.size();
  if (target_size < n)
    throw DataError("oversample cannot downsample: corpus has " + std::to_string(n) + " pairs, target is " +
                    std::to_string(target_size));
  ParallelCorpus out;
  out.source_lang = corpus.source_lang;
  out.target_lang = corpus.target_lang;
  if (n == 0) {
    if (target_size > 0) throw DataError("cannot oversample an empty corpus to a positive size");
    return out;
  }
  out.pairs.reserve(target_size);
  const size_t copies = target_size / n;
  for (size_t c = 0; c < copies; ++c)
    out.pairs.insert(out.pairs.end(), corpus.pairs.begin(), corpus.pairs.end());
  const size_t remainder = target_size % n;
  if (remainder > 0) {
    Rng rng(seed);
    for (size_t idx : rng.sample_indices(n, remainder)) out.pairs.push_back(corpus.pairs[idx]);
  }
  return out;
}

std::pair<ParallelCorpus, ParallelCorpus> sample_dev(const ParallelCorpus& corpus, size_t n, uint64_t seed) {
  if (n > corpus.size())
    throw DataError("dev sample of " + std::to_string(n) + " exceeds corpus size " + std::to_string(corpus.size()));
  Rng rng(seed);
  const auto picked = rng.sample_indices(corpus.size(), n);
  std::vector<bool> in_dev(corpus.size(), false);
  for (size_t idx : picked) in_dev[idx] = true;

  ParallelCorpus dev, rest;
  dev.source_lang = rest.source_lang = corpus.source_lang;
  dev.target_lang = rest.target_lang = corpus.target_lang;
  for (size_t idx : picked) dev.pairs.push_back(corpus.pairs[idx]);
  for (size_t i = 0; i < corpus.size(); ++i)
    if (!in_dev[i]) rest.pairs.push_back(corpus.pairs[i]);
  return {std::move(dev), std::move(rest)};
}

ParallelCorpus build_mixture(const MixtureSpec& spec) {
  ParallelCorpus out;
  size_t i = 0;
  for (const auto& comp : spec.components) {
    if (comp.target_size < 1) throw DataError("mixture component target_size must be >= 1");
    const uint64_t comp_seed = derive_seed(spec.shuffle_seed, "component " + std::to_string(i));
    ParallelCorpus up = oversample(comp.corpus, comp.target_size, comp_seed);
    out.pairs.insert(out.pairs.end(), up.pairs.begin(), up.pairs.end());
    ++i;
  }
  // A mixture is heterogeneous; keep direction labels only if unique.
  if (spec.components.size() == 1) {
    out.source_lang = spec.components[0].corpus.source_lang;
    out.target_lang = spec.components[0].corpus.target_lang;
  }
  Rng rng(derive_seed(spec.shuffle_seed, "mixture shuffle"));
  rng.shuffle(out.pairs);
  return out;
}

}  // namespace deskmt
