#include "deskmt/toygen.hpp"

#include <algorithm>
#include <set>

#include "deskmt/error.hpp"
#include "deskmt/rng.hpp"

namespace deskmt {

namespace {

// Shared syllable bodies keep character statistics comparable across the
// family (joint BPE can merge across languages); the per-language signature
// letter keeps full words disjoint across languages by construction.
const char* kConsonants = "tnrlkmpv";
const char* kVowels = "aeiou";
const char* kSignatures = "sgjdhwzbcfqxy";

std::vector<std::string> syllable_universe() {
  std::vector<std::string> syllables;
  for (const char* c = kConsonants; *c; ++c)
    for (const char* v = kVowels; *v; ++v) syllables.push_back(std::string(1, *c) + *v);
  return syllables;
}

std::vector<std::string> language_syllables(const ToyLanguageSpec& spec, size_t lang_index,
                                            const std::string& lang) {
  auto all = syllable_universe();
  Rng rng(derive_seed(spec.seed, "syllables " + lang));
  rng.shuffle(all);
  all.resize(26);
  std::sort(all.begin(), all.end());
  (void)lang_index;
  return all;
}

std::vector<std::string> homograph_tokens(const ToyLanguageSpec& spec) {
  std::vector<std::string> out;
  for (int k = 0; k < spec.homograph_count; ++k) out.push_back(std::to_string(1900 + k));
  return out;
}

// Zipf(1) cumulative distribution over interlingua ids.
std::vector<double> zipf_cdf(int n) {
  std::vector<double> cdf(n);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    sum += 1.0 / static_cast<double>(i + 1);
    cdf[i] = sum;
  }
  for (double& x : cdf) x /= sum;
  return cdf;
}

int draw_from_cdf(const std::vector<double>& cdf, Rng& rng) {
  const double u = rng.uniform01();
  return static_cast<int>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
}

using Interlingua = std::vector<int>;  // ids < base_vocab are ordinary, >= base_vocab homographs

class ToyFamily {
 public:
  explicit ToyFamily(const ToyLanguageSpec& spec) : spec_(spec), cdf_(zipf_cdf(spec.base_vocab_size)) {
    spec.validate();
    homographs_ = homograph_tokens(spec);
    for (size_t li = 0; li < spec.languages.size(); ++li) {
      const std::string& lang = spec.languages[li];
      lexicons_[lang] = build_lexicon(li, lang);
    }
  }

  Interlingua sample_sentence(Rng& rng) const {
    const int span = spec_.max_sentence_len - spec_.min_sentence_len + 1;
    const int len = spec_.min_sentence_len + static_cast<int>(rng.below(static_cast<uint64_t>(span)));
    Interlingua sent(static_cast<size_t>(len));
    for (int i = 0; i < len; ++i) {
      if (!homographs_.empty() && rng.uniform01() < spec_.homograph_rate)
        sent[static_cast<size_t>(i)] =
            spec_.base_vocab_size + static_cast<int>(rng.below(homographs_.size()));
      else
        sent[static_cast<size_t>(i)] = draw_from_cdf(cdf_, rng);
    }
    return sent;
  }

  std::string render(const Interlingua& sent, const std::string& lang) const {
    const auto& lex = lexicons_.at(lang);
    std::string out;
    for (size_t i = 0; i < sent.size(); ++i) {
      if (i) out += ' ';
      const int id = sent[i];
      out += id >= spec_.base_vocab_size
                 ? homographs_[static_cast<size_t>(id - spec_.base_vocab_size)]
                 : lex[static_cast<size_t>(id)];
    }
    return out;
  }

  const std::vector<std::string>& lexicon(const std::string& lang) const { return lexicons_.at(lang); }

 private:
  std::vector<std::string> build_lexicon(size_t lang_index, const std::string& lang) const {
    const auto syllables = language_syllables(spec_, lang_index, lang);
    const char signature = kSignatures[lang_index % std::string(kSignatures).size()];
    Rng rng(derive_seed(spec_.seed, "lexicon " + lang));
    std::set<std::string> seen;
    std::vector<std::string> words;
    while (static_cast<int>(words.size()) < spec_.base_vocab_size) {
      const size_t n_syll = 2 + rng.below(2);
      std::string w;
      for (size_t s = 0; s < n_syll; ++s) w += syllables[rng.below(syllables.size())];
      w += signature;
      if (seen.insert(w).second) words.push_back(std::move(w));
    }
    return words;
  }

  ToyLanguageSpec spec_;
  std::vector<double> cdf_;
  std::vector<std::string> homographs_;
  std::map<std::string, std::vector<std::string>> lexicons_;
};

}  // namespace

void ToyLanguageSpec::validate() const {
  if (languages.size() < 2) throw DataError("toy spec needs at least 2 languages");
  for (const auto& l : languages)
    if (!valid_lang_code(l)) throw DataError("invalid toy language code: " + l);
  if (languages.size() > std::string(kSignatures).size())
    throw DataError("toy spec supports at most " + std::to_string(std::string(kSignatures).size()) +
                    " languages");
  std::set<std::string> uniq(languages.begin(), languages.end());
  if (uniq.size() != languages.size()) throw DataError("duplicate toy language codes");
  if (base_vocab_size < 10) throw DataError("toy base_vocab_size must be >= 10");
  if (base_vocab_size > 600) throw DataError("toy base_vocab_size too large for the syllable space");
  if (homograph_count < 0 || homograph_count > 100) throw DataError("toy homograph_count out of range");
  if (homograph_rate < 0.0 || homograph_rate > 1.0) throw DataError("toy homograph_rate out of range");
  if (homograph_count == 0 && homograph_rate > 0.0)
    throw DataError("homograph_rate > 0 requires homograph tokens");
  if (min_sentence_len < 1 || max_sentence_len < min_sentence_len)
    throw DataError("bad toy sentence length range");
}

std::string direction_key(const std::string& src, const std::string& tgt) { return src + "-" + tgt; }

ToyCorpora gen_toy_languages(const ToyLanguageSpec& spec, const std::vector<ToyDirectionRequest>& requests) {
  ToyFamily family(spec);
  for (const auto& req : requests) {
    if (std::find(spec.languages.begin(), spec.languages.end(), req.src_lang) == spec.languages.end() ||
        std::find(spec.languages.begin(), spec.languages.end(), req.tgt_lang) == spec.languages.end())
      throw DataError("toy direction uses an undeclared language: " +
                      direction_key(req.src_lang, req.tgt_lang));
  }

  // One global draw ledger keeps every train and test sentence distinct.
  std::set<Interlingua> used;
  Rng rng(derive_seed(spec.seed, "sentences"));
  auto draw_unique = [&family, &used, &rng]() {
    for (int attempt = 0; attempt < 10000; ++attempt) {
      Interlingua s = family.sample_sentence(rng);
      if (used.insert(s).second) return s;
    }
    throw RuntimeFailure("toy sentence space exhausted; enlarge the vocabulary or lengths");
  };

  ToyCorpora out;
  for (const auto& req : requests) {
    const std::string key = direction_key(req.src_lang, req.tgt_lang);
    auto make_corpus = [&](size_t n) {
      ParallelCorpus c;
      c.source_lang = req.src_lang;
      c.target_lang = req.tgt_lang;
      for (size_t i = 0; i < n; ++i) {
        const Interlingua sent = draw_unique();
        c.pairs.push_back({family.render(sent, req.src_lang), family.render(sent, req.tgt_lang),
                           req.src_lang, req.tgt_lang});
      }
      return c;
    };
    if (req.train_size > 0) out.train[key] = make_corpus(req.train_size);
    if (req.test_size > 0) out.test[key] = make_corpus(req.test_size);
  }

  // Fresh monolingual pools per language (language-ID training, diagnostics).
  for (const auto& lang : spec.languages) {
    auto& pool = out.monolingual[lang];
    for (int i = 0; i < 400; ++i) pool.push_back(family.render(draw_unique(), lang));
  }
  return out;
}

std::vector<std::string> toy_lexicon(const ToyLanguageSpec& spec, const std::string& lang) {
  ToyFamily family(spec);
  return family.lexicon(lang);
}

}  // namespace deskmt
