#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "deskmt/corpus.hpp"

namespace deskmt {

// Synthetic language family: every language renders the same hidden
// interlingua token sequence through its own word bijection, so translation
// is exactly word substitution and copying is exactly measurable. Homograph
// tokens (digit strings) render identically in every language.
struct ToyLanguageSpec {
  std::vector<std::string> languages = {"en", "de", "cs", "fr", "fi"};
  int base_vocab_size = 200;        // interlingua tokens excluding homographs
  int homograph_count = 10;
  double homograph_rate = 0.1;      // probability a sampled token is a homograph
  int min_sentence_len = 3;
  int max_sentence_len = 8;
  uint64_t seed = 1;

  void validate() const;
};

struct ToyDirectionRequest {
  std::string src_lang;
  std::string tgt_lang;
  size_t train_size = 0;  // 0: test set only
  size_t test_size = 0;
};

struct ToyCorpora {
  std::map<std::string, ParallelCorpus> train;  // key "src-tgt"
  std::map<std::string, ParallelCorpus> test;
  // raw monolingual sentences per language, e.g. for language-ID training
  std::map<std::string, std::vector<std::string>> monolingual;
};

std::string direction_key(const std::string& src, const std::string& tgt);

// Deterministic per spec.seed. Train and test draws are disjoint as
// interlingua sentences across the whole request set.
ToyCorpora gen_toy_languages(const ToyLanguageSpec& spec, const std::vector<ToyDirectionRequest>& requests);

// The per-language word list (index = interlingua id), exposed for tests.
std::vector<std::string> toy_lexicon(const ToyLanguageSpec& spec, const std::string& lang);

}  // namespace deskmt
