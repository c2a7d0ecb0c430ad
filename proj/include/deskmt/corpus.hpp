#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace deskmt {

// One aligned sentence pair. Texts are NFC-normalized, trimmed, newline-free.
struct SentencePair {
  std::string source_text;
  std::string target_text;
  std::string source_lang;
  std::string target_lang;
};

// Sentence pairs sharing one translation direction. build_mixture outputs may
// mix directions; plain corpora never do.
struct ParallelCorpus {
  std::vector<SentencePair> pairs;
  std::string source_lang;
  std::string target_lang;

  size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
};

struct MixtureComponent {
  ParallelCorpus corpus;
  size_t target_size = 0;
};

struct MixtureSpec {
  std::vector<MixtureComponent> components;
  uint64_t shuffle_seed = 0;
};

// Target-language tag token, e.g. "<2en>".
std::string target_tag(const std::string& lang);

// True for tokens of the form "<2xx>" / "<2xxx>" with lowercase codes.
bool is_tag_token(const std::string& token);

bool valid_lang_code(const std::string& code);

// Loads two line-aligned UTF-8 files. Lines are trimmed and NFC-normalized.
// Throws DataError on mismatched line counts or invalid UTF-8.
ParallelCorpus load_parallel(const std::filesystem::path& src_path, const std::filesystem::path& tgt_path,
                             const std::string& src_lang, const std::string& tgt_lang);

// Prefixes "<2LL> " (LL = target language) to every source side. Not
// idempotent: an already-tagged source raises DataError.
ParallelCorpus prefix_target_tag(const ParallelCorpus& corpus);

// Replicates the corpus floor(target/n) times, then fills the remainder by
// sampling without replacement with the given seed. target < n is an error.
ParallelCorpus oversample(const ParallelCorpus& corpus, size_t target_size, uint64_t seed);

// Splits off n pairs (sampled without replacement) as a dev set; the rest
// keeps the original order.
std::pair<ParallelCorpus, ParallelCorpus> sample_dev(const ParallelCorpus& corpus, size_t n, uint64_t seed);

// Oversamples every component to its target size, concatenates, and shuffles
// with the spec's seed. Component i uses derive_seed(shuffle_seed, "component i").
ParallelCorpus build_mixture(const MixtureSpec& spec);

}  // namespace deskmt
