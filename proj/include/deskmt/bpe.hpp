#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

namespace deskmt {

// Ordered BPE merge list. mode is "joint" or a language code.
struct MergeTable {
  std::vector<std::pair<std::string, std::string>> merges;
  std::string mode = "joint";
  size_t num_ops = 0;
};

// One subword. surface carries no markers; continuation tokens render with a
// trailing "@@", tagged tokens with a "#LL#" suffix (marker first: "low@@#de#").
struct SubwordToken {
  std::string surface;
  bool continuation = false;
  std::string lang_tag;  // empty when untagged

  bool operator==(const SubwordToken&) const = default;
};

std::string render_token(const SubwordToken& token);
SubwordToken parse_token(const std::string& rendered);

std::vector<std::string> render_tokens(const std::vector<SubwordToken>& tokens);

// Whitespace tokenization (any run of blanks separates words).
std::vector<std::string> split_words(const std::string& text);

// Learns merges over whitespace-delimited words initialised as code-point
// sequences. Each step merges the globally most frequent adjacent symbol pair
// (pair positions counted per word occurrence, ties broken by byte-wise
// lexicographic order of (left, right)) and stops early once the best pair
// occurs fewer than twice. Tag tokens like "<2en>" are skipped.
MergeTable learn_bpe(const std::vector<std::string>& lines, size_t num_ops);

// learn_bpe per language; every declared language needs a corpus.
std::map<std::string, MergeTable> learn_bpe_per_language(
    const std::map<std::string, std::vector<std::string>>& corpora_by_lang, size_t ops_per_lang);

// Greedy application of a merge table: repeatedly applies the applicable
// merge with the lowest learning rank. Caches per-word segmentations.
class BpeApplier {
 public:
  explicit BpeApplier(const MergeTable& table);

  std::vector<SubwordToken> apply(const std::string& text) const;
  std::vector<SubwordToken> apply_word(const std::string& word) const;

  const MergeTable& table() const { return table_; }

 private:
  MergeTable table_;
  std::unordered_map<std::string, size_t> rank_;  // "left\x01right" -> rank
  mutable std::unordered_map<std::string, std::vector<SubwordToken>> cache_;
  mutable std::mutex cache_mutex_;
};

std::vector<SubwordToken> apply_bpe(const MergeTable& table, const std::string& text);

// Inverse of apply_bpe on whitespace-normalized text: joins continuation
// tokens with their successor and words with single spaces. Language tags are
// stripped first. A dangling continuation marker at sequence end is dropped.
std::string detokenize(const std::vector<SubwordToken>& tokens);

// Marks every token with lang. Tag tokens ("<2LL>") pass through untouched;
// an already-tagged token is an error.
std::vector<SubwordToken> tag_subwords(const std::vector<SubwordToken>& tokens, const std::string& lang);

enum class StripMode { kStrict, kLenient };

// Strict: remove the tag only where it equals expected_lang; other tags stay
// part of the surface. Lenient: remove every tag.
std::vector<SubwordToken> strip_tags(const std::vector<SubwordToken>& tokens, StripMode mode,
                                     const std::string& expected_lang = "");

// Merge file format: "#desk-bpe v1 mode=<joint|LL> ops=<N>" then one
// "left right" pair per line, UTF-8, LF endings.
void save_merges(const MergeTable& table, const std::filesystem::path& path);
MergeTable load_merges(const std::filesystem::path& path);

}  // namespace deskmt
