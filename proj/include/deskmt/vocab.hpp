#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

namespace deskmt {

// Dense subword -> id map. Ids 0..3 are <pad>, <unk>, <s>, </s>; every
// "<2LL>" tag follows (sorted); remaining entries are ordered by descending
// count, ties broken lexicographically.
class Vocabulary {
 public:
  static constexpr int kPadId = 0;
  static constexpr int kUnkId = 1;
  static constexpr int kBosId = 2;
  static constexpr int kEosId = 3;

  struct Entry {
    std::string surface;
    uint64_t count = 0;
  };

  Vocabulary() = default;
  explicit Vocabulary(std::vector<Entry> entries);

  int id(const std::string& surface) const;  // kUnkId when absent
  bool contains(const std::string& surface) const;
  const std::string& surface(int id) const;
  int size() const { return static_cast<int>(entries_.size()); }
  const std::vector<Entry>& entries() const { return entries_; }

  std::vector<int> to_ids(const std::vector<std::string>& tokens) const;
  std::vector<std::string> to_tokens(const std::vector<int>& ids) const;

  static bool is_reserved(const std::string& surface);

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, int> index_;
};

// Builds a vocabulary over streams of rendered subword tokens. Tokens with
// count < min_count are dropped; tag tokens for tag_langs are reserved even
// if unseen.
Vocabulary build_vocab(const std::vector<std::vector<std::string>>& token_streams, uint64_t min_count,
                       const std::vector<std::string>& tag_langs = {});

// TSV "surface<TAB>count", one line per id, in id order.
void save_vocab(const Vocabulary& vocab, const std::filesystem::path& path);
Vocabulary load_vocab(const std::filesystem::path& path);

}  // namespace deskmt
