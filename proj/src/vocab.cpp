#include "deskmt/vocab.hpp"

#include <algorithm>
#include <set>

#include "deskmt/corpus.hpp"
#include "deskmt/error.hpp"
#include "deskmt/io.hpp"

namespace deskmt {

namespace {
const char* kSpecials[4] = {"<pad>", "<unk>", "<s>", "</s>"};
}

bool Vocabulary::is_reserved(const std::string& surface) {
  for (const char* s : kSpecials)
    if (surface == s) return true;
  return is_tag_token(surface);
}

Vocabulary::Vocabulary(std::vector<Entry> entries) : entries_(std::move(entries)) {
  index_.reserve(entries_.size());
  for (size_t i = 0; i < entries_.size(); ++i) {
    auto [it, inserted] = index_.emplace(entries_[i].surface, static_cast<int>(i));
    if (!inserted) throw DataError("duplicate vocabulary entry: " + entries_[i].surface);
  }
  for (int i = 0; i < 4; ++i)
    if (size() <= i || entries_[i].surface != kSpecials[i])
      throw DataError("vocabulary is missing reserved entries");
}

int Vocabulary::id(const std::string& surface) const {
  auto it = index_.find(surface);
  return it == index_.end() ? kUnkId : it->second;
}

bool Vocabulary::contains(const std::string& surface) const { return index_.count(surface) > 0; }

const std::string& Vocabulary::surface(int id) const {
  if (id < 0 || id >= size()) throw DataError("vocabulary id out of range: " + std::to_string(id));
  return entries_[static_cast<size_t>(id)].surface;
}

std::vector<int> Vocabulary::to_ids(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

std::vector<std::string> Vocabulary::to_tokens(const std::vector<int>& ids) const {
  std::vector<std::string> tokens;
  tokens.reserve(ids.size());
  for (int i : ids) tokens.push_back(surface(i));
  return tokens;
}

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& token_streams, uint64_t min_count,
                       const std::vector<std::string>& tag_langs) {
  if (min_count < 1) throw DataError("min_count must be >= 1");

  std::unordered_map<std::string, uint64_t> counts;
  std::set<std::string> tags;
  for (const auto& lang : tag_langs) {
    if (!valid_lang_code(lang)) throw DataError("invalid tag language: " + lang);
    tags.insert(target_tag(lang));
  }
  for (const auto& stream : token_streams)
    for (const auto& tok : stream) {
      if (is_tag_token(tok)) tags.insert(tok);
      else ++counts[tok];
    }

  std::vector<Vocabulary::Entry> entries;
  for (const char* s : kSpecials) entries.push_back({s, 0});
  for (const auto& t : tags) entries.push_back({t, 0});

  std::vector<Vocabulary::Entry> rest;
  rest.reserve(counts.size());
  for (const auto& [surface, count] : counts)
    if (count >= min_count) rest.push_back({surface, count});
  std::sort(rest.begin(), rest.end(), [](const Vocabulary::Entry& a, const Vocabulary::Entry& b) {
    return a.count != b.count ? a.count > b.count : a.surface < b.surface;
  });
  entries.insert(entries.end(), rest.begin(), rest.end());
  return Vocabulary(std::move(entries));
}

void save_vocab(const Vocabulary& vocab, const std::filesystem::path& path) {
  std::string buf;
  for (const auto& e : vocab.entries()) {
    buf += e.surface;
    buf += '\t';
    buf += std::to_string(e.count);
    buf += '\n';
  }
  io::atomic_write(path, buf);
}

Vocabulary load_vocab(const std::filesystem::path& path) {
  std::vector<Vocabulary::Entry> entries;
  for (const auto& line : io::read_lines(path)) {
    if (line.empty()) continue;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos) throw DataError(path.string() + ": malformed vocab line: " + line);
    entries.push_back({line.substr(0, tab), std::stoull(line.substr(tab + 1))});
  }
  return Vocabulary(std::move(entries));
}

}  // namespace deskmt
