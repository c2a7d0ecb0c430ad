#include "deskmt/bpe.hpp"

#include <algorithm>
#include <sstream>

#include "deskmt/corpus.hpp"
#include "deskmt/error.hpp"
#include "deskmt/io.hpp"
#include "deskmt/unicode.hpp"

namespace deskmt {

namespace {

constexpr const char* kContinuationMarker = "@@";

std::string pair_key(const std::string& left, const std::string& right) { return left + '\x01' + right; }

}  // namespace

std::string render_token(const SubwordToken& token) {
  std::string out = token.surface;
  if (token.continuation) out += kContinuationMarker;
  if (!token.lang_tag.empty()) out += "#" + token.lang_tag + "#";
  return out;
}

SubwordToken parse_token(const std::string& rendered) {
  SubwordToken t;
  std::string s = rendered;
  if (s.size() >= 5 && s.back() == '#') {
    const size_t open = s.rfind('#', s.size() - 2);
    if (open != std::string::npos && open + 1 < s.size() - 1) {
      const std::string code = s.substr(open + 1, s.size() - open - 2);
      if (valid_lang_code(code)) {
        t.lang_tag = code;
        s.erase(open);
      }
    }
  }
  if (s.size() >= 2 && s.compare(s.size() - 2, 2, kContinuationMarker) == 0) {
    t.continuation = true;
    s.erase(s.size() - 2);
  }
  t.surface = std::move(s);
  return t;
}

std::vector<std::string> render_tokens(const std::vector<SubwordToken>& tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(render_token(t));
  return out;
}

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> words;
  std::istringstream ss(text);
  std::string w;
  while (ss >> w) words.push_back(std::move(w));
  return words;
}

MergeTable learn_bpe(const std::vector<std::string>& lines, size_t num_ops) {
  MergeTable table;
  table.num_ops = num_ops;
  if (num_ops == 0) return table;

  // Word-type frequencies; tag tokens stay atomic and never join merges.
  std::unordered_map<std::string, uint64_t> word_count;
  for (const auto& line : lines)
    for (auto& w : split_words(line))
      if (!is_tag_token(w)) ++word_count[w];
  if (word_count.empty()) return table;

  struct WordType {
    std::vector<std::string> symbols;
    uint64_t count;
  };
  std::vector<WordType> words;
  words.reserve(word_count.size());
  for (const auto& [w, c] : word_count) words.push_back({unicode::split_code_points(w), c});
  // Fixed iteration order; the hash map above is unordered.
  std::sort(words.begin(), words.end(),
            [](const WordType& a, const WordType& b) { return a.symbols < b.symbols; });

  for (size_t op = 0; op < num_ops; ++op) {
    std::map<std::pair<std::string, std::string>, uint64_t> pair_counts;
    for (const auto& w : words)
      for (size_t i = 0; i + 1 < w.symbols.size(); ++i)
        pair_counts[{w.symbols[i], w.symbols[i + 1]}] += w.count;

    const std::pair<std::string, std::string>* best = nullptr;
    uint64_t best_count = 0;
    for (const auto& [pair, count] : pair_counts) {
      // std::map iterates in ascending (left, right) order, so on a count tie
      // the lexicographically smallest pair wins.
      if (count > best_count) {
        best_count = count;
        best = &pair;
      }
    }
    if (best == nullptr || best_count < 2) break;

    const std::string merged = best->first + best->second;
    for (auto& w : words) {
      auto& syms = w.symbols;
      size_t write = 0;
      for (size_t read = 0; read < syms.size();) {
        if (read + 1 < syms.size() && syms[read] == best->first && syms[read + 1] == best->second) {
          syms[write++] = merged;
          read += 2;
        } else {
          if (write != read) syms[write] = std::move(syms[read]);
          ++write;
          ++read;
        }
      }
      syms.resize(write);
    }
    table.merges.push_back(*best);
  }
  return table;
}

std::map<std::string, MergeTable> learn_bpe_per_language(
    const std::map<std::string, std::vector<std::string>>& corpora_by_lang, size_t ops_per_lang) {
  std::map<std::string, MergeTable> out;
  for (const auto& [lang, lines] : corpora_by_lang) {
    if (!valid_lang_code(lang)) throw DataError("invalid language code in per-language BPE: " + lang);
    MergeTable t = learn_bpe(lines, ops_per_lang);
    t.mode = lang;
    out[lang] = std::move(t);
  }
  return out;
}

BpeApplier::BpeApplier(const MergeTable& table) : table_(table) {
  for (size_t i = 0; i < table_.merges.size(); ++i) {
    const auto& [l, r] = table_.merges[i];
    rank_.emplace(pair_key(l, r), i);
  }
}

std::vector<SubwordToken> BpeApplier::apply_word(const std::string& word) const {
  if (is_tag_token(word)) return {SubwordToken{word, false, ""}};
  {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    auto it = cache_.find(word);
    if (it != cache_.end()) return it->second;
  }

  std::vector<std::string> syms = unicode::split_code_points(word);
  while (syms.size() > 1) {
    size_t best_rank = SIZE_MAX;
    for (size_t i = 0; i + 1 < syms.size(); ++i) {
      auto it = rank_.find(pair_key(syms[i], syms[i + 1]));
      if (it != rank_.end() && it->second < best_rank) best_rank = it->second;
    }
    if (best_rank == SIZE_MAX) break;
    const auto& [left, right] = table_.merges[best_rank];
    const std::string merged = left + right;
    size_t write = 0;
    for (size_t read = 0; read < syms.size();) {
      if (read + 1 < syms.size() && syms[read] == left && syms[read + 1] == right) {
        syms[write++] = merged;
        read += 2;
      } else {
        if (write != read) syms[write] = std::move(syms[read]);
        ++write;
        ++read;
      }
    }
    syms.resize(write);
  }

  std::vector<SubwordToken> tokens;
  tokens.reserve(syms.size());
  for (size_t i = 0; i < syms.size(); ++i) tokens.push_back({syms[i], i + 1 < syms.size(), ""});
  {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    cache_.emplace(word, tokens);
  }
  return tokens;
}

std::vector<SubwordToken> BpeApplier::apply(const std::string& text) const {
  std::vector<SubwordToken> out;
  for (const auto& word : split_words(text)) {
    auto toks = apply_word(word);
    out.insert(out.end(), toks.begin(), toks.end());
  }
  return out;
}

std::vector<SubwordToken> apply_bpe(const MergeTable& table, const std::string& text) {
  return BpeApplier(table).apply(text);
}

std::string detokenize(const std::vector<SubwordToken>& tokens) {
  std::string out;
  bool continuing = false;
  for (const auto& t : tokens) {
    if (!continuing && !out.empty()) out += ' ';
    out += t.surface;
    continuing = t.continuation;
  }
  return out;
}

std::vector<SubwordToken> tag_subwords(const std::vector<SubwordToken>& tokens, const std::string& lang) {
  if (!valid_lang_code(lang)) throw DataError("invalid language code for subword tags: " + lang);
  std::vector<SubwordToken> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (!t.lang_tag.empty()) throw DataError("token already tagged: " + render_token(t));
    if (is_tag_token(t.surface)) {
      out.push_back(t);
      continue;
    }
    SubwordToken tagged = t;
    tagged.lang_tag = lang;
    out.push_back(std::move(tagged));
  }
  return out;
}

std::vector<SubwordToken> strip_tags(const std::vector<SubwordToken>& tokens, StripMode mode,
                                     const std::string& expected_lang) {
  std::vector<SubwordToken> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    SubwordToken s = t;
    if (!s.lang_tag.empty()) {
      if (mode == StripMode::kLenient || s.lang_tag == expected_lang) {
        s.lang_tag.clear();
      } else {
        // Wrong-language tag stays visible: fold it into the surface.
        s.surface = render_token(s);
        s.continuation = false;
        s.lang_tag.clear();
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

void save_merges(const MergeTable& table, const std::filesystem::path& path) {
  std::string buf = "#desk-bpe v1 mode=" + table.mode + " ops=" + std::to_string(table.num_ops) + "\n";
  for (const auto& [l, r] : table.merges) {
    buf += l;
    buf += ' ';
    buf += r;
    buf += '\n';
  }
  io::atomic_write(path, buf);
}

MergeTable load_merges(const std::filesystem::path& path) {
  auto lines = io::read_lines(path);
  if (lines.empty() || lines[0].rfind("#desk-bpe v1 ", 0) != 0)
    throw DataError("not a desk-bpe v1 merge file: " + path.string());
  MergeTable table;
  std::istringstream header(lines[0].substr(13));
  std::string field;
  while (header >> field) {
    if (field.rfind("mode=", 0) == 0) table.mode = field.substr(5);
    else if (field.rfind("ops=", 0) == 0) table.num_ops = std::stoull(field.substr(4));
  }
  if (table.mode != "joint" && !valid_lang_code(table.mode))
    throw DataError("bad merge file mode: " + table.mode);
  for (size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const size_t sp = lines[i].find(' ');
    if (sp == std::string::npos || sp == 0 || sp + 1 >= lines[i].size())
      throw DataError(path.string() + ": malformed merge on line " + std::to_string(i + 1));
    table.merges.emplace_back(lines[i].substr(0, sp), lines[i].substr(sp + 1));
  }
  if (table.merges.size() > table.num_ops)
    throw DataError(path.string() + ": more merges than declared ops");
  return table;
}

}  // namespace deskmt
