#include "oracles.hpp"

#include <random>
#include <sstream>

#include "deskmt/unicode.hpp"

namespace oracles {

namespace {

std::vector<std::vector<std::string>> words_as_symbols(const std::vector<std::string>& lines) {
  std::vector<std::vector<std::string>> words;
  for (const auto& line : lines) {
    std::istringstream ss(line);
    std::string w;
    while (ss >> w) {
      if (w.size() >= 5 && w[0] == '<' && w[1] == '2' && w.back() == '>') continue;  // tag tokens
      words.push_back(deskmt::unicode::split_code_points(w));
    }
  }
  return words;
}

void merge_in_place(std::vector<std::string>& syms, const std::string& left, const std::string& right) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < syms.size()) {
    if (i + 1 < syms.size() && syms[i] == left && syms[i + 1] == right) {
      out.push_back(left + right);
      i += 2;
    } else {
      out.push_back(syms[i]);
      i += 1;
    }
  }
  syms = out;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> learn_bpe_reference(const std::vector<std::string>& lines,
                                                                     size_t num_ops) {
  std::vector<std::pair<std::string, std::string>> merges;
  auto words = words_as_symbols(lines);
  for (size_t op = 0; op < num_ops; ++op) {
    std::map<std::pair<std::string, std::string>, uint64_t> counts;
    for (const auto& w : words)
      for (size_t i = 0; i + 1 < w.size(); ++i) counts[{w[i], w[i + 1]}] += 1;

    std::pair<std::string, std::string> best;
    uint64_t best_count = 0;
    for (const auto& [pair, count] : counts) {
      if (count > best_count || (count == best_count && best_count > 0 && pair < best)) {
        best = pair;
        best_count = count;
      }
    }
    if (best_count < 2) break;
    for (auto& w : words) merge_in_place(w, best.first, best.second);
    merges.push_back(best);
  }
  return merges;
}

std::vector<std::string> apply_bpe_reference(const std::vector<std::pair<std::string, std::string>>& merges,
                                             const std::string& word) {
  auto syms = deskmt::unicode::split_code_points(word);
  while (true) {
    size_t chosen = merges.size();
    for (size_t m = 0; m < merges.size() && chosen == merges.size(); ++m)
      for (size_t i = 0; i + 1 < syms.size(); ++i)
        if (syms[i] == merges[m].first && syms[i + 1] == merges[m].second) {
          chosen = m;
          break;
        }
    if (chosen == merges.size()) break;
    merge_in_place(syms, merges[chosen].first, merges[chosen].second);
  }
  return syms;
}

std::vector<std::string> segment_line_reference(const std::vector<std::pair<std::string, std::string>>& merges,
                                                const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string w;
  while (ss >> w) {
    if (w.size() >= 5 && w[0] == '<' && w[1] == '2' && w.back() == '>') {
      out.push_back(w);
      continue;
    }
    auto syms = apply_bpe_reference(merges, w);
    for (size_t i = 0; i < syms.size(); ++i) out.push_back(i + 1 < syms.size() ? syms[i] + "@@" : syms[i]);
  }
  return out;
}

std::vector<size_t> sample_without_replacement_reference(size_t size, size_t n, uint64_t seed) {
  std::mt19937_64 eng(seed);
  auto below = [&eng](uint64_t bound) {
    const uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    uint64_t x = eng();
    while (x >= limit) x = eng();
    return x % bound;
  };
  std::vector<size_t> idx(size);
  for (size_t i = 0; i < size; ++i) idx[i] = i;
  for (size_t i = 0; i < n && i + 1 < size; ++i) {
    const size_t j = i + static_cast<size_t>(below(size - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n);
  return idx;
}

}  // namespace oracles
