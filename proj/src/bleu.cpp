#include "deskmt/bleu.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "deskmt/error.hpp"

namespace deskmt {

namespace {

void replace_all(std::string& s, const std::string& from, const std::string& to) {
  size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

// The 13a punctuation class: {-~ [-` space-& (-+ :-@ and '/'.
bool is_13a_punct(unsigned char c) {
  return (c >= 0x7B && c <= 0x7E) || (c >= 0x5B && c <= 0x60) || (c >= 0x20 && c <= 0x26) ||
         (c >= 0x28 && c <= 0x2B) || (c >= 0x3A && c <= 0x40) || c == 0x2F;
}

bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }

}  // namespace

std::vector<std::string> tokenize_13a(const std::string& line) {
  std::string s = line;
  replace_all(s, "<skipped>", "");
  replace_all(s, "-\n", "");
  replace_all(s, "\n", " ");
  replace_all(s, "&quot;", "\"");
  replace_all(s, "&amp;", "&");
  replace_all(s, "&lt;", "<");
  replace_all(s, "&gt;", ">");
  s = " " + s + " ";

  // Left-to-right non-overlapping substitution passes, one per rule.
  std::string a;
  a.reserve(s.size() * 2);
  for (char c : s) {
    if (is_13a_punct(static_cast<unsigned char>(c))) {
      a += ' ';
      a += c;
      a += ' ';
    } else {
      a += c;
    }
  }

  std::string b;
  b.reserve(a.size());
  for (size_t i = 0; i < a.size();) {
    if (i + 1 < a.size() && !is_digit(a[i]) && (a[i + 1] == '.' || a[i + 1] == ',')) {
      b += a[i];
      b += ' ';
      b += a[i + 1];
      b += ' ';
      i += 2;
    } else {
      b += a[i++];
    }
  }

  std::string c;
  c.reserve(b.size());
  for (size_t i = 0; i < b.size();) {
    if (i + 1 < b.size() && (b[i] == '.' || b[i] == ',') && !is_digit(b[i + 1])) {
      c += ' ';
      c += b[i];
      c += ' ';
      c += b[i + 1];
      i += 2;
    } else {
      c += b[i++];
    }
  }

  std::string d;
  d.reserve(c.size());
  for (size_t i = 0; i < c.size();) {
    if (i + 1 < c.size() && is_digit(c[i]) && c[i + 1] == '-') {
      d += c[i];
      d += " - ";
      i += 2;
    } else {
      d += c[i++];
    }
  }

  std::vector<std::string> tokens;
  std::string tok;
  for (char ch : d) {
    if (ch == ' ' || ch == '\t') {
      if (!tok.empty()) tokens.push_back(std::move(tok)), tok.clear();
    } else {
      tok += ch;
    }
  }
  if (!tok.empty()) tokens.push_back(std::move(tok));
  return tokens;
}

double bleu_tokenized(const std::vector<std::vector<std::string>>& hypotheses,
                      const std::vector<std::vector<std::string>>& references) {
  constexpr int kMaxOrder = 4;
  if (references.empty()) throw DataError("bleu: empty reference corpus");
  if (hypotheses.size() != references.size())
    throw DataError("bleu: " + std::to_string(hypotheses.size()) + " hypotheses vs " +
                    std::to_string(references.size()) + " references");

  uint64_t correct[kMaxOrder] = {0};
  uint64_t total[kMaxOrder] = {0};
  uint64_t hyp_len = 0, ref_len = 0;

  auto ngram_counts = [](const std::vector<std::string>& toks, int n) {
    std::unordered_map<std::string, uint64_t> counts;
    if (static_cast<int>(toks.size()) < n) return counts;
    for (size_t i = 0; i + n <= toks.size(); ++i) {
      std::string key;
      for (int k = 0; k < n; ++k) {
        if (k) key += '\x01';
        key += toks[i + k];
      }
      ++counts[key];
    }
    return counts;
  };

  for (size_t s = 0; s < hypotheses.size(); ++s) {
    const auto& hyp = hypotheses[s];
    const auto& ref = references[s];
    hyp_len += hyp.size();
    ref_len += ref.size();
    for (int n = 1; n <= kMaxOrder; ++n) {
      const auto hc = ngram_counts(hyp, n);
      if (hc.empty()) continue;
      const auto rc = ngram_counts(ref, n);
      for (const auto& [gram, count] : hc) {
        total[n - 1] += count;
        auto it = rc.find(gram);
        if (it != rc.end()) correct[n - 1] += std::min(count, it->second);
      }
    }
  }

  // Exponential smoothing: each zero-match order halves a shrinking pseudo
  // precision 100 / (2^k * total). Orders with no n-grams at all end as 0.
  double precisions[kMaxOrder] = {0, 0, 0, 0};
  double smooth = 1.0;
  for (int n = 0; n < kMaxOrder; ++n) {
    if (total[n] == 0) break;
    if (correct[n] == 0) {
      smooth *= 2.0;
      precisions[n] = 100.0 / (smooth * static_cast<double>(total[n]));
    } else {
      precisions[n] = 100.0 * static_cast<double>(correct[n]) / static_cast<double>(total[n]);
    }
  }

  double brevity = 1.0;
  if (hyp_len == 0) return 0.0;
  if (hyp_len < ref_len)
    brevity = std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));

  // Geometric mean over ratios so an identity corpus scores exactly 100.
  double log_sum = 0.0;
  for (int n = 0; n < kMaxOrder; ++n) {
    if (precisions[n] <= 0.0) return 0.0;
    log_sum += std::log(precisions[n] / 100.0);
  }
  return brevity * 100.0 * std::exp(log_sum / kMaxOrder);
}

double bleu(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references) {
  std::vector<std::vector<std::string>> hyp_toks, ref_toks;
  hyp_toks.reserve(hypotheses.size());
  ref_toks.reserve(references.size());
  for (const auto& h : hypotheses) hyp_toks.push_back(tokenize_13a(h));
  for (const auto& r : references) ref_toks.push_back(tokenize_13a(r));
  return bleu_tokenized(hyp_toks, ref_toks);
}

}  // namespace deskmt
