#include "deskmt/metrics.hpp"

#include <cmath>
#include <unordered_set>

#include "deskmt/bpe.hpp"
#include "deskmt/error.hpp"

namespace deskmt {

namespace {

std::vector<std::string> stripped_tokens(const std::string& sentence) {
  std::vector<std::string> out;
  for (const auto& w : split_words(sentence)) {
    SubwordToken t = parse_token(w);
    t.lang_tag.clear();  // lenient strip
    out.push_back(render_token(t));
  }
  return out;
}

double sentence_overlap(const std::vector<std::string>& src, const std::vector<std::string>& tgt) {
  if (tgt.empty()) return 0.0;
  std::unordered_set<std::string> src_set(src.begin(), src.end());
  size_t hits = 0;
  for (const auto& t : tgt)
    if (src_set.count(t)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(tgt.size());
}

}  // namespace

OverlapReport overlap_rate(const std::vector<std::string>& src_sentences,
                           const std::vector<std::string>& tgt_sentences, OverlapUnit unit) {
  if (src_sentences.size() != tgt_sentences.size())
    throw DataError("overlap_rate: " + std::to_string(src_sentences.size()) + " source vs " +
                    std::to_string(tgt_sentences.size()) + " target sentences");
  OverlapReport report;
  report.unit = unit;
  if (src_sentences.empty()) return report;
  double sum = 0.0;
  for (size_t i = 0; i < src_sentences.size(); ++i)
    sum += sentence_overlap(stripped_tokens(src_sentences[i]), stripped_tokens(tgt_sentences[i]));
  report.rate = sum / static_cast<double>(src_sentences.size());
  return report;
}

double copy_rate(const std::vector<std::string>& sources, const std::vector<std::string>& hypotheses) {
  if (sources.size() != hypotheses.size())
    throw DataError("copy_rate: " + std::to_string(sources.size()) + " sources vs " +
                    std::to_string(hypotheses.size()) + " hypotheses");
  if (sources.empty()) return 0.0;
  size_t copies = 0;
  for (size_t i = 0; i < sources.size(); ++i) {
    const double ov = sentence_overlap(stripped_tokens(sources[i]), stripped_tokens(hypotheses[i]));
    if (ov >= 0.8) ++copies;
  }
  return static_cast<double>(copies) / static_cast<double>(sources.size());
}

LanguageReport language_report(const std::vector<std::string>& hypotheses, const std::string& src_lang,
                               const std::string& tgt_lang, const LangIdModel& model) {
  for (const auto& lang : {src_lang, tgt_lang, std::string("en")})
    if (!model.covers(lang)) throw DataError("language identifier does not cover '" + lang + "'");

  size_t n_target = 0, n_english = 0, n_source = 0, n_other = 0;
  for (const auto& hyp : hypotheses) {
    const std::string lang = model.classify(hyp).lang;
    if (lang == tgt_lang || (tgt_lang == "en" && lang == "en")) ++n_target;
    else if (lang == "en") ++n_english;
    else if (lang == src_lang) ++n_source;
    else ++n_other;
  }
  LanguageReport report;
  const double n = hypotheses.empty() ? 1.0 : static_cast<double>(hypotheses.size());
  report.pct_target = 100.0 * static_cast<double>(n_target) / n;
  report.pct_english = 100.0 * static_cast<double>(n_english) / n;
  report.pct_source = 100.0 * static_cast<double>(n_source) / n;
  report.pct_other = 100.0 * static_cast<double>(n_other) / n;
  return report;
}

std::map<std::string, RunAggregate> aggregate_runs(
    const std::map<std::string, std::vector<double>>& per_seed_scores) {
  size_t expected = 0;
  bool first = true;
  std::map<std::string, RunAggregate> out;
  for (const auto& [direction, scores] : per_seed_scores) {
    if (scores.empty()) throw DataError("aggregate_runs: no scores for direction " + direction);
    if (first) {
      expected = scores.size();
      first = false;
    } else if (scores.size() != expected) {
      throw DataError("aggregate_runs: unequal seed counts (direction " + direction + ")");
    }
    RunAggregate agg;
    agg.n_seeds = scores.size();
    double sum = 0.0;
    for (double s : scores) sum += s;
    agg.mean = sum / static_cast<double>(scores.size());
    if (scores.size() >= 2) {
      double sq = 0.0;
      for (double s : scores) sq += (s - agg.mean) * (s - agg.mean);
      agg.std = std::sqrt(sq / static_cast<double>(scores.size() - 1));
    }
    out[direction] = agg;
  }
  return out;
}

}  // namespace deskmt
