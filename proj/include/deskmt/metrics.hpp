#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "deskmt/langid.hpp"

namespace deskmt {

enum class OverlapUnit { kWord, kSubword };

struct OverlapReport {
  OverlapUnit unit = OverlapUnit::kWord;
  double rate = 0.0;  // fraction in [0, 1]
};

struct LanguageReport {
  double pct_target = 0.0;
  double pct_english = 0.0;
  double pct_source = 0.0;
  double pct_other = 0.0;
};

struct RunAggregate {
  double mean = 0.0;
  std::optional<double> std;  // sample (n-1) deviation, set for n >= 2
  size_t n_seeds = 0;
};

// Macro-averaged fraction of target-side tokens whose surface (tags stripped
// leniently) also occurs among the source-side tokens. Tokens are whitespace
// delimited; the caller chooses the unit by what the sentences contain.
OverlapReport overlap_rate(const std::vector<std::string>& src_sentences,
                           const std::vector<std::string>& tgt_sentences, OverlapUnit unit);

// Fraction of hypotheses whose word-level overlap with their source is >= 0.8.
double copy_rate(const std::vector<std::string>& sources, const std::vector<std::string>& hypotheses);

// Classifies each hypothesis and buckets it as target / english / source /
// other. With an English target the english bucket folds into target.
LanguageReport language_report(const std::vector<std::string>& hypotheses, const std::string& src_lang,
                               const std::string& tgt_lang, const LangIdModel& model);

// Mean and sample standard deviation per direction across seeds.
std::map<std::string, RunAggregate> aggregate_runs(
    const std::map<std::string, std::vector<double>>& per_seed_scores);

}  // namespace deskmt
