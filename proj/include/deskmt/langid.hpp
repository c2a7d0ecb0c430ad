#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace deskmt {

// Character 1..3-gram multinomial language scorer with add-alpha smoothing
// and uniform priors. Stands in for an external language identifier.
class LangIdModel {
 public:
  static constexpr int kMaxOrder = 3;
  static constexpr double kAlpha = 0.1;

  struct Prediction {
    std::string lang;     // "unknown" for sentences under 3 characters
    double margin = 0.0;  // log-odds vs. the runner-up
  };

  Prediction classify(const std::string& sentence) const;

  std::vector<std::string> languages() const;
  bool covers(const std::string& lang) const;

  void save(const std::filesystem::path& path) const;
  static LangIdModel load(const std::filesystem::path& path);

 private:
  friend LangIdModel train_langid(const std::map<std::string, std::vector<std::string>>& corpora_by_lang);

  struct LangTable {
    std::map<std::string, uint64_t> counts[kMaxOrder];
    uint64_t totals[kMaxOrder] = {0, 0, 0};
  };
  std::map<std::string, LangTable> tables_;
  uint64_t gram_vocab_[kMaxOrder] = {0, 0, 0};  // distinct grams per order, all languages
};

// Trains tables per language. Requires >= 2 languages and >= 100 sentences
// each; the error names the offending language.
LangIdModel train_langid(const std::map<std::string, std::vector<std::string>>& corpora_by_lang);

}  // namespace deskmt
