#include "deskmt/langid.hpp"

#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "deskmt/error.hpp"
#include "deskmt/io.hpp"
#include "deskmt/unicode.hpp"

namespace deskmt {

namespace {

// n-grams over code points, re-encoded as UTF-8 keys.
std::vector<std::string> char_ngrams(const std::vector<uint32_t>& cps, int n) {
  std::vector<std::string> grams;
  if (static_cast<int>(cps.size()) < n) return grams;
  for (size_t i = 0; i + n <= cps.size(); ++i) {
    std::string g;
    for (int k = 0; k < n; ++k) unicode::append_utf8(g, cps[i + k]);
    grams.push_back(std::move(g));
  }
  return grams;
}

}  // namespace

LangIdModel train_langid(const std::map<std::string, std::vector<std::string>>& corpora_by_lang) {
  if (corpora_by_lang.size() < 2) throw DataError("language identifier needs at least 2 languages");
  LangIdModel model;
  std::set<std::string> gram_sets[LangIdModel::kMaxOrder];
  for (const auto& [lang, sentences] : corpora_by_lang) {
    if (sentences.size() < 100)
      throw DataError("too little data for language '" + lang + "': " + std::to_string(sentences.size()) +
                      " sentences (need 100)");
    auto& table = model.tables_[lang];
    for (const auto& sent : sentences) {
      const auto cps = unicode::decode_utf8(sent);
      for (int n = 1; n <= LangIdModel::kMaxOrder; ++n) {
        for (auto& g : char_ngrams(cps, n)) {
          ++table.counts[n - 1][g];
          ++table.totals[n - 1];
          gram_sets[n - 1].insert(std::move(g));
        }
      }
    }
  }
  for (int n = 0; n < LangIdModel::kMaxOrder; ++n) model.gram_vocab_[n] = gram_sets[n].size() + 1;
  return model;
}

LangIdModel::Prediction LangIdModel::classify(const std::string& sentence) const {
  const auto cps = unicode::decode_utf8(sentence);
  if (cps.size() < 3) return {"unknown", 0.0};

  std::string best_lang;
  double best = -1e300, second = -1e300;
  for (const auto& [lang, table] : tables_) {
    double score = 0.0;
    for (int n = 1; n <= kMaxOrder; ++n) {
      const double denom =
          static_cast<double>(table.totals[n - 1]) + kAlpha * static_cast<double>(gram_vocab_[n - 1]);
      for (const auto& g : char_ngrams(cps, n)) {
        auto it = table.counts[n - 1].find(g);
        const double count = it == table.counts[n - 1].end() ? 0.0 : static_cast<double>(it->second);
        score += std::log((count + kAlpha) / denom);
      }
    }
    if (score > best) {
      second = best;
      best = score;
      best_lang = lang;
    } else if (score > second) {
      second = score;
    }
  }
  return {best_lang, second <= -1e300 ? 0.0 : best - second};
}

std::vector<std::string> LangIdModel::languages() const {
  std::vector<std::string> out;
  for (const auto& [lang, _] : tables_) out.push_back(lang);
  return out;
}

bool LangIdModel::covers(const std::string& lang) const { return tables_.count(lang) > 0; }

void LangIdModel::save(const std::filesystem::path& path) const {
  nlohmann::json j;
  j["format"] = "desk-langid v1";
  j["gram_vocab"] = {gram_vocab_[0], gram_vocab_[1], gram_vocab_[2]};
  for (const auto& [lang, table] : tables_) {
    nlohmann::json t;
    for (int n = 0; n < kMaxOrder; ++n) {
      nlohmann::json counts = nlohmann::json::object();
      for (const auto& [g, c] : table.counts[n]) counts[g] = c;
      t["order" + std::to_string(n + 1)] = std::move(counts);
    }
    j["languages"][lang] = std::move(t);
  }
  io::atomic_write(path, j.dump());
}

LangIdModel LangIdModel::load(const std::filesystem::path& path) {
  nlohmann::json j = nlohmann::json::parse(io::read_file(path));
  if (j.value("format", "") != "desk-langid v1") throw DataError("not a desk-langid v1 file: " + path.string());
  LangIdModel model;
  const auto& gv = j.at("gram_vocab");
  for (int n = 0; n < kMaxOrder; ++n) model.gram_vocab_[n] = gv.at(n).get<uint64_t>();
  for (const auto& [lang, t] : j.at("languages").items()) {
    auto& table = model.tables_[lang];
    for (int n = 0; n < kMaxOrder; ++n) {
      for (const auto& [g, c] : t.at("order" + std::to_string(n + 1)).items()) {
        const uint64_t count = c.get<uint64_t>();
        table.counts[n][g] = count;
        table.totals[n] += count;
      }
    }
  }
  return model;
}

}  // namespace deskmt
