#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>

#include "deskmt/corpus.hpp"
#include "deskmt/error.hpp"
#include "deskmt/io.hpp"
#include "deskmt/unicode.hpp"
#include "oracles.hpp"

using namespace deskmt;
namespace fs = std::filesystem;

namespace {

fs::path write_tmp(const std::string& name, const std::string& content) {
  fs::path p = fs::temp_directory_path() / ("deskmt_corpus_" + name);
  std::ofstream out(p, std::ios::binary);
  out << content;
  return p;
}

ParallelCorpus make_corpus(const std::vector<std::pair<std::string, std::string>>& pairs,
                           const std::string& src = "de", const std::string& tgt = "en") {
  ParallelCorpus c;
  c.source_lang = src;
  c.target_lang = tgt;
  for (const auto& [s, t] : pairs) c.pairs.push_back({s, t, src, tgt});
  return c;
}

}  // namespace

TEST_CASE("load_parallel pairs lines in order") {
  auto src = write_tmp("s1", "ein\nzwei\ndrei\n");
  auto tgt = write_tmp("t1", "one\ntwo\nthree\n");
  auto c = load_parallel(src, tgt, "de", "en");
  REQUIRE(c.size() == 3);
  CHECK(c.pairs[0].source_text == "ein");
  CHECK(c.pairs[0].target_text == "one");
  CHECK(c.pairs[2].source_text == "drei");
  CHECK(c.pairs[2].target_text == "three");
}

TEST_CASE("load_parallel rejects mismatched line counts") {
  auto src = write_tmp("s2", "a\nb\n");
  auto tgt = write_tmp("t2", "x\ny\nz\n");
  CHECK_THROWS_WITH_AS(load_parallel(src, tgt, "de", "en"), doctest::Contains("2"), DataError);
}

TEST_CASE("load_parallel trims whitespace") {
  auto src = write_tmp("s3", "  a b  \n");
  auto tgt = write_tmp("t3", "\tx\n");
  auto c = load_parallel(src, tgt, "de", "en");
  CHECK(c.pairs[0].source_text == "a b");
  CHECK(c.pairs[0].target_text == "x");
}

TEST_CASE("load_parallel rejects invalid UTF-8 with line number") {
  auto src = write_tmp("s4", "ok\n\xFF\xFE\n");
  auto tgt = write_tmp("t4", "x\ny\n");
  CHECK_THROWS_WITH_AS(load_parallel(src, tgt, "de", "en"), doctest::Contains("line 2"), DataError);
}

TEST_CASE("load_parallel applies NFC normalization") {
  // "é" composed vs decomposed
  auto src = write_tmp("s5", "caf\x65\xCC\x81\n");
  auto tgt = write_tmp("t5", "caf\xC3\xA9\n");
  auto c = load_parallel(src, tgt, "fr", "en");
  CHECK(c.pairs[0].source_text == c.pairs[0].target_text);
  CHECK(c.pairs[0].source_text == "caf\xC3\xA9");
}

TEST_CASE("nfc handles ordering and hangul") {
  // dot-below (ccc 220) must sort before dot-above (ccc 230), then compose.
  std::string nfd = "s\xCC\x87\xCC\xA3";  // s + dot-above + dot-below
  std::string composed = unicode::nfc(nfd);
  CHECK(composed == "\xE1\xB9\xA9");  // U+1E69
  CHECK(unicode::nfc("\xE1\x84\x92\xE1\x85\xA1\xE1\x86\xAB") == "\xED\x95\x9C");  // Hangul LVT
  CHECK(unicode::nfc("plain ascii") == "plain ascii");
}

TEST_CASE("prefix_target_tag") {
  auto c = prefix_target_tag(make_corpus({{"guten tag", "good day"}}));
  CHECK(c.pairs[0].source_text == "<2en> guten tag");

  SUBCASE("empty corpus passes through") {
    ParallelCorpus empty;
    empty.source_lang = "de";
    empty.target_lang = "en";
    CHECK(prefix_target_tag(empty).empty());
  }
  SUBCASE("double tagging is an error") { CHECK_THROWS_AS(prefix_target_tag(c), DataError); }
  SUBCASE("tag round-trips by stripping the first token") {
    const std::string& tagged = c.pairs[0].source_text;
    CHECK(tagged.substr(tagged.find(' ') + 1) == "guten tag");
  }
}

TEST_CASE("oversample exact multiple duplicates each pair") {
  auto c = make_corpus({{"a", "1"}, {"b", "2"}, {"c", "3"}});
  auto up = oversample(c, 6, 11);
  REQUIRE(up.size() == 6);
  std::map<std::string, int> counts;
  for (const auto& p : up.pairs) counts[p.source_text]++;
  for (const auto& [_, n] : counts) CHECK(n == 2);
}

TEST_CASE("oversample identity at equal size") {
  auto c = make_corpus({{"a", "1"}, {"b", "2"}, {"c", "3"}});
  auto up = oversample(c, 3, 99);
  REQUIRE(up.size() == 3);
  for (size_t i = 0; i < 3; ++i) CHECK(up.pairs[i].source_text == c.pairs[i].source_text);
}

TEST_CASE("oversample remainder matches the reference sampler") {
  auto c = make_corpus({{"a", "1"}, {"b", "2"}, {"c", "3"}});
  const uint64_t seed = 7;
  auto up = oversample(c, 5, seed);
  REQUIRE(up.size() == 5);

  std::map<std::string, int> counts;
  for (const auto& p : up.pairs) counts[p.source_text]++;
  for (const auto& [_, n] : counts) {
    CHECK(n >= 1);
    CHECK(n <= 2);
  }

  auto expect = oracles::sample_without_replacement_reference(3, 2, seed);
  CHECK(up.pairs[3].source_text == c.pairs[expect[0]].source_text);
  CHECK(up.pairs[4].source_text == c.pairs[expect[1]].source_text);

  auto again = oversample(c, 5, seed);
  for (size_t i = 0; i < 5; ++i) CHECK(again.pairs[i].source_text == up.pairs[i].source_text);
}

TEST_CASE("oversample refuses to downsample") {
  auto c = make_corpus({{"a", "1"}, {"b", "2"}});
  CHECK_THROWS_AS(oversample(c, 1, 0), DataError);
}

TEST_CASE("oversample keeps the original corpus as a sub-multiset") {
  auto c = make_corpus({{"a", "1"}, {"b", "2"}, {"c", "3"}, {"d", "4"}});
  auto up = oversample(c, 11, 5);
  std::map<std::string, int> counts;
  for (const auto& p : up.pairs) counts[p.source_text]++;
  for (const auto& p : c.pairs) CHECK(counts[p.source_text] >= 1);
}

TEST_CASE("sample_dev") {
  auto c = make_corpus({{"a", "1"}, {"b", "2"}, {"c", "3"}, {"d", "4"}, {"e", "5"}});

  SUBCASE("n = 0") {
    auto [dev, rest] = sample_dev(c, 0, 3);
    CHECK(dev.empty());
    CHECK(rest.size() == 5);
  }
  SUBCASE("n = size") {
    auto [dev, rest] = sample_dev(c, 5, 3);
    CHECK(dev.size() == 5);
    CHECK(rest.empty());
  }
  SUBCASE("fixed seed is reproducible and matches the reference sampler") {
    auto [dev1, rest1] = sample_dev(c, 2, 42);
    auto [dev2, rest2] = sample_dev(c, 2, 42);
    REQUIRE(dev1.size() == 2);
    CHECK(dev1.pairs[0].source_text == dev2.pairs[0].source_text);
    CHECK(dev1.pairs[1].source_text == dev2.pairs[1].source_text);
    auto expect = oracles::sample_without_replacement_reference(5, 2, 42);
    CHECK(dev1.pairs[0].source_text == c.pairs[expect[0]].source_text);
    CHECK(dev1.pairs[1].source_text == c.pairs[expect[1]].source_text);
  }
  SUBCASE("dev and rest partition the corpus") {
    auto [dev, rest] = sample_dev(c, 2, 42);
    std::map<std::string, int> counts;
    for (const auto& p : dev.pairs) counts[p.source_text]++;
    for (const auto& p : rest.pairs) counts[p.source_text]++;
    CHECK(counts.size() == 5);
    for (const auto& [_, n] : counts) CHECK(n == 1);
  }
  SUBCASE("n > size is an error") { CHECK_THROWS_AS(sample_dev(c, 6, 0), DataError); }
}

TEST_CASE("build_mixture single component is a shuffled copy") {
  auto c = prefix_target_tag(make_corpus({{"a", "1"}, {"b", "2"}, {"c", "3"}}));
  MixtureSpec spec;
  spec.components.push_back({c, 3});
  spec.shuffle_seed = 9;
  auto mix = build_mixture(spec);
  REQUIRE(mix.size() == 3);
  std::map<std::string, int> counts;
  for (const auto& p : mix.pairs) counts[p.source_text]++;
  CHECK(counts.size() == 3);
}

TEST_CASE("build_mixture sums component targets") {
  auto a = prefix_target_tag(make_corpus({{"a", "1"}, {"b", "2"}}, "de", "en"));
  auto b = prefix_target_tag(make_corpus({{"x", "9"}, {"y", "8"}}, "en", "cs"));
  MixtureSpec spec;
  spec.components.push_back({a, 10});
  spec.components.push_back({b, 10});
  spec.shuffle_seed = 1;
  auto mix = build_mixture(spec);
  CHECK(mix.size() == 20);
  size_t from_a = 0;
  for (const auto& p : mix.pairs)
    if (p.source_lang == "de") ++from_a;
  CHECK(from_a == 10);
}

TEST_CASE("build_mixture at a scaled corpus-table shape") {
  // Four bridge-pair components (three exact, one 435 -> 500) and two small
  // direct-pair components (35 exact, 34 -> 35).
  std::vector<size_t> sizes = {500, 500, 500, 435, 35, 34};
  std::vector<size_t> targets = {500, 500, 500, 500, 35, 35};
  MixtureSpec spec;
  spec.shuffle_seed = 77;
  const char* langs[6] = {"de", "cs", "fr", "fi", "xa", "xb"};
  for (size_t k = 0; k < sizes.size(); ++k) {
    ParallelCorpus c;
    c.source_lang = langs[k];
    c.target_lang = "en";
    for (size_t i = 0; i < sizes[k]; ++i)
      c.pairs.push_back({"<2en> w" + std::to_string(i), "t", c.source_lang, "en"});
    spec.components.push_back({c, targets[k]});
  }
  auto mix = build_mixture(spec);
  CHECK(mix.size() == 500 * 4 + 35 * 2);
  std::map<std::string, size_t> per_lang;
  for (const auto& p : mix.pairs) per_lang[p.source_lang]++;
  for (size_t k = 0; k < sizes.size(); ++k) CHECK(per_lang[langs[k]] == targets[k]);
}

TEST_CASE("build_mixture is deterministic") {
  auto c = prefix_target_tag(make_corpus({{"a", "1"}, {"b", "2"}, {"c", "3"}}));
  MixtureSpec spec;
  spec.components.push_back({c, 7});
  spec.shuffle_seed = 123;
  auto m1 = build_mixture(spec);
  auto m2 = build_mixture(spec);
  REQUIRE(m1.size() == m2.size());
  for (size_t i = 0; i < m1.size(); ++i) CHECK(m1.pairs[i].source_text == m2.pairs[i].source_text);
}
