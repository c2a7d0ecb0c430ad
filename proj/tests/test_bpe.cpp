#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "deskmt/bpe.hpp"
#include "deskmt/error.hpp"
#include "deskmt/io.hpp"
#include "deskmt/rng.hpp"
#include "deskmt/unicode.hpp"
#include "deskmt/vocab.hpp"
#include "oracles.hpp"

using namespace deskmt;

namespace {

// The classic BPE teaching corpus.
std::vector<std::string> classic_corpus() {
  std::vector<std::string> lines;
  for (int i = 0; i < 5; ++i) lines.push_back("low");
  for (int i = 0; i < 2; ++i) lines.push_back("lower");
  for (int i = 0; i < 6; ++i) lines.push_back("newest");
  for (int i = 0; i < 3; ++i) lines.push_back("widest");
  return lines;
}

std::vector<std::string> random_lines(uint64_t seed, size_t n_lines) {
  Rng rng(seed);
  const std::string alphabet = "abcdefając";
  auto codepoints = unicode::split_code_points(alphabet);
  std::vector<std::string> lines;
  for (size_t i = 0; i < n_lines; ++i) {
    std::string line;
    const size_t words = 1 + rng.below(8);
    for (size_t w = 0; w < words; ++w) {
      if (w) line += ' ';
      const size_t len = 1 + rng.below(7);
      for (size_t c = 0; c < len; ++c) line += codepoints[rng.below(codepoints.size())];
    }
    lines.push_back(line);
  }
  return lines;
}

}  // namespace

TEST_CASE("learn_bpe with zero ops is empty") {
  auto t = learn_bpe(classic_corpus(), 0);
  CHECK(t.merges.empty());
  CHECK(t.num_ops == 0);
}

TEST_CASE("learn_bpe single repeated pair") {
  auto t = learn_bpe({"aaaa", "aaaa", "aaaa"}, 1);
  REQUIRE(t.merges.size() == 1);
  CHECK(t.merges[0] == std::pair<std::string, std::string>("a", "a"));
}

TEST_CASE("learn_bpe matches the brute-force reference on the classic corpus") {
  auto lines = classic_corpus();
  auto t = learn_bpe(lines, 4);
  auto ref = oracles::learn_bpe_reference(lines, 4);
  REQUIRE(t.merges.size() == ref.size());
  for (size_t i = 0; i < ref.size(); ++i) CHECK(t.merges[i] == ref[i]);
}

TEST_CASE("merge-prefix property: N ops is a prefix of N+k ops") {
  auto lines = random_lines(3, 40);
  auto small = learn_bpe(lines, 10);
  auto large = learn_bpe(lines, 25);
  REQUIRE(small.merges.size() <= large.merges.size());
  for (size_t i = 0; i < small.merges.size(); ++i) CHECK(small.merges[i] == large.merges[i]);
}

TEST_CASE("learn_bpe_per_language") {
  std::map<std::string, std::vector<std::string>> corpora;
  corpora["de"] = {"in dem dem dem", "in in"};
  corpora["en"] = {"in the the the", "in in"};
  auto tables = learn_bpe_per_language(corpora, 3);
  REQUIRE(tables.size() == 2);
  CHECK(tables.at("de").mode == "de");
  CHECK(tables.at("en").mode == "en");

  SUBCASE("single language equals learn_bpe") {
    auto solo = learn_bpe(corpora["de"], 3);
    CHECK(tables.at("de").merges == solo.merges);
  }
  SUBCASE("shared words may produce identical merges") {
    // both corpora contain "in"; nothing forbids the shared merge
    auto& de = tables.at("de").merges;
    auto& en = tables.at("en").merges;
    const std::pair<std::string, std::string> in_pair{"i", "n"};
    CHECK(std::count(de.begin(), de.end(), in_pair) == std::count(en.begin(), en.end(), in_pair));
  }
}

TEST_CASE("per-language tables with disjoint alphabets share no symbols") {
  std::map<std::string, std::vector<std::string>> corpora;
  corpora["aa"] = {"abab abab baba", "aabb abab"};
  corpora["bb"] = {"cdcd cdcd dcdc", "ccdd cdcd"};
  auto tables = learn_bpe_per_language(corpora, 5);
  std::set<std::string> sym_a, sym_b;
  for (const auto& [l, r] : tables.at("aa").merges) {
    sym_a.insert(l);
    sym_a.insert(r);
  }
  for (const auto& [l, r] : tables.at("bb").merges) {
    sym_b.insert(l);
    sym_b.insert(r);
  }
  for (const auto& s : sym_a) CHECK(sym_b.count(s) == 0);
}

TEST_CASE("apply_bpe with an empty table falls back to code points") {
  MergeTable empty;
  auto toks = apply_bpe(empty, "ab");
  REQUIRE(toks.size() == 2);
  CHECK(render_token(toks[0]) == "a@@");
  CHECK(render_token(toks[1]) == "b");
  CHECK(apply_bpe(empty, "").empty());
}

TEST_CASE("apply_bpe matches the reference applier") {
  auto lines = classic_corpus();
  auto t = learn_bpe(lines, 4);
  std::vector<std::pair<std::string, std::string>> ref_merges = t.merges;
  for (const std::string word : {"lowest", "newest", "low", "wider", "unseen"}) {
    auto got = render_tokens(apply_bpe(t, word));
    auto want_syms = oracles::apply_bpe_reference(ref_merges, word);
    std::vector<std::string> want;
    for (size_t i = 0; i < want_syms.size(); ++i)
      want.push_back(i + 1 < want_syms.size() ? want_syms[i] + "@@" : want_syms[i]);
    CHECK(got == want);
  }
}

TEST_CASE("randomized corpora: learned merges and segmentations equal the reference") {
  for (uint64_t seed = 0; seed < 5; ++seed) {
    auto lines = random_lines(seed, 30);
    auto t = learn_bpe(lines, 20);
    auto ref = oracles::learn_bpe_reference(lines, 20);
    REQUIRE(t.merges == ref);
    BpeApplier applier(t);
    for (const auto& line : lines)
      CHECK(render_tokens(applier.apply(line)) == oracles::segment_line_reference(ref, line));
  }
}

TEST_CASE("tag tokens pass through segmentation unsplit") {
  auto t = learn_bpe(classic_corpus(), 4);
  auto toks = apply_bpe(t, "<2en> low");
  REQUIRE(toks.size() >= 2);
  CHECK(toks[0].surface == "<2en>");
  CHECK_FALSE(toks[0].continuation);
}

TEST_CASE("detokenize") {
  CHECK(detokenize({{"a", true, ""}, {"b", false, ""}}) == "ab");
  CHECK(detokenize({{"low", true, ""}, {"est", false, ""}, {"here", false, ""}}) == "lowest here");
  CHECK(detokenize({}) == "");
  // dangling continuation marker is dropped
  CHECK(detokenize({{"lo", true, ""}}) == "lo");
  // tags are stripped before joining
  CHECK(detokenize({{"low", true, "de"}, {"est", false, "de"}}) == "lowest");
}

TEST_CASE("round-trip: detokenize after apply_bpe is identity") {
  auto lines = random_lines(11, 50);
  auto t = learn_bpe(lines, 15);
  BpeApplier applier(t);
  for (const auto& line : lines) {
    // whitespace-normalize the input the same way split/join does
    std::string norm;
    for (const auto& w : split_words(line)) {
      if (!norm.empty()) norm += ' ';
      norm += w;
    }
    CHECK(detokenize(applier.apply(line)) == norm);
  }
}

TEST_CASE("tag_subwords") {
  auto tagged = tag_subwords({{"in", false, ""}}, "de");
  REQUIRE(tagged.size() == 1);
  CHECK(render_token(tagged[0]) == "in#de#");

  CHECK(tag_subwords({}, "de").empty());

  auto two = tag_subwords({{"low", true, ""}, {"est", false, ""}}, "en");
  CHECK(render_token(two[0]) == "low@@#en#");
  CHECK(render_token(two[1]) == "est#en#");

  CHECK_THROWS_AS(tag_subwords(tagged, "en"), DataError);
}

TEST_CASE("strip_tags strict and lenient") {
  std::vector<SubwordToken> de = {{"in", false, "de"}};
  std::vector<SubwordToken> en = {{"in", false, "en"}};

  auto strict_match = strip_tags(de, StripMode::kStrict, "de");
  CHECK(render_token(strict_match[0]) == "in");

  auto strict_wrong = strip_tags(en, StripMode::kStrict, "de");
  CHECK(render_token(strict_wrong[0]) == "in#en#");

  auto lenient = strip_tags(en, StripMode::kLenient);
  CHECK(render_token(lenient[0]) == "in");

  SUBCASE("strict and lenient agree when all tags match the expected language") {
    std::vector<SubwordToken> seq = {{"low", true, "de"}, {"est", false, "de"}, {"in", false, "de"}};
    auto a = strip_tags(seq, StripMode::kStrict, "de");
    auto b = strip_tags(seq, StripMode::kLenient);
    CHECK(render_tokens(a) == render_tokens(b));
  }
}

TEST_CASE("token rendering round-trips") {
  for (const SubwordToken t : {SubwordToken{"in", false, "de"}, SubwordToken{"low", true, "en"},
                               SubwordToken{"x", true, ""}, SubwordToken{"word", false, ""}}) {
    CHECK(parse_token(render_token(t)) == t);
  }
}

TEST_CASE("merge file round-trips and carries the pinned header") {
  auto t = learn_bpe(classic_corpus(), 4);
  t.mode = "joint";
  auto path = std::filesystem::temp_directory_path() / "deskmt_test_merges.txt";
  save_merges(t, path);

  auto lines = deskmt::io::read_lines(path);
  REQUIRE(!lines.empty());
  CHECK(lines[0] == "#desk-bpe v1 mode=joint ops=4");

  auto back = load_merges(path);
  CHECK(back.mode == t.mode);
  CHECK(back.num_ops == t.num_ops);
  CHECK(back.merges == t.merges);
}

TEST_CASE("build_vocab counts, reserved entries, tag collapse rules") {
  SUBCASE("tagged homographs stay distinct") {
    auto v = build_vocab({{"in#de#"}, {"in#en#"}}, 1);
    CHECK(v.size() == 4 + 2);
    CHECK(v.contains("in#de#"));
    CHECK(v.contains("in#en#"));
  }
  SUBCASE("untagged homographs collapse") {
    auto v = build_vocab({{"in"}, {"in"}}, 1);
    CHECK(v.size() == 4 + 1);
    CHECK(v.entries()[4].count == 2);
  }
  SUBCASE("reserved ids come first") {
    auto v = build_vocab({{"<2de>", "word", "word", "rare"}}, 1, {"en"});
    CHECK(v.surface(0) == "<pad>");
    CHECK(v.surface(1) == "<unk>");
    CHECK(v.surface(2) == "<s>");
    CHECK(v.surface(3) == "</s>");
    CHECK(v.surface(4) == "<2de>");
    CHECK(v.surface(5) == "<2en>");
    CHECK(v.surface(6) == "word");
    CHECK(v.id("missing") == Vocabulary::kUnkId);
  }
  SUBCASE("min_count filters") {
    auto v = build_vocab({{"a", "a", "b"}}, 2);
    CHECK(v.contains("a"));
    CHECK_FALSE(v.contains("b"));
  }
  SUBCASE("deterministic ordering: count desc then lexicographic") {
    auto v = build_vocab({{"b", "b", "a", "a", "c"}}, 1);
    CHECK(v.surface(4) == "a");
    CHECK(v.surface(5) == "b");
    CHECK(v.surface(6) == "c");
  }
}

TEST_CASE("vocab file round-trips") {
  auto v = build_vocab({{"word", "word", "other"}}, 1, {"en", "de"});
  auto path = std::filesystem::temp_directory_path() / "deskmt_test_vocab.tsv";
  save_vocab(v, path);
  auto back = load_vocab(path);
  REQUIRE(back.size() == v.size());
  for (int i = 0; i < v.size(); ++i) {
    CHECK(back.surface(i) == v.surface(i));
    CHECK(back.entries()[i].count == v.entries()[i].count);
  }
}

TEST_CASE("tagged-mode vocabularies are disjoint and overlap mode is smaller") {
  // engineered bilingual toy corpus sharing the homograph "in"
  std::vector<std::string> de_lines = {"in dem haus", "dem in"};
  std::vector<std::string> en_lines = {"in the house", "the in"};
  MergeTable empty_de, empty_en;

  BpeApplier de_app(empty_de), en_app(empty_en);
  std::vector<std::string> de_tagged, en_tagged, de_plain, en_plain;
  for (const auto& l : de_lines) {
    auto toks = de_app.apply(l);
    for (auto& s : render_tokens(tag_subwords(toks, "de"))) de_tagged.push_back(s);
    for (auto& s : render_tokens(toks)) de_plain.push_back(s);
  }
  for (const auto& l : en_lines) {
    auto toks = en_app.apply(l);
    for (auto& s : render_tokens(tag_subwords(toks, "en"))) en_tagged.push_back(s);
    for (auto& s : render_tokens(toks)) en_plain.push_back(s);
  }

  auto v_de = build_vocab({de_tagged}, 1);
  auto v_en = build_vocab({en_tagged}, 1);
  for (const auto& e : v_de.entries())
    if (!Vocabulary::is_reserved(e.surface) && e.count > 0) CHECK_FALSE(v_en.contains(e.surface));

  auto v_tagged = build_vocab({de_tagged, en_tagged}, 1);
  auto v_overlap = build_vocab({de_plain, en_plain}, 1);
  const int tagged_entries = v_tagged.size() - 4;
  const int overlap_entries = v_overlap.size() - 4;
  CHECK(tagged_entries == (v_de.size() - 4) + (v_en.size() - 4));
  CHECK(overlap_entries < tagged_entries);
}
