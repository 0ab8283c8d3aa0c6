#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "tierprobe/error.hpp"
#include "tierprobe/lexical.hpp"

using namespace tierprobe;

TEST_CASE("tokenizer") {
  CHECK(tokenize("I feel calm.") == std::vector<std::string>{"i", "feel", "calm"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("self-blame") == std::vector<std::string>{"self", "blame"});
  CHECK(tokenize("  --  ").empty());
  CHECK(tokenize("Don't 42x") == std::vector<std::string>{"don", "t", "42x"});
}

TEST_CASE("idf smoothing identities") {
  const std::vector<std::string> two = {"shared only", "shared"};
  const auto v = tfidf_fit(two);
  CHECK(v.idf[v.index.at("shared")] == 1.0);
  CHECK(std::abs(v.idf[v.index.at("only")] - (std::log(1.5) + 1.0)) <= 1e-15);
  CHECK(v.size() == 2);
  CHECK(v.documents == 2);
}

TEST_CASE("three-document tf-idf table by hand") {
  // D = 3.  df: a 1, b 2, c 2, d 1.
  // idf: a = d = ln(4/2) + 1, b = c = ln(4/3) + 1.
  const std::vector<std::string> docs = {"a b a", "b c", "c c d"};
  const auto v = tfidf_fit(docs);
  REQUIRE(v.terms == std::vector<std::string>{"a", "b", "c", "d"});
  const double i1 = std::log(2.0) + 1.0, i2 = std::log(4.0 / 3.0) + 1.0;

  // Raw rows, then L2 normalization.
  const double raw[3][4] = {{2 * i1, i2, 0, 0}, {0, i2, i2, 0}, {0, 0, 2 * i2, i1}};
  const Matrix m = tfidf_transform(v, docs).to_dense();
  for (int r = 0; r < 3; ++r) {
    double norm = 0.0;
    for (int c = 0; c < 4; ++c) norm += raw[r][c] * raw[r][c];
    norm = std::sqrt(norm);
    for (int c = 0; c < 4; ++c) CHECK(std::abs(m(r, c) - raw[r][c] / norm) <= 1e-12);
  }
}

TEST_CASE("transform edge cases") {
  const std::vector<std::string> train = {"alpha beta", "beta gamma"};
  const auto v = tfidf_fit(train);
  const std::vector<std::string> probe = {"zeta eta", "gamma", "beta beta unknown"};
  const auto t = tfidf_transform(v, probe);
  CHECK(t.zero_rows == std::vector<bool>{true, false, false});
  CHECK(t.rows[0].empty());
  REQUIRE(t.rows[1].size() == 1);
  CHECK(t.rows[1][0].second == doctest::Approx(1.0).epsilon(1e-15));
  for (const auto& row : t.rows) {
    double n = 0.0;
    for (const auto& [c, val] : row) {
      CHECK(c < v.size());
      n += val * val;
    }
    CHECK((row.empty() || std::abs(n - 1.0) <= 1e-9));
  }
}

TEST_CASE("fit is insensitive to document order") {
  const std::vector<std::string> a = {"one two", "two three", "three four four"};
  const std::vector<std::string> b = {"three four four", "one two", "two three"};
  const auto va = tfidf_fit(a), vb = tfidf_fit(b);
  CHECK(va.terms == vb.terms);
  CHECK(va.idf == vb.idf);
}

TEST_CASE("all-empty corpus is rejected") {
  const std::vector<std::string> empty = {"", "...", " "};
  CHECK_THROWS(tfidf_fit(empty));
}

TEST_CASE("bigrams extend the vocabulary") {
  const std::vector<std::string> docs = {"i feel calm"};
  TfidfConfig cfg;
  cfg.bigrams = true;
  const auto v = tfidf_fit(docs, cfg);
  CHECK(v.index.count("feel calm") == 1);
  CHECK(v.size() == 5);
}

TEST_CASE("per-split vocabulary refit never sees test documents") {
  // Each document carries one unique marker word, so the vocabulary of a
  // split reveals exactly which documents were used to fit it.
  std::vector<std::string> texts;
  for (int i = 0; i < 30; ++i) texts.push_back("common word marker" + std::to_string(i));
  const TfidfFeatures src(texts);
  const auto splits = make_splits({30, 0.2, {0, 1, 2}, false});
  std::set<std::vector<std::string>> vocabularies;
  for (const auto& s : splits) {
    const auto v = src.vocabulary_for(s);
    for (auto i : s.test) CHECK(v.index.count("marker" + std::to_string(i)) == 0);
    for (auto i : s.train) CHECK(v.index.count("marker" + std::to_string(i)) == 1);
    CHECK(v.documents == s.train.size());
    vocabularies.insert(v.terms);
    const auto f = src.features(s);
    CHECK(f.train.cols() == v.size());
    CHECK(f.test.cols() == v.size());
  }
  CHECK(vocabularies.size() == 3);
}

TEST_CASE("vocabulary dump") {
  const std::vector<std::string> docs = {"b a", "a"};
  std::ostringstream os;
  write_vocabulary(tfidf_fit(docs), os);
  CHECK(os.str().rfind("term\tindex\tdf\tidf\na\t0\t2\t1\n", 0) == 0);
}
