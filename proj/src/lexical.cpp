#include "tierprobe/lexical.hpp"

#include <cmath>
#include <ostream>
#include <set>

#include "tierprobe/error.hpp"
#include "tierprobe/format.hpp"
#include "tierprobe/kernels.hpp"

namespace tierprobe {

namespace {

bool is_token_byte(unsigned char c) noexcept {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

std::vector<std::string> subset(std::span<const std::string> texts, std::span<const std::size_t> idx) {
  std::vector<std::string> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(texts[i]);
  return out;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_token_byte(c)) {
      current.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::vector<std::string> document_terms(std::string_view text, const TfidfConfig& cfg) {
  std::vector<std::string> terms = tokenize(text);
  if (cfg.bigrams) {
    const std::size_t unigrams = terms.size();
    for (std::size_t i = 0; i + 1 < unigrams; ++i) terms.push_back(terms[i] + ' ' + terms[i + 1]);
  }
  return terms;
}

TfidfVocabulary tfidf_fit(std::span<const std::string> texts, const TfidfConfig& cfg) {
  if (texts.empty()) throw ValidationError("tfidf: empty corpus");
  std::map<std::string, std::size_t> df;
  for (const auto& text : texts) {
    const auto terms = document_terms(text, cfg);
    for (const auto& t : std::set<std::string>(terms.begin(), terms.end())) ++df[t];
  }
  if (df.empty()) throw ValidationError("tfidf: every document is empty after tokenization");

  TfidfVocabulary v;
  v.documents = texts.size();
  v.config = cfg;
  const double d = static_cast<double>(v.documents);
  for (const auto& [term, count] : df) {
    v.index.emplace(term, v.terms.size());
    v.terms.push_back(term);
    v.document_frequency.push_back(count);
    v.idf.push_back(std::log((1.0 + d) / (1.0 + static_cast<double>(count))) + 1.0);
  }
  return v;
}

TfidfVocabulary tfidf_fit(const Corpus& corpus, const TfidfConfig& cfg) {
  const auto texts = corpus.texts();
  return tfidf_fit(std::span<const std::string>(texts), cfg);
}

TfidfMatrix tfidf_transform(const TfidfVocabulary& v, std::span<const std::string> texts) {
  TfidfMatrix m;
  m.cols = v.size();
  m.rows.resize(texts.size());
  m.zero_rows.assign(texts.size(), false);
  for (std::size_t r = 0; r < texts.size(); ++r) {
    std::map<std::size_t, double> counts;
    for (const auto& term : document_terms(texts[r], v.config)) {
      if (auto it = v.index.find(term); it != v.index.end()) counts[it->second] += 1.0;
    }
    auto& row = m.rows[r];
    for (const auto& [col, tf] : counts) row.emplace_back(col, tf * v.idf[col]);
    double sq = 0.0;
    for (const auto& [_, value] : row) sq += value * value;
    if (sq == 0.0) {
      m.zero_rows[r] = true;
      continue;
    }
    const double norm = std::sqrt(sq);
    for (auto& [_, value] : row) value /= norm;
  }
  return m;
}

Matrix TfidfMatrix::to_dense() const {
  Matrix out(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (const auto& [c, value] : rows[r]) out(r, c) = value;
  }
  return out;
}

void write_vocabulary(const TfidfVocabulary& v, std::ostream& out) {
  out << "term\tindex\tdf\tidf\n";
  for (std::size_t i = 0; i < v.size(); ++i) {
    out << v.terms[i] << '\t' << i << '\t' << v.document_frequency[i] << '\t' << format_shortest(v.idf[i]) << '\n';
  }
}

TfidfVocabulary TfidfFeatures::vocabulary_for(const Split& split) const {
  const auto train = subset(texts_, split.train);
  return tfidf_fit(std::span<const std::string>(train), cfg_);
}

FeaturePair TfidfFeatures::features(const Split& split) const {
  const auto train = subset(texts_, split.train);
  const auto test = subset(texts_, split.test);
  const TfidfVocabulary vocab = tfidf_fit(std::span<const std::string>(train), cfg_);
  return {tfidf_transform(vocab, train).to_dense(), tfidf_transform(vocab, test).to_dense()};
}

}  // namespace tierprobe
