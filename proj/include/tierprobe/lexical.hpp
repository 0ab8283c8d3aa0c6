#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tierprobe/corpus.hpp"
#include "tierprobe/matrix.hpp"
#include "tierprobe/protocol.hpp"

namespace tierprobe {

/// Lowercased alphanumeric runs; every other ASCII byte separates tokens.
/// Bytes >= 0x80 are kept inside tokens so UTF-8 words stay whole.
std::vector<std::string> tokenize(std::string_view text);

struct TfidfConfig {
  bool bigrams = false;  // add adjacent-token bigrams ("a b") to the unigrams
};

struct TfidfVocabulary {
  std::map<std::string, std::size_t> index;  // term -> column; columns follow sorted term order
  std::vector<std::string> terms;
  std::vector<std::size_t> document_frequency;
  std::vector<double> idf;
  std::size_t documents = 0;
  TfidfConfig config;

  std::size_t size() const noexcept { return terms.size(); }
};

/// Terms of one document under the config (unigrams, optionally bigrams).
std::vector<std::string> document_terms(std::string_view text, const TfidfConfig& cfg);

/// idf(t) = ln((1 + D) / (1 + df(t))) + 1. Throws when no document yields a token.
TfidfVocabulary tfidf_fit(std::span<const std::string> texts, const TfidfConfig& cfg = {});
TfidfVocabulary tfidf_fit(const Corpus& corpus, const TfidfConfig& cfg = {});

struct TfidfMatrix {
  std::size_t cols = 0;
  std::vector<std::vector<std::pair<std::size_t, double>>> rows;  // sorted by column
  std::vector<bool> zero_rows;  // no in-vocabulary tokens

  Matrix to_dense() const;
};

/// Raw-count tf times idf, out-of-vocabulary tokens ignored, nonzero rows
/// scaled to unit L2 norm.
TfidfMatrix tfidf_transform(const TfidfVocabulary& v, std::span<const std::string> texts);

/// TSV: term, index, df, idf.
void write_vocabulary(const TfidfVocabulary& v, std::ostream& out);

/// Feature source that refits the vocabulary on each split's training texts
/// and transforms both partitions with it, so no test-split term statistics
/// leak into training.
class TfidfFeatures final : public FeatureSource {
 public:
  TfidfFeatures(std::vector<std::string> texts, TfidfConfig cfg = {})
      : texts_(std::move(texts)), cfg_(cfg) {}

  std::size_t rows() const override { return texts_.size(); }
  FeaturePair features(const Split& split) const override;
  TfidfVocabulary vocabulary_for(const Split& split) const;

 private:
  std::vector<std::string> texts_;
  TfidfConfig cfg_;
};

}  // namespace tierprobe
