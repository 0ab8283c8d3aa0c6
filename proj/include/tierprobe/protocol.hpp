#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "tierprobe/matrix.hpp"
#include "tierprobe/metrics.hpp"
#include "tierprobe/probes.hpp"

namespace tierprobe {

/// Seeded repeated train/test partitioning.
struct SplitPlan {
  std::size_t n = 0;
  double test_fraction = 0.2;
  std::vector<std::uint64_t> seeds;  // default: 0..29
  bool stratified = false;           // stratify on tier labels when supplied
};

std::vector<std::uint64_t> default_seeds(std::size_t count = 30);

/// round(n * fraction), halves away from zero.
std::size_t test_size(std::size_t n, double test_fraction);

struct Split {
  std::uint64_t seed = 0;
  std::vector<std::size_t> train;  // ascending
  std::vector<std::size_t> test;   // ascending
};

/// One split per plan seed. A seeded Fisher-Yates permutation of 0..n-1 puts
/// its first |test| entries in the test set. With plan.stratified, `strata`
/// must hold a class label per row and every class contributes a
/// largest-remainder share of the test set.
std::vector<Split> make_splits(const SplitPlan& plan, std::span<const int> strata = {});

/// Train/test design matrices for one split.
struct FeaturePair {
  Matrix train;
  Matrix test;
};

/// Produces per-split features. Sources that learn from data (TF-IDF) must
/// fit on the training rows only.
class FeatureSource {
 public:
  virtual ~FeatureSource() = default;
  virtual std::size_t rows() const = 0;
  virtual FeaturePair features(const Split& split) const = 0;
};

/// Rows of a fixed matrix (precomputed embeddings). Holds a reference; the
/// matrix must outlive the source.
class FixedFeatures final : public FeatureSource {
 public:
  explicit FixedFeatures(const Matrix& x) : x_(x) {}
  std::size_t rows() const override { return x_.rows(); }
  FeaturePair features(const Split& split) const override;

 private:
  const Matrix& x_;
};

enum class RegressionProbeKind { Ridge, Mlp };

std::string_view probe_name(RegressionProbeKind k) noexcept;

struct RegressionProbe {
  RegressionProbeKind kind = RegressionProbeKind::Ridge;
  double alpha = 1.0;
  MlpConfig mlp;
};

struct ClassificationProbe {
  LogisticConfig logistic;
};

struct SplitRecord {
  std::uint64_t seed = 0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::vector<std::pair<std::string, double>> metrics;
  std::optional<ConfusionMatrix> confusion;
  bool converged = true;

  double metric(std::string_view name) const;
};

struct MetricSummary {
  std::string name;
  double mean = 0.0;
  double stddev = 0.0;
};

struct AggregateOutcome {
  std::string task;   // "energy_regression" | "tier_classification"
  std::string probe;  // "ridge" | "mlp" | "logistic"
  std::variant<RegressionProbe, ClassificationProbe> config;
  double test_fraction = 0.2;
  bool stratified = false;
  std::vector<SplitRecord> splits;  // sorted by seed
  std::vector<MetricSummary> summary;
  std::optional<ConfusionMatrix> representative_confusion;
  std::uint64_t representative_seed = 0;
  std::vector<std::string> warnings;

  double mean(std::string_view metric) const;
};

/// Sorts per-split records by seed and fills mean / sample std per metric.
void summarize(AggregateOutcome& outcome);

/// Fits a regression probe per split and scores R^2 / MSE on the test rows.
/// Per-split preparation (features, ridge factorization) happens once, so
/// run() can be called repeatedly with different target vectors.
class RegressionRunner {
 public:
  RegressionRunner(const FeatureSource& source, const SplitPlan& plan, RegressionProbe probe,
                   std::span<const int> strata = {}, std::size_t jobs = 1);
  ~RegressionRunner();
  RegressionRunner(RegressionRunner&&) noexcept;

  AggregateOutcome run(std::span<const double> y, std::size_t jobs = 1) const;
  const std::vector<Split>& splits() const noexcept { return splits_; }

 private:
  struct Prepared;
  RegressionProbe probe_;
  SplitPlan plan_;
  std::vector<Split> splits_;
  std::vector<Prepared> prepared_;
};

/// Logistic tier probe per split: accuracy, weighted F1 and confusion.
class ClassificationRunner {
 public:
  ClassificationRunner(const FeatureSource& source, const SplitPlan& plan, ClassificationProbe probe,
                       std::span<const int> strata = {}, std::size_t jobs = 1);

  AggregateOutcome run(std::span<const int> tiers, std::size_t jobs = 1) const;
  const std::vector<Split>& splits() const noexcept { return splits_; }

 private:
  ClassificationProbe probe_;
  SplitPlan plan_;
  std::vector<Split> splits_;
  std::vector<FeaturePair> features_;
};

AggregateOutcome run_regression_protocol(const FeatureSource& source, std::span<const double> y,
                                         const SplitPlan& plan, const RegressionProbe& probe,
                                         std::size_t jobs = 1, std::span<const int> strata = {});

/// Stratification (when enabled in the plan) uses `tiers` themselves.

AggregateOutcome run_classification_protocol(const FeatureSource& source,
                                             std::span<const int> tiers, const SplitPlan& plan,
                                             const ClassificationProbe& probe,
                                             std::size_t jobs = 1);

}  // namespace tierprobe
