#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tierprobe/corpus.hpp"
#include "tierprobe/protocol.hpp"
#include "tierprobe/rng.hpp"

namespace tierprobe {

enum class PermutationTask { EnergyRegression, TierClassification };

std::string_view task_name(PermutationTask t) noexcept;

struct PermutationConfig {
  PermutationTask task = PermutationTask::EnergyRegression;
  std::size_t permutations = 200;
  std::uint64_t rng_seed = 0;
  SplitPlan plan;
  RegressionProbe regression;          // must be ridge unless allow_nonlinear
  ClassificationProbe classification;
  bool allow_nonlinear = false;
};

struct PermutationReport {
  std::string task;
  std::string statistic;  // "mean_ridge_r2" | "mean_mlp_r2" | "mean_weighted_f1"
  double t_obs = 0.0;
  Vector null_samples;    // in permutation-index order
  std::size_t exceed_count = 0;
  double p_value = 1.0;
  std::uint64_t rng_seed = 0;
  AggregateOutcome observed;

  std::size_t permutations() const noexcept { return null_samples.size(); }
};

/// (1 + exceed_count) / (N + 1).
double smoothed_p_value(std::size_t exceed_count, std::size_t permutations);

/// Uniformly random reordering of y driven by rng (Fisher-Yates).
template <typename T>
std::vector<T> permute_labels(std::span<const T> y, Rng& rng) {
  std::vector<T> out(y.begin(), y.end());
  rng.shuffle(std::span<T>(out));
  return out;
}

/// Observed statistic from the unpermuted labels, then N label permutations
/// each pushed through the identical protocol (same split seeds). Permutation i
/// draws from substream derive_seed(rng_seed, i), so the report is identical
/// for any job count. Ties with the observed value count as exceedances.
PermutationReport run_permutation_test(const FeatureSource& source, const LabelVector& y,
                                       const PermutationConfig& cfg, std::size_t jobs = 1,
                                       std::span<const int> strata = {});

struct NullHistogram {
  Vector edges;                     // bins + 1 ascending edges
  std::vector<std::size_t> counts;  // bins
  double t_obs = 0.0;
  std::string statistic;
};

/// Equal-width bins spanning the null samples; a degenerate range becomes a
/// unit-width window around the common value.
NullHistogram export_null(const PermutationReport& report, std::size_t bins = 30);

/// CSV with bin_left,bin_right,count rows and a trailing T_obs record.
void write_histogram(const NullHistogram& h, std::ostream& out);

}  // namespace tierprobe
