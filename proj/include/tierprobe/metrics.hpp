#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>

#include "tierprobe/corpus.hpp"

namespace tierprobe {

struct RegressionScore {
  double r2 = 0.0;
  double mse = 0.0;
};

struct ClassificationScore {
  double accuracy = 0.0;
  double weighted_f1 = 0.0;
};

/// counts[true][predicted], always the full 7x7 grid in taxonomy order.
struct ConfusionMatrix {
  std::array<std::array<std::size_t, kTierCount>, kTierCount> counts{};

  std::size_t total() const noexcept;
  std::size_t correct() const noexcept;
  std::size_t row_sum(std::size_t true_tier) const noexcept;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// R^2 = 1 - SS_res / SS_tot with SS_tot about mean(y_true). Throws when
/// y_true has zero variance or the lengths differ / are < 2.
RegressionScore r2_mse(std::span<const double> y_true, std::span<const double> y_pred);

/// Accuracy and support-weighted F1 (per-class F1 is 0 when precision + recall is 0).
ClassificationScore accuracy_weighted_f1(std::span<const int> true_tiers,
                                         std::span<const int> pred_tiers);

/// Per-class F1 in taxonomy order; classes absent from both vectors get 0.
std::array<double, kTierCount> per_class_f1(const ConfusionMatrix& cm);

ConfusionMatrix confusion(std::span<const int> true_tiers, std::span<const int> pred_tiers);

/// Share of misclassifications that land on a neighbouring tier (|i-j| = 1).
/// nullopt when the matrix has no off-diagonal counts.
std::optional<double> adjacency_error_rate(const ConfusionMatrix& cm);

/// 7x7 grid with tier-name headers, comma-separated.
void write_confusion_csv(const ConfusionMatrix& cm, std::ostream& out);

/// Sum with Neumaier compensation.
double compensated_sum(std::span<const double> values) noexcept;

double mean(std::span<const double> values) noexcept;

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double sample_stddev(std::span<const double> values) noexcept;

double pearson(std::span<const double> a, std::span<const double> b);

}  // namespace tierprobe
