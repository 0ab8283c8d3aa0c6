#include "tierprobe/metrics.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "tierprobe/error.hpp"
#include "tierprobe/matrix.hpp"

namespace tierprobe {

namespace {

void check_tier_pairs(std::span<const int> t, std::span<const int> p) {
  if (t.size() != p.size()) {
    throw ValidationError("label length mismatch (" + std::to_string(t.size()) + " vs " +
                          std::to_string(p.size()) + ")");
  }
  if (t.empty()) throw ValidationError("need at least one example");
  auto in_range = [](int v) { return v >= 0 && v < static_cast<int>(kTierCount); };
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!in_range(t[i]) || !in_range(p[i])) {
      throw ValidationError("tier ordinal out of range at position " + std::to_string(i));
    }
  }
}

}  // namespace

std::size_t ConfusionMatrix::total() const noexcept {
  std::size_t s = 0;
  for (const auto& row : counts)
    for (std::size_t c : row) s += c;
  return s;
}

std::size_t ConfusionMatrix::correct() const noexcept {
  std::size_t s = 0;
  for (std::size_t k = 0; k < kTierCount; ++k) s += counts[k][k];
  return s;
}

std::size_t ConfusionMatrix::row_sum(std::size_t true_tier) const noexcept {
  std::size_t s = 0;
  for (std::size_t c : counts[true_tier]) s += c;
  return s;
}

RegressionScore r2_mse(std::span<const double> y_true, std::span<const double> y_pred) {
  if (y_true.size() != y_pred.size()) {
    throw ValidationError("r2_mse: length mismatch (" + std::to_string(y_true.size()) + " vs " +
                          std::to_string(y_pred.size()) + ")");
  }
  if (y_true.size() < 2) throw ValidationError("r2_mse: need at least two values");
  const double mu = mean(y_true);
  Vector res(y_true.size()), tot(y_true.size());
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const double r = y_true[i] - y_pred[i];
    const double t = y_true[i] - mu;
    res[i] = r * r;
    tot[i] = t * t;
  }
  const double ss_res = compensated_sum(res);
  const double ss_tot = compensated_sum(tot);
  if (!(ss_tot > 0.0)) throw ValidationError("r2_mse: y_true has zero variance; R^2 is undefined");
  return {1.0 - ss_res / ss_tot, ss_res / static_cast<double>(y_true.size())};
}

std::array<double, kTierCount> per_class_f1(const ConfusionMatrix& cm) {
  std::array<double, kTierCount> f1{};
  for (std::size_t k = 0; k < kTierCount; ++k) {
    const double tp = static_cast<double>(cm.counts[k][k]);
    double predicted = 0.0;
    for (std::size_t t = 0; t < kTierCount; ++t) predicted += static_cast<double>(cm.counts[t][k]);
    const double actual = static_cast<double>(cm.row_sum(k));
    // F1 = 2TP / (predicted + actual); zero when precision + recall is zero.
    f1[k] = tp > 0.0 ? 2.0 * tp / (predicted + actual) : 0.0;
  }
  return f1;
}

ClassificationScore accuracy_weighted_f1(std::span<const int> true_tiers,
                                         std::span<const int> pred_tiers) {
  const ConfusionMatrix cm = confusion(true_tiers, pred_tiers);
  const double n = static_cast<double>(cm.total());
  const auto f1 = per_class_f1(cm);
  double weighted = 0.0;
  for (std::size_t k = 0; k < kTierCount; ++k) {
    weighted += static_cast<double>(cm.row_sum(k)) * f1[k];
  }
  // Divide once at the end so a perfect prediction yields exactly 1.
  return {static_cast<double>(cm.correct()) / n, weighted / n};
}

ConfusionMatrix confusion(std::span<const int> true_tiers, std::span<const int> pred_tiers) {
  check_tier_pairs(true_tiers, pred_tiers);
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < true_tiers.size(); ++i) {
    ++cm.counts[static_cast<std::size_t>(true_tiers[i])][static_cast<std::size_t>(pred_tiers[i])];
  }
  return cm;
}

std::optional<double> adjacency_error_rate(const ConfusionMatrix& cm) {
  std::size_t adjacent = 0, errors = 0;
  for (std::size_t i = 0; i < kTierCount; ++i) {
    for (std::size_t j = 0; j < kTierCount; ++j) {
      if (i == j) continue;
      errors += cm.counts[i][j];
      if (i + 1 == j || j + 1 == i) adjacent += cm.counts[i][j];
    }
  }
  if (errors == 0) return std::nullopt;
  return static_cast<double>(adjacent) / static_cast<double>(errors);
}

void write_confusion_csv(const ConfusionMatrix& cm, std::ostream& out) {
  out << "true\\predicted";
  for (std::size_t k = 0; k < kTierCount; ++k) out << ',' << tier_name(static_cast<Tier>(k));
  out << '\n';
  for (std::size_t i = 0; i < kTierCount; ++i) {
    out << tier_name(static_cast<Tier>(i));
    for (std::size_t j = 0; j < kTierCount; ++j) out << ',' << cm.counts[i][j];
    out << '\n';
  }
}

double compensated_sum(std::span<const double> values) noexcept {
  double sum = 0.0, carry = 0.0;
  for (double v : values) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      carry += (sum - t) + v;
    } else {
      carry += (v - t) + sum;
    }
    sum = t;
  }
  return sum + carry;
}

double mean(std::span<const double> values) noexcept {
  if (values.empty()) return 0.0;
  return compensated_sum(values) / static_cast<double>(values.size());
}

double sample_stddev(std::span<const double> values) noexcept {
  if (values.size() < 2) return 0.0;
  const double mu = mean(values);
  Vector sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) sq[i] = (values[i] - mu) * (values[i] - mu);
  return std::sqrt(compensated_sum(sq) / static_cast<double>(values.size() - 1));
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw ValidationError("pearson: need equal lengths >= 2");
  const double ma = mean(a), mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) throw ValidationError("pearson: zero variance input");
  return sab / std::sqrt(saa * sbb);
}

}  // namespace tierprobe
