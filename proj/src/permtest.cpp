#include "tierprobe/permtest.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>

#include "tierprobe/error.hpp"
#include "tierprobe/format.hpp"
#include "tierprobe/parallel.hpp"

namespace tierprobe {

std::string_view task_name(PermutationTask t) noexcept {
  return t == PermutationTask::EnergyRegression ? "energy_regression" : "tier_classification";
}

double smoothed_p_value(std::size_t exceed_count, std::size_t permutations) {
  if (permutations == 0) throw UsageError("permutation count must be >= 1");
  if (exceed_count > permutations) throw ValidationError("exceed count larger than permutation count");
  return (1.0 + static_cast<double>(exceed_count)) / (static_cast<double>(permutations) + 1.0);
}

PermutationReport run_permutation_test(const FeatureSource& source, const LabelVector& y,
                                       const PermutationConfig& cfg, std::size_t jobs,
                                       std::span<const int> strata) {
  if (cfg.permutations < 1) throw UsageError("permutation count must be >= 1");
  if (y.values.size() < 2) throw ValidationError("permutation test: need at least two labels");
  const bool energy = cfg.task == PermutationTask::EnergyRegression;
  if (energy != (y.kind == LabelKind::Energy)) {
    throw ValidationError("permutation test: label kind does not match task");
  }
  if (energy && cfg.regression.kind != RegressionProbeKind::Ridge && !cfg.allow_nonlinear) {
    throw UsageError("permutation tests use the linear probe; pass allow_nonlinear to test the MLP");
  }

  PermutationReport report;
  report.task = std::string(task_name(cfg.task));
  report.rng_seed = cfg.rng_seed;
  report.null_samples.assign(cfg.permutations, 0.0);

  // The label vector is permuted in full before splitting; the runner keeps
  // the observed run's splits (and stratification) for every permutation.
  if (energy) {
    report.statistic = cfg.regression.kind == RegressionProbeKind::Ridge ? "mean_ridge_r2" : "mean_mlp_r2";
    const RegressionRunner runner(source, cfg.plan, cfg.regression, strata, jobs);
    report.observed = runner.run(y.values, jobs);
    report.t_obs = report.observed.mean("r2");
    parallel_for(cfg.permutations, jobs, [&](std::size_t i) {
      Rng rng(derive_seed(cfg.rng_seed, i));
      const Vector permuted = permute_labels(std::span<const double>(y.values), rng);
      try {
        report.null_samples[i] = runner.run(permuted, 1).mean("r2");
      } catch (const Error& e) {
        throw with_context(e, "permutation " + std::to_string(i));
      }
    });
  } else {
    report.statistic = "mean_weighted_f1";
    const std::vector<int> tiers = y.ordinals();
    const ClassificationRunner runner(source, cfg.plan, cfg.classification,
                                      cfg.plan.stratified ? std::span<const int>(tiers) : strata,
                                      jobs);
    report.observed = runner.run(tiers, jobs);
    report.t_obs = report.observed.mean("weighted_f1");
    parallel_for(cfg.permutations, jobs, [&](std::size_t i) {
      Rng rng(derive_seed(cfg.rng_seed, i));
      const std::vector<int> permuted = permute_labels(std::span<const int>(tiers), rng);
      try {
        report.null_samples[i] = runner.run(permuted, 1).mean("weighted_f1");
      } catch (const Error& e) {
        throw with_context(e, "permutation " + std::to_string(i));
      }
    });
  }

  report.exceed_count = static_cast<std::size_t>(std::count_if(
      report.null_samples.begin(), report.null_samples.end(),
      [&](double t) { return t >= report.t_obs; }));
  report.p_value = smoothed_p_value(report.exceed_count, cfg.permutations);
  return report;
}

NullHistogram export_null(const PermutationReport& report, std::size_t bins) {
  if (bins == 0) throw UsageError("histogram needs at least one bin");
  if (report.null_samples.empty()) throw ValidationError("report has no null samples");
  NullHistogram h;
  h.t_obs = report.t_obs;
  h.statistic = report.statistic;
  const auto [lo_it, hi_it] = std::minmax_element(report.null_samples.begin(), report.null_samples.end());
  double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double width = (hi - lo) / static_cast<double>(bins);
  h.edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) h.edges[b] = lo + width * static_cast<double>(b);
  h.edges.back() = hi;
  h.counts.assign(bins, 0);
  for (double v : report.null_samples) {
    auto b = static_cast<std::size_t>(std::floor((v - lo) / width));
    ++h.counts[std::min(b, bins - 1)];
  }
  return h;
}

void write_histogram(const NullHistogram& h, std::ostream& out) {
  out << "bin_left,bin_right,count\n";
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    out << format_shortest(h.edges[b]) << ',' << format_shortest(h.edges[b + 1]) << ',' << h.counts[b] << '\n';
  }
  out << "T_obs," << format_shortest(h.t_obs) << ",\n";
}

}  // namespace tierprobe
