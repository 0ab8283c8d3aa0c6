#include "tierprobe/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "tierprobe/error.hpp"
#include "tierprobe/parallel.hpp"
#include "tierprobe/rng.hpp"

namespace tierprobe {

namespace {

std::string seed_context(std::uint64_t seed) { return "split seed " + std::to_string(seed); }

void validate_plan(const SplitPlan& plan) {
  if (plan.n < 10) throw ValidationError("split plan: need n >= 10, got " + std::to_string(plan.n));
  if (!(plan.test_fraction > 0.0 && plan.test_fraction < 1.0)) {
    throw ValidationError("split plan: test fraction must lie in (0, 1)");
  }
  if (plan.seeds.empty()) throw ValidationError("split plan: no seeds");
  const std::size_t n_test = test_size(plan.n, plan.test_fraction);
  if (n_test == 0 || n_test >= plan.n) {
    throw ValidationError("split plan: degenerate split sizes (test " + std::to_string(n_test) +
                          " of " + std::to_string(plan.n) + ")");
  }
  std::set<std::uint64_t> unique(plan.seeds.begin(), plan.seeds.end());
  if (unique.size() != plan.seeds.size()) throw ValidationError("split plan: duplicate seeds");
}

// Largest-remainder allocation of `total` test slots over class sizes.
std::vector<std::size_t> stratum_quotas(const std::vector<std::size_t>& sizes, std::size_t total,
                                        std::size_t n) {
  std::vector<std::size_t> quota(sizes.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    const double exact = static_cast<double>(sizes[k]) * static_cast<double>(total) / static_cast<double>(n);
    quota[k] = static_cast<std::size_t>(std::floor(exact));
    assigned += quota[k];
    remainders.emplace_back(exact - static_cast<double>(quota[k]), k);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < total && i < remainders.size(); ++i) {
    const std::size_t k = remainders[i].second;
    if (quota[k] < sizes[k]) {
      ++quota[k];
      ++assigned;
    }
  }
  return quota;
}

template <typename Fn>
void annotate_seed(std::uint64_t seed, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    throw with_context(e, seed_context(seed));
  }
}

}  // namespace

std::vector<std::uint64_t> default_seeds(std::size_t count) {
  std::vector<std::uint64_t> seeds(count);
  std::iota(seeds.begin(), seeds.end(), 0);
  return seeds;
}

std::size_t test_size(std::size_t n, double test_fraction) {
  return static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));
}

std::vector<Split> make_splits(const SplitPlan& plan, std::span<const int> strata) {
  validate_plan(plan);
  const std::size_t n = plan.n;
  const std::size_t n_test = test_size(n, plan.test_fraction);
  if (plan.stratified && strata.size() != n) {
    throw ValidationError("stratified split: need one stratum label per row");
  }

  std::vector<Split> splits;
  splits.reserve(plan.seeds.size());
  for (std::uint64_t seed : plan.seeds) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(perm));

    Split s;
    s.seed = seed;
    if (!plan.stratified) {
      s.test.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
      s.train.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end());
    } else {
      const int max_label = *std::max_element(strata.begin(), strata.end());
      std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(max_label) + 1);
      for (std::size_t idx : perm) members[static_cast<std::size_t>(strata[idx])].push_back(idx);
      std::vector<std::size_t> sizes;
      for (const auto& m : members) sizes.push_back(m.size());
      const auto quota = stratum_quotas(sizes, n_test, n);
      for (std::size_t k = 0; k < members.size(); ++k) {
        for (std::size_t i = 0; i < members[k].size(); ++i) {
          (i < quota[k] ? s.test : s.train).push_back(members[k][i]);
        }
      }
    }
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.test.begin(), s.test.end());
    if (s.train.empty() || s.test.empty()) throw ValidationError("degenerate split: empty partition");
    splits.push_back(std::move(s));
  }
  return splits;
}

FeaturePair FixedFeatures::features(const Split& split) const {
  return {x_.gather_rows(split.train), x_.gather_rows(split.test)};
}

std::string_view probe_name(RegressionProbeKind k) noexcept {
  return k == RegressionProbeKind::Ridge ? "ridge" : "mlp";
}

double SplitRecord::metric(std::string_view name) const {
  for (const auto& [k, v] : metrics) {
    if (k == name) return v;
  }
  throw ValidationError("split record has no metric '" + std::string(name) + "'");
}

double AggregateOutcome::mean(std::string_view metric) const {
  for (const auto& m : summary) {
    if (m.name == metric) return m.mean;
  }
  throw ValidationError("outcome has no metric '" + std::string(metric) + "'");
}

void summarize(AggregateOutcome& outcome) {
  std::sort(outcome.splits.begin(), outcome.splits.end(),
            [](const SplitRecord& a, const SplitRecord& b) { return a.seed < b.seed; });
  outcome.summary.clear();
  if (outcome.splits.empty()) return;
  for (const auto& [name, _] : outcome.splits.front().metrics) {
    Vector values;
    for (const auto& s : outcome.splits) values.push_back(s.metric(name));
    outcome.summary.push_back({name, tierprobe::mean(values), sample_stddev(values)});
  }
  outcome.representative_confusion.reset();
  for (const auto& s : outcome.splits) {
    if (s.confusion) {
      // Seed 0 when present, otherwise the lowest seed.
      outcome.representative_confusion = s.confusion;
      outcome.representative_seed = s.seed;
      break;
    }
  }
}

// ---------------------------------------------------------------------------

struct RegressionRunner::Prepared {
  FeaturePair features;
  std::optional<RidgeSolver> solver;
};

RegressionRunner::RegressionRunner(const FeatureSource& source, const SplitPlan& plan,
                                   RegressionProbe probe, std::span<const int> strata,
                                   std::size_t jobs)
    : probe_(std::move(probe)), plan_(plan) {
  if (source.rows() != plan.n) {
    throw ValidationError("protocol: feature rows (" + std::to_string(source.rows()) +
                          ") differ from plan size (" + std::to_string(plan.n) + ")");
  }
  splits_ = make_splits(plan, strata);
  prepared_.resize(splits_.size());
  parallel_for(splits_.size(), jobs, [&](std::size_t i) {
    Prepared& p = prepared_[i];
    annotate_seed(splits_[i].seed, [&] {
      p.features = source.features(splits_[i]);
      if (probe_.kind == RegressionProbeKind::Ridge) p.solver.emplace(p.features.train, probe_.alpha);
    });
  });
}

RegressionRunner::~RegressionRunner() = default;
RegressionRunner::RegressionRunner(RegressionRunner&&) noexcept = default;

AggregateOutcome RegressionRunner::run(std::span<const double> y, std::size_t jobs) const {
  if (y.size() != plan_.n) {
    throw ValidationError("protocol: " + std::to_string(y.size()) + " targets for " +
                          std::to_string(plan_.n) + " rows");
  }
  AggregateOutcome out;
  out.task = "energy_regression";
  out.probe = std::string(probe_name(probe_.kind));
  out.config = probe_;
  out.test_fraction = plan_.test_fraction;
  out.stratified = plan_.stratified;
  out.splits.resize(prepared_.size());

  parallel_for(prepared_.size(), jobs, [&](std::size_t i) {
    const Prepared& p = prepared_[i];
    const Split& split = splits_[i];
    annotate_seed(split.seed, [&] {
      const Vector y_train = gather(y, std::span<const std::size_t>(split.train));
      const Vector y_test = gather(y, std::span<const std::size_t>(split.test));
      Vector pred;
      if (p.solver) {
        pred = predict_ridge(p.solver->solve(y_train), p.features.test);
      } else {
        // Split seed also seeds the MLP initialization.
        pred = predict_mlp(fit_mlp(p.features.train, y_train, split.seed, probe_.mlp),
                           p.features.test);
      }
      const RegressionScore score = r2_mse(y_test, pred);
      SplitRecord& rec = out.splits[i];
      rec.seed = split.seed;
      rec.train_size = split.train.size();
      rec.test_size = split.test.size();
      rec.metrics = {{"r2", score.r2}, {"mse", score.mse}};
    });
  });
  summarize(out);
  return out;
}

// ---------------------------------------------------------------------------

ClassificationRunner::ClassificationRunner(const FeatureSource& source, const SplitPlan& plan,
                                           ClassificationProbe probe, std::span<const int> strata,
                                           std::size_t jobs)
    : probe_(probe), plan_(plan) {
  if (source.rows() != plan.n) {
    throw ValidationError("protocol: feature rows (" + std::to_string(source.rows()) +
                          ") differ from plan size (" + std::to_string(plan.n) + ")");
  }
  splits_ = make_splits(plan, strata);
  features_.resize(splits_.size());
  parallel_for(splits_.size(), jobs, [&](std::size_t i) {
    annotate_seed(splits_[i].seed, [&] { features_[i] = source.features(splits_[i]); });
  });
}

AggregateOutcome ClassificationRunner::run(std::span<const int> tiers, std::size_t jobs) const {
  if (tiers.size() != plan_.n) {
    throw ValidationError("protocol: " + std::to_string(tiers.size()) + " labels for " +
                          std::to_string(plan_.n) + " rows");
  }
  AggregateOutcome out;
  out.task = "tier_classification";
  out.probe = "logistic";
  out.config = probe_;
  out.test_fraction = plan_.test_fraction;
  out.stratified = plan_.stratified;
  out.splits.resize(splits_.size());

  parallel_for(splits_.size(), jobs, [&](std::size_t i) {
    const Split& s = splits_[i];
    annotate_seed(s.seed, [&] {
      const auto t_train = gather(tiers, std::span<const std::size_t>(s.train));
      const auto t_test = gather(tiers, std::span<const std::size_t>(s.test));
      std::set<int> classes(t_train.begin(), t_train.end());
      if (classes.size() < 2) {
        throw ValidationError("classifier requires at least 2 tiers in the training split");
      }
      const LogisticModel model = fit_logistic(features_[i].train, t_train, probe_.logistic);
      const TierPrediction pred = predict_tier(model, features_[i].test);
      const ClassificationScore score = accuracy_weighted_f1(t_test, pred.tiers);
      SplitRecord& rec = out.splits[i];
      rec.seed = s.seed;
      rec.train_size = s.train.size();
      rec.test_size = s.test.size();
      rec.metrics = {{"accuracy", score.accuracy}, {"weighted_f1", score.weighted_f1}};
      rec.confusion = confusion(t_test, pred.tiers);
      rec.converged = model.converged;
    });
  });
  summarize(out);
  for (const auto& rec : out.splits) {
    if (!rec.converged) {
      out.warnings.push_back(seed_context(rec.seed) +
                             ": logistic fit stopped at the iteration budget before reaching the "
                             "gradient tolerance");
    }
  }
  return out;
}

AggregateOutcome run_regression_protocol(const FeatureSource& source, std::span<const double> y,
                                         const SplitPlan& plan, const RegressionProbe& probe,
                                         std::size_t jobs, std::span<const int> strata) {
  return RegressionRunner(source, plan, probe, strata, jobs).run(y, jobs);
}

AggregateOutcome run_classification_protocol(const FeatureSource& source,
                                             std::span<const int> tiers, const SplitPlan& plan,
                                             const ClassificationProbe& probe, std::size_t jobs) {
  return ClassificationRunner(source, plan, probe, plan.stratified ? tiers : std::span<const int>{},
                              jobs)
      .run(tiers, jobs);
}

}  // namespace tierprobe
