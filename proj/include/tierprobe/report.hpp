#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tierprobe/lexical.hpp"
#include "tierprobe/permtest.hpp"
#include "tierprobe/protocol.hpp"

namespace tierprobe {

inline constexpr std::string_view kToolkitVersion = "1.0.0";
inline constexpr std::string_view kBundleSchema = "tierprobe.result_bundle";
inline constexpr int kBundleSchemaVersion = 1;
inline constexpr std::string_view kManifestSchema = "tierprobe.run_manifest";

/// Every tunable default in one place. Loaded from a JSON config file
/// (partial files override only the keys they name) and echoed, fully
/// resolved, into every bundle and manifest.
struct ToolkitConfig {
  std::size_t split_count = 30;              // seeds 0..split_count-1
  std::vector<std::uint64_t> seed_list;      // overrides split_count when non-empty
  double test_fraction = 0.2;
  bool stratified = false;
  double ridge_alpha = 1.0;
  LogisticConfig logistic;
  MlpConfig mlp;
  std::size_t permutations = 200;
  std::uint64_t permutation_seed = 0;
  std::size_t histogram_bins = 30;
  TfidfConfig tfidf;
  bool normalize_embeddings = true;

  std::vector<std::uint64_t> seeds() const;
  SplitPlan plan(std::size_t n) const;
};

nlohmann::json to_json(const ToolkitConfig& cfg);
/// Applies the keys present in `j` on top of `base`; unknown keys are errors.
ToolkitConfig config_from_json(const nlohmann::json& j, ToolkitConfig base = {});
ToolkitConfig load_config(const std::filesystem::path& path);

nlohmann::json to_json(const ConfusionMatrix& cm);
nlohmann::json to_json(const AggregateOutcome& outcome);
nlohmann::json to_json(const PermutationReport& report);

/// Shared bundle header fields.
struct BundleHeader {
  std::string kind;        // "probe" | "permtest" | "baseline"
  std::string task;        // "energy_regression" | "tier_classification"
  std::string features;    // "embeddings" | "lexical-baseline"
  std::string model_name;
};

nlohmann::json make_bundle(const BundleHeader& header, const ToolkitConfig& cfg,
                           const std::vector<AggregateOutcome>& outcomes,
                           const PermutationReport* permutation = nullptr,
                           const std::vector<std::string>& notes = {});

/// Stable text form: two-space indentation, trailing newline.
std::string dump_bundle(const nlohmann::json& bundle);

/// Loads a bundle and checks its schema tag and version.
nlohmann::json load_bundle(const std::filesystem::path& path);

struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  nlohmann::json config;
  std::vector<std::pair<std::string, std::string>> inputs;   // path, sha256
  std::vector<std::string> outputs;
  std::size_t jobs = 1;
  std::string started_at;
  std::string finished_at;
};

nlohmann::json to_json(const RunManifest& m);

/// Current UTC time, ISO-8601.
std::string utc_timestamp();

// ---------------------------------------------------------------------------
// Consolidated tables across bundles
// ---------------------------------------------------------------------------

struct RegressionRow {
  std::string model;
  std::optional<double> ridge_r2, ridge_mse, mlp_r2, mlp_mse;
};

struct ClassificationRow {
  std::string model;
  double accuracy = 0.0;
  double weighted_f1 = 0.0;
};

struct SignificanceRow {
  std::string model;
  std::string task;
  std::string statistic;
  double observed = 0.0;
  double p_value = 1.0;
  std::size_t permutations = 0;
};

struct ReportTables {
  std::vector<RegressionRow> regression;
  std::vector<ClassificationRow> classification;
  std::vector<SignificanceRow> significance;
};

/// Rows keep first-seen model order. A later bundle for the same model and
/// metric replaces the earlier value.
ReportTables build_report(const std::vector<nlohmann::json>& bundles);

/// Plain-text tables, values shown with 3 decimals.
std::string render_report(const ReportTables& tables);

nlohmann::json to_json(const ReportTables& tables);

}  // namespace tierprobe
