#include "tierprobe/report.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "tierprobe/error.hpp"
#include "tierprobe/format.hpp"
#include "tierprobe/rng.hpp"

namespace tierprobe {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, std::initializer_list<std::string_view> known, const std::string& where) {
  if (!j.is_object()) throw UsageError("config: '" + where + "' must be an object");
  for (const auto& [key, _] : j.items()) {
    bool found = false;
    for (auto k : known) found = found || key == k;
    if (!found) throw UsageError("config: unknown key '" + where + "." + key + "'");
  }
}

template <typename T>
void read_if(const json& j, const char* key, T& target, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    target = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw UsageError("config: bad value for '" + where + "." + key + "'");
  }
}

json probe_config_json(const std::variant<RegressionProbe, ClassificationProbe>& config) {
  if (const auto* r = std::get_if<RegressionProbe>(&config)) {
    if (r->kind == RegressionProbeKind::Ridge) return {{"alpha", r->alpha}};
    const MlpConfig& m = r->mlp;
    return {{"hidden1", m.hidden1},           {"hidden2", m.hidden2},
            {"activation", activation_name(m.activation)},
            {"learning_rate", m.learning_rate}, {"epochs", m.epochs},
            {"beta1", m.beta1},               {"beta2", m.beta2},
            {"epsilon", m.epsilon},           {"optimizer", "adam-full-batch"},
            {"loss", "mse"},                  {"init", "uniform-fan-in"},
            {"init_seed", "split seed"}};
  }
  const LogisticConfig& l = std::get<ClassificationProbe>(config).logistic;
  return {{"reg", l.reg},
          {"grad_tol", l.grad_tol},
          {"max_iterations", l.max_iterations},
          {"history", l.history},
          {"optimizer", "lbfgs"},
          {"init", "zeros"}};
}

const json* find_metric(const json& outcome, const char* name) {
  const json& summary = outcome.at("summary");
  if (!summary.contains(name)) return nullptr;
  return &summary.at(name).at("mean");
}

std::string cell(const std::optional<double>& v) { return v ? format_fixed(*v, 3) : "-"; }

std::string render_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& r : rows)
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  std::ostringstream os;
  auto line = [&](const std::vector<std::string>& r) {
    os << '|';
    for (std::size_t c = 0; c < r.size(); ++c) {
      os << ' ' << r[c] << std::string(width[c] - r[c].size(), ' ') << " |";
    }
    os << '\n';
  };
  line(header);
  os << '|';
  for (std::size_t c = 0; c < header.size(); ++c) os << std::string(width[c] + 2, '-') << '|';
  os << '\n';
  for (const auto& r : rows) line(r);
  return os.str();
}

}  // namespace

std::vector<std::uint64_t> ToolkitConfig::seeds() const {
  return seed_list.empty() ? default_seeds(split_count) : seed_list;
}

SplitPlan ToolkitConfig::plan(std::size_t n) const {
  return SplitPlan{n, test_fraction, seeds(), stratified};
}

json to_json(const ToolkitConfig& c) {
  const auto seeds = c.seeds();
  return {
      {"split", {{"count", seeds.size()}, {"seeds", seeds}, {"test_fraction", c.test_fraction},
                 {"stratified", c.stratified}}},
      {"ridge", {{"alpha", c.ridge_alpha}}},
      {"logistic", {{"reg", c.logistic.reg}, {"grad_tol", c.logistic.grad_tol},
                    {"max_iterations", c.logistic.max_iterations}, {"history", c.logistic.history}}},
      {"mlp", {{"hidden1", c.mlp.hidden1}, {"hidden2", c.mlp.hidden2},
               {"activation", activation_name(c.mlp.activation)},
               {"learning_rate", c.mlp.learning_rate}, {"epochs", c.mlp.epochs},
               {"beta1", c.mlp.beta1}, {"beta2", c.mlp.beta2}, {"epsilon", c.mlp.epsilon}}},
      {"permutation", {{"count", c.permutations}, {"rng_seed", c.permutation_seed},
                       {"histogram_bins", c.histogram_bins}}},
      {"tfidf", {{"bigrams", c.tfidf.bigrams}}},
      {"embeddings", {{"normalize", c.normalize_embeddings}}},
  };
}

ToolkitConfig config_from_json(const json& j, ToolkitConfig c) {
  reject_unknown(j, {"split", "ridge", "logistic", "mlp", "permutation", "tfidf", "embeddings"}, "config");
  if (j.contains("split")) {
    const json& s = j["split"];
    reject_unknown(s, {"count", "seeds", "test_fraction", "stratified"}, "split");
    read_if(s, "count", c.split_count, "split");
    if (s.contains("count") && !s.contains("seeds")) c.seed_list.clear();
    read_if(s, "seeds", c.seed_list, "split");
    read_if(s, "test_fraction", c.test_fraction, "split");
    read_if(s, "stratified", c.stratified, "split");
  }
  if (j.contains("ridge")) {
    reject_unknown(j["ridge"], {"alpha"}, "ridge");
    read_if(j["ridge"], "alpha", c.ridge_alpha, "ridge");
  }
  if (j.contains("logistic")) {
    const json& l = j["logistic"];
    reject_unknown(l, {"reg", "grad_tol", "max_iterations", "history"}, "logistic");
    read_if(l, "reg", c.logistic.reg, "logistic");
    read_if(l, "grad_tol", c.logistic.grad_tol, "logistic");
    read_if(l, "max_iterations", c.logistic.max_iterations, "logistic");
    read_if(l, "history", c.logistic.history, "logistic");
  }
  if (j.contains("mlp")) {
    const json& m = j["mlp"];
    reject_unknown(m, {"hidden1", "hidden2", "activation", "learning_rate", "epochs", "beta1", "beta2", "epsilon"}, "mlp");
    read_if(m, "hidden1", c.mlp.hidden1, "mlp");
    read_if(m, "hidden2", c.mlp.hidden2, "mlp");
    std::string act(activation_name(c.mlp.activation));
    read_if(m, "activation", act, "mlp");
    c.mlp.activation = parse_activation(act);
    read_if(m, "learning_rate", c.mlp.learning_rate, "mlp");
    read_if(m, "epochs", c.mlp.epochs, "mlp");
    read_if(m, "beta1", c.mlp.beta1, "mlp");
    read_if(m, "beta2", c.mlp.beta2, "mlp");
    read_if(m, "epsilon", c.mlp.epsilon, "mlp");
  }
  if (j.contains("permutation")) {
    const json& p = j["permutation"];
    reject_unknown(p, {"count", "rng_seed", "histogram_bins"}, "permutation");
    read_if(p, "count", c.permutations, "permutation");
    read_if(p, "rng_seed", c.permutation_seed, "permutation");
    read_if(p, "histogram_bins", c.histogram_bins, "permutation");
  }
  if (j.contains("tfidf")) {
    reject_unknown(j["tfidf"], {"bigrams"}, "tfidf");
    read_if(j["tfidf"], "bigrams", c.tfidf.bigrams, "tfidf");
  }
  if (j.contains("embeddings")) {
    reject_unknown(j["embeddings"], {"normalize"}, "embeddings");
    read_if(j["embeddings"], "normalize", c.normalize_embeddings, "embeddings");
  }
  return c;
}

ToolkitConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file: " + path.string());
  try {
    return config_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw UsageError("malformed config file " + path.string() + ": " + e.what());
  }
}

json to_json(const ConfusionMatrix& cm) {
  json names = json::array();
  for (std::size_t k = 0; k < kTierCount; ++k) names.push_back(tier_name(static_cast<Tier>(k)));
  json counts = json::array();
  for (const auto& row : cm.counts) counts.push_back(row);
  return {{"tiers", names}, {"counts", counts}};
}

json to_json(const AggregateOutcome& o) {
  json splits = json::array();
  json seeds = json::array();
  for (const auto& s : o.splits) {
    json metrics = json::object();
    for (const auto& [k, v] : s.metrics) metrics[k] = v;
    json rec = {{"seed", s.seed}, {"train_size", s.train_size}, {"test_size", s.test_size}, {"metrics", metrics}};
    if (s.confusion) {
      rec["confusion"] = to_json(*s.confusion).at("counts");
      rec["converged"] = s.converged;
    }
    splits.push_back(rec);
    seeds.push_back(s.seed);
  }
  json summary = json::object();
  for (const auto& m : o.summary) summary[m.name] = {{"mean", m.mean}, {"std", m.stddev}};
  json out = {{"task", o.task},
              {"probe", o.probe},
              {"probe_config", probe_config_json(o.config)},
              {"test_fraction", o.test_fraction},
              {"stratified", o.stratified},
              {"seeds", seeds},
              {"summary", summary},
              {"splits", splits},
              {"warnings", o.warnings}};
  if (o.representative_confusion) {
    out["representative_confusion"] = to_json(*o.representative_confusion);
    out["representative_confusion"]["seed"] = o.representative_seed;
    if (auto rate = adjacency_error_rate(*o.representative_confusion)) {
      out["representative_confusion"]["adjacency_error_rate"] = *rate;
    } else {
      out["representative_confusion"]["adjacency_error_rate"] = "no-errors";
    }
  }
  return out;
}

json to_json(const PermutationReport& r) {
  return {{"task", r.task},
          {"statistic", r.statistic},
          {"t_obs", r.t_obs},
          {"permutations", r.permutations()},
          {"exceed_count", r.exceed_count},
          {"p_value", r.p_value},
          {"rng_seed", r.rng_seed},
          {"tie_rule", "null >= observed counts as exceedance"},
          {"null_samples", r.null_samples}};
}

json make_bundle(const BundleHeader& h, const ToolkitConfig& cfg,
                 const std::vector<AggregateOutcome>& outcomes, const PermutationReport* permutation,
                 const std::vector<std::string>& notes) {
  json out = {{"schema", kBundleSchema},
              {"schema_version", kBundleSchemaVersion},
              {"toolkit_version", kToolkitVersion},
              {"prng", Rng::kAlgorithm},
              {"kind", h.kind},
              {"task", h.task},
              {"features", h.features},
              {"model_name", h.model_name},
              {"config", to_json(cfg)},
              {"notes", notes}};
  json list = json::array();
  for (const auto& o : outcomes) list.push_back(to_json(o));
  out["outcomes"] = list;
  if (permutation) out["permutation"] = to_json(*permutation);
  return out;
}

std::string dump_bundle(const json& bundle) { return bundle.dump(2) + "\n"; }

json load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open bundle: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("malformed bundle " + path.string() + ": " + e.what());
  }
  if (!j.is_object() || j.value("schema", "") != kBundleSchema) {
    throw ValidationError("not a result bundle: " + path.string());
  }
  if (j.value("schema_version", -1) != kBundleSchemaVersion) {
    throw ValidationError("incompatible bundle version in " + path.string() + " (expected " +
                          std::to_string(kBundleSchemaVersion) + ")");
  }
  return j;
}

json to_json(const RunManifest& m) {
  json inputs = json::array();
  for (const auto& [path, digest] : m.inputs) inputs.push_back({{"path", path}, {"sha256", digest}});
  return {{"schema", kManifestSchema},
          {"toolkit_version", kToolkitVersion},
          {"prng", Rng::kAlgorithm},
          {"command", m.command},
          {"argv", m.argv},
          {"config", m.config},
          {"inputs", inputs},
          {"outputs", m.outputs},
          {"jobs", m.jobs},
          {"started_at", m.started_at},
          {"finished_at", m.finished_at}};
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ReportTables build_report(const std::vector<json>& bundles) {
  if (bundles.empty()) throw UsageError("report needs at least one bundle");
  ReportTables t;
  auto regression_row = [&](const std::string& model) -> RegressionRow& {
    for (auto& r : t.regression)
      if (r.model == model) return r;
    t.regression.push_back({model, {}, {}, {}, {}});
    return t.regression.back();
  };
  auto classification_row = [&](const std::string& model) -> ClassificationRow& {
    for (auto& r : t.classification)
      if (r.model == model) return r;
    t.classification.push_back({model, 0.0, 0.0});
    return t.classification.back();
  };

  for (const json& b : bundles) {
    if (b.value("schema", "") != kBundleSchema || b.value("schema_version", -1) != kBundleSchemaVersion) {
      throw ValidationError("incompatible bundle version");
    }
    const std::string model = b.at("model_name").get<std::string>();
    const std::string kind = b.at("kind").get<std::string>();
    if (kind == "permtest") {
      const json& p = b.at("permutation");
      t.significance.push_back({model, p.at("task").get<std::string>(), p.at("statistic").get<std::string>(),
                                p.at("t_obs").get<double>(), p.at("p_value").get<double>(),
                                p.at("permutations").get<std::size_t>()});
      continue;
    }
    for (const json& o : b.at("outcomes")) {
      const std::string task = o.at("task").get<std::string>();
      const std::string probe = o.at("probe").get<std::string>();
      if (task == "energy_regression") {
        RegressionRow& row = regression_row(model);
        const json* r2 = find_metric(o, "r2");
        const json* mse = find_metric(o, "mse");
        if (!r2 || !mse) throw ValidationError("bundle outcome lacks r2/mse summary");
        if (probe == "ridge") {
          row.ridge_r2 = r2->get<double>();
          row.ridge_mse = mse->get<double>();
        } else {
          row.mlp_r2 = r2->get<double>();
          row.mlp_mse = mse->get<double>();
        }
      } else {
        ClassificationRow& row = classification_row(model);
        const json* acc = find_metric(o, "accuracy");
        const json* f1 = find_metric(o, "weighted_f1");
        if (!acc || !f1) throw ValidationError("bundle outcome lacks accuracy/weighted_f1 summary");
        row.accuracy = acc->get<double>();
        row.weighted_f1 = f1->get<double>();
      }
    }
  }
  return t;
}

std::string render_report(const ReportTables& t) {
  std::ostringstream os;
  if (!t.regression.empty()) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : t.regression) {
      rows.push_back({r.model, cell(r.ridge_r2), cell(r.ridge_mse), cell(r.mlp_r2), cell(r.mlp_mse)});
    }
    os << "Energy regression (mean over splits)\n"
       << render_table({"Model", "Ridge R2", "Ridge MSE", "MLP R2", "MLP MSE"}, rows) << '\n';
  }
  if (!t.classification.empty()) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : t.classification) {
      rows.push_back({r.model, format_fixed(r.accuracy, 3), format_fixed(r.weighted_f1, 3)});
    }
    os << "Tier classification (mean over splits)\n"
       << render_table({"Model", "Accuracy", "Weighted F1"}, rows) << '\n';
  }
  if (!t.significance.empty()) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : t.significance) {
      rows.push_back({r.model, r.task, r.statistic, format_fixed(r.observed, 3), format_fixed(r.p_value, 3),
                      std::to_string(r.permutations)});
    }
    os << "Permutation significance\n"
       << render_table({"Model", "Task", "Statistic", "Observed", "p-value", "N"}, rows) << '\n';
  }
  return os.str();
}

json to_json(const ReportTables& t) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json reg = json::array(), cls = json::array(), sig = json::array();
  for (const auto& r : t.regression) {
    reg.push_back({{"model", r.model}, {"ridge_r2", opt(r.ridge_r2)}, {"ridge_mse", opt(r.ridge_mse)},
                   {"mlp_r2", opt(r.mlp_r2)}, {"mlp_mse", opt(r.mlp_mse)}});
  }
  for (const auto& r : t.classification) {
    cls.push_back({{"model", r.model}, {"accuracy", r.accuracy}, {"weighted_f1", r.weighted_f1}});
  }
  for (const auto& r : t.significance) {
    sig.push_back({{"model", r.model}, {"task", r.task}, {"statistic", r.statistic},
                   {"observed", r.observed}, {"p_value", r.p_value}, {"permutations", r.permutations}});
  }
  return {{"regression", reg}, {"classification", cls}, {"significance", sig}};
}

}  // namespace tierprobe
