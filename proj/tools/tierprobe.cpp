// tierprobe: command-line front end for the probing toolkit.
//
//   tierprobe validate  --corpus C [--embeddings M]
//   tierprobe probe     --corpus C --embeddings M --task energy|tier [--probe ridge|mlp|logistic] --out B
//   tierprobe permtest  --corpus C --embeddings M --task energy|tier --out B [--histogram-out H]
//   tierprobe baseline  --corpus C --task energy|tier --out B [--bigrams]
//   tierprobe project   --corpus C --embeddings M --k 2|3 --out T
//   tierprobe report    B1 [B2 ...] [--json-out R]
//   tierprobe synth     --out-dir D [generator flags]
//
// Exit codes: 0 success, 1 validation or usage error, 2 computational failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "tierprobe/corpus.hpp"
#include "tierprobe/embedstore.hpp"
#include "tierprobe/error.hpp"
#include "tierprobe/format.hpp"
#include "tierprobe/kernels.hpp"
#include "tierprobe/lexical.hpp"
#include "tierprobe/metrics.hpp"
#include "tierprobe/permtest.hpp"
#include "tierprobe/projection.hpp"
#include "tierprobe/report.hpp"
#include "tierprobe/synth.hpp"

namespace fs = std::filesystem;
using namespace tierprobe;
using nlohmann::json;

namespace {

// Flags shared by the commands that run the protocol. Unset optionals leave
// the config-file (or built-in) value in place.
struct ProtocolFlags {
  std::string config_path;
  std::optional<std::size_t> splits;
  std::vector<std::uint64_t> seed_list;
  std::optional<double> test_fraction;
  bool stratified = false;
  std::optional<double> alpha;
  std::optional<double> logistic_reg;
  std::optional<int> logistic_max_iter;
  std::optional<int> mlp_epochs;
  std::optional<double> mlp_lr;
  std::optional<std::size_t> mlp_hidden1;
  std::optional<std::size_t> mlp_hidden2;
  std::optional<std::string> mlp_activation;
  bool no_normalize = false;
  std::size_t jobs = 1;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file with default overrides");
    cmd->add_option("--splits", splits, "Number of split seeds (0..n-1)");
    cmd->add_option("--seed-list", seed_list, "Explicit split seeds")->delimiter(',');
    cmd->add_option("--test-fraction", test_fraction, "Held-out fraction per split");
    cmd->add_flag("--stratified", stratified, "Stratify splits by tier");
    cmd->add_option("--alpha", alpha, "Ridge regularization strength");
    cmd->add_option("--logistic-reg", logistic_reg, "Logistic L2 coefficient");
    cmd->add_option("--logistic-max-iter", logistic_max_iter, "Logistic iteration budget");
    cmd->add_option("--mlp-epochs", mlp_epochs, "MLP full-batch epochs");
    cmd->add_option("--mlp-lr", mlp_lr, "MLP Adam step size");
    cmd->add_option("--mlp-hidden1", mlp_hidden1, "First hidden layer width");
    cmd->add_option("--mlp-hidden2", mlp_hidden2, "Second hidden layer width");
    cmd->add_option("--mlp-activation", mlp_activation, "relu or tanh");
    cmd->add_flag("--no-normalize", no_normalize, "Skip L2 row normalization of embeddings");
    cmd->add_option("--jobs", jobs, "Worker threads (results do not depend on this)")
        ->check(CLI::PositiveNumber);
  }

  ToolkitConfig resolve() const {
    ToolkitConfig c = config_path.empty() ? ToolkitConfig{} : load_config(config_path);
    if (splits) {
      c.split_count = *splits;
      c.seed_list.clear();
    }
    if (!seed_list.empty()) c.seed_list = seed_list;
    if (test_fraction) c.test_fraction = *test_fraction;
    if (stratified) c.stratified = true;
    if (alpha) c.ridge_alpha = *alpha;
    if (logistic_reg) c.logistic.reg = *logistic_reg;
    if (logistic_max_iter) c.logistic.max_iterations = *logistic_max_iter;
    if (mlp_epochs) c.mlp.epochs = *mlp_epochs;
    if (mlp_lr) c.mlp.learning_rate = *mlp_lr;
    if (mlp_hidden1) c.mlp.hidden1 = *mlp_hidden1;
    if (mlp_hidden2) c.mlp.hidden2 = *mlp_hidden2;
    if (mlp_activation) c.mlp.activation = parse_activation(*mlp_activation);
    if (no_normalize) c.normalize_embeddings = false;
    if (c.seeds().empty()) throw UsageError("need at least one split seed");
    return c;
  }
};

LabelKind parse_task(const std::string& task) {
  if (task == "energy") return LabelKind::Energy;
  if (task == "tier") return LabelKind::Tier;
  throw UsageError("unknown task '" + task + "' (expected energy or tier)");
}

std::string task_tag(LabelKind k) {
  return k == LabelKind::Energy ? "energy_regression" : "tier_classification";
}

Corpus load_corpus_reporting(const fs::path& path) {
  std::vector<CorpusFinding> warnings;
  Corpus c = load_corpus(path, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w.to_string() << '\n';
  return c;
}

EmbeddingMatrix load_aligned(const fs::path& manifest, const Corpus& corpus, const ToolkitConfig& cfg) {
  EmbeddingMatrix x = read_embeddings(manifest);
  require_aligned(x, corpus);
  if (cfg.normalize_embeddings && !x.normalized) x = l2_normalize(x);
  return x;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw UsageError("cannot write " + path.string());
}

RunManifest start_manifest(const std::string& command, int argc, char** argv, std::size_t jobs) {
  RunManifest m;
  m.command = command;
  m.argv.assign(argv, argv + argc);
  m.jobs = jobs;
  m.started_at = utc_timestamp();
  return m;
}

void add_input(RunManifest& m, const fs::path& path) {
  m.inputs.emplace_back(path.string(), sha256_file(path));
}

void add_embedding_inputs(RunManifest& m, const fs::path& manifest) {
  add_input(m, manifest);
  add_input(m, manifest.parent_path() / read_manifest(manifest).payload);
}

// Timestamps and host details live in the sidecar manifest so the bundle
// itself stays byte-identical across repeated runs.
void finish(RunManifest& m, const fs::path& bundle_path) {
  m.finished_at = utc_timestamp();
  json j = to_json(m);
  j["simd_backend"] = kernels::backend_name(kernels::active_backend());
  write_text(bundle_path.string() + ".manifest.json", j.dump(2) + "\n");
}

std::vector<std::string> decision_notes(const std::string& features) {
  std::vector<std::string> notes = {
      "hyperparameters (ridge alpha, logistic regularization and tolerance, MLP architecture and "
      "optimizer) are toolkit defaults recorded in config",
      "splits are uniform (unstratified) unless split.stratified is set",
      "logistic probe minimized with deterministic L-BFGS from zero initialization"};
  if (features == "lexical-baseline") {
    notes.push_back("tfidf vocabulary is refit on the training split of every seed (no test-split leakage)");
    notes.push_back("tfidf: raw term counts, smoothed idf ln((1+D)/(1+df))+1, L2-normalized rows");
  }
  return notes;
}

std::vector<AggregateOutcome> run_probe(const FeatureSource& source, const Corpus& corpus, LabelKind task,
                                        const std::string& probe, const ToolkitConfig& cfg, std::size_t jobs) {
  const SplitPlan plan = cfg.plan(corpus.size());
  const std::vector<int> tiers = labels(corpus, LabelKind::Tier).ordinals();
  if (task == LabelKind::Tier) {
    if (probe != "logistic") throw UsageError("tier task supports only --probe logistic");
    return {run_classification_protocol(source, tiers, plan, {cfg.logistic}, jobs)};
  }
  std::vector<RegressionProbeKind> kinds;
  if (probe == "ridge") kinds = {RegressionProbeKind::Ridge};
  else if (probe == "mlp") kinds = {RegressionProbeKind::Mlp};
  else if (probe == "both") kinds = {RegressionProbeKind::Ridge, RegressionProbeKind::Mlp};
  else throw UsageError("unknown probe '" + probe + "' for energy task (expected ridge, mlp or both)");
  const LabelVector y = labels(corpus, LabelKind::Energy);
  std::vector<AggregateOutcome> outcomes;
  for (auto kind : kinds) {
    RegressionProbe p{kind, cfg.ridge_alpha, cfg.mlp};
    outcomes.push_back(run_regression_protocol(source, y.values, plan, p, jobs,
                                               plan.stratified ? std::span<const int>(tiers) : std::span<const int>{}));
  }
  return outcomes;
}

void print_outcomes(const std::vector<AggregateOutcome>& outcomes) {
  for (const auto& o : outcomes) {
    std::cout << o.task << " / " << o.probe << " over " << o.splits.size() << " splits:";
    for (const auto& m : o.summary) {
      std::cout << "  " << m.name << " " << format_fixed(m.mean, 3) << " (sd " << format_fixed(m.stddev, 3) << ")";
    }
    std::cout << '\n';
    for (const auto& w : o.warnings) std::cerr << "warning: " << w << '\n';
  }
}

void export_confusion(const AggregateOutcome& o, const std::string& path) {
  if (path.empty() || !o.representative_confusion) return;
  std::ofstream out(path);
  write_confusion_csv(*o.representative_confusion, out);
  if (!out) throw UsageError("cannot write " + path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probe fixed sentence embeddings for graded tier / energy structure"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolkitVersion));

  // validate
  auto* validate = app.add_subcommand("validate", "Validate a corpus and optional embedding alignment");
  std::string v_corpus, v_embeddings;
  validate->add_option("--corpus", v_corpus, "Corpus TSV")->required();
  validate->add_option("--embeddings", v_embeddings, "Embedding manifest");

  // probe
  auto* probe = app.add_subcommand("probe", "Run the repeated-split probing protocol");
  std::string p_corpus, p_embeddings, p_task, p_probe, p_out, p_confusion, p_model;
  ProtocolFlags p_flags;
  probe->add_option("--corpus", p_corpus)->required();
  probe->add_option("--embeddings", p_embeddings)->required();
  probe->add_option("--task", p_task, "energy or tier")->required();
  probe->add_option("--probe", p_probe, "ridge, mlp, both (energy) or logistic (tier)");
  probe->add_option("--out", p_out, "Result bundle path")->required();
  probe->add_option("--confusion-out", p_confusion, "CSV for the representative (seed 0) confusion matrix");
  probe->add_option("--model-name", p_model, "Override the model name recorded in the bundle");
  p_flags.attach(probe);

  // permtest
  auto* permtest = app.add_subcommand("permtest", "Label-permutation significance test");
  std::string t_corpus, t_embeddings, t_task, t_probe = "ridge", t_out, t_hist, t_model;
  std::optional<std::size_t> t_perms, t_bins;
  std::optional<std::uint64_t> t_rng;
  bool t_nonlinear = false;
  ProtocolFlags t_flags;
  permtest->add_option("--corpus", t_corpus)->required();
  permtest->add_option("--embeddings", t_embeddings)->required();
  permtest->add_option("--task", t_task, "energy or tier")->required();
  permtest->add_option("--probe", t_probe, "ridge (default) or mlp for the energy task");
  permtest->add_option("--permutations,-N", t_perms, "Number of label permutations");
  permtest->add_option("--rng-seed", t_rng, "Seed of the permutation stream");
  permtest->add_option("--bins", t_bins, "Histogram bins");
  permtest->add_flag("--allow-nonlinear", t_nonlinear, "Permit the MLP probe in permutation tests");
  permtest->add_option("--out", t_out, "Result bundle path")->required();
  permtest->add_option("--histogram-out", t_hist, "Null histogram CSV");
  permtest->add_option("--model-name", t_model);
  t_flags.attach(permtest);

  // baseline
  auto* baseline = app.add_subcommand("baseline", "TF-IDF lexical baseline through the same protocol");
  std::string b_corpus, b_task, b_probe, b_out, b_vocab;
  bool b_bigrams = false;
  ProtocolFlags b_flags;
  baseline->add_option("--corpus", b_corpus)->required();
  baseline->add_option("--task", b_task, "energy or tier")->required();
  baseline->add_option("--probe", b_probe, "ridge, mlp, both (energy) or logistic (tier)");
  baseline->add_flag("--bigrams", b_bigrams, "Add adjacent-token bigrams to the vocabulary");
  baseline->add_option("--out", b_out, "Result bundle path")->required();
  baseline->add_option("--vocab-out", b_vocab, "Vocabulary TSV fitted on the full corpus (audit only)");
  b_flags.attach(baseline);

  // project
  auto* project = app.add_subcommand("project", "PCA projection table colored by energy");
  std::string j_corpus, j_embeddings, j_out;
  int j_k = 2;
  bool j_no_normalize = false;
  project->add_option("--corpus", j_corpus)->required();
  project->add_option("--embeddings", j_embeddings)->required();
  project->add_option("--k", j_k, "Number of components (2 or 3)");
  project->add_option("--out", j_out, "Projection CSV")->required();
  project->add_flag("--no-normalize", j_no_normalize);

  // report
  auto* report = app.add_subcommand("report", "Consolidate bundles into summary tables");
  std::vector<std::string> r_bundles;
  std::string r_json, r_text;
  report->add_option("bundles", r_bundles, "Result bundle files");
  report->add_option("--json-out", r_json, "Structured tables (JSON)");
  report->add_option("--out", r_text, "Write the text tables to a file instead of stdout");

  // synth
  auto* synth = app.add_subcommand("synth", "Write a synthetic planted-gradient corpus and embeddings");
  std::string s_dir, s_prefix = "synth", s_mode = "linear";
  SynthConfig s_cfg;
  synth->add_option("--out-dir", s_dir)->required();
  synth->add_option("--prefix", s_prefix, "File name prefix");
  synth->add_option("--per-tier", s_cfg.per_tier);
  synth->add_option("--dim", s_cfg.dim);
  synth->add_option("--signal", s_cfg.signal);
  synth->add_option("--noise", s_cfg.noise);
  synth->add_option("--jitter", s_cfg.jitter);
  synth->add_option("--offset", s_cfg.offset);
  synth->add_option("--seed", s_cfg.seed);
  synth->add_option("--mode", s_mode, "linear or curved");
  std::string s_model;
  synth->add_option("--model-name", s_model, "Model name stored in the manifest");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*validate) {
      std::ifstream in(v_corpus, std::ios::binary);
      if (!in) throw ValidationError("cannot open corpus file: " + v_corpus);
      const CorpusParse parsed = parse_corpus(in, v_corpus);
      for (const auto& w : parsed.warnings) std::cout << "warning: " << w.to_string() << '\n';
      bool clean = parsed.ok();
      for (const auto& e : parsed.errors) std::cout << "error: " << e.to_string() << '\n';
      if (clean && !v_embeddings.empty()) {
        try {
          const EmbeddingMatrix x = read_embeddings(v_embeddings);
          const AlignmentReport rep = align(x, parsed.corpus);
          if (!rep.ok) {
            clean = false;
            std::istringstream lines(rep.describe());
            for (std::string line; std::getline(lines, line);) std::cout << "error: " << line << '\n';
          }
        } catch (const ValidationError& e) {
          clean = false;
          std::cout << "error: " << e.what() << '\n';
        }
      }
      if (clean) {
        std::cout << "OK: " << parsed.corpus.size() << " records";
        if (!v_embeddings.empty()) std::cout << ", embeddings aligned";
        std::cout << '\n';
        return 0;
      }
      return 1;
    }

    if (*probe) {
      const ToolkitConfig cfg = p_flags.resolve();
      const LabelKind task = parse_task(p_task);
      if (p_probe.empty()) p_probe = task == LabelKind::Tier ? "logistic" : "ridge";
      RunManifest manifest = start_manifest("probe", argc, argv, p_flags.jobs);
      const Corpus corpus = load_corpus_reporting(p_corpus);
      const EmbeddingMatrix x = load_aligned(p_embeddings, corpus, cfg);
      add_input(manifest, p_corpus);
      add_embedding_inputs(manifest, p_embeddings);
      const FixedFeatures source(x.data);
      const auto outcomes = run_probe(source, corpus, task, p_probe, cfg, p_flags.jobs);
      print_outcomes(outcomes);
      const BundleHeader header{"probe", task_tag(task), "embeddings", p_model.empty() ? x.model_name : p_model};
      write_text(p_out, dump_bundle(make_bundle(header, cfg, outcomes, nullptr, decision_notes("embeddings"))));
      manifest.outputs.push_back(p_out);
      if (task == LabelKind::Tier) {
        export_confusion(outcomes.front(), p_confusion);
        if (!p_confusion.empty()) manifest.outputs.push_back(p_confusion);
      }
      manifest.config = to_json(cfg);
      finish(manifest, p_out);
      return 0;
    }

    if (*permtest) {
      ToolkitConfig cfg = t_flags.resolve();
      if (t_perms) cfg.permutations = *t_perms;
      if (t_rng) cfg.permutation_seed = *t_rng;
      if (t_bins) cfg.histogram_bins = *t_bins;
      if (cfg.permutations < 1) throw UsageError("--permutations must be >= 1");
      const LabelKind task = parse_task(t_task);
      RunManifest manifest = start_manifest("permtest", argc, argv, t_flags.jobs);
      const Corpus corpus = load_corpus_reporting(t_corpus);
      const EmbeddingMatrix x = load_aligned(t_embeddings, corpus, cfg);
      add_input(manifest, t_corpus);
      add_embedding_inputs(manifest, t_embeddings);

      PermutationConfig pc;
      pc.task = task == LabelKind::Energy ? PermutationTask::EnergyRegression : PermutationTask::TierClassification;
      pc.permutations = cfg.permutations;
      pc.rng_seed = cfg.permutation_seed;
      pc.plan = cfg.plan(corpus.size());
      pc.classification = {cfg.logistic};
      pc.allow_nonlinear = t_nonlinear;
      if (t_probe == "ridge") {
        pc.regression = {RegressionProbeKind::Ridge, cfg.ridge_alpha, cfg.mlp};
      } else if (t_probe == "mlp" && task == LabelKind::Energy) {
        pc.regression = {RegressionProbeKind::Mlp, cfg.ridge_alpha, cfg.mlp};
      } else if (!(t_probe == "logistic" && task == LabelKind::Tier)) {
        throw UsageError("unknown probe '" + t_probe + "' for this task");
      }
      const std::vector<int> tiers = labels(corpus, LabelKind::Tier).ordinals();
      const PermutationReport rep = run_permutation_test(
          FixedFeatures(x.data), labels(corpus, task), pc, t_flags.jobs,
          pc.plan.stratified ? std::span<const int>(tiers) : std::span<const int>{});
      std::cout << rep.statistic << ": observed " << format_fixed(rep.t_obs, 3) << ", " << rep.exceed_count
                << " of " << rep.permutations() << " null draws >= observed, p = " << format_shortest(rep.p_value)
                << '\n';
      const BundleHeader header{"permtest", task_tag(task), "embeddings", t_model.empty() ? x.model_name : t_model};
      write_text(t_out, dump_bundle(make_bundle(header, cfg, {rep.observed}, &rep, decision_notes("embeddings"))));
      manifest.outputs.push_back(t_out);
      if (!t_hist.empty()) {
        std::ostringstream os;
        write_histogram(export_null(rep, cfg.histogram_bins), os);
        write_text(t_hist, os.str());
        manifest.outputs.push_back(t_hist);
      }
      manifest.config = to_json(cfg);
      finish(manifest, t_out);
      return 0;
    }

    if (*baseline) {
      ToolkitConfig cfg = b_flags.resolve();
      if (b_bigrams) cfg.tfidf.bigrams = true;
      const LabelKind task = parse_task(b_task);
      if (b_probe.empty()) b_probe = task == LabelKind::Tier ? "logistic" : "ridge";
      RunManifest manifest = start_manifest("baseline", argc, argv, b_flags.jobs);
      const Corpus corpus = load_corpus_reporting(b_corpus);
      add_input(manifest, b_corpus);
      const TfidfFeatures source(corpus.texts(), cfg.tfidf);
      const auto outcomes = run_probe(source, corpus, task, b_probe, cfg, b_flags.jobs);
      print_outcomes(outcomes);
      const std::string model = cfg.tfidf.bigrams ? "tfidf-unigram+bigram" : "tfidf-unigram";
      const BundleHeader header{"baseline", task_tag(task), "lexical-baseline", model};
      write_text(b_out, dump_bundle(make_bundle(header, cfg, outcomes, nullptr, decision_notes("lexical-baseline"))));
      manifest.outputs.push_back(b_out);
      if (!b_vocab.empty()) {
        std::ostringstream os;
        write_vocabulary(tfidf_fit(corpus, cfg.tfidf), os);
        write_text(b_vocab, os.str());
        manifest.outputs.push_back(b_vocab);
      }
      manifest.config = to_json(cfg);
      finish(manifest, b_out);
      return 0;
    }

    if (*project) {
      if (j_k != 2 && j_k != 3) throw UsageError("--k must be 2 or 3");
      ToolkitConfig cfg;
      cfg.normalize_embeddings = !j_no_normalize;
      const Corpus corpus = load_corpus_reporting(j_corpus);
      const EmbeddingMatrix x = load_aligned(j_embeddings, corpus, cfg);
      const PcaModel model = pca_fit(x.data, static_cast<std::size_t>(j_k));
      const auto ids = corpus.ids();
      const Vector energy = labels(corpus, LabelKind::Energy).values;
      const ProjectionTable table = pca_project(model, x.data, ids, energy);
      std::ostringstream os;
      write_projection_table(table, os);
      write_text(j_out, os.str());
      Vector first(table.coords.rows());
      for (std::size_t r = 0; r < first.size(); ++r) first[r] = table.coords(r, 0);
      std::cout << "explained variance:";
      for (double v : model.explained_variance_ratio) std::cout << ' ' << format_fixed(v, 3);
      std::cout << "\ncorr(coord_1, energy) = " << format_fixed(pearson(first, energy), 3) << '\n';
      return 0;
    }

    if (*report) {
      if (r_bundles.empty()) throw UsageError("report needs at least one bundle file");
      std::vector<json> bundles;
      for (const auto& path : r_bundles) bundles.push_back(load_bundle(path));
      const ReportTables tables = build_report(bundles);
      const std::string text = render_report(tables);
      if (r_text.empty()) {
        std::cout << text;
      } else {
        write_text(r_text, text);
      }
      if (!r_json.empty()) write_text(r_json, to_json(tables).dump(2) + "\n");
      return 0;
    }

    if (*synth) {
      s_cfg.mode = parse_synth_mode(s_mode);
      SynthData data = generate(s_cfg);
      if (!s_model.empty()) data.embeddings.model_name = s_model;
      fs::create_directories(s_dir);
      const fs::path dir(s_dir);
      write_corpus(data.corpus, dir / (s_prefix + ".tsv"));
      write_embeddings(data.embeddings, dir / (s_prefix + ".emb.json"));
      std::cout << "wrote " << (dir / (s_prefix + ".tsv")).string() << " and "
                << (dir / (s_prefix + ".emb.json")).string() << " (" << data.corpus.size() << " records)\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::Computation ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
