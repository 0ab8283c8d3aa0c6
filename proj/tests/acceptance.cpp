// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 only when
// every line passes. Usage: acceptance <path-to-tierprobe-cli> <scratch-dir>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>

#include "oracles.hpp"
#include "tierprobe/embedstore.hpp"
#include "tierprobe/format.hpp"
#include "tierprobe/lexical.hpp"
#include "tierprobe/metrics.hpp"
#include "tierprobe/permtest.hpp"
#include "tierprobe/probes.hpp"
#include "tierprobe/protocol.hpp"
#include "tierprobe/synth.hpp"

using namespace tierprobe;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(bool ok, const std::string& name, const std::string& detail, double seconds) {
  if (!ok) ++g_failures;
  std::printf("%s  %-34s %s  [%.1fs]\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str(), seconds);
  std::fflush(stdout);
}

template <class F>
void criterion(const std::string& name, F&& body) {
  const auto start = std::chrono::steady_clock::now();
  bool ok = false;
  std::string detail;
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
  report(ok, name, detail, dt.count());
}

std::size_t jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

// Synthetic data as the CLI would see it: rows L2-normalized.
SynthData synth(SynthConfig cfg) {
  SynthData d = generate(cfg);
  d.embeddings = l2_normalize(d.embeddings);
  return d;
}

SplitPlan default_plan(std::size_t n) { return {n, 0.2, default_seeds(30), false}; }

std::string f(double v, int digits = 4) { return format_fixed(v, digits); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int run(const std::string& cmd) { return std::system((cmd + " >/dev/null 2>&1").c_str()); }

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::fprintf(stderr, "usage: acceptance <tierprobe-cli> <scratch-dir>\n");
    return 2;
  }
  const std::string cli = argv[1];
  const fs::path scratch = argv[2];
  fs::remove_all(scratch);
  fs::create_directories(scratch);
  std::printf("acceptance suite (jobs=%zu)\n", jobs());

  criterion("smoothed p-value floor", [&](std::string& d) {
    SynthConfig cfg;
    const auto data = synth(cfg);
    PermutationConfig pc;
    pc.permutations = 200;
    pc.plan = default_plan(data.corpus.size());
    const auto rep = run_permutation_test(FixedFeatures(data.embeddings.data),
                                          labels(data.corpus, LabelKind::Energy), pc, jobs());
    d = "exceed=" + std::to_string(rep.exceed_count) + " p=" + format_fixed(rep.p_value, 5) +
        " (expect 1/201 = 0.00498)";
    return rep.exceed_count == 0 && rep.p_value == 1.0 / 201.0 && format_fixed(rep.p_value, 5) == "0.00498";
  });

  criterion("ridge oracle equivalence", [&](std::string& d) {
    Rng rng(20240501);
    const double alphas[] = {0.1, 1.0, 10.0};
    double worst = 0.0;
    for (int problem = 0; problem < 50; ++problem) {
      const std::size_t n = 10 + rng.uniform_below(41), dim = 2 + rng.uniform_below(19);
      const double alpha = alphas[rng.uniform_below(3)];
      const Matrix x = oracle::random_matrix(n, dim, rng);
      const Vector y = oracle::random_vector(n, rng);
      const RidgeModel m = fit_ridge(x, y, alpha);
      const auto gd = oracle::ridge_gradient_descent(x, y, alpha);
      for (std::size_t c = 0; c < dim; ++c) worst = std::max(worst, std::abs(m.weights[c] - gd.weights[c]));
      worst = std::max(worst, std::abs(m.intercept - gd.intercept));
    }
    d = "50 problems, max |w - w_gd| = " + format_shortest(worst) + " (tol 1e-6)";
    return worst <= 1e-6;
  });

  criterion("mlp gradient check", [&](std::string& d) {
    Rng rng(77);
    const Matrix x = oracle::random_matrix(3, 4, rng);
    const Vector y = oracle::random_vector(3, rng);
    const MlpConfig cfg;  // default architecture
    double worst = 0.0;
    for (std::uint64_t point = 0; point < 10; ++point) {
      MlpModel m = init_mlp(4, point, cfg);
      Vector p = mlp_parameters(m);
      for (double& v : p) v += 0.05 * rng.normal();  // move biases off zero too
      set_mlp_parameters(m, p);
      Vector grad;
      mlp_loss(m, x, y, &grad);
      auto loss = [&](const Vector& q) {
        MlpModel t = m;
        set_mlp_parameters(t, q);
        return mlp_loss(t, x, y, nullptr);
      };
      worst = std::max(worst, oracle::max_relative_error(grad, oracle::central_gradient(loss, p, 1e-6)));
    }
    d = "10 points x " + std::to_string(init_mlp(4, 0, cfg).parameter_count()) +
        " params, max rel err = " + format_shortest(worst) + " (tol 1e-4)";
    return worst < 1e-4;
  });

  criterion("planted-signal recovery", [&](std::string& d) {
    SynthConfig cfg;  // 7 x 40, d = 64, signal 1, noise 0.1
    const auto lin = synth(cfg);
    const auto plan = default_plan(lin.corpus.size());
    const FixedFeatures src(lin.embeddings.data);
    const double ridge = run_regression_protocol(src, labels(lin.corpus, LabelKind::Energy).values, plan, {},
                                                 jobs()).mean("r2");
    const double wf1 = run_classification_protocol(src, labels(lin.corpus, LabelKind::Tier).ordinals(), plan, {},
                                                   jobs()).mean("weighted_f1");
    cfg.mode = SynthMode::Curved;
    const auto cur = synth(cfg);
    const FixedFeatures csrc(cur.embeddings.data);
    const auto y = labels(cur.corpus, LabelKind::Energy).values;
    const double c_ridge = run_regression_protocol(csrc, y, plan, {}, jobs()).mean("r2");
    const double c_mlp =
        run_regression_protocol(csrc, y, plan, {RegressionProbeKind::Mlp, 1.0, {}}, jobs()).mean("r2");
    d = "ridge R2 " + f(ridge) + " (>=0.9), F1 " + f(wf1) + " (>=0.9), curved mlp-ridge " + f(c_mlp) + "-" +
        f(c_ridge) + " = " + f(c_mlp - c_ridge) + " (>=0.02)";
    return ridge >= 0.9 && wf1 >= 0.9 && c_mlp - c_ridge >= 0.02;
  });

  criterion("null-data sanity", [&](std::string& d) {
    SynthConfig cfg;
    cfg.signal = 0.0;
    const auto data = synth(cfg);
    const auto plan = default_plan(data.corpus.size());
    const FixedFeatures src(data.embeddings.data);
    const double r2 = run_regression_protocol(src, labels(data.corpus, LabelKind::Energy).values, plan, {},
                                              jobs()).mean("r2");
    const auto tiers = labels(data.corpus, LabelKind::Tier).ordinals();
    const double acc = run_classification_protocol(src, tiers, plan, {}, jobs()).mean("accuracy");
    // Chance agreement of a label-independent classifier: sum of squared class shares.
    std::array<double, kTierCount> share{};
    for (int t : tiers) share[t] += 1.0 / static_cast<double>(tiers.size());
    double prior = 0.0;
    for (double s : share) prior += s * s;

    std::size_t above = 0;
    for (std::uint64_t rep = 0; rep < 100; ++rep) {
      SynthConfig c = cfg;
      c.seed = 1000 + rep;
      const auto null = synth(c);
      PermutationConfig pc;
      pc.permutations = 99;
      pc.rng_seed = rep;
      pc.plan = default_plan(null.corpus.size());
      const auto r = run_permutation_test(FixedFeatures(null.embeddings.data), labels(null.corpus, LabelKind::Energy),
                                          pc, jobs());
      if (r.p_value > 0.05) ++above;
    }
    d = "R2 " + f(r2) + " (<=0.1), acc " + f(acc) + " vs prior " + f(prior) + " (+-0.1), p>0.05 in " +
        std::to_string(above) + "/100 (>=90)";
    return r2 <= 0.1 && std::abs(acc - prior) <= 0.1 && above >= 90;
  });

  criterion("permutation calibration", [&](std::string& d) {
    // Structured embeddings, but the "observed" energies are a random
    // reassignment, so the null hypothesis holds exactly.
    SynthConfig cfg;
    cfg.per_tier = 20;
    const auto data = synth(cfg);
    const auto plan = default_plan(data.corpus.size());
    const FixedFeatures src(data.embeddings.data);
    const auto y = labels(data.corpus, LabelKind::Energy);
    std::size_t rejections = 0;
    for (std::uint64_t rep = 0; rep < 100; ++rep) {
      Rng shuffle(derive_seed(0xCA11B, rep));
      LabelVector null{LabelKind::Energy, permute_labels<double>(y.values, shuffle)};
      PermutationConfig pc;
      pc.permutations = 99;
      pc.rng_seed = 5000 + rep;
      pc.plan = plan;
      if (run_permutation_test(src, null, pc, jobs()).p_value <= 0.05) ++rejections;
    }
    const double frac = static_cast<double>(rejections) / 100.0;
    d = "fraction p<=0.05 = " + f(frac, 2) + " over 100 replicates (in [0.01, 0.12])";
    return frac >= 0.01 && frac <= 0.12;
  });

  criterion("adjacency structure", [&](std::string& d) {
    SynthConfig cfg;
    cfg.noise = 0.5;  // moderate: signal-to-noise 2
    const auto data = synth(cfg);
    const auto out = run_classification_protocol(FixedFeatures(data.embeddings.data),
                                                 labels(data.corpus, LabelKind::Tier).ordinals(),
                                                 default_plan(data.corpus.size()), {}, jobs());
    const auto& cm = *out.representative_confusion;
    const auto rate = adjacency_error_rate(cm);
    d = "seed-0 errors " + std::to_string(cm.total() - cm.correct()) + ", adjacency " +
        (rate ? f(*rate) : std::string("no-errors")) + " (>=0.8), mean acc " + f(out.mean("accuracy"));
    return rate && *rate >= 0.8;
  });

  criterion("metric identities", [&](std::string& d) {
    double worst = 0.0;
    auto track = [&](double got, double want) { worst = std::max(worst, std::abs(got - want)); };
    const auto r = r2_mse(Vector{0, 1, 2}, Vector{0, 1, 1});
    track(r.r2, 0.5);
    track(r.mse, 1.0 / 3.0);
    const auto c = accuracy_weighted_f1(std::vector<int>{0, 0, 1}, std::vector<int>{0, 1, 1});
    track(c.accuracy, 2.0 / 3.0);
    track(c.weighted_f1, 2.0 / 3.0);
    const auto cm = confusion(std::vector<int>{0, 0, 1}, std::vector<int>{0, 1, 1});
    const bool counts = cm.counts[0][0] == 1 && cm.counts[0][1] == 1 && cm.counts[1][1] == 1 && cm.total() == 3;
    const auto gc = confusion(std::vector<int>{4}, std::vector<int>{5});
    const bool growth_clarity = gc.counts[4][5] == 1 && gc.total() == 1;
    ConfusionMatrix adj;
    adj.counts[1][2] = 2;
    adj.counts[5][4] = 1;
    adj.counts[0][3] = 1;
    track(*adjacency_error_rate(adj), 0.75);
    d = "max abs deviation " + format_shortest(worst) + " (tol 1e-12), confusion cells " +
        (counts && growth_clarity ? "exact" : "WRONG");
    return worst <= 1e-12 && counts && growth_clarity;
  });

  criterion("determinism across --jobs", [&](std::string& d) {
    const std::string data = (scratch / "data").string();
    if (run(cli + " synth --out-dir " + data + " --per-tier 20 --dim 16") != 0) {
      d = "synth command failed";
      return false;
    }
    const std::string in = " --corpus " + data + "/synth.tsv --embeddings " + data + "/synth.emb.json";
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"energy", "probe" + in + " --task energy --probe both --splits 8 --mlp-epochs 60"},
        {"tier", "probe" + in + " --task tier"},
        {"perm", "permtest" + in + " --task energy -N 30"},
        {"permtier", "permtest" + in + " --task tier -N 4 --splits 5"},
        {"lex", "baseline --corpus " + data + "/synth.tsv --task energy --bigrams"},
    };
    std::size_t identical = 0;
    std::vector<std::string> differing;
    for (const auto& [tag, args] : commands) {
      std::vector<std::string> outputs;
      for (int j : {1, 3, 8, 1}) {
        const fs::path out = scratch / (tag + "_j" + std::to_string(j) + "_" + std::to_string(outputs.size()) + ".json");
        if (run(cli + " " + args + " --jobs " + std::to_string(j) + " --out " + out.string()) != 0) {
          d = tag + " run failed";
          return false;
        }
        outputs.push_back(slurp(out));
      }
      bool same = !outputs[0].empty();
      for (const auto& o : outputs) same = same && o == outputs[0];
      if (same) ++identical;
      else differing.push_back(tag);
    }
    d = std::to_string(identical) + "/" + std::to_string(commands.size()) +
        " commands byte-identical over jobs {1,3,8,1}";
    for (const auto& t : differing) d += " differs:" + t;
    return identical == commands.size();
  });

  criterion("tf-idf micro-oracle and leakage", [&](std::string& d) {
    const std::vector<std::string> docs = {"a b a", "b c", "c c d"};
    const auto v = tfidf_fit(docs);
    const double i1 = std::log(2.0) + 1.0, i2 = std::log(4.0 / 3.0) + 1.0;
    const double raw[3][4] = {{2 * i1, i2, 0, 0}, {0, i2, i2, 0}, {0, 0, 2 * i2, i1}};
    const Matrix m = tfidf_transform(v, docs).to_dense();
    double worst = v.terms == std::vector<std::string>{"a", "b", "c", "d"} ? 0.0 : 1.0;
    for (int r = 0; r < 3; ++r) {
      double norm = 0.0;
      for (int c = 0; c < 4; ++c) norm += raw[r][c] * raw[r][c];
      for (int c = 0; c < 4; ++c) worst = std::max(worst, std::abs(m(r, c) - raw[r][c] / std::sqrt(norm)));
    }
    // Leakage guard: documents carry unique marker words; a split's vocabulary
    // must contain exactly its training markers, and differ between seeds.
    std::vector<std::string> texts;
    for (int i = 0; i < 40; ++i) texts.push_back("shared words marker" + std::to_string(i));
    const TfidfFeatures src(texts);
    std::set<std::vector<std::string>> vocabularies;
    bool clean = true;
    for (const auto& s : make_splits({40, 0.2, default_seeds(30), false})) {
      const auto sv = src.vocabulary_for(s);
      for (auto i : s.test) clean = clean && sv.index.count("marker" + std::to_string(i)) == 0;
      for (auto i : s.train) clean = clean && sv.index.count("marker" + std::to_string(i)) == 1;
      vocabularies.insert(sv.terms);
    }
    d = "max abs deviation " + format_shortest(worst) + " (tol 1e-12); test terms excluded: " +
        (clean ? "yes" : "NO") + "; distinct vocabularies " + std::to_string(vocabularies.size()) + "/30";
    return worst <= 1e-12 && clean && vocabularies.size() > 1;
  });

  std::printf("%s: %d criterion(s) failed\n", g_failures ? "FAILED" : "ALL PASSED", g_failures);
  return g_failures ? 1 : 0;
}
