// Acceptance gate. Prints one PASS/FAIL line per criterion and exits non-zero
// if any fails.
//
//   acceptance [--out DIR] [--seed S] [criterion ...]
//
// Criteria are named 1..9; with none given all run. 7 and 8 reuse the model
// trained for 6 when it runs in the same invocation.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "../oracles.hpp"
#include "subband/baselines.hpp"
#include "subband/config.hpp"
#include "subband/eval.hpp"
#include "subband/ggnn.hpp"
#include "subband/graph.hpp"
#include "subband/pipeline.hpp"
#include "subband/rng.hpp"
#include "subband/scenario.hpp"

using namespace subband;
using ad::Tensor;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void report(const std::string& id, const Outcome& o, double seconds) {
  std::printf("%s criterion %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id.c_str(),
              o.detail.c_str(), seconds);
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

void log_line(const std::string& s) {
  std::fprintf(stderr, "  %s\n", s.c_str());
}

oracle::Edges complete_edges(int n) {
  oracle::Edges e;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) e.emplace_back(a, b);
  return e;
}

Tensor permute_rows(const Tensor& x, const std::vector<int>& perm) {
  Tensor y(x.rows(), x.cols());
  for (int i = 0; i < x.rows(); ++i)
    for (int c = 0; c < x.cols(); ++c) y(perm[i], c) = x(i, c);
  return y;
}

// --- 1: end-to-end gradient ---------------------------------------------------

// At the default initialization ten GRU steps leave the soft assignment
// uniform to about 1e-9, so most gradients sit below the difference quotient's
// rounding floor. The check uses a seeded point away from that plateau and
// measures each parameter tensor in the Euclidean norm.
Outcome gradient_check() {
  GgnnConfig cfg;
  cfg.n_layers = 10;
  cfg.embedding_dim = 64;
  cfg.n_subbands = 3;
  cfg.init_seed = 17;
  GgnnModel model = GgnnModel::initialize(cfg, 23);
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> weight(-0.3, 0.3);
  for (auto* p : model.parameters())
    for (double& v : p->value.values()) v = weight(rng);
  oracle::Edges edges;
  while (edges.empty()) edges = oracle::random_edges(6, 0.5, rng);
  const auto g = InterferenceGraph::from_edges(6, 3, edges);
  const auto nb = ad::Neighborhood::from_graph(g);
  const Tensor init = init_embeddings(g, model.config());
  for (auto* p : model.parameters()) p->zero_grad();
  {
    ad::Tape t;
    t.backward(potts_loss(t, nb, forward(t, model, nb, init)));
  }
  double worst = 0.0, worst_entry = 0.0;
  std::string worst_name;
  std::size_t checked = 0;
  for (auto* p : model.parameters()) {
    auto values = p->value.values();
    // about 100 evenly spaced entries per tensor
    const std::size_t stride = std::max<std::size_t>(1, values.size() / 100);
    double diff2 = 0.0, grad2 = 0.0, fd2 = 0.0;
    for (std::size_t i = 0; i < values.size(); i += stride) {
      auto f = [&](const std::vector<double>& x) {
        const double saved = values[i];
        values[i] = x[0];
        const double v = potts_loss(g, soft_assignment(g, model, init));
        values[i] = saved;
        return v;
      };
      const double fd = oracle::central_difference(f, {values[i]}, 0, 1e-5);
      const double an = p->grad.values()[i];
      diff2 += (an - fd) * (an - fd);
      grad2 += an * an;
      fd2 += fd * fd;
      worst_entry = std::max(worst_entry, oracle::relative_error(an, fd));
      ++checked;
    }
    const double rel = std::sqrt(diff2) / std::max(std::sqrt(std::max(grad2, fd2)), 1e-300);
    if (rel > worst) worst = rel, worst_name = p->name;
  }
  return {worst < 1e-4, std::to_string(checked) + " entries, max relative error per tensor " +
                            fmt("%.3g", worst) + " (" + worst_name +
                            ", limit 1e-4); worst single entry " + fmt("%.3g", worst_entry)};
}

// --- 2: loss on hard allocations ---------------------------------------------

Outcome loss_semantics() {
  std::mt19937_64 rng(77);
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 20);
    const int k = 1 + static_cast<int>(rng() % 6);
    const auto edges = oracle::random_edges(n, std::uniform_real_distribution<>(0.05, 0.6)(rng), rng);
    const auto g = InterferenceGraph::from_edges(n, k, edges);
    Allocation a{k, std::vector<int>(n)};
    for (int& s : a.subband) s = static_cast<int>(rng() % k);
    if (potts_loss(g, a.one_hot()) != static_cast<double>(oracle::conflicts(edges, a.subband)))
      ++mismatches;
  }
  return {mismatches == 0, std::to_string(mismatches) + "/1000 mismatches"};
}

// --- 3: permutation equivariance ----------------------------------------------

Outcome permutation() {
  GgnnConfig cfg;  // deployed architecture: 10 layers, dim 64, K = 5
  cfg.init_seed = 5;
  const GgnnModel model = GgnnModel::initialize(cfg, 41);
  std::mt19937_64 rng(303);
  int bad = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 79);
    const auto g = InterferenceGraph::from_edges(
        n, 5, oracle::random_edges(n, std::min(1.0, 6.0 / n), rng));
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const Tensor init = init_embeddings(g, model.config());
    const Tensor s = soft_assignment(g, model, init);
    const Tensor sp = soft_assignment(g.permuted(perm), model, permute_rows(init, perm));
    const Allocation a = argmax_rows(s);
    const Allocation ap = argmax_rows(sp);
    bool ok = sp == permute_rows(s, perm);
    for (int i = 0; i < n; ++i) ok = ok && ap.subband[perm[i]] == a.subband[i];
    if (!ok) ++bad;
  }
  return {bad == 0, std::to_string(bad) + "/100 graphs not permuted exactly"};
}

// --- 4: greedy colouring ------------------------------------------------------

Outcome coloring() {
  std::mt19937_64 rng(404);
  int bipartite_bad = 0;
  for (int t = 0; t < 500; ++t) {
    const int left = 1 + static_cast<int>(rng() % 15);
    const int right = 1 + static_cast<int>(rng() % 15);
    const double p = std::uniform_real_distribution<>(0.1, 1.0)(rng);
    std::bernoulli_distribution coin(p);
    oracle::Edges e;
    for (int a = 0; a < left; ++a)
      for (int b = 0; b < right; ++b)
        if (coin(rng)) e.emplace_back(a, left + b);
    // hide the bipartition from any index-based shortcut
    std::vector<int> perm(left + right);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (auto& [a, b] : e) a = perm[a], b = perm[b];
    const auto g = InterferenceGraph::from_edges(left + right, 2, e);
    if (oracle::conflicts(e, cgc_greedy(g).subband) != 0) ++bipartite_bad;
  }
  int clique_bad = 0, cliques = 0;
  for (int k = 1; k <= 10; ++k)
    for (int n = 1; n <= k; ++n, ++cliques) {
      const auto e = complete_edges(n);
      if (oracle::conflicts(e, cgc_greedy(InterferenceGraph::from_edges(n, k, e)).subband) != 0)
        ++clique_bad;
    }
  const auto k6 = complete_edges(6);
  const int k6_min = oracle::min_conflicts(6, 5, k6);
  const int k6_cgc = oracle::conflicts(k6, cgc_greedy(InterferenceGraph::from_edges(6, 5, k6)).subband);
  return {bipartite_bad == 0 && clique_bad == 0 && k6_cgc == 1 && k6_min == 1,
          "bipartite " + std::to_string(bipartite_bad) + "/500 with conflicts, cliques " +
              std::to_string(clique_bad) + "/" + std::to_string(cliques) + ", K6 with K=5: " +
              std::to_string(k6_cgc) + " (minimum " + std::to_string(k6_min) + ")"};
}

// --- 5: SISA ------------------------------------------------------------------

Outcome sisa_descent() {
  Scenario sc = Scenario::preset("default");
  std::mt19937_64 rng(505);
  int bad = 0;
  for (int t = 0; t < 100; ++t) {
    sc.deploy.n_subnetworks = 1 + static_cast<int>(rng() % 30);
    const int k = 1 + static_cast<int>(rng() % 5);
    const Eigen::MatrixXd g = make_instance(sc, derive_seed(505, "instance", t)).gains.power_gain;
    const int n = static_cast<int>(g.rows());
    const SisaResult r = sisa(g, k, t, kSisaDefaultMaxIters, true);
    const double tol = 1e-12 * std::max(1.0, r.objective_trace.front());
    bool ok = r.converged;
    for (std::size_t i = 1; i < r.objective_trace.size(); ++i)
      ok = ok && r.objective_trace[i] <= r.objective_trace[i - 1] + tol;
    std::vector<int> a = r.allocation.subband;
    const double j = oracle::isr(g, a);
    for (int v = 0; v < n && ok; ++v)
      for (int b = 0; b < k; ++b) {
        const int keep = a[v];
        a[v] = b;
        ok = ok && oracle::isr(g, a) >= j - tol;
        a[v] = keep;
      }
    if (!ok) ++bad;
  }
  return {bad == 0, std::to_string(bad) + "/100 instances with an increase or an improving move"};
}

Outcome sisa_quality() {
  // channel realizations of the default geometry with 2..10 subnetworks
  Scenario sc = Scenario::preset("default");
  int within = 0;
  for (int t = 0; t < 200; ++t) {
    sc.deploy.n_subnetworks = 2 + t % 9;
    const Eigen::MatrixXd g = make_instance(sc, derive_seed(506, "instance", t)).gains.power_gain;
    const double best = oracle::min_isr(g, 2);
    if (sisa(g, 2, t).objective <= 1.05 * best + 1e-15) ++within;
  }
  return {within >= 160, std::to_string(within) + "/200 within 1.05x of the exhaustive minimum "
                         "(need >= 160)"};
}

// --- 6-8: trained model ---------------------------------------------------------

struct Session {
  fs::path out;
  std::uint64_t seed;
  RunConfig cfg = RunConfig::desk();
  std::map<std::string, std::shared_ptr<const GgnnModel>> models;  // by training scenario

  std::shared_ptr<const GgnnModel> model_for(const std::string& scenario) {
    auto it = models.find(scenario);
    if (it != models.end()) return it->second;
    const Scenario& sc = cfg.scenario_named(scenario);
    log_line("generating " + std::to_string(cfg.trainer.dataset_size) + " " + scenario + " graphs");
    const auto data = generate_graphs(sc, cfg.trainer.dataset_size,
                                      derive_seed(seed, "data." + scenario), cfg.resolved_workers());
    log_line("training " + scenario + " model");
    RunConfig c = cfg;
    c.model = cfg.model_for(sc);
    const TrainResult r = train_model(c, data, derive_seed(seed, "train." + scenario), log_line);
    const fs::path dir = out / "models";
    fs::create_directories(dir);
    save_model(dir / (scenario + ".bin"), r.model);
    std::ofstream hist(dir / (scenario + "_loss_history.csv"));
    write_history_csv(hist, r.history);
    auto m = std::make_shared<const GgnnModel>(r.model);
    models[scenario] = m;
    return m;
  }
};

Outcome headline(Session& s) {
  const Scenario& sc = s.cfg.scenario_named("default");
  auto model = s.model_for("default");
  std::vector<Allocator> allocators;
  for (const char* name : {"ra", "cgc", "sisa", "ggnn"}) allocators.push_back(make_allocator(name, model));
  EvalConfig ec = s.cfg.eval;  // 1000 snapshots
  ec.workers = s.cfg.resolved_workers();
  log_line("evaluating " + std::to_string(ec.n_snapshots) + " snapshots");
  const EvalReport rep = evaluate(sc, allocators, ec, derive_seed(s.seed, "eval"));
  const fs::path dir = s.out / "headline";
  fs::create_directories(dir);
  write_eval_outputs(dir, rep, ec.cdf_grid);
  const double ra = median(rep.at("ra").sum_se);
  const double cgc = median(rep.at("cgc").sum_se);
  const double sisa_m = median(rep.at("sisa").sum_se);
  const double gg = median(rep.at("ggnn").sum_se);
  const bool pass = gg >= 1.10 * ra && gg >= 0.90 * cgc && sisa_m >= gg;
  return {pass, "median sum SE: GGNN " + fmt("%.2f", gg) + ", RA " + fmt("%.2f", ra) + " (GGNN/RA " +
                    fmt("%.3f", gg / ra) + ", need >= 1.10), CGC " + fmt("%.2f", cgc) +
                    " (GGNN/CGC " + fmt("%.3f", gg / cgc) + ", need >= 0.90), SISA " +
                    fmt("%.2f", sisa_m) + " (need >= GGNN)"};
}

Outcome generalization(Session& s) {
  const std::vector<std::string> names{"default", "scenario1", "scenario2"};
  std::vector<std::pair<std::string, std::shared_ptr<const GgnnModel>>> models;
  std::vector<Scenario> tests;
  for (const auto& n : names) {
    models.emplace_back(n, s.model_for(n));
    tests.push_back(s.cfg.scenario_named(n));
  }
  log_line("evaluating the 3x3 matrix");
  const auto cells = generalization_matrix(models, tests, s.cfg.eval.n_snapshots,
                                           derive_seed(s.seed, "generalize.eval"),
                                           s.cfg.resolved_workers());
  write_generalization_csv(s.out / "generalization.csv", cells);
  std::map<std::string, std::vector<double>> column;
  for (const auto& c : cells) column[c.test].push_back(c.mean_se);
  double worst_spread = 0.0;
  std::string detail;
  for (const auto& n : names) {
    const auto& v = column[n];
    const double spread = (*std::max_element(v.begin(), v.end()) - *std::min_element(v.begin(), v.end())) /
                          mean(v);
    worst_spread = std::max(worst_spread, spread);
    detail += n + " " + fmt("%.3f", mean(v)) + " (spread " + fmt("%.2f%%", 100 * spread) + "), ";
  }
  const double gap = mean(column["scenario2"]) / mean(column["default"]);
  return {worst_spread < 0.05 && gap >= 1.5,
          "column means " + detail + "scenario2/default " + fmt("%.2f", gap) +
              " (need spread < 5% and ratio >= 1.5)"};
}

Outcome runtime_scaling(Session& s) {
  const Scenario& sc = s.cfg.scenario_named("default");
  std::vector<Allocator> allocators;
  for (const char* name : {"cgc", "sisa", "ggnn"}) allocators.push_back(make_allocator(name, s.model_for("default")));
  RuntimeSweepConfig rc;
  rc.n_list = {50, 200};
  rc.reps = 30;
  rc.warmup = 3;
  const auto rows = runtime_sweep(sc, allocators, rc, derive_seed(s.seed, "bench"));
  write_runtime_csv(s.out / "runtime.csv", rows);
  const double gg = growth_ratio(rows, "ggnn");
  const double si = growth_ratio(rows, "sisa");
  const double cg = growth_ratio(rows, "cgc");
  return {gg < si && gg < cg, "runtime(200)/runtime(50): GGNN " + fmt("%.2f", gg) + ", SISA " +
                                  fmt("%.2f", si) + ", CGC " + fmt("%.2f", cg)};
}

Outcome signalling() {
  const auto g = signalling_count(50, 5, SignallingScheme::kGgnn);
  const auto s = signalling_count(50, 5, SignallingScheme::kSisa);
  return {g == 200 && s == 2500, "(" + std::to_string(g) + ", " + std::to_string(s) + ")"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance gate"};
  std::string out = "acceptance_out";
  std::uint64_t seed = 1;
  std::vector<std::string> only;
  app.add_option("--out", out, "Directory for models and result files");
  app.add_option("--seed", seed, "Master seed for criteria 6-8");
  app.add_option("criteria", only, "Criteria to run (default: all)");
  CLI11_PARSE(app, argc, argv);
  const std::set<std::string> chosen(only.begin(), only.end());
  // "5" selects both 5a and 5b
  auto wanted = [&](const std::string& id) {
    return chosen.empty() || chosen.count(id) > 0 || chosen.count(id.substr(0, 1)) > 0;
  };

  Session session{out, seed};
  fs::create_directories(session.out);

  auto run = [&](const std::string& id, const std::function<Outcome()>& f) {
    if (!wanted(id)) return;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
      report(id, o, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  };

  run("1", gradient_check);
  run("2", loss_semantics);
  run("3", permutation);
  run("4", coloring);
  run("5a", sisa_descent);
  run("5b", sisa_quality);
  run("6", [&] { return headline(session); });
  run("7", [&] { return generalization(session); });
  run("8", [&] { return runtime_scaling(session); });
  run("9", signalling);

  std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
