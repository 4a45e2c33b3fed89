// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fail.
// Criteria 3, 4 and 8 need the MovieLens 100K ratings file (DMTL_ACCEPTANCE_DATA
// at build time, or the DMTL_ACCEPTANCE_DATA environment variable).

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dmtl/baselines.hpp"
#include "dmtl/evalrank.hpp"
#include "dmtl/experiment.hpp"
#include "dmtl/grouping.hpp"
#include "dmtl/kernels.hpp"
#include "dmtl/model.hpp"
#include "dmtl_fixture.hpp"
#include "gradcheck.hpp"
#include "metric_oracles.hpp"

namespace fs = std::filesystem;
using namespace dmtl;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Harness {
 public:
  void check(int id, const std::string& title, double budget_seconds, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    char timing[64];
    std::snprintf(timing, sizeof timing, "%.2fs of %.0fs", secs, budget_seconds);
    if (secs > budget_seconds) {
      o.pass = false;
      o.detail += "; over time budget";
    }
    std::printf("%s criterion %d: %s [%s] %s\n", o.pass ? "PASS" : "FAIL", id, title.c_str(), timing, o.detail.c_str());
    std::fflush(stdout);
    failures_ += o.pass ? 0 : 1;
  }
  int failures() const { return failures_; }

 private:
  int failures_ = 0;
};

std::string fmt(const char* format, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c, d);
  return buf;
}

fs::path data_path() {
  if (const char* env = std::getenv("DMTL_ACCEPTANCE_DATA")) return env;
  return DMTL_ACCEPTANCE_DATA;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---- 1 ----------------------------------------------------------------------

Outcome dataset_statistics() {
  const auto table = data::parse_movielens(data_path());
  const auto v = experiment::validate_dataset(table, "movielens100k");
  const auto& s = v.stats;
  Outcome o;
  o.pass = v.mismatches.empty();
  o.detail = std::to_string(s.users) + " users, " + std::to_string(s.items) + " items, " + std::to_string(s.ratings) +
             " ratings, " + fmt("sparsity %.4f%%", 100.0 * s.sparsity);
  for (const auto& m : v.mismatches) o.detail += "; " + m;
  return o;
}

// ---- 2 ----------------------------------------------------------------------

Outcome gradient_integrity() {
  double worst = 0.0;
  std::string where;
  std::size_t entries = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto s = testing::make_small_dmtl(seed);
    const auto f = s.features();
    const auto params = s.params.all();
    const auto r = testing::check_gradients(params, [&](numerics::GradTape& tape) {
      return model::record_loss(tape, s.params, s.batch, f, s.config.lambda);
    });
    entries += r.entries;
    if (r.max_rel_error > worst) {
      worst = r.max_rel_error;
      where = "seed " + std::to_string(seed) + " " + r.worst;
    }
  }
  return {worst < 1e-4, fmt("10 seeds, %.0f entries, max relative error %.3g", static_cast<double>(entries), worst) +
                            (where.empty() ? "" : " at " + where)};
}

// ---- 3, 4, 8 ----------------------------------------------------------------

struct DefaultRuns {
  std::optional<experiment::ExperimentResult> first;
  fs::path out_a, out_b;
  double seconds = 0.0;
  std::string error;
};

experiment::ExperimentConfig default_config(const fs::path& out) {
  experiment::ExperimentConfig c;
  c.data = data_path();
  c.out = out;
  c.apply_seed();
  c.log = [](const std::string& line) { std::fprintf(stderr, "  %s\n", line.c_str()); };
  return c;
}

Outcome directional(const DefaultRuns& runs) {
  if (!runs.first) return {false, runs.error};
  const auto& report = runs.first->report;
  const auto* dmtl = report.find("dmtl");
  const eval::MethodResult* best_p = nullptr;
  const eval::MethodResult* best_r = nullptr;
  for (const auto& m : report.methods) {
    if (m.tag == "dmtl") continue;
    if (!best_p || m.metrics.precision > best_p->metrics.precision) best_p = &m;
    if (!best_r || m.metrics.recall > best_r->metrics.recall) best_r = &m;
  }
  const auto* svd = report.find("svd");
  const auto* svdpp = report.find("svdpp");
  if (!dmtl || !best_p || !svd || !svdpp) return {false, "report lacks method rows"};

  const bool a = dmtl->metrics.precision - best_p->metrics.precision >= 0.02;
  const bool b = dmtl->metrics.recall > best_r->metrics.recall;
  const bool c = svdpp->metrics.precision >= svd->metrics.precision;
  Outcome o;
  o.pass = a && b && c;
  o.detail = std::string("(a) ") + (a ? "ok" : "FAILED") +
             fmt(": DMTL P@10 %.4f vs best baseline %.4f", dmtl->metrics.precision, best_p->metrics.precision) + " (" +
             best_p->name + ")" + fmt(", margin %+.4f need >= +0.02", dmtl->metrics.precision - best_p->metrics.precision);
  o.detail += std::string("; (b) ") + (b ? "ok" : "FAILED") +
              fmt(": DMTL R@10 %.4f vs best baseline %.4f", dmtl->metrics.recall, best_r->metrics.recall) + " (" +
              best_r->name + ")";
  o.detail += std::string("; (c) ") + (c ? "ok" : "FAILED") +
              fmt(": SVD++ P@10 %.4f vs SVD %.4f", svdpp->metrics.precision, svd->metrics.precision);
  return o;
}

Outcome profiling_quality(const DefaultRuns& runs) {
  if (!runs.first) return {false, runs.error};
  const auto& p = runs.first->report.profiling;
  if (!p) return {false, "report has no profiling block"};
  return {p->f1 >= 0.80, fmt("weighted F1 %.4f (precision %.4f, recall %.4f) over %.0f test users, need >= 0.80", p->f1,
                             p->precision, p->recall, static_cast<double>(p->samples))};
}

Outcome determinism(const DefaultRuns& runs) {
  if (!runs.first) return {false, runs.error};
  const std::string a = slurp(runs.out_a / "report.json");
  const std::string b = slurp(runs.out_b / "report.json");
  const bool same = !a.empty() && a == b;
  return {same, std::to_string(a.size()) + " bytes, sha1 " + experiment::git_blob_sha1(a) +
                    (same ? " on both runs" : " vs " + experiment::git_blob_sha1(b))};
}

// ---- 5 ----------------------------------------------------------------------

Outcome metric_oracles() {
  std::mt19937_64 rng(5);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto s = testing::random_ranking(rng);
    for (auto d : {eval::PrecisionDenominator::k, eval::PrecisionDenominator::min_k_ranked}) {
      mismatches += eval::precision_at_k(s.ranked, s.relevant, s.k, d) != testing::brute_precision(s, d);
    }
    const auto r = eval::recall_at_k(s.ranked, s.relevant, s.k);
    if (s.relevant.empty()) {
      mismatches += r.has_value();
    } else {
      mismatches += !r || *r != static_cast<double>(testing::brute_hits(s)) / static_cast<double>(s.relevant.size());
    }
    const auto l = testing::random_labels(rng);
    const auto got = eval::profiling_metrics(l.truth, l.pred, l.classes);
    const auto want = testing::brute_profiling(l.truth, l.pred, l.classes);
    mismatches += got.precision != want.precision || got.recall != want.recall || got.f1 != want.f1;
  }
  return {mismatches == 0, std::to_string(mismatches) + " disagreements over 1000 ranking and 1000 labelling instances"};
}

// ---- 6 ----------------------------------------------------------------------

Outcome kmeans_properties() {
  std::size_t increases = 0, iterations = 0;
  bool deterministic = true;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    numerics::Matrix m(300, 10);
    for (double& v : m.flat()) v = g(rng);
    const data::FeatureMatrix x{m};
    const auto a = grouping::kmeans(x, {8, seed, 100});
    for (std::size_t s = 1; s < a.objective_history.size(); ++s) {
      increases += a.objective_history[s] > a.objective_history[s - 1];
      ++iterations;
    }
    const auto b = grouping::kmeans(x, {8, seed, 100});
    deterministic = deterministic && a.labels == b.labels && a.centroids == b.centroids;
  }

  const data::FeatureMatrix blobs{numerics::Matrix::from_rows(
      {{0.0, 0.0}, {0.2, 0.1}, {0.1, 0.3}, {5.0, 5.0}, {5.2, 4.9}, {4.8, 5.1}})};
  double best = std::numeric_limits<double>::infinity();
  unsigned best_mask = 0;
  for (unsigned mask = 1; mask < 63; ++mask) {
    double cost = 0.0;
    for (unsigned side = 0; side < 2; ++side) {
      double c[2] = {0, 0};
      int n = 0;
      for (int p = 0; p < 6; ++p) {
        if (((mask >> p) & 1u) != side) continue;
        c[0] += blobs.row(p)[0];
        c[1] += blobs.row(p)[1];
        ++n;
      }
      for (int p = 0; p < 6; ++p) {
        if (((mask >> p) & 1u) != side) continue;
        for (int d = 0; d < 2; ++d) cost += std::pow(blobs.row(p)[d] - c[d] / n, 2);
      }
    }
    if (cost < best) best = cost, best_mask = mask;
  }
  bool blob_match = true;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto a = grouping::kmeans(blobs, {2, seed, 100});
    for (int p = 0; p < 6; ++p) {
      blob_match = blob_match && ((a.labels[p] == a.labels[0]) == (((best_mask >> p) & 1u) == (best_mask & 1u)));
    }
  }
  Outcome o;
  o.pass = increases == 0 && blob_match && deterministic;
  o.detail = std::to_string(increases) + " objective increases over " + std::to_string(iterations) +
             " Lloyd iterations; two-blob labels " + (blob_match ? "match" : "differ from") +
             " the exhaustive optimum over 10 seeds; repeat runs " + (deterministic ? "identical" : "differ");
  return o;
}

// ---- 7 ----------------------------------------------------------------------

data::RatingsTable dense_table(const std::vector<std::vector<double>>& cells) {
  auto users = std::make_shared<data::IndexMap>();
  auto items = std::make_shared<data::IndexMap>();
  for (std::size_t u = 0; u < cells.size(); ++u) users->intern("u" + std::to_string(u));
  for (std::size_t i = 0; i < cells[0].size(); ++i) items->intern("i" + std::to_string(i));
  std::vector<data::Rating> ratings;
  for (std::size_t u = 0; u < cells.size(); ++u)
    for (std::size_t i = 0; i < cells[u].size(); ++i)
      if (cells[u][i] != 0.0)
        ratings.push_back({static_cast<data::UserIndex>(u), static_cast<data::ItemIndex>(i), cells[u][i], {}});
  return data::RatingsTable(users, items, {}).subset(std::move(ratings));
}

Outcome baseline_correctness() {
  // Slope One on the 3x3 toy against an exhaustive deviation table.
  const std::vector<std::vector<double>> toy = {{5, 3, 2}, {3, 4, 0}, {0, 2, 5}};
  const baselines::SlopeOneModel slope(dense_table(toy));
  std::size_t slope_bad = 0;
  for (int u = 0; u < 3; ++u) {
    for (int i = 0; i < 3; ++i) {
      double acc = 0;
      int used = 0;
      for (int j = 0; j < 3; ++j) {
        if (j == i || toy[u][j] == 0) continue;
        double s = 0;
        int n = 0;
        for (int v = 0; v < 3; ++v)
          if (toy[v][i] != 0 && toy[v][j] != 0) s += toy[v][i] - toy[v][j], ++n;
        if (n == 0) continue;
        acc += s / n + toy[u][j];
        ++used;
      }
      slope_bad += slope.estimate(u, i) != acc / used;
    }
  }

  // SVD on a noiseless fully observed rank-1 matrix.
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> d(0.3, 1.0);
  std::vector<double> a(20), b(15);
  for (double& v : a) v = d(rng);
  for (double& v : b) v = d(rng);
  std::vector<std::vector<double>> planted(20, std::vector<double>(15));
  for (int u = 0; u < 20; ++u)
    for (int i = 0; i < 15; ++i) planted[u][i] = 1.0 + 4.0 * a[u] * b[i];
  baselines::SvdOptions so;
  so.epochs = 100;
  const baselines::SvdModel svd(dense_table(planted), so);

  // Bias model on the 4-rating toy against the regularized normal equations.
  const auto four = dense_table({{5, 3}, {4, 1}});
  const baselines::BiasOptions bo{400, 1.5, 0.75};
  const baselines::BiasModel bias(four, bo);
  const double mu = 13.0 / 4.0;
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  Eigen::Vector4d rhs = Eigen::Vector4d::Zero();
  for (const auto& r : four.ratings()) {
    Eigen::Vector4d x = Eigen::Vector4d::Zero();
    x(r.user) = 1;
    x(2 + r.item) = 1;
    m += x * x.transpose();
    rhs += (r.rating - mu) * x;
  }
  m.diagonal() += Eigen::Vector4d(bo.reg_user, bo.reg_user, bo.reg_item, bo.reg_item);
  const Eigen::Vector4d sol = m.ldlt().solve(rhs);
  const double bias_err = std::max({std::abs(bias.user_bias()[0] - sol(0)), std::abs(bias.user_bias()[1] - sol(1)),
                                    std::abs(bias.item_bias()[0] - sol(2)), std::abs(bias.item_bias()[1] - sol(3))});

  Outcome o;
  o.pass = slope_bad == 0 && svd.train_rmse() < 0.05 && bias_err <= 1e-6;
  o.detail = std::to_string(slope_bad) + " Slope One cells differ from the deviation oracle; " +
             fmt("SVD planted rank-1 train RMSE %.4f (need < 0.05); bias max deviation %.2g (need <= 1e-6)",
                 svd.train_rmse(), bias_err);
  return o;
}

// ---- 9 ----------------------------------------------------------------------

Outcome linearity_bridge() {
  std::mt19937_64 rng(9);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    auto s = testing::make_small_dmtl(1000 + trial, 12, 6);
    const std::size_t n = 1 + rng() % 6;
    const auto x_i = s.items.row_vector(rng() % 6);
    std::vector<model::ForwardTrace> traces;
    double rating = 0.0;
    std::vector<double> logits(3, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      traces.push_back(model::forward(s.params, s.users.row_vector(rng() % 12), x_i));
      const auto head = model::apply_heads(s.params, traces.back().z, traces.back().h_i);
      rating += head.rating / static_cast<double>(n);
      for (std::size_t c = 0; c < 3; ++c) logits[c] += head.logits[c] / static_cast<double>(n);
    }
    const auto agg = model::aggregate_group(s.params, traces);
    worst = std::max(worst, std::abs(agg.rating - rating));
    for (std::size_t c = 0; c < 3; ++c) worst = std::max(worst, std::abs(agg.logits[c] - logits[c]));
  }
  return {worst <= 1e-9, fmt("max |pooled - averaged| over 100 random groups %.3g (need <= 1e-9)", worst)};
}

}  // namespace

int main() {
  std::printf("kernel ISA: %s\n", std::string(kernels::isa_name(kernels::active().isa)).c_str());
  Harness h;
  h.check(1, "MovieLens 100K statistics", 5, dataset_statistics);
  h.check(2, "full-model gradients vs central differences", 60, gradient_integrity);
  h.check(5, "metric oracles", 10, metric_oracles);
  h.check(6, "k-means properties", 5, kmeans_properties);
  h.check(7, "baseline correctness", 30, baseline_correctness);
  h.check(9, "group pooling equals averaged member heads", 5, linearity_bridge);

  DefaultRuns runs;
  const fs::path root = fs::temp_directory_path() / "dmtl_acceptance";
  runs.out_a = root / "run_a";
  runs.out_b = root / "run_b";
  const auto start = std::chrono::steady_clock::now();
  try {
    fs::remove_all(root);
    runs.first = experiment::run_experiment(default_config(runs.out_a));
  } catch (const std::exception& e) {
    runs.error = std::string("default run failed: ") + e.what();
  }
  runs.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const double first_seconds = runs.seconds;
  h.check(3, "directional comparison on ML-100K defaults", 1200, [&] {
    Outcome o = directional(runs);
    o.detail += fmt("; default run took %.1fs", first_seconds);
    if (first_seconds > 1200) o.pass = false;
    return o;
  });
  h.check(4, "profiling weighted F1 on ML-100K", 1200, [&] { return profiling_quality(runs); });
  h.check(8, "report.json byte-identical across runs", 1200, [&] {
    if (!runs.first) return Outcome{false, runs.error};
    experiment::run_experiment(default_config(runs.out_b));
    return determinism(runs);
  });

  std::printf("%d criteria failed\n", h.failures());
  return h.failures() == 0 ? 0 : 1;
}
