#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "dmtl/experiment.hpp"
#include "dmtl/grouping.hpp"
#include "dmtl/kernels.hpp"

namespace dmtl::experiment {

using nlohmann::ordered_json;

std::string to_string(DataFormat f) { return f == DataFormat::movielens ? "movielens" : "csv"; }

DataFormat data_format_from_string(const std::string& s) {
  if (s == "movielens") return DataFormat::movielens;
  if (s == "csv") return DataFormat::csv;
  throw ConfigError("unknown data format '" + s + "' (expected movielens|csv)");
}

std::string to_string(Scoring s) { return s == Scoring::group ? "group" : "user"; }

Scoring scoring_from_string(const std::string& s) {
  if (s == "group") return Scoring::group;
  if (s == "user") return Scoring::user;
  throw ConfigError("unknown scoring mode '" + s + "' (expected group|user)");
}

std::filesystem::path default_data_path() {
  const char* dir = std::getenv("DMTL_DATA_DIR");
  const std::filesystem::path base = dir != nullptr && *dir != '\0' ? std::filesystem::path(dir) : "data";
  return base / "ml-100k" / "u.data";
}

void ExperimentConfig::apply_seed() {
  split.seed = seed;
  dmtl.seed = seed;
  baselines.svd.seed = seed;
  baselines.svdpp.seed = seed;
  baselines.nmf.seed = seed;
}

ordered_json ExperimentConfig::to_json() const {
  ordered_json j;
  j["data"] = data.generic_string();
  j["format"] = to_string(format);
  if (format == DataFormat::csv) {
    j["columns"] = {{"user", columns.user}, {"item", columns.item}, {"rating", columns.rating},
                    {"timestamp", columns.timestamp}};
  }
  j["scale"] = {scale.min, scale.max};
  j["dataset_label"] = dataset_label;
  j["seed"] = seed;
  j["split"] = {{"train_fraction", split.train_fraction}, {"seed", split.seed}, {"stratified", split.stratified}};
  j["k"] = k;
  j["kmeans_max_iter"] = kmeans_max_iter;
  j["dmtl"] = model::config_json(dmtl);
  const auto& b = baselines;
  j["baselines"] = {
      {"bias", {{"epochs", b.bias.epochs}, {"reg_user", b.bias.reg_user}, {"reg_item", b.bias.reg_item}}},
      {"knn", {{"k", b.knn_k}, {"min_k", b.knn_min_k}, {"similarity", "cosine"}}},
      {"svd",
       {{"factors", b.svd.factors}, {"epochs", b.svd.epochs}, {"learning_rate", b.svd.learning_rate},
        {"reg", b.svd.reg}, {"init_std", b.svd.init_std}, {"seed", b.svd.seed}}},
      {"svdpp",
       {{"factors", b.svdpp.factors}, {"epochs", b.svdpp.epochs}, {"learning_rate", b.svdpp.learning_rate},
        {"reg", b.svdpp.reg}, {"init_std", b.svdpp.init_std}, {"seed", b.svdpp.seed}}},
      {"nmf",
       {{"factors", b.nmf.factors}, {"epochs", b.nmf.epochs}, {"reg_user", b.nmf.reg_user},
        {"reg_item", b.nmf.reg_item}, {"init_low", b.nmf.init_low}, {"init_high", b.nmf.init_high},
        {"seed", b.nmf.seed}}},
  };
  j["relevance"] = {{"threshold", relevance.threshold},
                    {"k", relevance.k},
                    {"precision_denominator", eval::to_string(relevance.denominator)},
                    {"candidates", eval::to_string(relevance.candidates)}};
  j["scoring"] = to_string(scoring);
  return j;
}

StageError::StageError(std::string stage, const std::string& cause_kind, const std::string& what)
    : Error("stage '" + stage + "' failed: " + what), stage_(std::move(stage)), cause_kind_(cause_kind) {}

data::RatingsTable load_ratings(const std::filesystem::path& path, DataFormat format, const data::CsvColumns& columns,
                                const data::RatingScale& scale) {
  if (!std::filesystem::exists(path)) throw ParseError("data file not found: " + path.string());
  return format == DataFormat::movielens ? data::parse_movielens(path, scale)
                                         : data::parse_generic_csv(path, columns, scale);
}

DatasetStats dataset_stats(const data::RatingsTable& table) {
  return {table.user_count(), table.item_count(), table.size(), table.scale(), table.sparsity(),
          table.duplicates_dropped()};
}

ExpectedStats expected_stats(const std::string& name) {
  if (name == "movielens100k") return {name, 943, 1682, 100000, 93.70};
  if (name == "itmrec") return {name, 454, 70, 5230, 83.54};
  throw ConfigError("unknown dataset profile '" + name + "' (expected movielens100k|itmrec)");
}

ValidationResult validate_dataset(const data::RatingsTable& table, const std::optional<std::string>& expect) {
  ValidationResult out;
  out.stats = dataset_stats(table);
  if (!expect) return out;
  out.expected = expected_stats(*expect);
  const ExpectedStats& e = *out.expected;
  const auto count = [&](const char* what, std::size_t got, std::size_t want) {
    if (got != want) {
      out.mismatches.push_back(std::string(what) + ": got " + std::to_string(got) + ", expected " +
                               std::to_string(want));
    }
  };
  count("users", out.stats.users, e.users);
  count("items", out.stats.items, e.items);
  count("ratings", out.stats.ratings, e.ratings);
  const double pct = 100.0 * out.stats.sparsity;
  if (!(std::abs(pct - e.sparsity_percent) <= 0.01)) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "sparsity: got %.4f%%, expected %.2f%% +/- 0.01", pct, e.sparsity_percent);
    out.mismatches.emplace_back(buf);
  }
  return out;
}

namespace {

template <class F>
auto run_stage(const char* name, const ExperimentConfig& config, F&& body) {
  if (config.log) config.log("[" + std::string(name) + "] start");
  const auto t0 = std::chrono::steady_clock::now();
  try {
    auto result = body();
    if (config.log) {
      const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::ostringstream msg;
      msg << "[" << name << "] done in " << s << " s";
      config.log(msg.str());
    }
    return result;
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(name, e.kind(), e.what());
  } catch (const std::exception& e) {
    throw StageError(name, "error", e.what());
  }
}

// Items no member of a group rated in training, ascending.
std::vector<std::vector<data::ItemIndex>> catalog_candidates(const data::RatingsTable& train,
                                                             const std::vector<std::uint32_t>& group_of,
                                                             std::size_t groups) {
  std::vector<std::vector<bool>> seen(groups, std::vector<bool>(train.item_count(), false));
  for (const data::Rating& r : train.ratings()) seen[group_of[r.user]][r.item] = true;
  std::vector<std::vector<data::ItemIndex>> out(groups);
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t i = 0; i < train.item_count(); ++i) {
      if (!seen[g][i]) out[g].push_back(static_cast<data::ItemIndex>(i));
    }
  }
  return out;
}

class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::filesystem::path dir) : dir_(std::move(dir)) {}
  ArtifactWriter(const ArtifactWriter&) = delete;
  ArtifactWriter& operator=(const ArtifactWriter&) = delete;
  ~ArtifactWriter() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& p : written_) std::filesystem::remove(p, ec);
    if (created_dir_) std::filesystem::remove(dir_, ec);
  }

  void write(const std::string& name, const std::string& content) {
    if (!std::filesystem::exists(dir_)) {
      std::filesystem::create_directories(dir_);
      created_dir_ = true;
    }
    const std::filesystem::path path = dir_ / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + path.string());
    written_.push_back(path);
    out << content;
    if (!out) throw ValidationError("cannot write " + path.string());
  }
  void commit() { committed_ = true; }
  const std::vector<std::filesystem::path>& written() const noexcept { return written_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::filesystem::path> written_;
  bool created_dir_ = false;
  bool committed_ = false;
};

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  const auto log = [&](const std::string& line) {
    if (config.log) config.log(line);
  };

  struct Ingested {
    data::RatingsTable table;
    std::string hash;
  };
  Ingested ingested = run_stage("ingest", config, [&] {
    config.relevance.validate(config.scale);
    data::RatingsTable table = load_ratings(config.data, config.format, config.columns, config.scale);
    if (table.empty()) throw ValidationError("dataset " + config.data.string() + " has no ratings");
    return Ingested{std::move(table), git_blob_sha1_file(config.data)};
  });
  const DatasetStats stats = dataset_stats(ingested.table);
  log("users=" + std::to_string(stats.users) + " items=" + std::to_string(stats.items) +
      " ratings=" + std::to_string(stats.ratings));

  const data::Split split = run_stage("split", config, [&] { return data::split(ingested.table, config.split); });

  struct Feats {
    data::FeatureMatrix users, items;
  };
  const Feats feats = run_stage("features", config, [&] {
    return Feats{data::build_user_features(split.train), data::build_item_features(split.train)};
  });

  struct Groups {
    grouping::GroupAssignment assignment;
    grouping::GroupRatingsTable train, test;
    std::vector<std::vector<data::UserIndex>> members;
  };
  const Groups groups = run_stage("grouping", config, [&] {
    Groups g;
    g.assignment = grouping::kmeans(feats.users, {config.k, config.seed, config.kmeans_max_iter});
    g.train = grouping::aggregate_group_ratings(split.train, g.assignment);
    g.test = grouping::aggregate_group_ratings(split.test, g.assignment);
    g.members = g.assignment.members();
    return g;
  });

  model::DmtlConfig dmtl_config = config.dmtl;
  dmtl_config.user_dim = feats.users.dim();
  dmtl_config.item_dim = feats.items.dim();
  dmtl_config.classes = config.k;
  const model::Features features{feats.users, feats.items};
  const model::TrainResult trained = run_stage("dmtl-train", config, [&] {
    model::TrainResult r = model::train(dmtl_config, groups.train, groups.assignment, features);
    for (const model::EpochLog& e : r.log) {
      std::ostringstream msg;
      msg << "  epoch " << e.epoch << " loss=" << e.loss << " rec=" << e.rec << " profile=" << e.profile;
      log(msg.str());
    }
    return r;
  });

  // Evaluation population: group tuples, or each user as its own group.
  const bool per_user = config.scoring == Scoring::user;
  const grouping::GroupRatingsTable eval_table = per_user ? eval::individual_table(split.test) : groups.test;
  std::vector<std::vector<data::ItemIndex>> catalog;
  if (config.relevance.candidates == eval::CandidateSet::catalog) {
    std::vector<std::uint32_t> group_of(split.train.user_count());
    for (std::size_t u = 0; u < group_of.size(); ++u) {
      group_of[u] = per_user ? static_cast<std::uint32_t>(u) : groups.assignment.labels[u];
    }
    catalog = catalog_candidates(split.train, group_of, eval_table.group_count);
  }
  const auto* catalog_ptr = catalog.empty() ? nullptr : &catalog;

  eval::EvalReport report;
  report.dataset = config.dataset_label;
  report.protocol = config.relevance;

  run_stage("baselines", config, [&] {
    for (baselines::Variant v : baselines::kAllVariants) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto fitted = baselines::fit(v, split.train, config.baselines);
      const baselines::BaselineModel& m = *fitted;
      const eval::GroupScorer score = [&](grouping::GroupIndex g, data::ItemIndex i) {
        if (per_user) return m.predict(g, i);
        return baselines::predict_group(m, groups.members[g], i);
      };
      eval::RankingMetrics metrics = eval::evaluate_method(score, eval_table, config.relevance, catalog_ptr);
      report.methods.push_back({baselines::tag(v), baselines::display_name(v), metrics});
      std::ostringstream msg;
      msg << "  " << baselines::display_name(v) << ": P@" << config.relevance.k << "=" << metrics.precision << " R@"
          << config.relevance.k << "=" << metrics.recall << " ("
          << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s)";
      log(msg.str());
    }
    return 0;
  });

  run_stage("dmtl-eval", config, [&] {
    const model::Scorer scorer(trained.params, features);
    const eval::GroupScorer score = [&](grouping::GroupIndex g, data::ItemIndex i) {
      if (per_user) {
        const data::UserIndex u = g;
        return scorer.score_group(std::span<const data::UserIndex>(&u, 1), i).rating;
      }
      return scorer.score_group(groups.members[g], i).rating;
    };
    eval::RankingMetrics metrics = eval::evaluate_method(score, eval_table, config.relevance, catalog_ptr);
    report.methods.push_back({"dmtl", "DMTL", metrics});

    // Each test member is assigned the group whose logit, averaged over the
    // member's test items, is largest.
    const auto test_rows = split.test.by_user();
    std::vector<std::size_t> truth, predicted;
    std::vector<data::ItemIndex> items;
    for (std::size_t u = 0; u < test_rows.size(); ++u) {
      if (test_rows[u].empty()) continue;
      items.clear();
      for (std::size_t pos : test_rows[u]) items.push_back(split.test.ratings()[pos].item);
      const numerics::Vector logits = scorer.member_logits(static_cast<data::UserIndex>(u), items);
      const auto& values = logits.values();
      truth.push_back(groups.assignment.labels[u]);
      predicted.push_back(static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin()));
    }
    report.profiling = eval::profiling_metrics(truth, predicted, config.k);
    std::ostringstream msg;
    msg << "  DMTL: P@" << config.relevance.k << "=" << metrics.precision << " R@" << config.relevance.k << "="
        << metrics.recall << " profiling F1=" << report.profiling->f1;
    log(msg.str());
    return 0;
  });

  ordered_json& meta = report.metadata;
  meta["config"] = config.to_json();
  meta["data"] = {{"sha1", ingested.hash},
                  {"users", stats.users},
                  {"items", stats.items},
                  {"ratings", stats.ratings},
                  {"scale", {stats.scale.min, stats.scale.max}},
                  {"sparsity", stats.sparsity},
                  {"duplicates_dropped", stats.duplicates_dropped}};
  meta["split"] = {{"train_ratings", split.train.size()}, {"test_ratings", split.test.size()}};
  std::vector<std::size_t> sizes;
  for (const auto& m : groups.members) sizes.push_back(m.size());
  meta["grouping"] = {{"k", groups.assignment.k},
                      {"iterations", groups.assignment.iterations},
                      {"objective", groups.assignment.objective},
                      {"group_sizes", sizes},
                      {"train_tuples", groups.train.tuples.size()},
                      {"test_tuples", groups.test.tuples.size()}};
  auto epochs = ordered_json::array();
  for (const model::EpochLog& e : trained.log) {
    epochs.push_back({{"epoch", e.epoch}, {"loss", e.loss}, {"rec", e.rec}, {"profile", e.profile}});
  }
  meta["dmtl"] = {{"config", model::config_json(dmtl_config)}, {"training", epochs}};
  meta["scoring"] = to_string(config.scoring);
  meta["kernel_isa"] = std::string(kernels::isa_name(kernels::active().isa));

  ExperimentResult result;
  result.report_json = eval::report_json(report).dump(2) + "\n";
  result.report_markdown = eval::report_markdown(report);
  if (config.write_artifacts) {
    run_stage("artifacts", config, [&] {
      ArtifactWriter writer(config.out);
      writer.write("report.json", result.report_json);
      writer.write("report.md", result.report_markdown);
      const grouping::Projection projection = grouping::project_2d(feats.users);
      writer.write("projections.csv",
                   grouping::projection_csv(projection, groups.assignment, ingested.table.users()));
      writer.write("dmtl_checkpoint.json", model::checkpoint_json(dmtl_config, trained.params));
      writer.commit();
      result.artifacts = writer.written();
      return 0;
    });
  }
  result.report = std::move(report);
  return result;
}

}  // namespace dmtl::experiment
