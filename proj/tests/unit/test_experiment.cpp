#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "dmtl/experiment.hpp"

using namespace dmtl;
using namespace dmtl::experiment;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dmtl_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 60 users in four taste clusters over 40 items, about half the cells rated.
std::string synthetic_movielens(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.5);
  std::string out;
  for (int u = 0; u < 60; ++u) {
    const int taste = u % 4;
    for (int i = 0; i < 40; ++i) {
      if (rng() % 2) continue;
      const double base = (i % 4 == taste) ? 4.5 : 2.5;
      const double r = std::clamp(std::round(base + noise(rng)), 1.0, 5.0);
      out += std::to_string(u + 1) + "\t" + std::to_string(i + 1) + "\t" + std::to_string(static_cast<int>(r)) +
             "\t" + std::to_string(880000000 + u * 40 + i) + "\n";
    }
  }
  return out;
}

ExperimentConfig small_config(const fs::path& data, const fs::path& out) {
  ExperimentConfig c;
  c.data = data;
  c.out = out;
  c.k = 4;
  c.dmtl.epochs = 3;
  c.dmtl.h1 = 8;
  c.dmtl.h_attn = 4;
  c.dmtl.h2 = 8;
  c.dmtl.batch_size = 32;
  c.baselines.svd.factors = 10;
  c.apply_seed();
  return c;
}

int run_cli(const std::string& args, const fs::path& stdout_file) {
  const std::string cmd = std::string(DMTL_CLI_PATH) + " " + args + " > " + stdout_file.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("git blob hashes") {
  CHECK(git_blob_sha1("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  CHECK(git_blob_sha1("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
  const fs::path dir = scratch("hash");
  std::ofstream(dir / "h.txt") << "hello\n";
  CHECK(git_blob_sha1_file(dir / "h.txt") == "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST_CASE("dataset validation profiles") {
  // ITM-shaped CSV: 454 users x 70 items, 5230 ratings.
  std::string csv = "user_id,item_id,rating\n";
  for (int k = 0; k < 5230; ++k) {
    const int u = k % 454;
    const int item = (3 * u + k / 454) % 70;
    csv += "u" + std::to_string(u) + ",i" + std::to_string(item) + "," + std::to_string(1 + k % 5) + "\n";
  }
  const auto table = data::parse_generic_csv_text(csv, {});
  const auto ok = validate_dataset(table, "itmrec");
  CHECK(ok.mismatches.empty());
  CHECK(ok.stats.users == 454);
  CHECK(ok.stats.sparsity * 100.0 == doctest::Approx(83.54).epsilon(1e-3));
  const auto wrong = validate_dataset(table, "movielens100k");
  CHECK(wrong.mismatches.size() == 4);
  CHECK(validate_dataset(table, std::nullopt).mismatches.empty());
  CHECK_THROWS_AS(expected_stats("netflix"), ConfigError);
}

TEST_CASE("run_experiment end to end") {
  const fs::path dir = scratch("run");
  std::ofstream(dir / "u.data") << synthetic_movielens(1);
  auto config = small_config(dir / "u.data", dir / "out_a");
  std::vector<std::string> log;
  config.log = [&](const std::string& line) { log.push_back(line); };
  const auto a = run_experiment(config);

  CHECK(a.report.methods.size() == 10);
  CHECK(a.report.find("dmtl") != nullptr);
  CHECK(a.report.find("svdpp") != nullptr);
  for (const auto& m : a.report.methods) {
    CHECK(m.metrics.precision >= 0.0);
    CHECK(m.metrics.precision <= 1.0);
    CHECK(m.metrics.recall >= 0.0);
    CHECK(m.metrics.recall <= 1.0);
  }
  REQUIRE(a.report.profiling.has_value());
  CHECK(a.report.profiling->samples > 0);
  CHECK_FALSE(log.empty());

  for (const char* name : {"report.json", "report.md", "projections.csv", "dmtl_checkpoint.json"}) {
    CHECK(fs::exists(dir / "out_a" / name));
  }
  CHECK(slurp(dir / "out_a" / "report.json") == a.report_json);
  const auto j = nlohmann::ordered_json::parse(a.report_json);
  CHECK(j["metadata"]["data"]["sha1"] == git_blob_sha1(slurp(dir / "u.data")));
  CHECK(j["metadata"]["grouping"]["k"] == 4);
  CHECK(j["methods"].size() == 10);
  const auto ck = model::load_checkpoint(dir / "out_a" / "dmtl_checkpoint.json");
  CHECK(ck.config.classes == 4);
  CHECK(slurp(dir / "out_a" / "projections.csv").rfind("user_id,group,x,y\n", 0) == 0);

  config.out = dir / "out_b";
  config.log = nullptr;
  const auto b = run_experiment(config);
  CHECK(b.report_json == a.report_json);
  CHECK(slurp(dir / "out_b" / "report.json") == slurp(dir / "out_a" / "report.json"));

  auto user_mode = config;
  user_mode.scoring = Scoring::user;
  user_mode.write_artifacts = false;
  const auto u = run_experiment(user_mode);
  CHECK(u.artifacts.empty());
  CHECK(nlohmann::ordered_json::parse(u.report_json)["metadata"]["scoring"] == "user");
}

TEST_CASE("run_experiment failures") {
  const fs::path dir = scratch("fail");
  auto missing = small_config(dir / "absent.data", dir / "out");
  try {
    run_experiment(missing);
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "ingest");
    CHECK(std::string(e.kind()) == "parse");
  }
  CHECK_FALSE(fs::exists(dir / "out"));

  // Writing the last artifact fails: earlier files are removed again, the
  // blocking directory is left alone.
  std::ofstream(dir / "u.data") << synthetic_movielens(2);
  fs::create_directories(dir / "out" / "dmtl_checkpoint.json");
  const auto blocked = small_config(dir / "u.data", dir / "out");
  try {
    run_experiment(blocked);
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "artifacts");
  }
  CHECK_FALSE(fs::exists(dir / "out" / "report.json"));
  CHECK_FALSE(fs::exists(dir / "out" / "report.md"));
  CHECK_FALSE(fs::exists(dir / "out" / "projections.csv"));
  CHECK(fs::is_directory(dir / "out" / "dmtl_checkpoint.json"));

  auto too_many = small_config(dir / "u.data", dir / "out2");
  too_many.k = 500;
  CHECK_THROWS_AS(run_experiment(too_many), StageError);
}

TEST_CASE("command line") {
  const fs::path dir = scratch("cli");
  std::ofstream(dir / "u.data") << synthetic_movielens(3);
  std::ofstream(dir / "empty.data") << "";

  CHECK(run_cli("validate --data " + (dir / "u.data").string(), dir / "v.txt") == 0);
  CHECK(slurp(dir / "v.txt").find("users:    60") != std::string::npos);
  CHECK(run_cli("validate --data " + (dir / "u.data").string() + " --expect movielens100k", dir / "m.txt") == 1);
  CHECK(slurp(dir / "m.txt").find("MISMATCH") != std::string::npos);
  CHECK(run_cli("validate --data " + (dir / "empty.data").string() + " --expect movielens100k", dir / "e.txt") != 0);
  CHECK(run_cli("validate --data " + (dir / "nope.data").string(), dir / "n.txt") == 2);
  CHECK(slurp(dir / "n.txt").find("error (parse)") != std::string::npos);

  const std::string run = "run --quiet --data " + (dir / "u.data").string() + " --out " + (dir / "out").string() +
                          " --k 4 --epochs 2 --h1 8 --h-attn 4 --h2 8";
  CHECK(run_cli(run, dir / "r.txt") == 0);
  CHECK(slurp(dir / "r.txt").find("# Recommendation results") != std::string::npos);
  CHECK(fs::exists(dir / "out" / "report.json"));
  CHECK(run_cli(run + " --scoring everyone", dir / "s.txt") == 2);
  CHECK(run_cli("frobnicate", dir / "f.txt") != 0);
}
