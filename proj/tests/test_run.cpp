#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ddc/run.hpp"

using namespace ddc;
namespace fs = std::filesystem;

namespace {

RunConfig small_run() {
  RunConfig cfg;
  cfg.domain = "arith";
  cfg.cycles = 2;
  cfg.n_train = 8;
  cfg.n_test = 4;
  cfg.task_seed = 3;
  cfg.seeds = {1, 2};
  cfg.loop.batch_size = 5;
  cfg.loop.beam_cap = 4;
  cfg.loop.wake_budget = 2000;
  cfg.loop.test_budget = 2000;
  cfg.loop.n_fantasies = 10;
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("config validation rejects nonsense") {
  CHECK_NOTHROW(validate_config(small_run()));

  RunConfig c = small_run();
  c.domain = "regex";
  CHECK_THROWS_AS(validate_config(c), std::invalid_argument);
  c = small_run();
  c.cycles = 0;
  CHECK_THROWS_AS(validate_config(c), std::invalid_argument);
  c = small_run();
  c.seeds.clear();
  CHECK_THROWS_AS(validate_config(c), std::invalid_argument);
  c = small_run();
  c.n_test = 0;
  CHECK_THROWS_AS(validate_config(c), std::invalid_argument);
  c = small_run();
  c.loop.wake_budget = -5;
  CHECK_THROWS_AS(validate_config(c), std::invalid_argument);
  c = small_run();
  c.loop.caps.max_size = 1;
  CHECK_THROWS_AS(validate_config(c), std::invalid_argument);
}

TEST_CASE("run_experiment shape, ordering, and determinism") {
  RunConfig cfg = small_run();
  RunResult a = run_experiment(cfg);
  RunResult b = run_experiment(cfg);

  REQUIRE(a.seeds.size() == 2);
  for (const SeedResult& s : a.seeds) {
    REQUIRE(s.metrics.size() == 2);
    for (int c = 0; c < 2; ++c) CHECK(s.metrics[c].cycle == c);
    // Ranked rows: ranks ascend within a cycle, installed rows name a chunk.
    int prev_cycle = -1, prev_rank = 0;
    for (const ChunkRow& row : s.chunks) {
      if (row.cycle != prev_cycle) {
        prev_cycle = row.cycle;
        prev_rank = 0;
      }
      CHECK(row.rank > prev_rank);
      prev_rank = row.rank;
      CHECK(row.installed == !row.name.empty());
      CHECK(row.size >= 2);
    }
    CHECK(s.beam_digests.size() == 2);
    CHECK(!s.final_library_json.empty());
  }

  CHECK(metrics_csv(a) == metrics_csv(b));
  CHECK(summary_json(a) == summary_json(b));
  for (size_t i = 0; i < a.seeds.size(); ++i) {
    CHECK(a.seeds[i].beam_digests == b.seeds[i].beam_digests);
    CHECK(a.seeds[i].final_library_json == b.seeds[i].final_library_json);
  }
}

TEST_CASE("artifacts are written, parseable, and byte-stable") {
  fs::path dir1 = fs::path("test_run_out") / "a";
  fs::path dir2 = fs::path("test_run_out") / "b";
  fs::remove_all("test_run_out");

  RunConfig cfg = small_run();
  cfg.out_dir = dir1.string();
  RunResult r1 = run_experiment(cfg);
  cfg.out_dir = dir2.string();
  run_experiment(cfg);

  for (const char* f : {"metrics.csv", "summary.json", "tasks_train.jsonl", "tasks_test.jsonl"})
    CHECK(fs::exists(dir1 / f));
  CHECK(fs::exists(dir1 / "seed_1" / "cycle_0" / "library.json"));
  CHECK(fs::exists(dir1 / "seed_1" / "cycle_1" / "model.tsv"));
  CHECK(fs::exists(dir1 / "seed_2" / "cycle_1" / "beams.tsv"));
  CHECK(fs::exists(dir1 / "seed_1" / "chunks.csv"));

  // Identical configs produce byte-identical reports.
  CHECK(slurp(dir1 / "metrics.csv") == slurp(dir2 / "metrics.csv"));
  CHECK(slurp(dir1 / "summary.json") == slurp(dir2 / "summary.json"));
  CHECK(slurp(dir1 / "metrics.csv") == metrics_csv(r1));

  // Task files round-trip bit-exactly.
  std::string train_text = slurp(dir1 / "tasks_train.jsonl");
  std::vector<Task> train = parse_tasks(train_text);
  REQUIRE(train.size() == 8);
  CHECK(render_tasks(train) == train_text);

  // The summary parses and carries the per-seed sections.
  nlohmann::json j = nlohmann::json::parse(slurp(dir1 / "summary.json"));
  CHECK(j["criterion"] == "ddc-pc");
  CHECK(j["per_cycle"].size() == 2);
  REQUIRE(j["per_seed"].size() == 2);
  CHECK(j["per_seed"][0].contains("recovered_hidden"));
  CHECK(j["per_seed"][0].contains("chunk_usefulness"));

  // Library checkpoints reload against the domain's builtin semantics.
  DomainSpec spec = make_domain("arith", cfg.task_seed);
  Library lib = Library::from_json_text(slurp(dir1 / "seed_1" / "cycle_1" / "library.json"),
                                        spec.lib);
  CHECK(lib.prim_count() >= spec.lib.prim_count());

  fs::remove_all("test_run_out");
}

TEST_CASE("summary statistics recompute from the metrics rows") {
  RunConfig cfg = small_run();
  RunResult r = run_experiment(cfg);
  nlohmann::json j = nlohmann::json::parse(summary_json(r));

  for (int c = 0; c < cfg.cycles; ++c) {
    double sum = 0;
    for (const SeedResult& s : r.seeds) sum += s.metrics[c].test_pct;
    double mean = sum / static_cast<double>(r.seeds.size());
    CHECK(j["per_cycle"][c]["test_pct_mean"].get<double>() == doctest::Approx(mean).epsilon(1e-12));
    double var = 0;
    for (const SeedResult& s : r.seeds)
      var += (s.metrics[c].test_pct - mean) * (s.metrics[c].test_pct - mean);
    double stdev = std::sqrt(var / static_cast<double>(r.seeds.size()));
    CHECK(j["per_cycle"][c]["test_pct_std"].get<double>() ==
          doctest::Approx(stdev).epsilon(1e-12));
  }
}

TEST_CASE("compare enforces matched configs and reports divergence") {
  RunConfig base = small_run();
  RunConfig other = small_run();

  other.domain = "list";
  CHECK_THROWS_AS(compare_runs({base, other}), std::invalid_argument);
  other = small_run();
  other.seeds = {1};
  CHECK_THROWS_AS(compare_runs({base, other}), std::invalid_argument);
  other = small_run();
  other.loop.wake_budget = 999;
  CHECK_THROWS_AS(compare_runs({base, other}), std::invalid_argument);
  CHECK_THROWS_AS(compare_runs({base}), std::invalid_argument);

  // Identical criteria: a legal zero-difference comparison.
  RunConfig same = small_run();
  CompareReport zero = compare_runs({base, same});
  for (const auto& [seed, cycle] : zero.divergence_cycle) CHECK(cycle == -1);

  // Different criteria on these tasks split at the first abstraction sleep.
  RunConfig comp = small_run();
  comp.loop.criterion = Criterion::Compression;
  CompareReport rep = compare_runs({base, comp});
  REQUIRE(rep.runs.size() == 2);
  CHECK(rep.divergence_cycle.at(1) == 0);
  CHECK(rep.divergence_cycle.at(2) == 0);
  CHECK(rep.text.find("first divergence") != std::string::npos);
  CHECK(rep.text.find("compression") != std::string::npos);
}
