#include "ddc/run.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace ddc {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

std::string beam_digest(const LoopState& st) {
  std::ostringstream os;
  for (const auto& [id, beam] : st.beams) {
    int rank = 0;
    for (const BeamEntry& e : beam) {
      char lp[48];
      std::snprintf(lp, sizeof lp, "%.17g", e.logprob);
      os << id << "\t" << rank++ << "\t" << render_expr(e.program) << "\t" << lp << "\n";
    }
  }
  return os.str();
}

std::string model_dump(const RecognitionModel& model) {
  std::ostringstream os;
  for (const RecognitionModel::Row& r : model.rows()) {
    char sc[48];
    std::snprintf(sc, sizeof sc, "%.17g", r.score);
    os << r.bucket << "\t" << r.parent << "\t" << r.arg_index << "\t" << r.component << "\t"
       << sc << "\n";
  }
  return os.str();
}

double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double s = 0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double std_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  double m = mean_of(xs);
  double s = 0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size()));
}

// The hidden concept is recovered when some installed chunk inlines to the
// same de Bruijn normal form.
std::map<std::string, std::string> recovered_concepts(const DomainSpec& spec,
                                                      const Library& final_lib) {
  std::map<std::string, std::string> out;
  for (const std::string& h : spec.hidden_chunks) {
    std::string target = render_expr(spec.gt_lib.inline_expr(spec.gt_lib.at(h).definition));
    std::string who;
    for (const Primitive& p : final_lib.prims())
      if (p.origin == Primitive::Origin::Chunk &&
          render_expr(final_lib.inline_expr(p.definition)) == target) {
        who = p.name;
        break;
      }
    out.emplace(target, who);
  }
  return out;
}

}  // namespace

void validate_config(const RunConfig& cfg) {
  auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
  if (cfg.domain != "list" && cfg.domain != "arith") fail("unknown domain: " + cfg.domain);
  if (cfg.cycles <= 0) fail("cycles must be positive");
  if (cfg.n_train <= 0) fail("train task count must be positive");
  if (cfg.n_test <= 0) fail("test task count must be positive");
  if (cfg.seeds.empty()) fail("at least one seed is required");
  if (cfg.loop.batch_size <= 0) fail("batch size must be positive");
  if (cfg.loop.beam_cap <= 0) fail("beam cap must be positive");
  if (cfg.loop.top_k < 0) fail("top-k must be non-negative");
  if (cfg.loop.wake_budget <= 0) fail("wake budget must be positive");
  if (cfg.loop.test_budget <= 0) fail("test budget must be positive");
  if (cfg.loop.n_fantasies < 0) fail("fantasy count must be non-negative");
  if (cfg.loop.caps.min_size < 2) fail("fragment floor must be at least 2");
  if (cfg.loop.caps.max_size < cfg.loop.caps.min_size) fail("fragment cap below floor");
}

std::string metrics_csv(const RunResult& r) {
  std::ostringstream os;
  os << "seed,cycle,train_solved,test_pct,mean_expansions_all,mean_expansions_solved,"
        "chunks_installed,mean_chunk_size\n";
  for (const SeedResult& s : r.seeds)
    for (const CycleMetrics& m : s.metrics)
      os << s.seed << "," << m.cycle << "," << m.train_solved << "," << fmt(m.test_pct) << ","
         << fmt(m.mean_expansions_all) << "," << fmt(m.mean_expansions_solved) << ","
         << m.chunks_installed << "," << fmt(m.mean_chunk_size) << "\n";
  return os.str();
}

std::string chunks_csv(const SeedResult& s) {
  std::ostringstream os;
  os << "cycle,rank,name,rendering,size,score,uses,installed\n";
  for (const ChunkRow& c : s.chunks)
    os << c.cycle << "," << c.rank << "," << c.name << ",\"" << c.rendering << "\"," << c.size
       << "," << fmt(c.score) << "," << c.uses << "," << (c.installed ? 1 : 0) << "\n";
  return os.str();
}

std::string summary_json(const RunResult& r) {
  json j;
  j["domain"] = r.config.domain;
  j["criterion"] = render_criterion(r.config.loop.criterion);
  j["cycles"] = r.config.cycles;
  j["seeds"] = r.config.seeds;
  j["train_tasks"] = r.config.n_train;
  j["test_tasks"] = r.config.n_test;
  j["examples_per_task"] = 10;

  json per_cycle = json::array();
  for (int c = 0; c < r.config.cycles; ++c) {
    std::vector<double> pct, train, exp_all, solsz, chunksz;
    for (const SeedResult& s : r.seeds) {
      const CycleMetrics& m = s.metrics.at(c);
      pct.push_back(m.test_pct);
      train.push_back(m.train_solved);
      exp_all.push_back(m.mean_expansions_all);
      solsz.push_back(m.mean_solution_size);
      chunksz.push_back(m.mean_chunk_size);
    }
    per_cycle.push_back({{"cycle", c},
                         {"test_pct_mean", mean_of(pct)},
                         {"test_pct_std", std_of(pct)},
                         {"train_solved_mean", mean_of(train)},
                         {"mean_expansions_all_mean", mean_of(exp_all)},
                         {"mean_solution_size_mean", mean_of(solsz)},
                         {"mean_chunk_size_mean", mean_of(chunksz)}});
  }
  j["per_cycle"] = per_cycle;
  j["final"] = per_cycle.back();

  json seeds = json::array();
  for (const SeedResult& s : r.seeds) {
    json js;
    js["seed"] = s.seed;
    js["final_test_pct"] = s.metrics.back().test_pct;
    js["final_mean_chunk_size"] = s.metrics.back().mean_chunk_size;
    int installed = 0;
    for (const CycleMetrics& m : s.metrics) installed += m.chunks_installed;
    js["chunks_installed"] = installed;
    json rec = json::array();
    for (const auto& [concept_text, name] : s.recovered)
      rec.push_back({{"concept", concept_text}, {"installed_as", name}});
    js["recovered_hidden"] = rec;
    json use = json::array();
    for (const auto& [name, pct] : s.usefulness)
      use.push_back({{"chunk", name}, {"pct_of_test_tasks", pct}});
    js["chunk_usefulness"] = use;
    seeds.push_back(js);
  }
  j["per_seed"] = seeds;
  return j.dump(2) + "\n";
}

RunResult run_experiment(const RunConfig& cfg, std::ostream* log) {
  validate_config(cfg);
  DomainSpec spec = make_domain(cfg.domain, cfg.task_seed);
  RunResult out;
  out.config = cfg;
  out.tasks = generate_tasks(spec, cfg.n_train, cfg.n_test, cfg.task_seed);

  const bool write = !cfg.out_dir.empty();
  fs::path root(cfg.out_dir);
  if (write) {
    fs::create_directories(root);
    write_file(root / "tasks_train.jsonl", render_tasks(out.tasks.train));
    write_file(root / "tasks_test.jsonl", render_tasks(out.tasks.test));
  }

  for (std::uint64_t seed : cfg.seeds) {
    SeedResult sr;
    sr.seed = seed;
    LoopState st = make_loop_state(spec);
    std::vector<std::pair<std::string, ExprRef>> last_solutions;
    for (int c = 0; c < cfg.cycles; ++c) {
      CycleResult r = run_cycle(spec, cfg.loop, out.tasks.train, out.tasks.test, st, seed, c);
      sr.metrics.push_back(r.metrics);
      last_solutions = std::move(r.test_solutions);

      int rank = 1;
      for (const ScoredCandidate& sc : r.ranked) {
        bool installed = false;
        std::string name;
        for (const InstalledChunk& ic : r.installed)
          if (render_expr(ic.scored.candidate.closed.expr) ==
              render_expr(sc.candidate.closed.expr)) {
            installed = true;
            name = ic.name;
            break;
          }
        if (rank <= 15 || installed)
          sr.chunks.push_back({c, rank, name, render_expr(sc.candidate.closed.expr),
                               sc.candidate.size, sc.score, sc.uses_total, installed});
        ++rank;
      }

      sr.beam_digests.push_back(beam_digest(st));
      if (write) {
        fs::path cdir = root / ("seed_" + std::to_string(seed)) /
                        ("cycle_" + std::to_string(c));
        fs::create_directories(cdir);
        write_file(cdir / "library.json", st.lib.to_json_text());
        write_file(cdir / "model.tsv", model_dump(st.model));
        write_file(cdir / "beams.tsv", sr.beam_digests.back());
      }
      if (log) {
        *log << "[" << cfg.domain << " " << render_criterion(cfg.loop.criterion) << " seed "
             << seed << " cycle " << c << "] train_solved=" << r.metrics.train_solved
             << " test=" << fmt(r.metrics.test_pct) << "% chunks+" << r.metrics.chunks_installed
             << " fantasies=" << r.metrics.fantasies_used;
        if (r.metrics.fantasies_used == 0 && cfg.loop.n_fantasies > 0)
          *log << " (no valid fantasies; replay-only fit)";
        *log << "\n";
      }
    }
    sr.final_library_json = st.lib.to_json_text();
    sr.recovered = recovered_concepts(spec, st.lib);

    std::vector<std::pair<std::string, int>> chunk_names;  // name, install cycle
    for (const Primitive& p : st.lib.prims())
      if (p.origin == Primitive::Origin::Chunk) chunk_names.push_back({p.name, p.installed_cycle});
    std::sort(chunk_names.begin(), chunk_names.end(),
              [](const auto& a, const auto& b) { return a.second < b.second; });
    for (const auto& [name, cyc] : chunk_names) {
      int hits = 0;
      for (const auto& [id, prog] : last_solutions)
        if (contains_prim(prog, name)) ++hits;
      double pct = out.tasks.test.empty()
                       ? 0.0
                       : 100.0 * hits / static_cast<double>(out.tasks.test.size());
      sr.usefulness.push_back({name, pct});
      (void)cyc;
    }

    if (write) write_file(root / ("seed_" + std::to_string(seed)) / "chunks.csv",
                          chunks_csv(sr));
    out.seeds.push_back(std::move(sr));
  }

  if (write) {
    write_file(root / "metrics.csv", metrics_csv(out));
    write_file(root / "summary.json", summary_json(out));
  }
  return out;
}

CompareReport compare_runs(std::vector<RunConfig> configs, const std::string& out_dir,
                           std::ostream* log) {
  if (configs.size() < 2) throw std::invalid_argument("compare needs at least two configs");
  for (size_t i = 1; i < configs.size(); ++i) {
    RunConfig a = configs[0];
    RunConfig b = configs[i];
    // Neutralize the fields that are allowed to differ, then demand equality.
    a.loop.criterion = b.loop.criterion = Criterion::DdcPc;
    a.out_dir = b.out_dir = "";
    bool same = a.domain == b.domain && a.cycles == b.cycles && a.n_train == b.n_train &&
                a.n_test == b.n_test && a.task_seed == b.task_seed && a.seeds == b.seeds &&
                a.loop.batch_size == b.loop.batch_size && a.loop.beam_cap == b.loop.beam_cap &&
                a.loop.top_k == b.loop.top_k && a.loop.select_mode == b.loop.select_mode &&
                a.loop.caps.min_size == b.loop.caps.min_size &&
                a.loop.caps.max_size == b.loop.caps.max_size &&
                a.loop.wake_budget == b.loop.wake_budget &&
                a.loop.test_budget == b.loop.test_budget &&
                a.loop.n_fantasies == b.loop.n_fantasies;
    if (!same)
      throw std::invalid_argument("compare configs must differ only in the criterion");
  }

  CompareReport rep;
  for (const RunConfig& cfg : configs) rep.runs.push_back(run_experiment(cfg, log));

  const RunConfig& base = configs[0];
  for (size_t si = 0; si < base.seeds.size(); ++si) {
    int diverged = -1;
    for (int c = 0; c < base.cycles && diverged < 0; ++c)
      for (size_t ri = 1; ri < rep.runs.size() && diverged < 0; ++ri)
        if (rep.runs[ri].seeds[si].beam_digests[c] != rep.runs[0].seeds[si].beam_digests[c])
          diverged = c;
    rep.divergence_cycle[base.seeds[si]] = diverged;
  }

  std::ostringstream os;
  os << "domain " << base.domain << ", " << base.cycles << " cycles, seeds";
  for (auto s : base.seeds) os << " " << s;
  os << "\n\n";
  os << std::left << std::setw(8) << "cycle";
  for (const RunResult& r : rep.runs)
    os << std::setw(16) << (render_criterion(r.config.loop.criterion) + " test%");
  os << "\n";
  for (int c = 0; c < base.cycles; ++c) {
    os << std::left << std::setw(8) << c;
    for (const RunResult& r : rep.runs) {
      std::vector<double> pct;
      for (const SeedResult& s : r.seeds) pct.push_back(s.metrics.at(c).test_pct);
      os << std::setw(16) << fmt(mean_of(pct));
    }
    os << "\n";
  }
  os << "\nfirst divergence (cycle index, -1 = never):\n";
  for (const auto& [seed, c] : rep.divergence_cycle)
    os << "  seed " << seed << ": " << c << "\n";
  for (const RunResult& r : rep.runs) {
    os << "\ninstalled chunks, " << render_criterion(r.config.loop.criterion) << ":\n";
    for (const SeedResult& s : r.seeds) {
      os << "  seed " << s.seed << ":";
      int shown = 0;
      for (const ChunkRow& ch : s.chunks)
        if (ch.installed && shown++ < 8) os << " " << ch.rendering << " [size " << ch.size << "]";
      os << "\n";
    }
  }
  rep.text = os.str();

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "compare.txt", rep.text);
  }
  if (log) *log << rep.text;
  return rep;
}

}  // namespace ddc
