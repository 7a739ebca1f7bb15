#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ddc/run.hpp"

namespace {

struct CliOptions {
  ddc::RunConfig cfg;
  std::string criterion = "ddc-pc";
  std::vector<std::string> criteria;
  std::string select_mode = "topk";
};

void add_common(CLI::App* cmd, CliOptions& o) {
  cmd->add_option("--domain", o.cfg.domain, "task domain: list or arith")
      ->envname("DDC_DOMAIN")
      ->check(CLI::IsMember({"list", "arith"}));
  cmd->add_option("--cycles", o.cfg.cycles, "wake/sleep cycles per seed")
      ->envname("DDC_CYCLES")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--train-tasks", o.cfg.n_train, "number of training tasks")
      ->envname("DDC_TRAIN_TASKS")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--test-tasks", o.cfg.n_test, "number of held-out tasks")
      ->envname("DDC_TEST_TASKS")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--task-seed", o.cfg.task_seed, "seed for the task population")
      ->envname("DDC_TASK_SEED");
  cmd->add_option("--batch-size", o.cfg.loop.batch_size, "train tasks woken per cycle")
      ->envname("DDC_BATCH_SIZE")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--wake-budget", o.cfg.loop.wake_budget, "search expansions per wake task")
      ->envname("DDC_WAKE_BUDGET")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--test-budget", o.cfg.loop.test_budget, "search expansions per test task")
      ->envname("DDC_TEST_BUDGET")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--beam-cap", o.cfg.loop.beam_cap, "solutions kept per task")
      ->envname("DDC_BEAM_CAP")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--top-k", o.cfg.loop.top_k, "chunks installed per cycle (0 = no chunking)")
      ->envname("DDC_TOP_K")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--frag-cap", o.cfg.loop.caps.max_size, "largest candidate fragment size")
      ->envname("DDC_FRAG_CAP")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--fantasies", o.cfg.loop.n_fantasies, "fantasy tasks dreamt per cycle")
      ->envname("DDC_FANTASIES")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--seeds", o.cfg.seeds, "comma-separated run seeds")
      ->envname("DDC_SEEDS")
      ->delimiter(',');
  cmd->add_option("--select-mode", o.select_mode, "chunk selection: topk or threshold")
      ->envname("DDC_SELECT_MODE")
      ->check(CLI::IsMember({"topk", "threshold"}));
  cmd->add_option("--out", o.cfg.out_dir, "output directory for reports and checkpoints")
      ->envname("DDC_OUT");
}

void finish_config(CliOptions& o) {
  o.cfg.loop.select_mode =
      o.select_mode == "threshold" ? ddc::SelectMode::Threshold : ddc::SelectMode::TopK;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wake-sleep program synthesis with library learning"};
  app.require_subcommand(1);

  CliOptions o;
  CLI::App* run = app.add_subcommand("run", "run one experiment configuration");
  add_common(run, o);
  run->add_option("--criterion", o.criterion, "chunk scoring criterion")
      ->envname("DDC_CRITERION")
      ->check(CLI::IsMember({"ddc-pc", "ddc-avg", "compression"}));

  CLI::App* compare = app.add_subcommand("compare", "run several criteria side by side");
  add_common(compare, o);
  compare
      ->add_option("--criteria", o.criteria, "comma-separated criteria to compare")
      ->envname("DDC_CRITERIA")
      ->delimiter(',')
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    finish_config(o);
    if (run->parsed()) {
      o.cfg.loop.criterion = *ddc::parse_criterion(o.criterion);
      ddc::RunResult res = ddc::run_experiment(o.cfg, &std::cout);
      const auto& final = res.seeds.front().metrics.back();
      (void)final;
      std::cout << "done: " << res.seeds.size() << " seed(s), metrics"
                << (o.cfg.out_dir.empty() ? " (in memory only)" : " in " + o.cfg.out_dir)
                << "\n";
      return 0;
    }
    if (o.criteria.size() < 2)
      throw std::invalid_argument("compare needs at least two --criteria entries");
    std::vector<ddc::RunConfig> cfgs;
    for (const std::string& name : o.criteria) {
      auto crit = ddc::parse_criterion(name);
      if (!crit) throw std::invalid_argument("unknown criterion: " + name);
      ddc::RunConfig c = o.cfg;
      c.loop.criterion = *crit;
      if (!o.cfg.out_dir.empty()) c.out_dir = o.cfg.out_dir + "/" + name;
      cfgs.push_back(std::move(c));
    }
    ddc::compare_runs(std::move(cfgs), o.cfg.out_dir, &std::cout);
    return 0;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
