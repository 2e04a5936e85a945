#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "delrec/ablate.hpp"
#include "delrec/checkpoint.hpp"
#include "delrec/train.hpp"

namespace delrec {

namespace fs = std::filesystem;

namespace {

int max_workers() {
  const char* env = std::getenv("DELREC_THREADS");
  if (!env) return 1;
  const int n = std::atoi(env);
  return n >= 1 ? n : 1;
}

struct Job {
  RunConfig cfg;
  AblationRow row;
};

void run_job_inprocess(const Job& job) { train_run(job.cfg); }

void spawn_job(const std::string& exe, const Job& job,
               std::vector<pid_t>& running) {
  const fs::path cfg_path = fs::path(job.cfg.out_dir) / "job_config.txt";
  fs::create_directories(job.cfg.out_dir);
  {
    std::ofstream out(cfg_path);
    out << job.cfg.canonical_text();
  }
  const pid_t pid = fork();
  DELREC_CHECK(pid >= 0, "ablate: fork failed");
  if (pid == 0) {
    // the canonical config text omits out_dir, so pass it explicitly
    execl(exe.c_str(), exe.c_str(), "train", "--config",
          cfg_path.string().c_str(), "--out", job.cfg.out_dir.c_str(),
          static_cast<char*>(nullptr));
    _exit(127);
  }
  running.push_back(pid);
}

void wait_one(std::vector<pid_t>& running) {
  int status = 0;
  const pid_t pid = waitpid(-1, &status, 0);
  DELREC_CHECK(pid > 0, "ablate: waitpid failed");
  DELREC_CHECK(WIFEXITED(status) && WEXITSTATUS(status) == 0,
               "ablate: training job failed (pid " + std::to_string(pid) +
                   ")");
  std::erase(running, pid);
}

}  // namespace

SweepConfig load_sweep(const fs::path& path) {
  ConfigFile cf = ConfigFile::parse_file(path);
  SweepConfig sweep;
  sweep.out_dir = cf.get_str_or("sweep", "out_dir", "runs/sweep");
  {
    std::vector<long> seeds = cf.get_int_list_or("sweep", "seeds", {1, 2, 3});
    sweep.seeds.assign(seeds.begin(), seeds.end());
  }
  sweep.mode = cf.get_str_or("sweep", "mode", "size");
  DELREC_CHECK_ARG(sweep.mode == "size" || sweep.mode == "lambda",
                   "sweep: mode must be size|lambda");
  if (cf.has("sweep", "variants")) {
    std::istringstream vs(cf.get_str("sweep", "variants"));
    std::string name;
    while (std::getline(vs, name, ','))
      sweep.variants.push_back(ablation_variant_from_string(
          name.substr(name.find_first_not_of(' '))));
  } else {
    sweep.variants = all_ablation_variants();
  }
  {
    std::vector<long> sizes =
        cf.get_int_list_or("sweep", "sizes", {42, 36, 30, 24, 18});
    sweep.sizes.assign(sizes.begin(), sizes.end());
  }
  sweep.base_size =
      static_cast<std::size_t>(cf.get_int_or("sweep", "base_size", 42));
  if (cf.has("sweep", "lambdas")) {
    std::istringstream ls(cf.get_str("sweep", "lambdas"));
    std::string tok;
    while (std::getline(ls, tok, ','))
      sweep.lambdas.push_back(std::stod(tok));
  } else {
    sweep.lambdas = {1e-4, 1e-2, 1.0, 10.0};
  }
  sweep.base = RunConfig::from_config(cf);
  return sweep;
}

std::vector<AblationRow> run_ablation(const SweepConfig& sweep) {
  std::vector<Job> jobs;
  const bool size_mode = sweep.mode == "size";
  const auto& points =
      size_mode ? sweep.sizes : std::vector<std::size_t>(sweep.lambdas.size());
  for (const AblationVariant variant : sweep.variants)
    for (std::size_t pi = 0; pi < points.size(); ++pi)
      for (const std::uint64_t seed : sweep.seeds) {
        Job job;
        job.cfg = sweep.base;
        job.cfg.seed = seed;
        const std::size_t hidden = size_mode ? sweep.sizes[pi] : sweep.base_size;
        apply_ablation_variant(job.cfg.arch, variant, hidden);
        double lambda = job.cfg.arch.lambda_spike;
        if (!size_mode) lambda = sweep.lambdas[pi];
        job.cfg.arch.lambda_spike = lambda;
        std::ostringstream dir;
        dir << to_string(variant) << "_"
            << (size_mode ? "n" + std::to_string(hidden)
                          : "lambda" + std::to_string(pi))
            << "_s" << seed;
        job.cfg.out_dir = (sweep.out_dir / dir.str()).string();
        job.row.variant = variant;
        job.row.hidden = hidden;
        job.row.lambda = lambda;
        job.row.seed = seed;
        jobs.push_back(std::move(job));
      }

  const int workers =
      sweep.self_exe.empty() ? 1 : std::max(1, max_workers());
  if (workers == 1) {
    for (const Job& job : jobs) run_job_inprocess(job);
  } else {
    std::vector<pid_t> running;
    for (const Job& job : jobs) {
      if (static_cast<int>(running.size()) >= workers) wait_one(running);
      spawn_job(sweep.self_exe, job, running);
    }
    while (!running.empty()) wait_one(running);
  }

  std::vector<AblationRow> rows;
  for (Job& job : jobs) {
    AblationRow row = job.row;
    LoadedData data = load_data(job.cfg.dataset, job.cfg.seed);
    RunConfig cfg = job.cfg;
    cfg.arch.n_inputs = data.train.n_channels;
    cfg.arch.n_classes = static_cast<std::size_t>(data.train.n_classes);
    Rng rng(cfg.seed);
    Network net = Network::build(cfg.arch, rng);
    const fs::path best = fs::path(job.cfg.out_dir) / "best.ckpt";
    const CheckpointMeta meta = load_checkpoint(best, net, nullptr);
    row.params = net.count_trainable_params();
    const EvalResult spread =
        evaluate_dataset(net, data.test, cfg.batch_size, meta.sigma_epoch);
    row.test_acc_spread = spread.accuracy;
    net.round_delays_for_eval();
    const EvalResult rounded =
        evaluate_dataset(net, data.test, cfg.batch_size, 0.0);
    row.test_acc_rounded = rounded.accuracy;
    row.firing_rate = rounded.spike_rate;
    rows.push_back(row);
  }
  return rows;
}

void write_ablation_tables(const std::vector<AblationRow>& rows,
                           const fs::path& out_dir, const std::string& mode) {
  fs::create_directories(out_dir);
  if (mode == "size") {
    std::ofstream out(out_dir / "accuracy_vs_params.csv");
    out << "variant,hidden,params,seed,test_acc_rounded,test_acc_spread,"
           "firing_rate\n";
    for (const auto& r : rows)
      out << to_string(r.variant) << ',' << r.hidden << ',' << r.params << ','
          << r.seed << ',' << r.test_acc_rounded << ',' << r.test_acc_spread
          << ',' << r.firing_rate << "\n";
  } else {
    std::ofstream out(out_dir / "accuracy_vs_rate.csv");
    out << "variant,lambda,seed,test_acc_rounded,firing_rate\n";
    for (const auto& r : rows)
      out << to_string(r.variant) << ',' << r.lambda << ',' << r.seed << ','
          << r.test_acc_rounded << ',' << r.firing_rate << "\n";
  }
}

}  // namespace delrec
