#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "delrec/config.hpp"
#include "delrec/io.hpp"

namespace delrec {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
  return out;
}

bool parse_bool(const std::string& v, const std::string& where) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail_arg("config: bad boolean for " + where + ": '" + v + "'");
}

}  // namespace

ConfigFile ConfigFile::parse_string(const std::string& text) {
  ConfigFile cf;
  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      DELREC_CHECK_ARG(line.back() == ']', "config line " +
                                               std::to_string(line_no) +
                                               ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    DELREC_CHECK_ARG(eq != std::string::npos,
                     "config line " + std::to_string(line_no) +
                         ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    DELREC_CHECK_ARG(!key.empty(), "config line " + std::to_string(line_no) +
                                       ": empty key");
    const std::string full = section + "." + key;
    DELREC_CHECK_ARG(!cf.values_.count(full),
                     "config: duplicate key '" + full + "'");
    cf.values_[full] = value;
  }
  return cf;
}

ConfigFile ConfigFile::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  DELREC_CHECK_ARG(in.good(), "config: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str());
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  return values_.count(section + "." + key) > 0;
}

std::string ConfigFile::lookup(const std::string& section,
                               const std::string& key) {
  const std::string full = section + "." + key;
  const auto it = values_.find(full);
  DELREC_CHECK_ARG(it != values_.end(),
                   "config: missing required key '" + full + "'");
  consumed_.insert(full);
  return it->second;
}

std::string ConfigFile::get_str(const std::string& s, const std::string& k) {
  return lookup(s, k);
}

std::string ConfigFile::get_str_or(const std::string& s, const std::string& k,
                                   const std::string& fallback) {
  return has(s, k) ? lookup(s, k) : fallback;
}

double ConfigFile::get_num(const std::string& s, const std::string& k) {
  const std::string v = lookup(s, k);
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    DELREC_CHECK_ARG(pos == v.size(), "");
    return d;
  } catch (...) {
    fail_arg("config: bad number for " + s + "." + k + ": '" + v + "'");
  }
}

double ConfigFile::get_num_or(const std::string& s, const std::string& k,
                              double fallback) {
  return has(s, k) ? get_num(s, k) : fallback;
}

long ConfigFile::get_int(const std::string& s, const std::string& k) {
  const double d = get_num(s, k);
  DELREC_CHECK_ARG(d == std::floor(d), "config: " + s + "." + k +
                                           " must be an integer");
  return static_cast<long>(d);
}

long ConfigFile::get_int_or(const std::string& s, const std::string& k,
                            long fallback) {
  return has(s, k) ? get_int(s, k) : fallback;
}

bool ConfigFile::get_bool_or(const std::string& s, const std::string& k,
                             bool fallback) {
  if (!has(s, k)) return fallback;
  return parse_bool(lookup(s, k), s + "." + k);
}

std::vector<long> ConfigFile::get_int_list_or(const std::string& s,
                                              const std::string& k,
                                              const std::vector<long>& fb) {
  if (!has(s, k)) return fb;
  std::vector<long> out;
  for (const std::string& p : split_list(lookup(s, k))) {
    try {
      out.push_back(std::stol(p));
    } catch (...) {
      fail_arg("config: bad integer list for " + s + "." + k);
    }
  }
  return out;
}

std::vector<bool> ConfigFile::get_bool_list_or(const std::string& s,
                                               const std::string& k,
                                               const std::vector<bool>& fb) {
  if (!has(s, k)) return fb;
  std::vector<bool> out;
  for (const std::string& p : split_list(lookup(s, k)))
    out.push_back(parse_bool(p, s + "." + k));
  return out;
}

void ConfigFile::check_all_consumed() const {
  std::string unknown;
  for (const auto& [key, _] : values_)
    if (!consumed_.count(key)) unknown += (unknown.empty() ? "" : ", ") + key;
  DELREC_CHECK_ARG(unknown.empty(), "config: unknown key(s): " + unknown);
}

// ---------------------------------------------------------------------------

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  ConfigFile cf = ConfigFile::parse_file(path);
  return from_config(cf);
}

RunConfig RunConfig::from_config(ConfigFile& cf) {
  RunConfig rc;
  rc.seed = static_cast<std::uint64_t>(cf.get_int("run", "seed"));
  rc.out_dir = cf.get_str_or("run", "out_dir", "runs/run");
  rc.epochs = static_cast<int>(cf.get_int_or("run", "epochs", 1));
  rc.batch_size = static_cast<int>(cf.get_int_or("run", "batch_size", 32));
  DELREC_CHECK_ARG(rc.epochs >= 1 && rc.batch_size >= 1,
                   "config: epochs and batch_size must be positive");

  DatasetConfig& dc = rc.dataset;
  dc.kind = cf.get_str_or("dataset", "kind", "synthetic");
  DELREC_CHECK_ARG(dc.kind == "synthetic" || dc.kind == "file",
                   "config: dataset.kind must be synthetic|file");
  dc.path = cf.get_str_or("dataset", "path", "");
  dc.val_fraction = cf.get_num_or("dataset", "val_fraction", 0.2);
  dc.augment_shift =
      static_cast<int>(cf.get_int_or("dataset", "augment_shift", 0));
  dc.augment_blend = cf.get_bool_or("dataset", "augment_blend", false);
  dc.binary_clamp = cf.get_bool_or("dataset", "binary_clamp", true);
  dc.time_cap =
      static_cast<std::size_t>(cf.get_int_or("dataset", "time_cap", 0));
  if (dc.kind == "synthetic") {
    SyntheticTaskSpec& sy = dc.synth;
    sy.n_classes = static_cast<int>(cf.get_int_or("dataset", "n_classes", 4));
    std::vector<long> lags =
        cf.get_int_list_or("dataset", "lags", {2, 6, 11, 17});
    sy.lags.assign(lags.begin(), lags.end());
    sy.t_steps = static_cast<int>(cf.get_int_or("dataset", "seq_len", 60));
    sy.background_rate = cf.get_num_or("dataset", "background_rate", 0.02);
    sy.probes = static_cast<int>(cf.get_int_or("dataset", "probes", 6));
    sy.n_samples = static_cast<int>(cf.get_int_or("dataset", "n_samples", 1500));
    sy.seed = static_cast<std::uint64_t>(
        cf.get_int_or("dataset", "data_seed", static_cast<long>(rc.seed)));
  }

  ArchitectureSpec& arch = rc.arch;
  {
    std::vector<long> hidden =
        cf.get_int_list_or("architecture", "hidden", {32, 32});
    arch.hidden.assign(hidden.begin(), hidden.end());
  }
  arch.recurrent = cf.get_bool_list_or("architecture", "recurrent", {});
  const std::string rdm =
      cf.get_str_or("architecture", "rec_delay_mode", "none");
  if (rdm == "none")
    arch.rec_delay_mode = RecDelayMode::none;
  else if (rdm == "fixed_random")
    arch.rec_delay_mode = RecDelayMode::fixed_random;
  else if (rdm == "learned")
    arch.rec_delay_mode = RecDelayMode::learned;
  else
    fail_arg("config: rec_delay_mode must be none|fixed_random|learned");
  const std::string gran =
      cf.get_str_or("architecture", "granularity", "axonal");
  if (gran == "axonal")
    arch.granularity = DelayGranularity::axonal;
  else if (gran == "synaptic")
    arch.granularity = DelayGranularity::synaptic;
  else
    fail_arg("config: granularity must be axonal|synaptic");
  const std::string ffm = cf.get_str_or("architecture", "ff_delay_mode", "none");
  if (ffm == "none")
    arch.ff_delay_mode = FfDelayMode::none;
  else if (ffm == "learned")
    arch.ff_delay_mode = FfDelayMode::learned;
  else
    fail_arg("config: ff_delay_mode must be none|learned");
  const std::string ro = cf.get_str_or("architecture", "readout", "linear_ce");
  if (ro == "linear_ce")
    arch.readout = ReadoutKind::linear_ce;
  else if (ro == "softmax_over_time")
    arch.readout = ReadoutKind::softmax_over_time;
  else
    fail_arg("config: readout must be linear_ce|softmax_over_time");
  const std::string pool = cf.get_str_or("architecture", "readout_pool", "mean");
  if (pool == "mean")
    arch.readout_pool = PoolKind::mean;
  else if (pool == "sum")
    arch.readout_pool = PoolKind::sum;
  else if (pool == "last")
    arch.readout_pool = PoolKind::last;
  else
    fail_arg("config: readout_pool must be mean|sum|last");
  arch.per_neuron_p = cf.get_bool_or("architecture", "per_neuron_p", false);
  arch.bias = cf.get_bool_or("architecture", "bias", false);
  arch.batchnorm = cf.get_bool_or("architecture", "batchnorm", false);
  arch.weight_init = init_kind_from_string(
      cf.get_str_or("architecture", "weight_init", "default_uniform"));

  NeuronConfig& nc = arch.neuron;
  nc.tau_mem = cf.get_num_or("neuron", "tau_mem", 2.0);
  nc.v_threshold = cf.get_num_or("neuron", "v_threshold", 1.0);
  const std::string reset = cf.get_str_or("neuron", "reset", "soft");
  if (reset == "soft")
    nc.reset = ResetKind::soft;
  else if (reset == "hard")
    nc.reset = ResetKind::hard;
  else
    fail_arg("config: neuron.reset must be soft|hard");
  nc.v_reset = cf.get_num_or("neuron", "v_reset", 0.0);
  nc.detach_reset = cf.get_bool_or("neuron", "detach_reset", false);
  const std::string surr = cf.get_str_or("neuron", "surrogate", "triangle");
  if (surr == "triangle")
    nc.surrogate = SurrogateKind::triangle;
  else if (surr == "arctan")
    nc.surrogate = SurrogateKind::arctan;
  else
    fail_arg("config: neuron.surrogate must be triangle|arctan");
  arch.train_tau = cf.get_bool_or("neuron", "train_tau", false);
  arch.readout_tau = cf.get_num_or("neuron", "readout_tau", nc.tau_mem);

  rc.sigma_init = cf.get_num_or("delays", "sigma_init", 10.0);
  rc.sigma_decay = cf.get_num_or("delays", "sigma_decay", 0.95);
  arch.d_max = cf.get_num_or("delays", "d_max", 0.0);
  arch.rec_delay_init = init_kind_from_string(
      cf.get_str_or("delays", "rec_init", "half_gaussian"));
  arch.rec_delay_init_a = cf.get_num_or("delays", "rec_init_a", 12.0);
  arch.rec_delay_init_b = cf.get_num_or("delays", "rec_init_b", 0.0);
  arch.ff_delay_init_lo = cf.get_num_or("delays", "ff_init_lo", 0.0);
  arch.ff_delay_init_hi = cf.get_num_or("delays", "ff_init_hi", 50.0);

  OptimConfig& oc = rc.optim;
  const std::string opt = cf.get_str_or("optim", "optimizer", "adam");
  if (opt == "adam")
    oc.decoupled = false;
  else if (opt == "adamw")
    oc.decoupled = true;
  else
    fail_arg("config: optimizer must be adam|adamw");
  oc.lr_weights = cf.get_num_or("optim", "lr_weights", 1e-3);
  oc.lr_positions = cf.get_num_or("optim", "lr_positions", 5e-2);
  oc.weight_decay = cf.get_num_or("optim", "weight_decay", 0.0);
  oc.weight_decay_positions =
      cf.get_num_or("optim", "weight_decay_positions", 0.0);
  oc.sched_weights = schedule_kind_from_string(
      cf.get_str_or("optim", "sched_weights", "one_cycle"));
  oc.sched_positions = schedule_kind_from_string(
      cf.get_str_or("optim", "sched_positions", "one_cycle"));

  arch.dropout_ff = cf.get_num_or("regularization", "dropout_ff", 0.0);
  arch.dropout_rec = cf.get_num_or("regularization", "dropout_rec", 0.0);
  arch.lambda_spike = cf.get_num_or("regularization", "lambda_spike", 0.0);
  DELREC_CHECK_ARG(arch.dropout_ff >= 0.0 && arch.dropout_ff < 1.0 &&
                       arch.dropout_rec >= 0.0 && arch.dropout_rec < 1.0,
                   "config: dropout rates must lie in [0,1)");

  cf.check_all_consumed();
  return rc;
}

std::string RunConfig::canonical_text() const {
  // out_dir is deliberately absent: where a run writes does not change what
  // it computes, and resume compares this text across directories.
  std::ostringstream os;
  os.precision(17);
  os << "[run]\n"
     << "seed = " << seed << "\n"
     << "epochs = " << epochs << "\n"
     << "batch_size = " << batch_size << "\n\n";

  os << "[dataset]\n"
     << "kind = " << dataset.kind << "\n";
  if (!dataset.path.empty()) os << "path = " << dataset.path << "\n";
  os << "val_fraction = " << dataset.val_fraction << "\n"
     << "augment_shift = " << dataset.augment_shift << "\n"
     << "augment_blend = " << (dataset.augment_blend ? "true" : "false") << "\n"
     << "binary_clamp = " << (dataset.binary_clamp ? "true" : "false") << "\n"
     << "time_cap = " << dataset.time_cap << "\n";
  if (dataset.kind == "synthetic") {
    os << "n_classes = " << dataset.synth.n_classes << "\n" << "lags = ";
    for (std::size_t i = 0; i < dataset.synth.lags.size(); ++i)
      os << (i ? "," : "") << dataset.synth.lags[i];
    os << "\n"
       << "seq_len = " << dataset.synth.t_steps << "\n"
       << "background_rate = " << dataset.synth.background_rate << "\n"
       << "probes = " << dataset.synth.probes << "\n"
       << "n_samples = " << dataset.synth.n_samples << "\n"
       << "data_seed = " << dataset.synth.seed << "\n";
  }
  os << "\n[architecture]\nhidden = ";
  for (std::size_t i = 0; i < arch.hidden.size(); ++i)
    os << (i ? "," : "") << arch.hidden[i];
  os << "\nrecurrent = ";
  for (std::size_t i = 0; i < arch.recurrent.size(); ++i)
    os << (i ? "," : "") << (arch.recurrent[i] ? "true" : "false");
  os << "\nrec_delay_mode = "
     << (arch.rec_delay_mode == RecDelayMode::none
             ? "none"
             : arch.rec_delay_mode == RecDelayMode::fixed_random
                   ? "fixed_random"
                   : "learned")
     << "\n"
     << "granularity = "
     << (arch.granularity == DelayGranularity::axonal ? "axonal" : "synaptic")
     << "\n"
     << "ff_delay_mode = "
     << (arch.ff_delay_mode == FfDelayMode::none ? "none" : "learned") << "\n"
     << "readout = "
     << (arch.readout == ReadoutKind::linear_ce ? "linear_ce"
                                                : "softmax_over_time")
     << "\n"
     << "readout_pool = "
     << (arch.readout_pool == PoolKind::mean
             ? "mean"
             : arch.readout_pool == PoolKind::sum ? "sum" : "last")
     << "\n"
     << "per_neuron_p = " << (arch.per_neuron_p ? "true" : "false") << "\n"
     << "bias = " << (arch.bias ? "true" : "false") << "\n"
     << "batchnorm = " << (arch.batchnorm ? "true" : "false") << "\n"
     << "weight_init = "
     << (arch.weight_init == InitKind::kaiming_uniform ? "kaiming_uniform"
                                                       : "default_uniform")
     << "\n";

  os << "\n[neuron]\n"
     << "tau_mem = " << arch.neuron.tau_mem << "\n"
     << "v_threshold = " << arch.neuron.v_threshold << "\n"
     << "reset = " << (arch.neuron.reset == ResetKind::soft ? "soft" : "hard")
     << "\n"
     << "v_reset = " << arch.neuron.v_reset << "\n"
     << "detach_reset = " << (arch.neuron.detach_reset ? "true" : "false")
     << "\n"
     << "surrogate = "
     << (arch.neuron.surrogate == SurrogateKind::triangle ? "triangle"
                                                          : "arctan")
     << "\n"
     << "train_tau = " << (arch.train_tau ? "true" : "false") << "\n"
     << "readout_tau = " << arch.readout_tau << "\n";

  os << "\n[delays]\n"
     << "sigma_init = " << sigma_init << "\n"
     << "sigma_decay = " << sigma_decay << "\n"
     << "d_max = " << arch.d_max << "\n"
     << "rec_init = "
     << (arch.rec_delay_init == InitKind::uniform_range
             ? "uniform"
             : arch.rec_delay_init == InitKind::zeros ? "zeros"
                                                      : "half_gaussian")
     << "\n"
     << "rec_init_a = " << arch.rec_delay_init_a << "\n"
     << "rec_init_b = " << arch.rec_delay_init_b << "\n"
     << "ff_init_lo = " << arch.ff_delay_init_lo << "\n"
     << "ff_init_hi = " << arch.ff_delay_init_hi << "\n";

  os << "\n[optim]\n"
     << "optimizer = " << (optim.decoupled ? "adamw" : "adam") << "\n"
     << "lr_weights = " << optim.lr_weights << "\n"
     << "lr_positions = " << optim.lr_positions << "\n"
     << "weight_decay = " << optim.weight_decay << "\n"
     << "weight_decay_positions = " << optim.weight_decay_positions << "\n";
  auto sched_name = [](ScheduleKind k) {
    return k == ScheduleKind::constant
               ? "constant"
               : k == ScheduleKind::one_cycle ? "one_cycle"
                                              : "cosine_annealing";
  };
  os << "sched_weights = " << sched_name(optim.sched_weights) << "\n"
     << "sched_positions = " << sched_name(optim.sched_positions) << "\n";

  os << "\n[regularization]\n"
     << "dropout_ff = " << arch.dropout_ff << "\n"
     << "dropout_rec = " << arch.dropout_rec << "\n"
     << "lambda_spike = " << arch.lambda_spike << "\n";
  return os.str();
}

std::uint64_t RunConfig::hash() const { return io::fnv1a(canonical_text()); }

}  // namespace delrec
