#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "delrec/checkpoint.hpp"
#include "delrec/config.hpp"
#include "delrec/train.hpp"

using namespace delrec;
namespace fs = std::filesystem;

namespace {

const char* kBaseConfig = R"(
[run]
seed = 11
epochs = 2
batch_size = 16

[dataset]
kind = synthetic
n_classes = 2
lags = 2,7
seq_len = 24
background_rate = 0.01
probes = 4
n_samples = 120

[architecture]
hidden = 8,8
recurrent = false,true
rec_delay_mode = learned
readout = softmax_over_time

[delays]
rec_init = uniform
rec_init_a = 0
rec_init_b = 5

[optim]
lr_weights = 0.005
lr_positions = 0.05
)";

}  // namespace

TEST_CASE("config parsing round trip") {
  ConfigFile cf = ConfigFile::parse_string(kBaseConfig);
  RunConfig rc = RunConfig::from_config(cf);
  CHECK(rc.seed == 11);
  CHECK(rc.epochs == 2);
  CHECK(rc.arch.hidden == std::vector<std::size_t>{8, 8});
  CHECK(rc.arch.rec_delay_mode == RecDelayMode::learned);
  CHECK(rc.dataset.synth.lags == std::vector<int>{2, 7});

  // canonical text parses back to the same canonical text
  const std::string canon = rc.canonical_text();
  ConfigFile cf2 = ConfigFile::parse_string(canon);
  RunConfig rc2 = RunConfig::from_config(cf2);
  CHECK(rc2.canonical_text() == canon);
  CHECK(rc2.hash() == rc.hash());
}

TEST_CASE("unknown keys are hard errors") {
  const std::string bad = std::string(kBaseConfig) + "\nlearning_rate = 1\n";
  ConfigFile cf = ConfigFile::parse_string(bad);
  CHECK_THROWS_WITH_AS(static_cast<void>(RunConfig::from_config(cf)),
                       doctest::Contains("unknown key"),
                       std::invalid_argument);

  // misspelled key inside a known section
  const std::string bad2 =
      std::string(kBaseConfig) + "\n[optim]\nlr_wieghts = 0.1\n";
  ConfigFile cf2 = ConfigFile::parse_string(bad2);
  CHECK_THROWS_WITH_AS(static_cast<void>(RunConfig::from_config(cf2)),
                       doctest::Contains("lr_wieghts"),
                       std::invalid_argument);
}

TEST_CASE("duplicate keys and malformed lines are rejected") {
  CHECK_THROWS(ConfigFile::parse_string("[a]\nx = 1\nx = 2\n"));
  CHECK_THROWS(ConfigFile::parse_string("[a]\nnot a pair\n"));
  CHECK_THROWS(ConfigFile::parse_string("[unterminated\nx = 1\n"));
}

TEST_CASE("missing mandatory seed") {
  ConfigFile cf = ConfigFile::parse_string("[run]\nepochs = 1\n");
  CHECK_THROWS_WITH_AS(static_cast<void>(RunConfig::from_config(cf)),
                       doctest::Contains("seed"), std::invalid_argument);
}

namespace {

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("checkpoint restores a bit-identical training continuation") {
  const fs::path tmp = fs::temp_directory_path() / "delrec_ckpt_test";
  fs::remove_all(tmp);

  ConfigFile cf = ConfigFile::parse_string(kBaseConfig);
  RunConfig rc = RunConfig::from_config(cf);

  // straight run: both epochs in one process
  RunConfig full = rc;
  full.out_dir = (tmp / "full").string();
  const TrainOutcome full_out = train_run(full);
  REQUIRE(full_out.history.size() == 2);

  // crashed run: stop after epoch 0, then resume under the same config
  RunConfig part = rc;
  part.out_dir = (tmp / "part").string();
  const TrainOutcome part_out = train_run(part, {}, /*stop_after_epochs=*/1);
  REQUIRE(part_out.history.size() == 1);
  RunConfig cont = rc;
  cont.out_dir = (tmp / "cont").string();
  const TrainOutcome cont_out = train_run(cont, part_out.last_checkpoint);
  REQUIRE(cont_out.history.size() == 1);

  // the final states are byte-identical, and the epoch-1 metric rows match
  CHECK(file_bytes(full_out.last_checkpoint) ==
        file_bytes(cont_out.last_checkpoint));
  const EpochMetrics& a = full_out.history[1];
  const EpochMetrics& b = cont_out.history[0];
  CHECK(a.epoch == b.epoch);
  CHECK(a.sigma == b.sigma);
  CHECK(a.train_loss == b.train_loss);
  CHECK(a.train_acc == b.train_acc);
  CHECK(a.val_loss == b.val_loss);
  CHECK(a.val_acc == b.val_acc);
  CHECK(a.spike_rate == b.spike_rate);

  // resuming under a different config is refused
  RunConfig other = rc;
  other.optim.lr_weights *= 2.0;
  other.out_dir = (tmp / "other").string();
  CHECK_THROWS(train_run(other, part_out.last_checkpoint));

  fs::remove_all(tmp);
}

TEST_CASE("checkpoint save/load preserves parameters and optimizer state") {
  ConfigFile cf = ConfigFile::parse_string(kBaseConfig);
  RunConfig rc = RunConfig::from_config(cf);
  LoadedData data = load_data(rc.dataset, rc.seed);
  rc.arch.n_inputs = data.train.n_channels;
  rc.arch.n_classes = static_cast<std::size_t>(data.train.n_classes);

  Rng rng(rc.seed);
  Network net = Network::build(rc.arch, rng);
  Optimizer opt(net.params(), false, 0.0, 0.0);

  // a couple of steps so moments are non-trivial
  std::vector<std::size_t> idx(data.train.samples.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::vector<int> labels;
  Tensor x = assemble_batch(data.train, idx, 0, 8,
                            data.train.max_t_steps(), labels);
  for (int step = 0; step < 2; ++step) {
    Context ctx;
    ctx.training = true;
    ctx.rng = &rng;
    ctx.sigma = 5.0;
    net.forward_loss(x, labels, ctx, true);
    for (Parameter* p : net.params()) p->zero_grad();
    net.backward();
    opt.step(1e-2, 5e-2);
  }

  const fs::path path = fs::temp_directory_path() / "delrec_state.ckpt";
  CheckpointMeta meta;
  meta.config_text = rc.canonical_text();
  meta.config_hash = rc.hash();
  meta.epoch = 1;
  meta.sigma_epoch = 5.0;
  meta.rng_state = rng.serialize();
  save_checkpoint(path, net, &opt, meta);

  Rng rng2(999);
  Network net2 = Network::build(rc.arch, rng2);
  Optimizer opt2(net2.params(), false, 0.0, 0.0);
  const CheckpointMeta back = load_checkpoint(path, net2, &opt2);
  CHECK(back.config_hash == rc.hash());
  CHECK(back.epoch == 1);
  CHECK(back.sigma_epoch == 5.0);
  CHECK(opt2.step_count() == opt.step_count());

  const auto pa = net.params();
  const auto pb = net2.params();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    REQUIRE(pa[i]->value.size() == pb[i]->value.size());
    for (std::size_t e = 0; e < pa[i]->value.size(); ++e)
      CHECK(pa[i]->value(e) == pb[i]->value(e));
    if (pa[i]->trainable) {
      const AdamState& sa = opt.state_for(*pa[i]);
      const AdamState& sb = opt2.state_for(*pb[i]);
      for (std::size_t e = 0; e < sa.m.size(); ++e) {
        CHECK(sa.m(e) == sb.m(e));
        CHECK(sa.v(e) == sb.v(e));
      }
    }
  }
  // rng state round trip
  Rng r3(0);
  r3.deserialize(back.rng_state);
  Rng r4(0);
  r4.deserialize(rng.serialize());
  CHECK(r3.next_u64() == r4.next_u64());

  fs::remove(path);

  // kind mismatch: a dataset file is not a checkpoint
  const fs::path dpath = fs::temp_directory_path() / "delrec_kind.drec";
  save_dataset_drec(data.val, dpath);
  CHECK_THROWS(peek_checkpoint(dpath));
  fs::remove(dpath);
}
