#include <fstream>

#include "delrec/checkpoint.hpp"
#include "delrec/io.hpp"

namespace delrec {

namespace {

void write_tensor(std::ostream& out, const Tensor& t) {
  io::write_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (int i = 0; i < t.rank(); ++i)
    io::write_u32(out, static_cast<std::uint32_t>(t.dim(i)));
  for (std::size_t e = 0; e < t.size(); ++e) io::write_f64(out, t(e));
}

Tensor read_tensor(std::istream& in) {
  const std::uint32_t rank = io::read_u32(in);
  DELREC_CHECK(rank >= 1 && rank <= 3, "checkpoint: bad tensor rank");
  std::uint32_t dims[3] = {1, 1, 1};
  for (std::uint32_t i = 0; i < rank; ++i) dims[i] = io::read_u32(in);
  Tensor t = rank == 1 ? Tensor(dims[0])
             : rank == 2 ? Tensor(dims[0], dims[1])
                         : Tensor(dims[0], dims[1], dims[2]);
  for (std::size_t e = 0; e < t.size(); ++e) t(e) = io::read_f64(in);
  return t;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, Network& net,
                     const Optimizer* opt, const CheckpointMeta& meta) {
  std::ofstream out(path, std::ios::binary);
  DELREC_CHECK(out.good(), "save_checkpoint: cannot open " + path.string());
  io::write_magic(out, io::kKindCheckpoint);
  io::write_string(out, meta.config_text);
  io::write_u64(out, meta.config_hash);
  io::write_u32(out, static_cast<std::uint32_t>(meta.epoch));
  io::write_f64(out, meta.sigma_epoch);
  io::write_string(out, meta.rng_state);
  io::write_f64(out, meta.best_val_acc);
  io::write_u32(out, static_cast<std::uint32_t>(meta.best_epoch + 1));

  const auto params = net.params();
  io::write_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const Parameter* p : params) {
    io::write_string(out, p->name);
    write_tensor(out, p->value);
  }

  const bool with_opt = opt != nullptr;
  io::write_u32(out, with_opt ? 1 : 0);
  if (with_opt) {
    io::write_u64(out, static_cast<std::uint64_t>(opt->step_count()));
    for (Parameter* p : params) {
      if (!p->trainable) continue;
      AdamState& st = const_cast<Optimizer*>(opt)->state_for(*p);
      const bool has_state = st.m.size() == p->value.size();
      io::write_u32(out, has_state ? 1 : 0);
      if (has_state) {
        write_tensor(out, st.m);
        write_tensor(out, st.v);
      }
    }
  }
  DELREC_CHECK(out.good(), "save_checkpoint: write failed");
}

CheckpointMeta load_checkpoint(const std::filesystem::path& path, Network& net,
                               Optimizer* opt) {
  std::ifstream in(path, std::ios::binary);
  DELREC_CHECK(in.good(), "load_checkpoint: cannot open " + path.string());
  io::read_magic(in, io::kKindCheckpoint);
  CheckpointMeta meta;
  meta.config_text = io::read_string(in);
  meta.config_hash = io::read_u64(in);
  meta.epoch = static_cast<int>(io::read_u32(in));
  meta.sigma_epoch = io::read_f64(in);
  meta.rng_state = io::read_string(in);
  meta.best_val_acc = io::read_f64(in);
  meta.best_epoch = static_cast<int>(io::read_u32(in)) - 1;

  const std::uint32_t n_params = io::read_u32(in);
  const auto params = net.params();
  DELREC_CHECK(n_params == params.size(),
               "load_checkpoint: parameter count mismatch");
  for (std::uint32_t i = 0; i < n_params; ++i) {
    const std::string name = io::read_string(in);
    Tensor value = read_tensor(in);
    Parameter* p = net.param_by_name(name);
    DELREC_CHECK(p != nullptr, "load_checkpoint: unknown parameter " + name);
    DELREC_CHECK(p->value.same_shape(value),
                 "load_checkpoint: shape mismatch for " + name);
    p->value = std::move(value);
  }

  const bool with_opt = io::read_u32(in) != 0;
  if (with_opt) {
    const auto step_count = static_cast<long>(io::read_u64(in));
    if (opt) opt->set_step_count(step_count);
    for (Parameter* p : params) {
      if (!p->trainable) continue;
      const bool has_state = io::read_u32(in) != 0;
      if (!has_state) continue;
      Tensor m = read_tensor(in);
      Tensor v = read_tensor(in);
      if (opt) {
        AdamState& st = opt->state_for(*p);
        st.m = std::move(m);
        st.v = std::move(v);
      }
    }
  }
  return meta;
}

CheckpointMeta peek_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  DELREC_CHECK(in.good(), "peek_checkpoint: cannot open " + path.string());
  io::read_magic(in, io::kKindCheckpoint);
  CheckpointMeta meta;
  meta.config_text = io::read_string(in);
  meta.config_hash = io::read_u64(in);
  meta.epoch = static_cast<int>(io::read_u32(in));
  meta.sigma_epoch = io::read_f64(in);
  meta.rng_state = io::read_string(in);
  meta.best_val_acc = io::read_f64(in);
  meta.best_epoch = static_cast<int>(io::read_u32(in)) - 1;
  return meta;
}

}  // namespace delrec
