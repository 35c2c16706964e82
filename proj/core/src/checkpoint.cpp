#include "cain/checkpoint.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cain/errors.hpp"

namespace cain {

namespace {

using torch::serialize::InputArchive;
using torch::serialize::OutputArchive;

template <typename Net>
void write_module(OutputArchive& archive, const char* key, const Net& net) {
  OutputArchive sub;
  net->save(sub);
  archive.write(key, sub);
}

template <typename Net>
void read_module(InputArchive& archive, const char* key, Net& net) {
  InputArchive sub;
  archive.read(key, sub);
  net->load(sub);
}

void write_int(OutputArchive& a, const char* key, std::int64_t v) { a.write(key, c10::IValue(v)); }

std::int64_t read_int(InputArchive& a, const char* key) {
  c10::IValue v;
  a.read(key, v);
  return v.toInt();
}

std::string read_string(InputArchive& a, const char* key) {
  c10::IValue v;
  a.read(key, v);
  return v.toStringRef();
}

// Adam state keyed by parameter position. The stock serializer keys by tensor address.
void write_adam(OutputArchive& archive, const char* key, torch::optim::Adam& opt) {
  OutputArchive sub;
  auto& state = opt.state();
  std::int64_t index = 0;
  for (const auto& group : opt.param_groups()) {
    for (const auto& p : group.params()) {
      const auto it = state.find(p.unsafeGetTensorImpl());
      if (it != state.end()) {
        const auto& st = static_cast<const torch::optim::AdamParamState&>(*it->second);
        OutputArchive entry;
        entry.write("step", c10::IValue(st.step()));
        entry.write("exp_avg", st.exp_avg(), /*is_buffer=*/true);
        entry.write("exp_avg_sq", st.exp_avg_sq(), /*is_buffer=*/true);
        if (st.max_exp_avg_sq().defined())
          entry.write("max_exp_avg_sq", st.max_exp_avg_sq(), /*is_buffer=*/true);
        sub.write(std::to_string(index), entry);
      }
      ++index;
    }
  }
  write_int(sub, "count", index);
  archive.write(key, sub);
}

void read_adam(InputArchive& archive, const char* key, torch::optim::Adam& opt) {
  InputArchive sub;
  archive.read(key, sub);
  std::int64_t expected = 0;
  for (const auto& group : opt.param_groups()) expected += static_cast<std::int64_t>(group.params().size());
  if (read_int(sub, "count") != expected)
    throw IncompatibleCheckpointError("optimizer state does not match the model's parameters");
  auto& state = opt.state();
  state.clear();
  std::int64_t index = 0;
  for (const auto& group : opt.param_groups()) {
    for (const auto& p : group.params()) {
      InputArchive entry;
      if (sub.try_read(std::to_string(index++), entry)) {
        auto st = std::make_unique<torch::optim::AdamParamState>();
        c10::IValue step;
        entry.read("step", step);
        st->step(step.toInt());
        torch::Tensor avg, avg_sq, m;
        entry.read("exp_avg", avg, /*is_buffer=*/true);
        entry.read("exp_avg_sq", avg_sq, /*is_buffer=*/true);
        st->exp_avg(avg);
        st->exp_avg_sq(avg_sq);
        if (entry.try_read("max_exp_avg_sq", m, /*is_buffer=*/true)) st->max_exp_avg_sq(m);
        state[p.unsafeGetTensorImpl()] = std::move(st);
      }
    }
  }
}

// Keys that only control how long or how often a run does things.
bool run_length_key(const std::string& k) {
  return k == "epochs" || k == "max_steps" || k == "checkpoint_every" || k == "validate_every" ||
         k == "early_stop_patience";
}

}  // namespace

std::string serialize_checkpoint(const TrainState& s) {
  OutputArchive a;
  write_int(a, "format_version", kCheckpointFormatVersion);
  a.write("config", c10::IValue(to_key_values(s.cfg).to_text()));
  a.write("config_hash", c10::IValue(config_hash(s.cfg)));
  write_int(a, "epoch", s.epoch);
  write_int(a, "batch_in_epoch", s.batch_in_epoch);
  write_int(a, "step", s.step);
  write_int(a, "d_updates", s.d_updates);
  write_int(a, "g_updates", s.g_updates);
  write_int(a, "stale_validations", s.stale_validations);
  a.write("best_val_l1", c10::IValue(s.best_val_l1));
  std::ostringstream rng;
  rng << s.rng;
  a.write("rng", c10::IValue(rng.str()));
  a.write("torch_rng", at::detail::getDefaultCPUGenerator().get_state(), /*is_buffer=*/true);

  write_module(a, "embedder", s.model.embedder);
  write_module(a, "generator", s.model.generator);
  write_module(a, "disc_identity", s.model.disc_identity);
  write_module(a, "disc_pose", s.model.disc_pose);
  write_adam(a, "opt_g", *s.opt_g);
  write_adam(a, "opt_d", *s.opt_d);

  std::ostringstream out;
  a.save_to(out);
  return out.str();
}

void save_checkpoint(const TrainState& state, const std::string& path) {
  const auto bytes = serialize_checkpoint(state);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing checkpoint " + path);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place at " + path + ": " + ec.message());
}

std::unique_ptr<TrainState> load_checkpoint(const std::string& path) {
  InputArchive a;
  try {
    a.load_from(path);
  } catch (const c10::Error& e) {
    throw IoError("cannot read checkpoint " + path);
  }
  std::int64_t version = 0;
  try {
    version = read_int(a, "format_version");
  } catch (const c10::Error&) {
    throw IncompatibleCheckpointError(path + " has no format version; not a checkpoint");
  }
  if (version != kCheckpointFormatVersion)
    throw IncompatibleCheckpointError("checkpoint " + path + " uses format version " +
                                      std::to_string(version) + ", this build reads version " +
                                      std::to_string(kCheckpointFormatVersion));
  const TrainConfig cfg = train_config_from(KeyValueConfig::parse(read_string(a, "config")));
  if (read_string(a, "config_hash") != config_hash(cfg))
    throw IncompatibleCheckpointError("checkpoint " + path + ": config hash mismatch");

  auto s = std::make_unique<TrainState>(cfg);
  s->epoch = static_cast<int>(read_int(a, "epoch"));
  s->batch_in_epoch = static_cast<int>(read_int(a, "batch_in_epoch"));
  s->step = read_int(a, "step");
  s->d_updates = read_int(a, "d_updates");
  s->g_updates = read_int(a, "g_updates");
  s->stale_validations = static_cast<int>(read_int(a, "stale_validations"));
  {
    c10::IValue v;
    a.read("best_val_l1", v);
    s->best_val_l1 = v.toDouble();
  }
  std::istringstream rng(read_string(a, "rng"));
  rng >> s->rng;
  torch::Tensor torch_rng;
  a.read("torch_rng", torch_rng, /*is_buffer=*/true);
  auto gen = at::detail::getDefaultCPUGenerator();
  gen.set_state(torch_rng);

  read_module(a, "embedder", s->model.embedder);
  read_module(a, "generator", s->model.generator);
  read_module(a, "disc_identity", s->model.disc_identity);
  read_module(a, "disc_pose", s->model.disc_pose);
  read_adam(a, "opt_g", *s->opt_g);
  read_adam(a, "opt_d", *s->opt_d);
  return s;
}

void check_compatible(const TrainConfig& stored, const TrainConfig& requested) {
  const auto a = to_key_values(stored);
  const auto b = to_key_values(requested);
  for (const auto& key : a.keys()) {
    if (run_length_key(key)) continue;
    if (a.get(key) != b.get(key))
      throw IncompatibleCheckpointError("checkpoint has " + key + " = " + a.get(key) +
                                        " but the config requests " + key + " = " + b.get(key));
  }
}

std::unique_ptr<TrainState> load_checkpoint(const std::string& path, const TrainConfig& expected) {
  auto s = load_checkpoint(path);
  check_compatible(s->cfg, expected);
  return s;
}

}  // namespace cain
