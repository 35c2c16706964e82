#include "cain/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "cain/errors.hpp"

namespace cain {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

template <typename T>
bool parse_number(const std::string& text, T& out) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

bool parse_bool(const std::string& text, bool& out) {
  if (text == "true" || text == "1" || text == "yes") {
    out = true;
    return true;
  }
  if (text == "false" || text == "0" || text == "no") {
    out = false;
    return true;
  }
  return false;
}

// Binds config keys to TrainConfig fields so parsing and printing share one table.
struct Field {
  std::string key;
  bool required;
  std::function<bool(TrainConfig&, const std::string&)> read;
  std::function<std::string(const TrainConfig&)> write;
};

template <typename T>
Field number_field(std::string key, bool required, T TrainConfig::*member) {
  return {std::move(key), required,
          [member](TrainConfig& c, const std::string& v) { return parse_number(v, c.*member); },
          [member](const TrainConfig& c) {
            if constexpr (std::is_floating_point_v<T>)
              return format_double(c.*member);
            else
              return std::to_string(c.*member);
          }};
}

template <typename S, typename T>
Field nested_field(std::string key, bool required, S TrainConfig::*outer, T S::*inner) {
  return {std::move(key), required,
          [outer, inner](TrainConfig& c, const std::string& v) {
            if constexpr (std::is_same_v<T, bool>)
              return parse_bool(v, c.*outer.*inner);
            else
              return parse_number(v, c.*outer.*inner);
          },
          [outer, inner](const TrainConfig& c) -> std::string {
            if constexpr (std::is_same_v<T, bool>)
              return (c.*outer.*inner) ? "true" : "false";
            else if constexpr (std::is_floating_point_v<T>)
              return format_double(c.*outer.*inner);
            else
              return std::to_string(c.*outer.*inner);
          }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      number_field("K", true, &TrainConfig::K),
      number_field("epochs", true, &TrainConfig::epochs),
      number_field("batch_size", true, &TrainConfig::batch_size),
      number_field("lr_G", true, &TrainConfig::lr_G),
      number_field("lr_D", true, &TrainConfig::lr_D),
      number_field("beta1", true, &TrainConfig::beta1),
      number_field("beta2", true, &TrainConfig::beta2),
      nested_field("lambda_I_max", true, &TrainConfig::weights, &LossWeights::lambda_I_max),
      nested_field("lambda_P", true, &TrainConfig::weights, &LossWeights::lambda_P),
      nested_field("lambda_FM", true, &TrainConfig::weights, &LossWeights::lambda_FM),
      nested_field("lambda_VGG", true, &TrainConfig::weights, &LossWeights::lambda_VGG),
      nested_field("ramp_epochs", true, &TrainConfig::weights, &LossWeights::ramp_epochs),
      nested_field("no_targeting", false, &TrainConfig::ablations, &AblationFlags::no_targeting),
      nested_field("no_importance", false, &TrainConfig::ablations, &AblationFlags::no_importance),
      nested_field("no_responsibility", false, &TrainConfig::ablations,
                   &AblationFlags::no_responsibility),
      number_field("seed", true, &TrainConfig::seed),
      number_field("resolution", true, &TrainConfig::resolution),
      number_field("checkpoint_every", true, &TrainConfig::checkpoint_every),
      nested_field("embed_channels", false, &TrainConfig::model, &ModelConfig::embed_channels),
      nested_field("gen_channels", false, &TrainConfig::model, &ModelConfig::gen_channels),
      nested_field("gen_max_channels", false, &TrainConfig::model, &ModelConfig::gen_max_channels),
      nested_field("gen_down", false, &TrainConfig::model, &ModelConfig::gen_down),
      nested_field("gen_same", false, &TrainConfig::model, &ModelConfig::gen_same),
      nested_field("disc_channels", false, &TrainConfig::model, &ModelConfig::disc_channels),
      nested_field("disc_scales", false, &TrainConfig::model, &ModelConfig::disc_scales),
      nested_field("backbone_seed", false, &TrainConfig::model, &ModelConfig::backbone_seed),
      number_field("max_steps", false, &TrainConfig::max_steps),
      number_field("validate_every", false, &TrainConfig::validate_every),
      number_field("early_stop_patience", false, &TrainConfig::early_stop_patience),
      number_field("val_fraction", false, &TrainConfig::val_fraction),
      {"deterministic", false,
       [](TrainConfig& c, const std::string& v) { return parse_bool(v, c.deterministic); },
       [](const TrainConfig& c) -> std::string { return c.deterministic ? "true" : "false"; }},
  };
  return table;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::string_view text) {
  KeyValueConfig kv;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected `key = value`, got `" +
                        body + "`");
    std::string key = trim(std::string_view(body).substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (kv.contains(key))
      throw ConfigError("line " + std::to_string(lineno) + ": duplicate key `" + key + "`");
    kv.set(key, trim(std::string_view(body).substr(eq + 1)));
  }
  return kv;
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

bool KeyValueConfig::contains(const std::string& key) const { return values_.count(key) != 0; }

const std::string& KeyValueConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing key `" + key + "`");
  return it->second;
}

void KeyValueConfig::set(const std::string& key, std::string value) {
  if (!contains(key)) order_.push_back(key);
  values_[key] = std::move(value);
}

std::string KeyValueConfig::to_text() const {
  std::string out;
  for (const auto& k : order_) out += k + " = " + values_.at(k) + "\n";
  return out;
}

void KeyValueConfig::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << to_text();
  if (!out) throw IoError("failed writing " + path);
}

const std::vector<std::string>& required_train_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& f : fields())
      if (f.required) k.push_back(f.key);
    return k;
  }();
  return keys;
}

TrainConfig train_config_from(const KeyValueConfig& kv) {
  TrainConfig cfg;
  std::vector<std::string> problems;
  std::set<std::string> known;
  for (const auto& f : fields()) {
    known.insert(f.key);
    if (!kv.contains(f.key)) {
      if (f.required) problems.push_back("missing required key `" + f.key + "`");
      continue;
    }
    if (!f.read(cfg, kv.get(f.key)))
      problems.push_back("key `" + f.key + "`: cannot parse `" + kv.get(f.key) + "`");
  }
  for (const auto& k : kv.keys())
    if (!known.count(k)) problems.push_back("unknown key `" + k + "`");

  if (problems.empty()) {
    for (auto& issue : config_problems(cfg)) problems.push_back(std::move(issue));
  }
  if (!problems.empty()) {
    std::string msg = "invalid training config:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ConfigError(msg);
  }
  return cfg;
}

TrainConfig load_train_config(const std::string& path) {
  return train_config_from(KeyValueConfig::load(path));
}

KeyValueConfig to_key_values(const TrainConfig& cfg) {
  KeyValueConfig kv;
  for (const auto& f : fields()) kv.set(f.key, f.write(cfg));
  return kv;
}

std::vector<std::string> config_problems(const TrainConfig& cfg) {
  std::vector<std::string> p;
  if (cfg.K < 1) p.push_back("K must be >= 1");
  if (cfg.epochs < 0) p.push_back("epochs must be >= 0");
  if (cfg.batch_size < 1) p.push_back("batch_size must be >= 1");
  if (!(cfg.lr_G > 0)) p.push_back("lr_G must be > 0");
  if (!(cfg.lr_D >= cfg.lr_G)) p.push_back("lr_D must be >= lr_G (two time-scale rule)");
  if (cfg.beta1 < 0 || cfg.beta1 >= 1 || cfg.beta2 < 0 || cfg.beta2 >= 1)
    p.push_back("optimizer betas must lie in [0, 1)");
  const auto& w = cfg.weights;
  if (w.lambda_I_max < 0 || w.lambda_P < 0 || w.lambda_FM < 0 || w.lambda_VGG < 0)
    p.push_back("loss weights must be non-negative");
  if (w.ramp_epochs < 1) p.push_back("ramp_epochs must be >= 1");
  if (cfg.resolution != 32 && cfg.resolution != 64 && cfg.resolution != 128)
    p.push_back("resolution must be one of 32, 64, 128 (got " + std::to_string(cfg.resolution) +
                ")");
  if (cfg.checkpoint_every < 0) p.push_back("checkpoint_every must be >= 0");
  const auto& m = cfg.model;
  if (m.embed_channels < 1 || m.gen_channels < 1 || m.disc_channels < 1 || m.gen_max_channels < 1)
    p.push_back("channel counts must be positive");
  if (m.gen_down < 1 || m.gen_same < 0) p.push_back("gen_down must be >= 1 and gen_same >= 0");
  if (m.gen_down >= 1 && (cfg.resolution >> m.gen_down) < 1)
    p.push_back("gen_down too deep for the resolution");
  if (m.disc_scales < 1) p.push_back("disc_scales must be >= 1");
  if (cfg.max_steps < 0) p.push_back("max_steps must be >= 0");
  if (cfg.validate_every < 0 || cfg.early_stop_patience < 0)
    p.push_back("validate_every and early_stop_patience must be >= 0");
  if (cfg.val_fraction < 0 || cfg.val_fraction >= 1) p.push_back("val_fraction must be in [0, 1)");
  return p;
}

void validate(const TrainConfig& cfg) {
  const auto p = config_problems(cfg);
  if (p.empty()) return;
  std::string msg = "invalid training config:";
  for (const auto& issue : p) msg += "\n  - " + issue;
  throw ConfigError(msg);
}

std::string config_hash(const TrainConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_key_values(cfg).to_text()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace cain
