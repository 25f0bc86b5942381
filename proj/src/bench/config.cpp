#include "saulab/bench/config.hpp"

#include <fstream>
#include <sstream>

#include "saulab/core/error.hpp"
#include "saulab/core/rng.hpp"

namespace sau {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

ConfigFile ConfigFile::parse(const std::string& text) {
  ConfigFile cfg;
  cfg.text_ = text;
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw FormatError("config line " + std::to_string(lineno) + ": unterminated section");
      }
      section = trim(line.substr(1, line.size() - 2));
      cfg.sections_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    cfg.sections_[section][trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return cfg;
}

ConfigFile ConfigFile::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return parse(os.str());
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key) > 0;
}

std::string ConfigFile::get(const std::string& section, const std::string& key,
                            const std::string& fallback) const {
  auto s = sections_.find(section);
  if (s == sections_.end()) return fallback;
  auto k = s->second.find(key);
  return k == s->second.end() ? fallback : k->second;
}

std::string ConfigFile::require(const std::string& section, const std::string& key) const {
  if (!has(section, key)) {
    throw FormatError("config missing [" + section + "] " + key);
  }
  return get(section, key, "");
}

double ConfigFile::get_num(const std::string& section, const std::string& key,
                           double fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get(section, key, "");
  std::size_t used = 0;
  const double out = std::stod(v, &used);
  if (used != v.size()) throw FormatError("config [" + section + "] " + key + ": bad number");
  return out;
}

int ConfigFile::get_int(const std::string& section, const std::string& key, int fallback) const {
  return static_cast<int>(get_num(section, key, fallback));
}

std::uint64_t ConfigFile::get_u64(const std::string& section, const std::string& key,
                                  std::uint64_t fallback) const {
  if (!has(section, key)) return fallback;
  return std::stoull(get(section, key, ""));
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key,
                          bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get(section, key, "");
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw FormatError("config [" + section + "] " + key + ": expected a boolean");
}

TriggerSpec ExperimentConfig::build_trigger() const {
  if (trigger_kind == "patch") {
    TriggerSpec t;
    t.kind = TriggerKind::Patch;
    t.patch_row = patch_row < 0 ? height - patch_height : patch_row;
    t.patch_col = patch_col < 0 ? width - patch_width : patch_col;
    t.patch_height = patch_height;
    t.patch_width = patch_width;
    t.patch_value = patch_value;
    return t;
  }
  if (trigger_kind == "blended") {
    Rng rng(pattern_seed);
    return TriggerSpec::blended(Tensor::uniform({channels, height, width}, 0.0f, 1.0f, rng),
                                alpha);
  }
  if (trigger_kind == "sinusoidal") return TriggerSpec::sinusoidal(amplitude, frequency);
  throw DomainError("unknown trigger kind '" + trigger_kind + "'");
}

TargetMap ExperimentConfig::build_target_map() const {
  if (target_mode == "all_to_one") return TargetMap::all_to_one(target_label, num_classes);
  if (target_mode == "all_to_all") return TargetMap::all_to_all(num_classes);
  throw DomainError("unknown target mode '" + target_mode + "'");
}

ModelConfig ExperimentConfig::build_model_config() const {
  ModelConfig mc;
  mc.arch = arch_from_name(arch);
  mc.in_channels = channels;
  mc.in_height = height;
  mc.in_width = width;
  mc.num_classes = num_classes;
  mc.use_norm_layers = use_norm_layers;
  return mc;
}

PerturbationSet ExperimentConfig::build_set() const {
  if (ball == "linf") return PerturbationSet::linf_ball(radius);
  if (ball == "l2") return PerturbationSet::l2_ball(radius);
  if (ball == "l1") return PerturbationSet::l1_ball(radius);
  throw DomainError("unknown ball kind '" + ball + "'");
}

ExperimentConfig experiment_config_from_text(const std::string& text) {
  ConfigFile f = ConfigFile::parse(text);
  ExperimentConfig c;
  c.raw_text = text;

  c.source = f.get("data", "source", c.source);
  c.num_classes = f.get_int("data", "num_classes", c.num_classes);
  c.samples_per_class = f.get_int("data", "samples_per_class", c.samples_per_class);
  c.test_samples_per_class = f.get_int("data", "test_samples_per_class", c.test_samples_per_class);
  c.channels = f.get_int("data", "image_channels", c.channels);
  c.height = f.get_int("data", "image_height", c.height);
  c.width = f.get_int("data", "image_width", c.width);
  c.noise_sigma = static_cast<float>(f.get_num("data", "noise_sigma", c.noise_sigma));
  c.train_images = f.get("data", "train_images", "");
  c.train_labels = f.get("data", "train_labels", "");
  c.test_images = f.get("data", "test_images", "");
  c.test_labels = f.get("data", "test_labels", "");
  c.seed = f.get_u64("data", "seed", c.seed);

  c.trigger_kind = f.get("attack", "trigger", c.trigger_kind);
  c.patch_row = f.get_int("attack", "patch_row", c.patch_row);
  c.patch_col = f.get_int("attack", "patch_col", c.patch_col);
  c.patch_height = f.get_int("attack", "patch_height", c.patch_height);
  c.patch_width = f.get_int("attack", "patch_width", c.patch_width);
  c.patch_value = static_cast<float>(f.get_num("attack", "patch_value", c.patch_value));
  c.alpha = static_cast<float>(f.get_num("attack", "alpha", c.alpha));
  c.amplitude = static_cast<float>(f.get_num("attack", "amplitude", c.amplitude));
  c.frequency = static_cast<float>(f.get_num("attack", "frequency", c.frequency));
  c.pattern_seed = f.get_u64("attack", "pattern_seed", c.pattern_seed);
  c.target_mode = f.get("attack", "target_mode", c.target_mode);
  c.target_label = f.get_int("attack", "target_label", c.target_label);
  c.ratio = static_cast<float>(f.get_num("attack", "ratio", c.ratio));
  c.clean_label = f.get_bool("attack", "clean_label", c.clean_label);

  c.arch = f.get("train", "arch", c.arch);
  c.use_norm_layers = f.get_bool("train", "use_norm_layers", c.use_norm_layers);
  c.train_epochs = f.get_int("train", "epochs", c.train_epochs);
  c.train_lr = static_cast<float>(f.get_num("train", "lr", c.train_lr));
  c.train_momentum = static_cast<float>(f.get_num("train", "momentum", c.train_momentum));
  c.train_batch_size = f.get_int("train", "batch_size", c.train_batch_size);
  c.asr_gate = f.get_num("train", "asr_gate", c.asr_gate);
  c.plateau_epochs = f.get_int("train", "plateau_epochs", c.plateau_epochs);
  c.plateau_delta = f.get_num("train", "plateau_delta", c.plateau_delta);

  c.variant = f.get("defense", "variant", c.variant);
  c.sau.lambda1 = static_cast<float>(f.get_num("defense", "lambda1", c.sau.lambda1));
  c.sau.lambda2 = static_cast<float>(f.get_num("defense", "lambda2", c.sau.lambda2));
  c.sau.lambda3 = static_cast<float>(f.get_num("defense", "lambda3", c.sau.lambda3));
  c.sau.lambda4 = static_cast<float>(f.get_num("defense", "lambda4", c.sau.lambda4));
  c.sau.pgd_steps = f.get_int("defense", "pgd_steps", c.sau.pgd_steps);
  c.sau.pgd_step_size =
      static_cast<float>(f.get_num("defense", "pgd_step_size", c.sau.pgd_step_size));
  c.sau.learning_rate =
      static_cast<float>(f.get_num("defense", "learning_rate", c.sau.learning_rate));
  const std::string opt = f.get("defense", "optimizer", "adam");
  if (opt == "adam") {
    c.sau.optimizer = OptimizerKind::Adam;
  } else if (opt == "sgd") {
    c.sau.optimizer = OptimizerKind::Sgd;
  } else {
    throw DomainError("unknown optimizer '" + opt + "'");
  }
  c.sau.momentum = static_cast<float>(f.get_num("defense", "momentum", c.sau.momentum));
  c.sau.epochs = f.get_int("defense", "epochs", c.sau.epochs);
  c.sau.batch_size = f.get_int("defense", "batch_size", c.sau.batch_size);
  c.sau.targeted_label = f.get_int("defense", "targeted_label", c.sau.targeted_label);
  c.sau.freeze_norm = f.get_bool("defense", "freeze_norm", c.sau.freeze_norm);
  c.sau.clamp_inputs = f.get_bool("defense", "clamp_inputs", c.sau.clamp_inputs);
  c.clean_budget = static_cast<float>(f.get_num("defense", "clean_budget", c.clean_budget));
  c.ball = f.get("defense", "ball", c.ball);
  c.radius = static_cast<float>(f.get_num("defense", "radius", c.radius));
  c.sau.set = c.build_set();
  if (c.variant != "none") c.sau.variant = variant_from_name(c.variant);

  c.out_dir = f.get("eval", "out_dir", c.out_dir);
  c.verify_bounds = f.get_bool("eval", "verify_bounds", c.verify_bounds);
  c.grid_instances = f.get_int("eval", "grid_instances", c.grid_instances);
  c.risk_report = f.get_bool("eval", "risk_report", c.risk_report);
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return experiment_config_from_text(os.str());
}

}  // namespace sau
