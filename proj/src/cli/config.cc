#include "dfgan/config.h"

#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "dfgan/errors.h"

namespace dfgan {

namespace {

using Json = nlohmann::json;

class Section {
 public:
  Section(const Json& node, std::string prefix) : node_(node), prefix_(std::move(prefix)) {
    if (!node_.is_object()) throw ConfigError(where() + "must be an object");
  }

  void reject_unknown(std::initializer_list<const char*> known) const {
    const std::set<std::string> names(known.begin(), known.end());
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      if (!names.count(it.key())) throw ConfigError("unknown key '" + field(it.key()) + "'");
    }
  }

  const Json* find(const char* key) const {
    auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  void count(const char* key, std::size_t& out) const {
    if (const Json* v = find(key)) {
      if (!v->is_number_unsigned()) {
        throw ConfigError(field(key) + " must be a non-negative integer");
      }
      out = v->get<std::size_t>();
    }
  }

  void u64(const char* key, std::uint64_t& out) const {
    if (const Json* v = find(key)) {
      if (!v->is_number_unsigned()) {
        throw ConfigError(field(key) + " must be a non-negative integer");
      }
      out = v->get<std::uint64_t>();
    }
  }

  void real(const char* key, double& out) const {
    if (const Json* v = find(key)) {
      if (!v->is_number()) throw ConfigError(field(key) + " must be a number");
      out = v->get<double>();
    }
  }

  void boolean(const char* key, bool& out) const {
    if (const Json* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(field(key) + " must be true or false");
      out = v->get<bool>();
    }
  }

  template <typename Parse>
  void enumeration(const char* key, Parse parse) const {
    if (const Json* v = find(key)) {
      if (!v->is_string()) throw ConfigError(field(key) + " must be a string");
      parse(v->get<std::string>());
    }
  }

  std::string field(const std::string& key) const {
    return prefix_.empty() ? key : prefix_ + "." + key;
  }

 private:
  std::string where() const { return prefix_.empty() ? "config " : prefix_ + " "; }

  const Json& node_;
  std::string prefix_;
};

std::string line_context(std::string_view doc, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < doc.size(); ++i) {
    if (doc[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

void parse_dataset(const Section& s, MixtureSpec& d) {
  s.reject_unknown({"kind", "k", "radius", "mode_std", "n", "seed"});
  s.enumeration("kind", [&](const std::string& v) { d.kind = parse_mixture_kind(v); });
  s.count("k", d.k);
  s.real("radius", d.radius);
  s.real("mode_std", d.mode_std);
  s.count("n", d.n);
  s.u64("seed", d.seed);
}

void parse_model(const Section& s, NetConfig& m) {
  s.reject_unknown({"latent_dim", "hidden_width", "hidden_layers", "noise_width_divisor",
                    "generator_batchnorm", "discriminator_batchnorm"});
  s.count("latent_dim", m.latent_dim);
  s.count("hidden_width", m.hidden_width);
  s.count("hidden_layers", m.hidden_layers);
  s.count("noise_width_divisor", m.noise_width_divisor);
  s.boolean("generator_batchnorm", m.generator_batchnorm);
  s.boolean("discriminator_batchnorm", m.discriminator_batchnorm);
}

void parse_train(const Section& s, RunConfig& cfg) {
  TrainConfig& t = cfg.train;
  s.reject_unknown({"iters", "batch", "lr", "beta1", "beta2", "adam_eps", "n_disc", "loss_mode",
                    "batch_mode", "separate_bn", "eval_every", "checkpoint_every"});
  s.count("iters", t.iters);
  s.count("batch", t.batch);
  s.real("lr", t.lr);
  s.real("beta1", t.beta1);
  s.real("beta2", t.beta2);
  s.real("adam_eps", t.adam_eps);
  s.count("n_disc", t.n_disc);
  s.enumeration("loss_mode", [&](const std::string& v) { t.loss_mode = parse_loss_mode(v); });
  s.enumeration("batch_mode", [&](const std::string& v) { t.batch_mode = parse_batch_mode(v); });
  s.enumeration("separate_bn", [&](const std::string& v) { t.bn_mode = parse_bn_mode(v); });
  s.count("eval_every", t.eval_every);
  s.count("checkpoint_every", cfg.checkpoint_every);
}

void parse_noise(const Section& s, NoiseModel& n) {
  s.reject_unknown({"kind", "sigma0", "lambda", "noisy_only"});
  s.enumeration("kind", [&](const std::string& v) { n.kind = parse_noise_kind(v); });
  s.real("sigma0", n.sigma0);
  s.real("lambda", n.lambda);
  s.boolean("noisy_only", n.noisy_only);
}

void parse_metrics(const Section& s, EvalConfig& e) {
  s.reject_unknown({"eval_samples", "bins", "range", "smoothing", "min_count", "record_wall_time"});
  s.count("eval_samples", e.eval_samples);
  s.count("bins", e.bins);
  if (const Json* r = s.find("range")) {
    if (!r->is_array() || r->size() != 2 || !(*r)[0].is_number() || !(*r)[1].is_number()) {
      throw ConfigError(s.field("range") + " must be an array [lo, hi] of two numbers");
    }
    e.range = {(*r)[0].get<double>(), (*r)[1].get<double>()};
  }
  s.real("smoothing", e.smoothing);
  s.count("min_count", e.min_count);
  s.boolean("record_wall_time", e.record_wall_time);
}

}  // namespace

void RunConfig::validate() const {
  dataset.validate();
  model.validate();
  if (model.data_dim != dataset.data_dim()) {
    throw ConfigError("model.data_dim must match the dataset dimension");
  }
  train.validate();
  metrics.validate();
  // Every batch that passes through a batchnorm layer in train mode needs two rows.
  const std::size_t noisy = noisy_rows(train.batch, train.batch_mode, train.noise.noisy_only);
  const std::size_t clean =
      train.noise.noisy_only ? 0
                             : train.batch - (train.batch_mode == BatchMode::half_batch ? noisy : 0);
  const bool d_split = model.discriminator_batchnorm && train.bn_mode == BnMode::per_branch;
  if (((model.generator_batchnorm || model.discriminator_batchnorm) && train.batch < 2) ||
      (train.noise.kind == NoiseKind::generator_network && noisy < 2) ||
      (d_split && (noisy == 1 || clean == 1))) {
    throw ConfigError("train.batch is too small for batchnorm (each normalized batch needs >= 2 rows)");
  }
}

RunConfig parse_config(std::string_view document) {
  Json root;
  bool blank = true;
  for (char c : document) {
    if (!std::isspace(static_cast<unsigned char>(c))) {
      blank = false;
      break;
    }
  }
  if (blank) {
    root = Json::object();
  } else {
    try {
      root = Json::parse(document.begin(), document.end());
    } catch (const Json::parse_error& e) {
      throw ConfigError("config parse error at " + line_context(document, e.byte) + ": " +
                        e.what());
    }
  }

  RunConfig cfg;
  const Section top(root, "");
  top.reject_unknown({"seed", "dataset", "model", "train", "noise", "metrics"});
  top.u64("seed", cfg.train.seed);
  if (const Json* v = top.find("dataset")) parse_dataset(Section(*v, "dataset"), cfg.dataset);
  if (const Json* v = top.find("model")) parse_model(Section(*v, "model"), cfg.model);
  if (const Json* v = top.find("train")) parse_train(Section(*v, "train"), cfg);
  if (const Json* v = top.find("noise")) parse_noise(Section(*v, "noise"), cfg.train.noise);
  if (const Json* v = top.find("metrics")) parse_metrics(Section(*v, "metrics"), cfg.metrics);
  cfg.model.data_dim = cfg.dataset.data_dim();
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void apply_seed_override(RunConfig& cfg, const char* value) {
  if (value == nullptr) return;
  const std::string_view text(value);
  std::uint64_t seed = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), seed);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("DFGAN_SEED must be a non-negative integer, got '" + std::string(text) + "'");
  }
  cfg.train.seed = seed;
}

nlohmann::ordered_json config_to_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["seed"] = cfg.train.seed;
  j["dataset"] = {{"kind", to_string(cfg.dataset.kind)},
                  {"k", cfg.dataset.k},
                  {"radius", cfg.dataset.radius},
                  {"mode_std", cfg.dataset.mode_std},
                  {"n", cfg.dataset.n},
                  {"seed", cfg.dataset.seed}};
  j["model"] = {{"latent_dim", cfg.model.latent_dim},
                {"hidden_width", cfg.model.hidden_width},
                {"hidden_layers", cfg.model.hidden_layers},
                {"noise_width_divisor", cfg.model.noise_width_divisor},
                {"generator_batchnorm", cfg.model.generator_batchnorm},
                {"discriminator_batchnorm", cfg.model.discriminator_batchnorm}};
  const TrainConfig& t = cfg.train;
  j["train"] = {{"iters", t.iters},
                {"batch", t.batch},
                {"lr", t.lr},
                {"beta1", t.beta1},
                {"beta2", t.beta2},
                {"adam_eps", t.adam_eps},
                {"n_disc", t.n_disc},
                {"loss_mode", to_string(t.loss_mode)},
                {"batch_mode", to_string(t.batch_mode)},
                {"separate_bn", to_string(t.bn_mode)},
                {"eval_every", t.eval_every},
                {"checkpoint_every", cfg.checkpoint_every}};
  j["noise"] = {{"kind", to_string(t.noise.kind)},
                {"sigma0", t.noise.sigma0},
                {"lambda", t.noise.lambda},
                {"noisy_only", t.noise.noisy_only}};
  const EvalConfig& e = cfg.metrics;
  j["metrics"] = {{"eval_samples", e.eval_samples},
                  {"bins", e.bins},
                  {"range", {e.range.lo, e.range.hi}},
                  {"smoothing", e.smoothing},
                  {"min_count", e.min_count},
                  {"record_wall_time", e.record_wall_time}};
  return j;
}

std::string normalized_config(const RunConfig& cfg) { return config_to_json(cfg).dump(2) + "\n"; }

TrainData make_train_data(const RunConfig& cfg) {
  TrainData data;
  data.train = generate(cfg.dataset);
  MixtureSpec held = cfg.dataset;
  held.seed = mix_seed(cfg.dataset.seed, 0x68656c64);
  held.n = cfg.metrics.eval_samples;
  data.heldout = generate(held).samples;
  return data;
}

}  // namespace dfgan
