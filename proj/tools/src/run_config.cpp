#include "run_config.hpp"

#include <fstream>

#include "ratex/checkpoint.hpp"

namespace ratex::cli {

void RunConfig::validate() const {
  try {
    model.validate();
    train.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("invalid config: ") + e.what());
  }
  if (vocab_size == 0) throw UsageError("invalid config: vocab_size must be positive");
  if (bench_epochs == 0) throw UsageError("invalid config: bench_epochs must be positive");
}

nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["train_path"] = c.train_path.string();
  j["dev_path"] = c.dev_path.string();
  j["test_path"] = c.test_path.string();
  j["out_dir"] = c.out_dir.string();
  j["vocab_size"] = c.vocab_size;
  j["variant"] = to_string(c.model.variant);
  j["h"] = c.model.encoder.h;
  j["n_layers"] = c.model.encoder.n_layers;
  j["n_heads"] = c.model.encoder.n_heads;
  j["max_sentence_len"] = c.model.encoder.max_sentence_len;
  j["window"] = c.model.encoder.window;
  j["ffn_width"] = c.model.encoder.ffn_width;
  j["use_positional"] = c.model.encoder.use_positional;
  j["h_prime"] = c.model.head.h_prime;
  j["s"] = c.model.head.s;
  j["beta"] = c.model.head.beta;
  j["gamma"] = c.model.head.gamma;
  j["gamma_ranked"] = c.model.head.gamma_ranked;
  j["k"] = c.model.head.k;
  j["epochs"] = c.train.epochs;
  j["learning_rate"] = c.train.learning_rate;
  j["batch_size"] = c.train.batch_size;
  j["optimizer"] = to_string(c.train.optimizer);
  j["seed"] = c.train.seed;
  j["repeats"] = c.train.repeats;
  auto variants = nlohmann::ordered_json::array();
  for (auto v : c.bench_variants) variants.push_back(to_string(v));
  j["bench_variants"] = variants;
  j["bench_epochs"] = c.bench_epochs;
  j["bench_max_docs"] = c.bench_max_docs;
  return j;
}

RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  RunConfig c;
  const auto known = to_json(c);
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw UsageError("unknown config field '" + key + "'");
  }
  auto path = [&](const char* key, std::filesystem::path& field) {
    if (!j.contains(key)) return;
    std::filesystem::path p = j.at(key).get<std::string>();
    field = (p.empty() || p.is_absolute() || base_dir.empty()) ? p : base_dir / p;
  };
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
    };
    path("train_path", c.train_path);
    path("dev_path", c.dev_path);
    path("test_path", c.test_path);
    path("out_dir", c.out_dir);
    get("vocab_size", c.vocab_size);
    if (j.contains("variant")) c.model.variant = parse_variant(j.at("variant").get<std::string>());
    get("h", c.model.encoder.h);
    get("n_layers", c.model.encoder.n_layers);
    get("n_heads", c.model.encoder.n_heads);
    get("max_sentence_len", c.model.encoder.max_sentence_len);
    get("window", c.model.encoder.window);
    get("ffn_width", c.model.encoder.ffn_width);
    get("use_positional", c.model.encoder.use_positional);
    get("h_prime", c.model.head.h_prime);
    get("s", c.model.head.s);
    get("beta", c.model.head.beta);
    get("gamma", c.model.head.gamma);
    get("gamma_ranked", c.model.head.gamma_ranked);
    get("k", c.model.head.k);
    get("epochs", c.train.epochs);
    get("learning_rate", c.train.learning_rate);
    get("batch_size", c.train.batch_size);
    if (j.contains("optimizer")) c.train.optimizer = parse_optimizer(j.at("optimizer").get<std::string>());
    get("seed", c.train.seed);
    get("repeats", c.train.repeats);
    if (j.contains("bench_variants")) {
      for (const auto& v : j.at("bench_variants")) c.bench_variants.push_back(parse_variant(v.get<std::string>()));
    }
    get("bench_epochs", c.bench_epochs);
    get("bench_max_docs", c.bench_max_docs);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("bad config value: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  c.model.head.loss = loss_variant(c.model.variant);
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return run_config_from_json(j, path.parent_path());
}

void apply(RunConfig& c, const Overrides& o) {
  if (o.seed) c.train.seed = *o.seed;
  if (o.k) c.model.head.k = *o.k;
  if (o.beta) c.model.head.beta = *o.beta;
  if (o.gamma) c.model.head.gamma = *o.gamma;
  if (o.gamma_ranked) c.model.head.gamma_ranked = *o.gamma_ranked;
  if (o.variant) {
    try {
      c.model.variant = parse_variant(*o.variant);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    c.model.head.loss = loss_variant(c.model.variant);
  }
  if (o.out) c.out_dir = *o.out;
}

std::string config_hash(const RunConfig& cfg) {
  auto j = to_json(cfg);
  j.erase("out_dir");
  return hex64(fnv1a(j.dump()));
}

}  // namespace ratex::cli
