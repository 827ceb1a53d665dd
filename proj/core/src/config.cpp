#include "fedsel/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fedsel/errors.hpp"
#include "fedsel/sha256.hpp"

namespace fedsel {

using json = nlohmann::json;

std::string_view to_string(PartitionScheme scheme) {
  switch (scheme) {
    case PartitionScheme::Iid: return "IID";
    case PartitionScheme::ClassNonIid: return "ClassNonIID";
    case PartitionScheme::QuantitySkew: return "QuantitySkew";
  }
  return "?";
}

std::string_view to_string(VolatilityMode mode) {
  switch (mode) {
    case VolatilityMode::Static: return "Static";
    case VolatilityMode::Volatile: return "Volatile";
  }
  return "?";
}

std::string_view to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::Random: return "Random";
    case StrategyKind::CompGreedy: return "CompGreedy";
    case StrategyKind::CommGreedy: return "CommGreedy";
    case StrategyKind::Rbff: return "RBFF";
    case StrategyKind::Rbcsf: return "RBCSF";
  }
  return "?";
}

std::string_view to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::Synthetic: return "Synthetic";
    case DatasetKind::Idx: return "IDX";
    case DatasetKind::Cifar10Binary: return "Cifar10Binary";
  }
  return "?";
}

PartitionScheme parse_partition_scheme(std::string_view name) {
  if (name == "IID") return PartitionScheme::Iid;
  if (name == "ClassNonIID") return PartitionScheme::ClassNonIid;
  if (name == "QuantitySkew") return PartitionScheme::QuantitySkew;
  throw ConfigError("unknown partition scheme '" + std::string(name) + "'");
}

VolatilityMode parse_volatility_mode(std::string_view name) {
  if (name == "Static") return VolatilityMode::Static;
  if (name == "Volatile") return VolatilityMode::Volatile;
  throw ConfigError("unknown volatility mode '" + std::string(name) + "'");
}

StrategyKind parse_strategy_kind(std::string_view name) {
  if (name == "Random") return StrategyKind::Random;
  if (name == "CompGreedy") return StrategyKind::CompGreedy;
  if (name == "CommGreedy") return StrategyKind::CommGreedy;
  if (name == "RBFF") return StrategyKind::Rbff;
  if (name == "RBCSF") return StrategyKind::Rbcsf;
  throw ConfigError("unknown strategy '" + std::string(name) + "'");
}

DatasetKind parse_dataset_kind(std::string_view name) {
  if (name == "Synthetic") return DatasetKind::Synthetic;
  if (name == "IDX") return DatasetKind::Idx;
  if (name == "Cifar10Binary") return DatasetKind::Cifar10Binary;
  throw ConfigError("unknown dataset kind '" + std::string(name) + "'");
}

namespace {

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& context) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw ConfigError("unknown key '" + item.key() + "' in " + context);
    }
  }
}

double get_number(const json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(std::string(key) + " must be a number");
  return v.get<double>();
}

std::uint64_t get_uint(const json& obj, const char* key, std::uint64_t fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer() || (v.is_number_integer() && v.is_number_unsigned() == false &&
                                 v.get<std::int64_t>() < 0)) {
    throw ConfigError(std::string(key) + " must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

Range get_range(const json& obj, const char* key, Range fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw ConfigError(std::string(key) + " must be a [min, max] number pair");
  }
  return Range{v[0].get<double>(), v[1].get<double>()};
}

PartitionConfig parse_partition(const json& v) {
  PartitionConfig p;
  if (v.is_string()) {
    p.scheme = parse_partition_scheme(v.get<std::string>());
    return p;
  }
  if (!v.is_object() || !v.contains("scheme")) {
    throw ConfigError("partition must be a scheme name or an object with 'scheme'");
  }
  reject_unknown_keys(v, {"scheme", "classes_per_client", "dirichlet_alpha"}, "partition");
  p.scheme = parse_partition_scheme(v.at("scheme").get<std::string>());
  p.classes_per_client =
      static_cast<std::uint32_t>(get_uint(v, "classes_per_client", p.classes_per_client));
  p.dirichlet_alpha = get_number(v, "dirichlet_alpha", p.dirichlet_alpha);
  return p;
}

StrategyOptions parse_strategy(const json& v) {
  StrategyOptions s;
  if (v.is_string()) {
    s.kind = parse_strategy_kind(v.get<std::string>());
    return s;
  }
  if (!v.is_object() || !v.contains("kind")) {
    throw ConfigError("strategy must be a kind name or an object with 'kind'");
  }
  reject_unknown_keys(v, {"kind", "alpha", "normalize_reputation"}, "strategy");
  s.kind = parse_strategy_kind(v.at("kind").get<std::string>());
  if (v.contains("alpha")) {
    if (!v.at("alpha").is_number()) throw ConfigError("strategy alpha must be a number");
    s.alpha = v.at("alpha").get<double>();
  }
  if (v.contains("normalize_reputation")) {
    if (!v.at("normalize_reputation").is_boolean()) {
      throw ConfigError("normalize_reputation must be a boolean");
    }
    s.normalize_reputation = v.at("normalize_reputation").get<bool>();
  }
  return s;
}

DatasetConfig parse_dataset(const json& v) {
  DatasetConfig d;
  if (v.is_string()) {
    d.kind = parse_dataset_kind(v.get<std::string>());
    return d;
  }
  if (!v.is_object() || !v.contains("kind")) {
    throw ConfigError("dataset must be a kind name or an object with 'kind'");
  }
  d.kind = parse_dataset_kind(v.at("kind").get<std::string>());
  switch (d.kind) {
    case DatasetKind::Synthetic: {
      reject_unknown_keys(
          v, {"kind", "n_samples", "n_features", "n_classes", "class_separation"},
          "dataset");
      d.synthetic.n_samples = get_uint(v, "n_samples", d.synthetic.n_samples);
      d.synthetic.n_features =
          static_cast<std::uint32_t>(get_uint(v, "n_features", d.synthetic.n_features));
      d.synthetic.n_classes =
          static_cast<std::uint32_t>(get_uint(v, "n_classes", d.synthetic.n_classes));
      d.synthetic.class_separation =
          get_number(v, "class_separation", d.synthetic.class_separation);
      break;
    }
    case DatasetKind::Idx: {
      reject_unknown_keys(v, {"kind", "images", "labels"}, "dataset");
      if (!v.contains("images") || !v.contains("labels")) {
        throw ConfigError("IDX dataset requires 'images' and 'labels' paths");
      }
      d.idx.images = v.at("images").get<std::string>();
      d.idx.labels = v.at("labels").get<std::string>();
      break;
    }
    case DatasetKind::Cifar10Binary: {
      reject_unknown_keys(v, {"kind", "files"}, "dataset");
      if (!v.contains("files") || !v.at("files").is_array()) {
        throw ConfigError("Cifar10Binary dataset requires a 'files' array");
      }
      for (const auto& f : v.at("files")) {
        d.cifar_files.push_back(f.get<std::string>());
      }
      break;
    }
  }
  return d;
}

json partition_to_json(const PartitionConfig& p) {
  json v;
  v["scheme"] = std::string(to_string(p.scheme));
  if (p.scheme == PartitionScheme::ClassNonIid) {
    v["classes_per_client"] = p.classes_per_client;
  }
  if (p.scheme == PartitionScheme::QuantitySkew) {
    v["dirichlet_alpha"] = p.dirichlet_alpha;
  }
  return v;
}

json strategy_to_json(const StrategyOptions& s) {
  json v;
  v["kind"] = std::string(to_string(s.kind));
  v["normalize_reputation"] = s.normalize_reputation;
  if (s.kind == StrategyKind::Rbcsf) {
    if (s.alpha.has_value()) {
      v["alpha"] = *s.alpha;
    } else {
      v["alpha"] = nullptr;
    }
  }
  return v;
}

json dataset_to_json(const DatasetConfig& d) {
  json v;
  v["kind"] = std::string(to_string(d.kind));
  switch (d.kind) {
    case DatasetKind::Synthetic:
      v["n_samples"] = d.synthetic.n_samples;
      v["n_features"] = d.synthetic.n_features;
      v["n_classes"] = d.synthetic.n_classes;
      v["class_separation"] = d.synthetic.class_separation;
      break;
    case DatasetKind::Idx:
      v["images"] = d.idx.images;
      v["labels"] = d.idx.labels;
      break;
    case DatasetKind::Cifar10Binary:
      v["files"] = d.cifar_files;
      break;
  }
  return v;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config root must be a JSON object");
  reject_unknown_keys(root,
                      {"num_clients", "selection_ratio", "rounds", "local_epochs",
                       "learning_rate", "batch_size", "partition", "volatility",
                       "comp_range", "comm_range", "strategy", "model_size_bits",
                       "hidden_units", "seed", "dataset"},
                      "config");

  ExperimentConfig cfg;
  cfg.num_clients = static_cast<std::uint32_t>(get_uint(root, "num_clients", cfg.num_clients));
  cfg.selection_ratio = get_number(root, "selection_ratio", cfg.selection_ratio);
  cfg.rounds = static_cast<std::uint32_t>(get_uint(root, "rounds", cfg.rounds));
  cfg.local_epochs = static_cast<std::uint32_t>(get_uint(root, "local_epochs", cfg.local_epochs));
  cfg.learning_rate = get_number(root, "learning_rate", cfg.learning_rate);
  cfg.batch_size = static_cast<std::uint32_t>(get_uint(root, "batch_size", cfg.batch_size));
  if (root.contains("partition")) cfg.partition = parse_partition(root.at("partition"));
  if (root.contains("volatility")) {
    cfg.volatility = parse_volatility_mode(root.at("volatility").get<std::string>());
  }
  cfg.comp_range = get_range(root, "comp_range", cfg.comp_range);
  cfg.comm_range = get_range(root, "comm_range", cfg.comm_range);
  if (root.contains("strategy")) cfg.strategy = parse_strategy(root.at("strategy"));
  if (root.contains("model_size_bits")) {
    if (root.at("model_size_bits").is_null()) {
      cfg.model_size_bits.reset();
    } else {
      cfg.model_size_bits = get_uint(root, "model_size_bits", 0);
    }
  }
  cfg.hidden_units = static_cast<std::uint32_t>(get_uint(root, "hidden_units", cfg.hidden_units));
  if (root.contains("seed")) {
    const json& s = root.at("seed");
    if (!s.is_number_integer()) throw ConfigError("seed must be an integer");
    // Negative seeds are accepted and reinterpreted as the 64-bit pattern.
    cfg.seed = s.is_number_unsigned() ? s.get<std::uint64_t>()
                                      : static_cast<std::uint64_t>(s.get<std::int64_t>());
  }
  if (root.contains("dataset")) cfg.dataset = parse_dataset(root.at("dataset"));

  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

void ExperimentConfig::validate() const {
  if (num_clients == 0) throw ConfigError("num_clients must be positive");
  if (!(selection_ratio > 0.0) || selection_ratio > 1.0) {
    throw ConfigError("selection_ratio must be in (0, 1]");
  }
  if (rounds == 0) throw ConfigError("rounds must be positive");
  if (local_epochs == 0) throw ConfigError("local_epochs must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(comp_range.min > 0.0) || comp_range.min > comp_range.max) {
    throw ConfigError("comp_range must satisfy 0 < min <= max");
  }
  if (!(comm_range.min > 0.0) || comm_range.min > comm_range.max) {
    throw ConfigError("comm_range must satisfy 0 < min <= max");
  }
  if (partition.scheme == PartitionScheme::ClassNonIid && partition.classes_per_client == 0) {
    throw ConfigError("classes_per_client must be >= 1");
  }
  if (partition.scheme == PartitionScheme::QuantitySkew && !(partition.dirichlet_alpha > 0.0)) {
    throw ConfigError("dirichlet_alpha must be positive");
  }
  if (strategy.alpha.has_value() && *strategy.alpha < 0.0) {
    throw ConfigError("strategy alpha must be >= 0");
  }
  if (model_size_bits.has_value() && *model_size_bits == 0) {
    throw ConfigError("model_size_bits must be positive when given");
  }
  if (dataset.kind == DatasetKind::Synthetic) {
    const SyntheticSpec& s = dataset.synthetic;
    if (s.n_classes < 2) throw ConfigError("synthetic n_classes must be >= 2");
    if (s.n_features == 0) throw ConfigError("synthetic n_features must be positive");
    if (s.n_samples < s.n_classes) {
      throw ConfigError("synthetic n_samples must be >= n_classes");
    }
    if (!(s.class_separation >= 0.0)) {
      throw ConfigError("class_separation must be non-negative");
    }
    if (partition.scheme == PartitionScheme::ClassNonIid &&
        partition.classes_per_client > s.n_classes) {
      throw ConfigError("classes_per_client exceeds dataset class count");
    }
  }
  if (dataset.kind == DatasetKind::Cifar10Binary && dataset.cifar_files.empty()) {
    throw ConfigError("Cifar10Binary requires at least one file");
  }
}

std::string ExperimentConfig::canonical_json() const {
  json root;
  root["num_clients"] = num_clients;
  root["selection_ratio"] = selection_ratio;
  root["rounds"] = rounds;
  root["local_epochs"] = local_epochs;
  root["learning_rate"] = learning_rate;
  root["batch_size"] = batch_size;
  root["partition"] = partition_to_json(partition);
  root["volatility"] = std::string(to_string(volatility));
  root["comp_range"] = {comp_range.min, comp_range.max};
  root["comm_range"] = {comm_range.min, comm_range.max};
  root["strategy"] = strategy_to_json(strategy);
  if (model_size_bits.has_value()) {
    root["model_size_bits"] = *model_size_bits;
  } else {
    root["model_size_bits"] = nullptr;
  }
  root["hidden_units"] = hidden_units;
  root["seed"] = seed;
  root["dataset"] = dataset_to_json(dataset);
  return root.dump();  // nlohmann::json orders keys lexicographically
}

std::string ExperimentConfig::fingerprint() const {
  return sha256_hex(canonical_json()).substr(0, 16);
}

std::uint32_t cohort_size(std::uint32_t num_clients, double selection_ratio) {
  // 0.4 * 50 evaluates to 20.000000000000004; nudge below before the ceiling
  // so exact products round the intended way.
  double k = std::ceil(selection_ratio * static_cast<double>(num_clients) - 1e-9);
  if (k < 1.0) return 1;
  if (k > static_cast<double>(num_clients)) return num_clients;
  return static_cast<std::uint32_t>(k);
}

}  // namespace fedsel
