#include "fedsel/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "fedsel/errors.hpp"
#include "fedsel/logging.hpp"
#include "fedsel/model.hpp"

namespace fedsel {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

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

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

int strategy_order(StrategyKind kind) { return static_cast<int>(kind); }
int partition_order(PartitionScheme scheme) { return static_cast<int>(scheme); }
int volatility_order(VolatilityMode mode) { return static_cast<int>(mode); }

}  // namespace

SweepSpec SweepSpec::from_json_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("sweep spec is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("sweep spec root must be a JSON object");
  reject_unknown_keys(root,
                      {"base", "strategies", "partitions", "volatilities",
                       "client_counts", "ratios", "seeds"},
                      "sweep spec");

  SweepSpec spec;
  if (root.contains("base")) {
    spec.base = ExperimentConfig::from_json_text(root.at("base").dump());
  }
  if (root.contains("strategies")) {
    for (const auto& v : root.at("strategies")) {
      // Reuse the config parser for each entry by wrapping it in a config.
      json wrapper;
      wrapper["strategy"] = v;
      spec.strategies.push_back(
          ExperimentConfig::from_json_text(wrapper.dump()).strategy);
    }
  }
  if (root.contains("partitions")) {
    for (const auto& v : root.at("partitions")) {
      json wrapper;
      wrapper["partition"] = v;
      spec.partitions.push_back(
          ExperimentConfig::from_json_text(wrapper.dump()).partition);
    }
  }
  if (root.contains("volatilities")) {
    for (const auto& v : root.at("volatilities")) {
      spec.volatilities.push_back(parse_volatility_mode(v.get<std::string>()));
    }
  }
  if (root.contains("client_counts")) {
    for (const auto& v : root.at("client_counts")) {
      spec.client_counts.push_back(v.get<std::uint32_t>());
    }
  }
  if (root.contains("ratios")) {
    for (const auto& v : root.at("ratios")) {
      spec.ratios.push_back(v.get<double>());
    }
  }
  if (root.contains("seeds")) {
    for (const auto& v : root.at("seeds")) {
      spec.seeds.push_back(v.is_number_unsigned()
                               ? v.get<std::uint64_t>()
                               : static_cast<std::uint64_t>(v.get<std::int64_t>()));
    }
  }
  return spec;
}

SweepSpec SweepSpec::from_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open sweep spec: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

std::vector<ExperimentConfig> SweepSpec::expand() const {
  auto strategies = this->strategies;
  if (strategies.empty()) strategies.push_back(base.strategy);
  auto partitions = this->partitions;
  if (partitions.empty()) partitions.push_back(base.partition);
  auto volatilities = this->volatilities;
  if (volatilities.empty()) volatilities.push_back(base.volatility);
  auto client_counts = this->client_counts;
  if (client_counts.empty()) client_counts.push_back(base.num_clients);
  auto ratios = this->ratios;
  if (ratios.empty()) ratios.push_back(base.selection_ratio);
  auto seeds = this->seeds;
  if (seeds.empty()) seeds.push_back(base.seed);

  std::vector<ExperimentConfig> configs;
  for (VolatilityMode volatility : volatilities) {
    for (const PartitionConfig& partition : partitions) {
      for (const StrategyOptions& strategy : strategies) {
        for (std::uint32_t clients : client_counts) {
          for (double ratio : ratios) {
            for (std::uint64_t seed : seeds) {
              ExperimentConfig cfg = base;
              cfg.volatility = volatility;
              cfg.partition = partition;
              cfg.strategy = strategy;
              cfg.num_clients = clients;
              cfg.selection_ratio = ratio;
              cfg.seed = seed;
              // Not validated here: a bad cell fails inside run_sweep and is
              // recorded without sinking its siblings.
              configs.push_back(std::move(cfg));
            }
          }
        }
      }
    }
  }
  return configs;
}

RunSummary summarize_run(const ExperimentConfig& config, const RunOutput& output) {
  RunSummary s;
  s.fingerprint = config.fingerprint();
  s.config = config;
  s.rounds = output.rounds;
  const RoundRecord& last = output.rounds.back();
  s.final_accuracy = last.global_accuracy;
  s.final_jfi = last.jfi;
  s.final_time_ks = last.cumulative_time_s / 1000.0;
  s.final_auc_macro = last.auc_macro;
  s.final_auc_micro = last.auc_micro;
  return s;
}

std::string run_summary_json(const RunSummary& summary) {
  ordered_json doc;
  doc["fingerprint"] = summary.fingerprint;
  doc["config"] = json::parse(summary.config.canonical_json());
  doc["final_accuracy"] = summary.final_accuracy;
  doc["final_jfi"] = summary.final_jfi;
  doc["final_time_ks"] = summary.final_time_ks;
  doc["final_auc_macro"] = summary.final_auc_macro;
  doc["final_auc_micro"] = summary.final_auc_micro;
  ordered_json rounds = ordered_json::array();
  for (const RoundRecord& r : summary.rounds) {
    ordered_json row;
    row["round"] = r.round;
    row["selected"] = r.selected;
    row["round_time_s"] = r.round_time_s;
    row["cumulative_time_s"] = r.cumulative_time_s;
    row["accuracy"] = r.global_accuracy;
    row["loss"] = r.global_loss;
    row["jfi"] = r.jfi;
    row["auc_macro"] = r.auc_macro;
    row["auc_micro"] = r.auc_micro;
    rounds.push_back(std::move(row));
  }
  doc["rounds"] = std::move(rounds);
  return doc.dump(2) + "\n";
}

std::string emit_series(std::span<const RunSummary> summaries) {
  std::vector<const RunSummary*> order;
  order.reserve(summaries.size());
  for (const RunSummary& s : summaries) order.push_back(&s);
  std::sort(order.begin(), order.end(), [](const RunSummary* a, const RunSummary* b) {
    return a->fingerprint < b->fingerprint;
  });

  std::string out;
  for (const RunSummary* s : order) {
    for (const RoundRecord& r : s->rounds) {
      ordered_json line;
      line["fingerprint"] = s->fingerprint;
      line["strategy"] = std::string(to_string(s->config.strategy.kind));
      line["partition"] = std::string(to_string(s->config.partition.scheme));
      line["volatility"] = std::string(to_string(s->config.volatility));
      line["round"] = r.round;
      line["loss"] = r.global_loss;
      line["accuracy"] = r.global_accuracy;
      line["jfi"] = r.jfi;
      line["cum_time_s"] = r.cumulative_time_s;
      out += line.dump();
      out += '\n';
    }
  }
  return out;
}

namespace {

struct GroupKey {
  int volatility = 0;
  int strategy = 0;
  int partition = 0;
  std::uint32_t clients = 0;
  std::uint64_t ratio_bits = 0;

  auto operator<=>(const GroupKey&) const = default;
};

std::uint64_t double_bits(double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  return bits;
}

}  // namespace

std::string emit_table(std::span<const RunSummary> summaries,
                       std::span<const std::string> group_by) {
  if (summaries.empty()) throw EmptyGroup("emit_table: no run summaries");

  bool by_clients = false;
  bool by_ratio = false;
  for (const std::string& key : group_by) {
    if (key == "resource_mode" || key == "strategy" || key == "partition") {
      continue;  // always emitted
    } else if (key == "num_clients") {
      by_clients = true;
    } else if (key == "selection_ratio") {
      by_ratio = true;
    } else {
      throw ConfigError("emit_table: unsupported group key '" + key + "'");
    }
  }

  struct Cell {
    const RunSummary* first = nullptr;
    double acc = 0, time_ks = 0, jfi = 0, auc_macro = 0, auc_micro = 0;
    std::size_t n = 0;
  };
  std::map<GroupKey, Cell> cells;  // key order fixes the row order

  for (const RunSummary& s : summaries) {
    GroupKey key;
    key.volatility = volatility_order(s.config.volatility);
    key.strategy = strategy_order(s.config.strategy.kind);
    key.partition = partition_order(s.config.partition.scheme);
    if (by_clients) key.clients = s.config.num_clients;
    if (by_ratio) key.ratio_bits = double_bits(s.config.selection_ratio);
    Cell& cell = cells[key];
    cell.first = cell.first ? cell.first : &s;
    cell.acc += s.final_accuracy;
    cell.time_ks += s.final_time_ks;
    cell.jfi += s.final_jfi;
    cell.auc_macro += s.final_auc_macro;
    cell.auc_micro += s.final_auc_micro;
    cell.n += 1;
  }

  std::string out = "resource_mode,strategy,partition";
  if (by_clients) out += ",num_clients";
  if (by_ratio) out += ",selection_ratio";
  out += ",acc,time_ks,jfi,auc_macro,auc_micro\n";
  for (const auto& [key, cell] : cells) {
    double n = static_cast<double>(cell.n);
    out += std::string(to_string(cell.first->config.volatility));
    out += ',';
    out += std::string(to_string(cell.first->config.strategy.kind));
    out += ',';
    out += std::string(to_string(cell.first->config.partition.scheme));
    if (by_clients) {
      out += ',';
      out += std::to_string(key.clients);
    }
    if (by_ratio) {
      out += ',';
      out += format_double(cell.first->config.selection_ratio);
    }
    out += ',';
    out += format_double(cell.acc / n);
    out += ',';
    out += format_double(cell.time_ks / n);
    out += ',';
    out += format_double(cell.jfi / n);
    out += ',';
    out += format_double(cell.auc_macro / n);
    out += ',';
    out += format_double(cell.auc_micro / n);
    out += '\n';
  }
  return out;
}

std::string emit_table(std::span<const RunSummary> summaries) {
  static const std::vector<std::string> kDefault = {"resource_mode", "strategy",
                                                    "partition"};
  return emit_table(summaries, kDefault);
}

SweepResult run_sweep(const SweepSpec& spec, const SweepOptions& options) {
  std::vector<ExperimentConfig> configs = spec.expand();

  fs::path out_dir;
  if (!options.out_dir.empty()) {
    out_dir = options.out_dir;
    fs::create_directories(out_dir / "runs");
  }
  if (!options.checkpoint_dir.empty()) {
    fs::create_directories(options.checkpoint_dir);
  }

  struct Slot {
    bool failed = false;
    RunSummary summary;
    FailedRun failure;
  };
  std::vector<Slot> slots(configs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex io_mutex;

  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= configs.size()) return;
      const ExperimentConfig& cfg = configs[i];
      const std::string fingerprint = cfg.fingerprint();
      try {
        RunOutput output = run_experiment(cfg);
        slots[i].summary = summarize_run(cfg, output);
        if (!options.checkpoint_dir.empty()) {
          save_params(output.final_params,
                      (fs::path(options.checkpoint_dir) / (fingerprint + ".params")).string());
        }
        if (!out_dir.empty()) {
          // Incremental: a crash loses at most the in-flight run.
          write_text_file(out_dir / "runs" / (fingerprint + ".json"),
                          run_summary_json(slots[i].summary));
        }
      } catch (const std::exception& e) {
        slots[i].failed = true;
        slots[i].failure = FailedRun{fingerprint, cfg, e.what()};
        log_error("run " + fingerprint + " failed: " + e.what());
      }
      std::size_t finished = done.fetch_add(1) + 1;
      std::lock_guard<std::mutex> lock(io_mutex);
      log_info("run " + std::to_string(finished) + "/" + std::to_string(configs.size()) +
               " finished (" + fingerprint + ")");
    }
  };

  unsigned thread_count = std::max(1u, options.threads);
  if (thread_count == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(thread_count);
    for (unsigned t = 0; t < thread_count; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  SweepResult result;
  for (Slot& slot : slots) {
    if (slot.failed) {
      result.failures.push_back(std::move(slot.failure));
    } else {
      result.runs.push_back(std::move(slot.summary));
    }
  }
  std::sort(result.runs.begin(), result.runs.end(),
            [](const RunSummary& a, const RunSummary& b) { return a.fingerprint < b.fingerprint; });
  std::sort(result.failures.begin(), result.failures.end(),
            [](const FailedRun& a, const FailedRun& b) { return a.fingerprint < b.fingerprint; });

  if (!out_dir.empty()) {
    if (!result.runs.empty()) {
      // Swept dimensions become extra group columns so figure sweeps stay
      // readable; plain table sweeps keep the canonical 8-column layout.
      std::vector<std::string> group_by = {"resource_mode", "strategy", "partition"};
      bool many_counts = false, many_ratios = false;
      for (const RunSummary& run : result.runs) {
        many_counts |= run.config.num_clients != result.runs[0].config.num_clients;
        many_ratios |= run.config.selection_ratio != result.runs[0].config.selection_ratio;
      }
      if (many_counts) group_by.push_back("num_clients");
      if (many_ratios) group_by.push_back("selection_ratio");
      write_text_file(out_dir / "table.csv", emit_table(result.runs, group_by));
      write_text_file(out_dir / "series.jsonl", emit_series(result.runs));
    }
    if (!result.failures.empty()) {
      std::string lines;
      for (const FailedRun& f : result.failures) {
        ordered_json line;
        line["fingerprint"] = f.fingerprint;
        line["error"] = f.error;
        line["config"] = json::parse(f.config.canonical_json());
        lines += line.dump();
        lines += '\n';
      }
      write_text_file(out_dir / "failures.jsonl", lines);
    }
  }
  return result;
}

}  // namespace fedsel
