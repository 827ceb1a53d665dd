#include <doctest.h>

#include <string>

#include "fedsel/config.hpp"
#include "fedsel/errors.hpp"
#include "fedsel/sha256.hpp"

using namespace fedsel;

TEST_CASE("sha256 matches the published test vectors") {
  CHECK(sha256_hex("") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq") ==
        "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
  // Padding straddles a block boundary at 56+ bytes.
  CHECK(sha256_hex(std::string(55, 'a')) ==
        "9f4390f8d30c2dd92ec9f095b65e2b9ae9b0a925a5258e241c9f1e910f734318");
  CHECK(sha256_hex(std::string(56, 'a')) ==
        "b35439a4ac6f0948b6d6f9e3c6af0f5f590ce20f1bde7090ef7970686ec6738a");
  CHECK(sha256_hex(std::string(64, 'a')) ==
        "ffe054fe7ae0cb6dc65c3af9b61d5209f439851db43d0ba5997337df154668eb");
}

TEST_CASE("cohort_size ceiling and clamps") {
  CHECK(cohort_size(50, 0.40) == 20);
  CHECK(cohort_size(10, 0.05) == 1);
  CHECK(cohort_size(7, 0.5) == 4);
  CHECK(cohort_size(5, 1.0) == 5);
  CHECK(cohort_size(1, 0.01) == 1);
  CHECK(cohort_size(3, 1.0 / 3.0) == 1);
}

TEST_CASE("config defaults mirror the standard training setup") {
  ExperimentConfig cfg = ExperimentConfig::from_json_text("{}");
  CHECK(cfg.num_clients == 50);
  CHECK(cfg.selection_ratio == 0.4);
  CHECK(cfg.rounds == 50);
  CHECK(cfg.local_epochs == 1);
  CHECK(cfg.learning_rate == 0.01);
  CHECK(cfg.batch_size == 32);
  CHECK(cfg.volatility == VolatilityMode::Static);
  CHECK(cfg.strategy.kind == StrategyKind::Random);
  CHECK(cfg.comp_range.min == 50.0);
  CHECK(cfg.comp_range.max == 200.0);
  CHECK(cfg.comm_range.min == 1e5);
  CHECK(cfg.comm_range.max == 5e5);
  CHECK_FALSE(cfg.model_size_bits.has_value());
}

TEST_CASE("unknown keys are a hard error") {
  CHECK_THROWS_AS(ExperimentConfig::from_json_text(R"({"num_client": 10})"), ConfigError);
  CHECK_THROWS_AS(
      ExperimentConfig::from_json_text(R"({"partition": {"scheme": "IID", "classes": 2}})"),
      ConfigError);
  CHECK_THROWS_AS(
      ExperimentConfig::from_json_text(R"({"strategy": {"kind": "RBFF", "alfa": 2}})"),
      ConfigError);
}

TEST_CASE("nested enum parsing") {
  ExperimentConfig cfg = ExperimentConfig::from_json_text(R"({
    "partition": {"scheme": "ClassNonIID", "classes_per_client": 2},
    "strategy": {"kind": "RBCSF", "alpha": 3.5, "normalize_reputation": true},
    "volatility": "Volatile",
    "dataset": {"kind": "Synthetic", "n_samples": 500, "n_classes": 5}
  })");
  CHECK(cfg.partition.scheme == PartitionScheme::ClassNonIid);
  CHECK(cfg.partition.classes_per_client == 2);
  CHECK(cfg.strategy.kind == StrategyKind::Rbcsf);
  CHECK(cfg.strategy.alpha == 3.5);
  CHECK(cfg.strategy.normalize_reputation);
  CHECK(cfg.volatility == VolatilityMode::Volatile);
  CHECK(cfg.dataset.synthetic.n_samples == 500);
  CHECK(cfg.dataset.synthetic.n_classes == 5);

  // String shorthand for parameterless kinds.
  ExperimentConfig shorthand = ExperimentConfig::from_json_text(
      R"({"partition": "QuantitySkew", "strategy": "CompGreedy"})");
  CHECK(shorthand.partition.scheme == PartitionScheme::QuantitySkew);
  CHECK(shorthand.strategy.kind == StrategyKind::CompGreedy);
}

TEST_CASE("invariant violations are rejected") {
  CHECK_THROWS_AS(ExperimentConfig::from_json_text(R"({"selection_ratio": 0})"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json_text(R"({"selection_ratio": 1.5})"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json_text(R"({"comp_range": [0, 10]})"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json_text(R"({"comp_range": [10, 5]})"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json_text(R"({"rounds": 0})"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json_text(R"({"model_size_bits": 0})"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json_text(
                      R"({"dataset": {"kind": "Cifar10Binary", "files": []}})"),
                  ConfigError);
  CHECK_THROWS_AS(
      ExperimentConfig::from_json_text(
          R"({"partition": {"scheme": "ClassNonIID", "classes_per_client": 99}})"),
      ConfigError);
}

TEST_CASE("fingerprints separate configs and ignore nothing") {
  ExperimentConfig a = ExperimentConfig::from_json_text(R"({"seed": 1})");
  ExperimentConfig b = ExperimentConfig::from_json_text(R"({"seed": 2})");
  ExperimentConfig c = ExperimentConfig::from_json_text(R"({"seed": 1})");
  CHECK(a.fingerprint() == c.fingerprint());
  CHECK(a.fingerprint() != b.fingerprint());
  CHECK(a.canonical_json() == c.canonical_json());

  ExperimentConfig d = a;
  d.learning_rate = 0.02;
  CHECK(a.fingerprint() != d.fingerprint());
}

TEST_CASE("enum names round-trip") {
  for (auto kind : {StrategyKind::Random, StrategyKind::CompGreedy, StrategyKind::CommGreedy,
                    StrategyKind::Rbff, StrategyKind::Rbcsf}) {
    CHECK(parse_strategy_kind(to_string(kind)) == kind);
  }
  for (auto scheme : {PartitionScheme::Iid, PartitionScheme::ClassNonIid,
                      PartitionScheme::QuantitySkew}) {
    CHECK(parse_partition_scheme(to_string(scheme)) == scheme);
  }
}
