#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "foresight/jsonl.hpp"

namespace foresight {

inline constexpr const char* kAuthTokenEnv = "FORESIGHT_API_TOKEN";

struct RunOptions {
  std::optional<std::filesystem::path> out_dir;  // overrides config "out_dir"
  std::optional<std::uint64_t> seed_override;    // replaces every stage seed
  std::optional<int> workers;                    // overrides config "workers"
};

// Declarative run configuration: one JSON object with a section per stage.
// Every stage that consumes randomness must carry an explicit integer
// "seed"; a missing seed is a ConfigError.
class RunConfig {
 public:
  RunConfig(json document, const RunOptions& options = {});
  static RunConfig load(const std::filesystem::path& path, const RunOptions& options = {});

  const json& document() const noexcept { return doc_; }
  const json& section(std::string_view stage) const;
  std::uint64_t seed(std::string_view stage) const;
  const std::filesystem::path& out_dir() const noexcept { return out_dir_; }
  int workers() const noexcept { return workers_; }

  // Hash over the stage's own section and the hashes of its upstream stages,
  // so any upstream edit changes every downstream hash.
  std::string stage_hash(std::string_view stage) const;
  std::vector<std::string> upstream_stages(std::string_view stage) const;

 private:
  json doc_;
  std::filesystem::path out_dir_;
  int workers_ = 1;
};

// A documented default configuration for the synthetic pipeline.
json default_config();

// Artifact locations under the output directory.
struct ArtifactPaths {
  std::filesystem::path root;

  std::filesystem::path notes() const { return root / "corpus" / "notes.jsonl"; }
  std::filesystem::path tracks() const { return root / "corpus" / "tracks.jsonl"; }
  std::filesystem::path examples() const { return root / "forge" / "examples.jsonl"; }
  std::filesystem::path train_examples() const { return root / "forge" / "train.jsonl"; }
  std::filesystem::path test_examples() const { return root / "forge" / "test.jsonl"; }
  std::filesystem::path splits() const { return root / "forge" / "splits.jsonl"; }
  std::filesystem::path forge_stats() const { return root / "forge" / "stats.json"; }
  std::filesystem::path checkpoint() const { return root / "train" / "checkpoint.json"; }
  std::filesystem::path reward_trace() const { return root / "train" / "reward_trace.csv"; }
  std::filesystem::path predictions(const std::string& model) const {
    return root / "predictions" / (model + ".jsonl");
  }
  std::filesystem::path predict_summary() const { return root / "predictions" / "summary.json"; }
  std::filesystem::path metrics(const std::string& model) const {
    return root / "eval" / (model + ".metrics.json");
  }
  std::filesystem::path reliability(const std::string& model) const {
    return root / "eval" / (model + ".reliability.csv");
  }
  std::filesystem::path metrics_summary() const { return root / "eval" / "metrics.json"; }
  std::filesystem::path verdicts() const { return root / "judge" / "verdicts.jsonl"; }
  std::filesystem::path win_rates() const { return root / "judge" / "win_rates.json"; }
  std::filesystem::path stamp(std::string_view stage) const {
    return root / "stamps" / (std::string(stage) + ".json");
  }
};

// Stage commands. Each is idempotent for identical inputs and config, stamps
// its outputs with the stage hash and seed, and checks the stamps of the
// stages it reads (MissingArtifactError / StaleArtifactError otherwise).
void cmd_synth(const RunConfig& config);
void cmd_forge(const RunConfig& config);
void cmd_train(const RunConfig& config);
// Runs every configured forecaster, or only `forecaster` when given.
void cmd_predict(const RunConfig& config, const std::optional<std::string>& forecaster = {});
void cmd_eval(const RunConfig& config);
void cmd_judge(const RunConfig& config);
void cmd_all(const RunConfig& config);

}  // namespace foresight
