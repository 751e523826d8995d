#include "foresight/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "foresight/corpus.hpp"
#include "foresight/errors.hpp"
#include "foresight/forecaster.hpp"
#include "foresight/forge.hpp"
#include "foresight/judge.hpp"
#include "foresight/parallel.hpp"
#include "foresight/rng.hpp"
#include "foresight/scoring.hpp"
#include "foresight/synthetic.hpp"
#include "foresight/trainer.hpp"

namespace foresight {
namespace fs = std::filesystem;

namespace {

constexpr std::array<std::string_view, 6> kStages = {"synth", "forge", "train",
                                                     "predict", "eval", "judge"};

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

std::string auth_token() {
  const char* token = std::getenv(kAuthTokenEnv);
  return token ? token : "";
}

template <typename T>
T get_or(const json& section, const char* key, T fallback) {
  try {
    return section.value(key, fallback);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

json default_config() {
  return json{
      {"out_dir", "runs/default"},
      {"workers", 1},
      {"synth", {{"seed", 7}, {"n_admissions", 300}, {"cohort", CohortConfig{}.to_json()}}},
      {"forge",
       {{"seed", 11},
        {"min_notes", 9},
        {"splits_per_trajectory", 1},
        {"min_context", 3},
        {"min_future", 1},
        {"questions_per_split", 10},
        {"include_discharge_notes", true},
        {"budget", ContextBudget{}.to_json()},
        {"test_fraction", 0.15},
        {"test_questions", 0},
        {"annotator", {{"kind", "rule"}}}}},
      {"train",
       {{"seed", 13},
        {"validation_fraction", 0.15},
        {"group_size", 4},
        {"batch_size", 32},
        {"learning_rate", 0.2},
        {"steps", 500},
        {"advantage_norm", "mean_only"},
        {"sigma", 0.5},
        {"eval_every", 25}}},
      {"predict",
       {{"seed", 17},
        {"forecasters",
         json::array({json{{"name", "trained"}, {"kind", "policy"}},
                      json{{"name", "untrained"}, {"kind", "untrained_policy"}},
                      json{{"name", "constant"}, {"kind", "constant"}, {"rate", "train_positive_rate"}}})}}},
      {"eval", {{"seed", 0}, {"n_bins", 10}, {"k_fraction", 0.10}}},
      {"judge",
       {{"seed", 19},
        {"system_a", "trained"},
        {"system_b", "untrained"},
        {"client", {{"kind", "longer_response"}}},
        {"forced_choice", false},
        {"batch", false},
        {"max_pairs", 50}}},
  };
}

RunConfig::RunConfig(json document, const RunOptions& options) : doc_(std::move(document)) {
  if (!doc_.is_object()) throw ConfigError("config must be a JSON object");
  for (auto stage : kStages) {
    const std::string name(stage);
    if (!doc_.contains(name)) throw ConfigError("config lacks the '" + name + "' section");
    json& sec = doc_[name];
    if (!sec.is_object()) throw ConfigError("config section '" + name + "' must be an object");
    if (options.seed_override) sec["seed"] = *options.seed_override;
    if (!sec.contains("seed"))
      throw ConfigError("config section '" + name + "' has no seed; every stage needs an explicit seed");
    if (!is_nonnegative_integer(sec["seed"]))
      throw ConfigError(name + ".seed must be a non-negative integer");
  }
  if (options.out_dir)
    out_dir_ = *options.out_dir;
  else if (doc_.contains("out_dir") && doc_["out_dir"].is_string())
    out_dir_ = doc_["out_dir"].get<std::string>();
  else
    throw ConfigError("no output directory: set out_dir or pass --out-dir");
  workers_ = options.workers.value_or(get_or(doc_, "workers", 1));
  if (workers_ < 1) throw ConfigError("workers must be >= 1");
}

RunConfig RunConfig::load(const fs::path& path, const RunOptions& options) {
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
  try {
    return RunConfig(read_json_file(path), options);
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  }
}

const json& RunConfig::section(std::string_view stage) const { return doc_.at(std::string(stage)); }

std::uint64_t RunConfig::seed(std::string_view stage) const {
  return section(stage).at("seed").get<std::uint64_t>();
}

std::vector<std::string> RunConfig::upstream_stages(std::string_view stage) const {
  if (stage == "synth") return {};
  if (stage == "forge") {
    const auto& f = section("forge");
    if (f.contains("corpus") && f["corpus"].is_string()) return {};
    return {"synth"};
  }
  if (stage == "train") return {"forge"};
  if (stage == "predict") {
    std::vector<std::string> up{"forge"};
    const auto& list = section("predict").value("forecasters", json::array());
    for (const auto& f : list)
      if (f.value("kind", std::string{}) == "policy" || f.value("kind", std::string{}) == "untrained_policy") {
        up.push_back("train");
        break;
      }
    return up;
  }
  if (stage == "eval" || stage == "judge") return {"forge", "predict"};
  throw ConfigError("unknown stage '" + std::string(stage) + "'");
}

std::string RunConfig::stage_hash(std::string_view stage) const {
  json material{{"stage", std::string(stage)}, {"section", section(stage)}};
  json upstream = json::object();
  for (const auto& up : upstream_stages(stage)) upstream[up] = stage_hash(up);
  material["upstream"] = upstream;
  return hex64(fnv1a64(material.dump()));
}

// ---------------------------------------------------------------------------
// Stamps

namespace {

ArtifactMeta meta_for(const RunConfig& config, std::string_view stage) {
  return {std::string(stage), config.stage_hash(stage), config.seed(stage)};
}

void write_stamp(const RunConfig& config, std::string_view stage) {
  const ArtifactPaths paths{config.out_dir()};
  write_json_file(paths.stamp(stage), to_json(meta_for(config, stage)));
}

// Verifies that every upstream stage has run under the current config.
void require_upstream(const RunConfig& config, std::string_view stage) {
  const ArtifactPaths paths{config.out_dir()};
  for (const auto& up : config.upstream_stages(stage)) {
    const auto stamp = paths.stamp(up);
    if (!fs::exists(stamp)) throw MissingArtifactError(stamp.string(), up);
    const json recorded = read_json_file(stamp);
    if (recorded.value("config_hash", std::string{}) != config.stage_hash(up))
      throw StaleArtifactError(stamp.string(), up);
  }
}

void require_file(const fs::path& path, std::string_view producer) {
  if (!fs::exists(path)) throw MissingArtifactError(path.string(), std::string(producer));
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("io_error", "cannot write " + path.string());
  out << text;
}

std::string csv_meta_line(const ArtifactMeta& m) {
  return "# stage=" + m.stage + " config_hash=" + m.config_hash + " seed=" + std::to_string(m.seed) + "\n";
}

json with_meta(json body, const ArtifactMeta& m) {
  body["_meta"] = to_json(m);
  return body;
}

}  // namespace

// ---------------------------------------------------------------------------
// synth

void cmd_synth(const RunConfig& config) {
  const auto& sec = config.section("synth");
  const int n = get_or(sec, "n_admissions", 300);
  const CohortConfig cohort_config =
      CohortConfig::from_json(sec.value("cohort", json::object()));
  const auto cohort = generate_synthetic_cohort(config.seed("synth"), n, cohort_config);
  const ArtifactPaths paths{config.out_dir()};
  const auto meta = meta_for(config, "synth");
  export_corpus(paths.notes(), cohort.trajectories, &meta);
  export_latent_tracks(paths.tracks(), cohort.tracks, &meta);
  write_stamp(config, "synth");
  spdlog::info("synth: {} admissions written to {}", cohort.trajectories.size(), paths.notes().string());
}

// ---------------------------------------------------------------------------
// forge

namespace {

std::unique_ptr<Annotator> make_annotator(const json& spec, const LatentTrackMap& tracks) {
  const std::string kind = get_or(spec, "kind", std::string("rule"));
  if (kind == "rule")
    return rule_annotator(tracks, get_or(spec, "event_kinds", std::vector<std::string>{}));
  if (kind == "endpoint") {
    auto options = EndpointOptions::from_json(spec, "/v1/annotate");
    options.auth_token = auth_token();
    return std::make_unique<EndpointAnnotator>(std::move(options));
  }
  throw ConfigError("unknown annotator kind '" + kind + "'");
}

json split_to_json(const SplitPoint& s) {
  return json{{"admission_id", s.admission_id},
              {"split_time", format_rfc3339(s.split_time)},
              {"context_note_ids", s.context_note_ids},
              {"future_note_ids", s.future_note_ids}};
}

}  // namespace

void cmd_forge(const RunConfig& config) {
  require_upstream(config, "forge");
  const auto& sec = config.section("forge");
  const ArtifactPaths paths{config.out_dir()};

  fs::path notes_path = paths.notes();
  fs::path tracks_path = paths.tracks();
  if (sec.contains("corpus") && sec["corpus"].is_string()) {
    notes_path = sec["corpus"].get<std::string>();
    tracks_path = sec.contains("tracks") && sec["tracks"].is_string()
                      ? fs::path(sec["tracks"].get<std::string>())
                      : fs::path{};
    if (!fs::exists(notes_path)) throw ConfigError("forge.corpus not found: " + notes_path.string());
  } else {
    require_file(notes_path, "synth");
  }
  const auto trajectories = ingest_corpus(notes_path);
  const LatentTrackMap tracks =
      !tracks_path.empty() && fs::exists(tracks_path) ? ingest_latent_tracks(tracks_path) : LatentTrackMap{};
  const auto eligible = filter_eligible(trajectories, get_or(sec, "min_notes", 9));

  SplitOptions split_options{get_or(sec, "min_context", 3), get_or(sec, "min_future", 1)};
  ExampleOptions example_options;
  example_options.questions_per_split = get_or(sec, "questions_per_split", 10);
  example_options.max_attempts = get_or(sec, "max_attempts", 3);
  example_options.include_discharge_notes = get_or(sec, "include_discharge_notes", true);
  if (sec.contains("budget")) example_options.budget = ContextBudget::from_json(sec["budget"]);
  const int splits_per_trajectory = get_or(sec, "splits_per_trajectory", 1);
  const std::uint64_t seed = config.seed("forge");

  auto annotator = make_annotator(sec.value("annotator", json::object()), tracks);

  struct PerTrajectory {
    std::vector<SplitPoint> splits;
    std::vector<PredictionExample> examples;
    GenerationStats stats;
    bool rejected = false;
  };
  std::vector<PerTrajectory> results(eligible.size());
  parallel_for(eligible.size(), config.workers(), [&](std::size_t i) {
    auto& r = results[i];
    try {
      r.splits = sample_splits(eligible[i], seed, splits_per_trajectory, split_options);
    } catch (const SplitRejected& e) {
      spdlog::warn("forge: {}", e.what());
      r.rejected = true;
      return;
    }
    for (const auto& s : r.splits) {
      auto ex = generate_examples(eligible[i], s, *annotator, example_options, &r.stats);
      r.examples.insert(r.examples.end(), std::make_move_iterator(ex.begin()),
                        std::make_move_iterator(ex.end()));
    }
  });

  std::vector<PredictionExample> examples;
  std::vector<json> split_records;
  GenerationStats totals;
  std::size_t rejected = 0;
  for (auto& r : results) {
    rejected += r.rejected ? 1 : 0;
    totals.splits_attempted += r.stats.splits_attempted;
    totals.splits_skipped += r.stats.splits_skipped;
    totals.questions_proposed += r.stats.questions_proposed;
    totals.unresolvable_dropped += r.stats.unresolvable_dropped;
    for (const auto& s : r.splits) split_records.push_back(split_to_json(s));
    for (auto& e : r.examples) examples.push_back(std::move(e));
  }

  const auto partition =
      partition_dataset(examples, get_or(sec, "test_fraction", 0.15), derive_seed(seed, "partition"),
                        get_or(sec, "test_questions", std::size_t{0}));

  const auto meta = meta_for(config, "forge");
  write_examples(paths.examples(), examples, &meta);
  write_examples(paths.train_examples(), partition.train, &meta);
  write_examples(paths.test_examples(), partition.test, &meta);
  write_jsonl(paths.splits(), split_records, &meta);
  write_json_file(paths.forge_stats(),
                  with_meta(json{{"ingested_trajectories", trajectories.size()},
                                 {"eligible_trajectories", eligible.size()},
                                 {"rejected_trajectories", rejected},
                                 {"splits_attempted", totals.splits_attempted},
                                 {"splits_skipped", totals.splits_skipped},
                                 {"questions_proposed", totals.questions_proposed},
                                 {"unresolvable_dropped", totals.unresolvable_dropped},
                                 {"all", dataset_stats(examples).to_json()},
                                 {"train", dataset_stats(partition.train).to_json()},
                                 {"test", dataset_stats(partition.test).to_json()}},
                            meta));
  write_stamp(config, "forge");
  spdlog::info("forge: {} examples ({} train / {} test) from {} eligible admissions",
               examples.size(), partition.train.size(), partition.test.size(), eligible.size());
}

// ---------------------------------------------------------------------------
// train

namespace {

std::vector<TrainingExample> to_training(const std::vector<PredictionExample>& examples) {
  std::vector<TrainingExample> out;
  out.reserve(examples.size());
  for (const auto& e : examples) {
    const FeatureVector x = featurize(e.context_text, e.question);
    out.push_back({e.example_id, std::vector<double>(x.begin(), x.end()), e.label});
  }
  return out;
}

double positive_rate(const std::vector<PredictionExample>& examples) {
  if (examples.empty()) return 0.0;
  double pos = 0.0;
  for (const auto& e : examples) pos += e.label;
  return pos / static_cast<double>(examples.size());
}

}  // namespace

void cmd_train(const RunConfig& config) {
  require_upstream(config, "train");
  const ArtifactPaths paths{config.out_dir()};
  require_file(paths.train_examples(), "forge");
  const auto& sec = config.section("train");
  TrainConfig tc = TrainConfig::from_json(sec);
  tc.workers = config.workers();

  const auto all_train = read_examples(paths.train_examples());
  if (all_train.empty()) throw ConfigError("train: forge produced no training examples");
  std::vector<PredictionExample> fit = all_train, validation;
  const double validation_fraction = get_or(sec, "validation_fraction", 0.15);
  if (validation_fraction > 0.0) {
    auto p = partition_dataset(all_train, validation_fraction, derive_seed(tc.seed, "validation"));
    fit = std::move(p.train);
    validation = std::move(p.test);
  }
  const auto fit_set = to_training(fit);
  const auto validation_set = to_training(validation);

  EvalHook hook;
  if (!validation_set.empty())
    hook = [&](const LogisticPolicy& policy, int) {
      return heldout_reward(policy, validation_set, tc.reward_eps);
    };
  const auto initial = LogisticPolicy::zeros(kFeatureDim, tc.sigma);
  const TrainResult result = train(initial, fit_set, tc, hook);
  if (result.diverged) spdlog::warn("train: diverged; keeping checkpoint from step {}", result.best_step);

  const auto meta = meta_for(config, "train");
  Checkpoint ckpt{result.policy, std::string(kFeatureBasisVersion), result.best_step,
                  result.best_heldout_reward};
  write_json_file(paths.checkpoint(), with_meta(to_json(ckpt), meta));
  write_text(paths.reward_trace(), csv_meta_line(meta) + reward_trace_csv(result.trace));
  write_stamp(config, "train");
  spdlog::info("train: best step {} held-out reward {}", result.best_step,
               result.best_heldout_reward ? *result.best_heldout_reward : 0.0);
}

// ---------------------------------------------------------------------------
// predict

namespace {

struct ForecasterSpec {
  std::string name;
  json spec;
};

std::vector<ForecasterSpec> forecaster_specs(const RunConfig& config) {
  std::vector<ForecasterSpec> out;
  const auto& list = config.section("predict").value("forecasters", json::array());
  if (!list.is_array() || list.empty()) throw ConfigError("predict.forecasters must be a non-empty array");
  std::set<std::string> names;
  for (const auto& f : list) {
    const std::string name = get_or(f, "name", std::string{});
    if (name.empty()) throw ConfigError("every forecaster needs a name");
    if (!names.insert(name).second) throw ConfigError("duplicate forecaster name '" + name + "'");
    out.push_back({name, f});
  }
  return out;
}

std::unique_ptr<Forecaster> make_forecaster(const RunConfig& config, const ForecasterSpec& fs_spec) {
  const ArtifactPaths paths{config.out_dir()};
  const json& spec = fs_spec.spec;
  const std::string kind = get_or(spec, "kind", std::string{});
  const auto seed = derive_seed(config.seed("predict"), fs_spec.name);
  const auto mode = get_or(spec, "mode", std::string("expected")) == "sampled"
                        ? PolicyForecaster::Mode::sampled
                        : PolicyForecaster::Mode::expected;
  if (kind == "policy") {
    require_file(paths.checkpoint(), "train");
    auto ckpt = checkpoint_from_json(read_json_file(paths.checkpoint()));
    if (ckpt.feature_basis != kFeatureBasisVersion)
      throw ConfigError("checkpoint feature basis " + ckpt.feature_basis + " does not match " +
                        std::string(kFeatureBasisVersion));
    return std::make_unique<PolicyForecaster>(std::move(ckpt.policy), fs_spec.name, mode, seed);
  }
  if (kind == "untrained_policy") {
    const double sigma = get_or(config.section("train"), "sigma", TrainConfig{}.sigma);
    return std::make_unique<PolicyForecaster>(LogisticPolicy::zeros(kFeatureDim, sigma), fs_spec.name,
                                              mode, seed);
  }
  if (kind == "constant") {
    double rate = 0.0;
    const auto it = spec.find("rate");
    if (it != spec.end() && it->is_number()) {
      rate = it->get<double>();
    } else {
      require_file(paths.train_examples(), "forge");
      rate = positive_rate(read_examples(paths.train_examples()));
    }
    return std::make_unique<ConstantForecaster>(rate, fs_spec.name);
  }
  if (kind == "endpoint") {
    auto options = EndpointOptions::from_json(spec, "/v1/forecast");
    options.auth_token = auth_token();
    if (options.model_name.empty()) options.model_name = fs_spec.name;
    std::string tmpl(kDefaultPromptTemplate);
    if (auto t = spec.find("prompt_template_file"); t != spec.end() && t->is_string()) {
      std::ifstream in(t->get<std::string>());
      if (!in) throw ConfigError("prompt template file not found: " + t->get<std::string>());
      std::stringstream ss;
      ss << in.rdbuf();
      tmpl = ss.str();
    }
    ContextBudget budget;
    if (spec.contains("budget")) budget = ContextBudget::from_json(spec["budget"]);
    return std::make_unique<EndpointForecaster>(
        std::move(options), std::move(tmpl),
        get_or(spec, "instruction", std::string(kDefaultInstruction)), budget);
  }
  throw ConfigError("unknown forecaster kind '" + kind + "' for " + fs_spec.name);
}

}  // namespace

void cmd_predict(const RunConfig& config, const std::optional<std::string>& only) {
  require_upstream(config, "predict");
  const ArtifactPaths paths{config.out_dir()};
  require_file(paths.test_examples(), "forge");
  const auto test = read_examples(paths.test_examples());
  const auto meta = meta_for(config, "predict");

  json summary = json::object();
  if (fs::exists(paths.predict_summary())) {
    summary = read_json_file(paths.predict_summary());
    summary.erase("_meta");
  }
  bool matched = false;
  for (const auto& spec : forecaster_specs(config)) {
    if (only && spec.name != *only) continue;
    matched = true;
    auto forecaster = make_forecaster(config, spec);
    const bool timed = get_or(spec.spec, "kind", std::string{}) == "endpoint";

    std::vector<std::optional<Prediction>> slots(test.size());
    std::vector<std::string> errors(test.size());
    parallel_for(test.size(), config.workers(), [&](std::size_t i) {
      const auto& e = test[i];
      const auto start = std::chrono::steady_clock::now();
      try {
        ForecastSample s = forecaster->forecast({e.example_id, e.context_text, e.question});
        Prediction p{e.example_id, spec.name, std::clamp(s.probability, 0.0, 1.0), std::move(s.trace), 0.0};
        if (timed)
          p.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        slots[i] = std::move(p);
      } catch (const Error& err) {
        if (err.kind() != "reply_parse_error" && err.kind() != "transport_error") throw;
        errors[i] = err.what();
      }
    });
    std::vector<Prediction> predictions;
    std::size_t missing = 0;
    for (std::size_t i = 0; i < slots.size(); ++i) {
      if (slots[i]) {
        predictions.push_back(std::move(*slots[i]));
      } else {
        ++missing;
        spdlog::warn("predict {}: {} scored as missing: {}", spec.name, test[i].example_id, errors[i]);
      }
    }
    write_predictions(paths.predictions(spec.name), predictions, &meta);
    summary[spec.name] = json{{"n", predictions.size()}, {"n_missing", missing}};
    spdlog::info("predict {}: {} predictions, {} missing", spec.name, predictions.size(), missing);
  }
  if (only && !matched) throw ConfigError("no forecaster named '" + *only + "' in predict.forecasters");
  write_json_file(paths.predict_summary(), with_meta(summary, meta));
  write_stamp(config, "predict");
}

// ---------------------------------------------------------------------------
// eval

void cmd_eval(const RunConfig& config) {
  require_upstream(config, "eval");
  const ArtifactPaths paths{config.out_dir()};
  require_file(paths.test_examples(), "forge");
  const auto& sec = config.section("eval");
  EvalOptions options;
  options.n_bins = get_or(sec, "n_bins", 10);
  options.k_fraction = get_or(sec, "k_fraction", 0.10);
  options.eps = get_or(sec, "eps", kDefaultProbabilityEps);

  std::vector<LabeledForecast> labels;
  for (const auto& e : read_examples(paths.test_examples()))
    labels.push_back({e.example_id, static_cast<double>(e.label), e.label});

  const auto meta = meta_for(config, "eval");
  json models = json::object();
  for (const auto& spec : forecaster_specs(config)) {
    const auto pred_path = paths.predictions(spec.name);
    require_file(pred_path, "predict");
    std::vector<LabeledForecast> preds;
    for (const auto& p : read_predictions(pred_path)) preds.push_back({p.example_id, p.probability, 0});
    MetricsReport report = evaluate(preds, labels, options);
    report.model_name = spec.name;
    const json body = report.to_json();
    write_json_file(paths.metrics(spec.name), with_meta(body, meta));
    write_text(paths.reliability(spec.name), csv_meta_line(meta) + reliability_csv(report.bins));
    models[spec.name] = body;
  }
  write_json_file(paths.metrics_summary(), with_meta(json{{"models", models}}, meta));
  write_stamp(config, "eval");
  spdlog::info("eval: metrics written to {}", paths.metrics_summary().string());
}

// ---------------------------------------------------------------------------
// judge

namespace {

std::unique_ptr<JudgeClient> make_judge(const json& spec) {
  const std::string kind = get_or(spec, "kind", std::string("longer_response"));
  if (kind == "first_presented") return std::make_unique<FirstPresentedJudge>();
  if (kind == "longer_response") return std::make_unique<LongerResponseJudge>();
  if (kind == "endpoint") {
    auto options = EndpointOptions::from_json(spec, "/v1/judge");
    options.auth_token = auth_token();
    return std::make_unique<EndpointJudge>(std::move(options));
  }
  throw ConfigError("unknown judge client kind '" + kind + "'");
}

}  // namespace

void cmd_judge(const RunConfig& config) {
  require_upstream(config, "judge");
  const ArtifactPaths paths{config.out_dir()};
  require_file(paths.test_examples(), "forge");
  const auto& sec = config.section("judge");
  const std::string a = get_or(sec, "system_a", std::string{});
  const std::string b = get_or(sec, "system_b", std::string{});
  if (a.empty() || b.empty() || a == b) throw ConfigError("judge needs two distinct systems");
  require_file(paths.predictions(a), "predict");
  require_file(paths.predictions(b), "predict");

  std::map<std::string, std::string> trace_a, trace_b;
  for (const auto& p : read_predictions(paths.predictions(a))) trace_a[p.example_id] = p.trace;
  for (const auto& p : read_predictions(paths.predictions(b))) trace_b[p.example_id] = p.trace;

  std::vector<JudgePair> pairs;
  for (const auto& e : read_examples(paths.test_examples())) {
    const auto ia = trace_a.find(e.example_id);
    const auto ib = trace_b.find(e.example_id);
    if (ia == trace_a.end() || ib == trace_b.end()) continue;
    pairs.push_back({e.example_id, e.context_text, e.question, ia->second, ib->second});
  }
  const std::uint64_t seed = config.seed("judge");
  const auto max_pairs = get_or(sec, "max_pairs", std::size_t{50});
  if (max_pairs > 0 && pairs.size() > max_pairs) {
    Rng rng(derive_seed(seed, "pair-sample"));
    for (std::size_t i = 0; i < max_pairs; ++i)
      std::swap(pairs[i], pairs[static_cast<std::size_t>(rng.uniform_int(
                              static_cast<std::int64_t>(i), static_cast<std::int64_t>(pairs.size()) - 1))]);
    pairs.resize(max_pairs);
    std::sort(pairs.begin(), pairs.end(),
              [](const JudgePair& x, const JudgePair& y) { return x.example_id < y.example_id; });
  }

  JudgeOptions options;
  options.forced_choice = get_or(sec, "forced_choice", false);
  options.batch = get_or(sec, "batch", false);
  options.max_attempts = get_or(sec, "max_attempts", 2);
  options.workers = config.workers();
  auto client = make_judge(sec.value("client", json::object()));
  JudgeRunStats stats;
  const auto verdicts = run_pairwise(*client, pairs, seed, options, &stats);

  const auto meta = meta_for(config, "judge");
  std::vector<json> records;
  for (const auto& v : verdicts) records.push_back(to_json(v));
  write_jsonl(paths.verdicts(), records, &meta);
  json table = verdicts.empty() ? json{{"overall", nullptr}} : aggregate(verdicts).to_json();
  table["system_a"] = a;
  table["system_b"] = b;
  table["pairs_skipped"] = stats.skipped;
  write_json_file(paths.win_rates(), with_meta(table, meta));
  write_stamp(config, "judge");
  spdlog::info("judge: {} pairs judged, {} skipped", stats.pairs, stats.skipped);
}

void cmd_all(const RunConfig& config) {
  if (config.upstream_stages("forge").size() == 1) cmd_synth(config);
  cmd_forge(config);
  cmd_train(config);
  cmd_predict(config);
  cmd_eval(config);
  cmd_judge(config);
}

}  // namespace foresight
