#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "foresight/forecaster.hpp"
#include "foresight/scoring.hpp"

namespace foresight {

enum class AdvantageNorm { mean_only, mean_std };

std::string_view to_string(AdvantageNorm norm);
AdvantageNorm parse_advantage_norm(std::string_view name);

struct TrainConfig {
  int group_size = 4;
  int batch_size = 32;
  double learning_rate = 0.05;
  int steps = 500;
  AdvantageNorm advantage_norm = AdvantageNorm::mean_std;
  double std_eps = 1e-8;
  double sigma = 0.5;  // logit noise of a freshly initialised policy
  int eval_every = 25;
  double reward_eps = kDefaultProbabilityEps;
  std::uint64_t seed = 0;
  int workers = 1;

  // Throws ConfigError when group_size < 2, batch_size < 1, steps < 0, ...
  void validate() const;
  json to_json() const;
  // `seed` is required in the object.
  static TrainConfig from_json(const json& object);
};

// Input to the trainer: features already computed.
struct TrainingExample {
  std::string example_id;
  std::vector<double> features;
  int label = 0;
};

struct GroupRollout {
  std::string example_id;
  std::vector<double> features;
  std::vector<ForecastSample> samples;
  std::vector<double> rewards;
  std::vector<double> advantages;
};

// mean_only: r - mean(r). mean_std: (r - mean(r)) / (popstd(r) + std_eps).
std::vector<double> group_advantages(std::span<const double> rewards, AdvantageNorm norm,
                                     double std_eps = 1e-8);

GroupRollout rollout_group(const LogisticPolicy& policy, const TrainingExample& example,
                           int group_size, Rng& rng, AdvantageNorm norm = AdvantageNorm::mean_std,
                           double std_eps = 1e-8, double reward_eps = kDefaultProbabilityEps);

// Score-function gradient averaged over every sample in the batch:
//   g = mean_s A_s * (z_s - mu_s) / sigma^2 * (x_s, 1)
// Returns (weight gradient..., bias gradient). Throws InvariantError when a
// sample lacks its noise record or dimensions disagree.
std::vector<double> policy_gradient(const LogisticPolicy& policy,
                                    std::span<const GroupRollout> batch);

// Ascends the gradient by learning_rate; sigma is unchanged. Throws
// GradientError (policy untouched) when the gradient is not finite.
LogisticPolicy policy_gradient_step(const LogisticPolicy& policy,
                                    std::span<const GroupRollout> batch, double learning_rate);

// mean_reward is the batch reward of the policy after `step` updates; the
// record after the last update carries only the held-out value.
struct StepRecord {
  int step = 0;
  std::optional<double> mean_reward;
  std::optional<double> heldout_reward;
};

struct TrainResult {
  LogisticPolicy policy;           // checkpoint with best held-out reward
  int best_step = 0;
  std::optional<double> best_heldout_reward;
  std::vector<StepRecord> trace;
  bool diverged = false;
};

// Called with (policy, step); returns the held-out mean reward.
using EvalHook = std::function<double(const LogisticPolicy&, int)>;

// Deterministic per config.seed. Each step draws batch_size examples from a
// seeded shuffle (epoch order), rolls out group_size samples each on per
// (seed, step, example) streams and takes one gradient step. The hook runs
// at step 0, every eval_every steps and after the final step; the returned
// policy is the one with the best held-out reward (the final policy when no
// hook is given). A NaN mean reward or a non-finite gradient stops training
// and returns the best checkpoint seen so far with diverged = true.
TrainResult train(const LogisticPolicy& initial, std::span<const TrainingExample> examples,
                  const TrainConfig& config, const EvalHook& eval_hook = {});

// Mean log score of the policy's expected probability over a labelled set.
double heldout_reward(const LogisticPolicy& policy, std::span<const TrainingExample> examples,
                      double eps = kDefaultProbabilityEps);

struct Checkpoint {
  LogisticPolicy policy;
  std::string feature_basis = std::string(kFeatureBasisVersion);
  int step = 0;
  std::optional<double> heldout_reward;
};

json to_json(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_json(const json& object);

// CSV with header step,mean_reward,heldout_reward; absent values are empty.
std::string reward_trace_csv(const std::vector<StepRecord>& trace);

}  // namespace foresight
