#include "foresight/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "foresight/errors.hpp"
#include "foresight/parallel.hpp"
#include "foresight/scoring.hpp"

namespace foresight {

std::string_view to_string(AdvantageNorm norm) {
  return norm == AdvantageNorm::mean_only ? "mean_only" : "mean_std";
}

AdvantageNorm parse_advantage_norm(std::string_view name) {
  if (name == "mean_only") return AdvantageNorm::mean_only;
  if (name == "mean_std") return AdvantageNorm::mean_std;
  throw ConfigError("unknown advantage_norm '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  if (group_size < 2) throw ConfigError("group_size must be >= 2");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (steps < 0) throw ConfigError("steps must be >= 0");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("learning_rate must be finite and >= 0");
  if (!(std_eps > 0.0)) throw ConfigError("std_eps must be > 0");
  if (!(sigma > 0.0)) throw ConfigError("sigma must be > 0");
  if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
  if (!(reward_eps > 0.0 && reward_eps < 0.5)) throw ConfigError("reward_eps must lie in (0, 0.5)");
  if (workers < 1) throw ConfigError("workers must be >= 1");
}

json TrainConfig::to_json() const {
  return json{{"group_size", group_size},       {"batch_size", batch_size},
              {"learning_rate", learning_rate}, {"steps", steps},
              {"advantage_norm", std::string(to_string(advantage_norm))},
              {"std_eps", std_eps},             {"sigma", sigma},
              {"eval_every", eval_every},       {"reward_eps", reward_eps},
              {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const json& object) {
  TrainConfig c;
  if (!object.is_object()) throw ConfigError("train config must be an object");
  if (!object.contains("seed") || !is_nonnegative_integer(object["seed"]))
    throw ConfigError("train.seed is required and must be a non-negative integer");
  try {
    c.seed = object["seed"].get<std::uint64_t>();
    c.group_size = object.value("group_size", c.group_size);
    c.batch_size = object.value("batch_size", c.batch_size);
    c.learning_rate = object.value("learning_rate", c.learning_rate);
    c.steps = object.value("steps", c.steps);
    c.advantage_norm = parse_advantage_norm(object.value("advantage_norm", std::string("mean_std")));
    c.std_eps = object.value("std_eps", c.std_eps);
    c.sigma = object.value("sigma", c.sigma);
    c.eval_every = object.value("eval_every", c.eval_every);
    c.reward_eps = object.value("reward_eps", c.reward_eps);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

std::vector<double> group_advantages(std::span<const double> rewards, AdvantageNorm norm,
                                     double std_eps) {
  std::vector<double> adv(rewards.begin(), rewards.end());
  if (adv.empty()) return adv;
  const double n = static_cast<double>(adv.size());
  const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / n;
  for (double& a : adv) a -= mean;
  if (norm == AdvantageNorm::mean_std) {
    double var = 0.0;
    for (double a : adv) var += a * a;
    const double scale = std::sqrt(var / n) + std_eps;
    for (double& a : adv) a /= scale;
  }
  return adv;
}

GroupRollout rollout_group(const LogisticPolicy& policy, const TrainingExample& example,
                           int group_size, Rng& rng, AdvantageNorm norm, double std_eps,
                           double reward_eps) {
  if (group_size < 1) throw ConfigError("group_size must be >= 1");
  GroupRollout g;
  g.example_id = example.example_id;
  g.features = example.features;
  g.samples.reserve(static_cast<std::size_t>(group_size));
  g.rewards.reserve(static_cast<std::size_t>(group_size));
  for (int i = 0; i < group_size; ++i) {
    g.samples.push_back(sample_forecast(policy, example.features, rng));
    g.rewards.push_back(log_score(g.samples.back().probability, example.label, reward_eps));
  }
  g.advantages = group_advantages(g.rewards, norm, std_eps);
  return g;
}

std::vector<double> policy_gradient(const LogisticPolicy& policy,
                                    std::span<const GroupRollout> batch) {
  const std::size_t dim = policy.dim();
  std::vector<double> grad(dim + 1, 0.0);
  const double inv_var = 1.0 / (policy.sigma() * policy.sigma());
  std::size_t count = 0;
  for (const auto& g : batch) {
    if (g.samples.size() != g.advantages.size())
      throw InvariantError("rollout " + g.example_id + " has mismatched samples/advantages");
    const double mu = policy.mean_logit(g.features);
    for (std::size_t s = 0; s < g.samples.size(); ++s) {
      if (!g.samples[s].noise_record)
        throw InvariantError("rollout " + g.example_id + " sample lacks its noise record");
      const double coef = g.advantages[s] * (*g.samples[s].noise_record - mu) * inv_var;
      for (std::size_t i = 0; i < dim; ++i) grad[i] += coef * g.features[i];
      grad[dim] += coef;
      ++count;
    }
  }
  if (count > 0)
    for (double& v : grad) v /= static_cast<double>(count);
  return grad;
}

LogisticPolicy policy_gradient_step(const LogisticPolicy& policy,
                                    std::span<const GroupRollout> batch, double learning_rate) {
  const auto grad = policy_gradient(policy, batch);
  for (std::size_t i = 0; i < grad.size(); ++i)
    if (!std::isfinite(grad[i]))
      throw GradientError("non-finite gradient component " + std::to_string(i) +
                          (i < policy.dim() ? " (" + std::string(feature_name(i)) + ")" : " (bias)"));
  std::vector<double> w = policy.weights();
  for (std::size_t i = 0; i < w.size(); ++i) w[i] += learning_rate * grad[i];
  return LogisticPolicy(std::move(w), policy.bias() + learning_rate * grad.back(), policy.sigma());
}

double heldout_reward(const LogisticPolicy& policy, std::span<const TrainingExample> examples,
                      double eps) {
  if (examples.empty()) throw UndefinedMetricError("held-out set is empty");
  double sum = 0.0;
  for (const auto& e : examples)
    sum += log_score(expected_probability(policy.mean_logit(e.features), policy.sigma()), e.label, eps);
  return sum / static_cast<double>(examples.size());
}

TrainResult train(const LogisticPolicy& initial, std::span<const TrainingExample> examples,
                  const TrainConfig& config, const EvalHook& eval_hook) {
  config.validate();
  if (examples.empty()) throw ConfigError("train needs at least one example");

  TrainResult result{initial, 0, std::nullopt, {}, false};
  LogisticPolicy policy = initial;

  auto evaluate = [&](int step, StepRecord& record) {
    if (!eval_hook) return;
    const double r = eval_hook(policy, step);
    record.heldout_reward = r;
    if (std::isfinite(r) && (!result.best_heldout_reward || r > *result.best_heldout_reward)) {
      result.best_heldout_reward = r;
      result.policy = policy;
      result.best_step = step;
    }
  };

  std::vector<std::size_t> order(examples.size());
  std::size_t cursor = order.size();  // forces a shuffle on first use
  std::uint64_t epoch = 0;
  auto next_index = [&] {
    if (cursor == order.size()) {
      std::iota(order.begin(), order.end(), 0);
      Rng rng(derive_seed(derive_seed(config.seed, "epoch"), epoch++));
      for (std::size_t i = order.size() - 1; i > 0; --i)
        std::swap(order[i], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i)))]);
      cursor = 0;
    }
    return order[cursor++];
  };

  const auto batch_size = static_cast<std::size_t>(config.batch_size);
  std::vector<std::size_t> batch_idx(batch_size);
  std::vector<GroupRollout> batch(batch_size);

  for (int step = 0; step < config.steps; ++step) {
    StepRecord record;
    record.step = step;
    if (step % config.eval_every == 0) evaluate(step, record);

    for (auto& i : batch_idx) i = next_index();
    const std::uint64_t step_seed = derive_seed(config.seed, static_cast<std::uint64_t>(step));
    parallel_for(batch_size, config.workers, [&](std::size_t slot) {
      const auto& ex = examples[batch_idx[slot]];
      Rng rng(derive_seed(step_seed, ex.example_id + "/" + std::to_string(slot)));
      batch[slot] = rollout_group(policy, ex, config.group_size, rng, config.advantage_norm,
                                  config.std_eps, config.reward_eps);
    });
    double reward_sum = 0.0;
    std::size_t reward_count = 0;
    for (const auto& g : batch)
      for (double r : g.rewards) {
        reward_sum += r;
        ++reward_count;
      }
    record.mean_reward = reward_sum / static_cast<double>(reward_count);
    result.trace.push_back(record);
    if (std::isnan(*record.mean_reward)) {
      result.diverged = true;
      break;
    }
    try {
      policy = policy_gradient_step(policy, batch, config.learning_rate);
    } catch (const GradientError&) {
      result.diverged = true;
      break;
    }
  }

  if (!result.diverged) {
    StepRecord final_record;
    final_record.step = config.steps;
    evaluate(config.steps, final_record);
    result.trace.push_back(final_record);
    if (!eval_hook) {
      result.policy = policy;
      result.best_step = config.steps;
    }
  } else if (!eval_hook) {
    // Without held-out data the last policy that produced finite rewards wins.
    result.policy = policy;
    result.best_step = result.trace.empty() ? 0 : result.trace.back().step;
  }
  return result;
}

json to_json(const Checkpoint& c) {
  return json{{"weights", c.policy.weights()},
              {"bias", c.policy.bias()},
              {"sigma", c.policy.sigma()},
              {"feature_basis", c.feature_basis},
              {"step", c.step},
              {"heldout_reward", c.heldout_reward ? json(*c.heldout_reward) : json(nullptr)}};
}

Checkpoint checkpoint_from_json(const json& object) {
  try {
    Checkpoint c{LogisticPolicy(object.at("weights").get<std::vector<double>>(),
                                object.at("bias").get<double>(), object.at("sigma").get<double>()),
                 object.at("feature_basis").get<std::string>(), object.at("step").get<int>(),
                 std::nullopt};
    if (auto it = object.find("heldout_reward"); it != object.end() && it->is_number())
      c.heldout_reward = it->get<double>();
    return c;
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
}

std::string reward_trace_csv(const std::vector<StepRecord>& trace) {
  std::string out = "step,mean_reward,heldout_reward\n";
  char buf[64];
  for (const auto& r : trace) {
    out += std::to_string(r.step);
    out += ',';
    if (r.mean_reward) {
      std::snprintf(buf, sizeof buf, "%.9g", *r.mean_reward);
      out += buf;
    }
    out += ',';
    if (r.heldout_reward) {
      std::snprintf(buf, sizeof buf, "%.9g", *r.heldout_reward);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace foresight
