#include <cmath>
#include <numbers>
#include <numeric>

#include <gtest/gtest.h>

#include "foresight/errors.hpp"
#include "foresight/forge.hpp"
#include "foresight/synthetic.hpp"
#include "foresight/trainer.hpp"

using namespace foresight;

namespace {

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

// E[log score] for z ~ N(mu, sigma) against label y, by Simpson's rule.
double expected_reward(double mu, double sigma, int y) {
  const int n = 20000;
  const double lo = mu - 12 * sigma, hi = mu + 12 * sigma, h = (hi - lo) / n;
  double acc = 0;
  for (int i = 0; i <= n; ++i) {
    const double z = lo + i * h;
    const double p = 1.0 / (1.0 + std::exp(-z));
    const double density =
        std::exp(-0.5 * std::pow((z - mu) / sigma, 2)) / (sigma * std::sqrt(2 * std::numbers::pi));
    acc += (i == 0 || i == n ? 1 : (i % 2 ? 4 : 2)) * density * log_score(p, y);
  }
  return acc * h / 3;
}

GroupRollout manual_rollout(std::vector<double> x, std::vector<double> z, std::vector<double> adv) {
  GroupRollout g;
  g.example_id = "m";
  g.features = std::move(x);
  for (double v : z) g.samples.push_back({sigmoid(v), "", v});
  g.rewards.assign(z.size(), 0.0);
  g.advantages = std::move(adv);
  return g;
}

std::vector<TrainingExample> separable(int n) {
  std::vector<TrainingExample> out;
  Rng rng(5);
  for (int i = 0; i < n; ++i) {
    const int y = rng.bernoulli(0.3) ? 1 : 0;
    out.push_back({"s" + std::to_string(i), {y ? 1.0 : 0.0, y ? 0.0 : 1.0}, y});
  }
  return out;
}

}  // namespace

TEST(Advantages, WorkedExamples) {
  const std::vector<double> r{-0.2, -0.4, -0.6, -0.8};
  const auto ms = group_advantages(r, AdvantageNorm::mean_std);
  const std::vector<double> expect_ms{1.342, 0.447, -0.447, -1.342};
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(ms[i], expect_ms[i], 1e-3);
  const auto mo = group_advantages(r, AdvantageNorm::mean_only);
  const std::vector<double> expect_mo{0.3, 0.1, -0.1, -0.3};
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(mo[i], expect_mo[i], 1e-12);
}

TEST(Advantages, SumToZero) {
  Rng rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> r(4);
    for (auto& v : r) v = -10 * rng.uniform();
    EXPECT_LT(std::abs(sum(group_advantages(r, AdvantageNorm::mean_std))), 1e-9);
    EXPECT_LT(std::abs(sum(group_advantages(r, AdvantageNorm::mean_only))), 1e-9);
  }
}

TEST(Advantages, EqualRewardsGiveZero) {
  const std::vector<double> r(4, -0.7);
  for (double a : group_advantages(r, AdvantageNorm::mean_std)) EXPECT_EQ(a, 0.0);
  for (double a : group_advantages(r, AdvantageNorm::mean_only)) EXPECT_EQ(a, 0.0);
}

TEST(Rollout, ShapeAndRewards) {
  Rng rng(3);
  const LogisticPolicy p({0.5, -0.5}, 0.1, 0.5);
  const auto g = rollout_group(p, {"e", {1.0, 0.0}, 1}, 4, rng);
  ASSERT_EQ(g.samples.size(), 4u);
  ASSERT_EQ(g.rewards.size(), 4u);
  ASSERT_EQ(g.advantages.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(g.rewards[i], log_score(g.samples[i].probability, 1));
  EXPECT_LT(std::abs(sum(g.advantages)), 1e-9);
}

TEST(Config, Validation) {
  TrainConfig c;
  c.group_size = 1;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(TrainConfig::from_json(json{{"group_size", 4}}), ConfigError);
  const auto parsed = TrainConfig::from_json(json{{"seed", 4}, {"advantage_norm", "mean_only"}});
  EXPECT_EQ(parsed.seed, 4u);
  EXPECT_EQ(parsed.advantage_norm, AdvantageNorm::mean_only);
  EXPECT_EQ(parsed.group_size, 4);
  EXPECT_EQ(parsed.batch_size, 32);
  EXPECT_EQ(TrainConfig{}.advantage_norm, AdvantageNorm::mean_std);
}

TEST(Gradient, ZeroAdvantagesLeavePolicyUnchanged) {
  const LogisticPolicy p({0.2, -0.1}, 0.3, 0.5);
  const std::vector<GroupRollout> batch{manual_rollout({1.0, 2.0}, {0.1, 0.9, -0.4, 0.2}, {0, 0, 0, 0})};
  EXPECT_EQ(policy_gradient_step(p, batch, 0.5), p);
}

TEST(Gradient, OppositeAdvantagesCancel) {
  const LogisticPolicy p({0.2}, 0.3, 0.5);
  const std::vector<GroupRollout> batch{manual_rollout({1.5}, {0.9}, {0.7}), manual_rollout({1.5}, {0.9}, {-0.7})};
  for (double g : policy_gradient(p, batch)) EXPECT_EQ(g, 0.0);
}

TEST(Gradient, ScoreFunctionFormula) {
  const LogisticPolicy p({0.5}, -0.25, 2.0);
  // mu = 0.5 * 2 - 0.25 = 0.75; one sample z = 1.75, A = 2: coef = 2 * 1 / 4.
  const std::vector<GroupRollout> batch{manual_rollout({2.0}, {1.75}, {2.0})};
  const auto g = policy_gradient(p, batch);
  EXPECT_DOUBLE_EQ(g[0], 0.5 * 2.0);
  EXPECT_DOUBLE_EQ(g[1], 0.5);
  const auto next = policy_gradient_step(p, batch, 0.1);
  EXPECT_DOUBLE_EQ(next.weights()[0], 0.5 + 0.1);
  EXPECT_DOUBLE_EQ(next.bias(), -0.25 + 0.05);
  EXPECT_EQ(next.sigma(), 2.0);
}

TEST(Gradient, MissingNoiseRecordAndNonFinite) {
  const LogisticPolicy p({0.0}, 0.0, 1.0);
  auto g = manual_rollout({1.0}, {0.2}, {1.0});
  g.samples[0].noise_record.reset();
  EXPECT_THROW(policy_gradient(p, std::vector<GroupRollout>{g}), InvariantError);
  const std::vector<GroupRollout> bad{manual_rollout({1.0}, {0.2}, {INFINITY})};
  EXPECT_THROW(policy_gradient_step(p, bad, 0.1), GradientError);
}

// Monte Carlo score-function estimate against a central finite difference of
// the quadrature-evaluated expected reward.
TEST(Gradient, MonteCarloMatchesFiniteDifference) {
  const double w = 0.3, sigma = 0.8, x = 1.0;
  const double h = 1e-3;
  const double fd = (expected_reward((w + h) * x, sigma, 1) - expected_reward((w - h) * x, sigma, 1)) / (2 * h);

  const LogisticPolicy p({w}, 0.0, sigma);
  Rng rng(77);
  GroupRollout g;
  g.features = {x};
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    auto s = sample_forecast(p, g.features, rng);
    g.advantages.push_back(log_score(s.probability, 1));
    g.samples.push_back(std::move(s));
  }
  const auto grad = policy_gradient(p, std::vector<GroupRollout>{g});
  EXPECT_LT(std::abs(grad[0] - fd) / std::abs(fd), 0.05) << grad[0] << " vs " << fd;
}

TEST(Train, ZeroLearningRateKeepsInitialPolicy) {
  TrainConfig c;
  c.steps = 20;
  c.learning_rate = 0.0;
  c.seed = 1;
  const auto init = LogisticPolicy({0.1, -0.2}, 0.05, 0.5);
  const auto data = separable(100);
  EXPECT_EQ(train(init, data, c).policy, init);
}

TEST(Train, DeterministicPerSeed) {
  TrainConfig c;
  c.steps = 40;
  c.seed = 9;
  c.eval_every = 10;
  const auto data = separable(200);
  const auto hook = [&](const LogisticPolicy& p, int) { return heldout_reward(p, data); };
  const auto a = train(LogisticPolicy::zeros(2, 0.5), data, c, hook);
  c.workers = 4;
  const auto b = train(LogisticPolicy::zeros(2, 0.5), data, c, hook);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    EXPECT_EQ(a.trace[i].mean_reward, b.trace[i].mean_reward);
    EXPECT_EQ(a.trace[i].heldout_reward, b.trace[i].heldout_reward);
  }
  EXPECT_EQ(a.policy, b.policy);
}

TEST(Train, MovingAverageImprovesOnSeparableTask) {
  TrainConfig c;
  c.steps = 600;
  c.seed = 2;
  c.learning_rate = 0.2;
  c.advantage_norm = AdvantageNorm::mean_only;
  const auto data = separable(500);
  const auto r = train(LogisticPolicy::zeros(2, 0.5), data, c);
  auto window = [&](int from) {
    double s = 0;
    for (int i = from; i < from + 100; ++i) s += *r.trace[static_cast<std::size_t>(i)].mean_reward;
    return s / 100;
  };
  EXPECT_GT(window(400), window(0));
}

TEST(Train, BestCheckpointSelectedByHeldout) {
  TrainConfig c;
  c.steps = 50;
  c.seed = 3;
  c.eval_every = 10;
  const auto data = separable(100);
  // Hook favours step 20 regardless of quality.
  const auto r = train(LogisticPolicy::zeros(2, 0.5), data, c,
                       [](const LogisticPolicy&, int step) { return step == 20 ? 0.0 : -1.0; });
  EXPECT_EQ(r.best_step, 20);
  EXPECT_EQ(*r.best_heldout_reward, 0.0);
}

TEST(Train, StdNormalisedAdvantagesDriftOnImbalancedBias) {
  // Bias-only task at a 22% positive rate. Std normalisation gives each
  // group a unit-sized push, so the majority label keeps winning.
  std::vector<TrainingExample> data;
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) data.push_back({"b" + std::to_string(i), {1.0}, rng.bernoulli(0.22) ? 1 : 0});
  TrainConfig c;
  c.steps = 400;
  c.seed = 3;
  c.learning_rate = 0.05;
  const auto final_reward = [&](AdvantageNorm norm, double lr) {
    c.advantage_norm = norm;
    c.learning_rate = lr;
    return heldout_reward(train(LogisticPolicy::zeros(1, 0.5), data, c).policy, data);
  };
  double rate = 0;
  for (const auto& e : data) rate += e.label;
  rate /= static_cast<double>(data.size());
  const double calibrated = final_reward(AdvantageNorm::mean_only, 0.2);
  const double drifted = final_reward(AdvantageNorm::mean_std, 0.05);
  EXPECT_NEAR(calibrated, rate * std::log(rate) + (1 - rate) * std::log(1 - rate), 0.005);
  EXPECT_LT(drifted, calibrated - 0.3);
}

// Desk-scale headline: policy trained on synthetic features beats the
// constant train-rate forecast on held-out patients.
TEST(Train, SyntheticCohortBeatsConstantBaseline) {
  const auto cohort = generate_synthetic_cohort(31, 300);
  auto annotator = rule_annotator(cohort.tracks);
  std::vector<PredictionExample> examples;
  for (const auto& t : filter_eligible(cohort.trajectories)) {
    auto ex = generate_examples(t, sample_split(t, 31), *annotator);
    examples.insert(examples.end(), ex.begin(), ex.end());
  }
  const auto part = partition_dataset(examples, 0.2, 31);
  auto to_training = [](const std::vector<PredictionExample>& xs) {
    std::vector<TrainingExample> out;
    for (const auto& e : xs) {
      const auto f = featurize(e.context_text, e.question);
      out.push_back({e.example_id, {f.begin(), f.end()}, e.label});
    }
    return out;
  };
  const auto train_set = to_training(part.train);
  const auto test_set = to_training(part.test);
  TrainConfig c;
  c.seed = 31;
  c.steps = 500;
  c.learning_rate = 0.2;
  c.advantage_norm = AdvantageNorm::mean_only;
  const auto r = train(LogisticPolicy::zeros(kFeatureDim, 0.5), train_set, c);

  double train_rate = 0;
  for (const auto& e : train_set) train_rate += e.label;
  train_rate /= static_cast<double>(train_set.size());
  double constant = 0;
  for (const auto& e : test_set) constant += log_score(train_rate, e.label);
  constant /= static_cast<double>(test_set.size());
  EXPECT_GT(heldout_reward(r.policy, test_set), constant);
}

TEST(Checkpoint, JsonRoundTripAndCsv) {
  Checkpoint c{LogisticPolicy({0.5, -1.25}, 0.125, 0.5), "keyword-v1", 42, -0.3};
  const auto back = checkpoint_from_json(to_json(c));
  EXPECT_EQ(back.policy, c.policy);
  EXPECT_EQ(back.step, 42);
  EXPECT_EQ(*back.heldout_reward, -0.3);
  const auto csv = reward_trace_csv({{0, -0.5, -0.6}, {1, -0.4, std::nullopt}});
  EXPECT_EQ(csv.rfind("step,mean_reward,heldout_reward\n", 0), 0u);
  EXPECT_NE(csv.find("\n1,"), std::string::npos);
  EXPECT_THROW(checkpoint_from_json(json{{"weights", 1}}), ParseError);
}
