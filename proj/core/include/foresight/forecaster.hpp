#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "foresight/endpoint.hpp"
#include "foresight/jsonl.hpp"
#include "foresight/phrase_bank.hpp"
#include "foresight/rng.hpp"

namespace foresight {

enum class BudgetUnit { characters, whitespace_tokens };

struct ContextBudget {
  std::size_t max_units = 16000;
  BudgetUnit unit = BudgetUnit::whitespace_tokens;

  static ContextBudget from_json(const json& object);
  json to_json() const;
};

// Characters are bytes; whitespace tokens are maximal runs of non-space.
std::size_t count_units(std::string_view text, BudgetUnit unit);

inline constexpr std::string_view kNoteSeparator = "\n\n";

// Joins the newest suffix of `blocks` that fits the budget (separators count
// toward a character budget). When even the newest block alone is too large,
// its trailing max_units are kept instead. Output never exceeds the budget.
std::string truncate_context(std::span<const std::string> blocks, const ContextBudget& budget);

// Feature layout (kFeatureBasisVersion):
//   [0, 6)    precursor phrase present in context, per event kind
//   6         context length in whitespace tokens / 16000, capped at 1
//   [7, 13)   question category one-hot
//   [13, 19)  log1p of the recency-weighted precursor count per event kind
//   19        precursor for the asked-about event present
//   20        log1p recency-weighted count for the asked-about event
//   21        confirmation for the asked-about event already in context
inline constexpr std::size_t kFeatureDim = 22;
inline constexpr std::string_view kFeatureBasisVersion = "keyword-v1";

using FeatureVector = std::array<double, kFeatureDim>;

// Recency weights position each phrase hit by its offset in the text:
// weight = (offset + 1) / length, so hits near the end (newest) count most.
FeatureVector featurize(std::string_view context_text, std::string_view question);

struct ForecastSample {
  double probability = 0.5;
  std::string trace;
  std::optional<double> noise_record;  // sampled logit, stochastic policies only
};

// Logit-normal policy: z ~ Normal(w.x + b, sigma), p = sigmoid(z).
class LogisticPolicy {
 public:
  // Throws ConfigError for non-finite parameters or sigma <= 0.
  LogisticPolicy(std::vector<double> weights, double bias, double sigma);
  static LogisticPolicy zeros(std::size_t dim, double sigma);

  const std::vector<double>& weights() const noexcept { return weights_; }
  double bias() const noexcept { return bias_; }
  double sigma() const noexcept { return sigma_; }
  std::size_t dim() const noexcept { return weights_.size(); }

  // Throws InvariantError when the feature dimension differs.
  double mean_logit(std::span<const double> features) const;

  friend bool operator==(const LogisticPolicy&, const LogisticPolicy&) = default;

 private:
  std::vector<double> weights_;
  double bias_;
  double sigma_;
};

double sigmoid(double z);

// E[sigmoid(z)] for z ~ Normal(mean, sigma), by trapezoid quadrature.
double expected_probability(double mean, double sigma);

ForecastSample sample_forecast(const LogisticPolicy& policy, std::span<const double> features,
                               Rng& rng);

struct ForecastInput {
  std::string example_id;
  std::string context_text;
  std::string question;
};

class Forecaster {
 public:
  virtual ~Forecaster() = default;
  virtual std::string name() const = 0;
  // Probability is always within [0, 1].
  virtual ForecastSample forecast(const ForecastInput& input) = 0;
};

// Predicts a fixed rate for every input. Throws ConfigError unless 0 < rate < 1.
class ConstantForecaster final : public Forecaster {
 public:
  explicit ConstantForecaster(double rate, std::string name = "constant");
  std::string name() const override { return name_; }
  ForecastSample forecast(const ForecastInput&) override { return {rate_, {}, std::nullopt}; }

 private:
  double rate_;
  std::string name_;
};

std::unique_ptr<Forecaster> constant_forecaster(double rate);

// Wraps a LogisticPolicy. The expected mode reports E[sigmoid(z)], the
// policy's predictive probability; the sampled mode draws one z per input
// from a stream seeded by (seed, example_id).
class PolicyForecaster final : public Forecaster {
 public:
  enum class Mode { expected, sampled };

  PolicyForecaster(LogisticPolicy policy, std::string name, Mode mode = Mode::expected,
                   std::uint64_t seed = 0);
  std::string name() const override { return name_; }
  ForecastSample forecast(const ForecastInput& input) override;

 private:
  LogisticPolicy policy_;
  std::string name_;
  Mode mode_;
  std::uint64_t seed_;
};

std::string_view feature_name(std::size_t index);

// Short rationale listing the features that moved the policy's logit the
// most, for use as a reasoning trace.
std::string describe_evidence(const LogisticPolicy& policy, std::span<const double> features,
                              double probability);

inline constexpr std::string_view kProbabilityMarker = "PROBABILITY:";
inline constexpr std::string_view kDefaultInstruction =
    "You are given the clinical notes available so far for one hospital admission and a "
    "question about a possible future event in the same admission. Estimate the probability "
    "that the event occurs after the last note shown and before discharge. Begin your reply "
    "with 'PROBABILITY: <number between 0 and 1>' and then explain your reasoning.";
inline constexpr std::string_view kDefaultPromptTemplate =
    "{instruction}\n\n### Clinical record\n{context}\n\n### Question\n{question}\n";

struct ParsedReply {
  double probability;
  std::string trace;
};

// First number in [0, 1] after the first occurrence of `marker`; the text
// following that number, trimmed, is the trace. Throws ReplyParseError when
// the marker or an in-range number is missing.
ParsedReply parse_probability_reply(std::string_view reply,
                                    std::string_view marker = kProbabilityMarker);

// Replaces {instruction}, {context} and {question}; other text is copied.
std::string render_prompt(std::string_view prompt_template, std::string_view instruction,
                          std::string_view context, std::string_view question);

// Forecaster backed by an HTTP text model.
//   request: {"role": "forecast", "model", "text": <rendered prompt>}
//   reply:   {"text": <completion>}
// The context is re-truncated to the budget before rendering.
class EndpointForecaster final : public Forecaster {
 public:
  EndpointForecaster(EndpointOptions options, std::string prompt_template,
                     std::string instruction = std::string(kDefaultInstruction),
                     ContextBudget budget = {});
  std::string name() const override { return endpoint_.options().model_name; }
  ForecastSample forecast(const ForecastInput& input) override;

 private:
  JsonEndpoint endpoint_;
  std::string prompt_template_;
  std::string instruction_;
  ContextBudget budget_;
};

std::unique_ptr<Forecaster> endpoint_forecaster(std::string base_url, std::string model_name,
                                                std::string prompt_template,
                                                double timeout_seconds);

struct Prediction {
  std::string example_id;
  std::string model_name;
  double probability = 0.0;
  std::string trace;
  double latency_ms = 0.0;
};

json to_json(const Prediction& prediction);
Prediction prediction_from_json(const json& object, std::size_t line = 0);
void write_predictions(const std::filesystem::path& path, const std::vector<Prediction>& predictions,
                       const ArtifactMeta* meta = nullptr);
std::vector<Prediction> read_predictions(const std::filesystem::path& path);

}  // namespace foresight
