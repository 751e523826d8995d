#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "foresight/jsonl.hpp"

namespace foresight {

inline constexpr double kDefaultProbabilityEps = 1e-6;

// Natural-log score of p (clamped to [eps, 1 - eps]) against outcome y.
double log_score(double p, int y, double eps = kDefaultProbabilityEps);
double brier(double p, int y);

struct ScoredPrediction {
  std::string example_id;
  double probability = 0.0;
  int label = 0;
  double reward = 0.0;
};

// Probability/label pair as consumed by the metrics.
struct LabeledForecast {
  std::string example_id;
  double probability = 0.0;
  int label = 0;
};

double mean_log_score(std::span<const LabeledForecast> predictions,
                      double eps = kDefaultProbabilityEps);
double mean_brier(std::span<const LabeledForecast> predictions);

struct ReliabilityBin {
  double low = 0.0;
  double high = 0.0;
  std::size_t count = 0;
  double mean_predicted = 0.0;  // 0 for empty bins
  double empirical_rate = 0.0;  // 0 for empty bins
};

// Equal-width bins on [0, 1]; bin b holds [b/n, (b+1)/n) and the last bin is
// closed on the right.
std::vector<ReliabilityBin> reliability_bins(std::span<const LabeledForecast> predictions,
                                             int n_bins = 10);
std::size_t bin_index(double p, int n_bins);

// Throw UndefinedMetricError on empty input.
double ece(std::span<const LabeledForecast> predictions, int n_bins = 10);
// Mann-Whitney with average ranks. Throws UndefinedMetricError unless both
// classes are present.
double auroc(std::span<const LabeledForecast> predictions);
// Event rate among the top ceil(k * N) predictions (probability descending,
// ties by example_id ascending) divided by the overall rate.
double top_k_lift(std::span<const LabeledForecast> predictions, double k_fraction = 0.10);

struct MetricsReport {
  std::string model_name;
  std::size_t n = 0;
  std::size_t n_missing = 0;  // examples without a usable prediction
  double positive_rate = 0.0;
  double mean_reward = 0.0;
  double brier = 0.0;
  double ece = 0.0;
  std::optional<double> auroc;
  std::optional<double> top_decile_lift;
  double k_fraction = 0.10;
  std::vector<ReliabilityBin> bins;

  json to_json() const;
};

struct EvalOptions {
  int n_bins = 10;
  double k_fraction = 0.10;
  double eps = kDefaultProbabilityEps;
};

// Joins predictions to labels by example_id. Labels without a prediction are
// counted in n_missing. Duplicated ids on either side, and prediction ids
// with no label, raise AlignmentError listing them. Metrics that are
// undefined for the input (single class) are left empty rather than zeroed.
MetricsReport evaluate(std::span<const LabeledForecast> predictions,
                       std::span<const LabeledForecast> labels, const EvalOptions& options = {});

// CSV with header bin_low,bin_high,count,mean_pred,emp_rate.
std::string reliability_csv(const std::vector<ReliabilityBin>& bins);

}  // namespace foresight
