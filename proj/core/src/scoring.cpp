#include "foresight/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <unordered_map>

#include "foresight/errors.hpp"

namespace foresight {

double log_score(double p, int y, double eps) {
  const double q = std::clamp(p, eps, 1.0 - eps);
  return y ? std::log(q) : std::log1p(-q);
}

double brier(double p, int y) {
  const double d = p - static_cast<double>(y);
  return d * d;
}

double mean_log_score(std::span<const LabeledForecast> predictions, double eps) {
  if (predictions.empty()) throw UndefinedMetricError("log score of an empty set");
  double sum = 0.0;
  for (const auto& p : predictions) sum += log_score(p.probability, p.label, eps);
  return sum / static_cast<double>(predictions.size());
}

double mean_brier(std::span<const LabeledForecast> predictions) {
  if (predictions.empty()) throw UndefinedMetricError("Brier score of an empty set");
  double sum = 0.0;
  for (const auto& p : predictions) sum += brier(p.probability, p.label);
  return sum / static_cast<double>(predictions.size());
}

std::size_t bin_index(double p, int n_bins) {
  const auto n = static_cast<std::size_t>(n_bins);
  const double q = std::clamp(p, 0.0, 1.0);
  auto edge = [&](std::size_t b) { return static_cast<double>(b) / static_cast<double>(n_bins); };
  auto idx = std::min(static_cast<std::size_t>(q * n_bins), n - 1);
  while (idx > 0 && q < edge(idx)) --idx;
  while (idx + 1 < n && q >= edge(idx + 1)) ++idx;
  return idx;
}

std::vector<ReliabilityBin> reliability_bins(std::span<const LabeledForecast> predictions,
                                             int n_bins) {
  if (n_bins < 1) throw ConfigError("n_bins must be >= 1");
  std::vector<ReliabilityBin> bins(static_cast<std::size_t>(n_bins));
  std::vector<double> sum_p(bins.size(), 0.0), sum_y(bins.size(), 0.0);
  for (std::size_t b = 0; b < bins.size(); ++b) {
    bins[b].low = static_cast<double>(b) / n_bins;
    bins[b].high = static_cast<double>(b + 1) / n_bins;
  }
  for (const auto& p : predictions) {
    const auto b = bin_index(p.probability, n_bins);
    ++bins[b].count;
    sum_p[b] += p.probability;
    sum_y[b] += p.label;
  }
  for (std::size_t b = 0; b < bins.size(); ++b) {
    if (bins[b].count == 0) continue;
    const auto c = static_cast<double>(bins[b].count);
    bins[b].mean_predicted = sum_p[b] / c;
    bins[b].empirical_rate = sum_y[b] / c;
  }
  return bins;
}

double ece(std::span<const LabeledForecast> predictions, int n_bins) {
  if (predictions.empty()) throw UndefinedMetricError("ECE of an empty set");
  const auto bins = reliability_bins(predictions, n_bins);
  const auto n = static_cast<double>(predictions.size());
  double total = 0.0;
  for (const auto& b : bins)
    if (b.count > 0)
      total += static_cast<double>(b.count) / n * std::abs(b.mean_predicted - b.empirical_rate);
  return total;
}

double auroc(std::span<const LabeledForecast> predictions) {
  std::vector<std::size_t> order(predictions.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return predictions[a].probability < predictions[b].probability;
  });
  double positives = 0.0, positive_rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && predictions[order[j]].probability == predictions[order[i]].probability) ++j;
    // Ranks i+1..j share their average.
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k)
      if (predictions[order[k]].label) {
        positives += 1.0;
        positive_rank_sum += avg_rank;
      }
    i = j;
  }
  const double negatives = static_cast<double>(predictions.size()) - positives;
  if (positives == 0.0 || negatives == 0.0)
    throw UndefinedMetricError("AUROC needs both positive and negative labels");
  const double u = positive_rank_sum - positives * (positives + 1.0) / 2.0;
  return u / (positives * negatives);
}

double top_k_lift(std::span<const LabeledForecast> predictions, double k_fraction) {
  if (!(k_fraction > 0.0 && k_fraction <= 1.0)) throw ConfigError("k_fraction must lie in (0, 1]");
  if (predictions.empty()) throw UndefinedMetricError("lift of an empty set");
  const auto n = predictions.size();
  const double all_pos = std::accumulate(predictions.begin(), predictions.end(), 0.0,
                                         [](double s, const LabeledForecast& p) { return s + p.label; });
  if (all_pos == 0.0) throw UndefinedMetricError("lift undefined with zero positives");
  auto top = static_cast<std::size_t>(std::ceil(k_fraction * static_cast<double>(n) - 1e-9));
  top = std::clamp<std::size_t>(top, 1, n);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (predictions[a].probability != predictions[b].probability)
      return predictions[a].probability > predictions[b].probability;
    return predictions[a].example_id < predictions[b].example_id;
  });
  double top_pos = 0.0;
  for (std::size_t i = 0; i < top; ++i) top_pos += predictions[order[i]].label;
  const double rate_top = top_pos / static_cast<double>(top);
  const double rate_all = all_pos / static_cast<double>(n);
  return rate_top / rate_all;
}

json MetricsReport::to_json() const {
  json bins_json = json::array();
  for (const auto& b : bins)
    bins_json.push_back(json{{"bin_low", b.low},
                             {"bin_high", b.high},
                             {"count", b.count},
                             {"mean_pred", b.mean_predicted},
                             {"emp_rate", b.empirical_rate}});
  return json{{"model_name", model_name},
              {"n", n},
              {"n_missing", n_missing},
              {"positive_rate", positive_rate},
              {"mean_reward", mean_reward},
              {"brier", brier},
              {"ece", ece},
              {"auroc", auroc ? json(*auroc) : json(nullptr)},
              {"top_k_fraction", k_fraction},
              {"top_decile_lift", top_decile_lift ? json(*top_decile_lift) : json(nullptr)},
              {"reliability_bins", bins_json}};
}

MetricsReport evaluate(std::span<const LabeledForecast> predictions,
                       std::span<const LabeledForecast> labels, const EvalOptions& options) {
  if (labels.empty() || predictions.empty())
    throw UndefinedMetricError("evaluation needs at least one prediction and one label");

  std::unordered_map<std::string, std::size_t> label_index;
  std::vector<std::string> duplicated;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (!label_index.emplace(labels[i].example_id, i).second) duplicated.push_back(labels[i].example_id);
  std::unordered_map<std::string, std::size_t> seen;
  std::vector<std::string> unknown;
  for (const auto& p : predictions) {
    if (!seen.emplace(p.example_id, 0).second) duplicated.push_back(p.example_id);
    if (!label_index.count(p.example_id)) unknown.push_back(p.example_id);
  }
  if (!duplicated.empty() || !unknown.empty()) {
    std::vector<std::string> ids = duplicated;
    ids.insert(ids.end(), unknown.begin(), unknown.end());
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    std::string message = "predictions and labels do not align:";
    for (std::size_t i = 0; i < ids.size() && i < 10; ++i) message += " " + ids[i];
    if (ids.size() > 10) message += " ...";
    throw AlignmentError(message, std::move(ids));
  }

  std::vector<LabeledForecast> joined;
  joined.reserve(predictions.size());
  for (const auto& p : predictions)
    joined.push_back({p.example_id, std::clamp(p.probability, 0.0, 1.0),
                      labels[label_index.at(p.example_id)].label});

  MetricsReport r;
  r.n = joined.size();
  r.n_missing = labels.size() - joined.size();
  r.k_fraction = options.k_fraction;
  double pos = 0.0;
  for (const auto& j : joined) pos += j.label;
  r.positive_rate = pos / static_cast<double>(r.n);
  r.mean_reward = mean_log_score(joined, options.eps);
  r.brier = mean_brier(joined);
  r.ece = ece(joined, options.n_bins);
  r.bins = reliability_bins(joined, options.n_bins);
  if (pos > 0.0 && pos < static_cast<double>(r.n)) r.auroc = auroc(joined);
  // A constant forecast carries no ranking, so lift is reported only when
  // the scores actually vary.
  const bool varied = std::any_of(joined.begin(), joined.end(), [&](const LabeledForecast& j) {
    return j.probability != joined.front().probability;
  });
  if (pos > 0.0 && varied) r.top_decile_lift = top_k_lift(joined, options.k_fraction);
  if (!varied) r.auroc.reset();
  return r;
}

std::string reliability_csv(const std::vector<ReliabilityBin>& bins) {
  std::string out = "bin_low,bin_high,count,mean_pred,emp_rate\n";
  char line[160];
  for (const auto& b : bins) {
    std::snprintf(line, sizeof line, "%.6g,%.6g,%zu,%.6f,%.6f\n", b.low, b.high, b.count,
                  b.mean_predicted, b.empirical_rate);
    out += line;
  }
  return out;
}

}  // namespace foresight
