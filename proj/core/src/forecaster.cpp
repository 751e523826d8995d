#include "foresight/forecaster.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "foresight/errors.hpp"

namespace foresight {

// ---------------------------------------------------------------------------
// Context budget

ContextBudget ContextBudget::from_json(const json& object) {
  ContextBudget b;
  try {
    b.max_units = object.value("max_units", b.max_units);
    const std::string unit = object.value("unit", std::string("whitespace_tokens"));
    if (unit == "characters")
      b.unit = BudgetUnit::characters;
    else if (unit == "whitespace_tokens")
      b.unit = BudgetUnit::whitespace_tokens;
    else
      throw ConfigError("unknown budget unit '" + unit + "'");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("budget: ") + e.what());
  }
  if (b.max_units == 0) throw ConfigError("budget max_units must be > 0");
  return b;
}

json ContextBudget::to_json() const {
  return json{{"max_units", max_units},
              {"unit", unit == BudgetUnit::characters ? "characters" : "whitespace_tokens"}};
}

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// Start of the suffix holding the last `keep` units of `text`.
std::size_t suffix_start(std::string_view text, std::size_t keep, BudgetUnit unit) {
  if (unit == BudgetUnit::characters) {
    if (text.size() <= keep) return 0;
    std::size_t start = text.size() - keep;
    // Never cut inside a UTF-8 sequence.
    while (start < text.size() && (static_cast<unsigned char>(text[start]) & 0xC0) == 0x80) ++start;
    return start;
  }
  std::size_t seen = 0;
  std::size_t i = text.size();
  while (i > 0) {
    while (i > 0 && is_space(text[i - 1])) --i;
    if (i == 0) break;
    std::size_t j = i;
    while (j > 0 && !is_space(text[j - 1])) --j;
    if (++seen == keep) return j;
    i = j;
  }
  return 0;
}

}  // namespace

std::size_t count_units(std::string_view text, BudgetUnit unit) {
  if (unit == BudgetUnit::characters) return text.size();
  std::size_t tokens = 0;
  bool in_token = false;
  for (char c : text) {
    const bool space = is_space(c);
    if (!space && !in_token) ++tokens;
    in_token = !space;
  }
  return tokens;
}

std::string truncate_context(std::span<const std::string> blocks, const ContextBudget& budget) {
  if (budget.max_units == 0) throw ConfigError("budget max_units must be > 0");
  if (blocks.empty()) return {};
  const std::size_t sep_units =
      budget.unit == BudgetUnit::characters ? kNoteSeparator.size() : 0;

  const std::string& newest = blocks.back();
  const std::size_t newest_units = count_units(newest, budget.unit);
  if (newest_units > budget.max_units)
    return newest.substr(suffix_start(newest, budget.max_units, budget.unit));

  std::size_t used = newest_units;
  std::size_t first = blocks.size() - 1;
  while (first > 0) {
    const std::size_t extra = count_units(blocks[first - 1], budget.unit) + sep_units;
    if (used + extra > budget.max_units) break;
    used += extra;
    --first;
  }
  std::string out;
  for (std::size_t i = first; i < blocks.size(); ++i) {
    if (i > first) out += kNoteSeparator;
    out += blocks[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Features

namespace {

constexpr double kLengthScale = 16000.0;

struct PhraseHits {
  bool present = false;
  double recency_weighted = 0.0;
};

PhraseHits scan(std::string_view text, std::span<const std::string_view> phrases) {
  PhraseHits hits;
  const double length = static_cast<double>(std::max<std::size_t>(text.size(), 1));
  for (std::string_view phrase : phrases) {
    for (std::size_t pos = text.find(phrase); pos != std::string_view::npos;
         pos = text.find(phrase, pos + 1)) {
      hits.present = true;
      hits.recency_weighted += static_cast<double>(pos + 1) / length;
    }
  }
  return hits;
}

}  // namespace

FeatureVector featurize(std::string_view context_text, std::string_view question) {
  FeatureVector x{};
  std::array<PhraseHits, kEventKindCount> hits;
  for (EventKind k : kAllEventKinds) {
    const auto i = static_cast<std::size_t>(k);
    hits[i] = scan(context_text, phrases_for(k).precursors);
    x[i] = hits[i].present ? 1.0 : 0.0;
    x[13 + i] = std::log1p(hits[i].recency_weighted);
  }
  x[6] = std::min(1.0, static_cast<double>(count_units(context_text, BudgetUnit::whitespace_tokens)) /
                           kLengthScale);
  const auto kind = event_kind_for_question(question);
  const QuestionCategory category = kind ? phrases_for(*kind).category : QuestionCategory::other;
  x[7 + static_cast<std::size_t>(category)] = 1.0;
  if (kind) {
    const auto i = static_cast<std::size_t>(*kind);
    x[19] = x[i];
    x[20] = x[13 + i];
    x[21] = context_text.find(phrases_for(*kind).confirmation) != std::string_view::npos ? 1.0 : 0.0;
  }
  return x;
}

std::string_view feature_name(std::size_t index) {
  static const std::array<std::string, kFeatureDim> names = [] {
    std::array<std::string, kFeatureDim> n;
    for (EventKind k : kAllEventKinds) {
      const auto i = static_cast<std::size_t>(k);
      n[i] = std::string(to_string(k)) + " precursor present";
      n[13 + i] = std::string(to_string(k)) + " precursor recency";
    }
    n[6] = "record length";
    for (std::size_t c = 0; c < kQuestionCategoryCount; ++c)
      n[7 + c] = std::string(to_string(static_cast<QuestionCategory>(c))) + " question";
    n[19] = "precursor of the queried event";
    n[20] = "recency of precursors of the queried event";
    n[21] = "queried event already documented";
    return n;
  }();
  return index < names.size() ? std::string_view(names[index]) : std::string_view("feature");
}

// ---------------------------------------------------------------------------
// Policy

LogisticPolicy::LogisticPolicy(std::vector<double> weights, double bias, double sigma)
    : weights_(std::move(weights)), bias_(bias), sigma_(sigma) {
  if (weights_.empty()) throw ConfigError("policy needs at least one feature");
  for (double w : weights_)
    if (!std::isfinite(w)) throw ConfigError("policy weights must be finite");
  if (!std::isfinite(bias_)) throw ConfigError("policy bias must be finite");
  if (!(sigma_ > 0.0) || !std::isfinite(sigma_)) throw ConfigError("policy sigma must be > 0");
}

LogisticPolicy LogisticPolicy::zeros(std::size_t dim, double sigma) {
  return LogisticPolicy(std::vector<double>(dim, 0.0), 0.0, sigma);
}

double LogisticPolicy::mean_logit(std::span<const double> features) const {
  if (features.size() != weights_.size())
    throw InvariantError("feature dimension " + std::to_string(features.size()) +
                         " does not match policy dimension " + std::to_string(weights_.size()));
  return std::inner_product(weights_.begin(), weights_.end(), features.begin(), bias_);
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double expected_probability(double mean, double sigma) {
  if (!(sigma > 0.0)) return sigmoid(mean);
  constexpr int kPoints = 161;
  constexpr double kHalfWidth = 8.0;
  double weighted = 0.0;
  double total = 0.0;
  for (int i = 0; i < kPoints; ++i) {
    const double u = -kHalfWidth + 2.0 * kHalfWidth * i / (kPoints - 1);
    const double w = std::exp(-0.5 * u * u) * ((i == 0 || i == kPoints - 1) ? 0.5 : 1.0);
    weighted += w * sigmoid(mean + sigma * u);
    total += w;
  }
  return std::clamp(weighted / total, 0.0, 1.0);
}

ForecastSample sample_forecast(const LogisticPolicy& policy, std::span<const double> features,
                               Rng& rng) {
  const double z = rng.normal(policy.mean_logit(features), policy.sigma());
  ForecastSample s;
  s.probability = sigmoid(z);
  s.noise_record = z;
  return s;
}

// ---------------------------------------------------------------------------
// Forecasters

ConstantForecaster::ConstantForecaster(double rate, std::string name)
    : rate_(rate), name_(std::move(name)) {
  if (!(rate > 0.0 && rate < 1.0))
    throw ConfigError("constant forecaster rate must lie strictly between 0 and 1");
}

std::unique_ptr<Forecaster> constant_forecaster(double rate) {
  return std::make_unique<ConstantForecaster>(rate);
}

PolicyForecaster::PolicyForecaster(LogisticPolicy policy, std::string name, Mode mode,
                                   std::uint64_t seed)
    : policy_(std::move(policy)), name_(std::move(name)), mode_(mode), seed_(seed) {}

ForecastSample PolicyForecaster::forecast(const ForecastInput& input) {
  const FeatureVector x = featurize(input.context_text, input.question);
  ForecastSample s;
  if (mode_ == Mode::sampled) {
    Rng rng(derive_seed(seed_, input.example_id));
    s = sample_forecast(policy_, x, rng);
  } else {
    s.probability = expected_probability(policy_.mean_logit(x), policy_.sigma());
  }
  s.trace = describe_evidence(policy_, x, s.probability);
  return s;
}

std::string describe_evidence(const LogisticPolicy& policy, std::span<const double> features,
                              double probability) {
  std::vector<std::pair<double, std::size_t>> contributions;
  for (std::size_t i = 0; i < features.size() && i < policy.dim(); ++i) {
    const double c = policy.weights()[i] * features[i];
    if (std::abs(c) >= 0.05) contributions.emplace_back(c, i);
  }
  std::sort(contributions.begin(), contributions.end(), [](const auto& a, const auto& b) {
    if (std::abs(a.first) != std::abs(b.first)) return std::abs(a.first) > std::abs(b.first);
    return a.second < b.second;
  });
  if (contributions.size() > 4) contributions.resize(4);

  char buf[96];
  std::snprintf(buf, sizeof buf, "Estimated probability %.3f.", probability);
  std::string trace = buf;
  if (contributions.empty()) {
    trace += " No specific evidence in the record shifts the estimate from the prior.";
    return trace;
  }
  trace += " Evidence considered:";
  for (const auto& [c, i] : contributions) {
    std::snprintf(buf, sizeof buf, " %s (%s%.2f logit);", std::string(feature_name(i)).c_str(),
                  c >= 0 ? "+" : "", c);
    trace += buf;
  }
  trace.back() = '.';
  return trace;
}

ParsedReply parse_probability_reply(std::string_view reply, std::string_view marker) {
  const std::size_t at = reply.find(marker);
  if (at == std::string_view::npos)
    throw ReplyParseError("reply lacks the '" + std::string(marker) + "' marker");
  std::size_t pos = at + marker.size();
  while (pos < reply.size()) {
    const char c = reply[pos];
    const bool starts_number =
        std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && pos + 1 < reply.size() && std::isdigit(static_cast<unsigned char>(reply[pos + 1])));
    if (!starts_number) {
      ++pos;
      continue;
    }
    std::size_t end = pos;
    while (end < reply.size() && std::isdigit(static_cast<unsigned char>(reply[end]))) ++end;
    if (end < reply.size() && reply[end] == '.') {
      ++end;
      while (end < reply.size() && std::isdigit(static_cast<unsigned char>(reply[end]))) ++end;
    }
    if (end < reply.size() && (reply[end] == 'e' || reply[end] == 'E')) {
      std::size_t e = end + 1;
      if (e < reply.size() && (reply[e] == '+' || reply[e] == '-')) ++e;
      if (e < reply.size() && std::isdigit(static_cast<unsigned char>(reply[e]))) {
        while (e < reply.size() && std::isdigit(static_cast<unsigned char>(reply[e]))) ++e;
        end = e;
      }
    }
    // A leading '-' makes the value negative and so out of range.
    const bool negative = pos > 0 && reply[pos - 1] == '-';
    double value = 0.0;
    const std::string token(reply.substr(pos, end - pos));
    value = std::strtod(token.c_str(), nullptr);
    if (!negative && value >= 0.0 && value <= 1.0) {
      std::string_view rest = reply.substr(end);
      while (!rest.empty() && is_space(rest.front())) rest.remove_prefix(1);
      while (!rest.empty() && is_space(rest.back())) rest.remove_suffix(1);
      return {value, std::string(rest)};
    }
    pos = end;
  }
  throw ReplyParseError("no probability in [0, 1] after the marker");
}

std::string render_prompt(std::string_view prompt_template, std::string_view instruction,
                          std::string_view context, std::string_view question) {
  std::string out;
  std::size_t i = 0;
  while (i < prompt_template.size()) {
    auto try_placeholder = [&](std::string_view name, std::string_view value) {
      if (prompt_template.substr(i, name.size()) != name) return false;
      out += value;
      i += name.size();
      return true;
    };
    if (prompt_template[i] == '{' &&
        (try_placeholder("{instruction}", instruction) || try_placeholder("{context}", context) ||
         try_placeholder("{question}", question)))
      continue;
    out += prompt_template[i++];
  }
  return out;
}

EndpointForecaster::EndpointForecaster(EndpointOptions options, std::string prompt_template,
                                       std::string instruction, ContextBudget budget)
    : endpoint_(std::move(options)),
      prompt_template_(std::move(prompt_template)),
      instruction_(std::move(instruction)),
      budget_(budget) {
  if (prompt_template_.find("{context}") == std::string::npos ||
      prompt_template_.find("{question}") == std::string::npos)
    throw ConfigError("prompt template must contain {context} and {question}");
}

ForecastSample EndpointForecaster::forecast(const ForecastInput& input) {
  std::vector<std::string> blocks;
  std::string_view text = input.context_text;
  for (std::size_t pos = 0;;) {
    const std::size_t next = text.find(kNoteSeparator, pos);
    blocks.emplace_back(text.substr(pos, next == std::string_view::npos ? next : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + kNoteSeparator.size();
  }
  const std::string context = truncate_context(blocks, budget_);
  const std::string prompt = render_prompt(prompt_template_, instruction_, context, input.question);
  const json reply = endpoint_.post(json{{"role", "forecast"}, {"text", prompt}});
  const auto it = reply.find("text");
  if (it == reply.end() || !it->is_string()) throw ReplyParseError("forecast reply lacks 'text'");
  ParsedReply parsed = parse_probability_reply(it->get<std::string>());
  return {std::clamp(parsed.probability, 0.0, 1.0), std::move(parsed.trace), std::nullopt};
}

std::unique_ptr<Forecaster> endpoint_forecaster(std::string base_url, std::string model_name,
                                                std::string prompt_template,
                                                double timeout_seconds) {
  EndpointOptions o;
  o.base_url = std::move(base_url);
  o.path = "/v1/forecast";
  o.model_name = std::move(model_name);
  o.timeout_seconds = timeout_seconds;
  return std::make_unique<EndpointForecaster>(std::move(o), std::move(prompt_template));
}

// ---------------------------------------------------------------------------
// Prediction records

json to_json(const Prediction& p) {
  return json{{"example_id", p.example_id},
              {"model_name", p.model_name},
              {"probability", p.probability},
              {"trace", p.trace},
              {"latency_ms", p.latency_ms}};
}

Prediction prediction_from_json(const json& object, std::size_t line) {
  Prediction p;
  p.example_id = require_string(object, "example_id", line);
  p.model_name = require_string(object, "model_name", line);
  p.probability = require_number(object, "probability", line);
  if (!(p.probability >= 0.0 && p.probability <= 1.0))
    throw ParseError("probability outside [0, 1]", line);
  if (auto it = object.find("trace"); it != object.end() && it->is_string()) p.trace = it->get<std::string>();
  if (auto it = object.find("latency_ms"); it != object.end() && it->is_number())
    p.latency_ms = it->get<double>();
  return p;
}

void write_predictions(const std::filesystem::path& path, const std::vector<Prediction>& predictions,
                       const ArtifactMeta* meta) {
  std::vector<json> records;
  records.reserve(predictions.size());
  for (const auto& p : predictions) records.push_back(to_json(p));
  write_jsonl(path, records, meta);
}

std::vector<Prediction> read_predictions(const std::filesystem::path& path) {
  std::vector<Prediction> out;
  read_jsonl(path, [&](const json& o, std::size_t line) { out.push_back(prediction_from_json(o, line)); });
  return out;
}

}  // namespace foresight
