#include "foresight/judge.hpp"

#include <set>

#include "foresight/errors.hpp"
#include "foresight/parallel.hpp"
#include "foresight/rng.hpp"

namespace foresight {

std::string_view to_string(JudgeDimension dimension) {
  switch (dimension) {
    case JudgeDimension::clinical_reasoning: return "clinical_reasoning";
    case JudgeDimension::medical_knowledge: return "medical_knowledge";
    case JudgeDimension::grounding: return "grounding";
    case JudgeDimension::clinical_utility: return "clinical_utility";
  }
  return "clinical_reasoning";
}

JudgeDimension parse_judge_dimension(std::string_view name) {
  for (auto d : kAllDimensions)
    if (to_string(d) == name) return d;
  throw ParseError("unknown judge dimension '" + std::string(name) + "'");
}

std::string_view to_string(Winner winner) {
  switch (winner) {
    case Winner::A: return "A";
    case Winner::B: return "B";
    case Winner::tie: return "tie";
  }
  return "tie";
}

std::string_view to_string(PresentedOrder order) { return order == PresentedOrder::AB ? "AB" : "BA"; }

json to_json(const JudgeVerdict& v) {
  return json{{"example_id", v.example_id},
              {"dimension", std::string(to_string(v.dimension))},
              {"winner", std::string(to_string(v.winner))},
              {"presented_order", std::string(to_string(v.presented_order))}};
}

JudgeVerdict verdict_from_json(const json& object, std::size_t line) {
  JudgeVerdict v;
  v.example_id = require_string(object, "example_id", line);
  v.dimension = parse_judge_dimension(require_string(object, "dimension", line));
  const std::string winner = require_string(object, "winner", line);
  if (winner == "A") v.winner = Winner::A;
  else if (winner == "B") v.winner = Winner::B;
  else if (winner == "tie") v.winner = Winner::tie;
  else throw ParseError("winner must be A, B or tie", line);
  const std::string order = require_string(object, "presented_order", line);
  if (order == "AB") v.presented_order = PresentedOrder::AB;
  else if (order == "BA") v.presented_order = PresentedOrder::BA;
  else throw ParseError("presented_order must be AB or BA", line);
  return v;
}

namespace {

std::string_view describe(JudgeDimension d) {
  switch (d) {
    case JudgeDimension::clinical_reasoning:
      return "clinical reasoning: is the argument from the record to the estimate sound?";
    case JudgeDimension::medical_knowledge:
      return "medical knowledge: is the medicine invoked accurate and relevant?";
    case JudgeDimension::grounding:
      return "grounding: does the response rely on findings actually present in the record?";
    case JudgeDimension::clinical_utility:
      return "clinical utility: would the response help a clinician anticipate the outcome?";
  }
  return "";
}

Preference parse_preference(const json& value, bool allow_tie) {
  if (!value.is_string()) throw ReplyParseError("verdict must be a string");
  const std::string v = value.get<std::string>();
  if (v == "1") return Preference::first;
  if (v == "2") return Preference::second;
  if (v == "tie" && allow_tie) return Preference::tie;
  throw ReplyParseError("unusable verdict '" + v + "'");
}

}  // namespace

std::string render_judge_prompt(const JudgeRequest& request) {
  std::string out =
      "You are reviewing two responses to the same clinical forecasting question. Both were "
      "written from the clinical record below. Judge only the content of the responses.\n\n"
      "### Clinical record\n";
  out += request.context;
  out += "\n\n### Question\n";
  out += request.question;
  out += "\n\n### Response 1\n";
  out += request.response_1;
  out += "\n\n### Response 2\n";
  out += request.response_2;
  out += "\n\n### Criteria\n";
  for (auto d : request.dimensions) {
    out += "- ";
    out += describe(d);
    out += '\n';
  }
  out += request.allow_tie ? "\nFor each criterion answer \"1\", \"2\" or \"tie\".\n"
                           : "\nFor each criterion answer \"1\" or \"2\".\n";
  return out;
}

EndpointJudge::EndpointJudge(EndpointOptions options) : endpoint_(std::move(options)) {}

std::vector<Preference> EndpointJudge::judge(const JudgeRequest& request) {
  json dims = json::array();
  for (auto d : request.dimensions) dims.push_back(std::string(to_string(d)));
  const json reply = endpoint_.post(json{{"role", "judge"},
                                         {"text", render_judge_prompt(request)},
                                         {"dimensions", dims}});
  std::vector<Preference> out;
  if (request.dimensions.size() == 1 && reply.contains("verdict")) {
    out.push_back(parse_preference(reply["verdict"], request.allow_tie));
    return out;
  }
  const auto it = reply.find("verdicts");
  if (it == reply.end() || !it->is_object()) throw ReplyParseError("judge reply lacks verdicts");
  for (auto d : request.dimensions) {
    const auto v = it->find(std::string(to_string(d)));
    if (v == it->end()) throw ReplyParseError("judge reply lacks " + std::string(to_string(d)));
    out.push_back(parse_preference(*v, request.allow_tie));
  }
  return out;
}

std::vector<Preference> FirstPresentedJudge::judge(const JudgeRequest& request) {
  return std::vector<Preference>(request.dimensions.size(), Preference::first);
}

std::vector<Preference> LongerResponseJudge::judge(const JudgeRequest& request) {
  Preference p = Preference::first;
  if (request.response_1 == request.response_2)
    p = request.allow_tie ? Preference::tie : Preference::first;
  else if (request.response_2.size() > request.response_1.size())
    p = Preference::second;
  return std::vector<Preference>(request.dimensions.size(), p);
}

std::vector<JudgeVerdict> run_pairwise(JudgeClient& client, std::span<const JudgePair> pairs,
                                       std::uint64_t rng_seed, const JudgeOptions& options,
                                       JudgeRunStats* stats) {
  if (options.max_attempts < 1) throw ConfigError("judge max_attempts must be >= 1");
  std::vector<std::vector<JudgeVerdict>> per_pair(pairs.size());
  std::vector<char> skipped(pairs.size(), 0);

  parallel_for(pairs.size(), options.workers, [&](std::size_t i) {
    const JudgePair& pair = pairs[i];
    if (pair.trace_a.empty() || pair.trace_b.empty()) {
      skipped[i] = 1;
      return;
    }
    Rng rng(derive_seed(rng_seed, pair.example_id));
    const PresentedOrder order = rng.bernoulli(0.5) ? PresentedOrder::BA : PresentedOrder::AB;

    JudgeRequest base;
    base.context = pair.context;
    base.question = pair.question;
    base.response_1 = order == PresentedOrder::AB ? pair.trace_a : pair.trace_b;
    base.response_2 = order == PresentedOrder::AB ? pair.trace_b : pair.trace_a;
    base.allow_tie = !options.forced_choice;

    std::vector<std::vector<JudgeDimension>> calls;
    if (options.batch)
      calls.emplace_back(kAllDimensions.begin(), kAllDimensions.end());
    else
      for (auto d : kAllDimensions) calls.push_back({d});

    std::vector<JudgeVerdict> verdicts;
    for (const auto& dims : calls) {
      JudgeRequest request = base;
      request.dimensions = dims;
      std::vector<Preference> prefs;
      for (int attempt = 1;; ++attempt) {
        try {
          prefs = client.judge(request);
          if (prefs.size() != dims.size()) throw ReplyParseError("wrong number of verdicts");
          if (!request.allow_tie)
            for (auto p : prefs)
              if (p == Preference::tie) throw ReplyParseError("tie in forced-choice mode");
          break;
        } catch (const Error& e) {
          if (e.kind() != "reply_parse_error" && e.kind() != "transport_error") throw;
          if (attempt >= options.max_attempts) {
            skipped[i] = 1;
            return;
          }
        }
      }
      for (std::size_t k = 0; k < dims.size(); ++k) {
        Winner w = Winner::tie;
        if (prefs[k] == Preference::first) w = order == PresentedOrder::AB ? Winner::A : Winner::B;
        if (prefs[k] == Preference::second) w = order == PresentedOrder::AB ? Winner::B : Winner::A;
        verdicts.push_back({pair.example_id, dims[k], w, order});
      }
    }
    per_pair[i] = std::move(verdicts);
  });

  std::vector<JudgeVerdict> out;
  JudgeRunStats local;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (skipped[i]) {
      ++local.skipped;
      continue;
    }
    ++local.pairs;
    out.insert(out.end(), per_pair[i].begin(), per_pair[i].end());
  }
  if (stats) *stats = local;
  return out;
}

json WinRateTable::to_json() const {
  json dims = json::object();
  for (auto d : kAllDimensions) {
    const auto i = static_cast<std::size_t>(d);
    dims[std::string(foresight::to_string(d))] =
        json{{"win_rate", dimension_count[i] ? json(dimension_rate[i]) : json(nullptr)},
             {"n", dimension_count[i]}};
  }
  return json{{"dimensions", dims}, {"overall", overall}, {"n_pairs", n_pairs},
              {"n_verdicts", n_verdicts}};
}

WinRateTable aggregate(std::span<const JudgeVerdict> verdicts) {
  if (verdicts.empty()) throw InvariantError("cannot aggregate an empty verdict list");
  WinRateTable t;
  std::array<double, 4> score{};
  double total = 0.0;
  std::set<std::string> pairs;
  for (const auto& v : verdicts) {
    const auto i = static_cast<std::size_t>(v.dimension);
    const double s = v.winner == Winner::A ? 1.0 : v.winner == Winner::tie ? 0.5 : 0.0;
    score[i] += s;
    ++t.dimension_count[i];
    total += s;
    pairs.insert(v.example_id);
  }
  for (std::size_t i = 0; i < 4; ++i)
    if (t.dimension_count[i]) t.dimension_rate[i] = score[i] / static_cast<double>(t.dimension_count[i]);
  t.n_verdicts = verdicts.size();
  t.n_pairs = pairs.size();
  t.overall = total / static_cast<double>(verdicts.size());
  return t;
}

}  // namespace foresight
