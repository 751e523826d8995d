#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "foresight/endpoint.hpp"
#include "foresight/jsonl.hpp"

namespace foresight {

enum class JudgeDimension { clinical_reasoning, medical_knowledge, grounding, clinical_utility };

inline constexpr std::array<JudgeDimension, 4> kAllDimensions = {
    JudgeDimension::clinical_reasoning, JudgeDimension::medical_knowledge,
    JudgeDimension::grounding, JudgeDimension::clinical_utility};

std::string_view to_string(JudgeDimension dimension);
JudgeDimension parse_judge_dimension(std::string_view name);

// Winner in terms of the two systems being compared (after unblinding).
enum class Winner { A, B, tie };
// Which system was shown as "Response 1".
enum class PresentedOrder { AB, BA };
// What the judge saw and chose, in presentation terms.
enum class Preference { first, second, tie };

std::string_view to_string(Winner winner);
std::string_view to_string(PresentedOrder order);

struct JudgeVerdict {
  std::string example_id;
  JudgeDimension dimension = JudgeDimension::clinical_reasoning;
  Winner winner = Winner::tie;
  PresentedOrder presented_order = PresentedOrder::AB;

  friend bool operator==(const JudgeVerdict&, const JudgeVerdict&) = default;
};

json to_json(const JudgeVerdict& verdict);
JudgeVerdict verdict_from_json(const json& object, std::size_t line = 0);

// Blinded request: responses are only ever labelled "Response 1"/"Response 2".
struct JudgeRequest {
  std::string context;
  std::string question;
  std::string response_1;
  std::string response_2;
  std::vector<JudgeDimension> dimensions;  // one entry unless batch mode
  bool allow_tie = true;
};

// Renders the blinded judging prompt.
std::string render_judge_prompt(const JudgeRequest& request);

class JudgeClient {
 public:
  virtual ~JudgeClient() = default;
  // One preference per requested dimension, in request order. Throws
  // ReplyParseError for unusable replies and TransportError for transport
  // failures.
  virtual std::vector<Preference> judge(const JudgeRequest& request) = 0;
};

// Judge over HTTP.
//   request: {"role": "judge", "model", "text": <prompt>, "dimensions": [...]}
//   reply:   {"verdict": "1"|"2"|"tie"} or {"verdicts": {dimension: verdict}}
class EndpointJudge final : public JudgeClient {
 public:
  explicit EndpointJudge(EndpointOptions options);
  std::vector<Preference> judge(const JudgeRequest& request) override;

 private:
  JsonEndpoint endpoint_;
};

// Deterministic stand-ins used for harness validation.
class FirstPresentedJudge final : public JudgeClient {
 public:
  std::vector<Preference> judge(const JudgeRequest& request) override;
};

// Ties when the responses are identical, otherwise prefers the longer one
// (first on equal length).
class LongerResponseJudge final : public JudgeClient {
 public:
  std::vector<Preference> judge(const JudgeRequest& request) override;
};

struct JudgePair {
  std::string example_id;
  std::string context;
  std::string question;
  std::string trace_a;
  std::string trace_b;
};

struct JudgeOptions {
  bool forced_choice = false;  // ties disallowed in the request, rejected in replies
  bool batch = false;          // one request covering all dimensions
  int max_attempts = 2;
  int workers = 1;
};

struct JudgeRunStats {
  std::size_t pairs = 0;
  std::size_t skipped = 0;  // unparseable replies, failed transport, empty traces
};

// Presentation order is drawn per pair from a stream keyed by
// (rng_seed, example_id); preferences are mapped back to A/B before return.
std::vector<JudgeVerdict> run_pairwise(JudgeClient& client, std::span<const JudgePair> pairs,
                                       std::uint64_t rng_seed, const JudgeOptions& options = {},
                                       JudgeRunStats* stats = nullptr);

struct WinRateTable {
  std::array<double, 4> dimension_rate{};  // system A, indexed by JudgeDimension
  std::array<std::size_t, 4> dimension_count{};
  double overall = 0.0;
  std::size_t n_pairs = 0;
  std::size_t n_verdicts = 0;

  json to_json() const;
};

// Ties count half. Throws InvariantError on an empty verdict list.
WinRateTable aggregate(std::span<const JudgeVerdict> verdicts);

}  // namespace foresight
