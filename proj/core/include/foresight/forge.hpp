#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "foresight/corpus.hpp"
#include "foresight/endpoint.hpp"
#include "foresight/forecaster.hpp"

namespace foresight {

// Division of one trajectory into the observed context (timestamp <= split)
// and withheld future (timestamp > split).
struct SplitPoint {
  std::string admission_id;
  Instant split_time;
  std::vector<std::string> context_note_ids;
  std::vector<std::string> future_note_ids;
};

struct PredictionExample {
  std::string example_id;
  std::string admission_id;
  std::string patient_id;
  Instant split_time;
  std::string question;
  QuestionCategory category = QuestionCategory::other;
  int label = 0;
  std::string context_text;

  friend bool operator==(const PredictionExample&, const PredictionExample&) = default;
};

json to_json(const PredictionExample& example);
PredictionExample example_from_json(const json& object, std::size_t line = 0);
void write_examples(const std::filesystem::path& path, const std::vector<PredictionExample>& examples,
                    const ArtifactMeta* meta = nullptr);
std::vector<PredictionExample> read_examples(const std::filesystem::path& path);

struct ProposedQuestion {
  std::string question;
  QuestionCategory category = QuestionCategory::other;
};

enum class Verdict { positive, negative, unresolvable };

std::string_view to_string(Verdict verdict);
// Anything outside {positive, negative, unresolvable} maps to unresolvable.
Verdict parse_verdict(std::string_view text);

// Question author and label resolver. propose_questions only ever sees
// pre-split text; resolve only ever sees post-split text.
class Annotator {
 public:
  virtual ~Annotator() = default;
  virtual std::vector<ProposedQuestion> propose_questions(const std::string& context_text) = 0;
  virtual Verdict resolve(const std::string& question, const std::string& future_evidence) = 0;
};

// Deterministic annotator for synthetic corpora: one fixed question per event
// kind, resolved positive iff the kind's confirmation phrase appears in the
// future evidence.
class RuleAnnotator final : public Annotator {
 public:
  explicit RuleAnnotator(std::vector<EventKind> kinds);
  std::vector<ProposedQuestion> propose_questions(const std::string& context_text) override;
  Verdict resolve(const std::string& question, const std::string& future_evidence) override;

  const std::vector<EventKind>& kinds() const noexcept { return kinds_; }

 private:
  std::vector<EventKind> kinds_;
};

// Builds a RuleAnnotator asking about every event kind present in the tracks
// (all kinds when the map is empty). kind_names, when given, restricts the
// set; unknown names raise ConfigError.
std::unique_ptr<RuleAnnotator> rule_annotator(const LatentTrackMap& latent_tracks,
                                              const std::vector<std::string>& kind_names = {});

// Annotator backed by an HTTP endpoint.
//   request:  {"role": "propose"|"resolve", "model", "text", "question"?}
//   reply:    {"questions": [string | {"question", "category"}]} or {"verdict"}
class EndpointAnnotator final : public Annotator {
 public:
  explicit EndpointAnnotator(EndpointOptions options);
  std::vector<ProposedQuestion> propose_questions(const std::string& context_text) override;
  Verdict resolve(const std::string& question, const std::string& future_evidence) override;

 private:
  JsonEndpoint endpoint_;
};

std::unique_ptr<EndpointAnnotator> endpoint_annotator(std::string base_url, std::string model_name,
                                                      std::string auth_token,
                                                      double timeout_seconds, int max_retries = 2);

// Split sampling. Candidate positions are the gaps between consecutive
// distinct timestamps leaving at least min_context notes before and
// min_future notes after; one is chosen uniformly, then the split instant
// uniformly within [earlier timestamp, later timestamp).
struct SplitOptions {
  int min_context = 3;
  int min_future = 1;
};

SplitPoint sample_split(const Trajectory& trajectory, std::uint64_t rng_seed,
                        const SplitOptions& options = {});
// Up to `count` splits at distinct positions, in chronological order.
std::vector<SplitPoint> sample_splits(const Trajectory& trajectory, std::uint64_t rng_seed,
                                      int count, const SplitOptions& options = {});

// One rendered block per note: "[timestamp] category: text".
std::string render_note(const Note& note);

struct ExampleOptions {
  int questions_per_split = 10;
  int max_attempts = 3;  // annotator calls per request before the split is skipped
  ContextBudget budget;
  bool include_discharge_notes = true;  // in the resolution evidence
};

struct GenerationStats {
  std::size_t splits_attempted = 0;
  std::size_t splits_skipped = 0;
  std::size_t questions_proposed = 0;
  std::size_t unresolvable_dropped = 0;
};

// Returns at most questions_per_split examples labelled from future notes
// only. Annotator transport failures are retried up to max_attempts; after
// that the split is skipped (empty result, counted in stats).
std::vector<PredictionExample> generate_examples(const Trajectory& trajectory,
                                                 const SplitPoint& split, Annotator& annotator,
                                                 const ExampleOptions& options = {},
                                                 GenerationStats* stats = nullptr);

struct Partition {
  std::vector<PredictionExample> train;
  std::vector<PredictionExample> test;
};

// Splits by whole patient groups (so admissions never straddle). Groups are
// shuffled by seed and moved into test until it holds at least
// ceil(test_fraction * N) examples, or test_questions when that is > 0. At
// least one group always stays in train. Throws PartitionError with fewer
// than two patient groups.
Partition partition_dataset(const std::vector<PredictionExample>& examples, double test_fraction,
                            std::uint64_t rng_seed, std::size_t test_questions = 0);

struct DatasetStats {
  std::size_t n_examples = 0;
  std::size_t n_trajectories = 0;
  double mean_questions_per_trajectory = 0.0;
  double positive_rate = 0.0;
  std::map<std::string, std::size_t> per_category;

  json to_json() const;
};

DatasetStats dataset_stats(const std::vector<PredictionExample>& examples);

}  // namespace foresight
