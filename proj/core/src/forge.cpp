#include "foresight/forge.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "foresight/errors.hpp"
#include "foresight/rng.hpp"

namespace foresight {

json to_json(const PredictionExample& e) {
  return json{{"example_id", e.example_id},
              {"admission_id", e.admission_id},
              {"patient_id", e.patient_id},
              {"split_time", format_rfc3339(e.split_time)},
              {"question", e.question},
              {"category", std::string(to_string(e.category))},
              {"label", e.label},
              {"context_text", e.context_text}};
}

PredictionExample example_from_json(const json& object, std::size_t line) {
  PredictionExample e;
  e.example_id = require_string(object, "example_id", line);
  e.admission_id = require_string(object, "admission_id", line);
  e.patient_id = require_string(object, "patient_id", line);
  try {
    e.split_time = parse_rfc3339(require_string(object, "split_time", line));
    e.category = parse_question_category(require_string(object, "category", line));
  } catch (const ParseError& err) {
    if (err.line() != 0) throw;
    throw ParseError(err.what(), line);
  }
  e.question = require_string(object, "question", line);
  const auto label = object.find("label");
  if (label == object.end() || !label->is_number_integer() ||
      (label->get<int>() != 0 && label->get<int>() != 1))
    throw ParseError("label must be 0 or 1", line);
  e.label = label->get<int>();
  e.context_text = require_string(object, "context_text", line);
  return e;
}

void write_examples(const std::filesystem::path& path, const std::vector<PredictionExample>& examples,
                    const ArtifactMeta* meta) {
  std::vector<json> records;
  records.reserve(examples.size());
  for (const auto& e : examples) records.push_back(to_json(e));
  write_jsonl(path, records, meta);
}

std::vector<PredictionExample> read_examples(const std::filesystem::path& path) {
  std::vector<PredictionExample> out;
  read_jsonl(path, [&](const json& o, std::size_t line) { out.push_back(example_from_json(o, line)); });
  return out;
}

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::positive: return "positive";
    case Verdict::negative: return "negative";
    case Verdict::unresolvable: return "unresolvable";
  }
  return "unresolvable";
}

Verdict parse_verdict(std::string_view text) {
  if (text == "positive") return Verdict::positive;
  if (text == "negative") return Verdict::negative;
  return Verdict::unresolvable;
}

// ---------------------------------------------------------------------------
// Rule annotator

RuleAnnotator::RuleAnnotator(std::vector<EventKind> kinds) : kinds_(std::move(kinds)) {
  if (kinds_.empty()) throw ConfigError("rule annotator needs at least one event kind");
}

std::vector<ProposedQuestion> RuleAnnotator::propose_questions(const std::string&) {
  std::vector<ProposedQuestion> out;
  out.reserve(kinds_.size());
  for (EventKind k : kinds_) {
    const auto& bank = phrases_for(k);
    out.push_back({std::string(bank.question), bank.category});
  }
  return out;
}

Verdict RuleAnnotator::resolve(const std::string& question, const std::string& future_evidence) {
  const auto kind = event_kind_for_question(question);
  if (!kind || std::find(kinds_.begin(), kinds_.end(), *kind) == kinds_.end())
    return Verdict::unresolvable;
  return future_evidence.find(phrases_for(*kind).confirmation) != std::string::npos
             ? Verdict::positive
             : Verdict::negative;
}

std::unique_ptr<RuleAnnotator> rule_annotator(const LatentTrackMap& latent_tracks,
                                              const std::vector<std::string>& kind_names) {
  std::vector<EventKind> kinds;
  if (!kind_names.empty()) {
    for (const auto& name : kind_names) kinds.push_back(parse_event_kind(name));
  } else if (!latent_tracks.empty()) {
    std::set<EventKind> present;
    for (const auto& [admission, tracks] : latent_tracks)
      for (const auto& t : tracks) present.insert(t.kind);
    kinds.assign(present.begin(), present.end());
  } else {
    kinds.assign(kAllEventKinds.begin(), kAllEventKinds.end());
  }
  return std::make_unique<RuleAnnotator>(std::move(kinds));
}

// ---------------------------------------------------------------------------
// Endpoint annotator

EndpointAnnotator::EndpointAnnotator(EndpointOptions options) : endpoint_(std::move(options)) {}

std::vector<ProposedQuestion> EndpointAnnotator::propose_questions(const std::string& context_text) {
  const json reply = endpoint_.post(json{{"role", "propose"}, {"text", context_text}});
  const auto it = reply.find("questions");
  if (it == reply.end() || !it->is_array())
    throw ReplyParseError("propose reply lacks a 'questions' array");
  std::vector<ProposedQuestion> out;
  for (const auto& item : *it) {
    ProposedQuestion q;
    if (item.is_string()) {
      q.question = item.get<std::string>();
    } else if (item.is_object() && item.contains("question") && item["question"].is_string()) {
      q.question = item["question"].get<std::string>();
      if (auto c = item.find("category"); c != item.end() && c->is_string()) {
        try {
          q.category = parse_question_category(c->get<std::string>());
        } catch (const ParseError&) {
          q.category = QuestionCategory::other;
        }
      }
    } else {
      continue;
    }
    if (q.question.empty()) continue;
    if (q.category == QuestionCategory::other)
      if (auto kind = event_kind_for_question(q.question)) q.category = phrases_for(*kind).category;
    out.push_back(std::move(q));
  }
  return out;
}

Verdict EndpointAnnotator::resolve(const std::string& question, const std::string& future_evidence) {
  const json reply =
      endpoint_.post(json{{"role", "resolve"}, {"text", future_evidence}, {"question", question}});
  const auto it = reply.find("verdict");
  if (it == reply.end() || !it->is_string()) return Verdict::unresolvable;
  return parse_verdict(it->get<std::string>());
}

std::unique_ptr<EndpointAnnotator> endpoint_annotator(std::string base_url, std::string model_name,
                                                      std::string auth_token,
                                                      double timeout_seconds, int max_retries) {
  EndpointOptions o;
  o.base_url = std::move(base_url);
  o.model_name = std::move(model_name);
  o.auth_token = std::move(auth_token);
  o.timeout_seconds = timeout_seconds;
  o.max_retries = max_retries;
  return std::make_unique<EndpointAnnotator>(std::move(o));
}

// ---------------------------------------------------------------------------
// Splits

namespace {

std::vector<std::size_t> candidate_positions(const Trajectory& t, const SplitOptions& options) {
  if (options.min_context < 1 || options.min_future < 1)
    throw ConfigError("split bounds must be >= 1");
  const auto& notes = t.notes();
  const std::size_t n = notes.size();
  std::vector<std::size_t> out;
  // Position i puts notes [0, i) in context and [i, n) in the future.
  for (std::size_t i = static_cast<std::size_t>(options.min_context);
       i + static_cast<std::size_t>(options.min_future) <= n; ++i)
    if (notes[i - 1].timestamp < notes[i].timestamp) out.push_back(i);
  return out;
}

SplitPoint make_split(const Trajectory& t, std::size_t position, Rng& rng) {
  const auto& notes = t.notes();
  const auto lo = notes[position - 1].timestamp;
  const auto gap = (notes[position].timestamp - lo).count();
  SplitPoint s;
  s.admission_id = t.admission_id();
  s.split_time = lo + std::chrono::seconds{rng.uniform_int(0, gap - 1)};
  for (std::size_t i = 0; i < notes.size(); ++i)
    (i < position ? s.context_note_ids : s.future_note_ids).push_back(notes[i].note_id);
  if (!(s.split_time < t.discharge_time()))
    throw InvariantError("split not before discharge in " + t.admission_id());
  return s;
}

}  // namespace

SplitPoint sample_split(const Trajectory& trajectory, std::uint64_t rng_seed,
                        const SplitOptions& options) {
  auto splits = sample_splits(trajectory, rng_seed, 1, options);
  return std::move(splits.front());
}

std::vector<SplitPoint> sample_splits(const Trajectory& trajectory, std::uint64_t rng_seed,
                                      int count, const SplitOptions& options) {
  if (count < 1) throw ConfigError("split count must be >= 1");
  auto candidates = candidate_positions(trajectory, options);
  if (candidates.empty())
    throw SplitRejected("admission " + trajectory.admission_id() +
                        ": no split position leaves " + std::to_string(options.min_context) +
                        " context and " + std::to_string(options.min_future) +
                        " future notes at distinct timestamps");
  Rng rng(derive_seed(rng_seed, trajectory.admission_id()));
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(count), candidates.size());
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(candidates.size()) - 1));
    std::swap(candidates[i], candidates[j]);
  }
  std::vector<std::size_t> chosen(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(chosen.begin(), chosen.end());
  std::vector<SplitPoint> out;
  for (std::size_t pos : chosen) out.push_back(make_split(trajectory, pos, rng));
  return out;
}

std::string render_note(const Note& note) {
  return "[" + format_rfc3339(note.timestamp) + "] " + std::string(to_string(note.category)) +
         ": " + note.text;
}

// ---------------------------------------------------------------------------
// Example generation

namespace {

template <typename Call>
auto with_attempts(int max_attempts, Call&& call) -> decltype(call()) {
  for (int attempt = 1;; ++attempt) {
    try {
      return call();
    } catch (const TransportError&) {
      if (attempt >= max_attempts) throw;
    } catch (const ReplyParseError&) {
      if (attempt >= max_attempts) throw;
    }
  }
}

}  // namespace

std::vector<PredictionExample> generate_examples(const Trajectory& trajectory,
                                                 const SplitPoint& split, Annotator& annotator,
                                                 const ExampleOptions& options,
                                                 GenerationStats* stats) {
  if (split.admission_id != trajectory.admission_id())
    throw InvariantError("split belongs to " + split.admission_id + ", trajectory is " +
                         trajectory.admission_id());
  if (options.questions_per_split < 0) throw ConfigError("questions_per_split must be >= 0");
  GenerationStats local;
  GenerationStats& st = stats ? *stats : local;
  ++st.splits_attempted;

  std::vector<std::string> context_blocks;
  std::string future_evidence;
  for (const auto& note : trajectory.notes()) {
    if (note.timestamp <= split.split_time) {
      context_blocks.push_back(render_note(note));
    } else {
      if (!options.include_discharge_notes && note.category == NoteCategory::discharge) continue;
      if (!future_evidence.empty()) future_evidence += kNoteSeparator;
      future_evidence += render_note(note);
    }
  }
  if (context_blocks.size() != split.context_note_ids.size())
    throw InvariantError("split note partition does not match trajectory " + split.admission_id);
  const std::string context_text = truncate_context(context_blocks, options.budget);

  std::vector<PredictionExample> out;
  try {
    auto proposed = with_attempts(options.max_attempts,
                                  [&] { return annotator.propose_questions(context_text); });
    if (proposed.size() > static_cast<std::size_t>(options.questions_per_split))
      proposed.resize(static_cast<std::size_t>(options.questions_per_split));
    st.questions_proposed += proposed.size();

    const std::string stem =
        split.admission_id + "-t" + std::to_string(split.split_time.time_since_epoch().count());
    for (std::size_t q = 0; q < proposed.size(); ++q) {
      const Verdict v = with_attempts(options.max_attempts, [&] {
        return annotator.resolve(proposed[q].question, future_evidence);
      });
      if (v == Verdict::unresolvable) {
        ++st.unresolvable_dropped;
        continue;
      }
      PredictionExample e;
      e.example_id = stem + "-q" + std::to_string(q);
      e.admission_id = trajectory.admission_id();
      e.patient_id = trajectory.patient_id();
      e.split_time = split.split_time;
      e.question = proposed[q].question;
      e.category = proposed[q].category;
      e.label = v == Verdict::positive ? 1 : 0;
      e.context_text = context_text;
      out.push_back(std::move(e));
    }
  } catch (const Error& e) {
    if (e.kind() != "transport_error" && e.kind() != "reply_parse_error") throw;
    spdlog::warn("skipping split of {}: {}", split.admission_id, e.what());
    ++st.splits_skipped;
    return {};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Partition and stats

Partition partition_dataset(const std::vector<PredictionExample>& examples, double test_fraction,
                            std::uint64_t rng_seed, std::size_t test_questions) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw PartitionError("test_fraction must lie in (0, 1)");
  std::map<std::string, std::size_t> group_sizes;
  for (const auto& e : examples) ++group_sizes[e.patient_id];
  if (group_sizes.size() < 2)
    throw PartitionError("need at least two patient groups to partition, got " +
                         std::to_string(group_sizes.size()));

  std::vector<std::pair<std::string, std::size_t>> groups(group_sizes.begin(), group_sizes.end());
  Rng rng(derive_seed(rng_seed, "partition"));
  for (std::size_t i = groups.size() - 1; i > 0; --i)
    std::swap(groups[i], groups[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i)))]);

  const std::size_t target =
      test_questions > 0 ? test_questions
                         : static_cast<std::size_t>(std::ceil(test_fraction * static_cast<double>(examples.size())));
  std::unordered_set<std::string> test_patients;
  std::size_t in_test = 0;
  for (std::size_t g = 0; g + 1 < groups.size() && in_test < target; ++g) {
    test_patients.insert(groups[g].first);
    in_test += groups[g].second;
  }

  Partition p;
  for (const auto& e : examples) (test_patients.count(e.patient_id) ? p.test : p.train).push_back(e);

  std::unordered_set<std::string> train_admissions;
  for (const auto& e : p.train) train_admissions.insert(e.admission_id);
  for (const auto& e : p.test)
    if (train_admissions.count(e.admission_id))
      throw InvariantError("admission " + e.admission_id + " spans two patients and both splits");
  return p;
}

json DatasetStats::to_json() const {
  return json{{"n_examples", n_examples},
              {"n_trajectories", n_trajectories},
              {"mean_questions_per_trajectory", mean_questions_per_trajectory},
              {"positive_rate", positive_rate},
              {"per_category", per_category}};
}

DatasetStats dataset_stats(const std::vector<PredictionExample>& examples) {
  DatasetStats s;
  s.n_examples = examples.size();
  std::unordered_set<std::string> admissions;
  std::size_t positives = 0;
  for (const auto& e : examples) {
    admissions.insert(e.admission_id);
    positives += static_cast<std::size_t>(e.label);
    ++s.per_category[std::string(to_string(e.category))];
  }
  s.n_trajectories = admissions.size();
  if (s.n_trajectories > 0)
    s.mean_questions_per_trajectory =
        static_cast<double>(s.n_examples) / static_cast<double>(s.n_trajectories);
  if (s.n_examples > 0)
    s.positive_rate = static_cast<double>(positives) / static_cast<double>(s.n_examples);
  return s;
}

}  // namespace foresight
