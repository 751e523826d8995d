#include "foresight/synthetic.hpp"

#include <algorithm>
#include <cstdio>

#include "foresight/errors.hpp"
#include "foresight/rng.hpp"

namespace foresight {
namespace {

using std::chrono::hours;
using std::chrono::minutes;
using std::chrono::seconds;

// 2130-01-01T00:00:00Z; shifted far into the future like de-identified dates.
constexpr std::int64_t kEpochSeconds = 5049129600;

std::string make_id(const char* prefix, int width, long value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*ld", prefix, width, value);
  return buf;
}

NoteCategory interior_category(Rng& rng) {
  const double u = rng.uniform();
  if (u < 0.40) return NoteCategory::nursing;
  if (u < 0.65) return NoteCategory::physician;
  if (u < 0.80) return NoteCategory::radiology;
  if (u < 0.92) return NoteCategory::consult;
  return NoteCategory::other;
}

void append_sentence(std::string& text, std::string_view sentence) {
  if (!text.empty()) text += ' ';
  text += sentence;
  if (sentence.empty() || sentence.back() != '.') text += '.';
}

}  // namespace

json CohortConfig::to_json() const {
  json rates = json::object();
  for (EventKind k : kAllEventKinds)
    rates[std::string(foresight::to_string(k))] = event_rates[static_cast<std::size_t>(k)];
  return json{{"min_notes", min_notes},
              {"max_notes", max_notes},
              {"min_stay_hours", min_stay_hours},
              {"max_stay_hours", max_stay_hours},
              {"readmission_rate", readmission_rate},
              {"event_rates", rates},
              {"precursor_strength_min", precursor_strength_min},
              {"precursor_strength_max", precursor_strength_max},
              {"distractor_ratio", distractor_ratio},
              {"spacing_days", spacing_days}};
}

CohortConfig CohortConfig::from_json(const json& object) {
  CohortConfig c;
  if (!object.is_object()) throw ConfigError("cohort config must be an object");
  try {
    c.min_notes = object.value("min_notes", c.min_notes);
    c.max_notes = object.value("max_notes", c.max_notes);
    c.min_stay_hours = object.value("min_stay_hours", c.min_stay_hours);
    c.max_stay_hours = object.value("max_stay_hours", c.max_stay_hours);
    c.readmission_rate = object.value("readmission_rate", c.readmission_rate);
    c.precursor_strength_min = object.value("precursor_strength_min", c.precursor_strength_min);
    c.precursor_strength_max = object.value("precursor_strength_max", c.precursor_strength_max);
    c.distractor_ratio = object.value("distractor_ratio", c.distractor_ratio);
    c.spacing_days = object.value("spacing_days", c.spacing_days);
    if (auto it = object.find("event_rates"); it != object.end()) {
      for (const auto& [name, rate] : it->items())
        c.event_rates[static_cast<std::size_t>(parse_event_kind(name))] = rate.get<double>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("cohort config: ") + e.what());
  }
  c.validate();
  return c;
}

void CohortConfig::validate() const {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (min_notes < 2) throw ConfigError("min_notes must be >= 2");
  if (max_notes < min_notes) throw ConfigError("max_notes must be >= min_notes");
  if (min_stay_hours < 1 || max_stay_hours < min_stay_hours)
    throw ConfigError("stay hours must satisfy 1 <= min <= max");
  // Interior notes are placed on distinct-minute grid points.
  if (static_cast<long>(min_stay_hours) * 60 < max_notes)
    throw ConfigError("min_stay_hours too short for max_notes");
  if (!unit(readmission_rate)) throw ConfigError("readmission_rate must lie in [0,1]");
  for (double r : event_rates)
    if (!unit(r)) throw ConfigError("event rates must lie in [0,1]");
  if (!unit(precursor_strength_min) || !unit(precursor_strength_max) ||
      precursor_strength_min > precursor_strength_max)
    throw ConfigError("precursor strength range must satisfy 0 <= min <= max <= 1");
  if (!unit(distractor_ratio)) throw ConfigError("distractor_ratio must lie in [0,1]");
  if (spacing_days * 24 < max_stay_hours)
    throw ConfigError("spacing_days must exceed the longest stay");
}

SyntheticCohort generate_synthetic_cohort(std::uint64_t seed, int n_admissions,
                                          const CohortConfig& config) {
  if (n_admissions < 1) throw ConfigError("n_admissions must be >= 1");
  config.validate();

  Rng rng(derive_seed(seed, "synthetic-cohort"));
  SyntheticCohort cohort;
  int patient_counter = 0;
  std::string patient_id;

  for (int a = 0; a < n_admissions; ++a) {
    if (a == 0 || !rng.bernoulli(config.readmission_rate))
      patient_id = make_id("P", 5, ++patient_counter);
    const std::string admission_id = make_id("A", 6, a + 1);

    const int n_notes = static_cast<int>(rng.uniform_int(config.min_notes, config.max_notes));
    const std::int64_t stay_minutes =
        rng.uniform_int(static_cast<std::int64_t>(config.min_stay_hours) * 60,
                        static_cast<std::int64_t>(config.max_stay_hours) * 60);
    const Instant start{seconds{kEpochSeconds + static_cast<std::int64_t>(a) * config.spacing_days *
                                                    86400 +
                                rng.uniform_int(0, 23 * 60) * 60}};
    const Instant discharge = start + minutes{stay_minutes};

    // First note at admission, last note at discharge, interior notes on
    // minute offsets drawn with replacement (so timestamp ties can occur).
    std::vector<std::int64_t> offsets{0};
    for (int i = 0; i < n_notes - 2; ++i) offsets.push_back(rng.uniform_int(1, stay_minutes - 1));
    offsets.push_back(stay_minutes);
    std::sort(offsets.begin() + 1, offsets.end() - 1);

    std::vector<Note> notes(n_notes);
    for (int i = 0; i < n_notes; ++i) {
      Note& n = notes[i];
      n.note_id = admission_id + "-N" + make_id("", 2, i);
      n.admission_id = admission_id;
      n.patient_id = patient_id;
      n.timestamp = start + minutes{offsets[i]};
      n.category = i == 0 ? NoteCategory::physician
                   : i == n_notes - 1 ? NoteCategory::discharge
                                      : interior_category(rng);
      const auto filler = filler_sentences(to_string(n.category));
      const int n_filler = static_cast<int>(rng.uniform_int(1, 2));
      for (int s = 0; s < n_filler; ++s)
        append_sentence(n.text, filler[rng.uniform_int(0, static_cast<std::int64_t>(filler.size()) - 1)]);
    }

    std::vector<LatentEventTrack> tracks;
    bool died = false;
    for (EventKind kind : kAllEventKinds) {
      const auto& bank = phrases_for(kind);
      LatentEventTrack track;
      track.kind = kind;
      track.precursor_strength =
          config.precursor_strength_min +
          (config.precursor_strength_max - config.precursor_strength_min) * rng.uniform();
      const bool happens = rng.bernoulli(config.event_rates[static_cast<std::size_t>(kind)]);
      int event_index = n_notes;  // past the end: no event
      if (happens) {
        event_index = kind == EventKind::in_hospital_death
                          ? n_notes - 1
                          : static_cast<int>(rng.uniform_int(1, n_notes - 2));
        track.occurrence_time = notes[event_index].timestamp;
        if (kind == EventKind::in_hospital_death) died = true;
      }
      const double p_note =
          happens ? track.precursor_strength : track.precursor_strength * config.distractor_ratio;
      // Precursors only in notes strictly earlier than the event, never in the
      // discharge note.
      for (int i = 0; i < n_notes - 1; ++i) {
        if (happens && notes[i].timestamp >= *track.occurrence_time) break;
        if (rng.bernoulli(p_note))
          append_sentence(notes[i].text, bank.precursors[rng.uniform_int(0, 2)]);
      }
      if (happens) append_sentence(notes[event_index].text, bank.confirmation);
      tracks.push_back(track);
    }

    cohort.trajectories.push_back(Trajectory::build(std::move(notes), discharge, died));
    cohort.tracks.emplace(admission_id, std::move(tracks));
  }
  return cohort;
}

}  // namespace foresight
