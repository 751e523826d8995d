#include "foresight/corpus.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>

#include <spdlog/spdlog.h>

#include "foresight/errors.hpp"

namespace foresight {

std::string_view to_string(NoteCategory category) {
  switch (category) {
    case NoteCategory::nursing: return "nursing";
    case NoteCategory::physician: return "physician";
    case NoteCategory::radiology: return "radiology";
    case NoteCategory::consult: return "consult";
    case NoteCategory::discharge: return "discharge";
    case NoteCategory::other: return "other";
  }
  return "other";
}

NoteCategory parse_note_category(std::string_view name) {
  for (auto c : {NoteCategory::nursing, NoteCategory::physician, NoteCategory::radiology,
                 NoteCategory::consult, NoteCategory::discharge, NoteCategory::other})
    if (to_string(c) == name) return c;
  throw ParseError("unknown note category '" + std::string(name) + "'");
}

json to_json(const Note& note) {
  return json{{"note_id", note.note_id},
              {"admission_id", note.admission_id},
              {"patient_id", note.patient_id},
              {"timestamp", format_rfc3339(note.timestamp)},
              {"category", std::string(to_string(note.category))},
              {"text", note.text}};
}

Note note_from_json(const json& object, std::size_t line) {
  Note note;
  note.note_id = require_string(object, "note_id", line);
  note.admission_id = require_string(object, "admission_id", line);
  note.patient_id = require_string(object, "patient_id", line);
  try {
    note.timestamp = parse_rfc3339(require_string(object, "timestamp", line));
    note.category = parse_note_category(require_string(object, "category", line));
  } catch (const ParseError& e) {
    if (e.line() != 0) throw;
    throw ParseError(e.what(), line);
  }
  note.text = require_string(object, "text", line);
  if (note.note_id.empty()) throw ParseError("empty note_id", line);
  if (note.text.empty()) throw ParseError("empty text for note " + note.note_id, line);
  return note;
}

Trajectory Trajectory::build(std::vector<Note> notes, std::optional<Instant> discharge_time,
                             bool death_flag) {
  if (notes.empty()) throw InvariantError("trajectory needs at least one note");
  std::sort(notes.begin(), notes.end(), [](const Note& a, const Note& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    return a.note_id < b.note_id;
  });
  Trajectory t;
  t.admission_id_ = notes.front().admission_id;
  t.patient_id_ = notes.front().patient_id;
  for (std::size_t i = 0; i < notes.size(); ++i) {
    const Note& n = notes[i];
    if (n.admission_id != t.admission_id_ || n.patient_id != t.patient_id_)
      throw InvariantError("note " + n.note_id + " does not belong to admission " +
                           t.admission_id_ + " / patient " + t.patient_id_);
    if (n.text.empty()) throw InvariantError("note " + n.note_id + " has empty text");
    if (i > 0 && notes[i - 1].note_id == n.note_id)
      throw InvariantError("duplicate note_id " + n.note_id);
  }
  const Instant last = notes.back().timestamp;
  const bool has_discharge_note = std::any_of(notes.begin(), notes.end(), [](const Note& n) {
    return n.category == NoteCategory::discharge;
  });
  t.discharge_time_ = discharge_time.value_or(last);
  t.discharge_recorded_ = discharge_time.has_value() || has_discharge_note;
  if (last > t.discharge_time_)
    throw InvariantError("note later than discharge time in admission " + t.admission_id_);
  t.death_flag_ = death_flag;
  t.notes_ = std::move(notes);
  return t;
}

std::vector<Trajectory> group_notes(std::vector<Note> notes) {
  std::map<std::string, std::vector<Note>> by_admission;
  for (auto& n : notes) by_admission[n.admission_id].push_back(std::move(n));
  std::vector<Trajectory> out;
  out.reserve(by_admission.size());
  for (auto& [admission, group] : by_admission) {
    if (group.empty()) {
      spdlog::warn("admission {} has no notes; skipped", admission);
      continue;
    }
    out.push_back(Trajectory::build(std::move(group)));
  }
  return out;
}

std::vector<Trajectory> ingest_corpus(const std::filesystem::path& path) {
  std::vector<Note> notes;
  std::unordered_map<std::string, std::size_t> seen;
  read_jsonl(path, [&](const json& object, std::size_t line) {
    Note note = note_from_json(object, line);
    if (auto [it, fresh] = seen.emplace(note.note_id, line); !fresh)
      throw ParseError("duplicate note_id " + note.note_id + " (first seen on line " +
                           std::to_string(it->second) + ")",
                       line);
    notes.push_back(std::move(note));
  });
  // Identity mismatches inside one admission are reported as parse errors
  // against the first offending line.
  std::unordered_map<std::string, std::string> patient_of;
  for (const auto& n : notes) {
    auto [it, fresh] = patient_of.emplace(n.admission_id, n.patient_id);
    if (!fresh && it->second != n.patient_id)
      throw ParseError("admission " + n.admission_id + " has notes for two patients",
                       seen.at(n.note_id));
  }
  return group_notes(std::move(notes));
}

void export_corpus(const std::filesystem::path& path, const std::vector<Trajectory>& trajectories,
                   const ArtifactMeta* meta) {
  std::vector<json> records;
  for (const auto& t : trajectories)
    for (const auto& n : t.notes()) records.push_back(to_json(n));
  write_jsonl(path, records, meta);
}

std::vector<Trajectory> filter_eligible(const std::vector<Trajectory>& trajectories,
                                        int min_notes) {
  if (min_notes < 1) throw ConfigError("min_notes must be >= 1");
  std::vector<Trajectory> out;
  for (const auto& t : trajectories)
    if (static_cast<int>(t.notes().size()) >= min_notes && t.has_recorded_discharge())
      out.push_back(t);
  return out;
}

void export_latent_tracks(const std::filesystem::path& path, const LatentTrackMap& tracks,
                          const ArtifactMeta* meta) {
  std::vector<json> records;
  for (const auto& [admission, list] : tracks)
    for (const auto& track : list)
      records.push_back(json{
          {"admission_id", admission},
          {"event_kind", std::string(to_string(track.kind))},
          {"occurrence_time", track.occurrence_time ? json(format_rfc3339(*track.occurrence_time))
                                                    : json(nullptr)},
          {"precursor_strength", track.precursor_strength}});
  write_jsonl(path, records, meta);
}

LatentTrackMap ingest_latent_tracks(const std::filesystem::path& path) {
  LatentTrackMap out;
  read_jsonl(path, [&](const json& object, std::size_t line) {
    LatentEventTrack track;
    const std::string admission = require_string(object, "admission_id", line);
    try {
      track.kind = parse_event_kind(require_string(object, "event_kind", line));
    } catch (const ConfigError& e) {
      throw ParseError(e.what(), line);
    }
    const auto occ = object.find("occurrence_time");
    if (occ != object.end() && !occ->is_null()) {
      if (!occ->is_string()) throw ParseError("occurrence_time must be a string or null", line);
      track.occurrence_time = parse_rfc3339(occ->get<std::string>());
    }
    track.precursor_strength = require_number(object, "precursor_strength", line);
    if (track.precursor_strength < 0.0 || track.precursor_strength > 1.0)
      throw ParseError("precursor_strength outside [0,1]", line);
    out[admission].push_back(track);
  });
  return out;
}

}  // namespace foresight
