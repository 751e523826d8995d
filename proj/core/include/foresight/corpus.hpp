#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "foresight/jsonl.hpp"
#include "foresight/phrase_bank.hpp"
#include "foresight/time.hpp"

namespace foresight {

enum class NoteCategory { nursing, physician, radiology, consult, discharge, other };

std::string_view to_string(NoteCategory category);
NoteCategory parse_note_category(std::string_view name);

struct Note {
  std::string note_id;
  std::string admission_id;
  std::string patient_id;
  Instant timestamp;
  NoteCategory category = NoteCategory::other;
  std::string text;

  friend bool operator==(const Note&, const Note&) = default;
};

json to_json(const Note& note);
Note note_from_json(const json& object, std::size_t line = 0);

// Chronological record of one admission. Construction sorts the notes by
// (timestamp, note_id) and checks every invariant; instances are immutable.
class Trajectory {
 public:
  // discharge_time defaults to the last note timestamp. A discharge is
  // "recorded" when one is passed explicitly or a discharge-category note
  // exists. Throws InvariantError on empty notes, mixed identities, duplicate
  // note ids or a note later than the discharge time.
  static Trajectory build(std::vector<Note> notes, std::optional<Instant> discharge_time = {},
                          bool death_flag = false);

  const std::string& admission_id() const noexcept { return admission_id_; }
  const std::string& patient_id() const noexcept { return patient_id_; }
  const std::vector<Note>& notes() const noexcept { return notes_; }
  Instant admission_start() const { return notes_.front().timestamp; }
  Instant discharge_time() const noexcept { return discharge_time_; }
  bool has_recorded_discharge() const noexcept { return discharge_recorded_; }
  bool death_flag() const noexcept { return death_flag_; }

 private:
  Trajectory() = default;

  std::string admission_id_;
  std::string patient_id_;
  std::vector<Note> notes_;
  Instant discharge_time_{};
  bool discharge_recorded_ = false;
  bool death_flag_ = false;
};

// Ground-truth event schedule for synthetic admissions.
struct LatentEventTrack {
  EventKind kind = EventKind::vasopressor_start;
  std::optional<Instant> occurrence_time;
  double precursor_strength = 0.0;

  friend bool operator==(const LatentEventTrack&, const LatentEventTrack&) = default;
};

using LatentTrackMap = std::map<std::string, std::vector<LatentEventTrack>>;

// Groups notes by admission and returns trajectories ordered by admission_id.
// Malformed lines raise ParseError carrying the line number; duplicate
// note ids across the file are rejected the same way.
std::vector<Trajectory> ingest_corpus(const std::filesystem::path& path);
std::vector<Trajectory> group_notes(std::vector<Note> notes);

// Writes every note of every trajectory, in trajectory order.
void export_corpus(const std::filesystem::path& path, const std::vector<Trajectory>& trajectories,
                   const ArtifactMeta* meta = nullptr);

std::vector<Trajectory> filter_eligible(const std::vector<Trajectory>& trajectories,
                                        int min_notes = 9);

void export_latent_tracks(const std::filesystem::path& path, const LatentTrackMap& tracks,
                          const ArtifactMeta* meta = nullptr);
LatentTrackMap ingest_latent_tracks(const std::filesystem::path& path);

}  // namespace foresight
