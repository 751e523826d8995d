#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace foresight {

// Clinical events tracked by the synthetic ground truth and asked about by the
// rule annotator.
enum class EventKind {
  vasopressor_start,
  transfusion,
  dialysis,
  intubation,
  positive_culture,
  in_hospital_death,
};

inline constexpr std::size_t kEventKindCount = 6;
inline constexpr std::array<EventKind, kEventKindCount> kAllEventKinds = {
    EventKind::vasopressor_start, EventKind::transfusion,      EventKind::dialysis,
    EventKind::intubation,        EventKind::positive_culture, EventKind::in_hospital_death,
};

// Coarse outcome family of a prediction question.
enum class QuestionCategory { medication, procedure, organ_support, microbiology, mortality, other };

inline constexpr std::size_t kQuestionCategoryCount = 6;

std::string_view to_string(EventKind kind);
std::string_view to_string(QuestionCategory category);
// Throw ConfigError / ParseError on unknown names.
EventKind parse_event_kind(std::string_view name);
QuestionCategory parse_question_category(std::string_view name);

// Fixed wording attached to one event kind. Precursors foreshadow the event in
// notes written before it; the confirmation phrase documents it. No phrase is
// a substring of another phrase in the bank or of the filler text.
struct EventPhrases {
  EventKind kind;
  QuestionCategory category;
  std::string_view question;
  std::string_view confirmation;
  std::array<std::string_view, 3> precursors;
};

const EventPhrases& phrases_for(EventKind kind);

// Best-effort mapping from question wording back to the event it asks about:
// exact match against the bank first, then keywords.
std::optional<EventKind> event_kind_for_question(std::string_view question);

std::span<const std::string_view> filler_sentences(std::string_view note_category);

}  // namespace foresight
