#include "foresight/phrase_bank.hpp"

#include <algorithm>
#include <cctype>
#include <string>

#include "foresight/errors.hpp"

namespace foresight {
namespace {

constexpr std::array<EventPhrases, kEventKindCount> kBank = {{
    {EventKind::vasopressor_start, QuestionCategory::medication,
     "Will the patient be started on intravenous vasopressors during this admission?",
     "norepinephrine infusion initiated",
     {"MAP trending down despite fluid boluses", "persistent hypotension", "lactate rising"}},
    {EventKind::transfusion, QuestionCategory::procedure,
     "Will the patient receive a blood transfusion of packed red blood cells during this "
     "admission?",
     "transfused one unit of packed red cells",
     {"hemoglobin drifting down", "guaiac positive stools", "oozing from line sites"}},
    {EventKind::dialysis, QuestionCategory::organ_support,
     "Will the patient receive renal replacement therapy (dialysis) during this admission?",
     "continuous renal replacement therapy started",
     {"creatinine continues to rise", "urine output minimal overnight", "worsening hyperkalemia"}},
    {EventKind::intubation, QuestionCategory::organ_support,
     "Will the patient require endotracheal intubation for mechanical ventilation during this "
     "admission?",
     "intubated and placed on mechanical ventilation",
     {"increasing work of breathing", "persistent hypoxemia despite supplemental oxygen",
      "escalating oxygen requirement"}},
    {EventKind::positive_culture, QuestionCategory::microbiology,
     "Will the patient's sputum culture return positive for a pathogenic bacterial or fungal "
     "organism during this admission?",
     "sputum culture returned positive for Pseudomonas aeruginosa",
     {"thick purulent secretions", "new infiltrate on chest film", "febrile overnight"}},
    {EventKind::in_hospital_death, QuestionCategory::mortality,
     "Will the patient be declared dead during this hospital admission?",
     "patient expired",
     {"goals of care discussion held with family", "worsening multiorgan failure",
      "poor prognosis discussed"}},
}};

constexpr std::array<std::string_view, 5> kNursingFiller = {
    "Patient resting in bed.", "Vital signs reviewed per protocol.", "Family visited this shift.",
    "Pain controlled on current regimen.", "Skin intact, turned every two hours."};
constexpr std::array<std::string_view, 5> kPhysicianFiller = {
    "Assessment and plan reviewed with the team.", "Medications reconciled.",
    "Exam unchanged from prior.", "Continue current management.", "Labs reviewed this morning."};
constexpr std::array<std::string_view, 4> kRadiologyFiller = {
    "Portable radiograph obtained.", "Lines and tubes in expected position.",
    "No pneumothorax identified.", "Comparison made with prior study."};
constexpr std::array<std::string_view, 4> kConsultFiller = {
    "Consult requested by primary team.", "Chart and imaging reviewed.",
    "Recommendations discussed with primary team.", "Will follow along."};
constexpr std::array<std::string_view, 3> kDischargeFiller = {
    "Hospital course summarized below.", "Discharge medications reviewed.",
    "Follow-up arranged with primary care."};
constexpr std::array<std::string_view, 3> kOtherFiller = {
    "Case management note.", "Social work met with family.", "Nutrition consult completed."};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::vasopressor_start: return "vasopressor_start";
    case EventKind::transfusion: return "transfusion";
    case EventKind::dialysis: return "dialysis";
    case EventKind::intubation: return "intubation";
    case EventKind::positive_culture: return "positive_culture";
    case EventKind::in_hospital_death: return "in_hospital_death";
  }
  return "unknown";
}

std::string_view to_string(QuestionCategory category) {
  switch (category) {
    case QuestionCategory::medication: return "medication";
    case QuestionCategory::procedure: return "procedure";
    case QuestionCategory::organ_support: return "organ_support";
    case QuestionCategory::microbiology: return "microbiology";
    case QuestionCategory::mortality: return "mortality";
    case QuestionCategory::other: return "other";
  }
  return "other";
}

EventKind parse_event_kind(std::string_view name) {
  for (EventKind k : kAllEventKinds)
    if (to_string(k) == name) return k;
  throw ConfigError("unknown event_kind '" + std::string(name) + "'");
}

QuestionCategory parse_question_category(std::string_view name) {
  for (int i = 0; i < static_cast<int>(kQuestionCategoryCount); ++i) {
    const auto c = static_cast<QuestionCategory>(i);
    if (to_string(c) == name) return c;
  }
  throw ParseError("unknown question category '" + std::string(name) + "'");
}

const EventPhrases& phrases_for(EventKind kind) {
  return kBank[static_cast<std::size_t>(kind)];
}

std::optional<EventKind> event_kind_for_question(std::string_view question) {
  for (const auto& entry : kBank)
    if (entry.question == question) return entry.kind;
  const std::string q = lower(question);
  auto has = [&](std::string_view word) { return q.find(word) != std::string::npos; };
  if (has("vasopressor") || has("norepinephrine") || has("pressor")) return EventKind::vasopressor_start;
  if (has("transfusion") || has("red blood cell")) return EventKind::transfusion;
  if (has("dialysis") || has("renal replacement")) return EventKind::dialysis;
  if (has("intubat") || has("mechanical ventilation")) return EventKind::intubation;
  if (has("culture")) return EventKind::positive_culture;
  if (has("dead") || has("death") || has(" die") || has("mortality") || has("expire"))
    return EventKind::in_hospital_death;
  return std::nullopt;
}

std::span<const std::string_view> filler_sentences(std::string_view note_category) {
  if (note_category == "nursing") return kNursingFiller;
  if (note_category == "physician") return kPhysicianFiller;
  if (note_category == "radiology") return kRadiologyFiller;
  if (note_category == "consult") return kConsultFiller;
  if (note_category == "discharge") return kDischargeFiller;
  return kOtherFiller;
}

}  // namespace foresight
