#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "foresight/corpus.hpp"

namespace foresight {

// Parameters of the synthetic cohort generator. Defaults give roughly a 25%
// positive rate over the questions the rule annotator asks.
struct CohortConfig {
  int min_notes = 9;
  int max_notes = 30;
  int min_stay_hours = 48;
  int max_stay_hours = 336;
  // Probability that an admission belongs to the previous admission's patient.
  double readmission_rate = 0.15;
  // Per-kind probability that the event happens during the stay, indexed by
  // EventKind.
  std::array<double, kEventKindCount> event_rates = {0.60, 0.55, 0.50, 0.65, 0.70, 0.12};
  // Per-track strength is drawn uniformly from [min, max]; it is the chance
  // that each pre-event note carries a precursor phrase.
  double precursor_strength_min = 0.35;
  double precursor_strength_max = 0.80;
  // Precursors also appear for events that never happen, at strength * ratio.
  double distractor_ratio = 0.10;
  int spacing_days = 45;

  json to_json() const;
  static CohortConfig from_json(const json& object);
  // Throws ConfigError when any range is invalid.
  void validate() const;
};

struct SyntheticCohort {
  std::vector<Trajectory> trajectories;
  LatentTrackMap tracks;
};

// Deterministic for a given (seed, n_admissions, config). Each admitted event
// is documented by a single "event note" whose timestamp is the occurrence
// time; only that note carries the confirmation phrase. In-hospital death is
// documented by the final discharge note.
SyntheticCohort generate_synthetic_cohort(std::uint64_t seed, int n_admissions,
                                          const CohortConfig& config = {});

}  // namespace foresight
