#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mrr {

// Capture codes: 0 = not seen, 1 = seen alive, 2 = recovered dead in (t-1, t].
enum class CaptureCode : int { NotSeen = 0, SeenAlive = 1, RecoveredDead = 2 };

// Survival states. RecentDead individuals died in the last inter-occasion
// interval and are the only dead individuals that can be recovered.
enum class SurvivalState : int { Alive = 1, RecentDead = 2, LongDead = 3 };

// Thrown when a capture history violates the structural rules of the data.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One individual's encounter history from first capture g to the final
// occasion T. Covariate values are per-occasion and may be missing; a
// missing value is an explicit empty optional, never a NaN stand-in.
struct CaptureHistory {
  std::string id;
  int first_capture = 1;  // g, 1-based occasion index
  int n_occasions = 0;    // T
  std::vector<CaptureCode> captures;         // x_g .. x_T
  std::vector<std::optional<double>> covariates;  // y_g .. y_T
  // Occasion at which the individual was aged 0; defaults to first capture
  // (individuals marked as juveniles). Ages are computed as t - birth.
  std::optional<int> birth_occasion;

  CaptureCode capture_at(int t) const { return captures.at(t - first_capture); }
  const std::optional<double>& covariate_at(int t) const {
    return covariates.at(t - first_capture);
  }
  bool covariate_observed(int t) const { return covariate_at(t).has_value(); }

  int birth() const { return birth_occasion.value_or(first_capture); }
  int age_at(int t) const { return t - birth(); }

  // Recovery occasion tau with x_tau = 2, if any.
  std::optional<int> recovery_occasion() const;
  // Last occasion with x_t = 1 (>= g since x_g = 1).
  int last_seen_alive() const;

  // Survival state at t when it is determined by the capture history
  // (t in the set S of the known-state occasions), empty otherwise.
  std::optional<SurvivalState> known_state(int t) const;

  // Throws ValidationError on any structural violation: x_g != 1, capture
  // activity after a recovery, more than one recovery, covariate recorded
  // without a live capture or after death.
  void validate() const;
};

// Convert a compact encounter string such as "01102000" (occasion 1..T)
// into a CaptureHistory without covariate values. Provided for
// interoperability with wide-format mark-recapture tooling.
CaptureHistory from_encounter_string(const std::string& id, const std::string& codes);

}  // namespace mrr
