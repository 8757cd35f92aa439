#include "mrr/capture.hpp"

#include <algorithm>

namespace mrr {

std::optional<int> CaptureHistory::recovery_occasion() const {
  for (int t = first_capture; t <= n_occasions; ++t) {
    if (capture_at(t) == CaptureCode::RecoveredDead) return t;
  }
  return std::nullopt;
}

int CaptureHistory::last_seen_alive() const {
  int last = first_capture;
  for (int t = first_capture; t <= n_occasions; ++t) {
    if (capture_at(t) == CaptureCode::SeenAlive) last = t;
  }
  return last;
}

std::optional<SurvivalState> CaptureHistory::known_state(int t) const {
  auto tau = recovery_occasion();
  if (tau) {
    // Recovery pins the whole path: alive strictly before tau, recently
    // dead at tau, long dead afterwards.
    if (t < *tau) return SurvivalState::Alive;
    if (t == *tau) return SurvivalState::RecentDead;
    return SurvivalState::LongDead;
  }
  if (t <= last_seen_alive()) return SurvivalState::Alive;
  return std::nullopt;
}

void CaptureHistory::validate() const {
  if (first_capture < 1 || first_capture > n_occasions) {
    throw ValidationError("history " + id + ": first capture occasion out of range");
  }
  const auto span = n_occasions - first_capture + 1;
  if (static_cast<int>(captures.size()) != span ||
      static_cast<int>(covariates.size()) != span) {
    throw ValidationError("history " + id + ": sequence length does not match occasions");
  }
  if (captures.front() != CaptureCode::SeenAlive) {
    throw ValidationError("history " + id + ": must begin with a live capture");
  }
  if (birth_occasion && *birth_occasion > first_capture) {
    throw ValidationError("history " + id + ": birth occasion after first capture");
  }
  int recoveries = 0;
  for (int t = first_capture; t <= n_occasions; ++t) {
    CaptureCode x = capture_at(t);
    if (x == CaptureCode::RecoveredDead) ++recoveries;
    if (recoveries > 1) {
      throw ValidationError("history " + id + ": more than one dead recovery");
    }
    if (recoveries > 0 && x == CaptureCode::SeenAlive) {
      throw ValidationError("history " + id + ": live capture after dead recovery");
    }
    bool known_dead = recoveries > 0;
    if (covariate_observed(t)) {
      if (known_dead) {
        throw ValidationError("history " + id + ": covariate recorded at/after death at occasion " +
                              std::to_string(t));
      }
      if (x != CaptureCode::SeenAlive) {
        throw ValidationError("history " + id + ": covariate recorded without a live capture at occasion " +
                              std::to_string(t));
      }
    }
  }
}

CaptureHistory from_encounter_string(const std::string& id, const std::string& codes) {
  CaptureHistory h;
  h.id = id;
  h.n_occasions = static_cast<int>(codes.size());
  int g = 0;
  for (int t = 1; t <= h.n_occasions; ++t) {
    char c = codes[t - 1];
    if (c != '0' && c != '1' && c != '2') {
      throw ValidationError("encounter string for " + id + ": invalid code '" +
                            std::string(1, c) + "'");
    }
    if (g == 0 && c != '0') g = t;
  }
  if (g == 0) throw ValidationError("encounter string for " + id + ": no capture event");
  h.first_capture = g;
  for (int t = g; t <= h.n_occasions; ++t) {
    h.captures.push_back(static_cast<CaptureCode>(codes[t - 1] - '0'));
    h.covariates.emplace_back(std::nullopt);
  }
  h.validate();
  return h;
}

}  // namespace mrr
