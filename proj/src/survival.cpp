#include "mrr/survival.hpp"

#include <cmath>

namespace mrr {

double logistic(double x) {
  if (x >= 0) {
    double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double p) { return std::log(p) - std::log1p(-p); }

double survival_transition(SurvivalState s_prev, SurvivalState s_next, double phi) {
  switch (s_prev) {
    case SurvivalState::Alive:
      if (s_next == SurvivalState::Alive) return phi;
      if (s_next == SurvivalState::RecentDead) return 1.0 - phi;
      return 0.0;
    case SurvivalState::RecentDead:
    case SurvivalState::LongDead:
      return s_next == SurvivalState::LongDead ? 1.0 : 0.0;
  }
  return 0.0;
}

double observation_prob(CaptureCode x, SurvivalState s, double p, double lambda) {
  switch (s) {
    case SurvivalState::Alive:
      if (x == CaptureCode::SeenAlive) return p;
      if (x == CaptureCode::NotSeen) return 1.0 - p;
      return 0.0;
    case SurvivalState::RecentDead:
      if (x == CaptureCode::RecoveredDead) return lambda;
      if (x == CaptureCode::NotSeen) return 1.0 - lambda;
      return 0.0;
    case SurvivalState::LongDead:
      return x == CaptureCode::NotSeen ? 1.0 : 0.0;
  }
  return 0.0;
}

double survival_prob(double beta0, double beta1, double y) {
  return logistic(beta0 + beta1 * y);
}

}  // namespace mrr
