#pragma once

#include "mrr/capture.hpp"

namespace mrr {

// Numerically stable logistic 1/(1+exp(-x)); saturates without overflow.
double logistic(double x);
double logit(double p);

// Survival process transition probability f(s_next | s_prev) for a given
// one-step survival probability phi. Dead states are absorbing.
double survival_transition(SurvivalState s_prev, SurvivalState s_next, double phi);

// Observation probability f(x | s) given recapture probability p and
// recovery probability lambda.
double observation_prob(CaptureCode x, SurvivalState s, double p, double lambda);

// Covariate-dependent survival probability on the logistic link:
// logit(phi) = beta0 + beta1 * y.
double survival_prob(double beta0, double beta1, double y);

}  // namespace mrr
