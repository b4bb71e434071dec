#pragma once
// Per-location sequential belief state: conjugate-normal recursion for the
// posterior-null probability, a batch (closed-form) evaluation used as a
// cross-check, and conversions between the posterior-null and
// likelihood-ratio scales.

#include <span>

namespace smartseq {

// After each update t_or is clamped to [kTorFloor, 1 - kTorFloor] so its
// likelihood-ratio image stays finite. log_lr itself keeps the exact running
// sum; at the clamped extremes both the stored t_or and the value implied by
// log_lr sit below the floor, so the bijection holds to within the floor.
inline constexpr double kTorFloor = 1e-15;

// Prior variance emulating a point-mass signal law (the recursion needs
// tau2 > 0; at this scale the posterior mean never moves).
inline constexpr double kPointMassTau2 = 1e-12;

struct LocationState {
    double t_or;            // posterior-null probability
    double eta;             // posterior mean of the signal effect
    double tau2;            // posterior variance of the signal effect
    int n_obs;              // observations consumed
    double log_lr;          // log f(data | signal) / f(data | null)
    double log_prior_odds;  // log(pi / (1 - pi)), fixed at initialization
};

// Prior null probability is 1 - pi_hat; eta/tau2 are the signal-effect prior.
LocationState init_state(double pi_hat, double eta0, double tau20);

// One conjugate-normal update. The alternative density is evaluated at the
// pre-update (eta, tau2), matching the recursion's predictive distribution.
// mu0_hat recenters the null density when the empirical null mean is nonzero.
LocationState update_state(const LocationState& state, double x, double sigma2_hat,
                           double mu0_hat = 0.0);

// Posterior-null probability from the closed-form marginal likelihood of the
// whole observation block. Equals the recursion applied to the same sequence;
// kept as an independent route for verification. Empty input returns the
// prior 1 - prior_pi.
double batch_posterior(double prior_pi, double eta0, double tau20, std::span<const double> xs,
                       double sigma2, double mu0 = 0.0);

// T = 1 / (1 + pi/(1-pi) * L), evaluated from log L.
double t_or_from_lr(double log_lr, double pi);

// Inverse map; returns log L. Signals a boundary error for t_or in {0,1}.
double lr_from_t_or(double t_or, double pi);

double log_normal_pdf(double x, double mean, double variance);

}  // namespace smartseq
