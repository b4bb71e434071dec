#include "smartseq/posterior.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "smartseq/rng.hpp"

namespace smartseq {

namespace {

double sigmoid(double z) {
    // 1 / (1 + e^z) without overflow on either tail.
    if (z >= 0.0) {
        const double e = std::exp(-z);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(z));
}

double clamp_posterior(double t) {
    return std::min(1.0 - kTorFloor, std::max(kTorFloor, t));
}

double require_prior(double pi, const char* who) {
    if (!(pi > 0.0 && pi < 1.0))
        throw std::invalid_argument(std::string(who) + ": pi must lie strictly inside (0,1)");
    return std::log(pi / (1.0 - pi));
}

}  // namespace

double log_normal_pdf(double x, double mean, double variance) {
    const double d = x - mean;
    return -0.5 * (std::log(2.0 * kPi * variance) + d * d / variance);
}

LocationState init_state(double pi_hat, double eta0, double tau20) {
    const double log_prior_odds = require_prior(pi_hat, "init_state");
    if (!(tau20 > 0.0)) throw std::invalid_argument("init_state: tau20 must be positive");
    LocationState s;
    s.t_or = 1.0 - pi_hat;
    s.eta = eta0;
    s.tau2 = tau20;
    s.n_obs = 0;
    s.log_lr = 0.0;  // no data: L = 1, so t_or = 1 - pi_hat under the bijection
    s.log_prior_odds = log_prior_odds;
    return s;
}

LocationState update_state(const LocationState& state, double x, double sigma2_hat,
                           double mu0_hat) {
    if (!(sigma2_hat > 0.0))
        throw std::invalid_argument("update_state: sigma2_hat must be positive");
    const double log_f0 = log_normal_pdf(x, mu0_hat, sigma2_hat);
    const double log_f1 = log_normal_pdf(x, state.eta, state.tau2 + sigma2_hat);
    const double increment = log_f1 - log_f0;
    if (!std::isfinite(increment))
        throw std::domain_error("update_state: degenerate update, both densities vanished");

    LocationState next;
    next.log_prior_odds = state.log_prior_odds;
    next.log_lr = state.log_lr + increment;
    next.t_or = clamp_posterior(sigmoid(state.log_prior_odds + next.log_lr));
    const double w = state.tau2 / (state.tau2 + sigma2_hat);
    next.eta = w * x + (1.0 - w) * state.eta;
    next.tau2 = state.tau2 * sigma2_hat / (state.tau2 + sigma2_hat);
    next.n_obs = state.n_obs + 1;
    return next;
}

double batch_posterior(double prior_pi, double eta0, double tau20, std::span<const double> xs,
                       double sigma2, double mu0) {
    const double log_prior_odds = require_prior(prior_pi, "batch_posterior");
    if (!(tau20 > 0.0)) throw std::invalid_argument("batch_posterior: tau20 must be positive");
    if (!(sigma2 > 0.0)) throw std::invalid_argument("batch_posterior: sigma2 must be positive");
    if (xs.empty()) return 1.0 - prior_pi;

    const auto n = static_cast<double>(xs.size());
    double mean = 0.0;
    for (const double x : xs) mean += x;
    mean /= n;
    double ss = 0.0;  // within-block sum of squares about the mean
    for (const double x : xs) ss += (x - mean) * (x - mean);

    double log_f0 = 0.0;
    for (const double x : xs) log_f0 += log_normal_pdf(x, mu0, sigma2);

    // Marginal under the conjugate alternative: the block mean carries the
    // prior, the residuals are pure noise.
    const double log_f1 = -0.5 * (n - 1.0) * std::log(2.0 * kPi * sigma2) - ss / (2.0 * sigma2) -
                          0.5 * std::log(n) + log_normal_pdf(mean, eta0, tau20 + sigma2 / n);

    return clamp_posterior(sigmoid(log_prior_odds + (log_f1 - log_f0)));
}

double t_or_from_lr(double log_lr, double pi) {
    const double log_prior_odds = require_prior(pi, "t_or_from_lr");
    return sigmoid(log_prior_odds + log_lr);
}

double lr_from_t_or(double t_or, double pi) {
    const double log_prior_odds = require_prior(pi, "lr_from_t_or");
    if (!(t_or > 0.0 && t_or < 1.0))
        throw std::domain_error("lr_from_t_or: t_or at the boundary has no finite image");
    return std::log((1.0 - t_or) / t_or) - log_prior_odds;
}

}  // namespace smartseq
