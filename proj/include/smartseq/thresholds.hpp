#pragma once
// Threshold arithmetic for the two-boundary stopping rule: closed-form
// approximate thresholds, Wald boundary conversions, Monte Carlo calibration
// of the oracle pair, and the information-limit evaluators.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "smartseq/model.hpp"

namespace smartseq {

struct ErrorBudget {
    double alpha;  // FPR target
    double gamma;  // MDR target

    ErrorBudget(double alpha, double gamma);
};

// Cutoffs on the posterior-null scale plus their likelihood-ratio images.
// lr_lower (A) corresponds to t_u, lr_upper (B) to t_l.
struct ThresholdPair {
    double t_l;
    double t_u;
    double lr_lower;  // A
    double lr_upper;  // B
    double pi;
};

// Builds the pair from posterior-scale cutoffs, deriving the LR boundaries.
ThresholdPair make_threshold_pair(double t_l, double t_u, double pi);

// Closed-form thresholds for a budget: t_l = alpha and the stringent upper
// cutoff t_u = (1-pi) / (pi*gamma + 1-pi).
ThresholdPair approx_thresholds(const ErrorBudget& budget, double pi);

// The looser upper cutoff the stringent form dominates; exposed for tests.
double unstringent_upper_threshold(const ErrorBudget& budget, double pi);

// Log-scale SPRT boundaries for per-test error rates (alpha', gamma').
struct WaldBoundaries {
    double a_tilde;
    double b_tilde;
};
WaldBoundaries wald_boundaries(double alpha_prime, double gamma_prime);

struct KlDivergence {
    double d01;   // D(F0 || F1)
    double d10;   // D(F1 || F0)
    double d_kl;  // max of the two
};
KlDivergence kl_divergence_normal(double mu0, double sd0, double mu1, double sd1);

// Sample-size-per-location bounds. The lower bound applies only for
// pi < 1/3; otherwise it is reported as not applicable.
struct LimitBounds {
    std::optional<double> lower_tau;
    double upper_tau;
};
LimitBounds limit_bounds(double pi, const KlDivergence& kl, double eta, double f_p, double epsilon);

struct InfeasibleBudgetError : std::runtime_error {
    std::string binding_constraint;  // "alpha" or "gamma"
    InfeasibleBudgetError(std::string constraint, const std::string& what)
        : std::runtime_error(what), binding_constraint(std::move(constraint)) {}
};

struct CalibrationConfig {
    int p = 10000;
    int replications = 50;
    double tolerance = 0.005;  // absolute, on each error rate
    std::uint64_t seed = 20240901;
    int cap = 100;
};

struct CalibrationResult {
    ThresholdPair thresholds;
    double achieved_fpr;
    double achieved_mdr;
    CalibrationConfig config;
};

// Error rates of the two-boundary stopping rule at a candidate threshold
// pair, evaluated on a fixed Monte Carlo sample with common random numbers:
// all candidate pairs are scanned against the same posterior trajectories,
// which are generated lazily and cached. Requires a constant signal-mean law
// (the recursion has no closed form otherwise).
class ThresholdMonteCarlo {
public:
    ThresholdMonteCarlo(const MixtureModel& model, const CalibrationConfig& config,
                        int threads = 1);
    ~ThresholdMonteCarlo();
    ThresholdMonteCarlo(const ThresholdMonteCarlo&) = delete;
    ThresholdMonteCarlo& operator=(const ThresholdMonteCarlo&) = delete;

    struct Rates {
        double fpr;
        double mdr;
        double east;
        double fpr_se;  // delete-one-replication jackknife
        double mdr_se;
    };
    Rates evaluate(double t_l, double t_u);

    // Empirical FPR when everything is rejected at stage 1; the eligibility
    // ceiling for alpha.
    double reject_all_fpr() const;

private:
    struct Impl;
    Impl* impl_;
};

// Nested one-dimensional searches over the Monte Carlo error surfaces: the
// FPR is non-decreasing in t_l at fixed t_u and the MDR non-increasing in
// t_u, so each coordinate is bisected. Throws InfeasibleBudgetError naming
// the binding constraint when no pair attains the budget.
CalibrationResult calibrate_oracle_thresholds(const MixtureModel& model, const ErrorBudget& budget,
                                              const CalibrationConfig& config, int threads = 1);

}  // namespace smartseq
