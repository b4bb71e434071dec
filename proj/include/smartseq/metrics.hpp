#pragma once
// Error-rate and cost estimators over single runs and replication ensembles.
// Ensemble rates are ratios of summed counts (the expectation-ratio form),
// not means of per-run ratios; standard errors come from a
// delete-one-replication jackknife.

#include <map>
#include <span>
#include <string>
#include <vector>

#include "smartseq/model.hpp"

namespace smartseq {

struct StageCounts {
    int stage = 0;
    long long false_positives = 0;
    long long discoveries = 0;
    long long false_negatives = 0;
    long long acceptances = 0;
};

// Everything the ensemble estimators need from one replication.
struct RunSummary {
    int p = 0;
    long long false_positives = 0;
    long long false_negatives = 0;
    long long discoveries = 0;
    long long signals = 0;
    long long non_discoveries = 0;
    long long total_obs = 0;
    long long cap_hits = 0;  // locations forced at the stage cap
    std::vector<StageCounts> stages;
};

struct PerRunMetrics {
    double fdp = 0.0;   // false discoveries / discoveries
    double mdp = 0.0;   // missed signals / signals
    double fnp = 0.0;   // missed signals / non-discoveries
    double east = 0.0;  // mean observations per location
    long long total_obs = 0;
    RunSummary summary;
};

PerRunMetrics per_run_metrics(const GroundTruth& truth, const DecisionRecord& record);

struct StagewiseRates {
    int stage = 0;
    double sfpr = 0.0;
    double sfnr = 0.0;
    bool sfpr_defined = false;  // false when the stage had no discoveries
    bool sfnr_defined = false;
    long long false_positives = 0;
    long long discoveries = 0;
    long long false_negatives = 0;
    long long acceptances = 0;
};

struct StagewiseReport {
    std::vector<StagewiseRates> stages;
    std::vector<int> omitted_stages;  // stages with zero decisions across the ensemble
};

StagewiseReport stagewise_metrics(std::span<const RunSummary> runs);

struct MetricsReport {
    double fpr = 0.0;
    double mdr = 0.0;
    double fnr = 0.0;
    double east = 0.0;
    long long total_obs = 0;  // summed across replications
    long long cap_hits = 0;   // summed across replications
    int replications = 0;
    bool zero_discoveries = false;
    std::map<std::string, double> mc_se;  // keys: fpr, mdr, fnr, east
    StagewiseReport stagewise;
};

MetricsReport ensemble_metrics(std::span<const RunSummary> runs);

// Jackknife standard error of a ratio-of-sums estimator over replications.
double jackknife_ratio_se(std::span<const double> numerators, std::span<const double> denominators);

}  // namespace smartseq
