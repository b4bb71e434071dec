#pragma once
// Generative model for the p-stream sparse-signal experiment, loss
// specification and decision records shared by all procedures.

#include <cstdint>
#include <span>
#include <vector>

#include "smartseq/rng.hpp"

namespace smartseq {

// Signal mean law for non-null locations.
struct AltMeans {
    enum class Kind { kConstant, kUniform, kExplicit };

    Kind kind = Kind::kConstant;
    double value = 0.0;          // kConstant
    double lo = 0.0, hi = 0.0;   // kUniform
    std::vector<double> per_location;  // kExplicit, length p

    static AltMeans constant(double v) {
        AltMeans a;
        a.kind = Kind::kConstant;
        a.value = v;
        return a;
    }
    static AltMeans uniform(double lo, double hi) {
        AltMeans a;
        a.kind = Kind::kUniform;
        a.lo = lo;
        a.hi = hi;
        return a;
    }
    static AltMeans explicit_values(std::vector<double> vals) {
        AltMeans a;
        a.kind = Kind::kExplicit;
        a.per_location = std::move(vals);
        return a;
    }
};

// Immutable after construction; the constructor validates all invariants and
// throws std::invalid_argument on violation. pi in {0,1} is rejected -- tests
// that need a degenerate truth construct GroundTruth directly.
struct MixtureModel {
    int p;
    double pi;
    double null_mean;
    double null_sd;
    AltMeans alt_means;
    double alt_prior_sd;  // prior sd of mu_i given a signal; 0 = point mass

    MixtureModel(int p, double pi, double null_mean, double null_sd, AltMeans alt_means,
                 double alt_prior_sd = 1.0);
};

struct GroundTruth {
    std::vector<std::uint8_t> theta;  // signal indicators
    std::vector<double> mu;           // realized means, 0 where theta == 0

    int p() const { return static_cast<int>(theta.size()); }
    long long signal_count() const;
};

// Costs of the weighted classification loss.
struct LossSpec {
    double lambda1 = 1.0;  // false positive cost
    double lambda2 = 1.0;  // false negative cost
    double c = 0.0;        // per-observation cost

    LossSpec() = default;
    LossSpec(double lambda1, double lambda2, double c);
};

// Decisions made at one stage: discovered (delta = 1), eliminated
// (delta = 0), forced (still active at the stage cap and decided by the
// midpoint rule). Cuts are NaN when the corresponding set is empty.
struct StageDecision {
    int stage = 0;
    std::vector<int> discovered;
    std::vector<int> eliminated;
    std::vector<int> forced;
    double lower_cut = 0.0;
    double upper_cut = 0.0;
};

struct DecisionRecord {
    std::vector<std::uint8_t> delta;  // terminal decisions
    std::vector<int> stop_times;      // stage at which each location left the active set
    std::vector<StageDecision> stage_trace;
    int cap_hits = 0;  // locations forced at the stage cap

    int p() const { return static_cast<int>(delta.size()); }
    long long total_observations() const;
};

GroundTruth sample_ground_truth(const MixtureModel& model, std::uint64_t seed);

// One observation for (location, stage), deterministic in (seed, stage,
// location). Nulls follow N(null_mean, null_sd^2) exactly; signals are mean
// shifts with the null noise scale.
double sample_observation(const MixtureModel& model, const GroundTruth& truth, int location,
                          std::uint64_t seed, int stage);

std::vector<double> sample_stage_observations(const MixtureModel& model, const GroundTruth& truth,
                                              std::span<const int> active, std::uint64_t seed,
                                              int stage);

// Deterministic noise hook: the observation value given a fixed noise draw.
double observation_value(const MixtureModel& model, const GroundTruth& truth, int location,
                         double noise);

// Flat weighted loss: lambda1 * FP + lambda2 * FN + c * sum(N_i).
double weighted_loss(const GroundTruth& truth, const DecisionRecord& record, const LossSpec& loss);

// Same loss accumulated stage by stage from the trace; agrees with
// weighted_loss exactly for any consistent record.
double weighted_loss_stagewise(const GroundTruth& truth, const DecisionRecord& record,
                               const LossSpec& loss);

}  // namespace smartseq
