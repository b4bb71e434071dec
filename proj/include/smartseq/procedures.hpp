#pragma once
// The three multistage decision engines: the ranking/compound-thresholding
// procedure (run_smart), per-location two-boundary stopping
// (run_simple_thresholding), and the distilled-sensing baseline.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "smartseq/model.hpp"
#include "smartseq/posterior.hpp"
#include "smartseq/thresholds.hpp"

namespace smartseq {

// Hyperparameters driving the per-location posterior recursion.
struct PosteriorHyper {
    double pi;
    double eta0;
    double tau20;
    double sigma2;
    double mu0 = 0.0;  // null mean; nonzero for empirical-null models
};

// Locations still under measurement at a stage. members shrinks as stages
// proceed (never grows); states is indexed by location id and is only
// meaningful for current members.
struct ActiveSet {
    int stage = 1;
    std::vector<int> members;
    std::vector<LocationState> states;
};

// Recursion hyperparameters implied by a model's own parameters. Point-mass
// signal laws fall back to a unit prior variance, since the recursion needs
// tau2 > 0.
PosteriorHyper oracle_hyper(const MixtureModel& model);

// Supplies one new observation per active location per stage.
class ObservationSource {
public:
    virtual ~ObservationSource() = default;
    virtual int location_count() const = 0;
    virtual double observe(int location, int stage) = 0;  // stage is 1-based
};

class ModelObservationSource final : public ObservationSource {
public:
    ModelObservationSource(const MixtureModel& model, const GroundTruth& truth,
                           std::uint64_t seed);
    int location_count() const override;
    double observe(int location, int stage) override;

private:
    const MixtureModel& model_;
    const GroundTruth& truth_;
    std::uint64_t seed_;
};

struct StreamExhausted : std::runtime_error {
    int location;
    int stage;
    StreamExhausted(int location_, int stage_)
        : std::runtime_error("observation stream exhausted"), location(location_), stage(stage_) {}
};

// Replays a recorded matrix of observations; throws StreamExhausted past the
// recorded horizon.
class ReplayObservationSource final : public ObservationSource {
public:
    explicit ReplayObservationSource(std::vector<std::vector<double>> rows);
    int location_count() const override;
    double observe(int location, int stage) override;

private:
    std::vector<std::vector<double>> rows_;  // rows_[location][stage - 1]
};

// Real stage-1 values, model-generated observations afterwards.
class PilotThenModelSource final : public ObservationSource {
public:
    PilotThenModelSource(std::vector<double> stage1, const MixtureModel& model,
                         const GroundTruth& truth, std::uint64_t seed);
    int location_count() const override;
    double observe(int location, int stage) override;

private:
    std::vector<double> stage1_;
    ModelObservationSource later_;
};

// Raised when a source runs dry mid-procedure; carries everything decided so
// far (undecided locations keep delta = 0 and the stages they consumed).
struct TruncatedRunError : std::runtime_error {
    DecisionRecord partial;
    std::vector<int> undecided;
    explicit TruncatedRunError(DecisionRecord partial_, std::vector<int> undecided_)
        : std::runtime_error("observation source exhausted before termination"),
          partial(std::move(partial_)),
          undecided(std::move(undecided_)) {}
};

struct RunOptions {
    int cap = 100;  // locations still active here are forced by the midpoint rule
};

// Discovery scan over ascending statistics: the longest prefix whose running
// mean stays within t_l_tilde. Returns (k_s, value of the k_s-th statistic);
// k_s = 0 means no discovery and an unspecified cut.
std::pair<int, double> smart_discovery_step(std::span<const double> sorted_t, double t_l_tilde);

// Elimination scan over the descending tail: the longest suffix whose running
// mean stays at or above t_u_tilde. Returns (k_e, value of the suffix's
// smallest statistic).
std::pair<int, double> smart_elimination_step(std::span<const double> sorted_t, double t_u_tilde);

DecisionRecord run_smart(ObservationSource& source, const ThresholdPair& thresholds,
                         const PosteriorHyper& hyper, const RunOptions& options = {});

DecisionRecord run_simple_thresholding(ObservationSource& source, const ThresholdPair& thresholds,
                                       const PosteriorHyper& hyper, const RunOptions& options = {});

DecisionRecord run_distilled_sensing(ObservationSource& source, int stages);

// Default distillation depth: max(ceil(log2(ln p)), 0) + 2.
int ds_default_stages(int p);

}  // namespace smartseq
