#include "smartseq/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace smartseq {

namespace {
// Substream indices under the per-run root stream.
constexpr std::uint64_t kTruthSubstream = 0;
constexpr std::uint64_t kObsSubstream = 1;

// Per-location counters inside the truth substream.
constexpr std::uint64_t kThetaCounter = 0;
constexpr std::uint64_t kEtaCounter = 1;
constexpr std::uint64_t kMuCounter = 2;
}  // namespace

MixtureModel::MixtureModel(int p_, double pi_, double null_mean_, double null_sd_, AltMeans alt,
                           double alt_prior_sd_)
    : p(p_),
      pi(pi_),
      null_mean(null_mean_),
      null_sd(null_sd_),
      alt_means(std::move(alt)),
      alt_prior_sd(alt_prior_sd_) {
    if (p < 1) throw std::invalid_argument("MixtureModel: p must be positive");
    if (!(pi > 0.0 && pi < 1.0))
        throw std::invalid_argument("MixtureModel: pi must lie strictly inside (0,1)");
    if (!(null_sd > 0.0)) throw std::invalid_argument("MixtureModel: null_sd must be positive");
    if (!(alt_prior_sd >= 0.0) || !std::isfinite(alt_prior_sd))
        throw std::invalid_argument("MixtureModel: alt_prior_sd must be finite and >= 0");
    if (alt_means.kind == AltMeans::Kind::kUniform && !(alt_means.lo < alt_means.hi))
        throw std::invalid_argument("MixtureModel: uniform signal-mean law needs lo < hi");
    if (alt_means.kind == AltMeans::Kind::kExplicit &&
        alt_means.per_location.size() != static_cast<std::size_t>(p))
        throw std::invalid_argument("MixtureModel: explicit signal means must have length p");
    if (!std::isfinite(null_mean) || !std::isfinite(null_sd) || !std::isfinite(pi))
        throw std::invalid_argument("MixtureModel: parameters must be finite");
}

LossSpec::LossSpec(double l1, double l2, double c_) : lambda1(l1), lambda2(l2), c(c_) {
    if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0) || !(c >= 0.0) || !std::isfinite(lambda1) ||
        !std::isfinite(lambda2) || !std::isfinite(c))
        throw std::invalid_argument("LossSpec: costs must be finite and >= 0");
}

long long GroundTruth::signal_count() const {
    long long n = 0;
    for (const auto t : theta) n += t;
    return n;
}

long long DecisionRecord::total_observations() const {
    long long n = 0;
    for (const int s : stop_times) n += s;
    return n;
}

GroundTruth sample_ground_truth(const MixtureModel& model, std::uint64_t seed) {
    const RandomStream truth_stream = RandomStream(seed).child(kTruthSubstream);
    GroundTruth truth;
    truth.theta.assign(model.p, 0);
    truth.mu.assign(model.p, 0.0);
    for (int i = 0; i < model.p; ++i) {
        const RandomStream loc = truth_stream.child(static_cast<std::uint64_t>(i));
        if (!loc.bernoulli(model.pi, kThetaCounter)) continue;
        truth.theta[i] = 1;
        double eta;
        switch (model.alt_means.kind) {
            case AltMeans::Kind::kConstant:
                eta = model.alt_means.value;
                break;
            case AltMeans::Kind::kUniform:
                eta = model.alt_means.lo +
                      (model.alt_means.hi - model.alt_means.lo) * loc.uniform(kEtaCounter);
                break;
            case AltMeans::Kind::kExplicit:
            default:
                eta = model.alt_means.per_location[static_cast<std::size_t>(i)];
                break;
        }
        truth.mu[i] = eta + model.alt_prior_sd * loc.normal(kMuCounter);
    }
    return truth;
}

double observation_value(const MixtureModel& model, const GroundTruth& truth, int location,
                         double noise) {
    const double base = truth.theta[location] ? truth.mu[location] : model.null_mean;
    return base + model.null_sd * noise;
}

double sample_observation(const MixtureModel& model, const GroundTruth& truth, int location,
                          std::uint64_t seed, int stage) {
    const RandomStream obs = RandomStream(seed).child(kObsSubstream);
    const double noise = obs.child(static_cast<std::uint64_t>(location))
                             .normal(static_cast<std::uint64_t>(stage));
    return observation_value(model, truth, location, noise);
}

std::vector<double> sample_stage_observations(const MixtureModel& model, const GroundTruth& truth,
                                              std::span<const int> active, std::uint64_t seed,
                                              int stage) {
    std::vector<double> xs;
    xs.reserve(active.size());
    for (const int i : active) xs.push_back(sample_observation(model, truth, i, seed, stage));
    return xs;
}

namespace {

struct ErrorCounts {
    long long false_positives = 0;
    long long false_negatives = 0;
    long long observations = 0;
};

double loss_from_counts(const ErrorCounts& counts, const LossSpec& loss) {
    return loss.lambda1 * static_cast<double>(counts.false_positives) +
           loss.lambda2 * static_cast<double>(counts.false_negatives) +
           loss.c * static_cast<double>(counts.observations);
}

}  // namespace

double weighted_loss(const GroundTruth& truth, const DecisionRecord& record, const LossSpec& loss) {
    if (truth.p() != record.p())
        throw std::invalid_argument("weighted_loss: truth/record length mismatch");
    ErrorCounts counts;
    for (int i = 0; i < record.p(); ++i) {
        if (!truth.theta[i] && record.delta[i]) ++counts.false_positives;
        if (truth.theta[i] && !record.delta[i]) ++counts.false_negatives;
        counts.observations += record.stop_times[i];
    }
    return loss_from_counts(counts, loss);
}

double weighted_loss_stagewise(const GroundTruth& truth, const DecisionRecord& record,
                               const LossSpec& loss) {
    if (truth.p() != record.p())
        throw std::invalid_argument("weighted_loss_stagewise: truth/record length mismatch");
    ErrorCounts counts;
    long long active = record.p();
    for (const StageDecision& stage : record.stage_trace) {
        counts.observations += active;
        long long decided = 0;
        for (const int i : stage.discovered) {
            if (!truth.theta[i]) ++counts.false_positives;
            ++decided;
        }
        for (const int i : stage.eliminated) {
            if (truth.theta[i]) ++counts.false_negatives;
            ++decided;
        }
        for (const int i : stage.forced) {
            if (!truth.theta[i] && record.delta[i]) ++counts.false_positives;
            if (truth.theta[i] && !record.delta[i]) ++counts.false_negatives;
            ++decided;
        }
        active -= decided;
    }
    return loss_from_counts(counts, loss);
}

}  // namespace smartseq
