#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "smartseq/model.hpp"
#include "test_util.hpp"

using namespace smartseq;

TEST_CASE("model construction validates invariants") {
    CHECK_THROWS_AS(MixtureModel(0, 0.1, 0.0, 1.0, AltMeans::constant(3.0)),
                    std::invalid_argument);
    CHECK_THROWS_AS(MixtureModel(10, 0.0, 0.0, 1.0, AltMeans::constant(3.0)),
                    std::invalid_argument);
    CHECK_THROWS_AS(MixtureModel(10, 1.0, 0.0, 1.0, AltMeans::constant(3.0)),
                    std::invalid_argument);
    CHECK_THROWS_AS(MixtureModel(10, 0.1, 0.0, 0.0, AltMeans::constant(3.0)),
                    std::invalid_argument);
    CHECK_THROWS_AS(MixtureModel(10, 0.1, 0.0, 1.0, AltMeans::uniform(4.0, 2.0)),
                    std::invalid_argument);
    CHECK_THROWS_AS(MixtureModel(10, 0.1, 0.0, 1.0, AltMeans::explicit_values({1.0, 2.0})),
                    std::invalid_argument);
    CHECK_NOTHROW(MixtureModel(2, 0.1, 0.0, 1.0, AltMeans::explicit_values({1.0, 2.0})));
}

TEST_CASE("ground truth signal count is binomial around p*pi") {
    const MixtureModel model(100000, 0.05, 0.0, 1.0, AltMeans::constant(3.0));
    const GroundTruth truth = sample_ground_truth(model, 17);
    const double expected = 100000 * 0.05;
    const double se = std::sqrt(100000 * 0.05 * 0.95);
    CHECK(std::fabs(static_cast<double>(truth.signal_count()) - expected) < 4.0 * se);
    for (int i = 0; i < model.p; ++i)
        if (!truth.theta[i]) CHECK(truth.mu[i] == 0.0);
}

TEST_CASE("ground truth is reproducible and seed-sensitive") {
    const MixtureModel model(2000, 0.05, 0.0, 1.0, AltMeans::constant(3.0));
    const GroundTruth a = sample_ground_truth(model, 7);
    const GroundTruth b = sample_ground_truth(model, 7);
    CHECK(a.theta == b.theta);
    CHECK(a.mu == b.mu);
    const GroundTruth c = sample_ground_truth(model, 8);
    CHECK(a.theta != c.theta);

    // Binomial mean check across 200 independent draws.
    long long total = 0;
    for (int s = 0; s < 200; ++s) total += sample_ground_truth(model, 1000 + s).signal_count();
    const double expected = 200.0 * 2000 * 0.05;
    const double se = std::sqrt(200.0 * 2000 * 0.05 * 0.95);
    CHECK(std::fabs(static_cast<double>(total) - expected) < 4.0 * se);
}

TEST_CASE("uniform signal-mean law has the right average") {
    const MixtureModel model(1000000, 0.5, 0.0, 1.0, AltMeans::uniform(2.0, 4.0),
                             /*alt_prior_sd=*/0.0);
    const GroundTruth truth = sample_ground_truth(model, 3);
    double sum = 0.0;
    long long n = 0;
    for (int i = 0; i < model.p; ++i) {
        if (!truth.theta[i]) continue;
        sum += truth.mu[i];
        ++n;
    }
    CHECK(n > 0);
    CHECK(std::fabs(sum / static_cast<double>(n) - 3.0) < 0.01);
}

TEST_CASE("null observations follow the null law exactly") {
    const MixtureModel model(100000, 0.05, 0.0, 1.0, AltMeans::constant(3.0));
    GroundTruth truth;  // all-null hook
    truth.theta.assign(model.p, 0);
    truth.mu.assign(model.p, 0.0);
    std::vector<int> active(model.p);
    for (int i = 0; i < model.p; ++i) active[i] = i;
    const std::vector<double> xs = sample_stage_observations(model, truth, active, 5, 1);
    CHECK(std::fabs(testutil::mean(xs)) < 0.01);
    CHECK(std::fabs(testutil::sample_sd(xs) - 1.0) < 0.01);
}

TEST_CASE("null observations pass a KS check pooled across stages") {
    const MixtureModel model(1000, 0.05, 0.2459, 0.6893, AltMeans::constant(3.194));
    GroundTruth truth;
    truth.theta.assign(model.p, 0);
    truth.mu.assign(model.p, 0.0);
    std::vector<double> pooled;
    pooled.reserve(100000);
    for (int stage = 1; stage <= 100; ++stage)
        for (int i = 0; i < model.p; ++i)
            pooled.push_back(sample_observation(model, truth, i, 11, stage));
    const double d = testutil::ks_statistic(
        pooled, [&](double x) { return testutil::phi_cdf(x, 0.2459, 0.6893); });
    CHECK(d < 1.628 / std::sqrt(100000.0));  // 1% critical value
}

TEST_CASE("zero-noise hook returns the location mean") {
    const MixtureModel model(3, 0.5, 0.0, 1.0, AltMeans::constant(3.0));
    GroundTruth truth;
    truth.theta = {1, 0, 1};
    truth.mu = {3.25, 0.0, 2.5};
    CHECK(observation_value(model, truth, 0, 0.0) == 3.25);
    CHECK(observation_value(model, truth, 1, 0.0) == 0.0);  // null mean is 0 here
    CHECK(observation_value(model, truth, 2, 0.0) == 2.5);
}

TEST_CASE("signal observations are mean shifts with the null noise scale") {
    const MixtureModel model(100000, 0.05, 0.2459, 0.6893, AltMeans::constant(3.194));
    GroundTruth truth;
    truth.theta.assign(model.p, 1);
    truth.mu.assign(model.p, 3.194);
    std::vector<double> xs(model.p);
    for (int i = 0; i < model.p; ++i) xs[i] = sample_observation(model, truth, i, 23, 1);
    CHECK(std::fabs(testutil::mean(xs) - 3.194) < 0.01);
    CHECK(std::fabs(testutil::sample_sd(xs) - 0.6893) < 0.01);
}

TEST_CASE("empty active set yields an empty observation vector") {
    const MixtureModel model(5, 0.5, 0.0, 1.0, AltMeans::constant(3.0));
    const GroundTruth truth = sample_ground_truth(model, 1);
    CHECK(sample_stage_observations(model, truth, {}, 1, 1).empty());
}

namespace {

DecisionRecord two_location_record() {
    DecisionRecord record;
    record.delta = {1, 1};
    record.stop_times = {2, 3};
    StageDecision s1;
    s1.stage = 1;
    StageDecision s2;
    s2.stage = 2;
    s2.discovered = {0};
    StageDecision s3;
    s3.stage = 3;
    s3.discovered = {1};
    record.stage_trace = {s1, s2, s3};
    return record;
}

}  // namespace

TEST_CASE("weighted loss matches hand arithmetic") {
    GroundTruth truth;
    truth.theta = {0, 1};
    truth.mu = {0.0, 3.0};
    const DecisionRecord record = two_location_record();

    CHECK(weighted_loss(truth, record, LossSpec(1.0, 2.0, 0.1)) == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(weighted_loss(truth, record, LossSpec(0.0, 0.0, 0.1)) ==
          doctest::Approx(0.5).epsilon(1e-12));

    GroundTruth perfect_truth;
    perfect_truth.theta = {1, 1};
    perfect_truth.mu = {3.0, 3.0};
    CHECK(weighted_loss(perfect_truth, record, LossSpec(1.0, 2.0, 0.0)) == 0.0);
}

TEST_CASE("stage-wise loss equals the flat loss exactly") {
    GroundTruth truth;
    truth.theta = {0, 1};
    truth.mu = {0.0, 3.0};
    const DecisionRecord record = two_location_record();
    const LossSpec loss(1.3, 2.7, 0.11);
    CHECK(weighted_loss(truth, record, loss) == weighted_loss_stagewise(truth, record, loss));
}

TEST_CASE("loss spec rejects negative costs") {
    CHECK_THROWS_AS(LossSpec(-1.0, 0.0, 0.0), std::invalid_argument);
}
