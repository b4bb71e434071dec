#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "smartseq/metrics.hpp"
#include "smartseq/procedures.hpp"
#include "smartseq/simulate.hpp"

using namespace smartseq;

namespace {

GroundTruth truth_of(std::vector<std::uint8_t> theta) {
    GroundTruth t;
    t.mu.assign(theta.size(), 0.0);
    for (std::size_t i = 0; i < theta.size(); ++i) t.mu[i] = theta[i] ? 3.0 : 0.0;
    t.theta = std::move(theta);
    return t;
}

DecisionRecord record_of(std::vector<std::uint8_t> delta, std::vector<int> stops) {
    DecisionRecord r;
    r.delta = std::move(delta);
    r.stop_times = std::move(stops);
    StageDecision stage;
    stage.stage = 1;
    for (std::size_t i = 0; i < r.delta.size(); ++i)
        (r.delta[i] ? stage.discovered : stage.eliminated).push_back(static_cast<int>(i));
    r.stage_trace.push_back(stage);
    for (std::size_t i = 0; i < r.stop_times.size(); ++i) r.stop_times[i] = 1;
    return r;
}

}  // namespace

TEST_CASE("per-run proportions match direct counts") {
    SUBCASE("mixed outcomes") {
        const auto m = per_run_metrics(truth_of({1, 0, 0, 1}), record_of({1, 1, 0, 0}, {1, 1, 1, 1}));
        CHECK(m.fdp == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(m.mdp == doctest::Approx(0.5).epsilon(1e-15));
    }
    SUBCASE("perfect recovery") {
        const auto m = per_run_metrics(truth_of({1, 0}), record_of({1, 0}, {1, 1}));
        CHECK(m.fdp == 0.0);
        CHECK(m.mdp == 0.0);
    }
    SUBCASE("zero discoveries with signals present") {
        const auto m = per_run_metrics(truth_of({1, 0}), record_of({0, 0}, {1, 1}));
        CHECK(m.fdp == 0.0);  // convention
        CHECK(m.mdp == 1.0);
    }
}

TEST_CASE("east and total observations satisfy the exact identity") {
    DecisionRecord r = record_of({1, 0, 0}, {1, 1, 1});
    r.stop_times = {2, 3, 4};
    const auto m = per_run_metrics(truth_of({1, 0, 0}), r);
    CHECK(m.total_obs == 9);
    CHECK(m.east * 3.0 == doctest::Approx(9.0).epsilon(1e-15));
    CHECK(m.east >= 1.0);
}

TEST_CASE("ensemble rates are ratios of sums, not means of ratios") {
    RunSummary a;
    a.p = 100;
    a.false_positives = 1;
    a.discoveries = 10;
    a.signals = 10;
    a.non_discoveries = 90;
    a.total_obs = 150;
    RunSummary b = a;
    b.false_positives = 3;
    const std::vector<RunSummary> runs{a, b};
    const MetricsReport report = ensemble_metrics(runs);
    CHECK(report.fpr == doctest::Approx(4.0 / 20.0).epsilon(1e-15));
    CHECK(report.replications == 2);
    CHECK(report.mc_se.at("fpr") > 0.0);

    // Unequal discovery counts separate the two estimators: ratio of sums is
    // 7/40, the mean of per-run ratios would be 0.15.
    RunSummary c = a;
    c.false_positives = 6;
    c.discoveries = 30;
    const std::vector<RunSummary> uneven{a, c};
    const MetricsReport report2 = ensemble_metrics(uneven);
    CHECK(report2.fpr == doctest::Approx(7.0 / 40.0).epsilon(1e-15));
    CHECK(std::fabs(report2.fpr - 0.15) > 0.02);
}

TEST_CASE("single-run ensembles equal the per-run values") {
    const GroundTruth truth = truth_of({1, 0, 0, 1});
    const DecisionRecord record = record_of({1, 1, 0, 0}, {1, 1, 1, 1});
    const auto per_run = per_run_metrics(truth, record);
    const std::vector<RunSummary> runs{per_run.summary};
    const MetricsReport report = ensemble_metrics(runs);
    CHECK(report.fpr == per_run.fdp);
    CHECK(report.mdr == per_run.mdp);
    CHECK(report.fnr == per_run.fnp);
    CHECK(report.east == per_run.east);
    CHECK(report.mc_se.at("fpr") == 0.0);  // no variability information
}

TEST_CASE("flagged zero-discovery ensembles report a zero rate") {
    RunSummary empty;
    empty.p = 10;
    empty.signals = 2;
    empty.false_negatives = 2;
    empty.non_discoveries = 10;
    empty.total_obs = 10;
    const std::vector<RunSummary> runs{empty};
    const MetricsReport report = ensemble_metrics(runs);
    CHECK(report.zero_discoveries);
    CHECK(report.fpr == 0.0);
    CHECK(report.mdr == 1.0);
}

TEST_CASE("stage-wise rates aggregate into the global rates exactly") {
    const MixtureModel model(400, 0.08, 0.0, 1.0, AltMeans::constant(2.6));
    const ThresholdPair thresholds = approx_thresholds(ErrorBudget(0.05, 0.05), model.pi);
    std::vector<RunSummary> runs;
    for (int rep = 0; rep < 8; ++rep) {
        const GroundTruth truth = sample_ground_truth(model, 300 + rep);
        ModelObservationSource source(model, truth, 300 + rep);
        const DecisionRecord record = run_smart(source, thresholds, oracle_hyper(model));
        runs.push_back(per_run_metrics(truth, record).summary);
    }
    const MetricsReport report = ensemble_metrics(runs);

    long long fp = 0, disc = 0, fn = 0, acc = 0;
    double weighted_fpr = 0.0;
    for (const StagewiseRates& s : report.stagewise.stages) {
        fp += s.false_positives;
        disc += s.discoveries;
        fn += s.false_negatives;
        acc += s.acceptances;
        if (s.sfpr_defined) weighted_fpr += s.sfpr * static_cast<double>(s.discoveries);
    }
    long long fp_total = 0, disc_total = 0, fn_total = 0, nondisc_total = 0;
    for (const RunSummary& r : runs) {
        fp_total += r.false_positives;
        disc_total += r.discoveries;
        fn_total += r.false_negatives;
        nondisc_total += r.non_discoveries;
    }
    CHECK(fp == fp_total);
    CHECK(disc == disc_total);
    CHECK(fn == fn_total);
    CHECK(acc == nondisc_total);
    CHECK(weighted_fpr / static_cast<double>(disc) == doctest::Approx(report.fpr).epsilon(1e-12));
}

TEST_CASE("single-stage ensembles have stage rates equal to the global rates") {
    const GroundTruth truth = truth_of({1, 0, 0, 1});
    const DecisionRecord record = record_of({1, 1, 0, 0}, {1, 1, 1, 1});
    const std::vector<RunSummary> runs{per_run_metrics(truth, record).summary};
    const MetricsReport report = ensemble_metrics(runs);
    REQUIRE(report.stagewise.stages.size() == 1);
    CHECK(report.stagewise.stages[0].sfpr == report.fpr);
    CHECK(report.stagewise.stages[0].sfnr == report.fnr);
}

TEST_CASE("stages without decisions are omitted and flagged") {
    RunSummary run;
    run.p = 4;
    run.discoveries = 1;
    run.signals = 1;
    run.non_discoveries = 3;
    run.total_obs = 12;
    StageCounts s1;
    s1.stage = 1;
    s1.discoveries = 1;
    StageCounts s3;
    s3.stage = 3;
    s3.acceptances = 3;
    run.stages = {s1, s3};
    const std::vector<RunSummary> runs{run};
    const StagewiseReport report = stagewise_metrics(runs);
    REQUIRE(report.stages.size() == 2);
    CHECK(report.omitted_stages == std::vector<int>{2});
}

TEST_CASE("the low false-negative rate implies the missed-discovery bound") {
    const MixtureModel model(2000, 0.05, 0.0, 1.0, AltMeans::constant(3.0));
    const double alpha = 0.05, gamma = 0.05;
    const ThresholdPair thresholds = approx_thresholds(ErrorBudget(alpha, gamma), model.pi);
    std::vector<RunSummary> runs;
    for (int rep = 0; rep < 20; ++rep) {
        const GroundTruth truth = sample_ground_truth(model, 40 + rep);
        ModelObservationSource source(model, truth, 40 + rep);
        runs.push_back(
            per_run_metrics(truth, run_simple_thresholding(source, thresholds, oracle_hyper(model)))
                .summary);
    }
    const MetricsReport report = ensemble_metrics(runs);
    const double fnr_bound = model.pi * gamma / (model.pi * gamma + 1.0 - model.pi);
    REQUIRE(report.fnr <= fnr_bound + 3.0 * report.mc_se.at("fnr"));
    CHECK(report.mdr <= gamma + 3.0 * report.mc_se.at("mdr"));
}

TEST_CASE("metrics are invariant under location permutation") {
    const GroundTruth truth = truth_of({1, 0, 1, 0, 0});
    DecisionRecord record = record_of({1, 0, 0, 1, 0}, {1, 1, 1, 1, 1});
    record.stop_times = {2, 1, 3, 1, 4};
    const auto base = per_run_metrics(truth, record);

    const std::vector<int> perm{4, 2, 0, 1, 3};  // new index of each location
    GroundTruth pt;
    pt.theta.assign(5, 0);
    pt.mu.assign(5, 0.0);
    DecisionRecord pr;
    pr.delta.assign(5, 0);
    pr.stop_times.assign(5, 0);
    StageDecision stage;
    stage.stage = 1;
    for (int i = 0; i < 5; ++i) {
        pt.theta[perm[i]] = truth.theta[i];
        pt.mu[perm[i]] = truth.mu[i];
        pr.delta[perm[i]] = record.delta[i];
        pr.stop_times[perm[i]] = record.stop_times[i];
        (record.delta[i] ? stage.discovered : stage.eliminated).push_back(perm[i]);
    }
    std::sort(stage.discovered.begin(), stage.discovered.end());
    std::sort(stage.eliminated.begin(), stage.eliminated.end());
    pr.stage_trace.push_back(stage);

    const auto permuted = per_run_metrics(pt, pr);
    CHECK(permuted.fdp == base.fdp);
    CHECK(permuted.mdp == base.mdp);
    CHECK(permuted.fnp == base.fnp);
    CHECK(permuted.east == base.east);
}

TEST_CASE("jackknife standard error matches a hand computation") {
    const std::vector<double> num{1.0, 3.0};
    const std::vector<double> den{10.0, 10.0};
    // Leave-one-out ratios are 3/10 and 1/10; SE = sqrt((1/2) * sum dev^2).
    const double se = jackknife_ratio_se(num, den);
    CHECK(se == doctest::Approx(std::sqrt(0.5 * (0.01 + 0.01))).epsilon(1e-12));
    CHECK(jackknife_ratio_se(std::vector<double>{1.0}, std::vector<double>{2.0}) == 0.0);
}

TEST_CASE("stage-wise rule consistency for single-stage records") {
    DecisionRecord r = record_of({1, 1, 0, 0}, {1, 1, 1, 1});
    StageDecision forced_stage;
    forced_stage.stage = 2;
    r.stage_trace.push_back(forced_stage);
    const auto m = per_run_metrics(truth_of({1, 0, 0, 1}), r);
    CHECK(m.summary.stages.size() == 2);
    CHECK(m.summary.stages[1].discoveries == 0);
}
