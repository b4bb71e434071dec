#include "smartseq/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace smartseq {

PerRunMetrics per_run_metrics(const GroundTruth& truth, const DecisionRecord& record) {
    if (truth.p() != record.p())
        throw std::invalid_argument("per_run_metrics: truth/record length mismatch");
    RunSummary s;
    s.p = record.p();
    for (int i = 0; i < record.p(); ++i) {
        const bool theta = truth.theta[i] != 0;
        const bool delta = record.delta[i] != 0;
        s.signals += theta ? 1 : 0;
        if (delta) {
            ++s.discoveries;
            if (!theta) ++s.false_positives;
        } else {
            ++s.non_discoveries;
            if (theta) ++s.false_negatives;
        }
        s.total_obs += record.stop_times[i];
    }
    s.cap_hits = record.cap_hits;
    for (const StageDecision& stage : record.stage_trace) {
        StageCounts counts;
        counts.stage = stage.stage;
        for (const int i : stage.discovered) {
            ++counts.discoveries;
            if (!truth.theta[i]) ++counts.false_positives;
        }
        for (const int i : stage.eliminated) {
            ++counts.acceptances;
            if (truth.theta[i]) ++counts.false_negatives;
        }
        for (const int i : stage.forced) {
            if (record.delta[i]) {
                ++counts.discoveries;
                if (!truth.theta[i]) ++counts.false_positives;
            } else {
                ++counts.acceptances;
                if (truth.theta[i]) ++counts.false_negatives;
            }
        }
        s.stages.push_back(counts);
    }

    PerRunMetrics m;
    m.summary = std::move(s);
    const RunSummary& sum = m.summary;
    m.fdp = sum.discoveries > 0
                ? static_cast<double>(sum.false_positives) / static_cast<double>(sum.discoveries)
                : 0.0;
    m.mdp = sum.signals > 0
                ? static_cast<double>(sum.false_negatives) / static_cast<double>(sum.signals)
                : 0.0;
    m.fnp = sum.non_discoveries > 0 ? static_cast<double>(sum.false_negatives) /
                                          static_cast<double>(sum.non_discoveries)
                                    : 0.0;
    m.total_obs = sum.total_obs;
    m.east = static_cast<double>(sum.total_obs) / static_cast<double>(sum.p);
    return m;
}

double jackknife_ratio_se(std::span<const double> numerators,
                          std::span<const double> denominators) {
    const int reps = static_cast<int>(numerators.size());
    if (reps != static_cast<int>(denominators.size()))
        throw std::invalid_argument("jackknife_ratio_se: length mismatch");
    if (reps < 2) return 0.0;
    double num_total = 0.0, den_total = 0.0;
    for (int r = 0; r < reps; ++r) {
        num_total += numerators[r];
        den_total += denominators[r];
    }
    std::vector<double> leave_out(reps);
    double mean = 0.0;
    for (int r = 0; r < reps; ++r) {
        const double d = den_total - denominators[r];
        leave_out[r] = d > 0.0 ? (num_total - numerators[r]) / d : 0.0;
        mean += leave_out[r];
    }
    mean /= reps;
    double ss = 0.0;
    for (const double v : leave_out) ss += (v - mean) * (v - mean);
    return std::sqrt(ss * (reps - 1.0) / reps);
}

StagewiseReport stagewise_metrics(std::span<const RunSummary> runs) {
    int max_stage = 0;
    for (const RunSummary& run : runs)
        for (const StageCounts& c : run.stages) max_stage = std::max(max_stage, c.stage);

    StagewiseReport report;
    for (int stage = 1; stage <= max_stage; ++stage) {
        StagewiseRates rates;
        rates.stage = stage;
        for (const RunSummary& run : runs) {
            for (const StageCounts& c : run.stages) {
                if (c.stage != stage) continue;
                rates.false_positives += c.false_positives;
                rates.discoveries += c.discoveries;
                rates.false_negatives += c.false_negatives;
                rates.acceptances += c.acceptances;
            }
        }
        if (rates.discoveries + rates.acceptances == 0) {
            report.omitted_stages.push_back(stage);
            continue;
        }
        rates.sfpr_defined = rates.discoveries > 0;
        rates.sfnr_defined = rates.acceptances > 0;
        if (rates.sfpr_defined)
            rates.sfpr = static_cast<double>(rates.false_positives) /
                         static_cast<double>(rates.discoveries);
        if (rates.sfnr_defined)
            rates.sfnr = static_cast<double>(rates.false_negatives) /
                         static_cast<double>(rates.acceptances);
        report.stages.push_back(rates);
    }
    return report;
}

MetricsReport ensemble_metrics(std::span<const RunSummary> runs) {
    if (runs.empty()) throw std::invalid_argument("ensemble_metrics: at least one run required");
    const int reps = static_cast<int>(runs.size());
    MetricsReport report;
    report.replications = reps;

    long long fp = 0, fn = 0, disc = 0, sig = 0, nondisc = 0, obs = 0, locations = 0;
    std::vector<double> fp_r(reps), fn_r(reps), disc_r(reps), sig_r(reps), nondisc_r(reps),
        obs_r(reps), p_r(reps);
    for (int r = 0; r < reps; ++r) {
        const RunSummary& run = runs[r];
        fp += run.false_positives;
        fn += run.false_negatives;
        disc += run.discoveries;
        sig += run.signals;
        nondisc += run.non_discoveries;
        obs += run.total_obs;
        locations += run.p;
        report.cap_hits += run.cap_hits;
        fp_r[r] = static_cast<double>(run.false_positives);
        fn_r[r] = static_cast<double>(run.false_negatives);
        disc_r[r] = static_cast<double>(run.discoveries);
        sig_r[r] = static_cast<double>(run.signals);
        nondisc_r[r] = static_cast<double>(run.non_discoveries);
        obs_r[r] = static_cast<double>(run.total_obs);
        p_r[r] = static_cast<double>(run.p);
    }

    report.zero_discoveries = disc == 0;
    report.fpr = disc > 0 ? static_cast<double>(fp) / static_cast<double>(disc) : 0.0;
    report.mdr = sig > 0 ? static_cast<double>(fn) / static_cast<double>(sig) : 0.0;
    report.fnr = nondisc > 0 ? static_cast<double>(fn) / static_cast<double>(nondisc) : 0.0;
    report.east = static_cast<double>(obs) / static_cast<double>(locations);
    report.total_obs = obs;
    report.mc_se["fpr"] = jackknife_ratio_se(fp_r, disc_r);
    report.mc_se["mdr"] = jackknife_ratio_se(fn_r, sig_r);
    report.mc_se["fnr"] = jackknife_ratio_se(fn_r, nondisc_r);
    report.mc_se["east"] = jackknife_ratio_se(obs_r, p_r);
    report.stagewise = stagewise_metrics(runs);
    return report;
}

}  // namespace smartseq
