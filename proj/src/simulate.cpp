#include "smartseq/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "smartseq/ingest.hpp"
#include "smartseq/parallel.hpp"
#include "smartseq/rng.hpp"
#include "smartseq/version.hpp"

namespace smartseq {

namespace {
// Substream indices under the per-grid-point stream.
constexpr std::uint64_t kDsPhase = 1;
constexpr std::uint64_t kSmartPhase = 2;

std::vector<double> default_grid(double lo, double hi, double step) {
    std::vector<double> grid;
    for (int k = 0;; ++k) {
        const double v = lo + step * k;
        if (v > hi + 0.5 * step) break;
        grid.push_back(v);
    }
    return grid;
}
}  // namespace

std::string method_name(Method method) {
    switch (method) {
        case Method::kOrSt: return "OR.ST";
        case Method::kOrSm: return "OR.SM";
        case Method::kDdSt: return "DD.ST";
        case Method::kDdSm: return "DD.SM";
        case Method::kDs: return "DS";
    }
    return "?";
}

Method method_from_name(const std::string& name) {
    if (name == "OR.ST") return Method::kOrSt;
    if (name == "OR.SM") return Method::kOrSm;
    if (name == "DD.ST") return Method::kDdSt;
    if (name == "DD.SM") return Method::kDdSm;
    if (name == "DS") return Method::kDs;
    throw std::invalid_argument("unknown method: " + name);
}

std::string setting_name(Setting setting) {
    switch (setting) {
        case Setting::kSetting1: return "setting1";
        case Setting::kSetting2: return "setting2";
        case Setting::kSetting3: return "setting3";
        case Setting::kCustom: return "custom";
    }
    return "?";
}

Setting setting_from_name(const std::string& name) {
    if (name == "setting1") return Setting::kSetting1;
    if (name == "setting2") return Setting::kSetting2;
    if (name == "setting3") return Setting::kSetting3;
    if (name == "custom") return Setting::kCustom;
    throw std::invalid_argument("unknown setting: " + name);
}

SweepSpec finalize_sweep_spec(SweepSpec spec) {
    if (spec.swept_parameter.empty()) {
        spec.swept_parameter = spec.setting == Setting::kSetting3 ? "pi" : "mu0";
    }
    if (spec.grid.empty()) {
        switch (spec.setting) {
            case Setting::kSetting1:
            case Setting::kSetting2:
                spec.grid = default_grid(2.0, 4.0, 0.2);
                break;
            case Setting::kSetting3:
                spec.grid = default_grid(0.05, 0.20, 0.01);
                break;
            case Setting::kCustom:
                throw std::invalid_argument("/grid: required for the custom setting");
        }
    }
    if (!std::is_sorted(spec.grid.begin(), spec.grid.end()))
        throw std::invalid_argument("/grid: values must be ascending");
    if (spec.replications < 1) throw std::invalid_argument("/replications: must be >= 1");
    if (spec.p < 1) throw std::invalid_argument("/p: must be >= 1");
    if (spec.cap < 1) throw std::invalid_argument("/cap: must be >= 1");
    if (spec.methods.empty()) throw std::invalid_argument("/methods: must be nonempty");
    if (spec.setting == Setting::kCustom && !spec.custom_model)
        throw std::invalid_argument("/model: required for the custom setting");
    if (spec.swept_parameter != "mu0" && spec.swept_parameter != "pi" &&
        spec.swept_parameter != "none")
        throw std::invalid_argument("/swept_parameter: must be one of mu0, pi, none");
    if (spec.swept_parameter == "none" && spec.grid.size() != 1)
        throw std::invalid_argument("/grid: a single grid point is required when nothing is swept");
    return spec;
}

MixtureModel materialize_model(const SweepSpec& spec, double grid_value) {
    switch (spec.setting) {
        case Setting::kSetting1:
            return MixtureModel(spec.p, 0.01, 0.0, 1.0, AltMeans::constant(grid_value), 1.0);
        case Setting::kSetting2:
            return MixtureModel(spec.p, 0.05, 0.0, 1.0, AltMeans::constant(grid_value), 1.0);
        case Setting::kSetting3:
            return MixtureModel(spec.p, grid_value, 0.0, 1.0, AltMeans::uniform(2.0, 4.0), 1.0);
        case Setting::kCustom:
            break;
    }
    MixtureModel model = *spec.custom_model;
    if (spec.swept_parameter == "mu0") {
        if (model.alt_means.kind != AltMeans::Kind::kConstant)
            throw std::invalid_argument("sweeping mu0 needs a constant signal-mean law");
        return MixtureModel(spec.p, model.pi, model.null_mean, model.null_sd,
                            AltMeans::constant(grid_value), model.alt_prior_sd);
    }
    if (spec.swept_parameter == "pi")
        return MixtureModel(spec.p, grid_value, model.null_mean, model.null_sd, model.alt_means,
                            model.alt_prior_sd);
    return MixtureModel(spec.p, model.pi, model.null_mean, model.null_sd, model.alt_means,
                        model.alt_prior_sd);
}

namespace {

// Hyperparameters and thresholds estimated once from stage-1 data.
struct DataDrivenSetup {
    PosteriorHyper hyper;
    ThresholdPair thresholds;
};

DataDrivenSetup data_driven_setup(const MixtureModel& model, const GroundTruth& truth,
                                  std::uint64_t rep_seed, const ErrorBudget& budget) {
    std::vector<double> stage1(model.p);
    for (int i = 0; i < model.p; ++i) stage1[i] = sample_observation(model, truth, i, rep_seed, 1);
    const EmpiricalNullFit fit = fit_empirical_null(stage1);
    DataDrivenSetup setup{
        PosteriorHyper{fit.pi_hat, top_fraction_mean(stage1, fit.pi_hat), 1.0,
                       fit.sigma0_hat * fit.sigma0_hat, fit.mu0_hat},
        approx_thresholds(budget, fit.pi_hat)};
    return setup;
}

DecisionRecord run_method(Method method, const MixtureModel& model, const GroundTruth& truth,
                          std::uint64_t rep_seed, const ErrorBudget& budget, int cap,
                          int ds_stages) {
    ModelObservationSource source(model, truth, rep_seed);
    const RunOptions options{cap};
    switch (method) {
        case Method::kOrSt:
            return run_simple_thresholding(source, approx_thresholds(budget, model.pi),
                                           oracle_hyper(model), options);
        case Method::kOrSm:
            return run_smart(source, approx_thresholds(budget, model.pi), oracle_hyper(model),
                             options);
        case Method::kDdSt: {
            const auto setup = data_driven_setup(model, truth, rep_seed, budget);
            return run_simple_thresholding(source, setup.thresholds, setup.hyper, options);
        }
        case Method::kDdSm: {
            const auto setup = data_driven_setup(model, truth, rep_seed, budget);
            return run_smart(source, setup.thresholds, setup.hyper, options);
        }
        case Method::kDs:
            return run_distilled_sensing(source,
                                         ds_stages > 0 ? ds_stages : ds_default_stages(model.p));
    }
    throw std::logic_error("run_method: unreachable");
}

}  // namespace

SweepResult run_sweep(const SweepSpec& raw_spec, int threads) {
    const SweepSpec spec = finalize_sweep_spec(raw_spec);
    SweepResult result;
    result.spec = spec;
    result.version = kVersion;

    const RandomStream root(spec.seed);
    for (std::size_t g = 0; g < spec.grid.size(); ++g) {
        const double grid_value = spec.grid[g];
        const RandomStream grid_stream = root.child(g);
        for (const Method method : spec.methods) {
            GridCellResult cell;
            cell.method = method;
            cell.grid_value = grid_value;
            try {
                const MixtureModel model = materialize_model(spec, grid_value);
                if ((method == Method::kOrSt || method == Method::kOrSm) &&
                    model.alt_means.kind != AltMeans::Kind::kConstant)
                    throw std::invalid_argument(
                        "oracle recursion unavailable for a non-constant signal-mean law");

                std::vector<RunSummary> summaries(spec.replications);
                std::vector<RepRow> rows(spec.replications);
                std::vector<std::string> errors(spec.replications);
                parallel_for(spec.replications, threads, [&](int r) {
                    try {
                        const std::uint64_t rep_seed =
                            grid_stream.child(static_cast<std::uint64_t>(r)).key();
                        const GroundTruth truth = sample_ground_truth(model, rep_seed);
                        const DecisionRecord record = run_method(
                            method, model, truth, rep_seed, spec.budget, spec.cap, spec.ds_stages);
                        const PerRunMetrics m = per_run_metrics(truth, record);
                        summaries[r] = m.summary;
                        rows[r] = RepRow{r, m.fdp, m.mdp, m.fnp, m.east, m.total_obs};
                    } catch (const std::exception& e) {
                        errors[r] = e.what();
                    }
                });
                for (const std::string& err : errors)
                    if (!err.empty()) throw std::runtime_error(err);
                cell.report = ensemble_metrics(summaries);
                cell.rows = std::move(rows);
                cell.summaries = std::move(summaries);
            } catch (const std::exception& e) {
                cell.failed = true;
                cell.error = e.what();
            }
            result.cells.push_back(std::move(cell));
        }
    }
    return result;
}

MatchedComparison run_ds_matched_comparison(const MixtureModel& model, int ds_stages,
                                            int replications, std::uint64_t seed, int threads,
                                            int cap) {
    if (ds_stages < 1)
        throw std::invalid_argument("run_ds_matched_comparison: ds_stages must be >= 1");
    if (replications < 1)
        throw std::invalid_argument("run_ds_matched_comparison: replications must be >= 1");

    const RandomStream root(seed);
    MatchedComparison out;

    std::vector<RunSummary> ds_runs(replications);
    parallel_for(replications, threads, [&](int r) {
        const std::uint64_t rep_seed =
            root.child(kDsPhase).child(static_cast<std::uint64_t>(r)).key();
        const GroundTruth truth = sample_ground_truth(model, rep_seed);
        ModelObservationSource source(model, truth, rep_seed);
        const DecisionRecord record = run_distilled_sensing(source, ds_stages);
        ds_runs[r] = per_run_metrics(truth, record).summary;
    });
    out.ds_report = ensemble_metrics(ds_runs);
    if (out.ds_report.zero_discoveries) {
        out.aborted = true;
        out.flag = "distilled sensing made no discoveries; no error level to match";
        return out;
    }

    // A recorded rate of zero means "no event in the phase-1 sample"; the
    // matchable stand-in is the sample's resolution, one event over the
    // relevant count.
    long long signals_total = 0, discoveries_total = 0;
    for (const RunSummary& r : ds_runs) {
        signals_total += r.signals;
        discoveries_total += r.discoveries;
    }
    const auto clamp_rate = [](double v, double floor) {
        return std::min(std::max(v, floor), 1.0 - 1e-4);
    };
    const double gamma_m =
        clamp_rate(out.ds_report.mdr, 1.0 / static_cast<double>(signals_total + 1));
    double alpha_m =
        clamp_rate(out.ds_report.fpr, 1.0 / static_cast<double>(discoveries_total + 1));
    const double t_u = (1.0 - model.pi) / (model.pi * gamma_m + 1.0 - model.pi);
    alpha_m = std::min(alpha_m, t_u * (1.0 - 1e-9));  // keep the pair ordered
    out.matched_budget = ErrorBudget(alpha_m, gamma_m);

    const ThresholdPair thresholds = approx_thresholds(out.matched_budget, model.pi);
    const PosteriorHyper hyper = oracle_hyper(model);
    std::vector<RunSummary> smart_runs(replications);
    parallel_for(replications, threads, [&](int r) {
        const std::uint64_t rep_seed =
            root.child(kSmartPhase).child(static_cast<std::uint64_t>(r)).key();
        const GroundTruth truth = sample_ground_truth(model, rep_seed);
        ModelObservationSource source(model, truth, rep_seed);
        const DecisionRecord record = run_smart(source, thresholds, hyper, RunOptions{cap});
        smart_runs[r] = per_run_metrics(truth, record).summary;
    });
    out.smart_report = ensemble_metrics(smart_runs);
    out.observation_ratio = static_cast<double>(out.smart_report.total_obs) /
                            static_cast<double>(out.ds_report.total_obs);
    return out;
}

}  // namespace smartseq
