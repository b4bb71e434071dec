#include "smartseq/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "smartseq/ingest.hpp"
#include "smartseq/parallel.hpp"
#include "smartseq/version.hpp"

namespace smartseq {

namespace fs = std::filesystem;
using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string config_hash(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

[[noreturn]] void fail(const std::string& pointer, const std::string& message) {
    throw std::invalid_argument(pointer + ": " + message);
}

double require_number(const json& j, const std::string& pointer) {
    if (!j.is_number()) fail(pointer, "expected a number");
    return j.get<double>();
}

int require_int(const json& j, const std::string& pointer) {
    if (!j.is_number_integer()) fail(pointer, "expected an integer");
    return j.get<int>();
}

std::string require_string(const json& j, const std::string& pointer) {
    if (!j.is_string()) fail(pointer, "expected a string");
    return j.get<std::string>();
}

ErrorBudget budget_from_json(const json& j, const std::string& pointer) {
    if (!j.is_object()) fail(pointer, "expected an object with alpha and gamma");
    if (!j.contains("alpha")) fail(pointer + "/alpha", "required");
    if (!j.contains("gamma")) fail(pointer + "/gamma", "required");
    const double alpha = require_number(j.at("alpha"), pointer + "/alpha");
    const double gamma = require_number(j.at("gamma"), pointer + "/gamma");
    if (!(alpha > 0.0 && alpha < 1.0)) fail(pointer + "/alpha", "must lie strictly inside (0,1)");
    if (!(gamma > 0.0 && gamma < 1.0)) fail(pointer + "/gamma", "must lie strictly inside (0,1)");
    return ErrorBudget(alpha, gamma);
}

struct Provenance {
    std::string hash;
    std::uint64_t seed = 0;

    std::string csv_line() const {
        std::ostringstream out;
        out << "# config_hash=" << hash << " seed=" << seed << " version=" << kVersion << "\n";
        return out.str();
    }
    ordered_json to_json() const {
        ordered_json p;
        p["config_hash"] = hash;
        p["seed"] = seed;
        p["version"] = kVersion;
        return p;
    }
};

void write_text_file(const fs::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << contents;
}

void write_json_file(const fs::path& path, const ordered_json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

struct CommandContext {
    RunConfig run;
    json config;
    std::string config_bytes;
    fs::path out_dir;
    Provenance provenance;
    int threads = 1;

    std::uint64_t resolve_seed(std::uint64_t fallback) const {
        if (run.seed) return *run.seed;
        if (config.contains("seed")) {
            const json& s = config.at("seed");
            if (!s.is_number_unsigned() && !s.is_number_integer())
                fail("/seed", "expected a 64-bit integer");
            return s.get<std::uint64_t>();
        }
        return fallback;
    }
};

void write_error_file(const CommandContext& ctx, const std::string& kind,
                      const std::string& message, const std::string& detail = "") {
    ordered_json err;
    err["command"] = ctx.run.command;
    err["error"] = kind;
    err["message"] = message;
    if (!detail.empty()) err["constraint"] = detail;
    err["provenance"] = ctx.provenance.to_json();
    write_json_file(ctx.out_dir / "error.json", err);
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

int cmd_simulate(CommandContext& ctx) {
    SweepSpec spec = sweep_spec_from_json(ctx.config);
    if (ctx.run.seed) spec.seed = *ctx.run.seed;
    ctx.provenance.seed = spec.seed;
    const SweepResult result = run_sweep(spec, ctx.threads);

    std::ostringstream rows;
    rows << ctx.provenance.csv_line();
    rows << "method,grid_param,grid_value,rep,fdp,mdp,fnp,east,total_obs\n";
    std::ostringstream summary;
    summary << ctx.provenance.csv_line();
    summary << "method,grid_param,grid_value,replications,fpr,fpr_se,mdr,mdr_se,fnr,fnr_se,"
               "east,east_se,mean_total_obs,cap_hits\n";
    ordered_json failures = ordered_json::array();
    for (const GridCellResult& cell : result.cells) {
        const std::string head = method_name(cell.method) + "," + result.spec.swept_parameter +
                                 "," + format_double(cell.grid_value);
        if (cell.failed) {
            ordered_json f;
            f["method"] = method_name(cell.method);
            f["grid_value"] = cell.grid_value;
            f["message"] = cell.error;
            failures.push_back(f);
            continue;
        }
        for (const RepRow& row : cell.rows) {
            rows << head << "," << row.rep << "," << format_double(row.fdp) << ","
                 << format_double(row.mdp) << "," << format_double(row.fnp) << ","
                 << format_double(row.east) << "," << row.total_obs << "\n";
        }
        const MetricsReport& rep = cell.report;
        summary << head << "," << rep.replications << "," << format_double(rep.fpr) << ","
                << format_double(rep.mc_se.at("fpr")) << "," << format_double(rep.mdr) << ","
                << format_double(rep.mc_se.at("mdr")) << "," << format_double(rep.fnr) << ","
                << format_double(rep.mc_se.at("fnr")) << "," << format_double(rep.east) << ","
                << format_double(rep.mc_se.at("east")) << ","
                << format_double(static_cast<double>(rep.total_obs) / rep.replications) << ","
                << rep.cap_hits << "\n";
    }
    write_text_file(ctx.out_dir / "sweep_results.csv", rows.str());
    write_text_file(ctx.out_dir / "summary.csv", summary.str());

    ordered_json prov;
    prov["command"] = "simulate";
    prov["config"] = ctx.config;
    prov["provenance"] = ctx.provenance.to_json();
    write_json_file(ctx.out_dir / "provenance.json", prov);

    if (!failures.empty()) {
        ordered_json manifest;
        manifest["command"] = "simulate";
        manifest["failed_cells"] = failures;
        manifest["provenance"] = ctx.provenance.to_json();
        write_json_file(ctx.out_dir / "errors.json", manifest);
        return 1;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// calibrate
// ---------------------------------------------------------------------------

int cmd_calibrate(CommandContext& ctx) {
    if (!ctx.config.contains("budget")) fail("/budget", "required");
    const ErrorBudget budget = budget_from_json(ctx.config.at("budget"), "/budget");
    CalibrationConfig mc;
    if (ctx.config.contains("mc")) {
        const json& m = ctx.config.at("mc");
        if (!m.is_object()) fail("/mc", "expected an object");
        if (m.contains("p")) mc.p = require_int(m.at("p"), "/mc/p");
        if (m.contains("replications"))
            mc.replications = require_int(m.at("replications"), "/mc/replications");
        if (m.contains("tolerance")) mc.tolerance = require_number(m.at("tolerance"), "/mc/tolerance");
        if (m.contains("cap")) mc.cap = require_int(m.at("cap"), "/mc/cap");
    }
    if (!ctx.config.contains("model")) fail("/model", "required");
    const MixtureModel model = model_from_json(ctx.config.at("model"), mc.p);
    mc.p = model.p;
    mc.seed = ctx.resolve_seed(mc.seed);
    ctx.provenance.seed = mc.seed;

    ordered_json out;
    out["command"] = "calibrate";
    if (ctx.run.approx_only) {
        const ThresholdPair pair = approx_thresholds(budget, model.pi);
        out["mode"] = "approx";
        out["t_l"] = pair.t_l;
        out["t_u"] = pair.t_u;
        out["A"] = pair.lr_lower;
        out["B"] = pair.lr_upper;
        out["pi"] = pair.pi;
    } else {
        CalibrationResult result;
        try {
            result = calibrate_oracle_thresholds(model, budget, mc, ctx.threads);
        } catch (const InfeasibleBudgetError& e) {
            write_error_file(ctx, "infeasible_budget", e.what(), e.binding_constraint);
            return 1;
        }
        out["mode"] = "monte_carlo";
        out["t_l"] = result.thresholds.t_l;
        out["t_u"] = result.thresholds.t_u;
        out["A"] = result.thresholds.lr_lower;
        out["B"] = result.thresholds.lr_upper;
        out["pi"] = result.thresholds.pi;
        out["achieved_fpr"] = result.achieved_fpr;
        out["achieved_mdr"] = result.achieved_mdr;
        ordered_json mcj;
        mcj["p"] = result.config.p;
        mcj["replications"] = result.config.replications;
        mcj["tolerance"] = result.config.tolerance;
        mcj["cap"] = result.config.cap;
        mcj["seed"] = result.config.seed;
        out["mc_config"] = mcj;
    }
    out["provenance"] = ctx.provenance.to_json();
    write_json_file(ctx.out_dir / "thresholds.json", out);
    return 0;
}

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

PilotDataset load_pilot(const json& config) {
    const bool has_table = config.contains("table");
    const bool has_image = config.contains("image");
    if (has_table == has_image) fail("/table", "exactly one of table or image is required");
    if (has_table) return load_delimited_table(require_string(config.at("table"), "/table"));
    return load_grayscale_image(require_string(config.at("image"), "/image"));
}

int cmd_ingest(CommandContext& ctx) {
    ctx.provenance.seed = ctx.resolve_seed(0);
    double c = 2.0;
    if (ctx.config.contains("c")) c = require_number(ctx.config.at("c"), "/c");

    PilotDataset data;
    EmpiricalNullFit fit;
    bool fit_available = false;
    try {
        data = load_pilot(ctx.config);
        // Image pixels are standardized at load; table data still needs the
        // replicate-based z-score transform.
        std::vector<double> z;
        if (data.source == PilotDataset::Source::kGrayscaleImage) {
            z.reserve(data.values.size());
            for (const auto& row : data.values) z.push_back(row.front());
        } else {
            z = compute_z_scores(data);
        }
        if (static_cast<int>(z.size()) >= 100) {
            fit = fit_empirical_null(z, c);
            fit_available = true;
        }

        std::ostringstream zcsv;
        zcsv << ctx.provenance.csv_line() << "location_id,z\n";
        for (std::size_t i = 0; i < z.size(); ++i)
            zcsv << i << "," << format_double(z[i]) << "\n";
        write_text_file(ctx.out_dir / "zscores.csv", zcsv.str());
    } catch (const std::exception& e) {
        write_error_file(ctx, "ingest_failed", e.what());
        return 1;
    }

    ordered_json out;
    out["command"] = "ingest";
    out["p"] = data.p();
    if (fit_available) {
        out["pi_hat"] = fit.pi_hat;
        out["mu0_hat"] = fit.mu0_hat;
        out["sigma0_hat"] = fit.sigma0_hat;
        out["mu_signal_hat"] = fit.mu_signal_hat;
        out["pi_at_floor"] = fit.pi_at_floor;
    } else {
        out["fit_skipped"] = "fewer than 100 locations";
    }
    out["provenance"] = ctx.provenance.to_json();
    write_json_file(ctx.out_dir / "null_fit.json", out);
    return 0;
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

struct CompareData {
    MixtureModel model;
    // Pilot-anchored mode: real stage-1 z-scores plus the designated truth
    // (the ceil(p * pi_hat) largest z-scores are taken as the signals).
    std::optional<std::vector<double>> stage1;
    GroundTruth pilot_truth;
};

CompareData compare_data(const CommandContext& ctx, int p) {
    if (ctx.config.contains("model"))
        return CompareData{model_from_json(ctx.config.at("model"), p), std::nullopt, {}};
    if (ctx.config.contains("fit")) {
        const json& f = ctx.config.at("fit");
        EmpiricalNullFit fit;
        fit.pi_hat = require_number(f.at("pi_hat"), "/fit/pi_hat");
        fit.mu0_hat = require_number(f.at("mu0_hat"), "/fit/mu0_hat");
        fit.sigma0_hat = require_number(f.at("sigma0_hat"), "/fit/sigma0_hat");
        fit.mu_signal_hat = require_number(f.at("mu_signal_hat"), "/fit/mu_signal_hat");
        return CompareData{build_semisynthetic_model(fit, p).model, std::nullopt, {}};
    }
    const PilotDataset data = load_pilot(ctx.config);
    std::vector<double> z = compute_z_scores(data);
    const EmpiricalNullFit fit = fit_empirical_null(z);
    CompareData out{build_semisynthetic_model(fit, data.p()).model, std::nullopt, {}};
    const int n_signals = static_cast<int>(
        std::min<double>(data.p(), std::max(1.0, std::ceil(fit.pi_hat * data.p()))));
    std::vector<int> order(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return z[a] > z[b]; });
    out.pilot_truth.theta.assign(z.size(), 0);
    out.pilot_truth.mu.assign(z.size(), 0.0);
    for (int k = 0; k < n_signals; ++k) {
        out.pilot_truth.theta[order[k]] = 1;
        out.pilot_truth.mu[order[k]] = fit.mu_signal_hat;
    }
    out.stage1 = std::move(z);
    return out;
}

int cmd_compare(CommandContext& ctx) {
    const std::uint64_t seed = ctx.resolve_seed(1);
    ctx.provenance.seed = seed;
    int p = 20000;
    if (ctx.config.contains("p")) p = require_int(ctx.config.at("p"), "/p");
    int replications = 20;
    if (ctx.config.contains("replications"))
        replications = require_int(ctx.config.at("replications"), "/replications");
    int ds_stages = 10;
    if (ctx.config.contains("ds_stages"))
        ds_stages = require_int(ctx.config.at("ds_stages"), "/ds_stages");
    int cap = 100;
    if (ctx.config.contains("cap")) cap = require_int(ctx.config.at("cap"), "/cap");
    ErrorBudget budget(0.1, 0.1);
    if (ctx.config.contains("budget")) budget = budget_from_json(ctx.config.at("budget"), "/budget");

    std::optional<CompareData> data;
    try {
        data = compare_data(ctx, p);
    } catch (const std::exception& e) {
        write_error_file(ctx, "compare_setup_failed", e.what());
        return 1;
    }
    const MixtureModel& model = data->model;
    const bool pilot_mode = data->stage1.has_value();

    const RandomStream root(seed);
    const ThresholdPair thresholds = approx_thresholds(budget, model.pi);
    const PosteriorHyper hyper = oracle_hyper(model);

    const auto truth_for = [&](std::uint64_t rep_seed) {
        return pilot_mode ? data->pilot_truth : sample_ground_truth(model, rep_seed);
    };
    const auto make_source = [&](const GroundTruth& truth,
                                 std::uint64_t rep_seed) -> std::unique_ptr<ObservationSource> {
        if (pilot_mode)
            return std::make_unique<PilotThenModelSource>(*data->stage1, model, truth, rep_seed);
        return std::make_unique<ModelObservationSource>(model, truth, rep_seed);
    };

    // Table 1: the compound procedure at the requested budget, then the
    // baseline run just long enough to spend at least as many observations.
    std::vector<RunSummary> smart_runs(replications);
    parallel_for(replications, ctx.threads, [&](int r) {
        const std::uint64_t rep_seed = root.child(10).child(static_cast<std::uint64_t>(r)).key();
        const GroundTruth truth = truth_for(rep_seed);
        const auto source = make_source(truth, rep_seed);
        smart_runs[r] =
            per_run_metrics(truth, run_smart(*source, thresholds, hyper, RunOptions{cap})).summary;
    });
    const MetricsReport smart_budget = ensemble_metrics(smart_runs);

    constexpr int kDsMaxStages = 12;
    std::vector<RunSummary> probe_runs(replications);
    parallel_for(replications, ctx.threads, [&](int r) {
        const std::uint64_t rep_seed = root.child(11).child(static_cast<std::uint64_t>(r)).key();
        const GroundTruth truth = truth_for(rep_seed);
        const auto source = make_source(truth, rep_seed);
        probe_runs[r] = per_run_metrics(truth, run_distilled_sensing(*source, kDsMaxStages)).summary;
    });
    // Cumulative observations after k stages, from the probe's stage sizes.
    long long active_total = static_cast<long long>(model.p) * replications;
    std::vector<long long> cumulative(kDsMaxStages + 1, 0);
    for (int k = 1; k <= kDsMaxStages; ++k) {
        cumulative[k] = cumulative[k - 1] + active_total;
        long long decided = 0;
        for (const RunSummary& run : probe_runs)
            for (const StageCounts& c : run.stages)
                if (c.stage == k) decided += c.discoveries + c.acceptances;
        active_total -= decided;
        // Survivors are decided at the final probe stage; keep them active
        // for prefix accounting.
        if (k == kDsMaxStages) break;
    }
    int ds_budget_stages = 2;
    while (ds_budget_stages < kDsMaxStages &&
           cumulative[ds_budget_stages] < smart_budget.total_obs)
        ++ds_budget_stages;
    std::vector<RunSummary> ds_budget_runs(replications);
    const int chosen = ds_budget_stages;
    parallel_for(replications, ctx.threads, [&](int r) {
        const std::uint64_t rep_seed = root.child(11).child(static_cast<std::uint64_t>(r)).key();
        const GroundTruth truth = truth_for(rep_seed);
        const auto source = make_source(truth, rep_seed);
        ds_budget_runs[r] = per_run_metrics(truth, run_distilled_sensing(*source, chosen)).summary;
    });
    const MetricsReport ds_budget = ensemble_metrics(ds_budget_runs);

    // Table 2: the baseline's achieved error levels matched by the compound
    // procedure on fresh seeds.
    const MatchedComparison matched = run_ds_matched_comparison(
        model, ds_stages, replications, root.child(12).key(), ctx.threads, cap);

    std::ostringstream csv;
    csv << ctx.provenance.csv_line();
    csv << "table,method,fdp,mdp,total_obs\n";
    const auto emit = [&](const char* table, const char* method, const MetricsReport& report) {
        csv << table << "," << method << "," << format_double(report.fpr) << ","
            << format_double(report.mdr) << ","
            << format_double(static_cast<double>(report.total_obs) / report.replications) << "\n";
    };
    emit("budget_matched_samples", "SMART", smart_budget);
    emit("budget_matched_samples", "DS", ds_budget);
    if (!matched.aborted) {
        emit("error_matched", "DS", matched.ds_report);
        emit("error_matched", "SMART", matched.smart_report);
    }
    write_text_file(ctx.out_dir / "compare.csv", csv.str());

    ordered_json out;
    out["command"] = "compare";
    out["ds_budget_stages"] = ds_budget_stages;
    out["matched_aborted"] = matched.aborted;
    if (matched.aborted) {
        out["matched_flag"] = matched.flag;
    } else {
        out["matched_alpha"] = matched.matched_budget.alpha;
        out["matched_gamma"] = matched.matched_budget.gamma;
        out["observation_ratio"] = matched.observation_ratio;
    }
    out["provenance"] = ctx.provenance.to_json();
    write_json_file(ctx.out_dir / "compare.json", out);
    return matched.aborted ? 1 : 0;
}

// ---------------------------------------------------------------------------
// analyze-limits
// ---------------------------------------------------------------------------

int cmd_analyze_limits(CommandContext& ctx) {
    ctx.provenance.seed = ctx.resolve_seed(0);
    const double pi = require_number(ctx.config.at("pi"), "/pi");
    const double eta = require_number(ctx.config.at("eta"), "/eta");
    const double f_p = require_number(ctx.config.at("f_p"), "/f_p");
    const double epsilon = require_number(ctx.config.at("epsilon"), "/epsilon");

    KlDivergence kl;
    if (ctx.config.contains("kl")) {
        const json& k = ctx.config.at("kl");
        kl = kl_divergence_normal(require_number(k.at("mu0"), "/kl/mu0"),
                                  require_number(k.at("sd0"), "/kl/sd0"),
                                  require_number(k.at("mu1"), "/kl/mu1"),
                                  require_number(k.at("sd1"), "/kl/sd1"));
    } else if (ctx.config.contains("d01") && ctx.config.contains("d10")) {
        kl.d01 = require_number(ctx.config.at("d01"), "/d01");
        kl.d10 = require_number(ctx.config.at("d10"), "/d10");
        kl.d_kl = std::max(kl.d01, kl.d10);
    } else {
        fail("/kl", "either kl normal parameters or d01/d10 are required");
    }

    LimitBounds bounds;
    try {
        bounds = limit_bounds(pi, kl, eta, f_p, epsilon);
    } catch (const std::exception& e) {
        write_error_file(ctx, "invalid_limits_input", e.what());
        return 1;
    }

    ordered_json out;
    out["command"] = "analyze-limits";
    out["pi"] = pi;
    out["eta"] = eta;
    out["f_p"] = f_p;
    out["epsilon"] = epsilon;
    out["d01"] = kl.d01;
    out["d10"] = kl.d10;
    out["d_kl"] = kl.d_kl;
    out["lower_bound_applicable"] = bounds.lower_tau.has_value();
    if (bounds.lower_tau)
        out["lower_tau"] = *bounds.lower_tau;
    else
        out["lower_tau"] = nullptr;
    out["upper_tau"] = bounds.upper_tau;
    out["provenance"] = ctx.provenance.to_json();
    write_json_file(ctx.out_dir / "limits.json", out);
    return 0;
}

}  // namespace

// ---------------------------------------------------------------------------
// config parsing
// ---------------------------------------------------------------------------

MixtureModel model_from_json(const json& j, int default_p) {
    if (!j.is_object()) fail("/model", "expected an object");
    int p = default_p;
    if (j.contains("p")) p = require_int(j.at("p"), "/model/p");
    if (!j.contains("pi")) fail("/model/pi", "required");
    const double pi = require_number(j.at("pi"), "/model/pi");
    double null_mean = 0.0, null_sd = 1.0, alt_prior_sd = 1.0;
    if (j.contains("null_mean")) null_mean = require_number(j.at("null_mean"), "/model/null_mean");
    if (j.contains("null_sd")) null_sd = require_number(j.at("null_sd"), "/model/null_sd");
    if (j.contains("alt_prior_sd"))
        alt_prior_sd = require_number(j.at("alt_prior_sd"), "/model/alt_prior_sd");
    if (!j.contains("alt_means")) fail("/model/alt_means", "required");
    const json& am = j.at("alt_means");
    if (!am.is_object() || !am.contains("kind")) fail("/model/alt_means/kind", "required");
    const std::string kind = require_string(am.at("kind"), "/model/alt_means/kind");
    AltMeans alt;
    if (kind == "constant") {
        alt = AltMeans::constant(require_number(am.at("value"), "/model/alt_means/value"));
    } else if (kind == "uniform") {
        alt = AltMeans::uniform(require_number(am.at("lo"), "/model/alt_means/lo"),
                                require_number(am.at("hi"), "/model/alt_means/hi"));
    } else if (kind == "explicit") {
        if (!am.contains("values") || !am.at("values").is_array())
            fail("/model/alt_means/values", "expected an array");
        std::vector<double> values;
        for (const auto& v : am.at("values"))
            values.push_back(require_number(v, "/model/alt_means/values"));
        alt = AltMeans::explicit_values(std::move(values));
    } else {
        fail("/model/alt_means/kind", "must be one of constant, uniform, explicit");
    }
    try {
        return MixtureModel(p, pi, null_mean, null_sd, std::move(alt), alt_prior_sd);
    } catch (const std::invalid_argument& e) {
        fail("/model", e.what());
    }
}

SweepSpec sweep_spec_from_json(const json& j) {
    if (!j.is_object()) fail("", "config must be a JSON object");
    SweepSpec spec;
    if (j.contains("setting"))
        spec.setting = setting_from_name(require_string(j.at("setting"), "/setting"));
    if (j.contains("swept_parameter"))
        spec.swept_parameter = require_string(j.at("swept_parameter"), "/swept_parameter");
    if (j.contains("grid")) {
        if (!j.at("grid").is_array()) fail("/grid", "expected an array of numbers");
        for (const auto& v : j.at("grid")) spec.grid.push_back(require_number(v, "/grid"));
    }
    if (j.contains("p")) spec.p = require_int(j.at("p"), "/p");
    if (j.contains("replications"))
        spec.replications = require_int(j.at("replications"), "/replications");
    if (j.contains("budget")) spec.budget = budget_from_json(j.at("budget"), "/budget");
    if (j.contains("cap")) spec.cap = require_int(j.at("cap"), "/cap");
    if (j.contains("ds_stages")) spec.ds_stages = require_int(j.at("ds_stages"), "/ds_stages");
    if (j.contains("seed")) {
        const json& s = j.at("seed");
        if (!s.is_number_unsigned() && !s.is_number_integer())
            fail("/seed", "expected a 64-bit integer");
        spec.seed = s.get<std::uint64_t>();
    }
    if (!j.contains("methods")) fail("/methods", "required");
    if (!j.at("methods").is_array() || j.at("methods").empty())
        fail("/methods", "expected a nonempty array of method names");
    for (const auto& m : j.at("methods")) {
        try {
            spec.methods.push_back(method_from_name(require_string(m, "/methods")));
        } catch (const std::invalid_argument& e) {
            fail("/methods", e.what());
        }
    }
    if (j.contains("model")) spec.custom_model = model_from_json(j.at("model"), spec.p);
    return finalize_sweep_spec(std::move(spec));
}

int run_command(const RunConfig& run) {
    CommandContext ctx;
    ctx.run = run;
    ctx.threads = resolve_thread_count(run.threads);

    std::ifstream in(run.config_path, std::ios::binary);
    if (!in) {
        std::cerr << "error: cannot open config " << run.config_path << "\n";
        return 2;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    ctx.config_bytes = buf.str();
    try {
        ctx.config = json::parse(ctx.config_bytes);
    } catch (const json::parse_error& e) {
        std::cerr << "error: config is not valid JSON: " << e.what() << "\n";
        return 2;
    }
    ctx.provenance.hash = config_hash(ctx.config_bytes);

    ctx.out_dir = run.output_dir.empty() ? fs::path(".") : fs::path(run.output_dir);
    std::error_code ec;
    fs::create_directories(ctx.out_dir, ec);
    if (ec) {
        std::cerr << "error: cannot create output directory " << ctx.out_dir << "\n";
        return 2;
    }

    try {
        if (run.command == "simulate") return cmd_simulate(ctx);
        if (run.command == "calibrate") return cmd_calibrate(ctx);
        if (run.command == "ingest") return cmd_ingest(ctx);
        if (run.command == "compare") return cmd_compare(ctx);
        if (run.command == "analyze-limits") return cmd_analyze_limits(ctx);
        std::cerr << "error: unknown command " << run.command << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        write_error_file(ctx, "runtime_error", e.what());
        return 1;
    }
}

}  // namespace smartseq
