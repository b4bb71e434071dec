#pragma once
// Replication engine: parameter sweeps over the standard settings, the four
// recursion-backed method variants plus the distilled-sensing baseline, and
// the matched-error-level efficiency comparison against distilled sensing.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "smartseq/metrics.hpp"
#include "smartseq/model.hpp"
#include "smartseq/procedures.hpp"
#include "smartseq/thresholds.hpp"

namespace smartseq {

enum class Method { kOrSt, kOrSm, kDdSt, kDdSm, kDs };

std::string method_name(Method method);
Method method_from_name(const std::string& name);

enum class Setting { kSetting1, kSetting2, kSetting3, kCustom };

std::string setting_name(Setting setting);
Setting setting_from_name(const std::string& name);

struct SweepSpec {
    Setting setting = Setting::kSetting2;
    std::string swept_parameter;  // "mu0" or "pi"
    std::vector<double> grid;     // nonempty, ascending
    int p = 20000;
    int replications = 50;
    ErrorBudget budget{0.05, 0.05};
    std::vector<Method> methods;
    std::uint64_t seed = 1;
    int cap = 100;
    int ds_stages = 0;  // 0 = formula default for p
    std::optional<MixtureModel> custom_model;
};

// Fills setting defaults (grid, swept parameter) and validates; throws
// std::invalid_argument with a field path on violation.
SweepSpec finalize_sweep_spec(SweepSpec spec);

// The model at one grid point.
MixtureModel materialize_model(const SweepSpec& spec, double grid_value);

struct RepRow {
    int rep;
    double fdp, mdp, fnp, east;
    long long total_obs;
};

struct GridCellResult {
    Method method;
    double grid_value = 0.0;
    bool failed = false;
    std::string error;
    MetricsReport report;
    std::vector<RepRow> rows;
    std::vector<RunSummary> summaries;  // per replication, index-aligned with rows
};

struct SweepResult {
    SweepSpec spec;
    std::vector<GridCellResult> cells;  // grid-major, then method order as requested
    std::string version;
};

// Runs every (grid point, method) cell on common random numbers: within a
// grid point all methods see identical observation values for shared
// (location, stage) pairs. Failed cells carry a structured message and do not
// abort the sweep.
SweepResult run_sweep(const SweepSpec& spec, int threads = 1);

struct MatchedComparison {
    bool aborted = false;
    std::string flag;
    ErrorBudget matched_budget{0.5, 0.5};
    MetricsReport ds_report;
    MetricsReport smart_report;
    double observation_ratio = 0.0;  // SMART total over DS total
};

// Phase 1 runs distilled sensing and records its achieved error rates; phase
// 2 runs the compound-thresholding procedure at those levels on fresh seeds.
MatchedComparison run_ds_matched_comparison(const MixtureModel& model, int ds_stages,
                                            int replications, std::uint64_t seed, int threads = 1,
                                            int cap = 100);

}  // namespace smartseq
