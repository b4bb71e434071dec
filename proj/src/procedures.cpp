#include "smartseq/procedures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace smartseq {

namespace {
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

void require_ascending(std::span<const double> values, const char* who) {
    for (std::size_t i = 0; i + 1 < values.size(); ++i)
        if (values[i] > values[i + 1])
            throw std::invalid_argument(std::string(who) + ": statistics must be sorted ascending");
}
}  // namespace

PosteriorHyper oracle_hyper(const MixtureModel& model) {
    if (model.alt_means.kind != AltMeans::Kind::kConstant)
        throw std::invalid_argument(
            "oracle_hyper: posterior recursion needs a constant signal-mean law");
    PosteriorHyper hyper;
    hyper.pi = model.pi;
    hyper.eta0 = model.alt_means.value;
    hyper.tau20 =
        model.alt_prior_sd > 0.0 ? model.alt_prior_sd * model.alt_prior_sd : kPointMassTau2;
    hyper.sigma2 = model.null_sd * model.null_sd;
    hyper.mu0 = model.null_mean;
    return hyper;
}

ModelObservationSource::ModelObservationSource(const MixtureModel& model, const GroundTruth& truth,
                                               std::uint64_t seed)
    : model_(model), truth_(truth), seed_(seed) {}

int ModelObservationSource::location_count() const { return model_.p; }

double ModelObservationSource::observe(int location, int stage) {
    return sample_observation(model_, truth_, location, seed_, stage);
}

ReplayObservationSource::ReplayObservationSource(std::vector<std::vector<double>> rows)
    : rows_(std::move(rows)) {}

int ReplayObservationSource::location_count() const { return static_cast<int>(rows_.size()); }

double ReplayObservationSource::observe(int location, int stage) {
    const auto& row = rows_[static_cast<std::size_t>(location)];
    if (static_cast<std::size_t>(stage) > row.size()) throw StreamExhausted(location, stage);
    return row[static_cast<std::size_t>(stage - 1)];
}

PilotThenModelSource::PilotThenModelSource(std::vector<double> stage1, const MixtureModel& model,
                                           const GroundTruth& truth, std::uint64_t seed)
    : stage1_(std::move(stage1)), later_(model, truth, seed) {
    if (static_cast<int>(stage1_.size()) != model.p)
        throw std::invalid_argument("PilotThenModelSource: stage-1 vector must have length p");
}

int PilotThenModelSource::location_count() const { return later_.location_count(); }

double PilotThenModelSource::observe(int location, int stage) {
    if (stage == 1) return stage1_[static_cast<std::size_t>(location)];
    return later_.observe(location, stage);
}

std::pair<int, double> smart_discovery_step(std::span<const double> sorted_t, double t_l_tilde) {
    require_ascending(sorted_t, "smart_discovery_step");
    int k_s = 0;
    double running = 0.0;
    for (std::size_t r = 0; r < sorted_t.size(); ++r) {
        running += sorted_t[r];
        if (running <= t_l_tilde * static_cast<double>(r + 1)) k_s = static_cast<int>(r + 1);
    }
    return {k_s, k_s > 0 ? sorted_t[static_cast<std::size_t>(k_s - 1)] : kNan};
}

std::pair<int, double> smart_elimination_step(std::span<const double> sorted_t, double t_u_tilde) {
    require_ascending(sorted_t, "smart_elimination_step");
    const std::size_t k = sorted_t.size();
    int k_e = 0;
    double running = 0.0;
    for (std::size_t r = 0; r < k; ++r) {
        running += sorted_t[k - 1 - r];
        if (running >= t_u_tilde * static_cast<double>(r + 1)) k_e = static_cast<int>(r + 1);
    }
    return {k_e, k_e > 0 ? sorted_t[k - static_cast<std::size_t>(k_e)] : kNan};
}

namespace {

struct Engine {
    ObservationSource& source;
    const PosteriorHyper& hyper;
    int cap;

    int p;
    DecisionRecord record;
    ActiveSet active;

    Engine(ObservationSource& source_, const PosteriorHyper& hyper_, int cap_)
        : source(source_), hyper(hyper_), cap(cap_) {
        p = source.location_count();
        record.delta.assign(p, 0);
        record.stop_times.assign(p, 0);
        active.stage = 1;
        active.members.resize(p);
        std::iota(active.members.begin(), active.members.end(), 0);
        active.states.assign(p, init_state(hyper.pi, hyper.eta0, hyper.tau20));
    }

    const LocationState& state_of(int i) const { return active.states[i]; }

    // Updates states for the active set at this stage; on exhaustion throws
    // TruncatedRunError carrying the partial record.
    void observe_stage(int stage) {
        active.stage = stage;
        for (std::size_t idx = 0; idx < active.members.size(); ++idx) {
            const int i = active.members[idx];
            double x;
            try {
                x = source.observe(i, stage);
            } catch (const StreamExhausted&) {
                for (std::size_t rest = 0; rest < active.members.size(); ++rest) {
                    const int j = active.members[rest];
                    record.stop_times[j] = rest < idx ? stage : stage - 1;
                }
                throw TruncatedRunError(std::move(record), std::move(active.members));
            }
            active.states[i] = update_state(active.states[i], x, hyper.sigma2, hyper.mu0);
        }
    }

    void decide(int location, bool discovered, int stage) {
        record.delta[location] = discovered ? 1 : 0;
        record.stop_times[location] = stage;
    }

    // Midpoint forcing for locations still active after the cap.
    void force_remainder(double t_l, double t_u) {
        if (active.members.empty()) return;
        StageDecision& entry = record.stage_trace.back();
        for (const int i : active.members) {
            const bool discovered = active.states[i].t_or <= 0.5 * (t_l + t_u);
            decide(i, discovered, cap);
            entry.forced.push_back(i);
        }
        record.cap_hits = static_cast<int>(active.members.size());
        active.members.clear();
    }
};

}  // namespace

DecisionRecord run_smart(ObservationSource& source, const ThresholdPair& thresholds,
                         const PosteriorHyper& hyper, const RunOptions& options) {
    Engine engine(source, hyper, options.cap);
    std::vector<int> order;
    std::vector<double> sorted_t;
    for (int stage = 1; stage <= options.cap && !engine.active.members.empty(); ++stage) {
        engine.observe_stage(stage);

        order = engine.active.members;
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            const double ta = engine.state_of(a).t_or, tb = engine.state_of(b).t_or;
            return ta != tb ? ta < tb : a < b;
        });
        sorted_t.resize(order.size());
        for (std::size_t r = 0; r < order.size(); ++r) sorted_t[r] = engine.state_of(order[r]).t_or;

        auto [k_s, lower_cut] = smart_discovery_step(sorted_t, thresholds.t_l);
        auto [k_e, upper_cut] = smart_elimination_step(sorted_t, thresholds.t_u);
        // Overlapping head and tail selections: discovery keeps its full set,
        // elimination fills from the remainder.
        if (k_s + k_e > static_cast<int>(order.size())) {
            k_e = static_cast<int>(order.size()) - k_s;
            upper_cut = k_e > 0 ? sorted_t[order.size() - static_cast<std::size_t>(k_e)] : kNan;
        }

        StageDecision entry;
        entry.stage = stage;
        entry.lower_cut = lower_cut;
        entry.upper_cut = upper_cut;
        for (int r = 0; r < k_s; ++r) {
            const int i = order[static_cast<std::size_t>(r)];
            engine.decide(i, true, stage);
            entry.discovered.push_back(i);
        }
        for (int r = 0; r < k_e; ++r) {
            const int i = order[order.size() - 1 - static_cast<std::size_t>(r)];
            engine.decide(i, false, stage);
            entry.eliminated.push_back(i);
        }
        std::sort(entry.discovered.begin(), entry.discovered.end());
        std::sort(entry.eliminated.begin(), entry.eliminated.end());

        engine.active.members.assign(order.begin() + k_s, order.end() - k_e);
        std::sort(engine.active.members.begin(), engine.active.members.end());
        const bool final_stage = stage == options.cap && !engine.active.members.empty();
        engine.record.stage_trace.push_back(std::move(entry));
        if (final_stage) engine.force_remainder(thresholds.t_l, thresholds.t_u);
    }
    return std::move(engine.record);
}

DecisionRecord run_simple_thresholding(ObservationSource& source, const ThresholdPair& thresholds,
                                       const PosteriorHyper& hyper, const RunOptions& options) {
    Engine engine(source, hyper, options.cap);
    for (int stage = 1; stage <= options.cap && !engine.active.members.empty(); ++stage) {
        engine.observe_stage(stage);
        StageDecision entry;
        entry.stage = stage;
        entry.lower_cut = thresholds.t_l;
        entry.upper_cut = thresholds.t_u;
        std::vector<int> still_active;
        still_active.reserve(engine.active.members.size());
        for (const int i : engine.active.members) {
            const double t = engine.state_of(i).t_or;
            if (t <= thresholds.t_l) {
                engine.decide(i, true, stage);
                entry.discovered.push_back(i);
            } else if (t >= thresholds.t_u) {
                engine.decide(i, false, stage);
                entry.eliminated.push_back(i);
            } else {
                still_active.push_back(i);
            }
        }
        engine.active.members = std::move(still_active);
        const bool final_stage = stage == options.cap && !engine.active.members.empty();
        engine.record.stage_trace.push_back(std::move(entry));
        if (final_stage) engine.force_remainder(thresholds.t_l, thresholds.t_u);
    }
    return std::move(engine.record);
}

DecisionRecord run_distilled_sensing(ObservationSource& source, int stages) {
    if (stages < 1) throw std::invalid_argument("run_distilled_sensing: stages must be >= 1");
    const int p = source.location_count();
    DecisionRecord record;
    record.delta.assign(p, 0);
    record.stop_times.assign(p, 0);
    std::vector<int> active(p);
    std::iota(active.begin(), active.end(), 0);
    for (int stage = 1; stage <= stages && !active.empty(); ++stage) {
        StageDecision entry;
        entry.stage = stage;
        entry.lower_cut = kNan;
        entry.upper_cut = kNan;
        std::vector<int> survivors;
        survivors.reserve(active.size());
        for (const int i : active) {
            double x;
            try {
                x = source.observe(i, stage);
            } catch (const StreamExhausted&) {
                for (const int j : active) record.stop_times[j] = stage - 1;
                throw TruncatedRunError(std::move(record), std::move(active));
            }
            if (x > 0.0) {
                survivors.push_back(i);
            } else {
                record.stop_times[i] = stage;
                entry.eliminated.push_back(i);
            }
        }
        if (stage == stages) {
            for (const int i : survivors) {
                record.delta[i] = 1;
                record.stop_times[i] = stage;
                entry.discovered.push_back(i);
            }
            survivors.clear();
        }
        record.stage_trace.push_back(std::move(entry));
        active = std::move(survivors);
    }
    return record;
}

int ds_default_stages(int p) {
    if (p < 2) return 2;
    const double inner = std::log(static_cast<double>(p));
    const int k = static_cast<int>(std::ceil(std::log2(inner)));
    return std::max(k, 0) + 2;
}

}  // namespace smartseq
