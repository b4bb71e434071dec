#include "smartseq/thresholds.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "smartseq/parallel.hpp"
#include "smartseq/posterior.hpp"
#include "smartseq/rng.hpp"

namespace smartseq {

ErrorBudget::ErrorBudget(double alpha_, double gamma_) : alpha(alpha_), gamma(gamma_) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("ErrorBudget: alpha must lie strictly inside (0,1)");
    if (!(gamma > 0.0 && gamma < 1.0))
        throw std::invalid_argument("ErrorBudget: gamma must lie strictly inside (0,1)");
}

ThresholdPair make_threshold_pair(double t_l, double t_u, double pi) {
    if (!(pi > 0.0 && pi < 1.0))
        throw std::invalid_argument("make_threshold_pair: pi must lie strictly inside (0,1)");
    if (!(t_l >= 0.0 && t_u <= 1.0 && t_l < t_u))
        throw std::invalid_argument("make_threshold_pair: need 0 <= t_l < t_u <= 1");
    const double odds = (1.0 - pi) / pi;
    ThresholdPair pair;
    pair.t_l = t_l;
    pair.t_u = t_u;
    pair.pi = pi;
    pair.lr_lower = odds * (1.0 - t_u) / t_u;
    pair.lr_upper = odds * (1.0 - t_l) / t_l;
    return pair;
}

ThresholdPair approx_thresholds(const ErrorBudget& budget, double pi) {
    if (!(pi > 0.0 && pi < 1.0))
        throw std::invalid_argument("approx_thresholds: pi must lie strictly inside (0,1)");
    const double t_l = budget.alpha;
    const double t_u = (1.0 - pi) / (pi * budget.gamma + 1.0 - pi);
    return make_threshold_pair(t_l, t_u, pi);
}

double unstringent_upper_threshold(const ErrorBudget& budget, double pi) {
    const double num = pi * budget.alpha * budget.gamma + 1.0 - pi - budget.alpha;
    const double den = pi * budget.gamma + 1.0 - pi - budget.alpha;
    return num / den;
}

WaldBoundaries wald_boundaries(double alpha_prime, double gamma_prime) {
    if (!(alpha_prime > 0.0 && alpha_prime < 1.0) || !(gamma_prime > 0.0 && gamma_prime < 1.0))
        throw std::invalid_argument("wald_boundaries: rates must lie strictly inside (0,1)");
    return {std::log(gamma_prime / (1.0 - alpha_prime)),
            std::log((1.0 - gamma_prime) / alpha_prime)};
}

KlDivergence kl_divergence_normal(double mu0, double sd0, double mu1, double sd1) {
    if (!(sd0 > 0.0 && sd1 > 0.0))
        throw std::invalid_argument("kl_divergence_normal: standard deviations must be positive");
    const auto directed = [](double ma, double sa, double mb, double sb) {
        const double r = sa / sb;
        const double d = ma - mb;
        return std::log(sb / sa) + 0.5 * (r * r + d * d / (sb * sb) - 1.0);
    };
    KlDivergence kl;
    kl.d01 = directed(mu0, sd0, mu1, sd1);
    kl.d10 = directed(mu1, sd1, mu0, sd0);
    kl.d_kl = std::max(kl.d01, kl.d10);
    return kl;
}

LimitBounds limit_bounds(double pi, const KlDivergence& kl, double eta, double f_p,
                         double epsilon) {
    if (!(pi > 0.0 && pi < 1.0))
        throw std::invalid_argument("limit_bounds: pi must lie strictly inside (0,1)");
    if (!(eta > 0.0 && eta <= 0.5))
        throw std::invalid_argument("limit_bounds: eta must lie in (0, 1/2]");
    if (!(f_p > 1.0)) throw std::invalid_argument("limit_bounds: f_p must exceed 1");
    if (!(epsilon > 0.0)) throw std::invalid_argument("limit_bounds: epsilon must be positive");
    LimitBounds bounds;
    if (pi < 1.0 / 3.0) bounds.lower_tau = std::log(1.0 / (4.0 * eta)) / kl.d_kl;
    bounds.upper_tau = (1.0 + epsilon) * std::log(f_p) / std::min(kl.d01, kl.d10);
    return bounds;
}

// ---------------------------------------------------------------------------
// Monte Carlo threshold evaluation with common random numbers.
// ---------------------------------------------------------------------------

namespace {

struct LocationTraj {
    std::vector<double> ts;  // posterior-null value after observations 1..len
    LocationState state;     // recursion state after len observations
    bool saturated = false;  // t_or pinned at a clamp; no further movement
};

struct RepBank {
    std::uint64_t seed = 0;
    GroundTruth truth;
    std::vector<LocationTraj> locs;
};

struct RepTally {
    long long false_positives = 0;
    long long discoveries = 0;
    long long false_negatives = 0;
    long long signals = 0;
    long long observations = 0;
};

double jackknife_ratio_se(const std::vector<long long>& num, const std::vector<long long>& den) {
    const int reps = static_cast<int>(num.size());
    if (reps < 2) return 0.0;
    long long num_total = 0, den_total = 0;
    for (int r = 0; r < reps; ++r) {
        num_total += num[r];
        den_total += den[r];
    }
    std::vector<double> leave_out(reps);
    double mean = 0.0;
    for (int r = 0; r < reps; ++r) {
        const long long d = den_total - den[r];
        leave_out[r] = d > 0 ? static_cast<double>(num_total - num[r]) / static_cast<double>(d)
                             : 0.0;
        mean += leave_out[r];
    }
    mean /= reps;
    double ss = 0.0;
    for (const double v : leave_out) ss += (v - mean) * (v - mean);
    return std::sqrt(ss * (reps - 1.0) / reps);
}

}  // namespace

struct ThresholdMonteCarlo::Impl {
    MixtureModel model;
    CalibrationConfig config;
    int threads;
    double eta0;
    double tau20;
    std::vector<RepBank> reps;

    Impl(const MixtureModel& m, const CalibrationConfig& cfg, int threads_)
        : model(m), config(cfg), threads(threads_) {
        if (model.alt_means.kind != AltMeans::Kind::kConstant)
            throw std::invalid_argument(
                "ThresholdMonteCarlo: posterior recursion needs a constant signal-mean law");
        eta0 = model.alt_means.value;
        tau20 = model.alt_prior_sd > 0.0 ? model.alt_prior_sd * model.alt_prior_sd
                                         : kPointMassTau2;
        const RandomStream root(config.seed);
        reps.resize(config.replications);
        parallel_for(config.replications, threads, [&](int r) {
            RepBank& bank = reps[r];
            bank.seed = root.child(static_cast<std::uint64_t>(r)).key();
            bank.truth = sample_ground_truth(model, bank.seed);
            bank.locs.resize(model.p);
            const LocationState init = init_state(model.pi, eta0, tau20);
            for (auto& loc : bank.locs) loc.state = init;
        });
    }

    // Extends a trajectory until it crosses [t_l, t_u], saturates, or hits
    // the cap; returns the 1-based stopping stage and decision, scanning the
    // cached prefix first so repeated queries share one sample path.
    void scan_location(RepBank& bank, int i, double t_l, double t_u, RepTally& tally) {
        LocationTraj& loc = bank.locs[i];
        int stop = 0;
        bool delta = false;
        std::size_t j = 0;
        for (;; ++j) {
            if (j == loc.ts.size()) {
                if (loc.saturated || static_cast<int>(loc.ts.size()) >= config.cap) break;
                const double x =
                    sample_observation(model, bank.truth, i, bank.seed, static_cast<int>(j) + 1);
                loc.state = update_state(loc.state, x, model.null_sd * model.null_sd,
                                         model.null_mean);
                loc.ts.push_back(loc.state.t_or);
                if (loc.state.t_or <= 2.0 * kTorFloor || loc.state.t_or >= 1.0 - 2.0 * kTorFloor)
                    loc.saturated = true;
            }
            const double t = loc.ts[j];
            if (t <= t_l) {
                stop = static_cast<int>(j) + 1;
                delta = true;
                break;
            }
            if (t >= t_u) {
                stop = static_cast<int>(j) + 1;
                delta = false;
                break;
            }
        }
        if (stop == 0) {  // forced at the cap by the midpoint rule
            stop = config.cap;
            delta = loc.ts.back() <= 0.5 * (t_l + t_u);
        }
        const bool theta = bank.truth.theta[i] != 0;
        tally.observations += stop;
        tally.signals += theta ? 1 : 0;
        if (delta) {
            ++tally.discoveries;
            if (!theta) ++tally.false_positives;
        } else if (theta) {
            ++tally.false_negatives;
        }
    }

    Rates evaluate(double t_l, double t_u) {
        t_l = std::max(t_l, 4.0 * kTorFloor);
        t_u = std::min(t_u, 1.0 - 4.0 * kTorFloor);
        std::vector<RepTally> tallies(config.replications);
        parallel_for(config.replications, threads, [&](int r) {
            RepTally tally;
            for (int i = 0; i < model.p; ++i) scan_location(reps[r], i, t_l, t_u, tally);
            tallies[r] = tally;
        });
        std::vector<long long> fp(config.replications), disc(config.replications),
            fn(config.replications), sig(config.replications);
        long long fp_total = 0, disc_total = 0, fn_total = 0, sig_total = 0, obs_total = 0;
        for (int r = 0; r < config.replications; ++r) {
            fp[r] = tallies[r].false_positives;
            disc[r] = tallies[r].discoveries;
            fn[r] = tallies[r].false_negatives;
            sig[r] = tallies[r].signals;
            fp_total += fp[r];
            disc_total += disc[r];
            fn_total += fn[r];
            sig_total += sig[r];
            obs_total += tallies[r].observations;
        }
        Rates rates;
        rates.fpr = disc_total > 0 ? static_cast<double>(fp_total) / disc_total : 0.0;
        rates.mdr = sig_total > 0 ? static_cast<double>(fn_total) / sig_total : 0.0;
        rates.east = static_cast<double>(obs_total) /
                     (static_cast<double>(model.p) * config.replications);
        rates.fpr_se = jackknife_ratio_se(fp, disc);
        rates.mdr_se = jackknife_ratio_se(fn, sig);
        return rates;
    }

    double reject_all_fpr() const {
        long long nulls = 0;
        for (const RepBank& bank : reps) nulls += bank.truth.p() - bank.truth.signal_count();
        return static_cast<double>(nulls) /
               (static_cast<double>(model.p) * config.replications);
    }
};

ThresholdMonteCarlo::ThresholdMonteCarlo(const MixtureModel& model, const CalibrationConfig& config,
                                         int threads)
    : impl_(new Impl(model, config, threads)) {}

ThresholdMonteCarlo::~ThresholdMonteCarlo() { delete impl_; }

ThresholdMonteCarlo::Rates ThresholdMonteCarlo::evaluate(double t_l, double t_u) {
    return impl_->evaluate(t_l, t_u);
}

double ThresholdMonteCarlo::reject_all_fpr() const { return impl_->reject_all_fpr(); }

CalibrationResult calibrate_oracle_thresholds(const MixtureModel& model, const ErrorBudget& budget,
                                              const CalibrationConfig& config, int threads) {
    ThresholdMonteCarlo mc(model, config, threads);

    if (mc.reject_all_fpr() <= budget.alpha)
        throw InfeasibleBudgetError(
            "alpha", "calibrate_oracle_thresholds: alpha is not eligible (reject-all FPR " +
                         std::to_string(mc.reject_all_fpr()) + " <= requested alpha)");

    // Largest t_l whose FPR stays within alpha, for a fixed t_u.
    const auto find_t_l = [&](double t_u) {
        double lo = 0.0;
        double hi = std::min(t_u * (1.0 - 1e-9), 1.0 - 1e-9);
        if (mc.evaluate(hi, t_u).fpr <= budget.alpha) return hi;
        for (int iter = 0; iter < 24; ++iter) {
            const double mid = 0.5 * (lo + hi);
            if (mc.evaluate(mid, t_u).fpr <= budget.alpha)
                lo = mid;
            else
                hi = mid;
        }
        return lo;
    };

    const double t_u_max = 1.0 - 1e-9;
    double hi = t_u_max;
    if (mc.evaluate(find_t_l(hi), hi).mdr > budget.gamma + config.tolerance)
        throw InfeasibleBudgetError(
            "gamma",
            "calibrate_oracle_thresholds: no upper threshold attains the MDR target at this "
            "Monte Carlo resolution");
    double lo = std::min(std::max(budget.alpha * 2.0, 0.5), hi * 0.5);
    if (mc.evaluate(find_t_l(lo), lo).mdr <= budget.gamma) {
        hi = lo;  // already feasible at the low bracket; keep the cheaper side
    } else {
        for (int iter = 0; iter < 26; ++iter) {
            const double mid = 0.5 * (lo + hi);
            const double mdr = mc.evaluate(find_t_l(mid), mid).mdr;
            if (mdr <= budget.gamma)
                hi = mid;
            else
                lo = mid;
        }
    }

    const double t_u = hi;
    const double t_l = find_t_l(t_u);
    const auto achieved = mc.evaluate(t_l, t_u);
    CalibrationResult result;
    result.thresholds = make_threshold_pair(t_l, t_u, model.pi);
    result.achieved_fpr = achieved.fpr;
    result.achieved_mdr = achieved.mdr;
    result.config = config;
    return result;
}

}  // namespace smartseq
