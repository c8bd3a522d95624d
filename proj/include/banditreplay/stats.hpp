#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "banditreplay/replay.hpp"
#include "banditreplay/world.hpp"

namespace banditreplay {

using AlgorithmFactory = std::function<std::unique_ptr<BanditAlgorithm>()>;

namespace detail {

// Stable per-run seed derivation (splitmix64 step).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ull * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace detail

struct ReplicationSummary {
    double mean = 0.0;
    double std_dev = 0.0;
    double max = 0.0;
    double min = 0.0;
    std::int64_t runs = 0;      // runs that produced an estimate
    std::int64_t excluded = 0;  // runs with T = 0
    double subsample_p = 1.0;
};

// Repeated-run variance study: each run Bernoulli-subsamples the log at
// rate subsample_p, evaluates a fresh algorithm state with the finite
// evaluator, and the estimates are aggregated.
inline ReplicationSummary replicate(const AlgorithmFactory& factory,
                                    const std::vector<Event>& log, std::int64_t runs,
                                    double subsample_p, std::uint64_t seed) {
    if (runs < 2) throw std::invalid_argument("replicate: need at least 2 runs");
    if (!(subsample_p > 0.0 && subsample_p <= 1.0))
        throw std::invalid_argument("replicate: subsample probability outside (0,1]");
    ReplicationSummary s;
    s.subsample_p = subsample_p;
    std::vector<double> estimates;
    estimates.reserve(static_cast<std::size_t>(runs));
    for (std::int64_t r = 0; r < runs; ++r) {
        std::uint64_t run_seed = detail::derive_seed(seed, static_cast<std::uint64_t>(r));
        Rng sub_rng(detail::derive_seed(run_seed, 1));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::vector<Event> sample;
        if (subsample_p >= 1.0) {
            sample = log;
        } else {
            for (const Event& e : log)
                if (unit(sub_rng) < subsample_p) sample.push_back(e);
        }
        auto algo = factory();
        VectorStream stream(sample);
        ReplayOptions opts;
        opts.keep_history = false;
        try {
            estimates.push_back(evaluate_finite(*algo, stream, run_seed, opts).g_hat);
        } catch (const NoValidEvents&) {
            ++s.excluded;
        }
    }
    if (estimates.empty()) throw NoValidEvents();
    s.runs = static_cast<std::int64_t>(estimates.size());
    double sum = 0.0;
    s.min = estimates[0];
    s.max = estimates[0];
    for (double g : estimates) {
        sum += g;
        s.min = std::min(s.min, g);
        s.max = std::max(s.max, g);
    }
    s.mean = sum / static_cast<double>(s.runs);
    double ss = 0.0;
    for (double g : estimates) ss += (g - s.mean) * (g - s.mean);
    s.std_dev = s.runs > 1 ? std::sqrt(ss / static_cast<double>(s.runs - 1)) : 0.0;
    return s;
}

struct CurvePoint {
    std::int64_t log_size = 0;
    double median_error = 0.0;
};

// Error decay study for a fixed policy: for each log size L, generate fresh
// uniform logs, evaluate with the finite evaluator, and record the median of
// |g_pi - g_hat| against the world's oracle value. Median rather than mean
// so that tiny-T runs at small L do not dominate.
inline std::vector<CurvePoint> convergence_curve(const BanditAlgorithm& policy,
                                                 const WorldModel& world,
                                                 const std::vector<std::int64_t>& log_sizes,
                                                 std::int64_t runs_per_point,
                                                 std::uint64_t seed) {
    if (!std::is_sorted(log_sizes.begin(), log_sizes.end()))
        throw std::invalid_argument("convergence_curve: log sizes must be sorted ascending");
    if (runs_per_point < 1) throw std::invalid_argument("convergence_curve: need >= 1 run per point");
    const double g_true = true_per_trial_payoff(world, policy).value;
    std::vector<CurvePoint> curve;
    std::uint64_t run_index = 0;
    for (std::int64_t L : log_sizes) {
        std::vector<double> errors;
        for (std::int64_t r = 0; r < runs_per_point; ++r) {
            std::uint64_t run_seed = detail::derive_seed(seed, run_index++);
            Rng gen_rng(run_seed);
            std::vector<Event> log = generate_log(world, LoggingPolicy::uniform(), L, gen_rng);
            VectorStream stream(log);
            ReplayOptions opts;
            opts.keep_history = false;
            try {
                EvaluationResult res =
                    evaluate_finite(policy, stream, detail::derive_seed(run_seed, 7), opts);
                errors.push_back(std::abs(res.g_hat - g_true));
            } catch (const NoValidEvents&) {
                errors.push_back(std::abs(g_true));  // worst case: nothing retained
            }
        }
        std::sort(errors.begin(), errors.end());
        std::size_t n = errors.size();
        double median = (n % 2 == 1) ? errors[n / 2] : 0.5 * (errors[n / 2 - 1] + errors[n / 2]);
        curve.push_back({L, median});
    }
    return curve;
}

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual_std = 0.0;
};

inline LinearFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw std::invalid_argument("fit_line: need >= 2 matched points");
    double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_line: degenerate x values");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double r = ys[i] - (f.intercept + f.slope * xs[i]);
        ss += r * r;
    }
    f.residual_std = std::sqrt(ss / n);
    return f;
}

// Least-squares slope of log(median error) against log(L); points with zero
// error (deterministic worlds) are excluded.
inline double fit_decay_exponent(const std::vector<CurvePoint>& curve) {
    std::vector<double> xs, ys;
    for (const CurvePoint& p : curve) {
        if (p.median_error <= 0.0) continue;
        xs.push_back(std::log(static_cast<double>(p.log_size)));
        ys.push_back(std::log(p.median_error));
    }
    return fit_line(xs, ys).slope;
}

struct BoundReport {
    double gamma1 = 0.0;
    double gamma2 = 0.0;
    double bound = 0.0;
    std::int64_t arms = 0;
    std::int64_t log_size = 0;
    double g = 0.0;
    double delta = 0.0;
};

// Closed-form finite-stream deviation bound: with probability >= 1-delta,
// |G_hat/T - g| <= (gamma1 + gamma2) g / (1 - gamma1) where
// gamma1 = sqrt(3K/L ln(4/delta)) and gamma2 = sqrt(3K/(Lg) ln(4/delta)).
inline BoundReport deviation_bound(std::int64_t arms, std::int64_t log_size, double g,
                                  double delta) {
    if (arms < 1 || log_size < 1) throw std::invalid_argument("deviation_bound: K and L must be >= 1");
    if (!(g > 0.0 && g <= 1.0)) throw std::invalid_argument("deviation_bound: g outside (0,1]");
    if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("deviation_bound: delta outside (0,1)");
    BoundReport r;
    r.arms = arms;
    r.log_size = log_size;
    r.g = g;
    r.delta = delta;
    const double k = static_cast<double>(arms);
    const double l = static_cast<double>(log_size);
    const double log_term = std::log(4.0 / delta);
    r.gamma1 = std::sqrt(3.0 * k / l * log_term);
    r.gamma2 = std::sqrt(3.0 * k / (l * g) * log_term);
    if (r.gamma1 >= 1.0)
        throw std::invalid_argument("deviation_bound: L too small for meaningful bound");
    r.bound = (r.gamma1 + r.gamma2) * g / (1.0 - r.gamma1);
    return r;
}

struct ConsistencyRow {
    std::int64_t segment = 0;
    std::string algorithm;
    double g_online = 0.0;
    double g_offline = 0.0;
    double rho = 0.0;  // g_offline / g_online
};

struct ConsistencyOptions {
    std::int64_t segments = 16;
    std::int64_t events_per_segment = 50'000;  // logged events L per segment
    // Multiplicative factor applied to online payoff accounting per segment,
    // modeling serving-side rules that hit all algorithms equally. Identity
    // when empty.
    std::vector<double> online_factors;
};

// Offline/online consistency study: per segment, run each algorithm live
// against the world and through the finite evaluator on a uniform log of
// the same world, then report the offline/online ratio rho. Online runs use
// L/K trials so both estimates have comparable effective horizons.
inline std::vector<ConsistencyRow> consistency_experiment(
    const std::vector<std::pair<std::string, AlgorithmFactory>>& algorithms,
    const WorldModel& world, const ConsistencyOptions& opts, std::uint64_t seed) {
    if (algorithms.size() < 2)
        throw std::invalid_argument("consistency_experiment: need >= 2 algorithms");
    if (opts.segments < 1 || opts.events_per_segment < 1)
        throw std::invalid_argument("consistency_experiment: counts must be >= 1");
    if (!opts.online_factors.empty() &&
        static_cast<std::int64_t>(opts.online_factors.size()) != opts.segments)
        throw std::invalid_argument("consistency_experiment: one online factor per segment");
    const std::int64_t k = static_cast<std::int64_t>(world.arms_at(0).size());
    const std::int64_t online_trials = std::max<std::int64_t>(1, opts.events_per_segment / k);
    std::vector<ConsistencyRow> rows;
    for (std::int64_t s = 0; s < opts.segments; ++s) {
        std::uint64_t seg_seed = detail::derive_seed(seed, static_cast<std::uint64_t>(s));
        Rng log_rng(detail::derive_seed(seg_seed, 0));
        std::vector<Event> log =
            generate_log(world, LoggingPolicy::uniform(), opts.events_per_segment, log_rng);
        double factor = opts.online_factors.empty() ? 1.0 : opts.online_factors[s];
        for (std::size_t a = 0; a < algorithms.size(); ++a) {
            const auto& [name, factory] = algorithms[a];
            std::uint64_t algo_seed = detail::derive_seed(seg_seed, 100 + a);
            Rng online_rng(detail::derive_seed(algo_seed, 1));
            auto online_algo = factory();
            EvaluationResult online =
                run_direct(world, *online_algo, online_trials, online_rng, false);
            auto offline_algo = factory();
            VectorStream stream(log);
            ReplayOptions ropts;
            ropts.keep_history = false;
            EvaluationResult offline =
                evaluate_finite(*offline_algo, stream, detail::derive_seed(algo_seed, 2), ropts);
            ConsistencyRow row;
            row.segment = s;
            row.algorithm = name;
            row.g_online = online.g_hat * factor;
            row.g_offline = offline.g_hat;
            row.rho = row.g_online != 0.0 ? row.g_offline / row.g_online : 0.0;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

}  // namespace banditreplay
