#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <vector>

#include "banditreplay/algorithms.hpp"
#include "banditreplay/types.hpp"

namespace banditreplay {

// Logging policy that produced (or will produce) an event log. The uniform
// kind assigns 1/|arms| to every candidate; the explicit kind assigns fixed
// probabilities by candidate position.
struct LoggingPolicy {
    enum class Kind { uniform, explicit_dist };
    Kind kind = Kind::uniform;
    std::vector<double> probs;  // by position in the candidate list, explicit kind only

    static LoggingPolicy uniform() { return {}; }

    static LoggingPolicy explicit_dist(std::vector<double> p) {
        double sum = std::accumulate(p.begin(), p.end(), 0.0);
        if (std::abs(sum - 1.0) > 1e-9)
            throw std::invalid_argument("logging policy: probabilities do not sum to 1");
        for (double v : p)
            if (!(v > 0.0)) throw std::invalid_argument("logging policy: non-positive probability");
        return {Kind::explicit_dist, std::move(p)};
    }

    // Picks a candidate index and returns (index, propensity).
    std::pair<std::size_t, double> choose(std::size_t n_arms, Rng& rng) const {
        if (n_arms == 0) throw std::invalid_argument("logging policy: empty candidate set");
        if (kind == Kind::uniform) {
            std::uniform_int_distribution<std::size_t> pick(0, n_arms - 1);
            return {pick(rng), 1.0 / static_cast<double>(n_arms)};
        }
        if (probs.size() != n_arms)
            throw std::invalid_argument("logging policy: distribution size != candidate count");
        double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        double acc = 0.0;
        for (std::size_t i = 0; i < n_arms; ++i) {
            acc += probs[i];
            if (u < acc || i + 1 == n_arms) return {i, probs[i]};
        }
        return {n_arms - 1, probs[n_arms - 1]};
    }
};

// One fully observed draw from the world: context plus the payoff
// realization of every candidate arm (logs expose only one entry).
struct FullTuple {
    Context context;
    int context_index = -1;  // index into the finite context set, -1 for continuous
    std::vector<ArmId> arms;
    std::vector<double> payoffs;         // Bernoulli realizations, one per candidate
    std::vector<double> expected;        // matching expectations
};

struct GroundTruth {
    double value = 0.0;
    double std_error = 0.0;  // zero for exact (enumerated) oracles
};

// Synthetic i.i.d. environment with analytically known expected payoffs.
// Contexts come from a finite weighted set or the uniform cube [0,1]^d;
// expected payoffs come from a per-(context, arm) table or per-arm linear
// weights; realized payoffs are Bernoulli draws of those expectations.
// The candidate arm pool follows a deterministic per-trial schedule.
class WorldModel {
public:
    enum class ContextKind { finite, cube };
    enum class PayoffKind { table, linear };

    struct ScheduleEntry {
        std::int64_t from_trial = 0;
        std::vector<ArmId> arms;
    };

    static WorldModel tabular(std::vector<std::pair<double, Context>> contexts,
                              std::vector<ArmId> arms,
                              std::map<ArmId, std::vector<double>> means) {
        WorldModel w;
        w.context_kind_ = ContextKind::finite;
        w.payoff_kind_ = PayoffKind::table;
        w.contexts_ = std::move(contexts);
        w.schedule_ = {{0, std::move(arms)}};
        w.table_ = std::move(means);
        w.d_ = w.contexts_.empty() ? 0 : static_cast<int>(w.contexts_[0].second.dim());
        w.validate();
        return w;
    }

    // Context-free world: one empty context, one expected payoff per arm.
    static WorldModel context_free(std::vector<ArmId> arms,
                                   std::vector<double> arm_means) {
        std::map<ArmId, std::vector<double>> means;
        if (arm_means.size() != arms.size())
            throw std::invalid_argument("world: one mean per arm required");
        for (std::size_t i = 0; i < arms.size(); ++i) means[arms[i]] = {arm_means[i]};
        return tabular({{1.0, Context{}}}, std::move(arms), std::move(means));
    }

    // Linear world: x ~ Uniform([0,1]^d), expected payoff w_a . x.
    static WorldModel linear(int d, std::vector<ArmId> arms,
                             std::map<ArmId, std::vector<double>> weights) {
        WorldModel w;
        w.context_kind_ = ContextKind::cube;
        w.payoff_kind_ = PayoffKind::linear;
        w.d_ = d;
        w.schedule_ = {{0, std::move(arms)}};
        w.weights_ = std::move(weights);
        w.validate();
        return w;
    }

    void set_schedule(std::vector<ScheduleEntry> schedule) {
        if (schedule.empty() || schedule[0].from_trial != 0)
            throw std::invalid_argument("world: schedule must start at trial 0");
        for (std::size_t i = 1; i < schedule.size(); ++i)
            if (schedule[i].from_trial <= schedule[i - 1].from_trial)
                throw std::invalid_argument("world: schedule not strictly increasing");
        schedule_ = std::move(schedule);
        validate();
    }

    int dim() const { return d_; }
    ContextKind context_kind() const { return context_kind_; }
    const std::vector<std::pair<double, Context>>& finite_contexts() const { return contexts_; }
    const std::vector<ScheduleEntry>& schedule() const { return schedule_; }

    const std::vector<ArmId>& arms_at(std::int64_t trial) const {
        const ScheduleEntry* current = &schedule_[0];
        for (const auto& e : schedule_) {
            if (e.from_trial <= trial) current = &e;
            else break;
        }
        return current->arms;
    }

    double expected_payoff(const Context& x, ArmId arm, int context_index = -1) const {
        if (payoff_kind_ == PayoffKind::linear) {
            auto it = weights_.find(arm);
            if (it == weights_.end()) throw std::invalid_argument("world: no weights for arm");
            if (it->second.size() != x.dim())
                throw std::invalid_argument("world: weight/context dimension mismatch");
            double v = 0.0;
            for (std::size_t i = 0; i < x.dim(); ++i) v += it->second[i] * x.features[i];
            return v;
        }
        if (context_index < 0) context_index = find_context(x);
        auto it = table_.find(arm);
        if (it == table_.end()) throw std::invalid_argument("world: no payoff row for arm");
        return it->second.at(static_cast<std::size_t>(context_index));
    }

    FullTuple sample_full_tuple(std::int64_t trial, Rng& rng) const {
        FullTuple t;
        t.arms = arms_at(trial);
        if (context_kind_ == ContextKind::finite) {
            double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
            double acc = 0.0;
            t.context_index = static_cast<int>(contexts_.size()) - 1;
            for (std::size_t i = 0; i < contexts_.size(); ++i) {
                acc += contexts_[i].first;
                if (u < acc) {
                    t.context_index = static_cast<int>(i);
                    break;
                }
            }
            t.context = contexts_[static_cast<std::size_t>(t.context_index)].second;
        } else {
            std::vector<double> f(static_cast<std::size_t>(d_));
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            for (auto& v : f) v = unit(rng);
            t.context = Context{std::move(f)};
        }
        t.expected.reserve(t.arms.size());
        t.payoffs.reserve(t.arms.size());
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (ArmId a : t.arms) {
            double mean = expected_payoff(t.context, a, t.context_index);
            if (!(mean >= 0.0 && mean <= 1.0))
                throw std::runtime_error("world: expected payoff outside [0,1]");
            t.expected.push_back(mean);
            t.payoffs.push_back(unit(rng) < mean ? 1.0 : 0.0);
        }
        return t;
    }

private:
    int find_context(const Context& x) const {
        for (std::size_t i = 0; i < contexts_.size(); ++i)
            if (contexts_[i].second == x) return static_cast<int>(i);
        throw std::invalid_argument("world: context not in finite context set");
    }

    void validate() const {
        if (d_ < 0) throw std::invalid_argument("world: negative dimension");
        if (schedule_.empty()) throw std::invalid_argument("world: empty arm schedule");
        for (const auto& e : schedule_)
            if (e.arms.empty()) throw std::invalid_argument("world: empty candidate set in schedule");
        if (context_kind_ == ContextKind::finite) {
            if (contexts_.empty()) throw std::invalid_argument("world: no contexts");
            double sum = 0.0;
            for (const auto& [p, x] : contexts_) {
                if (!(p > 0.0)) throw std::invalid_argument("world: non-positive context probability");
                if (static_cast<int>(x.dim()) != d_)
                    throw std::invalid_argument("world: inconsistent context dimension");
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-9)
                throw std::invalid_argument("world: context probabilities do not sum to 1");
        }
        if (payoff_kind_ == PayoffKind::table) {
            for (const auto& e : schedule_)
                for (ArmId a : e.arms) {
                    auto it = table_.find(a);
                    if (it == table_.end())
                        throw std::invalid_argument("world: scheduled arm missing from payoff table");
                    if (it->second.size() != contexts_.size())
                        throw std::invalid_argument("world: payoff row size != context count");
                    for (double m : it->second)
                        if (!(m >= 0.0 && m <= 1.0))
                            throw std::invalid_argument("world: expected payoff outside [0,1]");
                }
        } else {
            for (const auto& e : schedule_)
                for (ArmId a : e.arms) {
                    auto it = weights_.find(a);
                    if (it == weights_.end())
                        throw std::invalid_argument("world: scheduled arm missing weights");
                    if (static_cast<int>(it->second.size()) != d_)
                        throw std::invalid_argument("world: weight vector dimension mismatch");
                    double lo = 0.0, hi = 0.0;
                    for (double w : it->second) {
                        lo += std::min(w, 0.0);
                        hi += std::max(w, 0.0);
                    }
                    // x ranges over [0,1]^d, so [lo, hi] bounds the expectation.
                    if (lo < -1e-12 || hi > 1.0 + 1e-12)
                        throw std::invalid_argument(
                            "world: linear weights allow expected payoff outside [0,1]");
                }
        }
    }

    ContextKind context_kind_ = ContextKind::finite;
    PayoffKind payoff_kind_ = PayoffKind::table;
    int d_ = 0;
    std::vector<std::pair<double, Context>> contexts_;
    std::vector<ScheduleEntry> schedule_;
    std::map<ArmId, std::vector<double>> table_;    // arm -> mean per context index
    std::map<ArmId, std::vector<double>> weights_;  // arm -> linear coefficients
};

inline Event make_logged_event(const WorldModel& world, const LoggingPolicy& logger,
                               std::int64_t trial, Rng& rng,
                               FullTuple* full_out = nullptr) {
    FullTuple t = world.sample_full_tuple(trial, rng);
    auto [idx, propensity] = logger.choose(t.arms.size(), rng);
    Event e;
    e.context = t.context;
    e.arms = t.arms;
    e.chosen = t.arms[idx];
    e.propensity = propensity;
    e.payoff = t.payoffs[idx];  // only the chosen arm's realization is exposed
    if (full_out) *full_out = std::move(t);
    return e;
}

inline std::vector<Event> generate_log(const WorldModel& world, const LoggingPolicy& logger,
                                       std::int64_t count, Rng& rng) {
    if (count < 0) throw std::invalid_argument("generate_log: negative count");
    std::vector<Event> events;
    events.reserve(static_cast<std::size_t>(count));
    for (std::int64_t t = 0; t < count; ++t)
        events.push_back(make_logged_event(world, logger, t, rng));
    return events;
}

// Exact g_pi for enumerable worlds, Monte Carlo (with standard error)
// otherwise. Defined for fixed policies only.
inline GroundTruth true_per_trial_payoff(const WorldModel& world, const BanditAlgorithm& policy,
                                         std::int64_t mc_samples = 1'000'000,
                                         std::uint64_t mc_seed = 0x9d2c5680u) {
    if (!policy.is_fixed_policy())
        throw std::invalid_argument("ground truth defined for fixed policies only");
    History empty;
    Rng dummy(0);
    const auto& arms = world.arms_at(0);
    if (world.context_kind() == WorldModel::ContextKind::finite) {
        double g = 0.0;
        const auto& ctxs = world.finite_contexts();
        for (std::size_t i = 0; i < ctxs.size(); ++i) {
            ArmId a = policy.select_arm(empty, ctxs[i].second, arms, dummy);
            g += ctxs[i].first * world.expected_payoff(ctxs[i].second, a, static_cast<int>(i));
        }
        return {g, 0.0};
    }
    Rng rng(mc_seed);
    double sum = 0.0, sum_sq = 0.0;
    for (std::int64_t i = 0; i < mc_samples; ++i) {
        FullTuple t = world.sample_full_tuple(0, rng);
        ArmId a = policy.select_arm(empty, t.context, t.arms, dummy);
        double m = world.expected_payoff(t.context, a, t.context_index);
        sum += m;
        sum_sq += m * m;
    }
    double n = static_cast<double>(mc_samples);
    double mean = sum / n;
    double var = std::max(0.0, sum_sq / n - mean * mean);
    return {mean, std::sqrt(var / n)};
}

// Regret of a realized total payoff G_A over T trials against the best
// fixed policy in the reference set.
inline double regret(const WorldModel& world, double total_payoff, std::int64_t trials,
                     const std::vector<const BanditAlgorithm*>& reference_policies) {
    if (reference_policies.empty())
        throw std::invalid_argument("regret: empty reference policy set");
    double best = -std::numeric_limits<double>::infinity();
    for (const BanditAlgorithm* p : reference_policies)
        best = std::max(best, true_per_trial_payoff(world, *p).value);
    return static_cast<double>(trials) * best - total_payoff;
}

// The two-context, two-arm world of the non-concentration counterexample:
// contexts x in {0,1} by fair coin, arm 0 always pays 1, arm 1 always pays 0,
// and the algorithm commits forever based on its first retained context
// (x=1 -> arm 0, x=0 -> arm 1). Its expected per-trial payoff is 0.5 but
// every individual run estimates 0 or 1.
struct CounterexampleFixture {
    WorldModel world;
    CommitFirst algorithm;
};

inline CounterexampleFixture counterexample_fixture() {
    WorldModel w = WorldModel::tabular(
        {{0.5, Context{{0.0}}}, {0.5, Context{{1.0}}}},
        {0, 1},
        {{0, {1.0, 1.0}}, {1, {0.0, 0.0}}});
    CommitFirst algo([](const Context& x) -> ArmId { return x.features[0] == 1.0 ? 0 : 1; });
    return {std::move(w), std::move(algo)};
}

}  // namespace banditreplay
