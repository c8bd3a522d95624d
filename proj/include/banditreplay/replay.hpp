#pragma once

#include <memory>
#include <optional>
#include <utility>

#include "banditreplay/algorithms.hpp"
#include "banditreplay/types.hpp"
#include "banditreplay/world.hpp"

namespace banditreplay {

// Outcome of one evaluation run: accumulated payoff G_hat over T retained
// events, the per-trial estimate G_hat/T, and the number L of stream events
// consumed to get there.
struct EvaluationResult {
    double g_hat = 0.0;
    double G_hat = 0.0;
    std::int64_t T = 0;
    std::int64_t L = 0;
    History history;  // retained events, empty when keep_history is off
};

// Single-pass event source. Evaluators never buffer more than one event
// beyond the history they retain.
class EventStream {
public:
    virtual ~EventStream() = default;
    virtual std::optional<Event> next() = 0;
};

class VectorStream : public EventStream {
public:
    explicit VectorStream(const std::vector<Event>& events) : events_(&events) {}

    std::optional<Event> next() override {
        if (pos_ >= events_->size()) return std::nullopt;
        return (*events_)[pos_++];
    }

private:
    const std::vector<Event>* events_;
    std::size_t pos_ = 0;
};

// Unbounded stream of logged events drawn live from a synthetic world.
class WorldStream : public EventStream {
public:
    WorldStream(const WorldModel& world, LoggingPolicy logger, std::uint64_t seed)
        : world_(&world), logger_(std::move(logger)), rng_(seed) {}

    std::optional<Event> next() override {
        return make_logged_event(*world_, logger_, trial_++, rng_);
    }

private:
    const WorldModel* world_;
    LoggingPolicy logger_;
    Rng rng_;
    std::int64_t trial_ = 0;
};

class NonUniformPropensity : public std::runtime_error {
public:
    NonUniformPropensity()
        : std::runtime_error(
              "event propensity is not uniform over its candidate set; "
              "use evaluate_rejection for non-uniform logs") {}
};

class NoValidEvents : public std::runtime_error {
public:
    NoValidEvents() : std::runtime_error("no valid events; estimate undefined") {}
};

// Stream ran out before the requested number of valid events was retained.
class StreamExhausted : public std::runtime_error {
public:
    explicit StreamExhausted(EvaluationResult partial_result)
        : std::runtime_error("event stream exhausted before reaching target T"),
          partial(std::move(partial_result)) {}

    EvaluationResult partial;
};

// How randomized algorithms consume randomness across the candidate events
// of one trial. per_event is the literal reading of the infinite-stream
// evaluator's inner loop: a fresh draw for every candidate event.
// per_trial replays the same draw until the trial retains an event.
enum class DrawMode { per_event, per_trial };

struct ReplayOptions {
    bool require_uniform = true;   // reject logs the plain evaluators are not valid for
    DrawMode draw_mode = DrawMode::per_event;
    bool keep_history = true;  // carry the retained history in the result
    double uniform_tol = 1e-9;
};

// Incremental core of both policy evaluators: offer() one logged event at a
// time; matching events are appended to the history, credited to G_hat, and
// fed to update(); mismatches leave algorithm state and history untouched.
// Copyable (the algorithm is cloned), so runs can be branched.
class ReplayRun {
public:
    ReplayRun(const BanditAlgorithm& algorithm, std::uint64_t seed, ReplayOptions opts = {})
        : algo_(algorithm.clone()), rng_(seed), trial_rng_(rng_), opts_(opts) {}

    ReplayRun(const ReplayRun& other)
        : algo_(other.algo_->clone()),
          rng_(other.rng_),
          trial_rng_(other.trial_rng_),
          opts_(other.opts_),
          history_(other.history_),
          total_payoff_(other.total_payoff_),
          retained_(other.retained_),
          consumed_(other.consumed_) {}

    ReplayRun& operator=(const ReplayRun& other) {
        ReplayRun tmp(other);
        std::swap(algo_, tmp.algo_);
        rng_ = tmp.rng_;
        trial_rng_ = tmp.trial_rng_;
        opts_ = tmp.opts_;
        history_ = std::move(tmp.history_);
        total_payoff_ = tmp.total_payoff_;
        retained_ = tmp.retained_;
        consumed_ = tmp.consumed_;
        return *this;
    }

    // Returns true when the event matched and was retained.
    bool offer(const Event& event) {
        if (opts_.require_uniform && !event.has_uniform_propensity(opts_.uniform_tol))
            throw NonUniformPropensity();
        ++consumed_;
        ArmId picked;
        if (opts_.draw_mode == DrawMode::per_trial) {
            Rng candidate_rng = trial_rng_;
            picked = algo_->select_arm(history_, event.context, event.arms, candidate_rng);
            if (picked != event.chosen) return false;
            rng_ = candidate_rng;
        } else {
            picked = algo_->select_arm(history_, event.context, event.arms, rng_);
            if (picked != event.chosen) return false;
        }
        history_.push_back(event);
        total_payoff_ += event.payoff;
        ++retained_;
        algo_->update(event);
        trial_rng_ = rng_;
        return true;
    }

    std::int64_t retained() const { return retained_; }
    std::int64_t consumed() const { return consumed_; }
    const History& history() const { return history_; }
    const BanditAlgorithm& algorithm() const { return *algo_; }

    EvaluationResult result() && {
        EvaluationResult r;
        r.G_hat = total_payoff_;
        r.T = retained_;
        r.L = consumed_;
        if (retained_ == 0) throw NoValidEvents();
        r.g_hat = total_payoff_ / static_cast<double>(retained_);
        if (opts_.keep_history) r.history = std::move(history_);
        return r;
    }

private:
    std::unique_ptr<BanditAlgorithm> algo_;
    Rng rng_;
    Rng trial_rng_;  // snapshot at the start of the current trial (per_trial mode)
    ReplayOptions opts_;
    History history_;
    double total_payoff_ = 0.0;
    std::int64_t retained_ = 0;
    std::int64_t consumed_ = 0;
};

// Infinite-stream policy evaluator: consume events until exactly
// target_t of them match the algorithm's choice.
inline EvaluationResult evaluate_infinite(const BanditAlgorithm& algorithm, EventStream& stream,
                                          std::int64_t target_t, std::uint64_t seed,
                                          ReplayOptions opts = {}) {
    if (target_t < 1) throw std::invalid_argument("evaluate_infinite: target T must be >= 1");
    ReplayRun run(algorithm, seed, opts);
    while (run.retained() < target_t) {
        std::optional<Event> e = stream.next();
        if (!e) {
            EvaluationResult partial;
            partial.G_hat = 0.0;
            try {
                partial = std::move(run).result();
            } catch (const NoValidEvents&) {
            }
            throw StreamExhausted(std::move(partial));
        }
        run.offer(*e);
    }
    return std::move(run).result();
}

// Finite-stream policy evaluator: one pass over the whole stream; the
// number of retained events T is random with mean L/K under a uniform
// logger.
inline EvaluationResult evaluate_finite(const BanditAlgorithm& algorithm, EventStream& stream,
                                        std::uint64_t seed, ReplayOptions opts = {}) {
    ReplayRun run(algorithm, seed, opts);
    while (std::optional<Event> e = stream.next()) run.offer(*e);
    return std::move(run).result();
}

// Rejection-sampling front end for arbitrarily logged propensities: each
// event survives with probability p_min / propensity, which makes the
// surviving stream look like a uniform-rate-p_min logger, then the finite
// evaluator runs on the survivors.
inline EvaluationResult evaluate_rejection(const BanditAlgorithm& algorithm, EventStream& stream,
                                           double p_min, std::uint64_t seed,
                                           ReplayOptions opts = {}) {
    if (!(p_min > 0.0)) throw std::invalid_argument("evaluate_rejection: p_min must be > 0");
    opts.require_uniform = false;  // survivor propensities keep their logged values
    ReplayRun run(algorithm, seed, opts);
    Rng thin_rng(seed ^ 0xa5a5a5a5a5a5a5a5ull);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    while (std::optional<Event> e = stream.next()) {
        if (!(e->propensity > 0.0) || e->propensity < p_min - 1e-12)
            throw std::invalid_argument("evaluate_rejection: propensity bound violated");
        double accept_p = p_min / e->propensity;
        if (accept_p < 1.0 && unit(thin_rng) >= accept_p) continue;  // exact no-op when >= 1
        run.offer(*e);
    }
    return std::move(run).result();
}

// Direct interaction with a synthetic world: the online baseline the
// replay estimators are unbiased for.
inline EvaluationResult run_direct(const WorldModel& world, BanditAlgorithm& algorithm,
                                   std::int64_t trials, Rng& rng, bool keep_history = true) {
    EvaluationResult r;
    for (std::int64_t t = 0; t < trials; ++t) {
        FullTuple tuple = world.sample_full_tuple(t, rng);
        ArmId a = algorithm.select_arm(r.history, tuple.context, tuple.arms, rng);
        std::size_t idx = 0;
        while (idx < tuple.arms.size() && tuple.arms[idx] != a) ++idx;
        if (idx == tuple.arms.size())
            throw std::runtime_error("run_direct: algorithm returned non-candidate arm");
        Event e;
        e.context = tuple.context;
        e.arms = tuple.arms;
        e.chosen = a;
        e.propensity = 1.0;  // bookkeeping only; the algorithm chose deliberately
        e.payoff = tuple.payoffs[idx];
        r.G_hat += e.payoff;
        algorithm.update(e);
        if (keep_history) r.history.push_back(e);
    }
    r.T = trials;
    r.L = trials;
    r.g_hat = trials > 0 ? r.G_hat / static_cast<double>(trials) : 0.0;
    return r;
}

}  // namespace banditreplay
