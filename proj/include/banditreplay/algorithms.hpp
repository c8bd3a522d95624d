#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <span>
#include <string>

#include "banditreplay/types.hpp"

namespace banditreplay {

// A bandit algorithm is a (possibly randomized) mapping from the retained
// history and current context to an arm, plus an update rule applied to
// retained events only. select_arm must not mutate state: skipped events
// during replay leave the algorithm untouched.
class BanditAlgorithm {
public:
    virtual ~BanditAlgorithm() = default;

    virtual ArmId select_arm(const History& history, const Context& context,
                             std::span<const ArmId> arms, Rng& rng) const = 0;

    virtual void update(const Event& event) = 0;

    virtual std::unique_ptr<BanditAlgorithm> clone() const = 0;

    virtual std::string name() const = 0;

    // Fixed policies are history-independent; ground-truth oracles and
    // the finite-stream deviation bound only apply to these.
    virtual bool is_fixed_policy() const { return false; }
};

namespace detail {

// Argmax over candidates with total tie-breaking: lowest arm id among
// maximizers, regardless of candidate order.
template <typename ScoreFn>
ArmId argmax_arm(std::span<const ArmId> arms, ScoreFn&& score) {
    if (arms.empty()) throw std::invalid_argument("select_arm: no candidate arms");
    ArmId best = arms[0];
    double best_score = score(arms[0]);
    for (std::size_t i = 1; i < arms.size(); ++i) {
        double s = score(arms[i]);
        if (s > best_score || (s == best_score && arms[i] < best)) {
            best = arms[i];
            best_score = s;
        }
    }
    return best;
}

}  // namespace detail

// History-independent policy backed by an arbitrary rule.
class FixedPolicy : public BanditAlgorithm {
public:
    using Rule = std::function<ArmId(const Context&, std::span<const ArmId>)>;

    explicit FixedPolicy(Rule rule, std::string name = "fixed")
        : rule_(std::move(rule)), name_(std::move(name)) {}

    static FixedPolicy constant(ArmId arm) {
        return FixedPolicy([arm](const Context&, std::span<const ArmId>) { return arm; },
                           "fixed(" + std::to_string(arm) + ")");
    }

    ArmId select_arm(const History&, const Context& context,
                     std::span<const ArmId> arms, Rng&) const override {
        if (arms.empty()) throw std::invalid_argument("select_arm: no candidate arms");
        return rule_(context, arms);
    }

    void update(const Event&) override {}  // fixed policies ignore feedback

    std::unique_ptr<BanditAlgorithm> clone() const override {
        return std::make_unique<FixedPolicy>(*this);
    }

    std::string name() const override { return name_; }
    bool is_fixed_policy() const override { return true; }

private:
    Rule rule_;
    std::string name_;
};

// Per-arm running payoff statistics shared by the context-free algorithms.
struct ArmStats {
    long count = 0;
    double payoff_sum = 0.0;
    double mean() const { return count == 0 ? 0.0 : payoff_sum / static_cast<double>(count); }
};

// epsilon-greedy: with probability 1-epsilon play the arm with the highest
// empirical mean, otherwise a uniformly random candidate. Unplayed arms have
// mean 0; exploration comes from epsilon, not optimistic initialization.
class EpsGreedy : public BanditAlgorithm {
public:
    explicit EpsGreedy(double epsilon) : epsilon_(epsilon) {
        if (!(epsilon >= 0.0 && epsilon <= 1.0))
            throw std::invalid_argument("eps-greedy: epsilon outside [0,1]");
    }

    ArmId select_arm(const History&, const Context&, std::span<const ArmId> arms,
                     Rng& rng) const override {
        if (arms.empty()) throw std::invalid_argument("select_arm: no candidate arms");
        double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        if (u < epsilon_) {
            std::uniform_int_distribution<std::size_t> pick(0, arms.size() - 1);
            return arms[pick(rng)];
        }
        return detail::argmax_arm(arms, [&](ArmId a) {
            auto it = stats_.find(a);
            return it == stats_.end() ? 0.0 : it->second.mean();
        });
    }

    void update(const Event& event) override {
        auto& s = stats_[event.chosen];
        s.count += 1;
        s.payoff_sum += event.payoff;
    }

    std::unique_ptr<BanditAlgorithm> clone() const override {
        return std::make_unique<EpsGreedy>(*this);
    }

    std::string name() const override { return "eps-greedy"; }

    const ArmStats& arm_stats(ArmId a) const { return stats_.at(a); }
    void seed_arm(ArmId a, long count, double payoff_sum) { stats_[a] = {count, payoff_sum}; }

private:
    double epsilon_;
    std::map<ArmId, ArmStats> stats_;
};

// Context-free UCB1-style algorithm: score(a) = mean_a + alpha * width_a
// with width_a = sqrt(2 ln t / n_a). Unplayed arms score +inf, so each
// candidate is tried once before the bound takes over. The width constant
// is a convention, not pinned by any reference; alpha is the knob.
class Ucb : public BanditAlgorithm {
public:
    explicit Ucb(double alpha) : alpha_(alpha) {
        if (!(alpha >= 0.0)) throw std::invalid_argument("ucb: alpha must be >= 0");
    }

    ArmId select_arm(const History&, const Context&, std::span<const ArmId> arms,
                     Rng&) const override {
        const double log_t = std::log(std::max<long>(trials_, 1));
        return detail::argmax_arm(arms, [&](ArmId a) {
            auto it = stats_.find(a);
            if (it == stats_.end() || it->second.count == 0)
                return std::numeric_limits<double>::infinity();
            const auto& s = it->second;
            return s.mean() + alpha_ * std::sqrt(2.0 * log_t / static_cast<double>(s.count));
        });
    }

    void update(const Event& event) override {
        auto& s = stats_[event.chosen];
        s.count += 1;
        s.payoff_sum += event.payoff;
        trials_ += 1;
    }

    std::unique_ptr<BanditAlgorithm> clone() const override {
        return std::make_unique<Ucb>(*this);
    }

    std::string name() const override { return "ucb"; }

    long trials() const { return trials_; }
    void seed_arm(ArmId a, long count, double payoff_sum) { stats_[a] = {count, payoff_sum}; }
    void set_trials(long t) { trials_ = t; }

private:
    double alpha_;
    std::map<ArmId, ArmStats> stats_;
    long trials_ = 0;
};

// LinUCB with disjoint linear models: per-arm ridge regression
// theta_a = A_a^{-1} b_a with A_a initialized to the identity, scored by
// theta_a' x + alpha * sqrt(x' A_a^{-1} x).
class LinUcb : public BanditAlgorithm {
public:
    LinUcb(double alpha, int dim) : alpha_(alpha), dim_(dim) {
        if (!(alpha >= 0.0)) throw std::invalid_argument("linucb: alpha must be >= 0");
        if (dim < 0) throw std::invalid_argument("linucb: negative dimension");
    }

    ArmId select_arm(const History&, const Context& context,
                     std::span<const ArmId> arms, Rng&) const override {
        check_dim(context);
        return detail::argmax_arm(arms, [&](ArmId a) { return score(context, a); });
    }

    double score(const Context& context, ArmId arm) const {
        check_dim(context);
        if (dim_ == 0) return 0.0;
        Eigen::Map<const Eigen::VectorXd> x(context.features.data(), dim_);
        auto it = models_.find(arm);
        if (it == models_.end()) {
            // A = I, b = 0: theta = 0, confidence term is ||x||.
            return alpha_ * x.norm();
        }
        const Model& m = it->second;
        Eigen::VectorXd a_inv_x = m.a_inv * x;
        double var = x.dot(a_inv_x);
        if (var < 0.0) var = 0.0;
        return m.theta.dot(x) + alpha_ * std::sqrt(var);
    }

    void update(const Event& event) override {
        check_dim(event.context);
        if (dim_ == 0) return;
        Eigen::Map<const Eigen::VectorXd> x(event.context.features.data(), dim_);
        Model& m = model_for(event.chosen);
        m.a.noalias() += x * x.transpose();
        m.b.noalias() += event.payoff * x;
        refresh(m);
    }

    std::unique_ptr<BanditAlgorithm> clone() const override {
        return std::make_unique<LinUcb>(*this);
    }

    std::string name() const override { return "linucb"; }

    int dim() const { return dim_; }
    bool has_model(ArmId a) const { return models_.count(a) != 0; }
    const Eigen::MatrixXd& design_matrix(ArmId a) const { return models_.at(a).a; }
    const Eigen::VectorXd& response_vector(ArmId a) const { return models_.at(a).b; }

private:
    struct Model {
        Eigen::MatrixXd a;      // d x d, symmetric positive definite
        Eigen::VectorXd b;      // d
        Eigen::MatrixXd a_inv;  // cached inverse, refreshed on update
        Eigen::VectorXd theta;  // cached A^{-1} b
    };

    void check_dim(const Context& context) const {
        if (static_cast<int>(context.dim()) != dim_)
            throw std::invalid_argument("linucb: context dimension mismatch");
    }

    Model& model_for(ArmId a) {
        auto it = models_.find(a);
        if (it != models_.end()) return it->second;
        Model m;
        m.a = Eigen::MatrixXd::Identity(dim_, dim_);
        m.b = Eigen::VectorXd::Zero(dim_);
        m.a_inv = m.a;
        m.theta = m.b;
        return models_.emplace(a, std::move(m)).first->second;
    }

    void refresh(Model& m) {
        Eigen::LLT<Eigen::MatrixXd> llt(m.a);
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("linucb: design matrix lost positive definiteness");
        m.a_inv = llt.solve(Eigen::MatrixXd::Identity(dim_, dim_));
        m.theta = llt.solve(m.b);
    }

    double alpha_;
    int dim_;
    std::map<ArmId, Model> models_;
};

inline double linucb_score(const LinUcb& state, const Context& context, ArmId arm) {
    return state.score(context, arm);
}

// A worst case for concentration: before any event is retained it maps the
// current context to an arm by a rule; once the first event is retained it
// plays the arm that rule picked for the first retained context, forever.
// Its per-run estimate never concentrates around its expected per-trial
// payoff, which is the point.
class CommitFirst : public BanditAlgorithm {
public:
    using Rule = std::function<ArmId(const Context&)>;

    explicit CommitFirst(Rule rule) : rule_(std::move(rule)) {}

    ArmId select_arm(const History& history, const Context& context,
                     std::span<const ArmId> arms, Rng&) const override {
        if (arms.empty()) throw std::invalid_argument("select_arm: no candidate arms");
        const Context& basis = history.empty() ? context : history.front().context;
        return rule_(basis);
    }

    void update(const Event&) override {}  // commitment is read off the history

    std::unique_ptr<BanditAlgorithm> clone() const override {
        return std::make_unique<CommitFirst>(*this);
    }

    std::string name() const override { return "commit-first"; }

private:
    Rule rule_;
};

}  // namespace banditreplay
