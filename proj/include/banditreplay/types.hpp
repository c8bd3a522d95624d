#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace banditreplay {

using Rng = std::mt19937_64;

// Arm identifiers are non-negative integers, stable across a log.
using ArmId = std::int32_t;

// Dense feature vector observed before choosing an arm.
// dim() == 0 encodes the context-free case.
struct Context {
    std::vector<double> features;

    Context() = default;
    explicit Context(std::vector<double> f) : features(std::move(f)) {}

    std::size_t dim() const { return features.size(); }

    bool finite() const {
        for (double v : features)
            if (!std::isfinite(v)) return false;
        return true;
    }

    friend bool operator==(const Context&, const Context&) = default;
};

// One logged interaction: context, candidate arm pool, the arm the logger
// chose, the probability with which it chose it, and the observed payoff
// of that arm only (partial label).
struct Event {
    Context context;
    std::vector<ArmId> arms;  // candidate pool at this trial, ordered
    ArmId chosen = 0;
    double propensity = 1.0;  // in (0, 1]
    double payoff = 0.0;      // in [0, 1]

    bool chosen_in_arms() const {
        for (ArmId a : arms)
            if (a == chosen) return true;
        return false;
    }

    bool has_uniform_propensity(double tol = 1e-9) const {
        return !arms.empty() &&
               std::abs(propensity - 1.0 / static_cast<double>(arms.size())) <= tol;
    }

    void validate() const {
        if (arms.empty()) throw std::invalid_argument("event: empty candidate arm set");
        for (ArmId a : arms)
            if (a < 0) throw std::invalid_argument("event: negative arm id");
        if (!chosen_in_arms()) throw std::invalid_argument("event: chosen arm not in candidate set");
        if (!(propensity > 0.0 && propensity <= 1.0))
            throw std::invalid_argument("event: propensity outside (0,1]");
        if (!(payoff >= 0.0 && payoff <= 1.0))
            throw std::invalid_argument("event: payoff outside [0,1]");
        if (!context.finite()) throw std::invalid_argument("event: non-finite context feature");
    }

    friend bool operator==(const Event&, const Event&) = default;
};

// Ordered sequence of retained events; grows append-only during a replay run.
using History = std::vector<Event>;

}  // namespace banditreplay
