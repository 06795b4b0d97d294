#pragma once

#include <array>
#include <atomic>
#include <cmath>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "pot/game24.hpp"

namespace pot {

struct OracleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A proposed thought failed parsing or task legality; the caller may retry.
struct ThoughtRejected : OracleError {
    using OracleError::OracleError;
};

/// The oracle cannot produce a usable thought (no legal move, or the
/// retry budget ran out). Fails the simulation, not the puzzle.
struct OracleExhausted : OracleError {
    using OracleError::OracleError;
};

/// An API response that cannot be interpreted (e.g. none of the label
/// tokens present in the returned top-k).
struct MalformedResponseError : OracleError {
    using OracleError::OracleError;
};

struct TransportError : OracleError {
    using OracleError::OracleError;
};

/// Three-way judgment of a subproblem; the observation alphabet.
/// Ordered Impossible < Likely < Sure for reporting.
enum class ValueLabel : int { Impossible = 0, Likely = 1, Sure = 2 };

inline const char* label_name(ValueLabel label) {
    switch (label) {
        case ValueLabel::Impossible: return "impossible";
        case ValueLabel::Likely: return "likely";
        case ValueLabel::Sure: return "sure";
    }
    throw std::logic_error("label_name: bad label");
}

/// Probability vector over the three labels.
class LabelDistribution {
public:
    LabelDistribution() : p_{0, 0, 0} {}
    LabelDistribution(double impossible, double likely, double sure) : p_{impossible, likely, sure} {
        validate();
    }

    static LabelDistribution point_mass(ValueLabel label) {
        LabelDistribution d;
        d.p_[static_cast<int>(label)] = 1.0;
        return d;
    }

    double p(ValueLabel label) const { return p_[static_cast<int>(label)]; }

    ValueLabel sample(std::mt19937_64& rng) const {
        double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        double acc = 0.0;
        for (int i = 0; i < 3; ++i) {
            acc += p_[i];
            if (u < acc) return static_cast<ValueLabel>(i);
        }
        return ValueLabel::Sure;
    }

    void validate() const {
        double sum = 0.0;
        for (double v : p_) {
            if (v < -1e-12) throw OracleError("LabelDistribution: negative probability");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw OracleError("LabelDistribution: probabilities sum to " + std::to_string(sum));
    }

private:
    std::array<double, 3> p_;
};

/// One incremental step: an arithmetic move plus the subproblem it
/// produces. Constructed only from moves that are legal at the parent
/// subproblem; free text that fails validation never becomes a Thought.
struct Thought {
    game24::Move move;
    game24::PuzzleState result;

    static Thought from_move(const game24::PuzzleState& parent, const game24::Move& move) {
        const auto legal = game24::legal_moves(parent);
        if (std::find(legal.begin(), legal.end(), move) == legal.end())
            throw ThoughtRejected("thought '" + move.str() + "' is not a legal move at {" +
                                  parent.str() + "}");
        return Thought{move, game24::apply_move(parent, move)};
    }

    std::string text() const { return move.str() + " (left: " + result.str() + ")"; }

    friend bool operator==(const Thought& a, const Thought& b) {
        return a.move == b.move && a.result == b.result;
    }
};

enum class ThoughtMode { Sample, Greedy };

/// The language model's three roles behind one interface: propose the
/// next thought, rate a subproblem, judge a finished trajectory.
/// Implementations must be safe for concurrent calls.
class Oracle {
public:
    virtual ~Oracle() = default;

    /// Greedy mode is deterministic; sample mode draws from the
    /// implementation's proposal distribution using the caller's rng.
    virtual Thought propose_thought(const game24::PuzzleState& subproblem, ThoughtMode mode,
                                    std::mt19937_64& rng) const = 0;

    /// Distribution over {sure, likely, impossible} for one subproblem.
    virtual LabelDistribution value_label(const game24::PuzzleState& subproblem) const = 0;

    /// Success probability in [0,1] that the (possibly partial)
    /// trajectory from `problem` truly solves it.
    virtual double evaluate_trajectory(const game24::PuzzleState& problem,
                                       const std::vector<Thought>& trajectory) const = 0;
};

/// Decorator counting calls per kind; used by the harness to attribute
/// oracle traffic to each run record.
class CountingOracle : public Oracle {
public:
    explicit CountingOracle(std::shared_ptr<const Oracle> inner) : inner_(std::move(inner)) {}

    Thought propose_thought(const game24::PuzzleState& subproblem, ThoughtMode mode,
                            std::mt19937_64& rng) const override {
        thought_calls_.fetch_add(1, std::memory_order_relaxed);
        return inner_->propose_thought(subproblem, mode, rng);
    }

    LabelDistribution value_label(const game24::PuzzleState& subproblem) const override {
        value_calls_.fetch_add(1, std::memory_order_relaxed);
        return inner_->value_label(subproblem);
    }

    double evaluate_trajectory(const game24::PuzzleState& problem,
                               const std::vector<Thought>& trajectory) const override {
        evaluate_calls_.fetch_add(1, std::memory_order_relaxed);
        return inner_->evaluate_trajectory(problem, trajectory);
    }

    std::uint64_t thought_calls() const { return thought_calls_.load(); }
    std::uint64_t value_calls() const { return value_calls_.load(); }
    std::uint64_t evaluate_calls() const { return evaluate_calls_.load(); }

private:
    std::shared_ptr<const Oracle> inner_;
    mutable std::atomic<std::uint64_t> thought_calls_{0};
    mutable std::atomic<std::uint64_t> value_calls_{0};
    mutable std::atomic<std::uint64_t> evaluate_calls_{0};
};

} // namespace pot
