#pragma once

#include <atomic>
#include <memory>
#include <optional>
#include <tuple>

#include "pot/oracle.hpp"
#include "pot/pomcp.hpp"

namespace pot {

/// continue < rollback < think; the order doubles as the deterministic
/// tie-break, so on a tie committing is preferred over re-thinking.
enum class PotAction : int { Continue = 0, Rollback = 1, Think = 2 };

inline const char* action_name(PotAction a) {
    switch (a) {
        case PotAction::Continue: return "continue";
        case PotAction::Rollback: return "rollback";
        case PotAction::Think: return "think";
    }
    throw std::logic_error("action_name: bad action");
}

/// Committed trajectory plus an optional staged thought at the current
/// subproblem. Immutable value: step() returns new states.
class PotState {
public:
    PotState() = default;
    explicit PotState(game24::PuzzleState problem) : initial_(std::move(problem)) {}

    const game24::PuzzleState& initial() const { return initial_; }
    const std::vector<Thought>& trajectory() const { return trajectory_; }
    const std::optional<Thought>& staged() const { return staged_; }

    /// The current subproblem: the initial puzzle transformed by the
    /// committed trajectory, in order.
    const game24::PuzzleState& subproblem() const {
        return trajectory_.empty() ? initial_ : trajectory_.back().result;
    }

    PotState with_staged(Thought t) const {
        PotState next = *this;
        next.staged_ = std::move(t);
        return next;
    }

    PotState with_committed() const {
        if (!staged_) throw std::logic_error("PotState: nothing staged to commit");
        PotState next = *this;
        next.trajectory_.push_back(*staged_);
        next.staged_.reset();
        return next;
    }

    PotState with_rolled_back() const {
        if (trajectory_.empty()) throw std::logic_error("PotState: nothing to roll back");
        PotState next = *this;
        next.staged_ = next.trajectory_.back();
        next.trajectory_.pop_back();
        return next;
    }

    friend bool operator==(const PotState& a, const PotState& b) {
        return a.initial_ == b.initial_ && a.trajectory_ == b.trajectory_ && a.staged_ == b.staged_;
    }

private:
    game24::PuzzleState initial_;
    std::vector<Thought> trajectory_;
    std::optional<Thought> staged_;
};

/// Label plus a digest of the staged thought's result, so distinct
/// sampled thoughts do not alias one tree node. Digest 0 means nothing
/// is staged.
struct PotObservation {
    ValueLabel label = ValueLabel::Impossible;
    std::uint64_t staged_digest = 0;

    friend bool operator==(const PotObservation& a, const PotObservation& b) {
        return a.label == b.label && a.staged_digest == b.staged_digest;
    }
    friend bool operator<(const PotObservation& a, const PotObservation& b) {
        return std::tie(a.label, a.staged_digest) < std::tie(b.label, b.staged_digest);
    }
};

struct RewardSpec {
    double r_max = 1.0;
    double r_min = 0.0;

    void validate() const {
        if (!(r_max > r_min)) throw std::invalid_argument("RewardSpec: r_max must exceed r_min");
        if (r_max + r_min == 0)
            throw std::invalid_argument("RewardSpec: r_max + r_min must be nonzero");
    }
};

struct PotModelStats {
    std::uint64_t thought_retries = 0;
};

/// The plan-of-thoughts POMDP over Game of 24 subproblems: actions
/// {continue, rollback, think}, observations sampled from the oracle's
/// value distribution, reward only at terminal trajectories.
class PotModel {
public:
    using State = PotState;
    using Action = PotAction;
    using Observation = PotObservation;

    explicit PotModel(std::shared_ptr<const Oracle> oracle, RewardSpec rewards = {},
                      int thought_retry_limit = 3)
        : oracle_(std::move(oracle)), rewards_(rewards), retry_limit_(thought_retry_limit) {
        if (!oracle_) throw std::invalid_argument("PotModel: null oracle");
        if (retry_limit_ < 1) throw std::invalid_argument("PotModel: retry limit < 1");
        rewards_.validate();
    }

    State initial_state(const game24::PuzzleState& problem) const { return PotState(problem); }

    bool is_terminal(const State& s) const { return s.subproblem().size() == 1; }

    std::vector<Action> legal_actions(const State& s) const {
        std::vector<Action> actions;
        if (is_terminal(s)) return actions;
        if (s.staged()) actions.push_back(PotAction::Continue);
        if (!s.trajectory().empty()) actions.push_back(PotAction::Rollback);
        actions.push_back(PotAction::Think);
        return actions;
    }

    StepResult<State, Observation> step(const State& s, Action action, std::mt19937_64& rng) const {
        const auto legal = legal_actions(s);
        if (std::find(legal.begin(), legal.end(), action) == legal.end())
            throw std::domain_error(std::string("step: action '") + action_name(action) +
                                    "' not legal at {" + s.subproblem().str() + "}");

        StepResult<State, Observation> out;
        switch (action) {
            case PotAction::Think:
                out.next = s.with_staged(propose_checked(s.subproblem(), ThoughtMode::Sample, rng));
                break;
            case PotAction::Continue: {
                check_soundness(s);
                out.next = s.with_committed();
                if (!is_terminal(out.next))
                    out.next = out.next.with_staged(
                        propose_checked(out.next.subproblem(), ThoughtMode::Sample, rng));
                break;
            }
            case PotAction::Rollback:
                out.next = s.with_rolled_back();
                break;
        }

        out.terminal = is_terminal(out.next);
        out.observation.label = sample_observation_label(out.next.subproblem(), rng);
        out.observation.staged_digest = out.next.staged() ? out.next.staged()->result.digest() : 0;
        if (out.terminal) {
            double p = oracle_->evaluate_trajectory(out.next.initial(), out.next.trajectory());
            out.reward = p >= 0.5 ? rewards_.r_max : rewards_.r_min;
        }
        return out;
    }

    /// Greedy chain-of-thought completion valued by the evaluator:
    /// extend the trajectory with greedy proposals until terminal or the
    /// depth budget runs out, then return
    /// (r_max*p + r_min*(1-p)) / (r_max + r_min) with p the evaluator's
    /// success probability for the completed trajectory.
    double rollout_value(const State& s, int depth_remaining, std::mt19937_64& rng) const {
        if (depth_remaining < 0) throw std::invalid_argument("rollout_value: negative depth");

        std::vector<Thought> tail = s.trajectory();
        game24::PuzzleState cur = s.subproblem();
        if (s.staged()) {
            tail.push_back(*s.staged());
            cur = s.staged()->result;
        }

        bool stalled = false;
        for (int left = depth_remaining; left > 0 && cur.size() > 1; --left) {
            try {
                Thought t = propose_checked(cur, ThoughtMode::Greedy, rng);
                cur = t.result;
                tail.push_back(std::move(t));
            } catch (const OracleExhausted&) {
                stalled = true;
                break;
            }
        }

        const double p = stalled ? 0.0 : oracle_->evaluate_trajectory(s.initial(), tail);
        return (rewards_.r_max * p + rewards_.r_min * (1.0 - p)) / (rewards_.r_max + rewards_.r_min);
    }

    /// One label drawn from the oracle's distribution over the alphabet.
    ValueLabel sample_observation_label(const game24::PuzzleState& subproblem,
                                        std::mt19937_64& rng) const {
        LabelDistribution dist = oracle_->value_label(subproblem);
        dist.validate();
        return dist.sample(rng);
    }

    const Oracle& oracle() const { return *oracle_; }
    const RewardSpec& rewards() const { return rewards_; }
    PotModelStats stats() const { return {thought_retries_.load()}; }

private:
    /// Proposal with validation and a bounded retry budget for oracles
    /// that can emit unparseable or illegal thoughts (the LM).
    Thought propose_checked(const game24::PuzzleState& subproblem, ThoughtMode mode,
                            std::mt19937_64& rng) const {
        for (int attempt = 0;; ++attempt) {
            try {
                Thought t = oracle_->propose_thought(subproblem, mode, rng);
                if (game24::apply_move(subproblem, t.move) != t.result)
                    throw ThoughtRejected("thought result does not match its move");
                return t;
            } catch (const ThoughtRejected& e) {
                thought_retries_.fetch_add(1, std::memory_order_relaxed);
                if (attempt + 1 >= retry_limit_)
                    throw OracleExhausted("thought proposals exhausted after " +
                                          std::to_string(retry_limit_) + " attempts: " + e.what());
            }
        }
    }

    /// Trajectory soundness, re-checked on every commit.
    void check_soundness(const State& s) const {
        const Thought& t = *s.staged();
        if (game24::apply_move(s.subproblem(), t.move) != t.result)
            throw std::logic_error("step: staged thought inconsistent with subproblem");
    }

    std::shared_ptr<const Oracle> oracle_;
    RewardSpec rewards_;
    int retry_limit_;
    mutable std::atomic<std::uint64_t> thought_retries_{0};
};

} // namespace pot
