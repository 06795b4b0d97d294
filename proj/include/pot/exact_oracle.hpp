#pragma once

#include <random>
#include <vector>

#include "pot/oracle.hpp"

namespace pot {

/// Brute-force-backed oracle: labels reflect true solvability, trajectory
/// judgments are exact arithmetic verification. Thought sampling is
/// epsilon-noisy on purpose so the planner still has to search.
class ExactOracle : public Oracle {
public:
    explicit ExactOracle(double epsilon = 0.25) : epsilon_(epsilon) {
        if (epsilon_ < 0 || epsilon_ >= 1)
            throw std::invalid_argument("ExactOracle: epsilon outside [0,1)");
    }

    Thought propose_thought(const game24::PuzzleState& subproblem, ThoughtMode mode,
                            std::mt19937_64& rng) const override {
        const auto moves = game24::legal_moves(subproblem);
        if (moves.empty())
            throw OracleExhausted("no legal moves at {" + subproblem.str() + "}");

        std::vector<const game24::Move*> good;
        std::vector<const game24::Move*> rest;
        for (const auto& m : moves)
            (game24::solvable(game24::apply_move(subproblem, m)) ? good : rest).push_back(&m);

        const game24::Move* pick = nullptr;
        if (mode == ThoughtMode::Greedy) {
            pick = good.empty() ? &moves.front() : good.front();
        } else {
            double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
            const auto& pool = good.empty() ? rest : (rest.empty() ? good : (u < epsilon_ ? rest : good));
            std::size_t idx =
                std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng);
            pick = pool[idx];
        }
        return Thought{*pick, game24::apply_move(subproblem, *pick)};
    }

    LabelDistribution value_label(const game24::PuzzleState& subproblem) const override {
        return LabelDistribution::point_mass(game24::solvable(subproblem) ? ValueLabel::Sure
                                                                          : ValueLabel::Impossible);
    }

    /// 1.0 iff the trajectory replays consistently from `problem` and
    /// ends at exactly {24}; anything partial or inconsistent is 0.
    double evaluate_trajectory(const game24::PuzzleState& problem,
                               const std::vector<Thought>& trajectory) const override {
        game24::PuzzleState cur = problem;
        for (const Thought& t : trajectory) {
            try {
                if (game24::apply_move(cur, t.move) != t.result) return 0.0;
            } catch (const std::domain_error&) {
                return 0.0;
            }
            cur = t.result;
        }
        return game24::is_success(cur) ? 1.0 : 0.0;
    }

    double epsilon() const { return epsilon_; }

private:
    double epsilon_;
};

} // namespace pot
