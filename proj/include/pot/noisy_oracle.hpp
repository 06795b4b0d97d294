#pragma once

#include "pot/exact_oracle.hpp"

namespace pot {

struct NoiseSpec {
    double flip_probability = 0.0;
    std::uint64_t rng_seed = 0;

    void validate() const {
        if (flip_probability < 0 || flip_probability >= 1)
            throw std::invalid_argument("NoiseSpec: flip_probability outside [0,1)");
    }
};

/// Exact oracle with value labels flipped to the opposite extreme with
/// the configured probability. The flip is emitted as a distribution
/// (1-p on the truth, p on the flipped label); sampling happens in the
/// POMDP with the caller's rng, so the oracle itself stays stateless.
class NoisyOracle : public Oracle {
public:
    explicit NoisyOracle(NoiseSpec spec, double epsilon = 0.25) : spec_(spec), exact_(epsilon) {
        spec_.validate();
    }

    Thought propose_thought(const game24::PuzzleState& subproblem, ThoughtMode mode,
                            std::mt19937_64& rng) const override {
        return exact_.propose_thought(subproblem, mode, rng);
    }

    LabelDistribution value_label(const game24::PuzzleState& subproblem) const override {
        const bool good = game24::solvable(subproblem);
        const double p = spec_.flip_probability;
        // truth and its opposite extreme; Likely never emitted
        double sure = good ? 1.0 - p : p;
        return LabelDistribution(1.0 - sure, 0.0, sure);
    }

    double evaluate_trajectory(const game24::PuzzleState& problem,
                               const std::vector<Thought>& trajectory) const override {
        return exact_.evaluate_trajectory(problem, trajectory);
    }

    const NoiseSpec& spec() const { return spec_; }

private:
    NoiseSpec spec_;
    ExactOracle exact_;
};

} // namespace pot
