#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pot/util.hpp"

namespace pot {

/// One generative-model transition sample.
template <class State, class Observation>
struct StepResult {
    State next;
    Observation observation;
    double reward = 0.0;
    bool terminal = false;
};

/// What the solver needs from a problem: legal actions, a terminal test,
/// a generative step and a rollout value estimate. Actions and
/// observations must be totally ordered (they key the history tree).
template <class M>
concept GenerativeModel = requires(const M& m, const typename M::State& s,
                                   const typename M::Action& a, std::mt19937_64& rng, int depth) {
    { m.legal_actions(s) } -> std::convertible_to<std::vector<typename M::Action>>;
    { m.is_terminal(s) } -> std::convertible_to<bool>;
    { m.step(s, a, rng) } -> std::convertible_to<StepResult<typename M::State, typename M::Observation>>;
    { m.rollout_value(s, depth, rng) } -> std::convertible_to<double>;
};

/// An (action, observation) path from the root; identifies a tree node.
template <class Action, class Observation>
struct History {
    std::vector<std::pair<Action, Observation>> steps;

    std::size_t depth() const { return steps.size(); }
    void append(Action a, Observation o) { steps.emplace_back(std::move(a), std::move(o)); }
};

/// History-tree node. The invariant N(h) = sum_a N(h,a) holds between
/// simulations for every node: counts are bumped post-order, only after
/// a simulation returns successfully.
template <class Action, class Observation>
struct SearchNode {
    struct Edge {
        std::uint64_t visits = 0;
        double value_sum = 0.0;
        std::map<Observation, std::unique_ptr<SearchNode>> children;

        double q() const { return visits ? value_sum / static_cast<double>(visits) : 0.0; }
    };

    std::uint64_t visit_count = 0;
    std::map<Action, Edge> edges;
    bool expanded = false;
};

struct SolverConfig {
    double ucb_constant = 1.0;
    int max_depth = 16;
    std::uint64_t max_simulations = 10000;
    double time_budget_seconds = std::numeric_limits<double>::infinity();
    double discount = 1.0;
    std::uint64_t rng_seed = 0;

    void validate() const {
        if (ucb_constant < 0) throw std::invalid_argument("SolverConfig: ucb_constant < 0");
        if (max_depth < 1) throw std::invalid_argument("SolverConfig: max_depth < 1");
        if (max_simulations == 0)
            throw std::invalid_argument("SolverConfig: zero simulation budget");
        if (!(time_budget_seconds > 0))
            throw std::invalid_argument("SolverConfig: zero time budget");
        if (!(discount > 0) || discount > 1)
            throw std::invalid_argument("SolverConfig: discount outside (0,1]");
    }
};

/// UCB1 action selection: argmax_a Q(h,a) + c*sqrt(ln N(h) / N(h,a)).
/// Untried actions score infinite; ties resolve to the lowest action id.
template <class Action, class Observation>
const Action& ucb_select(const SearchNode<Action, Observation>& node, double c) {
    if (node.edges.empty()) throw std::domain_error("ucb_select: node has no legal actions");
    const Action* best = nullptr;
    double best_score = -std::numeric_limits<double>::infinity();
    const double log_n = node.visit_count > 0 ? std::log(static_cast<double>(node.visit_count)) : 0.0;
    for (const auto& [action, edge] : node.edges) {
        double score;
        if (edge.visits == 0) {
            score = std::numeric_limits<double>::infinity();
        } else {
            score = edge.q() + c * std::sqrt(log_n / static_cast<double>(edge.visits));
        }
        if (score > best_score) {
            best_score = score;
            best = &action;
        }
    }
    return *best;
}

template <class Action>
struct ActionStats {
    Action action;
    std::uint64_t visits = 0;
    double q = 0.0;
};

template <class Action>
struct Diagnostics {
    std::uint64_t simulations = 0;
    double wall_seconds = 0.0;
    std::vector<ActionStats<Action>> root_actions;
};

template <class Action>
struct SearchResult {
    Action best_action;
    Diagnostics<Action> diagnostics;
};

/// Anytime POMCP over a generative model. One instance is
/// single-threaded; distinct instances may run concurrently as long as
/// the model tolerates concurrent use. search() is resumable: repeated
/// calls keep refining the same tree until advance() shifts the root.
template <GenerativeModel M>
class Solver {
public:
    using State = typename M::State;
    using Action = typename M::Action;
    using Observation = typename M::Observation;
    using Node = SearchNode<Action, Observation>;
    using Belief = std::function<State(std::mt19937_64&)>;

    Solver(const M& model, SolverConfig config)
        : model_(model), config_(config), rng_(config.rng_seed), root_(std::make_unique<Node>()) {
        config_.validate();
    }

    /// Runs simulations from the root until the simulation or wall-clock
    /// budget is exhausted, then returns the action with the best Q.
    /// Budgets may be overridden per call (action-slice interleaving);
    /// the tree and rng stream carry over, so search is resumable.
    SearchResult<Action> search(const Belief& root_belief, std::uint64_t max_simulations,
                                double time_budget_seconds) {
        if (max_simulations == 0) throw std::invalid_argument("search: zero simulation budget");
        if (!(time_budget_seconds > 0)) throw std::invalid_argument("search: zero time budget");
        StopWatch clock;
        if (!root_->expanded) {
            State probe = root_belief(rng_);
            expand(*root_, probe);
            if (root_->edges.empty())
                throw std::domain_error("search: no legal action at root");
        }
        std::uint64_t sims = 0;
        while (sims < max_simulations && clock.seconds() < time_budget_seconds) {
            State state = root_belief(rng_);
            simulate(state, *root_, config_.max_depth);
            ++sims;
        }

        SearchResult<Action> result{best_action(), {}};
        result.diagnostics.simulations = sims;
        result.diagnostics.wall_seconds = clock.seconds();
        for (const auto& [action, edge] : root_->edges)
            result.diagnostics.root_actions.push_back({action, edge.visits, edge.q()});
        return result;
    }

    SearchResult<Action> search(const Belief& root_belief) {
        return search(root_belief, config_.max_simulations, config_.time_budget_seconds);
    }

    SearchResult<Action> search(const State& root_state) {
        return search(Belief([&root_state](std::mt19937_64&) { return root_state; }));
    }

    SearchResult<Action> search(const State& root_state, std::uint64_t max_simulations,
                                double time_budget_seconds) {
        return search(Belief([&root_state](std::mt19937_64&) { return root_state; }),
                      max_simulations, time_budget_seconds);
    }

    /// Promotes the child at (action, observation) to root, creating it
    /// if absent; the rest of the tree is released.
    void advance(const Action& action, const Observation& observation) {
        std::unique_ptr<Node> next;
        auto edge_it = root_->edges.find(action);
        if (edge_it != root_->edges.end()) {
            auto child_it = edge_it->second.children.find(observation);
            if (child_it != edge_it->second.children.end()) next = std::move(child_it->second);
        }
        root_ = next ? std::move(next) : std::make_unique<Node>();
    }

    const Node& root() const { return *root_; }

    /// Tree lookup by (action, observation) path; nullptr when the path
    /// was never expanded.
    const Node* node_at(const History<Action, Observation>& history) const {
        const Node* node = root_.get();
        for (const auto& [a, o] : history.steps) {
            auto edge_it = node->edges.find(a);
            if (edge_it == node->edges.end()) return nullptr;
            auto child_it = edge_it->second.children.find(o);
            if (child_it == edge_it->second.children.end()) return nullptr;
            node = child_it->second.get();
        }
        return node;
    }

private:
    void expand(Node& node, const State& state) {
        for (const Action& a : model_.legal_actions(state)) node.edges[a];
        node.expanded = true;
    }

    double simulate(const State& state, Node& node, int depth_remaining) {
        if (depth_remaining <= 0 || model_.is_terminal(state)) return 0.0;
        if (!node.expanded) expand(node, state);
        if (node.edges.empty()) return 0.0;

        const Action action = ucb_select(node, config_.ucb_constant);
        StepResult<State, Observation> sr = model_.step(state, action, rng_);

        auto& edge = node.edges[action];
        double child_value = 0.0;
        auto child_it = edge.children.find(sr.observation);
        if (child_it == edge.children.end()) {
            // Expansion: one new leaf per simulation, valued by rollout.
            edge.children.emplace(sr.observation, std::make_unique<Node>());
            if (!sr.terminal && depth_remaining - 1 > 0)
                child_value = model_.rollout_value(sr.next, depth_remaining - 1, rng_);
        } else {
            child_value = simulate(sr.next, *child_it->second, depth_remaining - 1);
        }

        const double value = sr.reward + config_.discount * child_value;
        edge.visits += 1;
        edge.value_sum += value;
        node.visit_count += 1;
        return value;
    }

    const Action& best_action() const {
        const Action* best = nullptr;
        double best_q = -std::numeric_limits<double>::infinity();
        for (const auto& [action, edge] : root_->edges) {
            if (edge.visits == 0) continue;
            if (double q = edge.q(); q > best_q) {
                best_q = q;
                best = &action;
            }
        }
        if (!best) throw std::domain_error("search: no action was tried at the root");
        return *best;
    }

    const M& model_;
    SolverConfig config_;
    std::mt19937_64 rng_;
    std::unique_ptr<Node> root_;
};

/// Debug walk over the whole tree: checks count conservation
/// N(h) = sum_a N(h,a) and the Q-range implied by the reward bounds.
/// Returns the number of nodes inspected; throws on the first violation.
template <class Action, class Observation>
std::size_t validate_tree(const SearchNode<Action, Observation>& node, double r_min, double r_max,
                          int horizon, double discount = 1.0) {
    const double lo = horizon * std::min(r_min, 0.0) - 1e-9;
    const double hi = horizon * std::max(r_max, 0.0) + 1e-9;
    std::size_t inspected = 1;

    std::uint64_t edge_total = 0;
    for (const auto& [action, edge] : node.edges) {
        edge_total += edge.visits;
        if (edge.visits > 0) {
            double q = edge.q();
            if (q < lo || q > hi)
                throw std::logic_error("validate_tree: Q=" + std::to_string(q) + " outside [" +
                                       std::to_string(lo) + ", " + std::to_string(hi) + "]");
        }
        for (const auto& [obs, child] : edge.children)
            inspected += validate_tree(*child, r_min, r_max, horizon, discount);
    }
    if (edge_total != node.visit_count)
        throw std::logic_error("validate_tree: N(h)=" + std::to_string(node.visit_count) +
                               " != sum_a N(h,a)=" + std::to_string(edge_total));
    return inspected;
}

} // namespace pot
