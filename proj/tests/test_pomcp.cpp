#include <catch2/catch_amalgamated.hpp>

#include "pot/pomcp.hpp"
#include "support/toy_models.hpp"

using namespace pot;
using pot_test::BanditModel;
using pot_test::DegenerateModel;
using pot_test::TigerModel;

namespace {

template <class A, class O>
bool trees_equal(const SearchNode<A, O>& x, const SearchNode<A, O>& y) {
    if (x.visit_count != y.visit_count || x.edges.size() != y.edges.size()) return false;
    auto xe = x.edges.begin();
    auto ye = y.edges.begin();
    for (; xe != x.edges.end(); ++xe, ++ye) {
        if (xe->first != ye->first || xe->second.visits != ye->second.visits ||
            xe->second.value_sum != ye->second.value_sum ||
            xe->second.children.size() != ye->second.children.size())
            return false;
        auto xc = xe->second.children.begin();
        auto yc = ye->second.children.begin();
        for (; xc != xe->second.children.end(); ++xc, ++yc) {
            if (xc->first != yc->first || !trees_equal(*xc->second, *yc->second)) return false;
        }
    }
    return true;
}

SolverConfig bandit_config(std::uint64_t sims = 10000, std::uint64_t seed = 7) {
    SolverConfig cfg;
    cfg.ucb_constant = 1.0;
    cfg.max_depth = 1;
    cfg.max_simulations = sims;
    cfg.rng_seed = seed;
    return cfg;
}

} // namespace

TEST_CASE("solver config rejects zero budgets") {
    SolverConfig cfg;
    cfg.max_simulations = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = SolverConfig{};
    cfg.time_budget_seconds = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = SolverConfig{};
    cfg.max_depth = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = SolverConfig{};
    cfg.discount = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("ucb_select") {
    using Node = SearchNode<int, int>;
    Node node;

    SECTION("untried action wins over any tried action") {
        node.visit_count = 100;
        node.edges[0].visits = 100;
        node.edges[0].value_sum = 100.0; // Q = 1
        node.edges[1];                   // untried
        CHECK(ucb_select(node, 1.0) == 1);
    }
    SECTION("c = 0 is pure exploitation") {
        node.visit_count = 100;
        node.edges[0].visits = 50;
        node.edges[0].value_sum = 25.0; // Q = 0.5
        node.edges[1].visits = 50;
        node.edges[1].value_sum = 20.0; // Q = 0.4
        CHECK(ucb_select(node, 0.0) == 0);
    }
    SECTION("exploration bonus can flip the choice") {
        node.visit_count = 100;
        node.edges[0].visits = 90;
        node.edges[0].value_sum = 45.0; // Q = 0.5, score 0.5+sqrt(ln100/90) ~ 0.726
        node.edges[1].visits = 10;
        node.edges[1].value_sum = 4.0; // Q = 0.4, score 0.4+sqrt(ln100/10) ~ 1.079
        CHECK(ucb_select(node, 1.0) == 1);
        double s0 = 0.5 + std::sqrt(std::log(100.0) / 90.0);
        double s1 = 0.4 + std::sqrt(std::log(100.0) / 10.0);
        CHECK(s0 == Catch::Approx(0.726).margin(0.001));
        CHECK(s1 == Catch::Approx(1.079).margin(0.001));
    }
    SECTION("ties break to the lowest action id") {
        node.visit_count = 20;
        for (int a : {3, 1, 2}) {
            node.edges[a].visits = 10;
            node.edges[a].value_sum = 5.0;
        }
        node.edges.erase(3);
        CHECK(ucb_select(node, 0.5) == 1);
    }
    SECTION("no actions is a domain error") {
        CHECK_THROWS_AS(ucb_select(node, 1.0), std::domain_error);
    }
}

TEST_CASE("degenerate one-action model") {
    DegenerateModel model;
    SolverConfig cfg;
    cfg.max_depth = 1;
    cfg.max_simulations = 50;
    Solver<DegenerateModel> solver(model, cfg);
    auto result = solver.search(0);
    CHECK(result.best_action == 0);
    REQUIRE(result.diagnostics.root_actions.size() == 1);
    CHECK(result.diagnostics.root_actions[0].q == Catch::Approx(1.0));
}

TEST_CASE("two-armed deterministic bandit") {
    BanditModel model;
    Solver<BanditModel> solver(model, bandit_config());
    auto result = solver.search(0);

    CHECK(result.best_action == 1);
    CHECK(result.diagnostics.simulations == 10000);
    REQUIRE(result.diagnostics.root_actions.size() == 2);
    CHECK(result.diagnostics.root_actions[0].q == Catch::Approx(0.2).margin(0.05));
    CHECK(result.diagnostics.root_actions[1].q == Catch::Approx(0.8).margin(0.05));

    SECTION("count bookkeeping: N(root) = sum over arms = 10000") {
        const auto& root = solver.root();
        CHECK(root.visit_count == 10000);
        std::uint64_t total = 0;
        for (const auto& [a, e] : root.edges) total += e.visits;
        CHECK(total == 10000);
        CHECK(validate_tree(root, 0.0, 1.0, 1) > 0);
    }
}

TEST_CASE("terminal root has no legal action") {
    BanditModel model;
    Solver<BanditModel> solver(model, bandit_config(10));
    CHECK_THROWS_AS(solver.search(1), std::domain_error);
}

TEST_CASE("identical seed and config give identical searches") {
    BanditModel model;
    model.stochastic = true;
    for (std::uint64_t seed : {1ull, 42ull}) {
        Solver<BanditModel> a(model, bandit_config(2000, seed));
        Solver<BanditModel> b(model, bandit_config(2000, seed));
        auto ra = a.search(0);
        auto rb = b.search(0);
        CHECK(ra.best_action == rb.best_action);
        CHECK(ra.diagnostics.simulations == rb.diagnostics.simulations);
        REQUIRE(ra.diagnostics.root_actions.size() == rb.diagnostics.root_actions.size());
        for (std::size_t i = 0; i < ra.diagnostics.root_actions.size(); ++i) {
            CHECK(ra.diagnostics.root_actions[i].visits == rb.diagnostics.root_actions[i].visits);
            CHECK(ra.diagnostics.root_actions[i].q == rb.diagnostics.root_actions[i].q);
        }
        CHECK(trees_equal(a.root(), b.root()));
    }
}

TEST_CASE("anytime monotonicity: a bigger budget extends the smaller run") {
    TigerModel model;
    SolverConfig cfg;
    cfg.max_depth = 3;
    cfg.rng_seed = 5;
    cfg.max_simulations = 4000;

    auto belief = pot_test::tiger_belief(0.5);

    Solver<TigerModel> resumed(model, cfg);
    resumed.search(belief, 2000, 1e9);

    Solver<TigerModel> small(model, cfg);
    small.search(belief, 2000, 1e9);
    CHECK(trees_equal(resumed.root(), small.root()));

    resumed.search(belief, 2000, 1e9); // +2000 on the same tree

    Solver<TigerModel> big(model, cfg);
    big.search(belief, 4000, 1e9);
    CHECK(trees_equal(resumed.root(), big.root()));
}

TEST_CASE("advance moves the root") {
    BanditModel model;
    Solver<BanditModel> solver(model, bandit_config(37));
    solver.search(0);

    SECTION("into an existing child, preserving its subtree") {
        History<int, int> path;
        path.append(1, 0);
        const auto* child = solver.node_at(path);
        REQUIRE(child != nullptr);
        auto n_before = child->visit_count;
        solver.advance(1, 0);
        CHECK(solver.root().visit_count == n_before);
    }
    SECTION("into an absent child, creating an empty root") {
        solver.advance(0, 99);
        CHECK(solver.root().visit_count == 0);
        CHECK(solver.root().edges.empty());
    }
}

TEST_CASE("two advances replay a recorded path") {
    TigerModel model;
    SolverConfig cfg;
    cfg.max_depth = 3;
    cfg.ucb_constant = 110.0; // reward span, else exploration starves
    cfg.rng_seed = 11;
    Solver<TigerModel> solver(model, cfg);
    solver.search(pot_test::tiger_belief(0.5), 3000, 1e9);

    History<int, int> path;
    path.append(0, 0);
    path.append(0, 1);
    const auto* target = solver.node_at(path);
    REQUIRE(target != nullptr);
    auto visits = target->visit_count;
    REQUIRE(visits > 0);

    solver.advance(0, 0);
    solver.advance(0, 1);
    CHECK(solver.root().visit_count == visits);
}

TEST_CASE("tiger root action matches brute-force expectimax at horizon 3") {
    TigerModel model;
    for (double belief : {0.5, 0.85, 0.15, 0.99, 0.01}) {
        int expected = pot_test::tiger_expectimax_action(belief, 3);
        SolverConfig cfg;
        cfg.max_depth = 3;
        cfg.ucb_constant = 110.0; // reward span
        cfg.max_simulations = 60000;
        cfg.rng_seed = 97;
        Solver<TigerModel> solver(model, cfg);
        auto result = solver.search(pot_test::tiger_belief(belief));
        INFO("belief " << belief << " expectimax action " << expected);
        CHECK(result.best_action == expected);
        CHECK(validate_tree(solver.root(), TigerModel::kTiger, TigerModel::kSafe, 3) > 0);
    }
}

TEST_CASE("stochastic bandit converges across seeds") {
    BanditModel model;
    model.stochastic = true;
    int correct = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Solver<BanditModel> solver(model, bandit_config(10000, seed));
        auto result = solver.search(0);
        correct += result.best_action == 1 ? 1 : 0;
        CHECK(result.diagnostics.root_actions[1].q == Catch::Approx(0.8).margin(0.05));
    }
    CHECK(correct >= 99);
}

TEST_CASE("Q values respect horizon bounds in deep searches") {
    TigerModel model;
    SolverConfig cfg;
    cfg.max_depth = 5;
    cfg.ucb_constant = 110.0;
    cfg.max_simulations = 20000;
    cfg.rng_seed = 3;
    Solver<TigerModel> solver(model, cfg);
    solver.search(pot_test::tiger_belief(0.6));
    CHECK(validate_tree(solver.root(), TigerModel::kTiger, TigerModel::kSafe, 5) > 100);
}
