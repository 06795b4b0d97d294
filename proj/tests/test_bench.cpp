#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "pot/bench.hpp"
#include "pot/exact_oracle.hpp"
#include "pot/lm_oracle.hpp"
#include "support/fake_transport.hpp"

using namespace pot;
using game24::parse_puzzle;

namespace {

RunRecord rec(bool solved, double t) {
    RunRecord r;
    r.solved = solved;
    r.wall_time = t;
    return r;
}

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        static std::atomic<int> counter{0};
        path = std::filesystem::temp_directory_path() /
               ("pot_bench_" + std::to_string(counter.fetch_add(1)) + "_" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

/// An oracle that always vouches for whatever trajectory it sees; the
/// harness must not believe it.
class SycophantOracle : public Oracle {
public:
    Thought propose_thought(const game24::PuzzleState& s, ThoughtMode m,
                            std::mt19937_64& rng) const override {
        return exact_.propose_thought(s, m, rng);
    }
    LabelDistribution value_label(const game24::PuzzleState&) const override {
        return LabelDistribution::point_mass(ValueLabel::Sure);
    }
    double evaluate_trajectory(const game24::PuzzleState&,
                               const std::vector<Thought>&) const override {
        return 1.0;
    }

private:
    ExactOracle exact_{0.25};
};

BenchConfig fast_config() {
    BenchConfig cfg;
    cfg.sims_per_slice = 120;
    cfg.slice_seconds = 5.0;
    cfg.budget_seconds = 20.0;
    cfg.master_seed = 11;
    return cfg;
}

OracleFactory exact_factory(double epsilon) {
    auto oracle = std::make_shared<const ExactOracle>(epsilon);
    return [oracle](std::uint64_t) { return oracle; };
}

} // namespace

TEST_CASE("compute_time_auc matches hand integration") {
    CHECK(compute_time_auc({rec(true, 1800.0)}, 3600.0) == 0.5);
    CHECK(compute_time_auc({rec(true, 0.0), rec(true, 0.0)}, 3600.0) == 1.0);
    CHECK(compute_time_auc({rec(true, 900.0), rec(false, 3600.0)}, 3600.0) == 0.375);
    CHECK(compute_time_auc({rec(true, 5000.0)}, 3600.0) == 0.0); // solved past the horizon
    CHECK_THROWS_AS(compute_time_auc({}, 3600.0), std::invalid_argument);
}

TEST_CASE("auc bounds hold on randomized record sets") {
    std::mt19937_64 rng(404);
    const double horizon = 60.0;
    for (int set = 0; set < 1000; ++set) {
        std::vector<RunRecord> records;
        std::size_t n = 1 + rng() % 12;
        bool zero_times = rng() % 5 == 0;
        for (std::size_t i = 0; i < n; ++i) {
            bool solved = rng() % 2 == 0;
            double t = zero_times ? 0.0
                                  : 0.1 * horizon +
                                        std::uniform_real_distribution<double>(0, 1.9)(rng) *
                                            horizon;
            records.push_back(rec(solved, t));
        }
        double success = 0;
        bool all_solved_at_zero = true;
        for (const auto& r : records) {
            success += r.solved ? 1 : 0;
            if (r.solved && r.wall_time > 0) all_solved_at_zero = false;
        }
        success /= static_cast<double>(records.size());

        double auc = compute_time_auc(records, horizon);
        REQUIRE(auc >= 0.0);
        REQUIRE(auc <= success);
        REQUIRE(success <= 1.0);
        if (all_solved_at_zero)
            REQUIRE(auc == success);
        else
            REQUIRE(auc < success);
    }
}

TEST_CASE("compute_histogram") {
    SECTION("hand bucketing") {
        std::vector<RunRecord> records{rec(true, 10), rec(true, 20), rec(true, 30),
                                       rec(true, 1000)};
        auto h = compute_histogram(records, 2);
        REQUIRE(h.buckets.size() == 2);
        CHECK(h.buckets[0].count == 3);
        CHECK(h.buckets[1].count == 1);
        CHECK(h.buckets[0].start == 10.0);
        CHECK(h.buckets[1].end == 1000.0);
    }
    SECTION("single record lands in a single bucket") {
        auto h = compute_histogram({rec(true, 42)}, 1);
        REQUIRE(h.buckets.size() == 1);
        CHECK(h.buckets[0].count == 1);
    }
    SECTION("fraction within 600 seconds") {
        std::vector<RunRecord> records{rec(true, 100), rec(true, 599), rec(true, 601)};
        auto h = compute_histogram(records, 3);
        CHECK(h.fraction_within_600s == Catch::Approx(2.0 / 3.0));
    }
    SECTION("no solved records") {
        auto h = compute_histogram({rec(false, 5)}, 4);
        CHECK(h.buckets.empty());
        CHECK(h.fraction_within_600s == 0.0);
    }
}

TEST_CASE("exact-oracle benchmark solves solvable puzzles") {
    std::vector<game24::PuzzleState> puzzles;
    for (const char* text : {"4 9 10 13", "1 2 3 4", "2 3 4 6", "3 3 8 8", "5 5 5 1", "2 2 6 6",
                             "1 5 5 5", "4 4 4 4", "6 6 6 6", "1 1 4 6"})
        puzzles.push_back(parse_puzzle(text));
    for (const auto& p : puzzles) REQUIRE(game24::solvable(p));

    auto report = run_benchmark(puzzles, exact_factory(0.0), fast_config());
    CHECK(report.success_rate == 1.0);
    for (const auto& r : report.records) {
        CHECK(r.solved);
        CHECK(verify_trajectory(r.puzzle, r.trajectory));
        CHECK(r.oracle_calls.at("thought") > 0);
        CHECK(r.oracle_calls.at("value") > 0);
        CHECK(r.wall_time <= fast_config().budget_seconds + fast_config().slice_seconds);
    }
}

TEST_CASE("an unsolvable puzzle consumes its budget and stays unsolved") {
    BenchConfig cfg = fast_config();
    cfg.budget_seconds = 1.0;
    cfg.slice_seconds = 0.2;
    auto report = run_benchmark({parse_puzzle("1 1 1 1")}, exact_factory(0.25), cfg);
    CHECK(report.success_rate == 0.0);
    CHECK_FALSE(report.records[0].solved);
    CHECK(report.auc_time == 0.0);
}

TEST_CASE("worker count does not change outcomes") {
    std::vector<game24::PuzzleState> puzzles;
    for (const char* text : {"4 9 10 13", "2 3 4 6", "3 3 8 8", "1 1 4 6", "5 5 5 1", "2 2 6 6"})
        puzzles.push_back(parse_puzzle(text));

    BenchConfig serial = fast_config();
    serial.workers = 1;
    BenchConfig parallel = fast_config();
    parallel.workers = 4;

    auto a = run_benchmark(puzzles, exact_factory(0.25), serial);
    auto b = run_benchmark(puzzles, exact_factory(0.25), parallel);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].solved == b.records[i].solved);
        CHECK(a.records[i].trajectory == b.records[i].trajectory);
        CHECK(a.records[i].simulations == b.records[i].simulations);
    }
}

TEST_CASE("extra trials multiply records and report the mean") {
    BenchConfig cfg = fast_config();
    cfg.trials = 3;
    auto report = run_benchmark({parse_puzzle("4 9 10 13")}, exact_factory(0.25), cfg);
    CHECK(report.records.size() == 3);
    CHECK(report.success_rate == 1.0);
}

TEST_CASE("solved flags come from replay, not from the oracle") {
    auto factory = [](std::uint64_t) -> std::shared_ptr<const Oracle> {
        return std::make_shared<const SycophantOracle>();
    };
    BenchConfig cfg = fast_config();
    cfg.budget_seconds = 5.0;
    auto report = run_benchmark({parse_puzzle("1 1 1 1")}, factory, cfg);
    // the sycophant says every trajectory succeeds; replay knows better
    CHECK(report.success_rate == 0.0);
    CHECK_FALSE(report.records[0].solved);
    CHECK(report.records[0].actions_taken > 0);
}

TEST_CASE("oracle failures mark the record and the harness continues") {
    class FailingOracle : public Oracle {
        Thought propose_thought(const game24::PuzzleState&, ThoughtMode,
                                std::mt19937_64&) const override {
            throw OracleExhausted("backend down");
        }
        LabelDistribution value_label(const game24::PuzzleState&) const override {
            return LabelDistribution::point_mass(ValueLabel::Likely);
        }
        double evaluate_trajectory(const game24::PuzzleState&,
                                   const std::vector<Thought>&) const override {
            return 0.0;
        }
    };
    auto factory = [](std::uint64_t) -> std::shared_ptr<const Oracle> {
        return std::make_shared<const FailingOracle>();
    };
    auto report =
        run_benchmark({parse_puzzle("4 9 10 13"), parse_puzzle("2 3 4 6")}, factory, fast_config());
    REQUIRE(report.records.size() == 2);
    for (const auto& r : report.records) {
        CHECK_FALSE(r.solved);
        CHECK(!r.error.empty());
    }
    CHECK(report.success_rate == 0.0);
}

TEST_CASE("reports round-trip and re-emit byte-identically") {
    std::vector<game24::PuzzleState> puzzles{parse_puzzle("4 9 10 13"), parse_puzzle("1 1 1 1")};
    BenchConfig cfg = fast_config();
    cfg.budget_seconds = 2.0;
    cfg.slice_seconds = 0.5;
    auto report = run_benchmark(puzzles, exact_factory(0.25), cfg);
    report.config_echo = {{"oracle", "exact"}, {"seed", 11}};

    TempDir dir;
    emit_reports(report, dir.path.string());

    SECTION("records reload equal") {
        auto loaded = load_records((dir.path / "records.jsonl").string());
        REQUIRE(loaded.size() == report.records.size());
        for (std::size_t i = 0; i < loaded.size(); ++i) {
            CHECK(loaded[i].puzzle == report.records[i].puzzle);
            CHECK(loaded[i].solved == report.records[i].solved);
            CHECK(loaded[i].trajectory == report.records[i].trajectory);
            CHECK(loaded[i].oracle_calls == report.records[i].oracle_calls);
            CHECK(verify_trajectory(loaded[i].puzzle, loaded[i].trajectory) == loaded[i].solved);
        }
    }
    SECTION("re-emitting produces identical bytes") {
        auto first_records = slurp(dir.path / "records.jsonl");
        auto first_metrics = slurp(dir.path / "metrics.json");
        auto first_hist = slurp(dir.path / "histogram.csv");
        emit_reports(report, dir.path.string());
        CHECK(slurp(dir.path / "records.jsonl") == first_records);
        CHECK(slurp(dir.path / "metrics.json") == first_metrics);
        CHECK(slurp(dir.path / "histogram.csv") == first_hist);
    }
    SECTION("metrics carry the expected keys") {
        auto metrics = nlohmann::json::parse(slurp(dir.path / "metrics.json"));
        CHECK(metrics.contains("success_rate"));
        CHECK(metrics.contains("auc_time"));
        CHECK(metrics.contains("within_600s"));
        CHECK(metrics["config"]["oracle"] == "exact");
    }
    SECTION("histogram csv has the header") {
        CHECK(slurp(dir.path / "histogram.csv").starts_with("bucket_start,bucket_end,count\n"));
    }
}

TEST_CASE("tampered records are caught by verification") {
    RunRecord r;
    r.puzzle = parse_puzzle("4 9 10 13");
    r.solved = true; // but no trajectory
    CHECK_FALSE(verify_trajectory(r.puzzle, r.trajectory));

    nlohmann::json j = record_to_json(r);
    auto back = record_from_json(j);
    CHECK(back.solved);
    CHECK_FALSE(verify_trajectory(back.puzzle, back.trajectory));
}

TEST_CASE("llm benchmark over the scripted transcript replays from a warm cache") {
    TempDir cache_dir;
    auto transport = std::make_shared<pot_test::ScriptedLmTransport>();

    LmOracleConfig lm_cfg;
    lm_cfg.cache_dir = cache_dir.path.string();
    lm_cfg.retry.attempts = 1;

    auto factory = [&](std::uint64_t) -> std::shared_ptr<const Oracle> {
        return std::make_shared<const LmOracle>(lm_cfg, transport);
    };

    std::vector<game24::PuzzleState> puzzles{parse_puzzle("4 6 6 6"), parse_puzzle("1 2 3 4")};
    BenchConfig cfg = fast_config();
    cfg.sims_per_slice = 12;
    // bound the episode by simulation count, not wall clock, so the
    // replay is deterministic even on very slow (sanitizer) builds
    cfg.max_simulations_per_puzzle = 240;
    cfg.budget_seconds = 600.0;
    cfg.slice_seconds = 120.0;
    cfg.solver.max_depth = 8;

    auto first = run_benchmark(puzzles, factory, cfg);
    int cold_calls = transport->calls.load();
    REQUIRE(cold_calls > 0);

    auto second = run_benchmark(puzzles, factory, cfg);
    CHECK(transport->calls.load() == cold_calls); // zero new network calls
    REQUIRE(first.records.size() == second.records.size());
    for (std::size_t i = 0; i < first.records.size(); ++i) {
        CHECK(first.records[i].solved == second.records[i].solved);
        CHECK(first.records[i].trajectory == second.records[i].trajectory);
    }
}
