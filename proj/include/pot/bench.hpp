#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <thread>

#include <json.hpp>

#include "pot/pot_pomdp.hpp"

namespace pot {

/// Per-decision interleaving and per-puzzle budgets for the harness.
/// Each executed action is preceded by one search slice of at most
/// `sims_per_slice` simulations / `slice_seconds` wall time; a puzzle
/// ends at a terminal state, at `budget_seconds`, or when
/// `max_simulations_per_puzzle` (0 = uncapped) is exhausted.
struct BenchConfig {
    SolverConfig solver;
    std::uint64_t sims_per_slice = 200;
    double slice_seconds = 5.0;
    double budget_seconds = 60.0;
    std::uint64_t max_simulations_per_puzzle = 0;
    int trials = 1;
    int workers = 1;
    std::uint64_t master_seed = 0;
    double horizon_seconds = 3600.0;
    int histogram_buckets = 10;
    bool validate_tree = false;

    void validate() const {
        if (sims_per_slice == 0) throw std::invalid_argument("BenchConfig: zero sims_per_slice");
        if (!(slice_seconds > 0)) throw std::invalid_argument("BenchConfig: zero slice_seconds");
        if (!(budget_seconds > 0)) throw std::invalid_argument("BenchConfig: zero budget_seconds");
        if (trials < 1) throw std::invalid_argument("BenchConfig: trials < 1");
        if (workers < 1) throw std::invalid_argument("BenchConfig: workers < 1");
        if (!(horizon_seconds > 0)) throw std::invalid_argument("BenchConfig: zero horizon");
        if (histogram_buckets < 1) throw std::invalid_argument("BenchConfig: buckets < 1");
    }
};

struct EpisodeStep {
    PotAction action;
    ValueLabel label;
    std::optional<Thought> committed; // set when the action was continue
};

struct EpisodeResult {
    PotState final_state;
    bool reached_terminal = false;
    double wall_seconds = 0.0;
    std::uint64_t simulations = 0;
    int actions_taken = 0;
    std::vector<EpisodeStep> steps;
    std::optional<std::string> error;
    std::size_t tree_nodes_validated = 0;
};

/// One puzzle from an empty tree to a proposed solution: alternate
/// search slices with executed actions, advancing the tree root after
/// each real step. The clock starts at tree initialization and stops
/// when a terminal state (the proposed solution) is reached or the
/// budget runs out. Oracle failures end the episode with an error note.
inline EpisodeResult run_episode(const PotModel& model, const game24::PuzzleState& puzzle,
                                 const BenchConfig& cfg, std::uint64_t puzzle_seed) {
    EpisodeResult ep;
    std::mt19937_64 env_rng(derive_seed(puzzle_seed, 2));

    SolverConfig solver_cfg = cfg.solver;
    solver_cfg.rng_seed = derive_seed(puzzle_seed, 1);
    solver_cfg.max_simulations = cfg.sims_per_slice;

    StopWatch clock;
    PotState state = model.initial_state(puzzle);
    ep.final_state = state;
    Solver<PotModel> solver(model, solver_cfg);

    try {
        while (!model.is_terminal(state)) {
            double remaining = cfg.budget_seconds - clock.seconds();
            if (remaining <= 0) break;
            std::uint64_t sim_room = cfg.max_simulations_per_puzzle == 0
                                         ? cfg.sims_per_slice
                                         : cfg.max_simulations_per_puzzle - ep.simulations;
            if (sim_room == 0) break;

            auto result = solver.search(state, std::min(cfg.sims_per_slice, sim_room),
                                        std::min(cfg.slice_seconds, remaining));
            ep.simulations += result.diagnostics.simulations;
            if (cfg.validate_tree)
                ep.tree_nodes_validated += validate_tree(
                    solver.root(), std::min(model.rewards().r_min, 0.0), model.rewards().r_max,
                    cfg.solver.max_depth, cfg.solver.discount);
            if (result.diagnostics.simulations == 0) break;

            PotAction action = result.best_action;
            auto sr = model.step(state, action, env_rng);
            solver.advance(action, sr.observation);

            EpisodeStep step{action, sr.observation.label, std::nullopt};
            if (action == PotAction::Continue && !sr.next.trajectory().empty())
                step.committed = sr.next.trajectory().back();
            ep.steps.push_back(std::move(step));
            state = sr.next;
            ep.actions_taken += 1;
        }
    } catch (const OracleError& e) {
        ep.error = e.what();
    }

    ep.wall_seconds = clock.seconds();
    ep.final_state = state;
    ep.reached_terminal = model.is_terminal(state);
    return ep;
}

/// Result of one benchmarked puzzle. `solved` is decided by replaying
/// the trajectory through the task arithmetic, never by the oracle.
struct RunRecord {
    int puzzle_index = 0; // 1-based, matching dataset slice conventions
    game24::PuzzleState puzzle;
    bool solved = false;
    double wall_time = 0.0;
    std::uint64_t simulations = 0;
    int actions_taken = 0;
    std::map<std::string, std::uint64_t> oracle_calls;
    std::vector<Thought> trajectory;
    std::string error;
};

struct Histogram {
    struct Bucket {
        double start = 0.0;
        double end = 0.0;
        std::uint64_t count = 0;
    };
    std::vector<Bucket> buckets;
    double fraction_within_600s = 0.0;
};

struct BenchmarkReport {
    std::vector<RunRecord> records;
    double success_rate = 0.0;
    double auc_time = 0.0;
    Histogram histogram;
    nlohmann::json config_echo;
    std::uint64_t tree_nodes_validated = 0; // populated when cfg.validate_tree is set
};

/// Independent verification: the trajectory must replay move-by-move
/// from the puzzle to exactly {24}.
inline bool verify_trajectory(const game24::PuzzleState& puzzle,
                              const std::vector<Thought>& trajectory) {
    game24::PuzzleState cur = puzzle;
    for (const Thought& t : trajectory) {
        try {
            if (game24::apply_move(cur, t.move) != t.result) return false;
        } catch (const std::exception&) {
            return false;
        }
        cur = t.result;
    }
    return game24::is_success(cur);
}

/// Area under the cumulative solve curve on [0, horizon], rescaled to
/// [0,1]: exact piecewise-constant integration, unsolved puzzles
/// contribute zero everywhere.
inline double compute_time_auc(const std::vector<RunRecord>& records, double horizon_seconds = 3600.0) {
    if (records.empty()) throw std::invalid_argument("compute_time_auc: no records");
    if (!(horizon_seconds > 0)) throw std::invalid_argument("compute_time_auc: horizon <= 0");
    double area = 0.0;
    for (const RunRecord& r : records) {
        if (!r.solved || r.wall_time > horizon_seconds) continue;
        area += (horizon_seconds - r.wall_time) / horizon_seconds;
    }
    return area / static_cast<double>(records.size());
}

/// Equal-width buckets over the solved records' time range, plus the
/// fraction of all records solved within 600 seconds.
inline Histogram compute_histogram(const std::vector<RunRecord>& records, int bucket_count) {
    if (bucket_count < 1) throw std::invalid_argument("compute_histogram: bucket_count < 1");
    Histogram h;
    std::vector<double> times;
    std::uint64_t within = 0;
    for (const RunRecord& r : records) {
        if (!r.solved) continue;
        times.push_back(r.wall_time);
        if (r.wall_time <= 600.0) ++within;
    }
    if (times.empty()) return h;
    h.fraction_within_600s = static_cast<double>(within) / static_cast<double>(records.size());

    auto [lo_it, hi_it] = std::minmax_element(times.begin(), times.end());
    double lo = *lo_it, hi = *hi_it;
    double width = (hi - lo) / bucket_count;
    for (int i = 0; i < bucket_count; ++i)
        h.buckets.push_back({lo + i * width, lo + (i + 1) * width, 0});
    for (double t : times) {
        int idx = width > 0 ? static_cast<int>((t - lo) / width) : 0;
        if (idx >= bucket_count) idx = bucket_count - 1;
        h.buckets[static_cast<std::size_t>(idx)].count += 1;
    }
    return h;
}

inline nlohmann::json thought_to_json(const Thought& t) {
    return {{"a", t.move.a.str()},
            {"b", t.move.b.str()},
            {"op", std::string(1, game24::op_symbol(t.move.op))},
            {"left", t.result.str()}};
}

/// Permissive: rebuilds the thought from its serialized fields without
/// legality checks, so verify_trajectory() gets to pass judgment on bad
/// records instead of the parser.
inline Thought thought_from_json(const nlohmann::json& j) {
    auto op = game24::op_from_symbol(j.at("op").get<std::string>().at(0));
    if (!op) throw std::runtime_error("thought_from_json: bad operator");
    Rational a = Rational::parse(j.at("a").get<std::string>());
    Rational b = Rational::parse(j.at("b").get<std::string>());
    std::vector<Rational> left;
    std::istringstream in(j.at("left").get<std::string>());
    std::string tok;
    while (in >> tok) left.push_back(Rational::parse(tok));
    game24::Move move{a, b, *op, game24::apply_op(a, *op, b)};
    return Thought{move, game24::PuzzleState(std::move(left))};
}

inline nlohmann::json record_to_json(const RunRecord& r) {
    nlohmann::json calls = nlohmann::json::object();
    for (const auto& [kind, count] : r.oracle_calls) calls[kind] = count;
    nlohmann::json traj = nlohmann::json::array();
    for (const Thought& t : r.trajectory) traj.push_back(thought_to_json(t));
    return {{"puzzle_index", r.puzzle_index},
            {"puzzle", r.puzzle.str()},
            {"solved", r.solved},
            {"wall_time", round_sig(r.wall_time)},
            {"simulations", r.simulations},
            {"actions_taken", r.actions_taken},
            {"oracle_calls", calls},
            {"trajectory", traj},
            {"error", r.error}};
}

inline RunRecord record_from_json(const nlohmann::json& j) {
    RunRecord r;
    r.puzzle_index = j.at("puzzle_index").get<int>();
    r.puzzle = game24::parse_puzzle(j.at("puzzle").get<std::string>());
    r.solved = j.at("solved").get<bool>();
    r.wall_time = j.at("wall_time").get<double>();
    r.simulations = j.at("simulations").get<std::uint64_t>();
    r.actions_taken = j.at("actions_taken").get<int>();
    for (auto it = j.at("oracle_calls").begin(); it != j.at("oracle_calls").end(); ++it)
        r.oracle_calls[it.key()] = it.value().get<std::uint64_t>();
    for (const auto& tj : j.at("trajectory")) r.trajectory.push_back(thought_from_json(tj));
    r.error = j.value("error", "");
    return r;
}

using OracleFactory = std::function<std::shared_ptr<const Oracle>(std::uint64_t puzzle_seed)>;

/// Runs every (puzzle, trial) job, optionally on a worker pool. Seeds
/// derive from (master_seed, puzzle index, trial), so results are
/// independent of worker count and completion order.
inline BenchmarkReport run_benchmark(const std::vector<game24::PuzzleState>& puzzles,
                                     const OracleFactory& make_oracle, const BenchConfig& cfg,
                                     RewardSpec rewards = {}, int first_index = 1) {
    if (puzzles.empty()) throw std::invalid_argument("run_benchmark: no puzzles");
    cfg.validate();

    struct Job {
        std::size_t slot;
        int puzzle_index;
        const game24::PuzzleState* puzzle;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (std::size_t i = 0; i < puzzles.size(); ++i)
        for (int trial = 0; trial < cfg.trials; ++trial) {
            std::uint64_t seed = derive_seed(cfg.master_seed, static_cast<std::uint64_t>(i),
                                             static_cast<std::uint64_t>(trial));
            jobs.push_back({jobs.size(), first_index + static_cast<int>(i), &puzzles[i], seed});
        }

    std::vector<RunRecord> records(jobs.size());
    std::atomic<std::size_t> next{0};
    std::atomic<std::uint64_t> nodes_validated{0};

    auto worker = [&] {
        for (;;) {
            std::size_t k = next.fetch_add(1);
            if (k >= jobs.size()) return;
            const Job& job = jobs[k];

            auto counting = std::make_shared<CountingOracle>(make_oracle(job.seed));
            PotModel model(counting, rewards);

            RunRecord rec;
            rec.puzzle_index = job.puzzle_index;
            rec.puzzle = *job.puzzle;
            try {
                EpisodeResult ep = run_episode(model, *job.puzzle, cfg, job.seed);
                rec.wall_time = ep.wall_seconds;
                rec.simulations = ep.simulations;
                rec.actions_taken = ep.actions_taken;
                rec.trajectory = ep.final_state.trajectory();
                rec.solved = ep.reached_terminal && verify_trajectory(*job.puzzle, rec.trajectory);
                if (ep.error) rec.error = *ep.error;
                nodes_validated.fetch_add(ep.tree_nodes_validated);
            } catch (const std::exception& e) {
                rec.error = e.what();
            }
            rec.oracle_calls = {{"thought", counting->thought_calls()},
                                {"value", counting->value_calls()},
                                {"evaluate", counting->evaluate_calls()},
                                {"thought_retries", model.stats().thought_retries}};
            records[job.slot] = std::move(rec);
        }
    };

    if (cfg.workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < cfg.workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    BenchmarkReport report;
    report.tree_nodes_validated = nodes_validated.load();
    report.records = std::move(records);
    std::size_t solved = 0;
    for (const RunRecord& r : report.records) solved += r.solved ? 1 : 0;
    report.success_rate = static_cast<double>(solved) / static_cast<double>(report.records.size());
    report.auc_time = compute_time_auc(report.records, cfg.horizon_seconds);
    report.histogram = compute_histogram(report.records, cfg.histogram_buckets);
    return report;
}

/// Writes records.jsonl, metrics.json and histogram.csv with stable key
/// order and 6-significant-digit floats, so re-emitting an identical
/// report is byte-identical.
inline void emit_reports(const BenchmarkReport& report, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    auto open = [&](const std::string& name) {
        std::ofstream out(fs::path(out_dir) / name, std::ios::trunc);
        if (!out) throw std::runtime_error("emit_reports: cannot write " + out_dir + "/" + name);
        return out;
    };

    {
        auto out = open("records.jsonl");
        for (const RunRecord& r : report.records) out << record_to_json(r).dump() << "\n";
    }
    {
        nlohmann::json metrics{{"success_rate", round_sig(report.success_rate)},
                               {"auc_time", round_sig(report.auc_time)},
                               {"within_600s", round_sig(report.histogram.fraction_within_600s)},
                               {"puzzles", report.records.size()},
                               {"config", report.config_echo}};
        auto out = open("metrics.json");
        out << metrics.dump(2) << "\n";
    }
    {
        auto out = open("histogram.csv");
        out << "bucket_start,bucket_end,count\n";
        char line[96];
        for (const auto& b : report.histogram.buckets) {
            std::snprintf(line, sizeof(line), "%.6g,%.6g,%llu\n", b.start, b.end,
                          static_cast<unsigned long long>(b.count));
            out << line;
        }
    }
}

inline std::vector<RunRecord> load_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_records: cannot open '" + path + "'");
    std::vector<RunRecord> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            records.push_back(record_from_json(nlohmann::json::parse(line)));
        } catch (const std::exception& e) {
            throw std::runtime_error("load_records: " + path + ":" + std::to_string(lineno) +
                                     ": " + e.what());
        }
    }
    return records;
}

} // namespace pot
