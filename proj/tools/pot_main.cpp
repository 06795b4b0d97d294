// pot: plan-of-thoughts planning over Game of 24.
//   pot bench  --puzzles FILE [--slice A:B] [--oracle exact|noisy|llm] ...
//   pot solve  "4 9 10 13" [flags]
//   pot verify records.jsonl
// Exit codes: 0 success, 1 usage error, 2 runtime failure.

#define CPPHTTPLIB_NO_EXCEPTIONS 0

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

#include "pot/bench.hpp"
#include "pot/exact_oracle.hpp"
#include "pot/httplib_transport.hpp"
#include "pot/lm_oracle.hpp"
#include "pot/noisy_oracle.hpp"

namespace {

struct OracleOptions {
    std::string kind = "exact";
    double epsilon = 0.25;
    double flip_prob = 0.0;
    std::string api_base = "https://api.openai.com/v1";
    std::string api_key_env = "OPENAI_API_KEY";
    std::string thought_model = "gpt-3.5-turbo-instruct";
    std::string value_model = "gpt-4-1106-preview";
    std::string eval_model = "gpt-4-1106-preview";
    double temperature = 0.7;
    int top_logprobs = 20;
    std::string prompts_dir;
    std::string cache_dir = "cache";
    bool debug_http = false;
};

void add_oracle_flags(CLI::App& cmd, OracleOptions& o) {
    cmd.add_option("--oracle", o.kind, "Oracle backend")
        ->check(CLI::IsMember({"exact", "noisy", "llm"}))
        ->capture_default_str();
    cmd.add_option("--epsilon", o.epsilon, "Exact-oracle chance of proposing a dead-end thought")
        ->capture_default_str();
    cmd.add_option("--flip-prob", o.flip_prob, "Noisy-oracle label flip probability")
        ->capture_default_str();
    cmd.add_option("--api-base", o.api_base, "OpenAI-compatible API base URL")
        ->capture_default_str();
    cmd.add_option("--api-key-env", o.api_key_env,
                   "Environment variable holding the API key (never passed as a flag)")
        ->capture_default_str();
    cmd.add_option("--thought-model", o.thought_model, "Model for thought proposals")
        ->capture_default_str();
    cmd.add_option("--value-model", o.value_model, "Model for value labels")->capture_default_str();
    cmd.add_option("--eval-model", o.eval_model, "Model for trajectory judgments")
        ->capture_default_str();
    cmd.add_option("--temperature", o.temperature, "Thought sampling temperature")
        ->capture_default_str();
    cmd.add_option("--top-logprobs", o.top_logprobs, "Token probabilities requested per decode")
        ->capture_default_str();
    cmd.add_option("--prompts", o.prompts_dir, "Directory with propose/value/evaluate.txt");
    cmd.add_option("--cache-dir", o.cache_dir, "Response cache directory")->capture_default_str();
    cmd.add_flag("--debug-http", o.debug_http, "Log request/response bodies to stderr");
}

pot::OracleFactory make_oracle_factory(const OracleOptions& o) {
    if (o.kind == "exact") {
        auto oracle = std::make_shared<const pot::ExactOracle>(o.epsilon);
        return [oracle](std::uint64_t) { return oracle; };
    }
    if (o.kind == "noisy") {
        return [o](std::uint64_t seed) -> std::shared_ptr<const pot::Oracle> {
            return std::make_shared<const pot::NoisyOracle>(pot::NoiseSpec{o.flip_prob, seed},
                                                            o.epsilon);
        };
    }

    pot::LmOracleConfig cfg;
    cfg.api_base = o.api_base;
    if (const char* key = std::getenv(o.api_key_env.c_str())) cfg.api_key = key;
    if (cfg.api_key.empty())
        std::cerr << "pot: warning: " << o.api_key_env
                  << " is not set; requests will be unauthenticated\n";
    cfg.thought_model = o.thought_model;
    cfg.value_model = o.value_model;
    cfg.eval_model = o.eval_model;
    cfg.temperature = o.temperature;
    cfg.top_logprobs = o.top_logprobs;
    cfg.cache_dir = o.cache_dir;
    cfg.debug_log = o.debug_http;
    if (!o.prompts_dir.empty()) cfg.prompts = pot::PromptSet::load(o.prompts_dir);

    auto transport = std::make_shared<pot::HttplibTransport>(cfg.api_base, cfg.api_key);
    // one oracle per puzzle keeps sample counters puzzle-scoped (worker
    // order cannot perturb cache keys); cache and transport are shared
    return [cfg, transport](std::uint64_t) -> std::shared_ptr<const pot::Oracle> {
        return std::make_shared<const pot::LmOracle>(cfg, transport);
    };
}

std::pair<std::size_t, std::size_t> parse_slice(const std::string& text, std::size_t n) {
    auto colon = text.find(':');
    if (colon == std::string::npos)
        throw CLI::ValidationError("--slice", "expected A:B (1-based, inclusive)");
    std::size_t a = std::stoull(text.substr(0, colon));
    std::size_t b = std::stoull(text.substr(colon + 1));
    if (a < 1 || b < a || b > n)
        throw CLI::ValidationError("--slice", "range " + text + " does not fit a dataset of " +
                                                  std::to_string(n) + " puzzles");
    return {a, b};
}

int run_bench(const std::string& puzzles_path, const std::string& slice_text,
              const OracleOptions& oracle_opts, pot::BenchConfig cfg, const std::string& out_dir) {
    auto all = pot::game24::load_dataset(puzzles_path);
    if (all.empty()) throw std::runtime_error("dataset '" + puzzles_path + "' has no puzzles");

    std::size_t first = 1, last = all.size();
    if (!slice_text.empty()) std::tie(first, last) = parse_slice(slice_text, all.size());
    std::vector<pot::game24::PuzzleState> puzzles(all.begin() + first - 1, all.begin() + last);

    auto report = pot::run_benchmark(puzzles, make_oracle_factory(oracle_opts), cfg, {},
                                     static_cast<int>(first));
    report.config_echo = {
        {"puzzles", puzzles_path},
        {"slice", slice_text.empty() ? "all" : slice_text},
        {"oracle", oracle_opts.kind},
        {"epsilon", oracle_opts.epsilon},
        {"flip_prob", oracle_opts.flip_prob},
        {"budget_secs", cfg.budget_seconds},
        {"sims_per_slice", cfg.sims_per_slice},
        {"slice_secs", cfg.slice_seconds},
        {"max_sims", cfg.max_simulations_per_puzzle},
        {"ucb_c", cfg.solver.ucb_constant},
        {"max_depth", cfg.solver.max_depth},
        {"discount", cfg.solver.discount},
        {"seed", cfg.master_seed},
        {"trials", cfg.trials},
        {"workers", cfg.workers},
        {"horizon_secs", cfg.horizon_seconds},
    };
    if (oracle_opts.kind == "llm") {
        report.config_echo["thought_model"] = oracle_opts.thought_model;
        report.config_echo["value_model"] = oracle_opts.value_model;
        report.config_echo["eval_model"] = oracle_opts.eval_model;
        report.config_echo["api_base"] = oracle_opts.api_base;
        report.config_echo["cache_dir"] = oracle_opts.cache_dir;
    }

    pot::emit_reports(report, out_dir);
    std::cout << "puzzles:        " << report.records.size() << "\n"
              << "success_rate:   " << pot::round_sig(report.success_rate) << "\n"
              << "auc_time:       " << pot::round_sig(report.auc_time) << "\n"
              << "within_600s:    " << pot::round_sig(report.histogram.fraction_within_600s)
              << "\n"
              << "reports:        " << out_dir << "/{records.jsonl,metrics.json,histogram.csv}\n";
    return 0;
}

int run_solve(const std::string& puzzle_text, const OracleOptions& oracle_opts,
              pot::BenchConfig cfg) {
    auto puzzle = pot::game24::parse_puzzle(puzzle_text);
    auto factory = make_oracle_factory(oracle_opts);
    std::uint64_t seed = pot::derive_seed(cfg.master_seed, 0, 0);
    pot::PotModel model(factory(seed));

    pot::EpisodeResult ep = pot::run_episode(model, puzzle, cfg, seed);

    std::cout << "puzzle: " << puzzle.str() << "\n";
    for (const auto& step : ep.steps) {
        std::cout << "  " << pot::action_name(step.action);
        if (step.committed) std::cout << "  " << step.committed->text();
        std::cout << "  [" << pot::label_name(step.label) << "]\n";
    }
    if (ep.error) std::cout << "oracle error: " << *ep.error << "\n";

    bool solved = ep.reached_terminal &&
                  pot::verify_trajectory(puzzle, ep.final_state.trajectory());
    std::cout << (solved ? "solved" : "not solved") << " in " << pot::round_sig(ep.wall_seconds)
              << "s, " << ep.simulations << " simulations, " << ep.actions_taken << " actions\n";
    if (solved)
        for (const auto& t : ep.final_state.trajectory()) std::cout << "  " << t.text() << "\n";
    return 0;
}

int run_verify(const std::string& records_path) {
    auto records = pot::load_records(records_path);
    std::size_t mismatches = 0;
    for (const auto& r : records) {
        bool replay = pot::verify_trajectory(r.puzzle, r.trajectory);
        if (replay != r.solved) {
            ++mismatches;
            std::cout << "MISMATCH puzzle " << r.puzzle_index << " {" << r.puzzle.str()
                      << "}: recorded solved=" << (r.solved ? "true" : "false")
                      << " but replay says " << (replay ? "true" : "false") << "\n";
        }
    }
    std::cout << records.size() << " records, " << mismatches << " mismatches\n";
    if (mismatches) throw std::runtime_error("verification failed");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Anytime plan-of-thoughts planning over Game of 24"};
    app.require_subcommand(1);

    OracleOptions oracle_opts;
    pot::BenchConfig cfg;
    std::string puzzles_path, slice_text, out_dir = "out", puzzle_text, records_path;

    auto add_solver_flags = [&](CLI::App& cmd) {
        cmd.add_option("--budget-secs", cfg.budget_seconds, "Wall budget per puzzle")
            ->capture_default_str();
        cmd.add_option("--sims-per-slice", cfg.sims_per_slice,
                       "POMCP simulations per executed action")
            ->capture_default_str();
        cmd.add_option("--slice-secs", cfg.slice_seconds, "Wall cap per search slice")
            ->capture_default_str();
        cmd.add_option("--max-sims", cfg.max_simulations_per_puzzle,
                       "Total simulation cap per puzzle (0 = uncapped)")
            ->capture_default_str();
        cmd.add_option("--ucb-c", cfg.solver.ucb_constant, "UCB1 exploration constant")
            ->capture_default_str();
        cmd.add_option("--max-depth", cfg.solver.max_depth, "Search tree depth cap")
            ->capture_default_str();
        cmd.add_option("--discount", cfg.solver.discount, "Reward discount")
            ->capture_default_str();
        cmd.add_option("--seed", cfg.master_seed, "Master seed")->capture_default_str();
        add_oracle_flags(cmd, oracle_opts);
    };

    CLI::App* bench = app.add_subcommand("bench", "Benchmark a puzzle set and emit reports");
    bench->add_option("--puzzles", puzzles_path, "Puzzle file (text or CSV with Puzzles column)")
        ->required();
    bench->add_option("--slice", slice_text, "1-based inclusive dataset slice, e.g. 901:1000");
    bench->add_option("--workers", cfg.workers, "Parallel puzzle workers")->capture_default_str();
    bench->add_option("--trials", cfg.trials, "Trials per puzzle (reported as mean)")
        ->capture_default_str();
    bench->add_option("--out", out_dir, "Report output directory")->capture_default_str();
    bench->add_option("--horizon-secs", cfg.horizon_seconds, "Time-accuracy AUC horizon")
        ->capture_default_str();
    bench->add_option("--buckets", cfg.histogram_buckets, "Histogram bucket count")
        ->capture_default_str();
    add_solver_flags(*bench);

    CLI::App* solve = app.add_subcommand("solve", "Solve one puzzle and print the trajectory");
    solve->add_option("puzzle", puzzle_text, "Four numbers, e.g. \"4 9 10 13\"")->required();
    add_solver_flags(*solve);

    CLI::App* verify = app.add_subcommand("verify", "Re-check trajectories in a records.jsonl");
    verify->add_option("records", records_path, "records.jsonl path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (bench->parsed()) return run_bench(puzzles_path, slice_text, oracle_opts, cfg, out_dir);
        if (solve->parsed()) return run_solve(puzzle_text, oracle_opts, cfg);
        if (verify->parsed()) return run_verify(records_path);
    } catch (const CLI::ParseError& e) {
        std::cerr << "pot: usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "pot: usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "pot: error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
