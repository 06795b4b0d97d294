#pragma once

#include <cmath>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <json.hpp>

#include "pot/oracle.hpp"
#include "pot/prompts.hpp"
#include "pot/response_cache.hpp"
#include "pot/transport.hpp"

namespace pot {

struct LmOracleConfig {
    std::string api_base = "https://api.openai.com/v1";
    std::string api_key;      // resolved from the environment by the caller
    std::string thought_model = "gpt-3.5-turbo-instruct";
    std::string value_model = "gpt-4-1106-preview";
    std::string eval_model = "gpt-4-1106-preview";
    double temperature = 0.7; // thought sampling; greedy decodes use 0
    int top_logprobs = 20;
    int thought_max_tokens = 48;
    PromptSet prompts = PromptSet::builtin();
    std::string cache_dir;    // empty disables caching
    RetryPolicy retry;
    bool debug_log = false;

    void validate() const {
        if (thought_model.empty() || value_model.empty() || eval_model.empty())
            throw std::invalid_argument("LmOracleConfig: model names must be non-empty");
        if (temperature < 0) throw std::invalid_argument("LmOracleConfig: temperature < 0");
        if (top_logprobs < 1) throw std::invalid_argument("LmOracleConfig: top_logprobs < 1");
    }
};

/// Oracle over an OpenAI-compatible completions endpoint with
/// token-probability support. Value/eval requests are single-token
/// decodes whose top-k token probabilities are renormalized over the
/// label vocabulary; thought requests decode one step line. Sampled
/// thought calls carry a per-prompt sample counter in the cache key so
/// repeated sampling is not collapsed; greedy, value and eval calls are
/// pure and therefore fully cacheable.
class LmOracle : public Oracle {
public:
    LmOracle(LmOracleConfig config, std::shared_ptr<Transport> transport)
        : config_(std::move(config)), transport_(std::move(transport)) {
        config_.validate();
        if (!transport_) throw std::invalid_argument("LmOracle: null transport");
        if (!config_.cache_dir.empty()) cache_.emplace(config_.cache_dir);
    }

    Thought propose_thought(const game24::PuzzleState& subproblem, ThoughtMode mode,
                            std::mt19937_64&) const override {
        if (subproblem.size() < 2)
            throw OracleExhausted("no thought possible at {" + subproblem.str() + "}");
        std::string prompt = render_prompt(config_.prompts.propose, {{"input", subproblem.str()}});

        nlohmann::json req{
            {"model", config_.thought_model},
            {"prompt", prompt},
            {"max_tokens", config_.thought_max_tokens},
            {"temperature", mode == ThoughtMode::Greedy ? 0.0 : config_.temperature},
            {"stop", nlohmann::json::array({"\n"})},
        };
        std::optional<std::uint64_t> sample_index;
        if (mode == ThoughtMode::Sample) sample_index = next_sample_index(prompt);

        nlohmann::json body = request(req, sample_index);
        std::string text = completion_text(body);
        return parse_thought_line(subproblem, text);
    }

    LabelDistribution value_label(const game24::PuzzleState& subproblem) const override {
        std::string prompt = render_prompt(config_.prompts.value, {{"input", subproblem.str()}});
        auto probs = single_token_probs(config_.value_model, prompt);

        double sure = merged_prob(probs, "sure");
        double likely = merged_prob(probs, "likely");
        double impossible = merged_prob(probs, "impossible");
        double total = sure + likely + impossible;
        if (total <= 0)
            throw MalformedResponseError("value response contains none of the label tokens");
        return LabelDistribution(impossible / total, likely / total, sure / total);
    }

    double evaluate_trajectory(const game24::PuzzleState& problem,
                               const std::vector<Thought>& trajectory) const override {
        std::string steps;
        for (const Thought& t : trajectory) {
            if (!steps.empty()) steps += "\n";
            steps += t.text();
        }
        std::string prompt = render_prompt(config_.prompts.evaluate,
                                           {{"input", problem.str()}, {"steps", steps}});
        auto probs = single_token_probs(config_.eval_model, prompt);

        double sure = merged_prob(probs, "sure");
        double impossible = merged_prob(probs, "impossible");
        if (sure + impossible <= 0)
            throw MalformedResponseError("evaluate response contains none of the label tokens");
        return sure / (sure + impossible);
    }

    /// Parses "a op b = c (left: ...)" into a validated Thought. The
    /// parenthetical, when present, must agree with the computed
    /// remainder. Anything illegal throws ThoughtRejected.
    static Thought parse_thought_line(const game24::PuzzleState& subproblem,
                                      const std::string& line) {
        std::string normalized = normalize_symbols(line);
        std::string_view text = trim(normalized);
        auto eq = text.find('=');
        if (eq == std::string_view::npos)
            throw ThoughtRejected("thought line has no '=': '" + std::string(text) + "'");

        std::string_view lhs = trim(text.substr(0, eq));
        std::size_t op_pos = std::string_view::npos;
        std::optional<game24::Op> op;
        // prefer a space-delimited operator, fall back to one glued to a
        // digit ("13-9"); a leading sign is never the operator
        for (bool need_space : {true, false}) {
            for (std::size_t i = 1; i < lhs.size() && !op; ++i) {
                bool delim = need_space ? lhs[i - 1] == ' '
                                        : (lhs[i - 1] >= '0' && lhs[i - 1] <= '9');
                if (!delim) continue;
                if (auto o = game24::op_from_symbol(lhs[i])) {
                    op_pos = i;
                    op = o;
                }
            }
            if (op) break;
        }
        if (!op) throw ThoughtRejected("thought line has no operator: '" + std::string(text) + "'");

        std::string_view rhs = trim(text.substr(eq + 1));
        std::string_view result_tok = rhs;
        std::optional<std::string> left_part;
        if (auto paren = rhs.find('('); paren != std::string_view::npos) {
            result_tok = trim(rhs.substr(0, paren));
            auto close = rhs.find(')', paren);
            std::string_view inner = rhs.substr(paren + 1, close == std::string_view::npos
                                                               ? std::string_view::npos
                                                               : close - paren - 1);
            if (auto colon = inner.find(':'); colon != std::string_view::npos)
                left_part = std::string(trim(inner.substr(colon + 1)));
        }

        Rational a, b, result;
        try {
            a = Rational::parse(trim(lhs.substr(0, op_pos)));
            b = Rational::parse(trim(lhs.substr(op_pos + 1)));
            result = Rational::parse(result_tok);
        } catch (const std::exception& e) {
            throw ThoughtRejected(std::string("thought line has bad numbers: ") + e.what());
        }

        game24::Move move{a, b, *op, result};
        if (game24::apply_op(a, *op, b) != result)
            throw ThoughtRejected("thought arithmetic is wrong: '" + std::string(text) + "'");
        Thought thought = Thought::from_move(subproblem, move);

        if (left_part) {
            std::vector<Rational> nums;
            std::istringstream in(*left_part);
            std::string tok;
            while (in >> tok) nums.push_back(Rational::parse(tok));
            if (nums.empty() || game24::PuzzleState(std::move(nums)) != thought.result)
                throw ThoughtRejected("thought remainder '(left: " + *left_part +
                                      ")' disagrees with the move");
        }
        return thought;
    }

    std::uint64_t network_calls() const { return network_calls_; }

private:
    /// Maps the UTF-8 arithmetic glyphs an LM may emit onto ASCII.
    static std::string normalize_symbols(std::string_view line) {
        static const std::pair<std::string_view, char> subs[] = {
            {"×", '*'}, {"÷", '/'}, {"−", '-'}, {"·", '*'}, {"⋅", '*'},
        };
        std::string out(line);
        for (const auto& [glyph, ascii] : subs) {
            for (std::size_t at = out.find(glyph); at != std::string::npos;
                 at = out.find(glyph, at))
                out.replace(at, glyph.size(), 1, ascii);
        }
        return out;
    }

    /// Sends (or replays from cache) one completion request.
    nlohmann::json request(nlohmann::json req, std::optional<std::uint64_t> sample_index) const {
        std::string key_material = config_.api_base + "|" + req.dump() + "|sample=" +
                                   (sample_index ? std::to_string(*sample_index) : "greedy");
        std::string digest = content_digest(key_material);

        auto fetch = [&]() {
            ++network_calls_;
            if (config_.debug_log)
                std::cerr << "pot: POST /completions " << req.dump() << "\n";
            std::string body = with_retries(config_.retry, [&] {
                return transport_->post_json("/completions", req.dump());
            });
            if (config_.debug_log) std::cerr << "pot: response " << body.substr(0, 400) << "\n";
            return body;
        };

        std::string body = cache_ ? cache_->get_or_fetch(digest, req.value("model", ""), fetch)
                                  : fetch();
        nlohmann::json parsed = nlohmann::json::parse(body, nullptr, false);
        if (parsed.is_discarded())
            throw MalformedResponseError("response is not valid JSON: " + body.substr(0, 200));
        return parsed;
    }

    /// Single-token decode returning {token -> probability} from the
    /// completions-style logprobs payload.
    std::map<std::string, double> single_token_probs(const std::string& model,
                                                     const std::string& prompt) const {
        nlohmann::json req{
            {"model", model},          {"prompt", prompt},           {"max_tokens", 1},
            {"temperature", 0.0},      {"logprobs", config_.top_logprobs},
        };
        nlohmann::json body = request(req, std::nullopt);

        const auto* top = find_top_logprobs(body);
        if (!top)
            throw MalformedResponseError("response carries no token logprobs: " +
                                         body.dump().substr(0, 200));
        std::map<std::string, double> probs;
        for (auto it = top->begin(); it != top->end(); ++it)
            probs[it.key()] = std::exp(it.value().get<double>());
        return probs;
    }

    static const nlohmann::json* find_top_logprobs(const nlohmann::json& body) {
        if (!body.contains("choices") || body["choices"].empty()) return nullptr;
        const auto& choice = body["choices"][0];
        if (!choice.contains("logprobs")) return nullptr;
        const auto& lp = choice["logprobs"];
        if (!lp.contains("top_logprobs") || lp["top_logprobs"].empty()) return nullptr;
        const auto& first = lp["top_logprobs"][0];
        return first.is_object() ? &first : nullptr;
    }

    static std::string completion_text(const nlohmann::json& body) {
        if (!body.contains("choices") || body["choices"].empty() ||
            !body["choices"][0].contains("text"))
            throw MalformedResponseError("completion has no choices[0].text");
        return body["choices"][0]["text"].get<std::string>();
    }

    /// Case-folds and strips leading whitespace before matching, merging
    /// token variants like " Sure" / "sure" / " SURE".
    static double merged_prob(const std::map<std::string, double>& probs,
                              std::string_view target) {
        double total = 0.0;
        for (const auto& [token, p] : probs)
            if (to_lower(trim(token)) == target) total += p;
        return total;
    }

    std::uint64_t next_sample_index(const std::string& prompt) const {
        std::lock_guard lock(mutex_);
        return sample_counters_[fnv1a64(prompt)]++;
    }

    LmOracleConfig config_;
    std::shared_ptr<Transport> transport_;
    mutable std::optional<ResponseCache> cache_;
    mutable std::map<std::uint64_t, std::uint64_t> sample_counters_;
    mutable std::mutex mutex_;
    mutable std::atomic<std::uint64_t> network_calls_{0};
};

} // namespace pot
