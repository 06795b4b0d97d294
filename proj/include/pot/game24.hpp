#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "pot/rational.hpp"

namespace pot::game24 {

inline const Rational kTarget = Rational(24);

/// Canonical multiset of 1-4 remaining numbers. Stored sorted, so
/// equality and hashing respect multiset semantics.
class PuzzleState {
public:
    PuzzleState() = default;

    explicit PuzzleState(std::vector<Rational> numbers) : numbers_(std::move(numbers)) {
        if (numbers_.empty() || numbers_.size() > 4)
            throw std::invalid_argument("PuzzleState: expected 1-4 numbers, got " +
                                        std::to_string(numbers_.size()));
        std::sort(numbers_.begin(), numbers_.end());
    }

    const std::vector<Rational>& numbers() const { return numbers_; }
    std::size_t size() const { return numbers_.size(); }

    bool contains(const Rational& v) const {
        return std::find(numbers_.begin(), numbers_.end(), v) != numbers_.end();
    }

    std::string str() const {
        std::string out;
        for (std::size_t i = 0; i < numbers_.size(); ++i) {
            if (i) out += ' ';
            out += numbers_[i].str();
        }
        return out;
    }

    std::uint64_t digest() const {
        std::uint64_t h = 0xcbf29ce484222325ull;
        for (const auto& n : numbers_) h = n.digest(h);
        return h;
    }

    friend bool operator==(const PuzzleState& a, const PuzzleState& b) {
        return a.numbers_ == b.numbers_;
    }
    friend bool operator!=(const PuzzleState& a, const PuzzleState& b) { return !(a == b); }
    friend bool operator<(const PuzzleState& a, const PuzzleState& b) {
        return std::lexicographical_compare(a.numbers_.begin(), a.numbers_.end(),
                                            b.numbers_.begin(), b.numbers_.end());
    }

private:
    std::vector<Rational> numbers_;
};

enum class Op : int { Add = 0, Sub = 1, Mul = 2, Div = 3 };

inline char op_symbol(Op op) {
    switch (op) {
        case Op::Add: return '+';
        case Op::Sub: return '-';
        case Op::Mul: return '*';
        case Op::Div: return '/';
    }
    throw std::logic_error("op_symbol: bad operator");
}

inline std::optional<Op> op_from_symbol(char c) {
    switch (c) {
        case '+': return Op::Add;
        case '-': return Op::Sub;
        case '*': case 'x': case 'X': return Op::Mul;
        case '/': return Op::Div;
        default: return std::nullopt;
    }
}

inline Rational apply_op(const Rational& a, Op op, const Rational& b) {
    switch (op) {
        case Op::Add: return a + b;
        case Op::Sub: return a - b;
        case Op::Mul: return a * b;
        case Op::Div: return a / b;
    }
    throw std::logic_error("apply_op: bad operator");
}

/// One arithmetic step: consumes operands a and b, produces result = a op b.
struct Move {
    Rational a;
    Rational b;
    Op op = Op::Add;
    Rational result;

    static Move make(const Rational& a, Op op, const Rational& b) {
        return Move{a, b, op, apply_op(a, op, b)};
    }

    std::string str() const {
        return a.str() + " " + op_symbol(op) + " " + b.str() + " = " + result.str();
    }

    friend bool operator==(const Move& x, const Move& y) {
        return x.op == y.op && x.result == y.result &&
               std::minmax(x.a, x.b) == std::minmax(y.a, y.b);
    }
};

/// Parses 1-4 whitespace-separated integers into a canonical state.
inline PuzzleState parse_puzzle(std::string_view text) {
    std::vector<Rational> nums;
    std::istringstream in{std::string(text)};
    std::string tok;
    while (in >> tok) {
        Rational v = Rational::parse(tok);
        if (!v.is_integer())
            throw std::invalid_argument("parse_puzzle: non-integer token '" + tok + "'");
        nums.push_back(v);
    }
    if (nums.empty() || nums.size() > 4)
        throw std::invalid_argument("parse_puzzle: expected 1-4 numbers, got " +
                                    std::to_string(nums.size()));
    return PuzzleState(std::move(nums));
}

/// All distinct moves over unordered operand pairs, in a deterministic
/// order (result, then operator, then operands). For a pair {a,b} this
/// yields a+b, a*b, both subtraction directions and both division
/// directions (zero divisors skipped); duplicates by (operand multiset,
/// operator, result) collapse to one entry.
inline std::vector<Move> legal_moves(const PuzzleState& state) {
    const auto& nums = state.numbers();
    std::vector<Move> moves;
    if (nums.size() < 2) return moves;

    for (std::size_t i = 0; i < nums.size(); ++i) {
        for (std::size_t j = i + 1; j < nums.size(); ++j) {
            const Rational& lo = nums[i];
            const Rational& hi = nums[j];
            moves.push_back(Move::make(lo, Op::Add, hi));
            moves.push_back(Move::make(lo, Op::Mul, hi));
            moves.push_back(Move::make(lo, Op::Sub, hi));
            moves.push_back(Move::make(hi, Op::Sub, lo));
            if (!hi.is_zero()) moves.push_back(Move::make(lo, Op::Div, hi));
            if (!lo.is_zero()) moves.push_back(Move::make(hi, Op::Div, lo));
        }
    }

    auto key = [](const Move& m) {
        auto [x, y] = std::minmax(m.a, m.b);
        return std::tuple(m.result, static_cast<int>(m.op), x, y);
    };
    std::sort(moves.begin(), moves.end(),
              [&](const Move& p, const Move& q) { return key(p) < key(q); });
    moves.erase(std::unique(moves.begin(), moves.end(),
                            [&](const Move& p, const Move& q) { return key(p) == key(q); }),
                moves.end());
    return moves;
}

/// Removes the move's operands from the multiset and inserts its result.
inline PuzzleState apply_move(const PuzzleState& state, const Move& move) {
    std::vector<Rational> rest = state.numbers();
    for (const Rational& operand : {move.a, move.b}) {
        auto it = std::find(rest.begin(), rest.end(), operand);
        if (it == rest.end())
            throw std::domain_error("apply_move: operand " + operand.str() + " not in state {" +
                                    state.str() + "}");
        rest.erase(it);
    }
    if (apply_op(move.a, move.op, move.b) != move.result)
        throw std::domain_error("apply_move: inconsistent result in '" + move.str() + "'");
    rest.push_back(move.result);
    return PuzzleState(std::move(rest));
}

inline bool is_success(const PuzzleState& state) {
    return state.size() == 1 && state.numbers()[0] == kTarget;
}

namespace detail {
struct PuzzleHash {
    std::size_t operator()(const PuzzleState& s) const noexcept { return s.digest(); }
};
} // namespace detail

/// Exhaustive-with-memoization solvability test; the ground truth behind
/// the exact oracle. Memo table is shared and mutex-guarded.
inline bool solvable(const PuzzleState& state) {
    static std::unordered_map<PuzzleState, bool, detail::PuzzleHash> memo;
    static std::mutex memo_mutex;
    {
        std::lock_guard lock(memo_mutex);
        if (auto it = memo.find(state); it != memo.end()) return it->second;
    }
    bool result = false;
    if (state.size() == 1) {
        result = is_success(state);
    } else {
        for (const Move& m : legal_moves(state)) {
            if (solvable(apply_move(state, m))) {
                result = true;
                break;
            }
        }
    }
    std::lock_guard lock(memo_mutex);
    memo.emplace(state, result);
    return result;
}

/// Loads puzzles in file order. Plain text: one puzzle of four integers
/// per line. CSV (header containing a `Puzzles` column): that column
/// holds the space-separated numbers.
inline std::vector<PuzzleState> load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_dataset: cannot open '" + path + "'");

    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);

    auto split_csv = [](const std::string& row) {
        std::vector<std::string> cells;
        std::string cell;
        bool quoted = false;
        for (char c : row) {
            if (c == '"') quoted = !quoted;
            else if (c == ',' && !quoted) { cells.push_back(cell); cell.clear(); }
            else cell += c;
        }
        cells.push_back(cell);
        return cells;
    };

    std::size_t puzzles_col = std::string::npos;
    std::size_t first_row = 0;
    if (!lines.empty() && lines[0].find(',') != std::string::npos) {
        auto header = split_csv(lines[0]);
        for (std::size_t i = 0; i < header.size(); ++i)
            if (trim(header[i]) == "Puzzles") { puzzles_col = i; break; }
        if (puzzles_col != std::string::npos) first_row = 1;
    }

    std::vector<PuzzleState> puzzles;
    for (std::size_t i = first_row; i < lines.size(); ++i) {
        std::string row{trim(lines[i])};
        if (row.empty()) continue;
        std::string field = row;
        if (puzzles_col != std::string::npos) {
            auto cells = split_csv(row);
            if (puzzles_col >= cells.size())
                throw std::runtime_error("load_dataset: " + path + ":" + std::to_string(i + 1) +
                                         ": missing Puzzles column");
            field = std::string(trim(cells[puzzles_col]));
        }
        try {
            PuzzleState p = parse_puzzle(field);
            if (p.size() != 4)
                throw std::invalid_argument("expected 4 numbers, got " + std::to_string(p.size()));
            puzzles.push_back(std::move(p));
        } catch (const std::exception& e) {
            throw std::runtime_error("load_dataset: " + path + ":" + std::to_string(i + 1) + ": " +
                                     e.what());
        }
    }
    return puzzles;
}

} // namespace pot::game24
