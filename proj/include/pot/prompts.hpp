#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

namespace pot {

/// The three prompt templates behind the LM oracle. Placeholders are
/// written {name}; render() substitutes from a map. Defaults are built
/// in; load() reads editable text assets from a directory.
struct PromptSet {
    std::string propose;
    std::string value;
    std::string evaluate;

    static PromptSet builtin() {
        PromptSet p;
        p.propose =
            "Combine two of the given numbers with one of + - * / as a single step toward 24.\n"
            "Reply with exactly one line of the form: a op b = c (left: remaining numbers)\n"
            "Input: 2 8 8 14\n"
            "Step: 2 + 8 = 10 (left: 8 10 14)\n"
            "Input: 4 4 10\n"
            "Step: 10 - 4 = 6 (left: 4 6)\n"
            "Input: 4 6\n"
            "Step: 4 * 6 = 24 (left: 24)\n"
            "Input: {input}\n"
            "Step:";
        p.value =
            "Decide whether the given numbers can reach 24 with + - * /.\n"
            "Answer with one word: sure, likely, or impossible.\n"
            "Input: 10 14\n"
            "Answer: sure\n"
            "Input: 3 3 8 8\n"
            "Answer: likely\n"
            "Input: 1 1 1\n"
            "Answer: impossible\n"
            "Input: {input}\n"
            "Answer:";
        p.evaluate =
            "Judge whether the steps use each input number exactly once with + - * / and reach "
            "exactly 24.\n"
            "Answer with one word: sure or impossible.\n"
            "Input: 4 9 10 13\n"
            "Steps:\n"
            "13 - 9 = 4 (left: 4 4 10)\n"
            "10 - 4 = 6 (left: 4 6)\n"
            "4 * 6 = 24 (left: 24)\n"
            "Answer: sure\n"
            "Input: 1 1 4 6\n"
            "Steps:\n"
            "1 + 1 = 2 (left: 2 4 6)\n"
            "2 + 4 = 6 (left: 6 6)\n"
            "6 + 6 = 12 (left: 12)\n"
            "Answer: impossible\n"
            "Input: {input}\n"
            "Steps:\n"
            "{steps}\n"
            "Answer:";
        return p;
    }

    static PromptSet load(const std::string& dir) {
        auto slurp = [&](const std::string& name) {
            std::ifstream in(dir + "/" + name);
            if (!in) throw std::runtime_error("PromptSet: cannot open " + dir + "/" + name);
            std::ostringstream buf;
            buf << in.rdbuf();
            std::string text = buf.str();
            while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
            return text;
        };
        return PromptSet{slurp("propose.txt"), slurp("value.txt"), slurp("evaluate.txt")};
    }
};

inline std::string render_prompt(const std::string& tmpl,
                                 const std::map<std::string, std::string>& vars) {
    std::string out;
    out.reserve(tmpl.size());
    for (std::size_t i = 0; i < tmpl.size();) {
        if (tmpl[i] == '{') {
            auto close = tmpl.find('}', i);
            if (close != std::string::npos) {
                auto it = vars.find(tmpl.substr(i + 1, close - i - 1));
                if (it != vars.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out += tmpl[i++];
    }
    return out;
}

} // namespace pot
