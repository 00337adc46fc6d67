#include "iclh/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <regex>
#include <sstream>

#include "iclh/errors.hpp"
#include "iclh/tasks.hpp"

namespace iclh::prompts {

std::string format_int(double v) {
    long long i = std::llround(v);
    if (i == 0) return "0";
    return std::to_string(i);
}

std::string format_reward(double v) {
    double r = std::round(v * 10.0) / 10.0;
    if (r == 0.0) r = 0.0; // normalize -0.0
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", r);
    return buf;
}

std::string format_value_2dp(double v) {
    double r = std::round(v * 100.0) / 100.0;
    if (r == 0.0) r = 0.0;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", r);
    std::string s = buf;
    if (s.back() == '0') s.pop_back(); // "0.80" -> "0.8", "1.00" -> "1.0"
    return s;
}

std::string render_function_prompt(const FunctionHistory& history, double query_x) {
    std::ostringstream out;
    out << "You observe " << history.n_tasks_total
        << " machines that produce an output y for a given input x.\n"
        << "Each machine implements a different function.\n\n";
    std::size_t n_blocks = history.tasks.empty() ? 1 : history.tasks.size();
    for (std::size_t t = 0; t < n_blocks; ++t) {
        out << "Machine " << (t + 1) << ":\n";
        if (t < history.tasks.size()) {
            for (const auto& obs : history.tasks[t])
                out << "x=" << format_int(obs.x) << ", y=" << format_int(obs.y) << ";\n";
        }
        if (t + 1 == n_blocks) {
            out << "x=" << format_int(query_x) << ", y=";
        } else {
            out << "\n";
        }
    }
    return out.str();
}

std::string bandit_instruction(int trials_per_task) {
    std::ostringstream out;
    out << "You are going to different casinos that own two slot machines.\n"
        << "Choosing the same slot machine will not always give you the same points, "
           "but one slot machine is always better than the other. Within a casino, "
           "your goal is to choose the slot machine that will give you the most points "
           "over the course of "
        << trials_per_task << " trials.\n"
        << "Each casino owns a different pair of machine.\n";
    return out.str();
}

namespace {

void append_casino_blocks(std::ostringstream& out, const BanditHistory& history,
                          std::size_t n_blocks) {
    for (std::size_t c = 0; c < n_blocks; ++c) {
        out << "You have received the following points when playing in casino " << (c + 1)
            << ":\n";
        if (c < history.casinos.size()) {
            for (const auto& obs : history.casinos[c])
                out << "- Machine " << obs.letter << " delivered " << format_reward(obs.reward)
                    << " points.\n";
        }
        out << "\n";
    }
}

} // namespace

std::string render_bandit_prompt(const BanditHistory& history,
                                 const std::array<char, 2>& letters, Rng& rng) {
    std::ostringstream out;
    out << bandit_instruction(history.trials_per_task) << "\n";
    std::size_t n_blocks = history.casinos.empty() ? 1 : history.casinos.size();
    append_casino_blocks(out, history, n_blocks);
    std::size_t casino = n_blocks;
    std::size_t trial = history.casinos.empty() ? 1 : history.casinos.back().size() + 1;
    std::uniform_int_distribution<int> coin(0, 1);
    char first = letters[0], second = letters[1];
    if (coin(rng) == 1) std::swap(first, second);
    out << "Q: We are now performing trial " << trial << " in casino " << casino
        << ". Which machine do you choose between machine " << first << " and machine "
        << second << "?\n"
        << "A: Machine";
    return out.str();
}

std::string render_regression_prompt(const RegressionHistory& history,
                                     const std::vector<double>& query_x) {
    if (query_x.size() != 5)
        throw ContractError("render_regression_prompt: query vector must have 5 entries");
    for (const auto& task : history.tasks)
        for (const auto& obs : task)
            if (obs.x.size() != 5)
                throw ContractError("render_regression_prompt: history vector must have 5 entries");

    auto vec_line = [](const std::vector<double>& x) {
        std::ostringstream line;
        line << "x=[ ";
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (i) line << ", ";
            line << format_value_2dp(x[i]);
        }
        line << "], y=";
        return line.str();
    };

    std::ostringstream out;
    out << "You observe an input vector x and have to predict the corresponding output y "
           "as accurately as possible. You are given "
        << history.n_tasks_total << " different tasks.\n\n";
    std::size_t n_blocks = history.tasks.empty() ? 1 : history.tasks.size();
    for (std::size_t t = 0; t < n_blocks; ++t) {
        out << "Task " << (t + 1) << ":\n";
        if (t < history.tasks.size()) {
            for (const auto& obs : history.tasks[t])
                out << vec_line(obs.x) << " " << format_value_2dp(obs.y) << ";\n";
        }
        if (t + 1 == n_blocks) {
            out << vec_line(query_x);
        } else {
            out << "\n";
        }
    }
    return out.str();
}

std::string render_prior_probe_bandit(char letter) {
    if (tasks::bandit_letter_alphabet().find(letter) == std::string::npos)
        throw ContractError(std::string("render_prior_probe_bandit: letter not permitted: ") +
                            letter);
    std::ostringstream out;
    out << bandit_instruction(10) << "\n"
        << "Q: How rewarding do you expect machine " << letter << " to be?\n"
        << "A:";
    return out.str();
}

std::string render_prior_probe_bandit_with_history(const BanditHistory& history, char letter) {
    if (tasks::bandit_letter_alphabet().find(letter) == std::string::npos)
        throw ContractError(std::string("render_prior_probe_bandit: letter not permitted: ") +
                            letter);
    std::ostringstream out;
    out << bandit_instruction(history.trials_per_task) << "\n";
    append_casino_blocks(out, history, history.casinos.size());
    out << "Q: How rewarding do you expect machine " << letter << " to be?\n"
        << "A:";
    return out.str();
}

std::optional<double> try_parse_numeric_completion(const std::string& text) {
    static const std::regex number_re(
        R"([-+]?(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?|[-+]?\.\d+)");
    std::smatch m;
    if (!std::regex_search(text, m, number_re)) return std::nullopt;
    std::string token = m.str();
    token.erase(std::remove(token.begin(), token.end(), ','), token.end());
    try {
        return std::stod(token);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

double parse_numeric_completion(const std::string& text) {
    auto v = try_parse_numeric_completion(text);
    if (!v) throw ParseFailure("no parsable number in completion: " + text);
    return *v;
}

std::optional<int> try_parse_choice_completion(const std::string& text,
                                               const std::array<char, 2>& letters) {
    if (letters[0] == letters[1]) throw ContractError("parse_choice: letters must be distinct");
    auto is_word = [](unsigned char c) { return std::isalnum(c) != 0; };
    for (std::size_t i = 0; i < text.size(); ++i) {
        char up = static_cast<char>(std::toupper(static_cast<unsigned char>(text[i])));
        if (up != letters[0] && up != letters[1]) continue;
        bool left_ok = (i == 0) || !is_word(static_cast<unsigned char>(text[i - 1]));
        bool right_ok = (i + 1 == text.size()) || !is_word(static_cast<unsigned char>(text[i + 1]));
        if (left_ok && right_ok) return up == letters[0] ? 0 : 1;
    }
    return std::nullopt;
}

int parse_choice_completion(const std::string& text, const std::array<char, 2>& letters) {
    auto v = try_parse_choice_completion(text, letters);
    if (!v) throw ParseFailure("no machine letter in completion: " + text);
    return *v;
}

} // namespace iclh::prompts
