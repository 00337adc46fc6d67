#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "iclh/rng.hpp"

namespace iclh::prompts {

// Observation histories, one inner vector per task. The last entry is the
// task currently in progress; earlier entries are completed tasks.

struct FunctionHistory {
    struct Obs {
        double x = 0.0;
        double y = 0.0;
    };
    std::vector<std::vector<Obs>> tasks;
    int n_tasks_total = 5; // count named in the header line
};

struct BanditHistory {
    struct Obs {
        char letter = 0;
        double reward = 0.0;
    };
    std::vector<std::vector<Obs>> casinos;
    int trials_per_task = 10; // shown in the instruction paragraph
};

struct RegressionHistory {
    struct Obs {
        std::vector<double> x;
        double y = 0.0;
    };
    std::vector<std::vector<Obs>> tasks;
    int n_tasks_total = 5;
};

// Number formatting used in the prompt bodies.
std::string format_int(double v);        // "x=52", "y=-209"
std::string format_reward(double v);     // "4.2", "-7.4"
std::string format_value_2dp(double v);  // "-0.81", "-0.8", "1.0"

std::string render_function_prompt(const FunctionHistory& history, double query_x);

// Letter order in the question is randomized per render.
std::string render_bandit_prompt(const BanditHistory& history,
                                 const std::array<char, 2>& letters, Rng& rng);

std::string render_regression_prompt(const RegressionHistory& history,
                                     const std::vector<double>& query_x);

std::string render_prior_probe_bandit(char letter);

// Same probe question appended after the reward history of completed casinos;
// used to elicit priors mid-sequence.
std::string render_prior_probe_bandit_with_history(const BanditHistory& history, char letter);

// The shared bandit instruction paragraph.
std::string bandit_instruction(int trials_per_task);

// First decimal number in the completion (sign, fraction and thousands
// commas supported). Throws ParseFailure when none is present.
double parse_numeric_completion(const std::string& text);
std::optional<double> try_parse_numeric_completion(const std::string& text);

// First standalone occurrence of either task letter (case-insensitive)
// decides the arm, indexed in the task's canonical letter order.
int parse_choice_completion(const std::string& text, const std::array<char, 2>& letters);
std::optional<int> try_parse_choice_completion(const std::string& text,
                                               const std::array<char, 2>& letters);

} // namespace iclh::prompts
