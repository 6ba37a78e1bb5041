#pragma once

#include "watson/freqtable.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace watson {

enum class QuestionKind { largest_deviation, dominant_category, order_trend, small_cell, compare_bars };

[[nodiscard]] auto to_string(QuestionKind kind) -> std::string_view;

/// What a question points at. `cells` are (bar label, color label) pairs,
/// `categories` are bar or color labels; `value` is the statistic behind the
/// question, unrounded.
struct Evidence {
    std::vector<std::pair<std::string, std::string>> cells;
    std::vector<std::string> categories;
    double value = 0.0;
};

struct Question {
    std::string text;
    QuestionKind kind = QuestionKind::dominant_category;
    Evidence evidence;
};

struct QuestionConfig {
    std::size_t max_questions = 5;
    double trend_threshold = 0.7;      // |Kendall tau| needed for a trend question
    double small_expected = 5.0;       // expected-count floor for the caution question
};

/// Kendall tau-b between two equally long sequences; 0 when either is constant.
[[nodiscard]] auto kendall_tau(std::span<const double> x, std::span<const double> y) -> double;

/// Ranked, deterministic, evidence-backed prompts for a 2-variable table.
/// Throws Error{"WrongArity"}.
[[nodiscard]] auto generate_questions(const FreqTable& table, std::string_view bar_variable,
                                      const QuestionConfig& config = {}) -> std::vector<Question>;

void to_json(nlohmann::json& j, const Evidence& e);
void to_json(nlohmann::json& j, const Question& q);

}  // namespace watson
