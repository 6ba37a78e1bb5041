#include "watson/questions.hpp"

#include "watson/error.hpp"
#include "watson/plots.hpp"
#include "watson/seriation.hpp"

#include <fmt/format.h>

#include <array>
#include <cmath>
#include <limits>

namespace watson {

namespace {

constexpr double kNegligible = 1e-9;

auto join_labels(const std::vector<std::string>& labels) -> std::string {
    std::string out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (i > 0) {
            out += ", ";
        }
        out += labels[i];
    }
    return out;
}

}  // namespace

auto to_string(QuestionKind kind) -> std::string_view {
    switch (kind) {
        case QuestionKind::largest_deviation: return "largest_deviation";
        case QuestionKind::dominant_category: return "dominant_category";
        case QuestionKind::order_trend: return "order_trend";
        case QuestionKind::small_cell: return "small_cell";
        case QuestionKind::compare_bars: return "compare_bars";
    }
    return "dominant_category";
}

auto kendall_tau(std::span<const double> x, std::span<const double> y) -> double {
    if (x.size() != y.size()) {
        throw Error("LengthMismatch", "kendall_tau needs equal lengths");
    }
    long long concordant = 0;
    long long discordant = 0;
    long long ties_x = 0;
    long long ties_y = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t j = i + 1; j < x.size(); ++j) {
            const double dx = x[j] - x[i];
            const double dy = y[j] - y[i];
            if (dx == 0 && dy == 0) {
                ++ties_x;
                ++ties_y;
            } else if (dx == 0) {
                ++ties_x;
            } else if (dy == 0) {
                ++ties_y;
            } else if ((dx > 0) == (dy > 0)) {
                ++concordant;
            } else {
                ++discordant;
            }
        }
    }
    const auto pairs = static_cast<long long>(x.size() * (x.size() - (x.empty() ? 0 : 1)) / 2);
    const double denom = std::sqrt(static_cast<double>(pairs - ties_x) *
                                   static_cast<double>(pairs - ties_y));
    if (denom == 0) {
        return 0.0;
    }
    return static_cast<double>(concordant - discordant) / denom;
}

auto generate_questions(const FreqTable& table, std::string_view bar_variable,
                        const QuestionConfig& config) -> std::vector<Question> {
    if (table.rank() != 2) {
        throw Error("WrongArity", "questions need a 2-variable table", {{"rank", table.rank()}});
    }
    if (config.max_questions < 1) {
        throw Error("InvalidArgument", "max_questions must be at least 1");
    }
    const std::size_t bar_axis = table.axis_of(bar_variable);
    if (table.total() == 0) {
        return {};
    }
    const FreqTable two_way =
        bar_axis == 0 ? table
                      : permute_axes(table, std::array<std::string, 2>{table.variable(1).name,
                                                                       table.variable(0).name});
    const auto& bar_var = two_way.variable(0);
    const auto& color_var = two_way.variable(1);
    const std::size_t n = bar_var.size();
    const std::size_t m = color_var.size();
    const auto residuals = pearson_residuals(two_way);
    const auto expected = expected_counts(two_way);
    const auto shares = proportions(two_way, bar_var.name);
    const auto ordering = seriate(shares);

    std::vector<std::size_t> ordered_bars;  // seriated, non-empty bars only
    for (const auto i : ordering.perm) {
        if (shares.bar_totals[i] > 0) {
            ordered_bars.push_back(i);
        }
    }

    std::vector<Question> out;

    // Largest standardized residual.
    {
        double best = 0.0;
        std::size_t bi = 0;
        std::size_t bj = 0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                if (std::abs(residuals[i][j]) > std::abs(best)) {
                    best = residuals[i][j];
                    bi = i;
                    bj = j;
                }
            }
        }
        if (std::abs(best) > kNegligible) {
            out.push_back(Question{
                fmt::format("Why do {}/{} occur {} often than expected?", bar_var.categories[bi],
                            color_var.categories[bj], best > 0 ? "more" : "less"),
                QuestionKind::largest_deviation,
                Evidence{{{bar_var.categories[bi], color_var.categories[bj]}}, {}, best}});
        }
    }

    // Bar farthest from the overall composition.
    {
        const auto color_totals = two_way.axis_totals(1);
        std::vector<double> overall(m);
        for (std::size_t j = 0; j < m; ++j) {
            overall[j] =
                static_cast<double>(color_totals[j]) / static_cast<double>(two_way.total());
        }
        double farthest = 0.0;
        std::size_t which = n;
        for (const auto i : ordered_bars) {
            const double d = l1(shares.rows[i], overall);
            if (d > farthest) {
                farthest = d;
                which = i;
            }
        }
        if (which < n && farthest > kNegligible) {
            out.push_back(Question{
                fmt::format("What makes {} different from the overall {} mix?",
                            bar_var.categories[which], color_var.name),
                QuestionKind::dominant_category,
                Evidence{{}, {bar_var.categories[which]}, farthest}});
        } else {
            std::size_t top = 0;
            for (std::size_t j = 1; j < m; ++j) {
                if (overall[j] > overall[top]) {
                    top = j;
                }
            }
            out.push_back(Question{
                fmt::format("Every {} has the same {} mix, with {} the most common. "
                            "Is that what you expected?",
                            bar_var.name, color_var.name, color_var.categories[top]),
                QuestionKind::dominant_category,
                Evidence{{}, {color_var.categories[top]}, overall[top]}});
        }
    }

    // Monotone share of one color along the seriated order.
    if (ordered_bars.size() >= 3) {
        std::vector<double> position(ordered_bars.size());
        for (std::size_t p = 0; p < position.size(); ++p) {
            position[p] = static_cast<double>(p);
        }
        double best_tau = 0.0;
        std::size_t best_color = m;
        for (std::size_t j = 0; j < m; ++j) {
            std::vector<double> share(ordered_bars.size());
            for (std::size_t p = 0; p < ordered_bars.size(); ++p) {
                share[p] = shares.rows[ordered_bars[p]][j];
            }
            const double tau = kendall_tau(position, share);
            if (std::abs(tau) > std::abs(best_tau)) {
                best_tau = tau;
                best_color = j;
            }
        }
        if (best_color < m && std::abs(best_tau) >= config.trend_threshold) {
            std::vector<std::string> labels;
            for (const auto i : ordered_bars) {
                labels.push_back(bar_var.categories[i]);
            }
            Evidence ev{{}, {color_var.categories[best_color]}, best_tau};
            ev.categories.insert(ev.categories.end(), labels.begin(), labels.end());
            out.push_back(Question{
                fmt::format("Does {} {} systematically across {}?", color_var.categories[best_color],
                            best_tau > 0 ? "increase" : "decrease", join_labels(labels)),
                QuestionKind::order_trend, std::move(ev)});
        }
    }

    // Cells too sparse to trust.
    {
        Evidence ev;
        double smallest = std::numeric_limits<double>::infinity();
        std::pair<std::string, std::string> smallest_cell;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                if (expected[i][j] < config.small_expected) {
                    ev.cells.emplace_back(bar_var.categories[i], color_var.categories[j]);
                    if (expected[i][j] < smallest) {
                        smallest = expected[i][j];
                        smallest_cell = ev.cells.back();
                    }
                }
            }
        }
        if (!ev.cells.empty()) {
            ev.value = smallest;
            out.push_back(Question{
                fmt::format("{} cell{} expect fewer than {} observations (smallest: {}/{}). "
                            "Are the percentages there reliable?",
                            ev.cells.size(), ev.cells.size() == 1 ? "" : "s",
                            config.small_expected, smallest_cell.first, smallest_cell.second),
                QuestionKind::small_cell, std::move(ev)});
        }
    }

    // Widest step between neighbours in the seriated order.
    {
        double widest = 0.0;
        std::size_t at = 0;
        for (std::size_t p = 0; p + 1 < ordered_bars.size(); ++p) {
            const double gap = l1(shares.rows[ordered_bars[p]], shares.rows[ordered_bars[p + 1]]);
            if (gap > widest) {
                widest = gap;
                at = p;
            }
        }
        if (widest > kNegligible) {
            const auto& a = bar_var.categories[ordered_bars[at]];
            const auto& b = bar_var.categories[ordered_bars[at + 1]];
            out.push_back(Question{
                fmt::format("What separates {} from {}?", a, b),
                QuestionKind::compare_bars, Evidence{{}, {a, b}, widest}});
        }
    }

    if (out.size() > config.max_questions) {
        out.resize(config.max_questions);
    }
    return out;
}

void to_json(nlohmann::json& j, const Evidence& e) {
    auto cells = nlohmann::json::array();
    for (const auto& [bar, color] : e.cells) {
        cells.push_back({bar, color});
    }
    j = nlohmann::json{{"cells", cells}, {"categories", e.categories}, {"value", e.value}};
}

void to_json(nlohmann::json& j, const Question& q) {
    j = nlohmann::json{{"text", q.text}, {"kind", to_string(q.kind)}, {"evidence", q.evidence}};
}

}  // namespace watson
