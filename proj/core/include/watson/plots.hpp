#pragma once

#include "watson/freqtable.hpp"
#include "watson/seriation.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace watson {

enum class PlotKind { bar1, panel2, multipanel3 };

[[nodiscard]] auto to_string(PlotKind kind) -> std::string_view;
[[nodiscard]] auto plot_kind_for_arity(std::size_t arity) -> PlotKind;

struct PlotOptions {
    int width_px = 960;
    int height_px = 540;
    std::string palette = "tol12";
    bool show_scales = true;
    std::string title;  // empty: derived from the variable names

    friend auto operator==(const PlotOptions&, const PlotOptions&) -> bool = default;
};

/// One entry of the plot library. `variables` lists bar, color, panel
/// variables in that order (as many as the kind needs).
struct PlotSpec {
    PlotKind kind = PlotKind::bar1;
    std::string dataset;
    std::vector<std::string> variables;
    std::optional<Ordering> ordering;  // filled in by render_plot
    PlotOptions options;
};

struct SvgDoc {
    std::string xml;
    int width_px = 0;
    int height_px = 0;
};

struct BoxStats {
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
    Count n = 0;
};

inline constexpr double kResidualClip = 4.0;
inline constexpr int kFineTicksPerBar = 19;

/// Standardized residuals (O - E) / sqrt(E) under independence, indexed
/// [axis-0 category][axis-1 category]. Cells with E = 0 give 0.
/// Errors: WrongArity, EmptyTable.
[[nodiscard]] auto pearson_residuals(const FreqTable& table) -> std::vector<std::vector<double>>;

/// Expected counts under independence, same indexing as pearson_residuals.
[[nodiscard]] auto expected_counts(const FreqTable& table) -> std::vector<std::vector<double>>;

/// Lower-cumulative quantiles: the q-th quantile is the smallest score whose
/// cumulative mass reaches q. Zero-weight scores never qualify.
/// Errors: LengthMismatch, ZeroMass, InvalidArgument (q outside [0, 1]).
[[nodiscard]] auto weighted_quantiles(std::span<const double> scores,
                                      std::span<const Count> weights,
                                      std::span<const double> qs) -> std::vector<double>;

[[nodiscard]] auto box_stats(std::span<const double> scores, std::span<const Count> weights)
    -> BoxStats;

/// Fewer categories wins; ties go to the first variable.
[[nodiscard]] auto default_bar_variable(const FreqTable& table) -> std::string;

/// Ordering shared by every panel of a 2- or 3-variable plot: seriation of the
/// bar x color composition, pooled over any other axis.
[[nodiscard]] auto bar_ordering(const FreqTable& table, std::string_view bar_variable,
                                std::string_view color_variable) -> Ordering;

[[nodiscard]] auto render_bar1(const FreqTable& table, const PlotOptions& options = {})
    -> SvgDoc;

[[nodiscard]] auto render_panel2(const FreqTable& table, std::string_view bar_variable,
                                 const PlotOptions& options = {}) -> SvgDoc;

[[nodiscard]] auto render_multipanel3(const FreqTable& table, std::string_view bar_variable,
                                      std::string_view color_variable,
                                      std::string_view panel_variable,
                                      const PlotOptions& options = {}) -> SvgDoc;

/// Marginalizes `table` onto spec.variables and dispatches on spec.kind.
/// spec.ordering receives the bar order that was drawn.
[[nodiscard]] auto render_plot(const FreqTable& table, PlotSpec& spec) -> SvgDoc;

void to_json(nlohmann::json& j, const PlotOptions& o);
void from_json(const nlohmann::json& j, PlotOptions& o);
void to_json(nlohmann::json& j, const PlotSpec& s);
void from_json(const nlohmann::json& j, PlotSpec& s);
void to_json(nlohmann::json& j, const BoxStats& b);

}  // namespace watson
