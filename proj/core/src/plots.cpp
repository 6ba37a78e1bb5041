#include "watson/plots.hpp"

#include "svg_writer.hpp"
#include "watson/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace watson {

using detail::px;
using detail::SvgWriter;

namespace {

constexpr std::array<std::string_view, 12> kTol12 = {
    "#332288", "#88CCEE", "#44AA99", "#117733", "#999933", "#DDCC77",
    "#CC6677", "#882255", "#AA4499", "#6699CC", "#EE8866", "#BBBBBB"};

constexpr std::array<std::string_view, 8> kOkabeIto = {
    "#E69F00", "#56B4E9", "#009E73", "#F0E442", "#0072B2", "#D55E00", "#CC79A7", "#000000"};

auto palette_colors(std::string_view id) -> std::vector<std::string> {
    if (id == "tol12" || id.empty()) {
        return {kTol12.begin(), kTol12.end()};
    }
    if (id == "okabe-ito") {
        return {kOkabeIto.begin(), kOkabeIto.end()};
    }
    throw Error("UnknownPalette", "unknown palette '" + std::string(id) + "'",
                {{"palette", id}});
}

auto cycle(const std::vector<std::string>& colors, std::size_t i) -> const std::string& {
    return colors[i % colors.size()];
}

// Blue (negative) through white to red (positive), saturating at the clip.
auto residual_fill(double r) -> std::string {
    const double t = std::clamp(r / kResidualClip, -1.0, 1.0);
    const std::array<int, 3> end = t >= 0 ? std::array<int, 3>{0xb2, 0x18, 0x2b}
                                          : std::array<int, 3>{0x21, 0x66, 0xac};
    const double a = std::abs(t);
    std::array<int, 3> rgb{};
    for (std::size_t c = 0; c < 3; ++c) {
        rgb[c] = static_cast<int>(std::lround(255.0 + (end[c] - 255.0) * a));
    }
    return fmt::format("#{:02x}{:02x}{:02x}", rgb[0], rgb[1], rgb[2]);
}

auto join(std::span<const std::size_t> values) -> std::string {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) {
            out += ',';
        }
        out += std::to_string(values[i]);
    }
    return out;
}

auto percent(double fraction) -> std::string { return fmt::format("{:.1f}%", 100.0 * fraction); }

void require_rank(const FreqTable& table, std::size_t rank, std::string_view what) {
    if (table.rank() != rank) {
        throw Error("WrongArity",
                    std::string(what) + " needs a " + std::to_string(rank) + "-variable table",
                    {{"rank", table.rank()}, {"expected", rank}});
    }
}

auto counts_of(const FreqTable& two_way, std::size_t bar) -> std::vector<Count> {
    std::vector<Count> out(two_way.extent(1));
    for (std::size_t j = 0; j < out.size(); ++j) {
        out[j] = two_way.at({bar, j});
    }
    return out;
}

struct Frame {
    double x = 0;
    double y = 0;
    double w = 0;
    double h = 0;
};

// 100%-stacked horizontal bars, one row per bar category in `order`.
// `two_way` has the bar variable on axis 0 and the color variable on axis 1.
void draw_stacked_rows(SvgWriter& svg, const FreqTable& two_way, std::span<const std::size_t> order,
                       const Frame& frame, const std::vector<std::string>& colors,
                       bool show_scales, double label_width) {
    const std::size_t n = order.size();
    const std::size_t m = two_way.extent(1);
    const double row_h = frame.h / static_cast<double>(std::max<std::size_t>(n, 1));
    const double bar_h = row_h * 0.72;
    const double x0 = frame.x + label_width;
    const double len = frame.w - label_width;
    const auto& bar_var = two_way.variable(0);
    const auto& color_var = two_way.variable(1);

    for (std::size_t pos = 0; pos < n; ++pos) {
        const std::size_t i = order[pos];
        const auto row = counts_of(two_way, i);
        const Count total = std::accumulate(row.begin(), row.end(), Count{0});
        const double y = frame.y + static_cast<double>(pos) * row_h + (row_h - bar_h) / 2.0;

        if (label_width > 0) {
            svg.text({{"class", "bar-label"}, {"x", px(x0 - 6)}, {"y", px(y + bar_h / 2 + 4)},
                      {"text-anchor", "end"}},
                     bar_var.categories[i]);
        }
        svg.open("g", {{"class", "bar"},
                       {"data-category", bar_var.categories[i]},
                       {"data-total", std::to_string(total)},
                       {"data-x", px(x0)},
                       {"data-length", px(len)}});
        // Segment edges come from rounded cumulative positions so the
        // segments tile the bar exactly.
        Count cumulative = 0;
        double left = x0;
        for (std::size_t j = 0; j < m; ++j) {
            cumulative += row[j];
            const double share =
                total == 0 ? 0.0 : static_cast<double>(row[j]) / static_cast<double>(total);
            const double right =
                total == 0 ? x0
                           : x0 + std::round(static_cast<double>(cumulative) /
                                             static_cast<double>(total) * len * 100.0) /
                                      100.0;
            const double start = total == 0 ? x0 : left;
            svg.open("rect", {{"class", "segment"},
                              {"data-color", color_var.categories[j]},
                              {"data-count", std::to_string(row[j])},
                              {"x", px(start)},
                              {"y", px(y)},
                              {"width", px(right - start)},
                              {"height", px(bar_h)},
                              {"fill", cycle(colors, j)}});
            svg.element_with_text("title", {},
                                  bar_var.categories[i] + " / " + color_var.categories[j] + ": " +
                                      std::to_string(row[j]) + " (" + percent(share) + ")");
            svg.close("rect");
            left = right;
        }
        if (total == 0) {
            svg.element("rect", {{"class", "bar-outline"}, {"x", px(x0)}, {"y", px(y)},
                                 {"width", px(len)}, {"height", px(bar_h)}, {"fill", "none"},
                                 {"stroke", "#cccccc"}});
            svg.text({{"class", "no-data"}, {"x", px(x0 + len / 2)}, {"y", px(y + bar_h / 2 + 4)},
                      {"text-anchor", "middle"}, {"fill", "#777777"}},
                     "no data");
        }
        if (show_scales) {
            for (int k = 1; k <= kFineTicksPerBar; ++k) {
                const double tx = x0 + len * k / (kFineTicksPerBar + 1);
                const double tick = (k % 5 == 0) ? bar_h * 0.45 : bar_h * 0.22;
                svg.element("line", {{"class", "tick"}, {"x1", px(tx)}, {"y1", px(y)},
                                     {"x2", px(tx)}, {"y2", px(y + tick)},
                                     {"stroke", "#ffffff"}, {"stroke-opacity", "0.85"},
                                     {"stroke-width", "0.8"}});
            }
        }
        svg.close("g");
    }
}

void draw_percent_axis(SvgWriter& svg, double x0, double len, double y) {
    svg.open("g", {{"class", "axis"}});
    for (int k = 0; k <= 4; ++k) {
        const double tx = x0 + len * k / 4.0;
        svg.element("line", {{"x1", px(tx)}, {"y1", px(y)}, {"x2", px(tx)}, {"y2", px(y + 4)},
                             {"stroke", "#333333"}});
        const char* anchor = k == 0 ? "start" : (k == 4 ? "end" : "middle");
        svg.text({{"x", px(tx)}, {"y", px(y - 2)}, {"text-anchor", anchor}},
                 std::to_string(25 * k) + "%");
    }
    svg.close("g");
}

void draw_legend(SvgWriter& svg, const Variable& color_var, const std::vector<std::string>& colors,
                 double x, double y, double max_width) {
    svg.open("g", {{"class", "legend"}, {"data-variable", color_var.name}});
    svg.text({{"x", px(x)}, {"y", px(y + 9)}, {"font-weight", "bold"}}, color_var.name + ":");
    double cx = x + 8.0 + 7.0 * static_cast<double>(color_var.name.size());
    double cy = y;
    for (std::size_t j = 0; j < color_var.size(); ++j) {
        const double item_w = 22.0 + 6.5 * static_cast<double>(color_var.categories[j].size());
        if (cx + item_w > x + max_width && cx > x + 60) {
            cx = x + 8.0 + 7.0 * static_cast<double>(color_var.name.size());
            cy += 14.0;
        }
        svg.element("rect", {{"class", "legend-swatch"}, {"x", px(cx)}, {"y", px(cy)},
                             {"width", "10"}, {"height", "10"}, {"fill", cycle(colors, j)}});
        svg.text({{"x", px(cx + 14)}, {"y", px(cy + 9)}}, color_var.categories[j]);
        cx += item_w;
    }
    svg.close("g");
}

auto title_or(const PlotOptions& options, std::string fallback) -> std::string {
    return options.title.empty() ? std::move(fallback) : options.title;
}

void check_size(const PlotOptions& options) {
    if (options.width_px < 200 || options.height_px < 150) {
        throw Error("InvalidArgument", "plot must be at least 200x150 px",
                    {{"width_px", options.width_px}, {"height_px", options.height_px}});
    }
}

// Moves bar_variable to axis 0.
auto oriented(const FreqTable& table, std::string_view bar_variable) -> FreqTable {
    const std::size_t bar_axis = table.axis_of(bar_variable);
    if (bar_axis == 0) {
        return table;
    }
    const std::array<std::string, 2> order{table.variable(1).name, table.variable(0).name};
    return permute_axes(table, order);
}

}  // namespace

auto to_string(PlotKind kind) -> std::string_view {
    switch (kind) {
        case PlotKind::bar1: return "bar1";
        case PlotKind::panel2: return "panel2";
        case PlotKind::multipanel3: return "multipanel3";
    }
    return "bar1";
}

auto plot_kind_for_arity(std::size_t arity) -> PlotKind {
    switch (arity) {
        case 1: return PlotKind::bar1;
        case 2: return PlotKind::panel2;
        case 3: return PlotKind::multipanel3;
        default:
            throw Error("WrongArity", "plots take 1 to 3 variables", {{"rank", arity}});
    }
}

auto expected_counts(const FreqTable& table) -> std::vector<std::vector<double>> {
    require_rank(table, 2, "expected_counts");
    const auto rows = table.axis_totals(0);
    const auto cols = table.axis_totals(1);
    const double total = static_cast<double>(table.total());
    std::vector<std::vector<double>> out(rows.size(), std::vector<double>(cols.size(), 0.0));
    if (table.total() == 0) {
        return out;
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            out[i][j] = static_cast<double>(rows[i]) * static_cast<double>(cols[j]) / total;
        }
    }
    return out;
}

auto pearson_residuals(const FreqTable& table) -> std::vector<std::vector<double>> {
    require_rank(table, 2, "pearson_residuals");
    if (table.total() == 0) {
        throw Error("EmptyTable", "residuals are undefined for an empty table");
    }
    auto out = expected_counts(table);
    for (std::size_t i = 0; i < out.size(); ++i) {
        for (std::size_t j = 0; j < out[i].size(); ++j) {
            const double e = out[i][j];
            out[i][j] = e > 0.0 ? (static_cast<double>(table.at({i, j})) - e) / std::sqrt(e) : 0.0;
        }
    }
    return out;
}

auto weighted_quantiles(std::span<const double> scores, std::span<const Count> weights,
                        std::span<const double> qs) -> std::vector<double> {
    if (scores.size() != weights.size()) {
        throw Error("LengthMismatch", "scores and weights differ in length",
                    {{"scores", scores.size()}, {"weights", weights.size()}});
    }
    std::vector<std::size_t> idx;
    Count mass = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (weights[i] > 0) {
            idx.push_back(i);
            mass += weights[i];
        }
    }
    if (mass == 0) {
        throw Error("ZeroMass", "weights sum to zero");
    }
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    std::vector<double> out;
    out.reserve(qs.size());
    for (const double q : qs) {
        if (!(q >= 0.0 && q <= 1.0)) {
            throw Error("InvalidArgument", "quantile level outside [0, 1]", {{"q", q}});
        }
        const double threshold = q * static_cast<double>(mass);
        Count cumulative = 0;
        double value = scores[idx.back()];
        for (const auto i : idx) {
            cumulative += weights[i];
            if (static_cast<double>(cumulative) >= threshold) {
                value = scores[i];
                break;
            }
        }
        out.push_back(value);
    }
    return out;
}

auto box_stats(std::span<const double> scores, std::span<const Count> weights) -> BoxStats {
    constexpr std::array<double, 5> levels{0.0, 0.25, 0.5, 0.75, 1.0};
    const auto q = weighted_quantiles(scores, weights, levels);
    return BoxStats{q[0], q[1], q[2], q[3], q[4],
                    std::accumulate(weights.begin(), weights.end(), Count{0})};
}

auto default_bar_variable(const FreqTable& table) -> std::string {
    std::size_t best = 0;
    for (std::size_t a = 1; a < table.rank(); ++a) {
        if (table.extent(a) < table.extent(best)) {
            best = a;
        }
    }
    return table.variable(best).name;
}

auto bar_ordering(const FreqTable& table, std::string_view bar_variable,
                  std::string_view color_variable) -> Ordering {
    const std::array<std::string, 2> keep{std::string(bar_variable), std::string(color_variable)};
    if (keep[0] == keep[1]) {
        throw Error("InvalidArgument", "bar and color variable must differ");
    }
    const auto pooled = marginalize(table, keep);
    return seriate(proportions(pooled, bar_variable));
}

auto render_bar1(const FreqTable& table, const PlotOptions& options) -> SvgDoc {
    require_rank(table, 1, "render_bar1");
    check_size(options);
    const auto colors = palette_colors(options.palette);
    const auto& var = table.variable(0);
    const auto ordering = order_by_count(table);
    const auto counts = table.counts();
    const double W = options.width_px;
    const double H = options.height_px;
    const double left = 60;
    const double right = 20;
    const double top = 44;
    const double bottom = 90;
    const double plot_w = W - left - right;
    const double plot_h = H - top - bottom;

    SvgWriter svg(options.width_px, options.height_px, "bar1", title_or(options, var.name));
    svg.text({{"class", "plot-title"}, {"x", px(W / 2)}, {"y", "22"}, {"text-anchor", "middle"},
              {"font-size", "15"}},
             title_or(options, var.name));
    svg.open("g", {{"class", "panel"}, {"data-panel", "bars"}, {"data-variable", var.name},
                   {"data-order", join(ordering.perm)}});
    svg.element("line", {{"class", "axis"}, {"x1", px(left)}, {"y1", px(top + plot_h)},
                         {"x2", px(left + plot_w)}, {"y2", px(top + plot_h)},
                         {"stroke", "#333333"}});
    if (table.total() == 0) {
        svg.text({{"class", "no-data"}, {"x", px(left + plot_w / 2)}, {"y", px(top + plot_h / 2)},
                  {"text-anchor", "middle"}, {"font-size", "14"}, {"fill", "#777777"}},
                 "no data");
    } else {
        const Count peak = counts[ordering.perm.front()];
        const double slot = plot_w / static_cast<double>(counts.size());
        const double bar_w = slot * 0.72;
        for (std::size_t pos = 0; pos < ordering.perm.size(); ++pos) {
            const std::size_t c = ordering.perm[pos];
            const double h = plot_h * static_cast<double>(counts[c]) / static_cast<double>(peak);
            const double x = left + static_cast<double>(pos) * slot + (slot - bar_w) / 2;
            const double share = static_cast<double>(counts[c]) / static_cast<double>(table.total());
            svg.open("rect", {{"class", "bar"},
                              {"data-category", var.categories[c]},
                              {"data-count", std::to_string(counts[c])},
                              {"x", px(x)},
                              {"y", px(top + plot_h - h)},
                              {"width", px(bar_w)},
                              {"height", px(h)},
                              {"fill", cycle(colors, 0)}});
            svg.element_with_text("title", {},
                                  var.categories[c] + ": " + std::to_string(counts[c]));
            svg.close("rect");
            svg.text({{"class", "annotation"}, {"x", px(x + bar_w / 2)},
                      {"y", px(top + plot_h - h - 4)}, {"text-anchor", "middle"},
                      {"font-size", "10"}},
                     std::to_string(counts[c]) + " (" + percent(share) + ")");
            const double lx = x + bar_w / 2;
            const double ly = top + plot_h + 12;
            svg.text({{"class", "bar-label"}, {"x", px(lx)}, {"y", px(ly)},
                      {"text-anchor", "end"},
                      {"transform", "rotate(-40 " + px(lx) + " " + px(ly) + ")"}},
                     var.categories[c]);
        }
    }
    svg.close("g");
    svg.text({{"class", "axis-title"}, {"x", px(left + plot_w / 2)}, {"y", px(H - 8)},
              {"text-anchor", "middle"}},
             var.name + " (n = " + std::to_string(table.total()) + ")");
    return SvgDoc{std::move(svg).finish(), options.width_px, options.height_px};
}

auto render_panel2(const FreqTable& table, std::string_view bar_variable,
                   const PlotOptions& options) -> SvgDoc {
    require_rank(table, 2, "render_panel2");
    check_size(options);
    const auto colors = palette_colors(options.palette);
    const FreqTable two_way = oriented(table, bar_variable);
    const auto& bar_var = two_way.variable(0);
    const auto& color_var = two_way.variable(1);
    const auto ordering = seriate(proportions(two_way, bar_var.name));
    const std::size_t n = bar_var.size();
    const std::size_t m = color_var.size();
    const bool with_box = color_var.scores.has_value();

    const double W = options.width_px;
    const double H = options.height_px;
    const double label_w = 130;
    const double margin = 14;
    const double gap = 22;
    const double top = 62;
    const double bottom = 52;
    const double avail = W - label_w - 2 * margin - gap * (with_box ? 2 : 1);
    const double bars_w = avail * (with_box ? 0.45 : 0.6);
    const double box_w = with_box ? avail * 0.22 : 0.0;
    const double res_w = avail - bars_w - box_w;
    const double body_h = H - top - bottom;
    const double row_h = body_h / static_cast<double>(std::max<std::size_t>(n, 1));
    const double bars_x = margin + label_w;
    const double box_x = bars_x + bars_w + gap;
    const double res_x = (with_box ? box_x + box_w + gap : bars_x + bars_w + gap);

    const std::string title = title_or(options, color_var.name + " by " + bar_var.name);
    SvgWriter svg(options.width_px, options.height_px, "panel2", title);
    svg.text({{"class", "plot-title"}, {"x", px(W / 2)}, {"y", "20"}, {"text-anchor", "middle"},
              {"font-size", "15"}},
             title);

    // Percentage bars.
    svg.open("g", {{"class", "panel"}, {"data-panel", "bars"}, {"data-variable", bar_var.name},
                   {"data-color-variable", color_var.name}, {"data-order", join(ordering.perm)}});
    draw_percent_axis(svg, bars_x, bars_w, top - 8);
    draw_stacked_rows(svg, two_way, ordering.perm, Frame{margin, top, label_w + bars_w, body_h},
                      colors, options.show_scales, label_w);
    svg.close("g");

    // Box plot of color scores within each bar.
    if (with_box) {
        const auto& scores = *color_var.scores;
        double lo = *std::min_element(scores.begin(), scores.end());
        double hi = *std::max_element(scores.begin(), scores.end());
        if (hi - lo <= 0) {
            lo -= 0.5;
            hi += 0.5;
        }
        const double pad = 8;
        auto sx = [&](double s) { return box_x + pad + (s - lo) / (hi - lo) * (box_w - 2 * pad); };
        svg.open("g", {{"class", "panel"}, {"data-panel", "box"},
                       {"data-variable", color_var.name}});
        svg.text({{"x", px(box_x + box_w / 2)}, {"y", px(top - 26)}, {"text-anchor", "middle"}},
                 color_var.name + " score");
        svg.text({{"x", px(sx(lo))}, {"y", px(top - 10)}, {"text-anchor", "middle"}}, px(lo));
        svg.text({{"x", px(sx(hi))}, {"y", px(top - 10)}, {"text-anchor", "middle"}}, px(hi));
        for (std::size_t pos = 0; pos < n; ++pos) {
            const std::size_t i = ordering.perm[pos];
            const auto row = counts_of(two_way, i);
            const double cy = top + (static_cast<double>(pos) + 0.5) * row_h;
            const double bh = row_h * 0.5;
            if (std::accumulate(row.begin(), row.end(), Count{0}) == 0) {
                svg.text({{"class", "no-data"}, {"x", px(box_x + box_w / 2)}, {"y", px(cy + 4)},
                          {"text-anchor", "middle"}, {"fill", "#777777"}},
                         "no data");
                continue;
            }
            const auto b = box_stats(scores, row);
            svg.open("g", {{"class", "box"},
                           {"data-category", bar_var.categories[i]},
                           {"data-min", fmt::format("{}", b.min)},
                           {"data-q1", fmt::format("{}", b.q1)},
                           {"data-median", fmt::format("{}", b.median)},
                           {"data-q3", fmt::format("{}", b.q3)},
                           {"data-max", fmt::format("{}", b.max)}});
            svg.element("line", {{"class", "whisker"}, {"x1", px(sx(b.min))}, {"y1", px(cy)},
                                 {"x2", px(sx(b.max))}, {"y2", px(cy)}, {"stroke", "#333333"}});
            svg.element("rect", {{"x", px(sx(b.q1))}, {"y", px(cy - bh / 2)},
                                 {"width", px(sx(b.q3) - sx(b.q1))}, {"height", px(bh)},
                                 {"fill", "#dddddd"}, {"stroke", "#333333"}});
            svg.element("line", {{"class", "median"}, {"x1", px(sx(b.median))},
                                 {"y1", px(cy - bh / 2)}, {"x2", px(sx(b.median))},
                                 {"y2", px(cy + bh / 2)}, {"stroke", "#000000"},
                                 {"stroke-width", "2"}});
            svg.close("g");
        }
        svg.close("g");
    }

    // Residual grid.
    svg.open("g", {{"class", "panel"}, {"data-panel", "residuals"},
                   {"data-clip", fmt::format("{}", kResidualClip)}});
    const double cell_w = res_w / static_cast<double>(m);
    for (std::size_t j = 0; j < m; ++j) {
        const double cx = res_x + (static_cast<double>(j) + 0.5) * cell_w;
        svg.text({{"class", "column-label"}, {"x", px(cx)}, {"y", px(top - 6)},
                  {"text-anchor", "start"},
                  {"transform", "rotate(-30 " + px(cx) + " " + px(top - 6) + ")"}},
                 color_var.categories[j]);
    }
    if (two_way.total() == 0) {
        svg.text({{"class", "no-data"}, {"x", px(res_x + res_w / 2)}, {"y", px(top + body_h / 2)},
                  {"text-anchor", "middle"}, {"fill", "#777777"}},
                 "no data");
    } else {
        const auto residuals = pearson_residuals(two_way);
        for (std::size_t pos = 0; pos < n; ++pos) {
            const std::size_t i = ordering.perm[pos];
            const double y = top + static_cast<double>(pos) * row_h + row_h * 0.05;
            for (std::size_t j = 0; j < m; ++j) {
                const double r = residuals[i][j];
                svg.open("rect", {{"class", "cell"},
                                  {"data-category", bar_var.categories[i]},
                                  {"data-color", color_var.categories[j]},
                                  {"data-r", fmt::format("{}", r)},
                                  {"x", px(res_x + static_cast<double>(j) * cell_w)},
                                  {"y", px(y)},
                                  {"width", px(cell_w)},
                                  {"height", px(row_h * 0.9)},
                                  {"fill", residual_fill(r)},
                                  {"stroke", "#ffffff"}});
                svg.element_with_text("title", {},
                                      bar_var.categories[i] + " / " + color_var.categories[j] +
                                          ": residual " + fmt::format("{:.2f}", r));
                svg.close("rect");
            }
        }
    }
    svg.close("g");

    if (!with_box) {
        svg.text({{"class", "note"}, {"x", px(margin)}, {"y", px(H - 30)}, {"fill", "#555555"}},
                 "Box plot omitted: '" + color_var.name + "' has no ordinal scores.");
    }
    draw_legend(svg, color_var, colors, margin, H - 18, W - 2 * margin);
    return SvgDoc{std::move(svg).finish(), options.width_px, options.height_px};
}

auto render_multipanel3(const FreqTable& table, std::string_view bar_variable,
                        std::string_view color_variable, std::string_view panel_variable,
                        const PlotOptions& options) -> SvgDoc {
    require_rank(table, 3, "render_multipanel3");
    check_size(options);
    if (bar_variable == color_variable || bar_variable == panel_variable ||
        color_variable == panel_variable) {
        throw Error("InvalidArgument", "bar, color and panel variables must be distinct");
    }
    const std::array<std::string, 3> axes{std::string(panel_variable), std::string(bar_variable),
                                          std::string(color_variable)};
    const FreqTable cube = permute_axes(table, axes);
    const auto colors = palette_colors(options.palette);
    const auto& panel_var = cube.variable(0);
    const auto& bar_var = cube.variable(1);
    const auto& color_var = cube.variable(2);
    const auto ordering = bar_ordering(cube, bar_var.name, color_var.name);

    const std::size_t p = panel_var.size();
    const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(p))));
    const std::size_t rows = (p + cols - 1) / cols;
    const double W = options.width_px;
    const double H = options.height_px;
    const double margin = 14;
    const double top = 56;
    const double bottom = 36;
    const double gap = 18;
    const double cell_w = (W - 2 * margin - gap * static_cast<double>(cols - 1)) /
                          static_cast<double>(cols);
    const double cell_h = (H - top - bottom - gap * static_cast<double>(rows - 1)) /
                          static_cast<double>(rows);
    const double label_w = std::min(110.0, cell_w * 0.3);

    const std::string title = title_or(
        options, color_var.name + " by " + bar_var.name + ", per " + panel_var.name);
    SvgWriter svg(options.width_px, options.height_px, "multipanel3", title);
    svg.text({{"class", "plot-title"}, {"x", px(W / 2)}, {"y", "20"}, {"text-anchor", "middle"},
              {"font-size", "15"}},
             title);

    const auto panel_totals = cube.axis_totals(0);
    const std::size_t slice = bar_var.size() * color_var.size();
    for (std::size_t k = 0; k < p; ++k) {
        const double fx = margin + static_cast<double>(k % cols) * (cell_w + gap);
        const double fy = top + static_cast<double>(k / cols) * (cell_h + gap);
        svg.open("g", {{"class", "panel"},
                       {"data-panel", "sub"},
                       {"data-variable", panel_var.name},
                       {"data-category", panel_var.categories[k]},
                       {"data-order", join(ordering.perm)}});
        svg.text({{"class", "panel-title"}, {"x", px(fx + cell_w / 2)}, {"y", px(fy + 10)},
                  {"text-anchor", "middle"}, {"font-weight", "bold"}},
                 panel_var.name + " = " + panel_var.categories[k] + " (n = " +
                     std::to_string(panel_totals[k]) + ")");
        if (panel_totals[k] == 0) {
            svg.text({{"class", "no-data"}, {"x", px(fx + cell_w / 2)}, {"y", px(fy + cell_h / 2)},
                      {"text-anchor", "middle"}, {"fill", "#777777"}},
                     "no data");
        } else {
            const auto all = cube.counts();
            std::vector<Count> sub(all.begin() + static_cast<std::ptrdiff_t>(k * slice),
                                   all.begin() + static_cast<std::ptrdiff_t>((k + 1) * slice));
            const FreqTable two_way(Schema{{bar_var, color_var}}, std::move(sub));
            draw_percent_axis(svg, fx + label_w, cell_w - label_w, fy + 24);
            draw_stacked_rows(svg, two_way, ordering.perm,
                              Frame{fx, fy + 30, cell_w, cell_h - 30}, colors,
                              options.show_scales, label_w);
        }
        svg.close("g");
    }
    draw_legend(svg, color_var, colors, margin, H - 20, W - 2 * margin);
    return SvgDoc{std::move(svg).finish(), options.width_px, options.height_px};
}

auto render_plot(const FreqTable& table, PlotSpec& spec) -> SvgDoc {
    if (spec.variables.empty() || spec.variables.size() > 3) {
        throw Error("WrongArity", "plots take 1 to 3 variables",
                    {{"rank", spec.variables.size()}});
    }
    if (plot_kind_for_arity(spec.variables.size()) != spec.kind) {
        throw Error("WrongArity", "plot kind does not match the number of variables");
    }
    const auto sub = marginalize(table, spec.variables);
    switch (spec.kind) {
        case PlotKind::bar1:
            spec.ordering = order_by_count(sub);
            return render_bar1(sub, spec.options);
        case PlotKind::panel2:
            spec.ordering = bar_ordering(sub, spec.variables[0], spec.variables[1]);
            return render_panel2(sub, spec.variables[0], spec.options);
        case PlotKind::multipanel3:
            spec.ordering = bar_ordering(sub, spec.variables[0], spec.variables[1]);
            return render_multipanel3(sub, spec.variables[0], spec.variables[1],
                                      spec.variables[2], spec.options);
    }
    throw Error("WrongArity", "unhandled plot kind");
}

void to_json(nlohmann::json& j, const PlotOptions& o) {
    j = nlohmann::json{{"width_px", o.width_px},
                       {"height_px", o.height_px},
                       {"palette", o.palette},
                       {"show_scales", o.show_scales},
                       {"title", o.title}};
}

void from_json(const nlohmann::json& j, PlotOptions& o) {
    const PlotOptions defaults;
    o.width_px = j.value("width_px", defaults.width_px);
    o.height_px = j.value("height_px", defaults.height_px);
    o.palette = j.value("palette", defaults.palette);
    o.show_scales = j.value("show_scales", defaults.show_scales);
    o.title = j.value("title", defaults.title);
}

void to_json(nlohmann::json& j, const PlotSpec& s) {
    j = nlohmann::json{{"kind", to_string(s.kind)},
                       {"dataset", s.dataset},
                       {"variables", s.variables},
                       {"options", s.options}};
    if (s.ordering) {
        j["ordering"] = *s.ordering;
    }
}

void from_json(const nlohmann::json& j, PlotSpec& s) {
    s.variables = j.at("variables").get<std::vector<std::string>>();
    s.dataset = j.value("dataset", std::string{});
    s.kind = j.contains("kind") ? [&] {
        const auto k = j.at("kind").get<std::string>();
        if (k == "bar1") return PlotKind::bar1;
        if (k == "panel2") return PlotKind::panel2;
        if (k == "multipanel3") return PlotKind::multipanel3;
        throw Error("InvalidArgument", "unknown plot kind '" + k + "'");
    }()
                                : plot_kind_for_arity(s.variables.size());
    s.options = j.value("options", PlotOptions{});
    s.ordering.reset();
}

void to_json(nlohmann::json& j, const BoxStats& b) {
    j = nlohmann::json{{"min", b.min}, {"q1", b.q1}, {"median", b.median},
                       {"q3", b.q3},   {"max", b.max}, {"n", b.n}};
}

}  // namespace watson
