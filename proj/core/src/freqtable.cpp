#include "watson/freqtable.hpp"

#include "watson/error.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

namespace watson {

namespace {

auto product(std::span<const std::size_t> extents) -> std::size_t {
    return std::accumulate(extents.begin(), extents.end(), std::size_t{1}, std::multiplies<>{});
}

auto extents_of(const Schema& schema) -> std::vector<std::size_t> {
    std::vector<std::size_t> out;
    out.reserve(schema.variables.size());
    for (const auto& var : schema.variables) {
        out.push_back(var.size());
    }
    return out;
}

auto row_major_strides(std::span<const std::size_t> extents) -> std::vector<std::size_t> {
    std::vector<std::size_t> strides(extents.size(), 1);
    for (std::size_t a = extents.size(); a-- > 1;) {
        strides[a - 1] = strides[a] * extents[a];
    }
    return strides;
}

auto require_category(const Variable& var, std::string_view label) -> std::size_t {
    const auto idx = var.category_index(label);
    if (!idx) {
        throw Error("UnknownCategory",
                    "variable '" + var.name + "' has no category '" + std::string(label) + "'",
                    {{"variable", var.name}, {"category", label}});
    }
    return *idx;
}

// Rebuilds one axis: source category c lands in mapping[c] (or is dropped when
// mapping[c] is npos). Everything else about the table is untouched.
auto remap_axis(const FreqTable& table, std::size_t axis, std::span<const std::size_t> mapping,
                Variable replacement) -> FreqTable {
    Schema schema = table.schema();
    const std::size_t new_extent = replacement.size();
    schema.variables[axis] = std::move(replacement);

    const std::size_t stride = table.strides()[axis];
    const std::size_t extent = table.extent(axis);
    std::vector<Count> counts(product(extents_of(schema)), 0);
    const auto src = table.counts();
    for (std::size_t flat = 0; flat < src.size(); ++flat) {
        const std::size_t inner = flat % stride;
        const std::size_t mid = (flat / stride) % extent;
        const std::size_t outer = flat / (stride * extent);
        const std::size_t target = mapping[mid];
        if (target == std::string_view::npos) {
            continue;
        }
        counts[(outer * new_extent + target) * stride + inner] += src[flat];
    }
    return FreqTable(std::move(schema), std::move(counts));
}

auto resolve_axes(const FreqTable& table, std::span<const std::string> names)
    -> std::vector<std::size_t> {
    std::vector<std::size_t> axes;
    axes.reserve(names.size());
    for (const auto& name : names) {
        axes.push_back(table.axis_of(name));
    }
    return axes;
}

}  // namespace

FreqTable::FreqTable(Schema schema, std::vector<Count> counts)
    : schema_(std::move(schema)), counts_(std::move(counts)) {
    if (schema_.variables.empty()) {
        throw Error("EmptySchema", "a frequency table needs at least one variable");
    }
    validate_schema(schema_);
    extents_ = extents_of(schema_);
    strides_ = row_major_strides(extents_);
    if (counts_.size() != product(extents_)) {
        throw Error("ShapeMismatch",
                    "expected " + std::to_string(product(extents_)) + " cells, got " +
                        std::to_string(counts_.size()));
    }
    total_ = std::accumulate(counts_.begin(), counts_.end(), Count{0});
}

auto FreqTable::zeros(Schema schema) -> FreqTable {
    const auto cells = product(extents_of(schema));
    return FreqTable(std::move(schema), std::vector<Count>(cells, 0));
}

auto FreqTable::at(std::span<const std::size_t> index) const -> Count {
    if (index.size() != rank()) {
        throw Error("WrongArity", "index rank differs from table rank");
    }
    std::size_t flat = 0;
    for (std::size_t a = 0; a < index.size(); ++a) {
        if (index[a] >= extents_[a]) {
            throw Error("OutOfRange", "index out of range on axis " + std::to_string(a));
        }
        flat += index[a] * strides_[a];
    }
    return counts_[flat];
}

auto FreqTable::axis_of(std::string_view name) const -> std::size_t {
    const auto idx = schema_.variable_index(name);
    if (!idx) {
        throw Error("UnknownVariable", "table has no variable '" + std::string(name) + "'",
                    {{"variable", name}});
    }
    return *idx;
}

auto FreqTable::axis_totals(std::size_t axis) const -> std::vector<Count> {
    std::vector<Count> out(extent(axis), 0);
    const std::size_t stride = strides_[axis];
    const std::size_t ext = extents_[axis];
    for (std::size_t flat = 0; flat < counts_.size(); ++flat) {
        out[(flat / stride) % ext] += counts_[flat];
    }
    return out;
}

auto build_table(const RecordSet& records, const Schema& schema) -> FreqTable {
    const std::size_t k = schema.variables.size();
    std::vector<std::size_t> columns(k);
    std::vector<std::unordered_map<std::string_view, std::size_t>> lookup(k);
    for (std::size_t a = 0; a < k; ++a) {
        const auto& var = schema.variables[a];
        const auto col = records.column_index(var.name);
        if (!col) {
            throw Error("UnknownVariable", "no column named '" + var.name + "'",
                        {{"variable", var.name}});
        }
        columns[a] = *col;
        for (std::size_t c = 0; c < var.size(); ++c) {
            lookup[a].emplace(var.categories[c], c);
        }
    }

    FreqTable empty = FreqTable::zeros(schema);
    const auto strides = empty.strides();
    std::vector<Count> counts(empty.cell_count(), 0);
    for (std::size_t r = 0; r < records.rows.size(); ++r) {
        const auto& row = records.rows[r];
        std::size_t flat = 0;
        for (std::size_t a = 0; a < k; ++a) {
            const auto label = normalize_cell(row[columns[a]]);
            const auto it = lookup[a].find(label);
            if (it == lookup[a].end()) {
                throw Error("UnknownCategory",
                            "row " + std::to_string(r) + ": '" + std::string(label) +
                                "' is not a category of '" + schema.variables[a].name + "'",
                            {{"variable", schema.variables[a].name},
                             {"category", label},
                             {"row", r}});
            }
            flat += it->second * strides[a];
        }
        ++counts[flat];
    }
    return FreqTable(schema, std::move(counts));
}

auto marginalize(const FreqTable& table, std::span<const std::string> keep) -> FreqTable {
    if (keep.empty()) {
        throw Error("EmptyKeepList", "marginalize needs at least one variable to keep");
    }
    auto axes = resolve_axes(table, keep);
    std::sort(axes.begin(), axes.end());
    if (std::adjacent_find(axes.begin(), axes.end()) != axes.end()) {
        throw Error("DuplicateVariable", "keep list names a variable twice");
    }

    Schema schema;
    for (const auto a : axes) {
        schema.variables.push_back(table.variable(a));
    }
    const auto dst_strides = row_major_strides(extents_of(schema));
    // Destination stride contributed by each source axis (0 for dropped axes).
    std::vector<std::size_t> contribution(table.rank(), 0);
    for (std::size_t i = 0; i < axes.size(); ++i) {
        contribution[axes[i]] = dst_strides[i];
    }

    std::vector<Count> counts(product(extents_of(schema)), 0);
    const auto src = table.counts();
    const auto extents = table.extents();
    std::vector<std::size_t> index(table.rank(), 0);
    std::size_t dst = 0;
    for (std::size_t flat = 0; flat < src.size(); ++flat) {
        counts[dst] += src[flat];
        // Odometer increment, last axis fastest.
        for (std::size_t a = table.rank(); a-- > 0;) {
            if (++index[a] < extents[a]) {
                dst += contribution[a];
                break;
            }
            dst -= contribution[a] * (extents[a] - 1);
            index[a] = 0;
        }
    }
    return FreqTable(std::move(schema), std::move(counts));
}

auto permute_axes(const FreqTable& table, std::span<const std::string> order) -> FreqTable {
    if (order.size() != table.rank()) {
        throw Error("NotAPermutation", "order must name every variable exactly once");
    }
    std::vector<std::size_t> axes;
    try {
        axes = resolve_axes(table, order);
    } catch (const Error&) {
        throw Error("NotAPermutation", "order names a variable the table does not have");
    }
    {
        auto sorted = axes;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
            throw Error("NotAPermutation", "order names a variable twice");
        }
    }

    Schema schema;
    for (const auto a : axes) {
        schema.variables.push_back(table.variable(a));
    }
    const auto dst_strides = row_major_strides(extents_of(schema));
    std::vector<std::size_t> contribution(table.rank(), 0);
    for (std::size_t i = 0; i < axes.size(); ++i) {
        contribution[axes[i]] = dst_strides[i];
    }
    std::vector<Count> counts(table.cell_count(), 0);
    const auto src = table.counts();
    const auto src_strides = table.strides();
    const auto extents = table.extents();
    for (std::size_t flat = 0; flat < src.size(); ++flat) {
        std::size_t dst = 0;
        for (std::size_t a = 0; a < table.rank(); ++a) {
            dst += ((flat / src_strides[a]) % extents[a]) * contribution[a];
        }
        counts[dst] = src[flat];
    }
    return FreqTable(std::move(schema), std::move(counts));
}

auto merge_categories(const FreqTable& table, std::string_view variable,
                      std::span<const std::string> categories, std::string_view new_label)
    -> FreqTable {
    const std::size_t axis = table.axis_of(variable);
    const Variable& var = table.variable(axis);
    if (categories.size() < 2) {
        throw Error("InvalidArgument", "merging needs at least two categories",
                    {{"variable", var.name}});
    }
    std::vector<bool> merged(var.size(), false);
    for (const auto& label : categories) {
        const auto idx = require_category(var, label);
        if (merged[idx]) {
            throw Error("DuplicateLabel", "category '" + label + "' listed twice",
                        {{"variable", var.name}, {"category", label}});
        }
        merged[idx] = true;
    }
    if (const auto clash = var.category_index(new_label); clash && !merged[*clash]) {
        throw Error("DuplicateLabel",
                    "variable '" + var.name + "' already has a category '" +
                        std::string(new_label) + "'",
                    {{"variable", var.name}, {"category", new_label}});
    }

    const auto first = static_cast<std::size_t>(
        std::find(merged.begin(), merged.end(), true) - merged.begin());
    Variable replacement{var.name, {}, std::nullopt};
    std::vector<double> scores;
    std::vector<std::size_t> mapping(var.size());
    std::size_t merged_slot = 0;
    for (std::size_t c = 0; c < var.size(); ++c) {
        if (merged[c] && c != first) {
            mapping[c] = merged_slot;
            continue;
        }
        mapping[c] = replacement.categories.size();
        if (c == first) {
            merged_slot = mapping[c];
            replacement.categories.emplace_back(new_label);
        } else {
            replacement.categories.push_back(var.categories[c]);
        }
        if (var.scores) {
            scores.push_back((*var.scores)[c]);
        }
    }
    if (var.scores) {
        const auto totals = table.axis_totals(axis);
        double weighted = 0.0;
        double plain = 0.0;
        Count mass = 0;
        for (std::size_t c = 0; c < var.size(); ++c) {
            if (merged[c]) {
                weighted += static_cast<double>(totals[c]) * (*var.scores)[c];
                plain += (*var.scores)[c];
                mass += totals[c];
            }
        }
        scores[merged_slot] = mass > 0 ? weighted / static_cast<double>(mass)
                                       : plain / static_cast<double>(categories.size());
        replacement.scores = std::move(scores);
    }
    return remap_axis(table, axis, mapping, std::move(replacement));
}

auto remove_category(const FreqTable& table, std::string_view variable, std::string_view category)
    -> FreqTable {
    const std::size_t axis = table.axis_of(variable);
    const Variable& var = table.variable(axis);
    const std::size_t drop = require_category(var, category);
    if (var.size() < 2) {
        throw Error("LastCategory", "cannot remove the last category of '" + var.name + "'",
                    {{"variable", var.name}, {"category", category}});
    }
    Variable replacement{var.name, {}, std::nullopt};
    std::vector<double> scores;
    std::vector<std::size_t> mapping(var.size(), std::string_view::npos);
    for (std::size_t c = 0; c < var.size(); ++c) {
        if (c == drop) {
            continue;
        }
        mapping[c] = replacement.categories.size();
        replacement.categories.push_back(var.categories[c]);
        if (var.scores) {
            scores.push_back((*var.scores)[c]);
        }
    }
    if (var.scores) {
        replacement.scores = std::move(scores);
    }
    return remap_axis(table, axis, mapping, std::move(replacement));
}

auto add_category(const FreqTable& table, std::string_view variable, std::string_view label,
                  std::optional<double> score) -> FreqTable {
    const std::size_t axis = table.axis_of(variable);
    const Variable& var = table.variable(axis);
    if (var.category_index(label)) {
        throw Error("DuplicateLabel",
                    "variable '" + var.name + "' already has a category '" + std::string(label) +
                        "'",
                    {{"variable", var.name}, {"category", label}});
    }
    Variable replacement = var;
    replacement.categories.emplace_back(label);
    if (replacement.scores) {
        const auto& s = *replacement.scores;
        const double next = s.empty() ? 1.0 : *std::max_element(s.begin(), s.end()) + 1.0;
        replacement.scores->push_back(score.value_or(next));
    }
    std::vector<std::size_t> mapping(var.size());
    std::iota(mapping.begin(), mapping.end(), std::size_t{0});
    return remap_axis(table, axis, mapping, std::move(replacement));
}

auto proportions(const FreqTable& table, std::string_view bar_variable) -> ProportionMatrix {
    if (table.rank() != 2) {
        throw Error("WrongArity", "proportions needs a 2-variable table",
                    {{"rank", table.rank()}});
    }
    const std::size_t bar_axis = table.axis_of(bar_variable);
    const std::size_t color_axis = 1 - bar_axis;
    const Variable& bars = table.variable(bar_axis);
    const Variable& colors = table.variable(color_axis);

    ProportionMatrix out;
    out.bar_variable = bars.name;
    out.color_variable = colors.name;
    out.bar_labels = bars.categories;
    out.color_labels = colors.categories;
    out.rows.assign(bars.size(), std::vector<double>(colors.size(), 0.0));
    out.bar_totals.assign(bars.size(), 0);
    std::array<std::size_t, 2> index{};
    for (std::size_t i = 0; i < bars.size(); ++i) {
        index[bar_axis] = i;
        Count bar_total = 0;
        for (std::size_t j = 0; j < colors.size(); ++j) {
            index[color_axis] = j;
            bar_total += table.at(index);
        }
        out.bar_totals[i] = bar_total;
        if (bar_total == 0) {
            continue;
        }
        for (std::size_t j = 0; j < colors.size(); ++j) {
            index[color_axis] = j;
            out.rows[i][j] =
                static_cast<double>(table.at(index)) / static_cast<double>(bar_total);
        }
    }
    return out;
}

void to_json(nlohmann::json& j, const FreqTable& table) {
    j = nlohmann::json{{"variables", table.schema().variables},
                       {"counts", std::vector<Count>(table.counts().begin(), table.counts().end())}};
}

auto table_from_json(const nlohmann::json& j) -> FreqTable {
    try {
        Schema schema{j.at("variables").get<std::vector<Variable>>()};
        auto counts = j.at("counts").get<std::vector<Count>>();
        return FreqTable(std::move(schema), std::move(counts));
    } catch (const nlohmann::json::exception& e) {
        throw Error("InvalidTableJson", e.what());
    }
}

}  // namespace watson
