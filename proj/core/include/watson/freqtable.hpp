#pragma once

#include "watson/ingest.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace watson {

using Count = std::uint64_t;

/// Dense k-dimensional count tensor over a schema's category axes, stored
/// row-major (last axis fastest). Immutable once constructed; every
/// operation below returns a new table.
class FreqTable {
public:
    /// Throws Error{"ShapeMismatch"} when counts.size() is not the product of
    /// the category counts.
    FreqTable(Schema schema, std::vector<Count> counts);

    [[nodiscard]] static auto zeros(Schema schema) -> FreqTable;

    [[nodiscard]] auto schema() const noexcept -> const Schema& { return schema_; }
    [[nodiscard]] auto rank() const noexcept -> std::size_t { return extents_.size(); }
    [[nodiscard]] auto extent(std::size_t axis) const -> std::size_t { return extents_.at(axis); }
    [[nodiscard]] auto extents() const noexcept -> std::span<const std::size_t> { return extents_; }
    [[nodiscard]] auto strides() const noexcept -> std::span<const std::size_t> { return strides_; }
    [[nodiscard]] auto counts() const noexcept -> std::span<const Count> { return counts_; }
    [[nodiscard]] auto total() const noexcept -> Count { return total_; }
    [[nodiscard]] auto cell_count() const noexcept -> std::size_t { return counts_.size(); }

    [[nodiscard]] auto at(std::span<const std::size_t> index) const -> Count;
    [[nodiscard]] auto at(std::initializer_list<std::size_t> index) const -> Count {
        return at(std::span<const std::size_t>(index.begin(), index.size()));
    }

    /// Axis position of a variable; throws Error{"UnknownVariable"}.
    [[nodiscard]] auto axis_of(std::string_view name) const -> std::size_t;
    [[nodiscard]] auto variable(std::size_t axis) const -> const Variable& {
        return schema_.variables.at(axis);
    }

    /// Sum of counts per category of one axis.
    [[nodiscard]] auto axis_totals(std::size_t axis) const -> std::vector<Count>;

    friend auto operator==(const FreqTable&, const FreqTable&) -> bool = default;

private:
    Schema schema_;
    std::vector<Count> counts_;
    std::vector<std::size_t> extents_;
    std::vector<std::size_t> strides_;
    Count total_ = 0;
};

/// Within-bar composition of a 2-variable table.
struct ProportionMatrix {
    std::string bar_variable;
    std::string color_variable;
    std::vector<std::string> bar_labels;
    std::vector<std::string> color_labels;
    std::vector<std::vector<double>> rows;
    std::vector<Count> bar_totals;

    [[nodiscard]] auto bar_count() const noexcept -> std::size_t { return rows.size(); }
};

/// Tallies records whose columns are matched to schema variables by name.
/// Empty cells count as the "(missing)" category.
/// Errors: UnknownVariable (no such column), UnknownCategory.
[[nodiscard]] auto build_table(const RecordSet& records, const Schema& schema) -> FreqTable;

/// Sums over every axis not in `keep`; kept axes stay in the table's order.
[[nodiscard]] auto marginalize(const FreqTable& table, std::span<const std::string> keep)
    -> FreqTable;

[[nodiscard]] auto permute_axes(const FreqTable& table, std::span<const std::string> order)
    -> FreqTable;

/// Sums the slices of `categories` into one slice named `new_label`, placed
/// where the earliest of them sat. When the variable carries scores the merged
/// score is the count-weighted mean of the merged scores (plain mean if they
/// are all empty).
[[nodiscard]] auto merge_categories(const FreqTable& table, std::string_view variable,
                                    std::span<const std::string> categories,
                                    std::string_view new_label) -> FreqTable;

[[nodiscard]] auto remove_category(const FreqTable& table, std::string_view variable,
                                   std::string_view category) -> FreqTable;

/// Appends an empty category. A scored variable gives it max(score) + 1
/// unless `score` is supplied.
[[nodiscard]] auto add_category(const FreqTable& table, std::string_view variable,
                                std::string_view label, std::optional<double> score = std::nullopt)
    -> FreqTable;

[[nodiscard]] auto proportions(const FreqTable& table, std::string_view bar_variable)
    -> ProportionMatrix;

/// `{variables:[{name, categories, scores?}], counts:[row-major]}`
void to_json(nlohmann::json& j, const FreqTable& table);
[[nodiscard]] auto table_from_json(const nlohmann::json& j) -> FreqTable;

}  // namespace watson
