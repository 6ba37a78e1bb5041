#pragma once

#include <nlohmann/json.hpp>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace watson {

inline constexpr std::string_view kMissingLabel = "(missing)";
inline constexpr std::size_t kDefaultMaxCategories = 64;

struct CsvConfig {
    char delimiter = ',';
    bool has_header = true;
};

/// Raw delimited records. Every row has exactly column_names.size() cells.
struct RecordSet {
    std::vector<std::string> column_names;
    std::vector<std::vector<std::string>> rows;

    [[nodiscard]] auto column_index(std::string_view name) const -> std::optional<std::size_t>;
};

struct Variable {
    std::string name;
    std::vector<std::string> categories;
    std::optional<std::vector<double>> scores;

    [[nodiscard]] auto category_index(std::string_view label) const -> std::optional<std::size_t>;
    [[nodiscard]] auto size() const noexcept -> std::size_t { return categories.size(); }

    friend auto operator==(const Variable&, const Variable&) -> bool = default;
};

struct Schema {
    std::vector<Variable> variables;

    [[nodiscard]] auto variable_index(std::string_view name) const -> std::optional<std::size_t>;
    [[nodiscard]] auto variable(std::string_view name) const -> const Variable&;

    friend auto operator==(const Schema&, const Schema&) -> bool = default;
};

/// Throws Error{"DuplicateVariable" | "DuplicateLabel" | "InvalidScores"} when
/// the schema breaks its own invariants.
void validate_schema(const Schema& schema);

/// RFC-4180 parse: quoted fields may hold delimiters, doubled quotes and
/// newlines. CRLF and LF line endings are both accepted; a single trailing
/// line terminator is ignored.
///
/// Errors: EmptyInput, RaggedRow (detail.row is the 0-based data row),
/// EncodingError (invalid UTF-8), MalformedQuote.
[[nodiscard]] auto parse_csv(std::string_view input, const CsvConfig& config = {}) -> RecordSet;

/// Inverse of parse_csv up to quoting normalization.
[[nodiscard]] auto write_csv(const RecordSet& records, const CsvConfig& config = {}) -> std::string;

/// Empty cells map to this label everywhere a cell is read as a category.
[[nodiscard]] inline auto normalize_cell(std::string_view cell) -> std::string_view {
    return cell.empty() ? kMissingLabel : cell;
}

/// One variable per column, categories in first-appearance order.
[[nodiscard]] auto infer_schema(const RecordSet& records,
                                std::size_t max_categories = kDefaultMaxCategories) -> Schema;

/// Applies a codebook `{"var": {"order": [...], "scores": [...]}}`. The order
/// list must contain every category already present; extra labels become
/// zero-count categories.
[[nodiscard]] auto apply_codebook(Schema schema, const nlohmann::json& codebook) -> Schema;

void to_json(nlohmann::json& j, const Variable& v);
void from_json(const nlohmann::json& j, Variable& v);
void to_json(nlohmann::json& j, const Schema& s);
void from_json(const nlohmann::json& j, Schema& s);

}  // namespace watson
