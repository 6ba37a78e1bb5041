#include "watson/ingest.hpp"

#include "watson/error.hpp"

#include <cmath>
#include <unordered_map>
#include <unordered_set>

namespace watson {

namespace {

// Returns the byte offset of the first invalid sequence, or npos.
auto find_invalid_utf8(std::string_view text) -> std::size_t {
    std::size_t i = 0;
    while (i < text.size()) {
        const auto lead = static_cast<unsigned char>(text[i]);
        std::size_t len = 0;
        std::uint32_t cp = 0;
        if (lead < 0x80) {
            ++i;
            continue;
        } else if ((lead & 0xE0) == 0xC0) {
            len = 2;
            cp = lead & 0x1F;
        } else if ((lead & 0xF0) == 0xE0) {
            len = 3;
            cp = lead & 0x0F;
        } else if ((lead & 0xF8) == 0xF0) {
            len = 4;
            cp = lead & 0x07;
        } else {
            return i;
        }
        if (i + len > text.size()) {
            return i;
        }
        for (std::size_t k = 1; k < len; ++k) {
            const auto cont = static_cast<unsigned char>(text[i + k]);
            if ((cont & 0xC0) != 0x80) {
                return i;
            }
            cp = (cp << 6) | (cont & 0x3F);
        }
        const bool overlong = (len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) ||
                              (len == 4 && cp < 0x10000);
        if (overlong || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
            return i;
        }
        i += len;
    }
    return std::string_view::npos;
}

auto split_records(std::string_view input, char delim) -> std::vector<std::vector<std::string>> {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> current;
    std::string field;
    bool in_quotes = false;
    bool field_was_quoted = false;
    std::size_t line = 1;

    auto end_field = [&] {
        current.push_back(std::move(field));
        field.clear();
        field_was_quoted = false;
    };
    auto end_record = [&] {
        end_field();
        records.push_back(std::move(current));
        current.clear();
    };

    for (std::size_t i = 0; i < input.size(); ++i) {
        const char ch = input[i];
        if (in_quotes) {
            if (ch == '"') {
                if (i + 1 < input.size() && input[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (ch == '\n') {
                    ++line;
                }
                field.push_back(ch);
            }
            continue;
        }
        if (ch == '"') {
            if (!field.empty() || field_was_quoted) {
                throw Error("MalformedQuote", "unexpected quote inside unquoted field",
                            {{"line", line}});
            }
            in_quotes = true;
            field_was_quoted = true;
        } else if (ch == delim) {
            end_field();
        } else if (ch == '\r' && i + 1 < input.size() && input[i + 1] == '\n') {
            continue;
        } else if (ch == '\n') {
            end_record();
            ++line;
        } else {
            if (field_was_quoted) {
                throw Error("MalformedQuote", "characters after closing quote", {{"line", line}});
            }
            field.push_back(ch);
        }
    }
    if (in_quotes) {
        throw Error("MalformedQuote", "unterminated quoted field", {{"line", line}});
    }
    // A trailing terminator does not open a new record.
    if (!field.empty() || field_was_quoted || !current.empty()) {
        end_record();
    }
    return records;
}

auto needs_quoting(std::string_view cell, char delim) -> bool {
    for (const char ch : cell) {
        if (ch == delim || ch == '"' || ch == '\n' || ch == '\r') {
            return true;
        }
    }
    return false;
}

}  // namespace

auto RecordSet::column_index(std::string_view name) const -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < column_names.size(); ++i) {
        if (column_names[i] == name) {
            return i;
        }
    }
    return std::nullopt;
}

auto Variable::category_index(std::string_view label) const -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < categories.size(); ++i) {
        if (categories[i] == label) {
            return i;
        }
    }
    return std::nullopt;
}

auto Schema::variable_index(std::string_view name) const -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < variables.size(); ++i) {
        if (variables[i].name == name) {
            return i;
        }
    }
    return std::nullopt;
}

auto Schema::variable(std::string_view name) const -> const Variable& {
    const auto idx = variable_index(name);
    if (!idx) {
        throw Error("UnknownVariable", "unknown variable '" + std::string(name) + "'",
                    {{"variable", name}});
    }
    return variables[*idx];
}

void validate_schema(const Schema& schema) {
    std::unordered_set<std::string> names;
    for (const auto& var : schema.variables) {
        if (!names.insert(var.name).second) {
            throw Error("DuplicateVariable", "duplicate variable '" + var.name + "'",
                        {{"variable", var.name}});
        }
        std::unordered_set<std::string> labels;
        for (const auto& label : var.categories) {
            if (!labels.insert(label).second) {
                throw Error("DuplicateLabel",
                            "duplicate category '" + label + "' in variable '" + var.name + "'",
                            {{"variable", var.name}, {"category", label}});
            }
        }
        if (var.scores) {
            if (var.scores->size() != var.categories.size()) {
                throw Error("InvalidScores", "score count differs from category count",
                            {{"variable", var.name}});
            }
            for (const double s : *var.scores) {
                if (!std::isfinite(s)) {
                    throw Error("InvalidScores", "non-finite score", {{"variable", var.name}});
                }
            }
        }
    }
}

auto parse_csv(std::string_view input, const CsvConfig& config) -> RecordSet {
    if (const auto bad = find_invalid_utf8(input); bad != std::string_view::npos) {
        throw Error("EncodingError", "input is not valid UTF-8", {{"offset", bad}});
    }
    // Byte-order mark.
    if (input.starts_with("\xEF\xBB\xBF")) {
        input.remove_prefix(3);
    }
    auto records = split_records(input, config.delimiter);
    if (records.empty()) {
        throw Error("EmptyInput", "input contains no columns");
    }

    RecordSet out;
    std::size_t first_data = 0;
    if (config.has_header) {
        out.column_names = std::move(records.front());
        first_data = 1;
    } else {
        out.column_names.reserve(records.front().size());
        for (std::size_t i = 0; i < records.front().size(); ++i) {
            out.column_names.push_back("col" + std::to_string(i + 1));
        }
    }
    const std::size_t width = out.column_names.size();
    out.rows.reserve(records.size() - first_data);
    for (std::size_t r = first_data; r < records.size(); ++r) {
        if (records[r].size() != width) {
            const std::size_t row = r - first_data;
            throw Error("RaggedRow",
                        "row " + std::to_string(row) + " has " +
                            std::to_string(records[r].size()) + " cells, expected " +
                            std::to_string(width),
                        {{"row", row}, {"cells", records[r].size()}, {"expected", width}});
        }
        out.rows.push_back(std::move(records[r]));
    }
    return out;
}

auto write_csv(const RecordSet& records, const CsvConfig& config) -> std::string {
    std::string out;
    auto write_row = [&](const std::vector<std::string>& row) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i > 0) {
                out.push_back(config.delimiter);
            }
            if (needs_quoting(row[i], config.delimiter)) {
                out.push_back('"');
                for (const char ch : row[i]) {
                    if (ch == '"') {
                        out.push_back('"');
                    }
                    out.push_back(ch);
                }
                out.push_back('"');
            } else {
                out.append(row[i]);
            }
        }
        out.push_back('\n');
    };
    if (config.has_header) {
        write_row(records.column_names);
    }
    for (const auto& row : records.rows) {
        write_row(row);
    }
    return out;
}

auto infer_schema(const RecordSet& records, std::size_t max_categories) -> Schema {
    if (records.column_names.empty()) {
        throw Error("EmptyInput", "record set has no columns");
    }
    Schema schema;
    schema.variables.reserve(records.column_names.size());
    for (std::size_t c = 0; c < records.column_names.size(); ++c) {
        Variable var{records.column_names[c], {}, std::nullopt};
        std::unordered_set<std::string_view> seen;
        for (const auto& row : records.rows) {
            const auto label = normalize_cell(row[c]);
            if (seen.insert(label).second) {
                var.categories.emplace_back(label);
                if (var.categories.size() > max_categories) {
                    throw Error("TooManyCategories",
                                "column '" + var.name + "' has more than " +
                                    std::to_string(max_categories) + " distinct values",
                                {{"variable", var.name}, {"max_categories", max_categories}});
                }
            }
        }
        schema.variables.push_back(std::move(var));
    }
    validate_schema(schema);
    return schema;
}

auto apply_codebook(Schema schema, const nlohmann::json& codebook) -> Schema {
    if (!codebook.is_object()) {
        throw Error("InvalidCodebook", "codebook must be a JSON object");
    }
    for (const auto& [name, entry] : codebook.items()) {
        const auto idx = schema.variable_index(name);
        if (!idx) {
            throw Error("UnknownVariable", "codebook names unknown variable '" + name + "'",
                        {{"variable", name}});
        }
        auto& var = schema.variables[*idx];
        if (!entry.is_object()) {
            throw Error("InvalidCodebook", "codebook entry must be an object", {{"variable", name}});
        }
        if (entry.contains("order")) {
            auto order = entry.at("order").get<std::vector<std::string>>();
            std::unordered_set<std::string> listed(order.begin(), order.end());
            for (const auto& existing : var.categories) {
                if (!listed.contains(existing)) {
                    throw Error("InvalidCodebook",
                                "codebook order for '" + name + "' omits category '" + existing +
                                    "'",
                                {{"variable", name}, {"category", existing}});
                }
            }
            var.categories = std::move(order);
            var.scores.reset();
        }
        if (entry.contains("scores")) {
            var.scores = entry.at("scores").get<std::vector<double>>();
        }
    }
    validate_schema(schema);
    return schema;
}

void to_json(nlohmann::json& j, const Variable& v) {
    j = nlohmann::json{{"name", v.name}, {"categories", v.categories}};
    if (v.scores) {
        j["scores"] = *v.scores;
    }
}

void from_json(const nlohmann::json& j, Variable& v) {
    v.name = j.at("name").get<std::string>();
    v.categories = j.at("categories").get<std::vector<std::string>>();
    if (j.contains("scores") && !j.at("scores").is_null()) {
        v.scores = j.at("scores").get<std::vector<double>>();
    } else {
        v.scores.reset();
    }
}

void to_json(nlohmann::json& j, const Schema& s) { j = nlohmann::json{{"variables", s.variables}}; }

void from_json(const nlohmann::json& j, Schema& s) {
    s.variables = j.at("variables").get<std::vector<Variable>>();
}

}  // namespace watson
