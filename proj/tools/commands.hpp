#pragma once

#include "watson/knn.hpp"
#include "watson/plots.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace watson::cli {

namespace fs = std::filesystem;

struct DatasetInput {
    fs::path data;
    std::optional<fs::path> codebook;
    char delimiter = ',';
    std::size_t max_categories = kDefaultMaxCategories;
};

struct BuildOptions {
    DatasetInput input;
    std::optional<fs::path> out;  // serialized table
};

struct PlotsOptions {
    DatasetInput input;
    fs::path out_dir;
    std::vector<std::string> vars;  // empty: whole library
    PlotOptions plot;
};

struct QuestionsOptions {
    DatasetInput input;
    std::vector<std::string> vars;
    std::optional<std::string> bar_var;
    std::size_t max_q = 5;
};

struct RecommendOptions {
    fs::path cohort;
    fs::path schema;
    fs::path patient;
    knn::RecommendParams params;
};

struct ServeOptions {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::optional<fs::path> data_dir;
};

struct SynthOptions {
    std::string kind = "survey";
    std::size_t size = 30000;
    std::uint64_t seed = 7;
    fs::path out_dir = ".";
};

/// Reads, infers, applies the codebook and tallies. Reports build time to `err`.
[[nodiscard]] auto load_table(const DatasetInput& input, std::ostream& err) -> FreqTable;

/// `<dataset>_<vars>_<kind>.svg` with unsafe characters replaced.
[[nodiscard]] auto plot_file_name(std::string_view dataset, const std::vector<std::string>& vars,
                                  PlotKind kind) -> std::string;

/// Every plot spec the library contains for `table`: one bar1 per variable,
/// one panel2 per unordered pair (bar = fewer categories).
[[nodiscard]] auto library_specs(const FreqTable& table) -> std::vector<PlotSpec>;

// Each command writes results to `out`, diagnostics to `err`, and returns the
// process exit code.
auto cmd_build(const BuildOptions& options, std::ostream& out, std::ostream& err) -> int;
auto cmd_plots(const PlotsOptions& options, std::ostream& out, std::ostream& err) -> int;
auto cmd_questions(const QuestionsOptions& options, std::ostream& out, std::ostream& err) -> int;
auto cmd_recommend(const RecommendOptions& options, std::ostream& out, std::ostream& err) -> int;
auto cmd_serve(const ServeOptions& options, std::ostream& err) -> int;
auto cmd_synth(const SynthOptions& options, std::ostream& out, std::ostream& err) -> int;

/// Writes to a sibling temp file, then renames over `path`.
void write_file_atomic(const fs::path& path, std::string_view contents);
[[nodiscard]] auto read_file(const fs::path& path) -> std::string;

}  // namespace watson::cli
