#include "commands.hpp"

#include "watson/error.hpp"
#include "watson/questions.hpp"
#include "watson/server.hpp"
#include "watson/synth.hpp"

#include <fmt/format.h>

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

namespace watson::cli {

namespace {

using Clock = std::chrono::steady_clock;

auto elapsed_ms(Clock::time_point since) -> double {
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

// Runs a command body; library errors become "error: <Code>: message" and exit 2.
template <typename Fn>
auto run(std::ostream& err, Fn&& fn) -> int {
    try {
        return fn();
    } catch (const Error& e) {
        err << "error: " << e.code() << ": " << e.what();
        if (!e.detail().is_null()) {
            err << " " << e.detail().dump();
        }
        err << "\n";
        return 2;
    } catch (const nlohmann::json::exception& e) {
        err << "error: InvalidJson: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

auto read_json(const fs::path& path) -> nlohmann::json {
    auto parsed = nlohmann::json::parse(read_file(path), nullptr, false);
    if (parsed.is_discarded()) {
        throw Error("InvalidJson", path.string() + " is not valid JSON", {{"path", path.string()}});
    }
    return parsed;
}

auto sanitize(std::string_view text) -> std::string {
    std::string out;
    for (const char ch : text) {
        const bool safe = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') ||
                          (ch >= '0' && ch <= '9') || ch == '_' || ch == '.' || ch == '-';
        out.push_back(safe ? ch : '_');
    }
    return out;
}

}  // namespace

auto read_file(const fs::path& path) -> std::string {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("FileNotFound", "cannot read " + path.string(), {{"path", path.string()}});
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error("WriteFailed", "cannot write " + tmp.string(), {{"path", tmp.string()}});
        }
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) {
            throw Error("WriteFailed", "short write to " + tmp.string(), {{"path", tmp.string()}});
        }
    }
    fs::rename(tmp, path);
}

auto load_table(const DatasetInput& input, std::ostream& err) -> FreqTable {
    const auto start = Clock::now();
    const auto text = read_file(input.data);
    const auto records = parse_csv(text, CsvConfig{input.delimiter, true});
    auto schema = infer_schema(records, input.max_categories);
    if (input.codebook) {
        schema = apply_codebook(std::move(schema), read_json(*input.codebook));
    }
    auto table = build_table(records, schema);
    err << fmt::format("table: {} records x {} variables -> {} cells in {:.1f} ms\n",
                       records.rows.size(), records.column_names.size(), table.cell_count(),
                       elapsed_ms(start));
    return table;
}

auto plot_file_name(std::string_view dataset, const std::vector<std::string>& vars, PlotKind kind)
    -> std::string {
    std::string joined;
    for (std::size_t i = 0; i < vars.size(); ++i) {
        if (i > 0) {
            joined += '-';
        }
        joined += sanitize(vars[i]);
    }
    return fmt::format("{}_{}_{}.svg", sanitize(dataset), joined, to_string(kind));
}

auto library_specs(const FreqTable& table) -> std::vector<PlotSpec> {
    std::vector<PlotSpec> specs;
    for (std::size_t a = 0; a < table.rank(); ++a) {
        PlotSpec s;
        s.kind = PlotKind::bar1;
        s.variables = {table.variable(a).name};
        specs.push_back(std::move(s));
    }
    for (std::size_t a = 0; a < table.rank(); ++a) {
        for (std::size_t b = a + 1; b < table.rank(); ++b) {
            PlotSpec s;
            s.kind = PlotKind::panel2;
            // Fewer categories make the bars; ties keep schema order.
            if (table.extent(b) < table.extent(a)) {
                s.variables = {table.variable(b).name, table.variable(a).name};
            } else {
                s.variables = {table.variable(a).name, table.variable(b).name};
            }
            specs.push_back(std::move(s));
        }
    }
    return specs;
}

auto cmd_build(const BuildOptions& options, std::ostream& out, std::ostream& err) -> int {
    return run(err, [&] {
        const auto table = load_table(options.input, err);
        const auto raw_cells = static_cast<std::size_t>(table.total()) * table.rank();
        if (options.out) {
            write_file_atomic(*options.out, nlohmann::json(table).dump() + "\n");
        }
        nlohmann::json summary{
            {"variables", table.rank()},
            {"records", table.total()},
            {"cells", table.cell_count()},
            {"raw_cells", raw_cells},
            {"compression", table.cell_count() == 0
                                ? 0.0
                                : static_cast<double>(raw_cells) /
                                      static_cast<double>(table.cell_count())},
        };
        out << summary.dump(2) << "\n";
        return 0;
    });
}

auto cmd_plots(const PlotsOptions& options, std::ostream& out, std::ostream& err) -> int {
    return run(err, [&] {
        const auto table = load_table(options.input, err);
        const std::string dataset = options.input.data.stem().string();
        std::vector<PlotSpec> specs;
        if (options.vars.empty()) {
            specs = library_specs(table);
        } else {
            PlotSpec s;
            s.variables = options.vars;
            s.kind = plot_kind_for_arity(s.variables.size());
            specs.push_back(std::move(s));
        }
        fs::create_directories(options.out_dir);
        for (auto& spec : specs) {
            spec.dataset = dataset;
            spec.options = options.plot;
            const auto start = Clock::now();
            const auto svg = render_plot(table, spec);
            const auto name = plot_file_name(dataset, spec.variables, spec.kind);
            write_file_atomic(options.out_dir / name, svg.xml);
            std::string vars;
            for (std::size_t i = 0; i < spec.variables.size(); ++i) {
                vars += (i > 0 ? "," : "") + spec.variables[i];
            }
            out << name << '\t' << to_string(spec.kind) << '\t' << vars << '\n';
            err << fmt::format("{}: {:.1f} ms\n", name, elapsed_ms(start));
        }
        return 0;
    });
}

auto cmd_questions(const QuestionsOptions& options, std::ostream& out, std::ostream& err) -> int {
    return run(err, [&] {
        if (options.vars.size() != 2) {
            throw Error("WrongArity", "questions need exactly two variables",
                        {{"rank", options.vars.size()}});
        }
        const auto table = load_table(options.input, err);
        const auto two_way = marginalize(table, options.vars);
        QuestionConfig config;
        config.max_questions = options.max_q;
        const auto bar = options.bar_var.value_or(options.vars.front());
        const auto questions = generate_questions(two_way, bar, config);
        out << nlohmann::json(questions).dump(2) << "\n";
        return 0;
    });
}

auto cmd_recommend(const RecommendOptions& options, std::ostream& out, std::ostream& err) -> int {
    return run(err, [&] {
        const auto schema = knn::parse_feature_schema(read_json(options.schema));
        const auto cohort = knn::load_cohort(read_file(options.cohort), schema);
        const auto patient = knn::parse_patient(read_json(options.patient), cohort.schema);
        const auto rec = knn::recommend(cohort, patient, options.params);
        out << nlohmann::json(rec).dump(2) << "\n";
        return 0;
    });
}

auto cmd_serve(const ServeOptions& options, std::ostream& err) -> int {
    return run(err, [&] {
        server::Registry registry(options.data_dir);
        registry.load_snapshots();
        return server::serve(options.host, options.port, registry);
    });
}

auto cmd_synth(const SynthOptions& options, std::ostream& out, std::ostream& err) -> int {
    return run(err, [&] {
        fs::create_directories(options.out_dir);
        std::vector<std::pair<fs::path, std::string>> files;
        if (options.kind == "survey") {
            const auto data = synth::make_survey(options.size, options.seed);
            files = {{options.out_dir / "survey.csv", data.csv},
                     {options.out_dir / "survey_codebook.json", data.codebook.dump(2) + "\n"},
                     {options.out_dir / "survey_truth.json", data.truth.dump(2) + "\n"}};
        } else if (options.kind == "cohort") {
            const auto data = synth::make_cohort(options.size, options.seed);
            files = {{options.out_dir / "cohort.csv", data.csv},
                     {options.out_dir / "cohort_schema.json", data.schema.dump(2) + "\n"},
                     {options.out_dir / "cohort_truth.json", data.truth.dump(2) + "\n"}};
        } else {
            throw Error("InvalidKind", "synth kind must be 'survey' or 'cohort'",
                        {{"kind", options.kind}});
        }
        for (const auto& [path, contents] : files) {
            write_file_atomic(path, contents);
            out << path.filename().string() << '\n';
        }
        return 0;
    });
}

}  // namespace watson::cli
