#include "commands.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <sstream>

namespace {

auto split_vars(const std::string& text) -> std::vector<std::string> {
    std::vector<std::string> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

void add_dataset_flags(CLI::App* cmd, watson::cli::DatasetInput& input) {
    cmd->add_option("--data", input.data, "Delimited record file with a header row")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--codebook", input.codebook, "JSON codebook (category order, scores)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--delimiter", input.delimiter, "Field delimiter");
    cmd->add_option("--max-categories", input.max_categories, "Per-variable category limit");
}

}  // namespace

int main(int argc, char** argv) {
    using namespace watson::cli;

    CLI::App app{"watson: categorical survey exploration and k-NN therapy recommendation"};
    app.require_subcommand(1);

    BuildOptions build;
    auto* build_cmd = app.add_subcommand("build", "Build the frequency table and report its size");
    add_dataset_flags(build_cmd, build.input);
    build_cmd->add_option("--out", build.out, "Write the serialized table here");

    PlotsOptions plots;
    std::string plot_vars;
    bool no_scales = false;
    auto* plots_cmd = app.add_subcommand("plots", "Emit the SVG plot library");
    add_dataset_flags(plots_cmd, plots.input);
    plots_cmd->add_option("--out", plots.out_dir, "Output directory")->required();
    plots_cmd->add_option("--vars", plot_vars, "1-3 comma-separated variables (bar,color,panel)");
    plots_cmd->add_option("--width", plots.plot.width_px, "Plot width in px");
    plots_cmd->add_option("--height", plots.plot.height_px, "Plot height in px");
    plots_cmd->add_option("--palette", plots.plot.palette, "tol12 or okabe-ito");
    plots_cmd->add_flag("--no-scales", no_scales, "Omit the 5% ticks inside bars");

    QuestionsOptions questions;
    std::string question_vars;
    auto* questions_cmd = app.add_subcommand("questions", "Leading questions for two variables");
    add_dataset_flags(questions_cmd, questions.input);
    questions_cmd->add_option("--vars", question_vars, "Two comma-separated variables")->required();
    questions_cmd->add_option("--bar-var", questions.bar_var, "Bar variable (default: first)");
    questions_cmd->add_option("--max-q", questions.max_q, "Maximum number of questions");

    RecommendOptions rec;
    std::string direction;
    std::string weighting = "inverse_distance";
    auto* rec_cmd = app.add_subcommand("recommend", "Best therapy for one patient");
    rec_cmd->add_option("--cohort", rec.cohort, "Cohort CSV")->required()->check(CLI::ExistingFile);
    rec_cmd->add_option("--schema", rec.schema, "Feature schema JSON")
        ->required()
        ->check(CLI::ExistingFile);
    rec_cmd->add_option("--patient", rec.patient, "Patient JSON")
        ->required()
        ->check(CLI::ExistingFile);
    rec_cmd->add_option("--k", rec.params.k, "Neighbours per therapy");
    rec_cmd->add_option("--k-min", rec.params.k_min, "Minimum recipients for a therapy to count");
    rec_cmd->add_option("--direction", direction, "lower or higher outcome is better");
    rec_cmd->add_option("--weighting", weighting, "inverse_distance or uniform");

    ServeOptions serve;
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API");
    serve_cmd->add_option("--host", serve.host, "Bind address");
    serve_cmd->add_option("--port", serve.port, "Bind port");
    serve_cmd->add_option("--data-dir", serve.data_dir,
                          "Snapshot directory (default: $WATSON_DATA_DIR)");

    SynthOptions synth;
    auto* synth_cmd = app.add_subcommand("synth", "Generate seeded synthetic data");
    synth_cmd->add_option("--kind", synth.kind, "survey or cohort")->required();
    synth_cmd->add_option("--size", synth.size, "Number of records")->required();
    synth_cmd->add_option("--seed", synth.seed, "Random seed");
    synth_cmd->add_option("--out", synth.out_dir, "Output directory");

    CLI11_PARSE(app, argc, argv);

    if (build_cmd->parsed()) {
        return cmd_build(build, std::cout, std::cerr);
    }
    if (plots_cmd->parsed()) {
        plots.vars = split_vars(plot_vars);
        plots.plot.show_scales = !no_scales;
        return cmd_plots(plots, std::cout, std::cerr);
    }
    if (questions_cmd->parsed()) {
        questions.vars = split_vars(question_vars);
        return cmd_questions(questions, std::cout, std::cerr);
    }
    if (rec_cmd->parsed()) {
        try {
            if (!direction.empty()) {
                rec.params.direction = watson::knn::parse_direction(direction);
            }
            rec.params.weighting = watson::knn::parse_weighting(weighting);
        } catch (const std::exception& e) {
            std::cerr << "error: InvalidArgument: " << e.what() << "\n";
            return 2;
        }
        return cmd_recommend(rec, std::cout, std::cerr);
    }
    if (serve_cmd->parsed()) {
        if (!serve.data_dir) {
            if (const char* env = std::getenv("WATSON_DATA_DIR"); env != nullptr && *env != '\0') {
                serve.data_dir = env;
            }
        }
        return cmd_serve(serve, std::cerr);
    }
    if (synth_cmd->parsed()) {
        return cmd_synth(synth, std::cout, std::cerr);
    }
    return 1;
}
