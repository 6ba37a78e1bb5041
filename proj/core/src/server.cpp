#include "watson/server.hpp"

#include "watson/error.hpp"
#include "watson/ingest.hpp"
#include "watson/plots.hpp"
#include "watson/questions.hpp"

#include <httplib.h>

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

namespace watson::server {

namespace {

using nlohmann::json;

auto json_response(int status, const json& body) -> Response {
    return Response{status, "application/json", body.dump()};
}

auto error_response(const Error& e) -> Response {
    json body{{"code", e.code()}, {"message", e.what()}};
    if (!e.detail().is_null()) {
        body["detail"] = e.detail();
    }
    return json_response(status_for(e.code()), body);
}

// Runs a handler body, turning every failure into an error response.
template <typename Fn>
auto guarded(Fn&& fn) -> Response {
    try {
        return fn();
    } catch (const Error& e) {
        return error_response(e);
    } catch (const json::exception& e) {
        return error_response(Error("InvalidJson", e.what()));
    } catch (const std::exception& e) {
        return error_response(Error("InternalError", e.what()));
    }
}

auto parse_body(std::string_view body) -> json {
    if (body.empty()) {
        return json::object();
    }
    auto parsed = json::parse(body, nullptr, false);
    if (parsed.is_discarded()) {
        throw Error("InvalidJson", "request body is not valid JSON");
    }
    return parsed;
}

auto split_list(std::string_view text) -> std::vector<std::string> {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const auto end = comma == std::string_view::npos ? text.size() : comma;
        if (end > start) {
            out.emplace_back(text.substr(start, end - start));
        }
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

auto param(const QueryParams& q, std::string_view key) -> std::optional<std::string> {
    const auto it = q.find(key);
    if (it == q.end()) {
        return std::nullopt;
    }
    return it->second;
}

auto int_param(const QueryParams& q, std::string_view key, int fallback) -> int {
    const auto v = param(q, key);
    if (!v) {
        return fallback;
    }
    try {
        std::size_t used = 0;
        const int parsed = std::stoi(*v, &used);
        if (used != v->size()) {
            throw std::invalid_argument("trailing characters");
        }
        return parsed;
    } catch (const std::exception&) {
        throw Error("InvalidArgument", "query parameter '" + std::string(key) + "' must be an integer",
                    {{"parameter", key}});
    }
}

// vars, with bar_var moved to the front and panel_var to the back when given.
auto selected_variables(const QueryParams& q) -> std::vector<std::string> {
    const auto vars_text = param(q, "vars");
    if (!vars_text) {
        throw Error("InvalidArgument", "missing 'vars' query parameter");
    }
    auto vars = split_list(*vars_text);
    if (vars.empty() || vars.size() > 3) {
        throw Error("WrongArity", "select 1 to 3 variables", {{"rank", vars.size()}});
    }
    auto move_to = [&](const std::string& name, bool front) {
        const auto it = std::find(vars.begin(), vars.end(), name);
        if (it == vars.end()) {
            throw Error("UnknownVariable", "'" + name + "' is not among the selected variables",
                        {{"variable", name}});
        }
        vars.erase(it);
        if (front) {
            vars.insert(vars.begin(), name);
        } else {
            vars.push_back(name);
        }
    };
    if (const auto panel = param(q, "panel_var"); panel && vars.size() == 3) {
        move_to(*panel, false);
    }
    if (const auto bar = param(q, "bar_var")) {
        move_to(*bar, true);
    }
    return vars;
}

auto string_list(const json& args, const char* key) -> std::vector<std::string> {
    return args.at(key).get<std::vector<std::string>>();
}

}  // namespace

auto status_for(std::string_view code) -> int {
    if (code == "UnknownDataset" || code == "UnknownCohort" || code == "NotFound") {
        return 404;
    }
    if (code == "NoEligibleTherapy") {
        return 422;
    }
    if (code == "InternalError") {
        return 500;
    }
    return 400;
}

auto apply_op(const FreqTable& table, const nlohmann::json& op) -> FreqTable {
    if (!op.is_object() || !op.contains("kind")) {
        throw Error("InvalidOp", "operation needs a 'kind'");
    }
    const auto kind = op.at("kind").get<std::string>();
    const json args = op.value("args", json::object());
    try {
        if (kind == "merge") {
            return merge_categories(table, args.at("variable").get<std::string>(),
                                    string_list(args, "categories"),
                                    args.at("new_label").get<std::string>());
        }
        if (kind == "remove") {
            return remove_category(table, args.at("variable").get<std::string>(),
                                   args.at("category").get<std::string>());
        }
        if (kind == "add") {
            std::optional<double> score;
            if (args.contains("score")) {
                score = args.at("score").get<double>();
            }
            return add_category(table, args.at("variable").get<std::string>(),
                                args.at("label").get<std::string>(), score);
        }
        if (kind == "marginalize") {
            return marginalize(table, string_list(args, "keep"));
        }
        if (kind == "permute") {
            return permute_axes(table, string_list(args, "order"));
        }
    } catch (const json::exception& e) {
        throw Error("InvalidOp", std::string("malformed '") + kind + "' arguments: " + e.what());
    }
    throw Error("InvalidOp", "unknown operation kind '" + kind + "'", {{"kind", kind}});
}

Registry::Registry(std::optional<std::filesystem::path> data_dir) : data_dir_(std::move(data_dir)) {}

auto Registry::find_dataset(std::string_view id) const -> std::shared_ptr<Dataset> {
    std::shared_lock lock(registry_mutex_);
    const auto it = datasets_.find(id);
    if (it == datasets_.end()) {
        throw Error("UnknownDataset", "no dataset '" + std::string(id) + "'", {{"id", id}});
    }
    return it->second;
}

auto Registry::find_cohort(std::string_view id) const -> std::shared_ptr<const knn::Cohort> {
    std::shared_lock lock(registry_mutex_);
    const auto it = cohorts_.find(id);
    if (it == cohorts_.end()) {
        throw Error("UnknownCohort", "no cohort '" + std::string(id) + "'", {{"id", id}});
    }
    return it->second;
}

auto Registry::current_table(std::string_view id) const -> std::shared_ptr<const FreqTable> {
    const auto ds = find_dataset(id);
    std::lock_guard lock(ds->mutex);
    return ds->current;
}

auto Registry::register_dataset(std::string name, FreqTable base) -> std::string {
    std::unique_lock lock(registry_mutex_);
    const std::string id = "ds" + std::to_string(next_dataset_++);
    datasets_.emplace(id, std::make_shared<Dataset>(std::move(name), std::move(base)));
    return id;
}

auto Registry::summary(std::string_view id, const Dataset& ds) const -> nlohmann::json {
    const auto& table = *ds.current;
    auto variables = json::array();
    for (std::size_t a = 0; a < table.rank(); ++a) {
        json v = table.variable(a);
        v["totals"] = table.axis_totals(a);
        variables.push_back(std::move(v));
    }
    return json{{"id", id},
                {"name", ds.name},
                {"variables", variables},
                {"total", table.total()},
                {"cells", table.cell_count()},
                {"history", ds.history}};
}

auto Registry::upload_dataset(std::string_view body, std::string_view content_type) -> Response {
    return guarded([&] {
        std::string csv;
        std::optional<json> codebook;
        std::string name = "dataset";
        CsvConfig config;
        std::size_t max_categories = kDefaultMaxCategories;
        if (content_type.starts_with("application/json")) {
            const auto j = parse_body(body);
            csv = j.at("csv").get<std::string>();
            if (j.contains("codebook") && !j.at("codebook").is_null()) {
                codebook = j.at("codebook");
            }
            name = j.value("name", name);
            const auto delim = j.value("delimiter", std::string(","));
            if (delim.size() != 1) {
                throw Error("InvalidArgument", "delimiter must be one character");
            }
            config.delimiter = delim.front();
            max_categories = j.value("max_categories", max_categories);
        } else {
            csv = std::string(body);
        }
        const auto records = parse_csv(csv, config);
        auto schema = infer_schema(records, max_categories);
        if (codebook) {
            schema = apply_codebook(std::move(schema), *codebook);
        }
        auto base = build_table(records, schema);
        const auto id = register_dataset(std::move(name), std::move(base));
        const auto ds = find_dataset(id);
        std::lock_guard lock(ds->mutex);
        return json_response(201, summary(id, *ds));
    });
}

auto Registry::schema(std::string_view id) -> Response {
    return guarded([&] {
        const auto ds = find_dataset(id);
        std::lock_guard lock(ds->mutex);
        return json_response(200, summary(id, *ds));
    });
}

auto Registry::table(std::string_view id) -> Response {
    return guarded([&] { return json_response(200, json(*current_table(id))); });
}

auto Registry::apply(std::string_view id, std::string_view body) -> Response {
    return guarded([&] {
        const auto ds = find_dataset(id);
        const auto op = parse_body(body);
        std::lock_guard lock(ds->mutex);
        auto next = std::make_shared<FreqTable>(apply_op(*ds->current, op));
        ds->history.push_back(op);
        ds->current = std::move(next);
        return json_response(200, summary(id, *ds));
    });
}

auto Registry::undo(std::string_view id, std::string_view body) -> Response {
    return guarded([&] {
        const auto ds = find_dataset(id);
        const auto j = parse_body(body);
        const auto steps = j.value("steps", std::size_t{1});
        std::lock_guard lock(ds->mutex);
        if (steps < 1 || steps > ds->history.size()) {
            throw Error("EmptyHistory", "nothing to undo",
                        {{"history", ds->history.size()}, {"steps", steps}});
        }
        ds->history.resize(ds->history.size() - steps);
        FreqTable replay = ds->base;
        for (const auto& op : ds->history) {
            replay = apply_op(replay, op);
        }
        ds->current = std::make_shared<FreqTable>(std::move(replay));
        return json_response(200, summary(id, *ds));
    });
}

auto Registry::plot(std::string_view id, const QueryParams& query) -> Response {
    return guarded([&] {
        const auto table = current_table(id);
        PlotSpec spec;
        spec.dataset = std::string(id);
        spec.variables = selected_variables(query);
        spec.kind = plot_kind_for_arity(spec.variables.size());
        spec.options.width_px = int_param(query, "width", spec.options.width_px);
        spec.options.height_px = int_param(query, "height", spec.options.height_px);
        spec.options.show_scales = int_param(query, "scales", 1) != 0;
        spec.options.palette = param(query, "palette").value_or(spec.options.palette);
        spec.options.title = param(query, "title").value_or("");
        auto svg = render_plot(*table, spec);
        return Response{200, "image/svg+xml", std::move(svg.xml)};
    });
}

auto Registry::questions(std::string_view id, const QueryParams& query) -> Response {
    return guarded([&] {
        const auto table = current_table(id);
        const auto vars = selected_variables(query);
        if (vars.size() != 2) {
            throw Error("WrongArity", "questions need exactly 2 variables", {{"rank", vars.size()}});
        }
        QuestionConfig config;
        config.max_questions = static_cast<std::size_t>(
            std::max(0, int_param(query, "max_q", static_cast<int>(config.max_questions))));
        const auto two_way = marginalize(*table, vars);
        return json_response(200, json{{"variables", vars},
                                       {"questions", generate_questions(two_way, vars[0], config)}});
    });
}

auto Registry::upload_cohort(std::string_view body) -> Response {
    return guarded([&] {
        const auto j = parse_body(body);
        if (!j.contains("csv") || !j.contains("schema")) {
            throw Error("InvalidArgument", "cohort upload needs 'csv' and 'schema'");
        }
        auto cohort = std::make_shared<const knn::Cohort>(knn::load_cohort(
            j.at("csv").get<std::string>(), knn::parse_feature_schema(j.at("schema"))));
        std::string id;
        {
            std::unique_lock lock(registry_mutex_);
            id = "co" + std::to_string(next_cohort_++);
            cohorts_.emplace(id, cohort);
        }
        auto therapies = json::array();
        for (const auto& t : cohort->therapies) {
            therapies.push_back({{"id", t}, {"support", cohort->support(t)}});
        }
        return json_response(201, json{{"id", id},
                                       {"patients", cohort->patients.size()},
                                       {"therapies", therapies},
                                       {"schema", cohort->schema}});
    });
}

auto Registry::recommend(std::string_view id, std::string_view body) -> Response {
    return guarded([&] {
        const auto cohort = find_cohort(id);
        const auto j = parse_body(body);
        if (!j.contains("patient")) {
            throw Error("InvalidArgument", "request needs a 'patient' object");
        }
        const auto patient = knn::parse_patient(j.at("patient"), cohort->schema);
        knn::RecommendParams params;
        params.k = j.value("k", params.k);
        params.k_min = j.value("k_min", params.k_min);
        if (j.contains("direction")) {
            params.direction = knn::parse_direction(j.at("direction").get<std::string>());
        }
        if (j.contains("weighting")) {
            params.weighting = knn::parse_weighting(j.at("weighting").get<std::string>());
        }
        return json_response(200, json(knn::recommend(*cohort, patient, params)));
    });
}

void Registry::save_snapshots() const {
    if (!data_dir_) {
        return;
    }
    const auto dir = *data_dir_ / "datasets";
    std::filesystem::create_directories(dir);
    std::shared_lock lock(registry_mutex_);
    for (const auto& [id, ds] : datasets_) {
        std::lock_guard ds_lock(ds->mutex);
        const json snapshot{{"id", id}, {"name", ds->name}, {"base", ds->base},
                            {"history", ds->history}};
        const auto target = dir / (id + ".json");
        const auto tmp = dir / (id + ".json.tmp");
        {
            std::ofstream out(tmp, std::ios::binary);
            out << snapshot.dump();
        }
        std::filesystem::rename(tmp, target);
    }
}

void Registry::load_snapshots() {
    if (!data_dir_) {
        return;
    }
    const auto dir = *data_dir_ / "datasets";
    if (!std::filesystem::is_directory(dir)) {
        return;
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.path().extension() == ".json") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    std::unique_lock lock(registry_mutex_);
    for (const auto& file : files) {
        std::ifstream in(file, std::ios::binary);
        const auto snapshot = json::parse(in);
        const auto id = snapshot.at("id").get<std::string>();
        auto ds = std::make_shared<Dataset>(snapshot.value("name", std::string("dataset")),
                                            table_from_json(snapshot.at("base")));
        FreqTable replay = ds->base;
        for (const auto& op : snapshot.at("history")) {
            replay = apply_op(replay, op);
            ds->history.push_back(op);
        }
        ds->current = std::make_shared<FreqTable>(std::move(replay));
        datasets_[id] = std::move(ds);
        if (id.starts_with("ds")) {
            next_dataset_ = std::max(next_dataset_, std::stoul(id.substr(2)) + 1);
        }
    }
}

void bind_routes(httplib::Server& server, Registry& registry) {
    auto send = [](httplib::Response& res, const Response& r) {
        res.status = r.status;
        res.set_content(r.body, r.content_type.c_str());
    };
    auto query_of = [](const httplib::Request& req) {
        QueryParams q;
        for (const auto& [k, v] : req.params) {
            q.emplace(k, v);
        }
        return q;
    };

    server.Post("/datasets", [&registry, send](const httplib::Request& req, httplib::Response& res) {
        send(res, registry.upload_dataset(req.body, req.get_header_value("Content-Type")));
    });
    server.Get(R"(/datasets/([^/]+)/schema)",
               [&registry, send](const httplib::Request& req, httplib::Response& res) {
                   send(res, registry.schema(req.matches[1].str()));
               });
    server.Get(R"(/datasets/([^/]+)/table)",
               [&registry, send](const httplib::Request& req, httplib::Response& res) {
                   send(res, registry.table(req.matches[1].str()));
               });
    server.Post(R"(/datasets/([^/]+)/ops)",
                [&registry, send](const httplib::Request& req, httplib::Response& res) {
                    send(res, registry.apply(req.matches[1].str(), req.body));
                });
    server.Post(R"(/datasets/([^/]+)/ops/undo)",
                [&registry, send](const httplib::Request& req, httplib::Response& res) {
                    send(res, registry.undo(req.matches[1].str(), req.body));
                });
    server.Get(R"(/datasets/([^/]+)/plot)",
               [&registry, send, query_of](const httplib::Request& req, httplib::Response& res) {
                   send(res, registry.plot(req.matches[1].str(), query_of(req)));
               });
    server.Get(R"(/datasets/([^/]+)/questions)",
               [&registry, send, query_of](const httplib::Request& req, httplib::Response& res) {
                   send(res, registry.questions(req.matches[1].str(), query_of(req)));
               });
    server.Post("/cohorts", [&registry, send](const httplib::Request& req, httplib::Response& res) {
        send(res, registry.upload_cohort(req.body));
    });
    server.Post(R"(/cohorts/([^/]+)/recommend)",
                [&registry, send](const httplib::Request& req, httplib::Response& res) {
                    send(res, registry.recommend(req.matches[1].str(), req.body));
                });
}

namespace {
httplib::Server* g_running = nullptr;

extern "C" void stop_on_signal(int) {
    if (g_running != nullptr) {
        g_running->stop();
    }
}
}  // namespace

auto serve(const std::string& host, int port, Registry& registry) -> int {
    httplib::Server server;
    server.set_payload_max_length(256U * 1024U * 1024U);
    bind_routes(server, registry);
    g_running = &server;
    std::signal(SIGINT, stop_on_signal);
    std::signal(SIGTERM, stop_on_signal);
    std::cerr << "watson: listening on " << host << ":" << port << "\n";
    const bool ok = server.listen(host, port);
    g_running = nullptr;
    registry.save_snapshots();
    if (!ok) {
        std::cerr << "watson: could not listen on " << host << ":" << port << "\n";
        return 1;
    }
    return 0;
}

}  // namespace watson::server
