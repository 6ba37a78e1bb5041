#pragma once

#include "watson/freqtable.hpp"
#include "watson/knn.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

namespace httplib {
class Server;
}

namespace watson::server {

struct Response {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
};

using QueryParams = std::map<std::string, std::string, std::less<>>;

/// Applies one recorded table operation:
/// `{"kind": "merge"|"remove"|"add"|"marginalize"|"permute", "args": {...}}`.
[[nodiscard]] auto apply_op(const FreqTable& table, const nlohmann::json& op) -> FreqTable;

/// HTTP status for an Error code.
[[nodiscard]] auto status_for(std::string_view code) -> int;

/// In-memory datasets and cohorts behind the JSON API. Each dataset keeps its
/// base table and an operation history; the current table is always the
/// replay of that history. Raw rows are discarded after upload.
///
/// Thread-safe: history mutations on one dataset are serialized, reads share
/// immutable tables, distinct datasets never contend.
class Registry {
public:
    explicit Registry(std::optional<std::filesystem::path> data_dir = std::nullopt);

    [[nodiscard]] auto upload_dataset(std::string_view body, std::string_view content_type)
        -> Response;
    [[nodiscard]] auto schema(std::string_view id) -> Response;
    [[nodiscard]] auto table(std::string_view id) -> Response;
    [[nodiscard]] auto apply(std::string_view id, std::string_view body) -> Response;
    [[nodiscard]] auto undo(std::string_view id, std::string_view body) -> Response;
    [[nodiscard]] auto plot(std::string_view id, const QueryParams& query) -> Response;
    [[nodiscard]] auto questions(std::string_view id, const QueryParams& query) -> Response;
    [[nodiscard]] auto upload_cohort(std::string_view body) -> Response;
    [[nodiscard]] auto recommend(std::string_view id, std::string_view body) -> Response;

    /// Writes every dataset to `<data_dir>/datasets/<id>.json`. No-op without a data dir.
    void save_snapshots() const;
    /// Reads snapshots written by save_snapshots.
    void load_snapshots();

    [[nodiscard]] auto current_table(std::string_view id) const -> std::shared_ptr<const FreqTable>;

private:
    struct Dataset {
        std::string name;
        FreqTable base;
        std::vector<nlohmann::json> history;
        std::shared_ptr<const FreqTable> current;
        mutable std::mutex mutex;

        Dataset(std::string n, FreqTable b)
            : name(std::move(n)), base(std::move(b)), current(std::make_shared<FreqTable>(base)) {}
    };

    auto find_dataset(std::string_view id) const -> std::shared_ptr<Dataset>;
    auto find_cohort(std::string_view id) const -> std::shared_ptr<const knn::Cohort>;
    auto summary(std::string_view id, const Dataset& ds) const -> nlohmann::json;
    auto register_dataset(std::string name, FreqTable base) -> std::string;

    std::optional<std::filesystem::path> data_dir_;
    mutable std::shared_mutex registry_mutex_;
    std::map<std::string, std::shared_ptr<Dataset>, std::less<>> datasets_;
    std::map<std::string, std::shared_ptr<const knn::Cohort>, std::less<>> cohorts_;
    std::size_t next_dataset_ = 1;
    std::size_t next_cohort_ = 1;
};

/// Registers every API route on `server`.
void bind_routes(httplib::Server& server, Registry& registry);

/// Blocks serving the API until SIGINT/SIGTERM, then snapshots datasets.
auto serve(const std::string& host, int port, Registry& registry) -> int;

}  // namespace watson::server
