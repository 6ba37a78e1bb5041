#pragma once

#include <nlohmann/json.hpp>

#include <stdexcept>
#include <string>

namespace watson {

/// Failure carrying a machine-readable code (e.g. "RaggedRow") and optional
/// structured detail. The server maps codes straight into error bodies.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message, nlohmann::json detail = nullptr)
        : std::runtime_error(message), code_(std::move(code)), detail_(std::move(detail)) {}

    [[nodiscard]] auto code() const noexcept -> const std::string& { return code_; }
    [[nodiscard]] auto detail() const noexcept -> const nlohmann::json& { return detail_; }

private:
    std::string code_;
    nlohmann::json detail_;
};

}  // namespace watson
