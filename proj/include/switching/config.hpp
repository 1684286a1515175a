#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "switching/model.hpp"

namespace switching {

/// Raised for malformed or non-conforming model configuration documents.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Strict parse of a model document: unknown keys, missing required keys and
/// wrongly typed values raise ConfigError. The result is not validated; call
/// validate_model on it.
SwitchingModel parse_model(const nlohmann::json& doc);
SwitchingModel load_model(const std::filesystem::path& path);

nlohmann::json model_to_json(const SwitchingModel& model);

} // namespace switching
