#pragma once

#include <filesystem>

#include <json.hpp>

#include "vcenergy/pipeline.hpp"

namespace vcenergy {

/// Environment variable overriding `encoder_binary`.
inline constexpr const char* kEncoderEnvVar = "VCENERGY_ENCODER";

/// Reads and validates a pipeline config. Relative paths in the document
/// resolve against the config file's directory. Throws ConfigError with the
/// offending field path, or Error when the file is missing.
PipelineConfig parse_config(const std::filesystem::path& path);

/// Same, from an already parsed document.
PipelineConfig parse_config_json(const nlohmann::json& doc,
                                 const std::filesystem::path& base_dir = {});

} // namespace vcenergy
