#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

namespace crowd::io {

using nlohmann::json;

std::string read_text(const std::filesystem::path& path);

/// Writes to a sibling temporary and renames over the target, so readers never
/// observe a partial file.
void write_text_atomic(const std::filesystem::path& path, const std::string& contents);

json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& doc);

}  // namespace crowd::io
