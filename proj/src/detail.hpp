#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace tacsearch::detail {

/// Parses JSON, converting parse failures into Error(parse_error) that name
/// the line and column.
nlohmann::json parse_json_document(std::string_view document, const std::string& what);

std::string read_file(const std::filesystem::path& path);

}  // namespace tacsearch::detail
