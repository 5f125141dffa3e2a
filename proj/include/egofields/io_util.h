#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace egofields {

// Writes `content` to a temporary sibling file, then renames it over `path`.
void atomic_write(const std::filesystem::path& path, std::string_view content);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace egofields
