#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace vdlab {

/// Reads a whole file; UserError if it cannot be opened.
std::string read_file(const std::string& path);

/// Writes content, creating parent directories as needed; UserError on
/// failure.
void write_file(const std::string& path, std::string_view content);

}  // namespace vdlab
