#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace spikenet {

/// Shortest round-trip decimal form; "inf" for infinities.
std::string fmt_double(double v);

/// Writes `contents` to a sibling temporary and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace spikenet
