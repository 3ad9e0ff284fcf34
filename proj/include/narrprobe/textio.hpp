#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace narrprobe {

// Shortest decimal form that round-trips to the same double.
std::string format_number(double value);

// RFC 4180 field quoting; fields without separators pass through unchanged.
std::string csv_field(std::string_view field);

// Reads a whole file; MissingInput if it does not exist, Io on read failure.
std::string read_file(const std::filesystem::path& path);

// Writes atomically enough for our purposes: truncate + write + flush check.
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace narrprobe
