#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace deskmt::io {

// Reads a UTF-8 text file into lines. Strips a trailing '\r' per line and a
// UTF-8 BOM on the first line. Throws DataError on a missing file or on
// invalid UTF-8 (message carries the 1-based line number).
std::vector<std::string> read_lines(const std::filesystem::path& path);

// Writes content to path atomically (temp file in the same directory, then
// rename). On failure the destination is left untouched.
void atomic_write(const std::filesystem::path& path, const std::string& content);

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines);

std::string read_file(const std::filesystem::path& path);

}  // namespace deskmt::io
