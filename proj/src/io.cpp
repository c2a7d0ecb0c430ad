#include "deskmt/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "deskmt/error.hpp"
#include "deskmt/unicode.hpp"

namespace deskmt::io {

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lines.empty() && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (!unicode::valid_utf8(line))
      throw DataError(path.string() + ": invalid UTF-8 on line " + std::to_string(lines.size() + 1));
    lines.push_back(std::move(line));
  }
  return lines;
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path dir = path.parent_path();
  if (!dir.empty()) fs::create_directories(dir);
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write file: " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
      out.close();
      std::remove(tmp.c_str());
      throw DataError("write failed: " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    std::remove(tmp.c_str());
    throw DataError("rename failed for " + path.string() + ": " + ec.message());
  }
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  std::string buf;
  for (const auto& l : lines) {
    buf += l;
    buf += '\n';
  }
  atomic_write(path, buf);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace deskmt::io
