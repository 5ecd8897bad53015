#include "tolalloc/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "tolalloc/types.hpp"

namespace tolalloc {

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  if (res.ec != std::errc()) throw NumericError("cannot format value");
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& token) {
  std::size_t begin = token.find_first_not_of(" \t\r\n");
  std::size_t end = token.find_last_not_of(" \t\r\n");
  if (begin == std::string::npos) throw ParseError("empty numeric field");
  const char* first = token.data() + begin;
  const char* last = token.data() + end + 1;
  if (*first == '+') ++first;
  double value = 0.0;
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last) {
    throw ParseError("not a number: '" + token + "'");
  }
  return value;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError("cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw ParseError("write failed for " + path.string());
    }
  }
  fs::rename(tmp, path);
}

}  // namespace tolalloc
