#include "qff/textio.hpp"

#include <cctype>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "qff/errors.hpp"

namespace qff::text {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.emplace_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  // std::to_chars without precision gives the shortest round-trip form.
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
  }
  return std::string(buf, ptr);
}

std::string join_doubles(const std::vector<double>& v, char sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += format_double(v[i]);
  }
  return out;
}

double parse_double(std::string_view s, int line) {
  const std::string str(trim(s));
  if (str.empty()) throw ParseError("empty numeric field", line);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(str.c_str(), &end);
  if (end != str.c_str() + str.size()) throw ParseError("bad number '" + str + "'", line);
  if (!std::isfinite(v)) throw ParseError("non-finite number '" + str + "'", line);
  return v;
}

long parse_int(std::string_view s, int line) {
  const auto t = trim(s);
  long v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size()) {
    throw ParseError("bad integer '" + std::string(t) + "'", line);
  }
  return v;
}

std::vector<double> parse_doubles(std::string_view s, int line) {
  std::vector<double> out;
  for (const auto& tok : split_ws(s)) out.push_back(parse_double(tok, line));
  return out;
}

std::vector<int> parse_ints(std::string_view s, char sep, int line) {
  std::vector<int> out;
  if (trim(s).empty()) return out;
  for (const auto& tok : split(s, sep)) out.push_back(static_cast<int>(parse_int(tok, line)));
  return out;
}

KeyValueDoc KeyValueDoc::parse(std::string_view text) {
  KeyValueDoc doc;
  std::istringstream in{std::string(text)};
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError("expected 'key = value', got '" + std::string(line) + "'", lineno);
    }
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError("empty key", lineno);
    doc.entries_.push_back({lineno, std::string(key), std::string(trim(line.substr(eq + 1)))});
  }
  doc.last_line_ = lineno;
  return doc;
}

bool KeyValueDoc::has(std::string_view key) const {
  for (const auto& e : entries_)
    if (e.key == key) return true;
  return false;
}

const Entry& KeyValueDoc::get(std::string_view key) const {
  for (const auto& e : entries_)
    if (e.key == key) return e;
  throw ParseError("missing field '" + std::string(key) + "'", last_line_);
}

std::string KeyValueDoc::get_or(std::string_view key, std::string fallback) const {
  for (const auto& e : entries_)
    if (e.key == key) return e.value;
  return fallback;
}

std::vector<const Entry*> KeyValueDoc::all(std::string_view key) const {
  std::vector<const Entry*> out;
  for (const auto& e : entries_)
    if (e.key == key) out.push_back(&e);
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw DataError("write to '" + path + "' failed");
}

}  // namespace qff::text
