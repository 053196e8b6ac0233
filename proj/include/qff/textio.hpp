#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace qff::text {

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::vector<std::string> split_ws(std::string_view s);

// Shortest decimal that round-trips through parse_double exactly.
std::string format_double(double v);
std::string join_doubles(const std::vector<double>& v, char sep = ' ');

double parse_double(std::string_view s, int line = 0);
long parse_int(std::string_view s, int line = 0);
std::vector<double> parse_doubles(std::string_view s, int line = 0);
std::vector<int> parse_ints(std::string_view s, char sep, int line = 0);

struct Entry {
  int line = 0;
  std::string key;
  std::string value;
};

// "key = value" lines; blank lines and '#' comments skipped. Keys may repeat
// and keep their file order.
class KeyValueDoc {
 public:
  static KeyValueDoc parse(std::string_view text);

  const std::vector<Entry>& entries() const noexcept { return entries_; }
  bool has(std::string_view key) const;
  const Entry& get(std::string_view key) const;  // throws ParseError if missing
  std::string get_or(std::string_view key, std::string fallback) const;
  std::vector<const Entry*> all(std::string_view key) const;
  int last_line() const noexcept { return last_line_; }

 private:
  std::vector<Entry> entries_;
  int last_line_ = 0;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace qff::text
