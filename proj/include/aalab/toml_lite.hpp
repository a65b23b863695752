#pragma once

// Minimal reader/writer for the TOML subset used by run configurations:
// [section] headers, `key = value` lines, numbers, booleans, basic strings,
// single-line arrays, and `#` comments. Nested tables and dotted keys are
// not supported.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace aalab::toml {

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct Value {
  enum class Kind { Integer, Float, Bool, String, Array };

  Kind kind = Kind::Integer;
  std::int64_t integer = 0;
  double number = 0.0;
  bool boolean = false;
  std::string text;
  std::vector<Value> items;
  int line = 0;

  bool is_numeric() const { return kind == Kind::Integer || kind == Kind::Float; }
  double as_double() const { return kind == Kind::Integer ? static_cast<double>(integer) : number; }

  static Value of(double x);
  static Value of_int(std::int64_t x);
  static Value of_bool(bool b);
  static Value of_string(std::string s);
  static Value array(std::vector<Value> v);
};

using Section = std::map<std::string, Value>;
using Document = std::map<std::string, Section>;

Document parse(const std::string& text);

/// Parses a single value literal (used for `--set key=value` overrides).
Value parse_value(const std::string& literal, int line = 0);

/// Shortest text that reads back to the identical double.
std::string format_double(double x);

std::string format_value(const Value& v);

}  // namespace aalab::toml
