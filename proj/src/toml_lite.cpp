#include "aalab/toml_lite.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

namespace aalab::toml {

Value Value::of(double x) {
  Value v;
  v.kind = Kind::Float;
  v.number = x;
  return v;
}

Value Value::of_int(std::int64_t x) {
  Value v;
  v.kind = Kind::Integer;
  v.integer = x;
  return v;
}

Value Value::of_bool(bool b) {
  Value v;
  v.kind = Kind::Bool;
  v.boolean = b;
  return v;
}

Value Value::of_string(std::string s) {
  Value v;
  v.kind = Kind::String;
  v.text = std::move(s);
  return v;
}

Value Value::array(std::vector<Value> items) {
  Value v;
  v.kind = Kind::Array;
  v.items = std::move(items);
  return v;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

class Cursor {
 public:
  Cursor(const std::string& text, int line) : s_(text), line_(line) {}

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool done() const { return pos_ >= s_.size(); }
  char peek() const { return done() ? '\0' : s_[pos_]; }

  Value value() {
    skip_ws();
    if (done()) throw ParseError(line_, "missing value");
    const char c = peek();
    Value v;
    if (c == '"') {
      v = Value::of_string(string());
    } else if (c == '[') {
      v = array();
    } else {
      v = scalar();
    }
    v.line = line_;
    return v;
  }

 private:
  std::string string() {
    ++pos_;  // opening quote
    std::string out;
    while (!done()) {
      char c = s_[pos_++];
      if (c == '"') return out;
      if (c == '\\') {
        if (done()) break;
        const char e = s_[pos_++];
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '\\': out += '\\'; break;
          case '"': out += '"'; break;
          default: throw ParseError(line_, std::string("unsupported escape \\") + e);
        }
      } else {
        out += c;
      }
    }
    throw ParseError(line_, "unterminated string");
  }

  Value array() {
    ++pos_;  // [
    std::vector<Value> items;
    skip_ws();
    if (peek() == ']') {
      ++pos_;
      return Value::array(std::move(items));
    }
    while (true) {
      items.push_back(value());
      skip_ws();
      if (peek() == ',') {
        ++pos_;
        skip_ws();
        if (peek() == ']') {  // trailing comma
          ++pos_;
          break;
        }
        continue;
      }
      if (peek() == ']') {
        ++pos_;
        break;
      }
      throw ParseError(line_, "expected ',' or ']' in array");
    }
    return Value::array(std::move(items));
  }

  Value scalar() {
    std::size_t end = pos_;
    while (end < s_.size() && s_[end] != ',' && s_[end] != ']' &&
           !std::isspace(static_cast<unsigned char>(s_[end]))) {
      ++end;
    }
    std::string tok = s_.substr(pos_, end - pos_);
    pos_ = end;
    if (tok == "true") return Value::of_bool(true);
    if (tok == "false") return Value::of_bool(false);
    if (tok == "inf" || tok == "+inf") return Value::of(std::numeric_limits<double>::infinity());
    if (tok == "-inf") return Value::of(-std::numeric_limits<double>::infinity());
    if (tok == "nan") return Value::of(std::numeric_limits<double>::quiet_NaN());

    std::string clean;
    for (char c : tok) {
      if (c != '_') clean += c;
    }
    const bool looks_float = clean.find_first_of(".eE") != std::string::npos;
    const char* first = clean.data();
    const char* last = clean.data() + clean.size();
    if (!clean.empty() && clean[0] == '+') ++first;
    if (!looks_float) {
      std::int64_t x = 0;
      auto [p, ec] = std::from_chars(first, last, x);
      if (ec == std::errc() && p == last) return Value::of_int(x);
    } else {
      double x = 0.0;
      auto [p, ec] = std::from_chars(first, last, x);
      if (ec == std::errc() && p == last) return Value::of(x);
    }
    throw ParseError(line_, "cannot parse value '" + tok + "'");
  }

  const std::string& s_;
  std::size_t pos_ = 0;
  int line_;
};

std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (c == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
    if (c == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
  }
  return true;
}

}  // namespace

Value parse_value(const std::string& literal, int line) {
  const std::string body = trim(literal);
  Cursor cur(body, line);
  Value v = cur.value();
  cur.skip_ws();
  if (!cur.done()) throw ParseError(line, "trailing characters after value '" + body + "'");
  return v;
}

Document parse(const std::string& text) {
  Document doc;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  bool have_section = false;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) throw ParseError(line_no, "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!valid_key(section)) throw ParseError(line_no, "invalid section name '" + section + "'");
      if (doc.count(section)) throw ParseError(line_no, "duplicate section [" + section + "]");
      doc[section];
      have_section = true;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected 'key = value'");
    if (!have_section) throw ParseError(line_no, "key outside of any [section]");
    const std::string key = trim(line.substr(0, eq));
    if (!valid_key(key)) throw ParseError(line_no, "invalid key '" + key + "'");
    auto& sec = doc[section];
    if (sec.count(key)) throw ParseError(line_no, "duplicate key '" + key + "' in [" + section + "]");
    sec[key] = parse_value(line.substr(eq + 1), line_no);
  }
  return doc;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  std::string s(buf, p);
  // keep floats recognisable as floats
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

std::string format_value(const Value& v) {
  switch (v.kind) {
    case Value::Kind::Integer: return std::to_string(v.integer);
    case Value::Kind::Float: return format_double(v.number);
    case Value::Kind::Bool: return v.boolean ? "true" : "false";
    case Value::Kind::String: {
      std::string out = "\"";
      for (char c : v.text) {
        if (c == '"' || c == '\\') out += '\\';
        if (c == '\n') {
          out += "\\n";
          continue;
        }
        out += c;
      }
      return out + "\"";
    }
    case Value::Kind::Array: {
      std::string out = "[";
      for (std::size_t i = 0; i < v.items.size(); ++i) {
        if (i) out += ", ";
        out += format_value(v.items[i]);
      }
      return out + "]";
    }
  }
  return {};
}

}  // namespace aalab::toml
