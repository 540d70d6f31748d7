#include "hypoflow/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "hypoflow/error.hpp"

namespace hypoflow {
namespace {

using nlohmann::json;

class LineParser {
 public:
  LineParser(const std::string& line, int number) : s_(line), line_(number) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("config: line " + std::to_string(line_) + ": " + what);
  }

  void skip_space() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }

  bool at_end_or_comment() {
    skip_space();
    return pos_ >= s_.size() || s_[pos_] == '#';
  }

  std::string key() {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' || s_[pos_] == '-'))
      ++pos_;
    if (pos_ == start) fail("expected a bare key");
    return s_.substr(start, pos_ - start);
  }

  void expect(char c) {
    skip_space();
    if (pos_ >= s_.size() || s_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  json value() {
    skip_space();
    if (pos_ >= s_.size()) fail("missing value");
    const char c = s_[pos_];
    if (c == '"') return basic_string();
    if (c == '\'') return literal_string();
    if (c == '[') return array();
    if (c == '{') fail("inline tables are not supported");
    return scalar();
  }

 private:
  json basic_string() {
    ++pos_;
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      char c = s_[pos_++];
      if (c == '\\') {
        if (pos_ >= s_.size()) fail("unterminated escape");
        const char e = s_[pos_++];
        switch (e) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      }
      out.push_back(c);
    }
    if (pos_ >= s_.size()) fail("unterminated string");
    ++pos_;
    return out;
  }

  json literal_string() {
    ++pos_;
    const std::size_t end = s_.find('\'', pos_);
    if (end == std::string::npos) fail("unterminated string");
    std::string out = s_.substr(pos_, end - pos_);
    pos_ = end + 1;
    return out;
  }

  json array() {
    ++pos_;
    json out = json::array();
    for (;;) {
      skip_space();
      if (pos_ < s_.size() && s_[pos_] == ']') {
        ++pos_;
        return out;
      }
      json element = value();
      if (element.is_array()) fail("nested arrays are not supported");
      out.push_back(std::move(element));
      skip_space();
      if (pos_ < s_.size() && s_[pos_] == ',') {
        ++pos_;
        continue;
      }
      if (pos_ < s_.size() && s_[pos_] == ']') continue;
      fail("expected ',' or ']' (arrays must fit on one line)");
    }
  }

  json scalar() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ']' && s_[pos_] != '#' && s_[pos_] != ' ' &&
           s_[pos_] != '\t')
      ++pos_;
    std::string token = s_.substr(start, pos_ - start);
    if (token == "true") return true;
    if (token == "false") return false;
    if (token == "inf" || token == "+inf" || token == "-inf" || token == "nan") fail("non-finite numbers are not allowed");
    std::string digits;
    for (char ch : token)
      if (ch != '_') digits.push_back(ch);
    if (!digits.empty() && digits.front() == '+') digits.erase(0, 1);
    const bool integral = digits.find_first_of(".eE") == std::string::npos;
    if (integral) {
      long long v = 0;
      const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
      if (ec == std::errc() && ptr == digits.data() + digits.size() && !digits.empty()) return v;
    } else {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
      if (ec == std::errc() && ptr == digits.data() + digits.size()) return v;
    }
    fail("cannot parse value '" + token + "'");
  }

  const std::string& s_;
  int line_;
  std::size_t pos_ = 0;
};

}  // namespace

json parse_config(const std::string& text) {
  json out = json::object();
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    LineParser p(line, number);
    if (p.at_end_or_comment()) continue;
    std::size_t first = line.find_first_not_of(" \t");
    if (line[first] == '[') p.fail("tables are not supported; use flat keys");
    const std::string key = p.key();
    p.expect('=');
    json value = p.value();
    if (!p.at_end_or_comment()) p.fail("trailing characters after value");
    if (out.contains(key)) p.fail("duplicate key '" + key + "'");
    out[key] = std::move(value);
  }
  return out;
}

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

}  // namespace hypoflow
