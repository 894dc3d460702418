#include "fleetcast/toml.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fleetcast {

namespace {

[[noreturn]] void fail(const std::string& origin, std::size_t line,
                       const std::string& msg) {
    throw std::runtime_error(origin + ":" + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

// Strips a trailing comment that is not inside a quoted string.
std::string strip_comment(const std::string& s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') quoted = !quoted;
        if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
}

bool parse_number(const std::string& s, std::int64_t* iv, double* dv,
                  bool* is_int) {
    {
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), *iv);
        if (ec == std::errc() && p == s.data() + s.size()) {
            *is_int = true;
            return true;
        }
    }
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), *dv);
    if (ec == std::errc() && p == s.data() + s.size()) {
        *is_int = false;
        return true;
    }
    return false;
}

TomlValue parse_scalar(const std::string& raw, const std::string& origin,
                       std::size_t line) {
    const std::string s = trim(raw);
    if (s.empty()) fail(origin, line, "empty value");
    if (s.front() == '"') {
        if (s.size() < 2 || s.back() != '"') {
            fail(origin, line, "unterminated string");
        }
        const std::string inner = s.substr(1, s.size() - 2);
        if (inner.find('"') != std::string::npos) {
            fail(origin, line, "embedded quote in string");
        }
        return TomlValue{inner};
    }
    if (s == "true") return TomlValue{true};
    if (s == "false") return TomlValue{false};
    std::int64_t iv = 0;
    double dv = 0.0;
    bool is_int = false;
    if (parse_number(s, &iv, &dv, &is_int)) {
        if (is_int) return TomlValue{iv};
        return TomlValue{dv};
    }
    fail(origin, line, "cannot parse value '" + s + "'");
}

TomlValue parse_array(const std::string& raw, const std::string& origin,
                      std::size_t line) {
    const std::string inner = trim(raw);
    std::vector<std::string> parts;
    std::string cur;
    bool quoted = false;
    for (char c : inner) {
        if (c == '"') quoted = !quoted;
        if (c == ',' && !quoted) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!trim(cur).empty()) parts.push_back(cur);

    std::vector<double> numbers;
    std::vector<std::string> strings;
    bool any_number = false, any_string = false;
    for (const std::string& p : parts) {
        TomlValue v = parse_scalar(p, origin, line);
        if (v.is_string()) {
            any_string = true;
            strings.push_back(std::get<std::string>(v.v));
        } else if (v.is_int()) {
            any_number = true;
            numbers.push_back(
                static_cast<double>(std::get<std::int64_t>(v.v)));
        } else if (v.is_float()) {
            any_number = true;
            numbers.push_back(std::get<double>(v.v));
        } else {
            fail(origin, line, "unsupported array element");
        }
    }
    if (any_number && any_string) {
        fail(origin, line, "mixed array element types");
    }
    if (any_string) return TomlValue{strings};
    return TomlValue{numbers};  // empty array defaults to numeric
}

}  // namespace

std::string TomlValue::as_string(const std::string& key) const {
    if (!is_string()) {
        throw std::runtime_error("config key '" + key + "' must be a string");
    }
    return std::get<std::string>(v);
}

bool TomlValue::as_bool(const std::string& key) const {
    if (!is_bool()) {
        throw std::runtime_error("config key '" + key + "' must be a boolean");
    }
    return std::get<bool>(v);
}

std::int64_t TomlValue::as_int(const std::string& key) const {
    if (!is_int()) {
        throw std::runtime_error("config key '" + key +
                                 "' must be an integer");
    }
    return std::get<std::int64_t>(v);
}

double TomlValue::as_double(const std::string& key) const {
    if (is_int()) return static_cast<double>(std::get<std::int64_t>(v));
    if (!is_float()) {
        throw std::runtime_error("config key '" + key + "' must be a number");
    }
    return std::get<double>(v);
}

std::vector<double> TomlValue::as_double_array(const std::string& key) const {
    if (!std::holds_alternative<std::vector<double>>(v)) {
        throw std::runtime_error("config key '" + key +
                                 "' must be a numeric array");
    }
    return std::get<std::vector<double>>(v);
}

std::vector<std::string> TomlValue::as_string_array(
    const std::string& key) const {
    if (std::holds_alternative<std::vector<double>>(v) &&
        std::get<std::vector<double>>(v).empty()) {
        return {};  // `[]` parses as an empty numeric array
    }
    if (!std::holds_alternative<std::vector<std::string>>(v)) {
        throw std::runtime_error("config key '" + key +
                                 "' must be a string array");
    }
    return std::get<std::vector<std::string>>(v);
}

TomlTable parse_toml_text(const std::string& text, const std::string& origin) {
    TomlTable table;
    std::istringstream in(text);
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[') {
            fail(origin, line_no,
                 "tables are not supported; use flat keys");
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            fail(origin, line_no, "expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) fail(origin, line_no, "empty key");
        for (char c : key) {
            if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') {
                fail(origin, line_no, "invalid key '" + key + "'");
            }
        }
        if (table.count(key)) {
            fail(origin, line_no, "duplicate key '" + key + "'");
        }
        std::string value = trim(line.substr(eq + 1));
        if (value.empty()) fail(origin, line_no, "missing value");
        if (value.front() == '[') {
            if (value.back() != ']') {
                fail(origin, line_no, "unterminated array");
            }
            table.emplace(key, parse_array(value.substr(1, value.size() - 2),
                                           origin, line_no));
        } else {
            table.emplace(key, parse_scalar(value, origin, line_no));
        }
    }
    return table;
}

TomlTable parse_toml_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open config: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_toml_text(buf.str(), path);
}

}  // namespace fleetcast
