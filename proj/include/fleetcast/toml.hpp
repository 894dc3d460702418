#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace fleetcast {

// Minimal flat TOML reader covering what run configs need: `key = value`
// lines with string, boolean, integer, float, and homogeneous array
// values, plus `#` comments.  Tables/sections are rejected.
struct TomlValue {
    std::variant<std::string, bool, std::int64_t, double,
                 std::vector<double>, std::vector<std::string>>
        v;

    bool is_string() const { return std::holds_alternative<std::string>(v); }
    bool is_bool() const { return std::holds_alternative<bool>(v); }
    bool is_int() const { return std::holds_alternative<std::int64_t>(v); }
    bool is_float() const { return std::holds_alternative<double>(v); }

    // Typed getters with conversion where it is lossless (int -> double);
    // throw std::runtime_error otherwise, naming the key.
    std::string as_string(const std::string& key) const;
    bool as_bool(const std::string& key) const;
    std::int64_t as_int(const std::string& key) const;
    double as_double(const std::string& key) const;
    std::vector<double> as_double_array(const std::string& key) const;
    std::vector<std::string> as_string_array(const std::string& key) const;
};

using TomlTable = std::map<std::string, TomlValue>;

TomlTable parse_toml_file(const std::string& path);
TomlTable parse_toml_text(const std::string& text, const std::string& origin);

}  // namespace fleetcast
