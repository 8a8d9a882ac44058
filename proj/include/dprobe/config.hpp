#pragma once

#include "dprobe/scenario.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dprobe {

/// Flat `key = value` file. `[section]` headers prefix the following keys with
/// "section."; `#` starts a comment. Keys keep the line they came from so that
/// later conversion errors can point back into the file.
class KeyValueConfig {
public:
    struct Entry {
        std::string value;
        int line = 0;
    };

    static KeyValueConfig parse(const std::string& text);
    static KeyValueConfig load(const std::string& path);

    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    const Entry* find(const std::string& key) const;
    const Entry& at(const std::string& key) const;
    std::vector<std::string> keys_with_prefix(const std::string& prefix) const;
    const std::map<std::string, Entry>& entries() const { return entries_; }

    double get_double(const std::string& key, std::optional<double> fallback = {}) const;
    int get_int(const std::string& key, std::optional<int> fallback = {}) const;
    std::string get_string(const std::string& key, std::optional<std::string> fallback = {}) const;
    std::vector<double> get_list(const std::string& key) const;

private:
    std::map<std::string, Entry> entries_;
};

// Value parsers; `line`/`key` only feed the ConfigError message.
double parse_double(const std::string& text, int line, const std::string& key);
Vec3 parse_vec3(const std::string& text, int line, const std::string& key);
std::vector<double> parse_list(const std::string& text, int line, const std::string& key);
/// "t: x y z, t: x y z" (or a bare "x y z" for a constant path).
PointPath parse_point_path(const std::string& text, Extension ext, int line, const std::string& key);
/// "t: r, t: r" (or a bare "r").
ScalarPath parse_scalar_path(const std::string& text, int line, const std::string& key);

Scenario load_scenario(const KeyValueConfig& cfg);
/// Reads `<prefix>.path` and `<prefix>.extension`.
Needle load_needle(const KeyValueConfig& cfg, const std::string& prefix = "needle",
                   const std::string& name = "needle");

} // namespace dprobe
