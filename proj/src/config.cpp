#include "dprobe/config.hpp"

#include "dprobe/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace dprobe {

namespace {

std::string trim(const std::string& s)
{
    std::size_t a = 0;
    std::size_t b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) {
        ++a;
    }
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) {
        --b;
    }
    return s.substr(a, b - a);
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) {
        out.push_back(trim(cur));
    }
    return out;
}

std::vector<std::string> words(const std::string& s)
{
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string w;
    while (is >> w) {
        out.push_back(w);
    }
    return out;
}

} // namespace

KeyValueConfig KeyValueConfig::parse(const std::string& text)
{
    KeyValueConfig cfg;
    std::istringstream is(text);
    std::string raw;
    std::string section;
    int line = 0;
    while (std::getline(is, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (s.empty()) {
            continue;
        }
        if (s.front() == '[') {
            if (s.back() != ']' || s.size() < 3) {
                throw ConfigError(line, s, "malformed section header");
            }
            section = trim(s.substr(1, s.size() - 2));
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(line, s, "expected 'key = value'");
        }
        std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError(line, "", "empty key");
        }
        if (!section.empty()) {
            key = section + "." + key;
        }
        if (cfg.entries_.count(key)) {
            throw ConfigError(line, key, "duplicate key (first set on line " +
                                             std::to_string(cfg.entries_[key].line) + ")");
        }
        cfg.entries_[key] = Entry{value, line};
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(0, "", "cannot open '" + path + "'");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

const KeyValueConfig::Entry* KeyValueConfig::find(const std::string& key) const
{
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
}

const KeyValueConfig::Entry& KeyValueConfig::at(const std::string& key) const
{
    if (const Entry* e = find(key)) {
        return *e;
    }
    throw ConfigError(0, key, "missing required key");
}

std::vector<std::string> KeyValueConfig::keys_with_prefix(const std::string& prefix) const
{
    std::vector<std::string> out;
    for (const auto& [k, e] : entries_) {
        if (k.rfind(prefix, 0) == 0) {
            out.push_back(k);
        }
    }
    return out;
}

double KeyValueConfig::get_double(const std::string& key, std::optional<double> fallback) const
{
    if (const Entry* e = find(key)) {
        return parse_double(e->value, e->line, key);
    }
    if (fallback) {
        return *fallback;
    }
    throw ConfigError(0, key, "missing required key");
}

int KeyValueConfig::get_int(const std::string& key, std::optional<int> fallback) const
{
    if (const Entry* e = find(key)) {
        int v = 0;
        const auto* b = e->value.data();
        const auto* end = b + e->value.size();
        auto [p, ec] = std::from_chars(b, end, v);
        if (ec != std::errc() || p != end) {
            throw ConfigError(e->line, key, "expected an integer, got '" + e->value + "'");
        }
        return v;
    }
    if (fallback) {
        return *fallback;
    }
    throw ConfigError(0, key, "missing required key");
}

std::string KeyValueConfig::get_string(const std::string& key, std::optional<std::string> fallback) const
{
    if (const Entry* e = find(key)) {
        return e->value;
    }
    if (fallback) {
        return *fallback;
    }
    throw ConfigError(0, key, "missing required key");
}

std::vector<double> KeyValueConfig::get_list(const std::string& key) const
{
    const Entry& e = at(key);
    return parse_list(e.value, e.line, key);
}

double parse_double(const std::string& text, int line, const std::string& key)
{
    const std::string s = trim(text);
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty()) {
        throw ConfigError(line, key, "expected a number, got '" + s + "'");
    }
    return v;
}

Vec3 parse_vec3(const std::string& text, int line, const std::string& key)
{
    const auto w = words(text);
    if (w.size() != 3) {
        throw ConfigError(line, key, "expected three numbers 'x y z', got '" + trim(text) + "'");
    }
    return {parse_double(w[0], line, key), parse_double(w[1], line, key), parse_double(w[2], line, key)};
}

std::vector<double> parse_list(const std::string& text, int line, const std::string& key)
{
    std::string s = text;
    std::replace(s.begin(), s.end(), ',', ' ');
    std::vector<double> out;
    for (const auto& w : words(s)) {
        out.push_back(parse_double(w, line, key));
    }
    if (out.empty()) {
        throw ConfigError(line, key, "empty list");
    }
    return out;
}

PointPath parse_point_path(const std::string& text, Extension ext, int line, const std::string& key)
{
    if (text.find(':') == std::string::npos) {
        return PointPath({{0.0, parse_vec3(text, line, key)}}, ext);
    }
    std::vector<PointPath::Knot> knots;
    for (const auto& item : split(text, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) {
            throw ConfigError(line, key, "control point '" + item + "' must read 't: x y z'");
        }
        knots.push_back({parse_double(item.substr(0, colon), line, key),
                         parse_vec3(item.substr(colon + 1), line, key)});
    }
    try {
        return PointPath(std::move(knots), ext);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(line, key, e.what());
    }
}

ScalarPath parse_scalar_path(const std::string& text, int line, const std::string& key)
{
    if (text.find(':') == std::string::npos) {
        return ScalarPath::constant(parse_double(text, line, key));
    }
    std::vector<ScalarPath::Knot> knots;
    for (const auto& item : split(text, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) {
            throw ConfigError(line, key, "control point '" + item + "' must read 't: r'");
        }
        knots.push_back({parse_double(item.substr(0, colon), line, key),
                         parse_double(item.substr(colon + 1), line, key)});
    }
    try {
        return ScalarPath(std::move(knots));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(line, key, e.what());
    }
}

Scenario load_scenario(const KeyValueConfig& cfg)
{
    Scenario s;
    if (const auto* e = cfg.find("domain")) {
        const auto v = parse_list(e->value, e->line, "domain");
        if (v.size() != 6) {
            throw ConfigError(e->line, "domain", "expected 'x0 y0 z0 x1 y1 z1'");
        }
        s.box = Box{{v[0], v[1], v[2]}, {v[3], v[4], v[5]}};
    }
    s.horizon = cfg.get_double("horizon", 1.0);
    s.contrast_bound = cfg.get_double("inclusion.contrast_bound", 4.0);

    auto& inc = s.inclusion;
    if (const auto* e = cfg.find("inclusion.shape")) {
        if (e->value == "ball") {
            inc.shape = InclusionShape::Ball;
        } else if (e->value == "ellipsoid") {
            inc.shape = InclusionShape::Ellipsoid;
        } else {
            throw ConfigError(e->line, "inclusion.shape", "expected 'ball' or 'ellipsoid'");
        }
    }
    if (const auto* e = cfg.find("inclusion.center_path")) {
        inc.center_path = parse_point_path(e->value, Extension::Constant, e->line, "inclusion.center_path");
    }
    if (const auto* e = cfg.find("inclusion.radius_path")) {
        inc.radius_path = parse_scalar_path(e->value, e->line, "inclusion.radius_path");
    }
    if (const auto* e = cfg.find("inclusion.axes")) {
        if (inc.shape == InclusionShape::Ball) {
            throw ConfigError(e->line, "inclusion.axes", "axes only apply to shape = ellipsoid");
        }
        inc.axes = parse_vec3(e->value, e->line, "inclusion.axes");
    }
    inc.k0 = cfg.get_double("inclusion.k0", 2.0);

    auto& v0 = s.v0;
    if (const auto* e = cfg.find("v0.kind")) {
        if (e->value == "zero") {
            v0.kind = InitialData::Kind::Zero;
        } else if (e->value == "constant") {
            v0.kind = InitialData::Kind::Constant;
        } else if (e->value == "bump") {
            v0.kind = InitialData::Kind::Bump;
        } else if (e->value == "probe") {
            v0.kind = InitialData::Kind::ProbeSeeded;
        } else {
            throw ConfigError(e->line, "v0.kind", "expected zero, constant, bump or probe");
        }
    }
    v0.value = cfg.get_double("v0.value", 0.0);
    if (const auto* e = cfg.find("v0.center")) {
        v0.center = parse_vec3(e->value, e->line, "v0.center");
    }
    v0.width = cfg.get_double("v0.width", 0.1);
    v0.l0 = cfg.get_double("v0.l0", cfg.get_double("l0", 0.0));
    v0.bound_constant = cfg.get_double("v0.bound_constant", 1.0);
    return s;
}

Needle load_needle(const KeyValueConfig& cfg, const std::string& prefix, const std::string& name)
{
    Extension ext = Extension::Constant;
    if (const auto* e = cfg.find(prefix + ".extension")) {
        if (e->value == "constant") {
            ext = Extension::Constant;
        } else if (e->value == "linear") {
            ext = Extension::Linear;
        } else {
            throw ConfigError(e->line, prefix + ".extension", "expected 'constant' or 'linear'");
        }
    }
    const auto& e = cfg.at(prefix + ".path");
    Needle n;
    n.path = parse_point_path(e.value, ext, e.line, prefix + ".path");
    n.name = name;
    return n;
}

} // namespace dprobe
