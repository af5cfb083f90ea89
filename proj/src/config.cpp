#include "cmaflow/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace cmaflow {

namespace {

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

/// The documented schema: every known [section] key. Unknown keys are errors.
const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s = {
        {"experiment", {"kind"}},
        {"domain", {"kind", "n", "coeffs", "dilation"}},
        {"grid", {"h", "h_sequence", "budget"}},
        {"time", {"horizon", "snapshots", "extra_snapshots"}},
        {"stepper",
         {"kind", "cfl_safety", "dt", "dt_sequence", "dt_min", "newton_tol", "newton_max_iters",
          "lin_tol", "lin_max_iters"}},
        {"scenario", {"kind", "a", "b", "c", "value", "m_reg"}},
        {"initial", {"kind", "a", "c", "value"}},
        {"source", {"kind", "b"}},
        {"boundary", {"kind", "a", "b", "value"}},
        {"cascade", {"levels", "certify", "pair_tol"}},
        {"monitors",
         {"epsilon", "bounds", "trace", "trace_threshold_frac", "holder", "holder_alpha",
          "guan", "shift_m", "comparison"}},
        {"oracle", {"kind", "factor", "m_reg"}},
        {"output", {"dir", "seed", "write_snapshots", "write_binary"}},
    };
    return s;
}

}  // namespace

Config Config::parse_string(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(line, "malformed section header at line " +
                                            std::to_string(lineno) + ": " + line);
            section = trim(line.substr(1, line.size() - 2));
            if (schema().find(section) == schema().end())
                throw ConfigError(section, "unknown section [" + section + "] at line " +
                                               std::to_string(lineno));
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(line, "expected key = value at line " + std::to_string(lineno) +
                                        ": " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty())
            throw ConfigError(key, "key '" + key + "' outside any section at line " +
                                       std::to_string(lineno));
        cfg.values_[section][key] = value;
    }
    cfg.validate_schema();
    return cfg;
}

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, "cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str());
}

void Config::validate_schema() const {
    for (const auto& [section, kv] : values_) {
        const auto it = schema().find(section);
        if (it == schema().end())
            throw ConfigError(section, "unknown section [" + section + "]");
        for (const auto& [key, value] : kv) {
            (void)value;
            if (it->second.find(key) == it->second.end())
                throw ConfigError(key, "unknown key '" + key + "' in section [" + section + "]");
        }
    }
}

bool Config::has(const std::string& section, const std::string& key) const {
    const auto s = values_.find(section);
    return s != values_.end() && s->second.find(key) != s->second.end();
}

std::string Config::get(const std::string& section, const std::string& key,
                        const std::string& fallback) const {
    const auto s = values_.find(section);
    if (s == values_.end()) return fallback;
    const auto k = s->second.find(key);
    return k == s->second.end() ? fallback : k->second;
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
    if (!has(section, key)) return fallback;
    const std::string v = get(section, key, "");
    try {
        size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError(key, "key '" + key + "' in [" + section + "] is not a number: " + v);
    }
}

long Config::get_long(const std::string& section, const std::string& key, long fallback) const {
    if (!has(section, key)) return fallback;
    const std::string v = get(section, key, "");
    try {
        size_t pos = 0;
        const long x = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError(key, "key '" + key + "' in [" + section + "] is not an integer: " + v);
    }
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
    if (!has(section, key)) return fallback;
    std::string v = get(section, key, "");
    std::transform(v.begin(), v.end(), v.begin(), ::tolower);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError(key, "key '" + key + "' in [" + section + "] is not a boolean: " + v);
}

std::vector<double> Config::get_list(const std::string& section, const std::string& key) const {
    std::vector<double> out;
    if (!has(section, key)) return out;
    std::stringstream ss(get(section, key, ""));
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (tok.empty()) continue;
        try {
            out.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw ConfigError(key, "list key '" + key + "' holds a non-number: " + tok);
        }
    }
    return out;
}

std::vector<long> Config::get_int_list(const std::string& section, const std::string& key) const {
    std::vector<long> out;
    for (double v : get_list(section, key)) out.push_back(static_cast<long>(v));
    return out;
}

void Config::override_value(const std::string& section, const std::string& key,
                            const std::string& value) {
    values_[section][key] = value;
    validate_schema();
}

std::string Config::canonical() const {
    std::string out;
    for (const auto& [section, kv] : values_) {
        out += "[" + section + "]\n";
        for (const auto& [key, value] : kv) out += key + " = " + value + "\n";
    }
    return out;
}

}  // namespace cmaflow
