#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cmaflow/errors.hpp"

namespace cmaflow {

/// Sectioned key-value configuration ([section] key = value). Unknown keys are
/// rejected against the documented schema; all defaults live here.
class Config {
public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text);

    bool has(const std::string& section, const std::string& key) const;
    std::string get(const std::string& section, const std::string& key,
                    const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    long get_long(const std::string& section, const std::string& key, long fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
    std::vector<double> get_list(const std::string& section, const std::string& key) const;
    std::vector<long> get_int_list(const std::string& section, const std::string& key) const;

    void override_value(const std::string& section, const std::string& key,
                        const std::string& value);

    /// Canonical serialization (sorted sections/keys) used for reproducibility.
    std::string canonical() const;

private:
    void validate_schema() const;
    std::map<std::string, std::map<std::string, std::string>> values_;
};

}  // namespace cmaflow
