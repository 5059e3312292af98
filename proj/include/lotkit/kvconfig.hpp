#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

namespace lotkit {

// `key = value` config files: one pair per line, '#' starts a comment,
// blank lines ignored. Values are scalars or comma-separated lists.
class KvConfig {
public:
    static KvConfig parse_file(const std::string& path);
    static KvConfig parse_string(const std::string& text, const std::string& origin = "<string>");

    bool has(const std::string& key) const;

    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    long get_long(const std::string& key) const;
    long get_long(const std::string& key, long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_doubles(const std::string& key) const;
    std::vector<std::string> get_strings(const std::string& key) const;

    // Throws ConfigError if the file contains keys outside `allowed`.
    void require_known_keys(const std::set<std::string>& allowed) const;

private:
    std::map<std::string, std::string> values_;
    std::string origin_;
};

}  // namespace lotkit
