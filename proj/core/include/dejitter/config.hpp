#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dejitter {

/// Flat key-value configuration with [section] headers and '#' comments.
/// Keys are addressed as "section.key".
class Config {
  public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text);

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key) const;
    long long get_int(const std::string& key, long long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_double_list(const std::string& key) const;

    void set(const std::string& key, const std::string& value);
    const std::map<std::string, std::string>& entries() const { return values_; }

    /// Throws std::invalid_argument unless exactly one of `keys` is present.
    std::string require_exactly_one(const std::vector<std::string>& keys) const;

  private:
    std::map<std::string, std::string> values_;
};

}  // namespace dejitter
