#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <boost/property_tree/ptree.hpp>

namespace moba {

// Sectioned key-value configuration ("[section]" headers, "key = value"
// lines, '#' or ';' comments). Keys are addressed as "section.key".
class KvConfig {
 public:
  KvConfig() = default;

  static KvConfig load(const std::filesystem::path& path);
  static KvConfig parse(const std::string& text);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  void set(const std::string& key, const std::string& value);
  std::string to_string() const;

 private:
  std::optional<std::string> raw(const std::string& key) const;
  boost::property_tree::ptree tree_;
};

}  // namespace moba
