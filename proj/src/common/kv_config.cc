#include "moba/common/kv_config.h"

#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>

#include "moba/common/error.h"

namespace moba {

namespace pt = boost::property_tree;

KvConfig KvConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

KvConfig KvConfig::parse(const std::string& text) {
  KvConfig cfg;
  std::istringstream in(text);
  try {
    pt::read_ini(in, cfg.tree_);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("line " + std::to_string(e.line()), e.message());
  }
  return cfg;
}

std::optional<std::string> KvConfig::raw(const std::string& key) const {
  auto v = tree_.get_optional<std::string>(pt::ptree::path_type(key, '.'));
  if (!v) return std::nullopt;
  return *v;
}

bool KvConfig::has(const std::string& key) const { return raw(key).has_value(); }

std::string KvConfig::get_string(const std::string& key, const std::string& fallback) const {
  auto v = raw(key);
  return v ? *v : fallback;
}

double KvConfig::get_double(const std::string& key, double fallback) const {
  auto v = raw(key);
  if (!v) return fallback;
  try {
    size_t pos = 0;
    double d = std::stod(*v, &pos);
    if (pos != v->size()) throw std::invalid_argument("trailing");
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key, "expected a number, got '" + *v + "'");
  }
}

long long KvConfig::get_int(const std::string& key, long long fallback) const {
  auto v = raw(key);
  if (!v) return fallback;
  try {
    size_t pos = 0;
    long long i = std::stoll(*v, &pos);
    if (pos != v->size()) throw std::invalid_argument("trailing");
    return i;
  } catch (const std::exception&) {
    throw ConfigError(key, "expected an integer, got '" + *v + "'");
  }
}

bool KvConfig::get_bool(const std::string& key, bool fallback) const {
  auto v = raw(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
  if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
  throw ConfigError(key, "expected a boolean, got '" + *v + "'");
}

void KvConfig::set(const std::string& key, const std::string& value) {
  tree_.put(pt::ptree::path_type(key, '.'), value);
}

std::string KvConfig::to_string() const {
  std::ostringstream out;
  pt::write_ini(out, tree_);
  return out.str();
}

}  // namespace moba
