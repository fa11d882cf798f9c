#include "copr/config.hpp"

#include <fstream>
#include <sstream>

#include "copr/text.hpp"

namespace copr {

Config Config::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str(), path);
}

Config Config::from_string(std::string_view text, const std::string& origin) {
  Config cfg;
  std::size_t line_no = 0;
  for (const auto& raw_line : split(text, '\n')) {
    ++line_no;
    std::string_view line = raw_line;
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": expected 'key = value', got '" + std::string(line) + "'");
    }
    const auto key = std::string(trim(line.substr(0, eq)));
    const auto value = std::string(trim(line.substr(eq + 1)));
    if (key.empty()) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
    }
    cfg.kv_[key] = value;
  }
  return cfg;
}

std::string Config::get_str(const std::string& key) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) throw ConfigError("missing config key: " + key);
  return it->second;
}

std::int64_t Config::get_int(const std::string& key) const {
  try {
    return parse_int(get_str(key));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' is not an integer: " + get_str(key));
  }
}

double Config::get_double(const std::string& key) const {
  try {
    return parse_double(get_str(key));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' is not a number: " + get_str(key));
  }
}

bool Config::get_bool(const std::string& key) const {
  const std::string v = get_str(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key '" + key + "' is not a boolean: " + v);
}

std::string Config::get_str(const std::string& key, const std::string& def) const {
  return has(key) ? get_str(key) : def;
}

std::int64_t Config::get_int(const std::string& key, std::int64_t def) const {
  return has(key) ? get_int(key) : def;
}

double Config::get_double(const std::string& key, double def) const {
  return has(key) ? get_double(key) : def;
}

bool Config::get_bool(const std::string& key, bool def) const {
  return has(key) ? get_bool(key) : def;
}

std::vector<std::int64_t> Config::get_int_list(const std::string& key,
                                               const std::vector<std::int64_t>& def) const {
  if (!has(key)) return def;
  std::vector<std::int64_t> out;
  for (const auto& part : split(get_str(key), ',')) {
    try {
      out.push_back(parse_int(part));
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "' is not an integer list: " + get_str(key));
    }
  }
  return out;
}

std::string Config::canonical(const std::string& prefix) const {
  std::string out;
  for (const auto& [k, v] : kv_) {
    if (!prefix.empty() && k.rfind(prefix, 0) != 0) continue;
    out += k;
    out += " = ";
    out += v;
    out += '\n';
  }
  return out;
}

std::uint64_t Config::digest(const std::string& prefix) const {
  return fnv1a64(canonical(prefix));
}

}  // namespace copr
