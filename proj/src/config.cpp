#include "vstream/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace vstream {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& raw) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(raw);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_string(buffer.str(), path);
}

Config Config::parse_string(const std::string& text, const std::string& origin) {
  Config cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::runtime_error("config: unterminated section at " + origin + ":" +
                                 std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw std::runtime_error("config: empty section name at " + origin + ":" +
                                 std::to_string(lineno));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: expected key = value at " + origin + ":" +
                               std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::runtime_error("config: empty key at " + origin + ":" + std::to_string(lineno));
    if (section.empty())
      throw std::runtime_error("config: key outside any section at " + origin + ":" +
                               std::to_string(lineno));
    cfg.values_[section + "." + key] = value;
  }
  return cfg;
}

bool Config::has(const std::string& section, const std::string& key) const {
  return values_.count(section + "." + key) > 0;
}

std::string Config::get(const std::string& section, const std::string& key,
                        const std::string& fallback) const {
  const auto it = values_.find(section + "." + key);
  return it == values_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
  if (!has(section, key)) return fallback;
  const std::string raw = get(section, key, "");
  try {
    size_t pos = 0;
    const double v = std::stod(raw, &pos);
    if (pos != raw.size()) throw std::invalid_argument(raw);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("config: bad number for " + section + "." + key + ": " + raw);
  }
}

int Config::get_int(const std::string& section, const std::string& key, int fallback) const {
  if (!has(section, key)) return fallback;
  const std::string raw = get(section, key, "");
  try {
    size_t pos = 0;
    const int v = std::stoi(raw, &pos);
    if (pos != raw.size()) throw std::invalid_argument(raw);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("config: bad integer for " + section + "." + key + ": " + raw);
  }
}

uint64_t Config::get_u64(const std::string& section, const std::string& key,
                         uint64_t fallback) const {
  if (!has(section, key)) return fallback;
  const std::string raw = get(section, key, "");
  try {
    size_t pos = 0;
    const uint64_t v = std::stoull(raw, &pos);
    if (pos != raw.size()) throw std::invalid_argument(raw);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("config: bad integer for " + section + "." + key + ": " + raw);
  }
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string raw = get(section, key, "");
  if (raw == "true" || raw == "1" || raw == "yes" || raw == "on") return true;
  if (raw == "false" || raw == "0" || raw == "no" || raw == "off") return false;
  throw std::runtime_error("config: bad boolean for " + section + "." + key + ": " + raw);
}

std::vector<double> Config::get_double_list(const std::string& section, const std::string& key,
                                            const std::vector<double>& fallback) const {
  if (!has(section, key)) return fallback;
  std::vector<double> out;
  for (const auto& item : split_list(get(section, key, ""))) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw std::runtime_error("config: bad number in list " + section + "." + key);
    }
  }
  return out;
}

std::vector<int> Config::get_int_list(const std::string& section, const std::string& key,
                                      const std::vector<int>& fallback) const {
  if (!has(section, key)) return fallback;
  std::vector<int> out;
  for (const auto& item : split_list(get(section, key, ""))) {
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw std::runtime_error("config: bad integer in list " + section + "." + key);
    }
  }
  return out;
}

std::vector<std::string> Config::get_string_list(const std::string& section,
                                                 const std::string& key,
                                                 const std::vector<std::string>& fallback) const {
  if (!has(section, key)) return fallback;
  return split_list(get(section, key, ""));
}

void Config::require_known(const std::map<std::string, std::set<std::string>>& allowed) const {
  for (const auto& [flat, value] : values_) {
    (void)value;
    const auto dot = flat.find('.');
    const std::string section = flat.substr(0, dot);
    const std::string key = flat.substr(dot + 1);
    const auto sec = allowed.find(section);
    if (sec == allowed.end())
      throw std::runtime_error("config: unknown section [" + section + "] in " + origin_);
    if (!sec->second.count(key))
      throw std::runtime_error("config: unknown key " + section + "." + key + " in " + origin_);
  }
}

}  // namespace vstream
