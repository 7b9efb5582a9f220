#include "tsdm/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tsdm {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

KeyValueFile KeyValueFile::parse(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open config file " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str(), file.string());
}

KeyValueFile KeyValueFile::parse_text(const std::string& text,
                                      const std::string& origin) {
  KeyValueFile out;
  out.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                               ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": empty key");
    out.values_[key] = value;
  }
  return out;
}

bool KeyValueFile::has(const std::string& key) const {
  return values_.count(key) > 0;
}

std::string KeyValueFile::get_string(const std::string& key,
                                     const std::string& fallback) {
  consumed_.insert(key);
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double KeyValueFile::get_double(const std::string& key, double fallback) {
  consumed_.insert(key);
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t pos = 0;
    const double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing data");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(origin_ + ": key '" + key + "': expected a number, got '" +
                             it->second + "'");
  }
}

int KeyValueFile::get_int(const std::string& key, int fallback) {
  const double v = get_double(key, double(fallback));
  const int i = int(v);
  if (double(i) != v)
    throw std::runtime_error(origin_ + ": key '" + key + "': expected an integer");
  return i;
}

std::uint64_t KeyValueFile::get_u64(const std::string& key, std::uint64_t fallback) {
  consumed_.insert(key);
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t pos = 0;
    const std::uint64_t v = std::stoull(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing data");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(origin_ + ": key '" + key +
                             "': expected an unsigned integer");
  }
}

bool KeyValueFile::get_bool(const std::string& key, bool fallback) {
  consumed_.insert(key);
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw std::runtime_error(origin_ + ": key '" + key + "': expected a boolean");
}

std::vector<double> KeyValueFile::get_double_list(
    const std::string& key, const std::vector<double>& fallback) {
  consumed_.insert(key);
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<double> out;
  std::stringstream ss(it->second);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw std::runtime_error(origin_ + ": key '" + key + "': expected numbers");
    }
  }
  if (out.empty())
    throw std::runtime_error(origin_ + ": key '" + key + "': empty list");
  return out;
}

std::vector<std::string> KeyValueFile::unknown_keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_)
    if (!consumed_.count(k)) out.push_back(k);
  return out;
}

void KeyValueFile::reject_unknown() const {
  const auto unknown = unknown_keys();
  if (!unknown.empty())
    throw std::runtime_error(origin_ + ": unknown key '" + unknown.front() + "'");
}

}  // namespace tsdm
