#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace tsdm {

// Flat "key = value" text format. '#' starts a comment; blank lines are
// ignored. Consumers must take every key they recognize and then call
// reject_unknown() so typos surface as errors.
class KeyValueFile {
 public:
  static KeyValueFile parse(const std::filesystem::path& file);
  static KeyValueFile parse_text(const std::string& text, const std::string& origin);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback);
  double get_double(const std::string& key, double fallback);
  int get_int(const std::string& key, int fallback);
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback);
  bool get_bool(const std::string& key, bool fallback);
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& fallback);

  // Keys present in the file but never fetched.
  std::vector<std::string> unknown_keys() const;
  void reject_unknown() const;

  const std::map<std::string, std::string>& entries() const { return values_; }
  void mark_consumed(const std::string& key) { consumed_.insert(key); }

 private:
  std::string origin_;
  std::map<std::string, std::string> values_;
  std::set<std::string> consumed_;
};

}  // namespace tsdm
