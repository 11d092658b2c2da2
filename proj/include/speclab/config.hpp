#pragma once

// Flat key = value run configuration:
//
//   # comment
//   command = reilly
//   f = "x^2 - y^2"      # quotes optional, needed only for '#'
//   K = 0
//
// No sections, no nesting, no duplicate keys. Unknown keys are errors.
// "β" and "φ" are accepted as spellings of beta and phi.

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace speclab {

class RunConfig {
 public:
  struct Entry {
    std::string text;
    std::size_t line = 0;  // 0 for values set programmatically
  };

  /// Throws ConfigError with the offending line.
  static RunConfig parse(std::istream& in);
  static RunConfig parse_string(const std::string& text);
  static RunConfig load(const std::string& path);

  static const std::vector<std::string>& known_keys();

  bool has(const std::string& key) const;
  std::size_t line(const std::string& key) const;
  const std::string& text(const std::string& key) const;  // ConfigError when absent
  std::string text_or(const std::string& key, const std::string& fallback) const;
  double number(const std::string& key) const;
  double number_or(const std::string& key, double fallback) const;
  /// Integer >= min_value.
  std::size_t count_or(const std::string& key, std::size_t fallback, std::size_t min_value) const;
  bool flag_or(const std::string& key, bool fallback) const;
  /// Comma- or whitespace-separated numbers; may be empty.
  std::vector<double> list(const std::string& key) const;

  void set(const std::string& key, const std::string& text);
  void erase(const std::string& key);
  const std::map<std::string, Entry>& entries() const { return entries_; }

 private:
  std::map<std::string, Entry> entries_;
};

}  // namespace speclab
