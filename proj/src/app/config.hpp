#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace paleo::app {

enum class ValueType { string, real, integer, boolean, real_list, int_list, choice, choice_list };

struct KeySpec {
  std::string key;
  ValueType type;
  std::string fallback;  // empty: no default
  std::vector<std::string> choices;
  std::string doc;
};

/// Every key a scenario file may set. Keys of superposition and product parts
/// (state.partN.<field>) are checked against part_keys().
const std::vector<KeySpec>& schema();
const std::vector<KeySpec>& part_keys();

struct Entry {
  std::string value;
  std::string origin;  // "file:line" or "override"
};

/// Flat key = value text. `[a.b]` opens a section whose name prefixes the
/// following keys; `#` starts a comment. Keys are checked against the schema
/// as they are read and every error names the key and the line.
class Config {
 public:
  static Config load(const std::string& path);
  static Config parse(const std::string& text, const std::string& origin);

  /// key=value. A bare key that names exactly one schema key (dt for
  /// evolution.dt) is accepted.
  void apply_override(const std::string& assignment);
  void set(const std::string& key, const std::string& value, const std::string& origin);

  bool has(const std::string& key) const;  // set explicitly
  std::string text(const std::string& key) const;
  double real(const std::string& key) const;
  long integer(const std::string& key) const;
  bool boolean(const std::string& key) const;
  std::vector<double> reals(const std::string& key) const;
  std::vector<long> integers(const std::string& key) const;
  std::vector<std::string> words(const std::string& key) const;
  std::string origin(const std::string& key) const;

  /// Indices N of the state.partN.* keys that are set, ascending.
  std::vector<int> parts() const;

  /// Every schema key with its effective value, then the part keys; one per line.
  std::string echo() const;
  const std::string& source() const noexcept { return source_; }

 private:
  const KeySpec& spec_of(const std::string& key) const;
  std::string raw(const std::string& key) const;
  [[noreturn]] void bad(const std::string& key, const std::string& what) const;

  std::map<std::string, Entry> entries_;
  std::string source_;
};

}  // namespace paleo::app
