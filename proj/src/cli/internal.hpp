#pragma once

// Helpers shared by the cli translation units.

#include <set>
#include <string>
#include <vector>

#include "kman/cli.hpp"
#include "kman/errors.hpp"

namespace kman::cli::detail {

/// Reads fields from a JSON object, remembering which were consumed so that typos are
/// reported instead of silently ignored.
class FieldReader {
 public:
  FieldReader(const json& j, std::string context) : j_(j), context_(std::move(context)) {
    if (!j_.is_object()) fail("", "expected a JSON object");
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  template <class T>
  T get(const std::string& key, T fallback) {
    used_.insert(key);
    if (!has(key)) return fallback;
    return convert<T>(key);
  }

  template <class T>
  T require(const std::string& key) {
    used_.insert(key);
    if (!has(key)) fail(key, "is required");
    return convert<T>(key);
  }

  const json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  void ignore(const std::string& key) { used_.insert(key); }

  /// Throws InvalidConfig naming the first unknown field.
  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!used_.count(key)) fail(key, "is not a recognised field");
    }
  }

  [[noreturn]] void fail(const std::string& key, const std::string& why) const {
    throw Error(ErrorKind::InvalidConfig,
                context_ + (key.empty() ? "" : " field '" + key + "'") + ": " + why);
  }

 private:
  template <class T>
  T convert(const std::string& key) {
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception&) {
      fail(key, "has the wrong type (" + j_.at(key).dump() + ")");
    }
  }

  const json& j_;
  std::string context_;
  std::set<std::string> used_;
};

/// A real-valued axis: a list, a single number, or {"logspace"|"linspace": [lo, hi, n]}.
std::vector<double> real_axis(const json& j, const std::string& what);

}  // namespace kman::cli::detail
