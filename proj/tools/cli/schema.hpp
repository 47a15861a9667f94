#pragma once

#include <json.hpp>

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace rieszlab::cli {

using nlohmann::json;

/// Config does not match the documented schema; `field` is a dotted path.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::string field, const std::string& msg)
      : std::runtime_error(field + ": " + msg), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Typed read access to one JSON object. Every key that is read is marked, and
/// finish() rejects the rest so typos point at the offending field.
class Obj {
 public:
  Obj(const json& j, std::string path);

  bool has(const std::string& key) const;
  std::string at(const std::string& key) const;

  double number(const std::string& key);
  double number(const std::string& key, double fallback);
  long integer(const std::string& key);
  long integer(const std::string& key, long fallback);
  std::uint64_t u64(const std::string& key);
  bool boolean(const std::string& key, bool fallback);
  std::string string(const std::string& key);
  std::string string(const std::string& key, const std::string& fallback);
  std::vector<double> numbers(const std::string& key);
  std::vector<long> integers(const std::string& key);
  /// Array of points, each an array of `d` numbers.
  std::vector<std::vector<double>> points(const std::string& key, int d);
  Obj object(const std::string& key);
  const json& raw(const std::string& key);
  void skip(const std::string& key) { seen_.insert(key); }

  void finish() const;

 private:
  const json& get(const std::string& key);
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace rieszlab::cli
