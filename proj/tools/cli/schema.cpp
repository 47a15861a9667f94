#include "schema.hpp"

#include <cmath>
#include <limits>

namespace rieszlab::cli {

Obj::Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
  if (!j_.is_object()) throw SchemaError(path_.empty() ? "config" : path_, "expected an object");
}

bool Obj::has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

std::string Obj::at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

const json& Obj::get(const std::string& key) {
  seen_.insert(key);
  if (!has(key)) throw SchemaError(at(key), "required field is missing");
  return j_.at(key);
}

const json& Obj::raw(const std::string& key) { return get(key); }

double Obj::number(const std::string& key) {
  const json& v = get(key);
  if (!v.is_number()) throw SchemaError(at(key), "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw SchemaError(at(key), "expected a finite number");
  return x;
}

double Obj::number(const std::string& key, double fallback) {
  seen_.insert(key);
  return has(key) ? number(key) : fallback;
}

long Obj::integer(const std::string& key) {
  const json& v = get(key);
  if (!v.is_number_integer()) throw SchemaError(at(key), "expected an integer");
  return v.get<long>();
}

long Obj::integer(const std::string& key, long fallback) {
  seen_.insert(key);
  return has(key) ? integer(key) : fallback;
}

std::uint64_t Obj::u64(const std::string& key) {
  const json& v = get(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::uint64_t>(v.get<long long>());
  throw SchemaError(at(key), "expected a non-negative integer");
}

bool Obj::boolean(const std::string& key, bool fallback) {
  seen_.insert(key);
  if (!has(key)) return fallback;
  const json& v = j_.at(key);
  if (!v.is_boolean()) throw SchemaError(at(key), "expected true or false");
  return v.get<bool>();
}

std::string Obj::string(const std::string& key) {
  const json& v = get(key);
  if (!v.is_string()) throw SchemaError(at(key), "expected a string");
  return v.get<std::string>();
}

std::string Obj::string(const std::string& key, const std::string& fallback) {
  seen_.insert(key);
  return has(key) ? string(key) : fallback;
}

std::vector<double> Obj::numbers(const std::string& key) {
  const json& v = get(key);
  if (!v.is_array()) throw SchemaError(at(key), "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw SchemaError(at(key) + "[" + std::to_string(i) + "]", "expected a number");
    out.push_back(v[i].get<double>());
  }
  return out;
}

std::vector<long> Obj::integers(const std::string& key) {
  const json& v = get(key);
  if (!v.is_array()) throw SchemaError(at(key), "expected an array of integers");
  std::vector<long> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number_integer()) throw SchemaError(at(key) + "[" + std::to_string(i) + "]", "expected an integer");
    out.push_back(v[i].get<long>());
  }
  return out;
}

std::vector<std::vector<double>> Obj::points(const std::string& key, int d) {
  const json& v = get(key);
  if (!v.is_array()) throw SchemaError(at(key), "expected an array of points");
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string p = at(key) + "[" + std::to_string(i) + "]";
    if (!v[i].is_array() || static_cast<int>(v[i].size()) != d)
      throw SchemaError(p, "expected an array of " + std::to_string(d) + " numbers");
    std::vector<double> x;
    for (const auto& c : v[i]) {
      if (!c.is_number()) throw SchemaError(p, "expected numbers");
      x.push_back(c.get<double>());
    }
    out.push_back(std::move(x));
  }
  return out;
}

Obj Obj::object(const std::string& key) { return Obj(get(key), at(key)); }

void Obj::finish() const {
  for (const auto& item : j_.items())
    if (!seen_.count(item.key())) throw SchemaError(at(item.key()), "unknown field");
}

}  // namespace rieszlab::cli
