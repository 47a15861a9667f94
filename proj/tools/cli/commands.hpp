#pragma once

#include "schema.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace rieszlab::cli {

/// Values shared by every command after the command-line overrides are applied.
struct Context {
  std::string command;
  std::optional<std::uint64_t> seed;
  std::optional<double> tolerance;
  std::string config_dir;  ///< relative paths inside the config resolve here
};

struct Output {
  std::string csv;
  json result;
};

/// '.'-decimal, shortest round-trip formatting independent of the locale.
std::string format_number(double x);

class Csv {
 public:
  explicit Csv(std::vector<std::string> header);
  Csv& cell(double x);
  Csv& cell(long x);
  Csv& cell(std::size_t x);
  Csv& cell(int x) { return cell(static_cast<long>(x)); }
  Csv& cell(const std::string& x);
  void end_row();
  std::string str() const { return out_; }

 private:
  std::string out_;
  bool first_ = true;
};

using Command = std::function<Output(Obj&, const Context&)>;

/// Name → implementation, in the order shown by --help.
const std::vector<std::pair<std::string, Command>>& commands();

}  // namespace rieszlab::cli
