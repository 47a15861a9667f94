// rieszlab: file-based driver for the experiment pipelines.
//
// Exit status: 0 success, 2 invalid invocation or config, 3 numeric failure.

#include "commands.hpp"

#include "rieszlab/core.hpp"
#include "rieszlab/parallel.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#ifndef RIESZLAB_GIT_REVISION
#define RIESZLAB_GIT_REVISION "unknown"
#endif

namespace fs = std::filesystem;
using namespace rieszlab;
using namespace rieszlab::cli;

namespace {

constexpr int kExitSchema = 2;
constexpr int kExitNumeric = 3;

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("--config", "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw SchemaError("config", std::string("invalid JSON: ") + e.what());
  }
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

int run(const std::string& command, const std::string& config_path, const std::string& out_dir,
        std::optional<std::uint64_t> seed, std::optional<double> tolerance) {
  json cfg = load_config(config_path);
  if (!cfg.is_object()) throw SchemaError("config", "expected an object");
  if (seed) cfg["seed"] = *seed;
  if (tolerance) cfg["tolerance"] = *tolerance;

  Obj root(cfg, "");
  const std::string declared = root.string("command", command);
  if (declared != command) throw SchemaError("command", "config is for '" + declared + "', not '" + command + "'");
  const std::string name = root.string("name", command);
  if (name.empty() || name.find('/') != std::string::npos) throw SchemaError("name", "must be a plain file stem");
  Context ctx;
  ctx.command = command;
  if (root.has("seed")) ctx.seed = root.u64("seed");
  root.skip("seed");
  if (root.has("tolerance")) {
    ctx.tolerance = root.number("tolerance");
    if (!(*ctx.tolerance > 0.0)) throw SchemaError("tolerance", "must be positive");
  }
  root.skip("tolerance");
  ctx.config_dir = fs::absolute(config_path).parent_path().string();

  const auto& table = commands();
  const auto it = std::find_if(table.begin(), table.end(), [&](const auto& c) { return c.first == command; });
  Output out = it->second(root, ctx);

  json summary;
  summary["command"] = command;
  summary["name"] = name;
  summary["config"] = cfg;
  summary["provenance"] = {{"config_hash", hex64(fnv1a64(cfg.dump()))},
                           {"seed", ctx.seed ? json(*ctx.seed) : json(nullptr)},
                           {"git_revision", RIESZLAB_GIT_REVISION}};
  summary["result"] = std::move(out.result);

  fs::create_directories(out_dir);
  write_file(fs::path(out_dir) / (name + ".csv"), out.csv);
  write_file(fs::path(out_dir) / (name + ".summary.json"), summary.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rieszlab: Riesz jellium, uniform electron gas and optimal transport experiments"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir = ".";
  std::uint64_t seed_value = 0;
  double tolerance_value = 0.0;
  unsigned threads = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "Seed for stochastic commands (overrides the config)");
  auto* tol_opt = app.add_option("--tolerance", tolerance_value, "Numerical tolerance (overrides the config)");
  app.add_option("--threads", threads, "Worker thread cap (0 = hardware default)");
  app.add_option("--out", out_dir, "Output directory")->capture_default_str();

  for (const auto& [name, fn] : commands()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " pipeline");
    sub->add_option("--config", config_path, "JSON config file")->required();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitSchema;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  set_max_threads(threads);
  try {
    return run(command, config_path, out_dir, seed_opt->count() ? std::optional(seed_value) : std::nullopt,
               tol_opt->count() ? std::optional(tolerance_value) : std::nullopt);
  } catch (const SchemaError& e) {
    std::cerr << "rieszlab " << command << ": invalid config: " << e.what() << "\n";
    return kExitSchema;
  } catch (const Error& e) {
    std::cerr << "rieszlab " << command << ": numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "rieszlab " << command << ": " << e.what() << "\n";
    return kExitNumeric;
  }
}
