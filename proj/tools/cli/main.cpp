// lcsum: command-line entry point for every workflow.

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>

#include "commands.hpp"
#include "lcsum/errors.hpp"
#include "manifest.hpp"

namespace fs = std::filesystem;
using namespace lcsum;
using namespace lcsum::cli;

namespace {

// Turns a flat JSON object into "--key value" arguments. Flags given on the
// command line come later and win.
// Turns a flat JSON object into "--key value" arguments, skipping keys whose
// flag is also given on the command line.
std::vector<std::string> config_arguments(const fs::path& file, const std::set<std::string>& explicit_keys) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot read config " + file.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ContractError("config " + file.string() + " is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw ContractError("config " + file.string() + " must be a flat JSON object");
  std::vector<std::string> args;
  for (const auto& [key, value] : j.items()) {
    if (explicit_keys.count(key) > 0) continue;
    const std::string flag = "--" + key;
    if (value.is_boolean()) {
      args.push_back(flag + (value.get<bool>() ? "=true" : "=false"));
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& v : value) {
        if (!joined.empty()) joined += ',';
        joined += v.is_string() ? v.get<std::string>() : v.dump();
      }
      args.insert(args.end(), {flag, joined});
    } else if (value.is_string()) {
      args.insert(args.end(), {flag, value.get<std::string>()});
    } else if (value.is_number()) {
      args.insert(args.end(), {flag, value.dump()});
    } else {
      throw ContractError("config key '" + key + "' must be a scalar, a boolean or a list");
    }
  }
  return args;
}

std::vector<std::string> expand_arguments(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  std::optional<std::string> path;
  std::set<std::string> explicit_keys;
  for (std::size_t i = 1; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (a.rfind("--config=", 0) == 0) path = a.substr(9);
    if (a.rfind("--", 0) != 0) continue;
    std::string key = a.substr(2, a.find('=') == std::string::npos ? std::string::npos : a.find('=') - 2);
    if (key.rfind("no-", 0) == 0) explicit_keys.insert(key.substr(3));
    explicit_keys.insert(std::move(key));
  }
  if (!path || args.size() < 2) return args;
  const auto extra = config_arguments(*path, explicit_keys);
  args.insert(args.begin() + 2, extra.begin(), extra.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_st("lcsum"));
  spdlog::set_pattern("[%l] %v");
  CLI::App app{"Unsupervised length-controllable extractive summarization"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error")->capture_default_str();

  Registry registry;
  register_commands(app, registry);

  std::vector<std::string> args;
  try {
    args = expand_arguments(argc, argv);
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  std::vector<char*> cargs;
  for (auto& a : args) cargs.push_back(a.data());

  try {
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  spdlog::set_level(spdlog::level::from_str(log_level));

  Command* command = registry.selected(app);
  if (command == nullptr) {
    std::cerr << app.help();
    return 1;
  }
  RunManifest manifest(command->name(), args);
  int code = 0;
  std::string message;
  try {
    command->run(manifest);
  } catch (const IoError& e) {
    code = 2;
    message = e.what();
  } catch (const ContractError& e) {
    code = 1;
    message = e.what();
  } catch (const NumericError& e) {
    code = 1;
    message = e.what();
  } catch (const std::exception& e) {
    code = 1;
    message = std::string("unexpected failure: ") + e.what();
  }
  if (code != 0) {
    spdlog::error("{}", message);
    manifest.set_error(code, message);
  }
  try {
    manifest.write();
  } catch (const std::exception& e) {
    spdlog::error("cannot write the run manifest: {}", e.what());
    if (code == 0) code = 2;
  }
  return code;
}
