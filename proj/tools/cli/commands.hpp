#pragma once

#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "manifest.hpp"

namespace lcsum::cli {

class Command {
 public:
  virtual ~Command() = default;
  virtual std::string name() const = 0;
  // Declares the subcommand and its options on `parent`.
  virtual void attach(CLI::App& parent) = 0;
  virtual void run(RunManifest& manifest) = 0;

  CLI::App* app = nullptr;
};

class Registry {
 public:
  void add(std::unique_ptr<Command> command) { commands_.push_back(std::move(command)); }
  Command* selected(const CLI::App& root) const;

 private:
  std::vector<std::unique_ptr<Command>> commands_;
};

void register_commands(CLI::App& app, Registry& registry);

}  // namespace lcsum::cli
