#pragma once

// Parameter tables behind the subcommands. Every parameter has a JSON
// default; a config file overrides the defaults and explicit flags override
// the file. The merged object is what gets written as resolved config.

#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

namespace mgw::cli {

using json = nlohmann::json;

enum class Kind { Text, Real, Integer, Flag, TextList, RealList };

struct Param {
  std::string name;  // kebab-case, also the JSON key
  Kind kind;
  json fallback;
  std::string help;
};

class ParamSet {
 public:
  explicit ParamSet(std::vector<Param> params) : params_(std::move(params)) {}

  /// Registers one CLI11 option per parameter on `cmd`.
  void attach(CLI::App& cmd);

  /// defaults <- file values <- explicit flags. Unknown file keys are a
  /// config error.
  json resolve(const json& file) const;

 private:
  std::vector<Param> params_;
  // raw flag text, filled by CLI11
  std::vector<std::vector<std::string>> raw_;
  std::vector<bool> flags_;
  std::vector<CLI::Option*> opts_;
};

/// Config failures (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json load_config(const std::string& path);

}  // namespace mgw::cli
