#include "params.hpp"

#include <algorithm>
#include <fstream>

namespace mgw::cli {

namespace {

double to_real(const std::string& name, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("--" + name + ": not a number: '" + text + "'");
  }
}

long long to_int(const std::string& name, const std::string& text) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("--" + name + ": not an integer: '" + text + "'");
  }
}

void check_type(const Param& p, const json& v) {
  bool ok = false;
  switch (p.kind) {
    case Kind::Text: ok = v.is_string(); break;
    case Kind::Real: ok = v.is_number(); break;
    case Kind::Integer: ok = v.is_number_integer(); break;
    case Kind::Flag: ok = v.is_boolean(); break;
    case Kind::TextList:
      ok = v.is_array();
      for (const auto& e : v) ok = ok && e.is_string();
      break;
    case Kind::RealList:
      ok = v.is_array();
      for (const auto& e : v) ok = ok && e.is_number();
      break;
  }
  if (!ok) throw ConfigError("config key '" + p.name + "' has the wrong type");
}

}  // namespace

void ParamSet::attach(CLI::App& cmd) {
  raw_.assign(params_.size(), {});
  flags_.assign(params_.size(), false);
  opts_.assign(params_.size(), nullptr);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    const Param& p = params_[k];
    const std::string flag = "--" + p.name;
    std::string help = p.help;
    if (!p.fallback.is_null()) help += " [" + p.fallback.dump() + "]";
    if (p.kind == Kind::Flag) {
      // vector<bool> elements are not addressable; go through a callback
      opts_[k] = cmd.add_flag_callback(flag, [this, k] { flags_[k] = true; }, help);
    } else if (p.kind == Kind::TextList || p.kind == Kind::RealList) {
      opts_[k] = cmd.add_option(flag, raw_[k], help)->expected(1, CLI::detail::expected_max_vector_size);
    } else {
      opts_[k] = cmd.add_option(flag, raw_[k], help)->expected(1);
    }
  }
}

json ParamSet::resolve(const json& file) const {
  json out = json::object();
  for (const auto& p : params_) out[p.name] = p.fallback;
  if (!file.is_null()) {
    if (!file.is_object()) throw ConfigError("config file must hold a JSON object");
    for (auto it = file.begin(); it != file.end(); ++it) {
      if (it.key() == "command") continue;
      auto match = std::find_if(params_.begin(), params_.end(), [&](const Param& p) { return p.name == it.key(); });
      if (match == params_.end()) throw ConfigError("unknown config key '" + it.key() + "'");
      if (!it.value().is_null()) check_type(*match, it.value());
      out[it.key()] = it.value();
    }
  }
  for (std::size_t k = 0; k < params_.size(); ++k) {
    const Param& p = params_[k];
    if (!opts_[k] || opts_[k]->count() == 0) continue;
    const auto& raw = raw_[k];
    switch (p.kind) {
      case Kind::Flag: out[p.name] = flags_[k]; break;
      case Kind::Text: out[p.name] = raw.back(); break;
      case Kind::Real: out[p.name] = to_real(p.name, raw.back()); break;
      case Kind::Integer: out[p.name] = to_int(p.name, raw.back()); break;
      case Kind::TextList: out[p.name] = raw; break;
      case Kind::RealList: {
        json a = json::array();
        for (const auto& s : raw) a.push_back(to_real(p.name, s));
        out[p.name] = a;
        break;
      }
    }
  }
  return out;
}

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace mgw::cli
