#include "ulvm/run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "ulvm/errors.hpp"

namespace ulvm::io {

namespace {

using nlohmann::json;

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "channels",        "parallelism", "inner_kind",     "input_size",  "seed",
      "bridge_enabled",  "flop_convention", "theta_init", "branch_sharing", "conv_layout"};
  return keys;
}

std::size_t positive_int(const json& v, const std::string& key) {
  if (!v.is_number_integer() || v.get<std::int64_t>() <= 0) {
    throw ConfigError("config key '" + key + "' must be a positive integer");
  }
  return v.get<std::size_t>();
}

std::string string_value(const json& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError("config key '" + key + "' must be a string");
  return v.get<std::string>();
}

template <class Parse>
auto enum_value(const json& v, const std::string& key, Parse parse) {
  const std::string s = string_value(v, key);
  try {
    return parse(s);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' has unknown value '" + s + "'");
  }
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, _] : doc.items()) {
    if (!known_keys().contains(key)) throw ConfigError("unknown config key '" + key + "'");
  }

  RunConfig rc;
  NetConfig& n = rc.net;
  if (doc.contains("channels")) {
    const json& c = doc["channels"];
    if (!c.is_array() || c.size() != 6) {
      throw ConfigError("config key 'channels' must be an array of 6 integers");
    }
    for (std::size_t i = 0; i < 6; ++i) n.channels[i] = positive_int(c[i], "channels");
  }
  if (doc.contains("parallelism")) n.parallelism = positive_int(doc["parallelism"], "parallelism");
  if (doc.contains("inner_kind")) {
    n.inner_kind = enum_value(doc["inner_kind"], "inner_kind", inner_kind_from_string);
  }
  if (doc.contains("input_size")) {
    const json& s = doc["input_size"];
    if (s.is_array()) {
      if (s.size() != 2) throw ConfigError("config key 'input_size' must be an int or [H, W]");
      n.height = positive_int(s[0], "input_size");
      n.width = positive_int(s[1], "input_size");
    } else {
      n.height = n.width = positive_int(s, "input_size");
    }
  }
  if (doc.contains("seed")) {
    const json& s = doc["seed"];
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0)) {
      throw ConfigError("config key 'seed' must be a non-negative integer");
    }
    rc.seed = s.get<std::uint64_t>();
  }
  if (doc.contains("bridge_enabled")) {
    if (!doc["bridge_enabled"].is_boolean()) {
      throw ConfigError("config key 'bridge_enabled' must be a boolean");
    }
    n.bridge_enabled = doc["bridge_enabled"].get<bool>();
  }
  if (doc.contains("flop_convention")) {
    rc.flop_convention = enum_value(doc["flop_convention"], "flop_convention",
                                    accounting::flop_convention_from_string);
  }
  if (doc.contains("theta_init")) {
    if (!doc["theta_init"].is_number()) throw ConfigError("config key 'theta_init' must be a number");
    n.theta_init = doc["theta_init"].get<float>();
  }
  if (doc.contains("branch_sharing")) {
    n.sharing = enum_value(doc["branch_sharing"], "branch_sharing", branch_sharing_from_string);
  }
  if (doc.contains("conv_layout")) {
    n.conv = enum_value(doc["conv_layout"], "conv_layout", conv_layout_from_string);
  }
  n.validate();
  return rc;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string dump_run_config(const RunConfig& rc) {
  const NetConfig& n = rc.net;
  json doc{
      {"channels", n.channels},
      {"parallelism", n.parallelism},
      {"inner_kind", to_string(n.inner_kind)},
      {"input_size", {n.height, n.width}},
      {"seed", rc.seed},
      {"bridge_enabled", n.bridge_enabled},
      {"flop_convention", accounting::to_string(rc.flop_convention)},
      {"theta_init", n.theta_init},
      {"branch_sharing", to_string(n.sharing)},
      {"conv_layout", to_string(n.conv)},
  };
  return doc.dump(2);
}

}  // namespace ulvm::io
