#include "calabi/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "calabi/errors.hpp"

namespace calabi {

namespace {

using nlohmann::json;

const json& member(const json& obj, const std::string& section, const char* key) {
  const std::string field = section + "." + key;
  if (!obj.contains(key)) throw ConfigError(field, "missing");
  return obj.at(key);
}

double number(const json& obj, const std::string& section, const char* key) {
  const json& v = member(obj, section, key);
  if (!v.is_number()) throw ConfigError(section + "." + key, "must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(section + "." + key, "must be finite");
  return x;
}

double positive(const json& obj, const std::string& section, const char* key) {
  const double x = number(obj, section, key);
  if (!(x > 0)) throw ConfigError(section + "." + key, "must be > 0");
  return x;
}

int integer(const json& obj, const std::string& section, const char* key) {
  const json& v = member(obj, section, key);
  if (!v.is_number_integer()) throw ConfigError(section + "." + key, "must be an integer");
  return v.get<int>();
}

const json& section(const json& root, const char* key) {
  if (!root.contains(key)) throw ConfigError(key, "missing section");
  const json& s = root.at(key);
  if (!s.is_object()) throw ConfigError(key, "must be an object");
  return s;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& name) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("JSON syntax error: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("", "top level must be an object");

  RunConfig c;
  c.name = name;

  const json& b = section(root, "bundle");
  c.bundle.n = integer(b, "bundle", "n");
  if (c.bundle.n < 1) throw ConfigError("bundle.n", "must be >= 1");
  c.bundle.m = integer(b, "bundle", "m");
  if (c.bundle.m < 0) throw ConfigError("bundle.m", "must be >= 0");
  c.bundle.lambda = number(b, "bundle", "lambda");
  if (b.contains("base_volume_factor"))
    c.bundle.base_volume_factor = positive(b, "bundle", "base_volume_factor");

  const json& k = section(root, "class");
  c.class0.a = positive(k, "class", "a0");
  c.class0.b = positive(k, "class", "b0");

  const json& g = section(root, "grid");
  c.rho_min = number(g, "grid", "rho_min");
  c.rho_max = number(g, "grid", "rho_max");
  const int count = integer(g, "grid", "count");
  if (!(c.rho_min <= -10.0)) throw ConfigError("grid.rho_min", "must be <= -10");
  if (!(c.rho_max >= 10.0)) throw ConfigError("grid.rho_max", "must be >= 10");
  if (count < 256) throw ConfigError("grid.count", "must be >= 256");
  c.count = static_cast<std::size_t>(count);

  const json& t = section(root, "time");
  c.s_max = positive(t, "time", "s_max");
  if (t.contains("cfl_sigma")) c.cfl_sigma = positive(t, "time", "cfl_sigma");
  if (t.contains("tolerance")) c.tolerance = positive(t, "time", "tolerance");
  const char* ck = t.contains("checkpoints") ? "checkpoints"
                   : t.contains("checkpoint_list") ? "checkpoint_list"
                                                    : nullptr;
  if (ck) {
    const json& list = t.at(ck);
    const std::string field = std::string("time.") + ck;
    if (!list.is_array() || list.empty()) throw ConfigError(field, "must be a non-empty array");
    for (const auto& v : list) {
      if (!v.is_number()) throw ConfigError(field, "entries must be numbers");
      const double s = v.get<double>();
      if (!(s >= 0) || s > c.s_max) throw ConfigError(field, "entries must lie in [0, s_max]");
      if (!c.checkpoints.empty() && !(s > c.checkpoints.back()))
        throw ConfigError(field, "entries must be strictly increasing");
      c.checkpoints.push_back(s);
    }
  } else {
    for (int s = 0; s <= static_cast<int>(std::floor(c.s_max)); ++s) c.checkpoints.push_back(s);
    if (c.checkpoints.back() < c.s_max) c.checkpoints.push_back(c.s_max);
  }

  if (root.contains("weight")) {
    const json& w = section(root, "weight");
    if (w.contains("A")) {
      const json& A = w.at("A");
      if (A.is_string()) {
        if (A.get<std::string>() != "auto") throw ConfigError("weight.A", "must be \"auto\" or a number");
      } else {
        const double x = number(w, "weight", "A");
        if (!(x >= 1.0)) throw ConfigError("weight.A", "must be >= 1");
        c.weight_A = x;
      }
    }
  }

  if (root.contains("outputs")) {
    const json& o = section(root, "outputs");
    if (o.contains("directory")) {
      if (!o.at("directory").is_string()) throw ConfigError("outputs.directory", "must be a string");
      c.output_directory = o.at("directory").get<std::string>();
    }
    for (auto [key, dst] : {std::pair{"emit_profiles", &c.emit_profiles},
                            std::pair{"emit_plots_data", &c.emit_plots_data}}) {
      if (!o.contains(key)) continue;
      if (!o.at(key).is_boolean()) throw ConfigError(std::string("outputs.") + key, "must be a boolean");
      *dst = o.at(key).get<bool>();
    }
  }

  if (root.contains("seed_profile")) {
    const json& s = root.at("seed_profile");
    if (!s.is_string() || s.get<std::string>() != "canonical")
      throw ConfigError("seed_profile", "only \"canonical\" is supported");
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::filesystem::path(path).stem().string());
}

}  // namespace calabi
