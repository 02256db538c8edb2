#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "calabi/config.hpp"
#include "calabi/errors.hpp"
#include "calabi/pipeline.hpp"

using namespace calabi;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("calabi_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// small but valid: short horizon keeps these tests quick
std::string small_config(double a0, double b0, const fs::path& out, double s_max = 2.0,
                         int count = 513) {
  std::ostringstream ss;
  ss << R"({"bundle": {"n": 1, "m": 0, "lambda": 2},
            "class": {"a0": )" << a0 << R"(, "b0": )" << b0 << R"(},
            "grid": {"rho_min": -20, "rho_max": 20, "count": )" << count << R"(},
            "time": {"s_max": )" << s_max << R"(, "cfl_sigma": 0.2},
            "weight": {"A": "auto"},
            "outputs": {"directory": ")" << out.generic_string() << R"(", "emit_profiles": true}})";
  return ss.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

int lab(const std::string& args) {
  const std::string cmd = std::string(CALABI_LAB) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("config parsing fills defaults and checkpoints") {
  const RunConfig c = parse_config(small_config(1, 3, "o"), "x");
  CHECK(c.bundle.n == 1);
  CHECK(c.class0.b == 3.0);
  CHECK(c.count == 513);
  CHECK(!c.weight_A.has_value());
  CHECK(c.checkpoints == std::vector<double>{0.0, 1.0, 2.0});
  CHECK(c.seed_profile == "canonical");
}

TEST_CASE("config errors name the field") {
  auto field_of = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string("none");
  };
  std::string t = small_config(1, 3, "o");
  CHECK(field_of(small_config(1, 0, "o")) == "class.b0");
  CHECK(field_of(small_config(1, -2, "o")) == "class.b0");
  CHECK(field_of(small_config(0, 3, "o")) == "class.a0");
  CHECK(field_of(small_config(1, 3, "o", 2.0, 100)) == "grid.count");
  CHECK(field_of(R"({"class": {"a0": 1, "b0": 1}})") == "bundle");
  CHECK(field_of("{not json") == "");
  std::string w = t;
  w.replace(w.find("\"auto\""), 6, "0.5");
  CHECK(field_of(w) == "weight.A");
  std::string s = t;
  s.replace(s.find("\"s_max\": 2"), 10, "\"s_max\": 2, \"checkpoints\": [0, 3]");
  CHECK(field_of(s) == "time.checkpoints");
}

TEST_CASE("run exits 2 on config errors and creates nothing") {
  const fs::path dir = scratch("bad");
  write(dir / "b.json", small_config(1, 0, dir / "out"));
  CHECK(lab("run " + (dir / "b.json").string()) == 2);
  write(dir / "c.json", small_config(1, 3, dir / "out", 2.0, 100));
  CHECK(lab("run " + (dir / "c.json").string()) == 2);
  CHECK(lab("run " + (dir / "missing.json").string()) == 2);
  CHECK_FALSE(fs::exists(dir / "out"));
  std::ostringstream out, err;
  CHECK(cmd_run((dir / "b.json").string(), out, err) == 2);
  CHECK(err.str().find("class.b0") != std::string::npos);
}

TEST_CASE("run writes every artefact and is byte-stable") {
  const fs::path dir = scratch("run");
  write(dir / "cfg.json", small_config(1, 3, dir / "first"));
  CHECK(lab("run " + (dir / "cfg.json").string()) == 0);
  for (const char* f : {"run.json", "diagnostics.csv", "report.json", "verdict.json",
                        "snapshots/s_0.00.csv", "snapshots/s_2.00.csv"})
    CHECK(fs::exists(dir / "first" / f));
  const std::string csv = slurp(dir / "first" / "diagnostics.csv");
  CHECK(csv.rfind("s,t,H_min,H_max,third_ratio_sup,typeI,liyau,local_typeI,harnack,vertex_rho,"
                  "a_inf,phi_at_vertex,dist_to_P0,fibre_diam,volume_total\n",
                  0) == 0);
  CHECK(csv.find('\r') == std::string::npos);
  CHECK(csv.find("0.00000000000000e+00") != std::string::npos);
  // short runs cannot be classified
  const auto verdict = nlohmann::json::parse(slurp(dir / "first" / "verdict.json"));
  CHECK(verdict["case"] == "Inconclusive");

  // same config through the environment override lands elsewhere, identical bytes
  setenv("CALABI_OUTPUT_DIR", (dir / "second").c_str(), 1);
  CHECK(lab("run " + (dir / "cfg.json").string()) == 0);
  unsetenv("CALABI_OUTPUT_DIR");
  for (const char* f : {"run.json", "diagnostics.csv", "report.json", "verdict.json",
                        "snapshots/s_1.00.csv"})
    CHECK(slurp(dir / "first" / f) == slurp(dir / "second" / f));
}

TEST_CASE("soliton command") {
  const fs::path dir = scratch("soliton");
  std::ostringstream out, err;
  REQUIRE(cmd_soliton(0, 1, 1.0, 1e3, dir.string(), out, err) == 0);
  auto j = nlohmann::json::parse(slurp(dir / "soliton.json"));
  CHECK(std::abs(j["c_star"].get<double>() - std::sqrt(2.0)) <= 1e-10);
  CHECK(j["I_bracket"].size() == 2);
  CHECK(j["asymptotic_slope"].get<double>() == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-2));
  CHECK(slurp(dir / "soliton.csv").rfind("x,w,residual\n", 0) == 0);

  REQUIRE(cmd_soliton(0, 1, 2.0, 1e3, dir.string(), out, err) == 0);
  j = nlohmann::json::parse(slurp(dir / "soliton.json"));
  CHECK(std::abs(j["c_star"].get<double>() - (1 + std::sqrt(17.0)) / 4) <= 1e-10);

  CHECK(cmd_soliton(0, 1, -1.0, 1e3, dir.string(), out, err) == 2);
  CHECK(cmd_soliton(0, 0, 1.0, 1e3, dir.string(), out, err) == 2);
  CHECK(lab("soliton --m 0 --n 1 --a -1 --out " + dir.string()) == 2);
  CHECK(lab("soliton --m 0 --n 1 --a 1 --out " + dir.string()) == 0);
}

TEST_CASE("sweep isolation and errors") {
  const fs::path empty = scratch("sweep_empty");
  CHECK(lab("sweep " + empty.string()) == 2);

  const fs::path dir = scratch("sweep_mixed");
  write(dir / "a_good.json", small_config(1, 3, "unused"));
  write(dir / "b_bad.json", small_config(1, 0, "unused"));
  write(dir / "c_good.json", small_config(2, 2, "unused"));
  std::ostringstream out, err;
  CHECK(cmd_sweep(dir.string(), 2, (dir / "sweep").string(), out, err) == 1);
  std::istringstream csv(slurp(dir / "sweep" / "sweep.csv"));
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(csv, line)) lines.push_back(line);
  REQUIRE(lines.size() == 3);
  CHECK(lines[1].rfind("a_good,", 0) == 0);
  CHECK(lines[2].rfind("c_good,", 0) == 0);
  CHECK(err.str().find("b_bad") != std::string::npos);
}

TEST_CASE("sweep over the three benchmarks") {
  const fs::path dir = scratch("sweep_bench");
  for (const char* name : {"collapse", "contraction", "extinction"})
    fs::copy_file(fs::path(CALABI_CONFIGS) / (std::string(name) + ".json"), dir / (std::string(name) + ".json"));
  std::ostringstream out, err;
  REQUIRE(cmd_sweep(dir.string(), 3, (dir / "sweep").string(), out, err) == 0);
  std::istringstream csv(slurp(dir / "sweep" / "sweep.csv"));
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(csv, line)) lines.push_back(line);
  REQUIRE(lines.size() == 4);
  CHECK(lines[1].rfind("collapse,ProductCnCPm1,", 0) == 0);
  CHECK(lines[2].rfind("contraction,SolitonOnBundle,", 0) == 0);
  CHECK(lines[3].rfind("extinction,CompactSoliton,", 0) == 0);
}
