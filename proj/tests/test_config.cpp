#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "wkam/config.hpp"
#include "wkam/error.hpp"
#include "wkam/pipeline.hpp"

using namespace wkam;
namespace fs = std::filesystem;

namespace {
std::string scratch(const std::string &name) {
  const auto dir = fs::temp_directory_path() / ("wkam_test_" + name);
  fs::remove_all(dir);
  return dir.string();
}

Config small_pendulum() {
  Config c = parse_config("[environment]\namplitude = 1\n[grid]\nn = 64\n"
                          "[ladder]\ndt = 0.03125\nt_max = 2\n");
  return c;
}

int error_line(const std::string &text) {
  try {
    parse_config(text);
  } catch (const ConfigError &e) {
    return e.line();
  }
  return -1;
}
} // namespace

TEST_CASE("defaults and the shipped pendulum config") {
  const Config d = parse_config("");
  CHECK(d.model == "Mechanical");
  CHECK(d.grid.n == 128);
  CHECK(d.ladder().size() == 9);
  CHECK(d.ladder().front() == 1.0 / 64);
  CHECK(d.ladder().back() == 4.0);
  const Config p = load_config(std::string(WKAM_SOURCE_DIR) + "/configs/pendulum.ini");
  CHECK(p.env.kind == EnvKind::Periodic);
  CHECK(p.env.seed == 7);
  CHECK(p.env.params.at("amplitude") == 1.0);
  CHECK(p.tol.reg_t == 0.03125);
  CHECK_NOTHROW(p.validate());
}

TEST_CASE("parse errors carry line numbers") {
  CHECK(error_line("[grid]\n\nn = many\n") == 3);
  CHECK(error_line("# comment\n[nowhere]\n") == 2);
  CHECK(error_line("[grid]\nn = 64\nwidth = 3\n") == 3);
  CHECK(error_line("n = 64\n") == 1);
  CHECK(error_line("[hamiltonian]\nmodel = Relativistic\n") == 2);
  CHECK(error_line("[grid\n") == 1);
  CHECK_THROWS_AS(parse_config("[ladder]\ndt = 2\nt_max = 1\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/wkam.ini"), ConfigError);
}

TEST_CASE("JSON round trip keeps the hash") {
  Config c = small_pendulum();
  c.tol.epsilon = 0.3;
  const auto j = to_json(c);
  const Config back = config_from_json(j);
  CHECK(config_hash(back) == config_hash(c));
  CHECK(back.tol.epsilon.has_value());
  CHECK_FALSE(back.tol.tol_sub.has_value());
  CHECK(config_hash(c).size() == 16);
  Config other = c;
  other.grid.n = 96;
  CHECK(config_hash(other) != config_hash(c));
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"grid", 3}}), ConfigError);
}

TEST_CASE("critical command") {
  const auto dir = scratch("critical");
  const auto r = cmd_critical(small_pendulum(), {dir, false, true});
  CHECK(r.pass());
  CHECK(r.exit_code() == 0);
  CHECK(r.summary["c"].get<double>() == doctest::Approx(1.0).epsilon(0.02));
  CHECK(fs::exists(fs::path(dir) / "critical.json"));
  CHECK(fs::exists(fs::path(dir) / "manifest_critical.json"));
  Config flat = small_pendulum();
  flat.env.params["amplitude"] = 0.0;
  const auto rf = cmd_critical(flat, {scratch("critical_flat"), false, false});
  CHECK(std::abs(rf.summary["c"].get<double>()) <= 0.02);
}

TEST_CASE("aubry needs a matching cached critical value") {
  const auto dir = scratch("aubry");
  const Config c = small_pendulum();
  CHECK_THROWS_AS(cmd_aubry(c, {dir, false, true}), ConfigError);
  cmd_critical(c, {dir, false, true});
  const auto r = cmd_aubry(c, {dir, false, true});
  CHECK(r.pass());
  CHECK(fs::exists(fs::path(dir) / "aubry_mask.csv"));
  const GridFn w = read_csv((fs::path(dir) / "w.csv").string());
  CHECK(w.size() == 64);
  Config changed = c;
  changed.tol.seeds = 4;
  CHECK_THROWS_AS(cmd_aubry(changed, {dir, false, true}), ConfigError);
  CHECK(cmd_aubry(changed, {dir, true, true}).pass());
}

TEST_CASE("strict and regularize commands") {
  const auto dir = scratch("strict");
  const Config c = small_pendulum();
  const auto s = cmd_strict(c, {dir, true, true});
  CHECK(s.pass());
  const auto g = cmd_regularize(c, {dir, true, true});
  CHECK(g.pass());
  CHECK(fs::exists(fs::path(dir) / "w_regularized.csv"));
  Config tight = c;
  tight.tol.epsilon = 1e-6;
  try {
    cmd_strict(tight, {dir, true, false});
    FAIL("expected a refusal");
  } catch (const std::exception &e) {
    CHECK(exit_code_for(e) == 2);
  }
  Config flat_dirs = c;
  flat_dirs.model = "NonStrict";
  try {
    cmd_regularize(flat_dirs, {dir, true, false});
    FAIL("expected a refusal");
  } catch (const std::exception &e) {
    CHECK(exit_code_for(e) == 2);
  }
}

TEST_CASE("reports are deterministic") {
  const Config c = small_pendulum();
  const auto a = cmd_critical(c, {scratch("det_a"), false, false});
  const auto b = cmd_critical(c, {scratch("det_b"), false, false});
  CHECK(format_report(a) == format_report(b));
  CHECK(report_json(a) == report_json(b));
  const auto m = run_manifest(c, a);
  CHECK(m["config"] == to_json(c));
}

TEST_CASE("exit codes for escaping errors") {
  CHECK(exit_code_for(ConfigError("x")) == 2);
  CHECK(exit_code_for(ArgumentError("x")) == 2);
  CHECK(exit_code_for(RefusalError("x")) == 2);
  CHECK(exit_code_for(NumericError("x")) == 3);
  CHECK(exit_code_for(SubcriticalError("x")) == 3);
  CHECK(exit_code_for(std::runtime_error("x")) == 3);
}
