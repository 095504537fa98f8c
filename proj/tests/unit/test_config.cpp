#include <algorithm>
#include <filesystem>
#include <functional>
#include <fstream>
#include <random>

#include <json.hpp>

#include "doctest.h"
#include "quadloco/config.hpp"
#include "quadloco/error.hpp"

using namespace quadloco;

namespace {

Stage stage_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.stage();
  }
  FAIL("no error raised");
  return Stage::kSimulation;
}

}  // namespace

TEST_CASE("config: defaults") {
  const Config c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.sim.traj.margin == 0.06);
  CHECK(c.sim.traj.window == 8);
  CHECK(c.sim.rate == 100.0);
  CHECK(c.noise.bias == 0.02);
}

TEST_CASE("config: nested and dotted documents") {
  const Config c = apply_config(Config{}, R"({
    "traj": {"margin": 0.05, "mode": "static", "window": 0},
    "stance": {"half_length": 0.32},
    "controller": {"P_x": [1000, 1100, 1200], "D_theta": 10},
    "body": {"eps0": 2.5, "weights": {"terrain": 3.0}}
  })");
  CHECK(c.sim.traj.margin == 0.05);
  CHECK(c.sim.traj.mode == traj::Mode::kStatic);
  CHECK(c.sim.traj.window == 0);
  CHECK(c.sim.body.stance.half_length == 0.32);
  CHECK(c.sim.footstep.stance.half_length == 0.32);
  CHECK(c.sim.gains.P_x == Eigen::Vector3d(1000, 1100, 1200));
  CHECK(c.sim.gains.D_theta == Eigen::Vector3d::Constant(10.0));
  CHECK(c.sim.body.eps0 == 2.5);
  CHECK(c.sim.body.weights.terrain == 3.0);
}

TEST_CASE("config: errors are config errors") {
  CHECK(stage_of([] { apply_config(Config{}, R"({"traj": {"margn": 0.05}})"); }) == Stage::kConfig);
  CHECK(stage_of([] { apply_config(Config{}, "{not json"); }) == Stage::kConfig);
  CHECK(stage_of([] { apply_config(Config{}, "[1, 2]"); }) == Stage::kConfig);
  CHECK(stage_of([] { apply_config(Config{}, R"({"traj": {"window": 1.5}})"); }) == Stage::kConfig);
  CHECK(stage_of([] { apply_config(Config{}, R"({"footstep": {"horizon": "far"}})"); }) == Stage::kConfig);
  CHECK(stage_of([] { apply_config(Config{}, R"({"traj": {"mode": "fast"}})"); }) == Stage::kConfig);
  CHECK(stage_of([] { apply_config(Config{}, R"({"controller": {"P_x": [1, 2]}})"); }) == Stage::kConfig);
  // values that parse but break a module precondition
  CHECK(stage_of([] { apply_config(Config{}, R"({"traj": {"margin": -0.1}})"); }) == Stage::kConfig);
  CHECK(stage_of([] { apply_config(Config{}, R"({"noise": {"bias": 0.05}})"); }) == Stage::kConfig);
  CHECK(stage_of([] { apply_config(Config{}, R"({"controller": {"rate": 0}})"); }) == Stage::kConfig);
  CHECK(stage_of([] { load_config("/nonexistent/quadloco.json"); }) == Stage::kConfig);
}

TEST_CASE("config: command-line values") {
  Config c;
  set_config_value(c, "traj.dt", "0.02");
  set_config_value(c, "traj.mode", "static");
  set_config_value(c, "traj.timing", "nominal");
  CHECK(c.sim.traj.dt == 0.02);
  CHECK(c.sim.traj.mode == traj::Mode::kStatic);
  CHECK(c.sim.traj.timing == traj::Timing::kNominal);
  CHECK_THROWS_AS(set_config_value(c, "traj.dt", "soon"), Error);
  CHECK_THROWS_AS(set_config_value(c, "nope", "1"), Error);
}

TEST_CASE("config: dump and reload is the identity over random edits") {
  const auto keys = config_keys();
  CHECK(keys.size() > 50);
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> scale(1.01, 1.5);
  for (int trial = 0; trial < 20; ++trial) {
    Config c;
    const std::vector<std::string> numeric{"traj.margin", "traj.dt", "traj.w_y", "controller.Kp", "body.eps0",
                                           "footstep.d_ref", "terrain.weights.slope", "controller.swing_height"};
    const std::string key = numeric[trial % numeric.size()];
    std::string pointer = "/" + key;
    std::replace(pointer.begin(), pointer.end(), '.', '/');
    const double v = nlohmann::json::parse(dump_config(c)).at(nlohmann::json::json_pointer(pointer)).get<double>();
    set_config_value(c, key, std::to_string(v * scale(rng)));
    const Config back = apply_config(Config{}, dump_config(c));
    CHECK(dump_config(back) == dump_config(c));
    CHECK(dump_config(back) != dump_config(Config{}));
  }
}

TEST_CASE("config: file") {
  const auto path = std::filesystem::temp_directory_path() / "quadloco_config_test.json";
  {
    std::ofstream f(path);
    f << R"({"traj": {"margin": 0.07}, "noise": {"jitter": 0.001}})";
  }
  const Config c = load_config(path);
  CHECK(c.sim.traj.margin == 0.07);
  CHECK(c.noise.jitter == 0.001);
  std::filesystem::remove(path);
}

TEST_CASE("config: a flag overrides the same file key") {
  const auto path = std::filesystem::temp_directory_path() / "quadloco_layered_test.json";
  const std::vector<std::string> keys{"traj.margin", "traj.dt", "body.eps0", "controller.Kp", "footstep.reach"};
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  for (int trial = 0; trial < 25; ++trial) {
    const std::string key = keys[trial % keys.size()];
    const std::string section = key.substr(0, key.find('.'));
    const std::string leaf = key.substr(key.find('.') + 1);
    const Config defaults;
    std::string pointer = "/" + key;
    std::replace(pointer.begin(), pointer.end(), '.', '/');
    const double base = nlohmann::json::parse(dump_config(defaults)).at(nlohmann::json::json_pointer(pointer)).get<double>();
    const double in_file = base * u(rng);
    const double on_flag = base * u(rng);
    {
      std::ofstream f(path);
      f << nlohmann::json{{section, {{leaf, in_file}}}}.dump();
    }
    const auto value_of = [&](const Config& c) {
      return nlohmann::json::parse(dump_config(c)).at(nlohmann::json::json_pointer(pointer)).get<double>();
    };
    CHECK(value_of(layered_config(path, {})) == in_file);
    CHECK(value_of(layered_config(path, {{key, nlohmann::json(on_flag).dump()}})) == on_flag);
    CHECK(value_of(layered_config("", {{key, nlohmann::json(on_flag).dump()}})) == on_flag);
  }
  {
    std::ofstream f(path);
    f << R"({"traj": {"margin": -1}})";
  }
  CHECK_THROWS_AS(layered_config(path, {}), Error);
  CHECK(layered_config(path, {{"traj.margin", "0.05"}}).sim.traj.margin == 0.05);
  std::filesystem::remove(path);
}
