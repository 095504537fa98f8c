#include "quadloco/config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <type_traits>

#include <json.hpp>

#include "quadloco/error.hpp"

namespace quadloco {

namespace {

using nlohmann::json;

Error config_error(const std::string& what) { return Error(Stage::kConfig, what); }

struct Field {
  std::function<json()> get;
  std::function<void(const json&)> set;
};

template <class T>
Field field(T& ref) {
  return {[&ref] { return json(ref); },
          [&ref](const json& j) {
            if constexpr (std::is_integral_v<T>) {
              if (!j.is_number_integer()) throw config_error("expected an integer");
              if constexpr (std::is_unsigned_v<T>) {
                if (j.get<long long>() < 0) throw config_error("expected a non-negative integer");
              }
            } else {
              if (!j.is_number()) throw config_error("expected a number");
            }
            ref = j.get<T>();
          }};
}

Field vec3(Eigen::Vector3d& ref) {
  return {[&ref] { return json::array({ref.x(), ref.y(), ref.z()}); },
          [&ref](const json& j) {
            if (j.is_number()) {
              ref.setConstant(j.get<double>());
              return;
            }
            if (!j.is_array() || j.size() != 3) throw config_error("expected a number or three numbers");
            ref << j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>();
          }};
}

std::map<std::string, Field> registry(Config& c) {
  auto& s = c.sim;
  std::map<std::string, Field> r;
  r["terrain.weights.stddev"] = field(s.feature_weights.stddev);
  r["terrain.weights.slope"] = field(s.feature_weights.slope);
  r["terrain.weights.curvature"] = field(s.feature_weights.curvature);
  r["terrain.window"] = field(s.feature_window);

  r["stance.half_length"] = {[&s] { return json(s.body.stance.half_length); },
                             [&s](const json& j) {
                               s.body.stance.half_length = j.get<double>();
                               s.footstep.stance.half_length = s.body.stance.half_length;
                             }};
  r["stance.half_width"] = {[&s] { return json(s.body.stance.half_width); },
                            [&s](const json& j) {
                              s.body.stance.half_width = j.get<double>();
                              s.footstep.stance.half_width = s.body.stance.half_width;
                            }};

  r["body.resolution"] = field(s.body.lattice.resolution);
  r["body.headings"] = field(s.body.lattice.headings);
  r["body.best_n"] = field(s.body.best_n);
  r["body.disc_radius"] = field(s.body.disc_radius);
  r["body.swing_clearance"] = field(s.body.swing_clearance);
  r["body.void_cost"] = field(s.body.void_cost);
  r["body.eps0"] = field(s.body.eps0);
  r["body.eps_step"] = field(s.body.eps_step);
  r["body.budget"] = field(s.body.budget);
  r["body.weights.terrain"] = field(s.body.weights.terrain);
  r["body.weights.action"] = field(s.body.weights.action);
  r["body.weights.collision"] = field(s.body.weights.collision);
  r["body.weights.orientation"] = field(s.body.weights.orientation);

  r["footstep.disc_radius"] = field(s.footstep.disc_radius);
  r["footstep.d_ref"] = field(s.footstep.d_ref);
  r["footstep.swing_clearance"] = field(s.footstep.swing_clearance);
  r["footstep.reach"] = field(s.footstep.reach);
  r["footstep.min_triangle_area"] = field(s.footstep.min_triangle_area);
  r["footstep.horizon"] = field(s.footstep.horizon);
  r["footstep.weights.terrain"] = field(s.footstep.weights.terrain);
  r["footstep.weights.stability"] = field(s.footstep.weights.stability);
  r["footstep.weights.clearance"] = field(s.footstep.weights.clearance);
  r["footstep.weights.orientation"] = field(s.footstep.weights.orientation);

  r["traj.margin"] = field(s.traj.margin);
  r["traj.swing_duration"] = field(s.traj.swing_T);
  r["traj.quad_duration"] = field(s.traj.quad_T);
  r["traj.boundary_duration"] = field(s.traj.boundary_T);
  r["traj.dt"] = field(s.traj.dt);
  r["traj.w_x"] = field(s.traj.w_x);
  r["traj.w_y"] = field(s.traj.w_y);
  r["traj.body_height"] = field(s.traj.body_height);
  r["traj.mode"] = {[&s] { return json(traj::to_string(s.traj.mode)); },
                    [&s](const json& j) { s.traj.mode = traj::mode_from_string(j.get<std::string>()); }};
  r["traj.timing"] = {[&s] { return json(traj::to_string(s.traj.timing)); },
                      [&s](const json& j) { s.traj.timing = traj::timing_from_string(j.get<std::string>()); }};
  r["traj.scale_min"] = field(s.traj.scale_min);
  r["traj.scale_max"] = field(s.traj.scale_max);
  r["traj.scale_tolerance"] = field(s.traj.scale_tolerance);
  r["traj.window"] = field(s.traj.window);

  r["controller.rate"] = field(s.rate);
  r["controller.P_x"] = vec3(s.gains.P_x);
  r["controller.D_x"] = vec3(s.gains.D_x);
  r["controller.P_theta"] = vec3(s.gains.P_theta);
  r["controller.D_theta"] = vec3(s.gains.D_theta);
  r["controller.Kp"] = field(s.gains.Kp);
  r["controller.Kd"] = field(s.gains.Kd);
  r["controller.torque_limit"] = field(s.gains.torque_limit);
  r["controller.swing_height"] = field(s.swing_height);
  r["controller.goal_tolerance"] = field(s.goal_tolerance);

  r["noise.bias"] = field(c.noise.bias);
  r["noise.jitter"] = field(c.noise.jitter);
  r["noise.velocity_jitter"] = field(c.noise.velocity_jitter);
  return r;
}

void set_field(std::map<std::string, Field>& fields, const std::string& key, const json& value) {
  const auto it = fields.find(key);
  if (it == fields.end()) throw config_error("unknown config key '" + key + "'");
  try {
    it->second.set(value);
  } catch (const json::exception& e) {
    throw config_error("bad value for '" + key + "': " + e.what());
  } catch (const Error& e) {
    throw config_error("bad value for '" + key + "': " + e.what());
  }
}

void apply_object(std::map<std::string, Field>& fields, const json& obj, const std::string& prefix) {
  if (!obj.is_object()) throw config_error("config document must be an object");
  for (const auto& [k, v] : obj.items()) {
    const std::string key = prefix.empty() ? k : prefix + "." + k;
    if (v.is_object()) {
      apply_object(fields, v, key);
    } else {
      set_field(fields, key, v);
    }
  }
}

void merge_document(Config& c, const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw config_error(std::string("config is not valid JSON: ") + e.what());
  }
  auto fields = registry(c);
  apply_object(fields, doc, "");
}

std::string read_text(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw config_error("cannot open config file '" + file.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

void Config::validate() const {
  try {
    sim.validate();
    noise.validate();
  } catch (const Error& e) {
    if (e.stage() == Stage::kConfig) throw;
    throw config_error(e.what());
  }
}

std::vector<std::string> config_keys() {
  Config c;
  std::vector<std::string> out;
  for (const auto& [k, f] : registry(c)) out.push_back(k);
  return out;
}

Config apply_config(const Config& base, const std::string& text) {
  Config c = base;
  merge_document(c, text);
  c.validate();
  return c;
}

Config load_config(const std::filesystem::path& file, const Config& base) {
  Config c = base;
  merge_document(c, read_text(file));
  c.validate();
  return c;
}

void set_config_value(Config& c, const std::string& key, const std::string& value) {
  json v = json::parse(value, nullptr, false);
  if (v.is_discarded()) v = value;
  auto fields = registry(c);
  set_field(fields, key, v);
}

Config layered_config(const std::filesystem::path& file,
                      const std::vector<std::pair<std::string, std::string>>& overrides) {
  Config c;
  if (!file.empty()) merge_document(c, read_text(file));
  for (const auto& [key, value] : overrides) set_config_value(c, key, value);
  c.validate();
  return c;
}

std::string dump_config(const Config& config) {
  Config c = config;
  json doc = json::object();
  for (const auto& [k, f] : registry(c)) {
    std::string pointer = "/" + k;
    std::replace(pointer.begin(), pointer.end(), '.', '/');
    doc[json::json_pointer(pointer)] = f.get();
  }
  return doc.dump(2);
}

}  // namespace quadloco
