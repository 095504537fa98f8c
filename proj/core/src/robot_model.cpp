#include "quadloco/robot_model.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <sstream>

#include "quadloco/error.hpp"

namespace quadloco::dyn {

namespace {

Error model_error(const std::string& what) { return Error(Stage::kDynamics, "robot model: " + what); }

constexpr const char* kFixture =
#include "model_fixture.inc"
    ;

}  // namespace

double RobotModel::total_mass() const {
  double m = base.mass;
  for (const auto& l : links) m += l.mass;
  return m;
}

void RobotModel::validate() const {
  if (links.size() != static_cast<std::size_t>(kJoints)) throw model_error("expected 12 joints");
  const auto check_body = [](const Link& l) {
    if (!(l.mass > 0.0)) throw model_error("link '" + l.name + "' needs positive mass");
    if ((l.inertia - l.inertia.transpose()).lpNorm<Eigen::Infinity>() > 1e-12) {
      throw model_error("inertia of '" + l.name + "' is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(l.inertia);
    if (es.eigenvalues().minCoeff() <= 0.0) throw model_error("inertia of '" + l.name + "' is not positive definite");
  };
  check_body(base);
  for (std::size_t i = 0; i < links.size(); ++i) {
    check_body(links[i]);
    if (std::abs(links[i].axis.norm() - 1.0) > 1e-9) throw model_error("joint axis of '" + links[i].name + "' is not unit");
    if (links[i].parent >= static_cast<int>(i)) throw model_error("links must follow their parents");
  }
}

RobotModel parse_model(std::istream& is) {
  struct Raw {
    Link link;
    std::string parent;
  };
  std::vector<Raw> raw;
  std::vector<std::tuple<Leg, std::string, Eigen::Vector3d>> feet;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    const auto bad = [&] { return model_error("malformed line " + std::to_string(lineno)); };
    if (tag == "link") {
      Raw r;
      double v[15];
      if (!(ls >> r.link.name >> r.parent)) throw bad();
      for (double& x : v) {
        if (!(ls >> x)) throw bad();
      }
      r.link.mass = v[0];
      r.link.com = {v[1], v[2], v[3]};
      r.link.inertia << v[4], v[7], v[8], v[7], v[5], v[9], v[8], v[9], v[6];
      r.link.axis = {v[10], v[11], v[12]};
      r.link.origin = {v[13], v[14], 0.0};
      if (!(ls >> r.link.origin.z())) throw bad();
      raw.push_back(r);
    } else if (tag == "foot") {
      std::string leg, link;
      Eigen::Vector3d p;
      if (!(ls >> leg >> link >> p.x() >> p.y() >> p.z())) throw bad();
      feet.emplace_back(leg_from_string(leg), link, p);
    } else {
      throw model_error("unknown record '" + tag + "' on line " + std::to_string(lineno));
    }
  }
  if (raw.empty() || raw.front().parent != "-") throw model_error("first link must be the base with parent '-'");
  if (feet.size() != 4) throw model_error("expected four foot records");

  std::map<std::string, int> by_name;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!by_name.emplace(raw[i].link.name, static_cast<int>(i)).second) {
      throw model_error("duplicate link '" + raw[i].link.name + "'");
    }
  }
  // chain of each foot back to the base gives generalized joint order
  RobotModel model;
  model.base = raw.front().link;
  model.links.resize(kJoints);
  std::vector<int> slot(raw.size(), -1);
  std::array<bool, 4> seen{};
  for (const auto& [leg, link, pos] : feet) {
    if (seen[index(leg)]) throw model_error(std::string("duplicate foot for ") + to_string(leg));
    seen[index(leg)] = true;
    auto it = by_name.find(link);
    if (it == by_name.end()) throw model_error("foot link '" + link + "' not found");
    std::vector<int> chain;
    for (int k = it->second; k != 0;) {
      chain.insert(chain.begin(), k);
      const auto p = by_name.find(raw[k].parent);
      if (p == by_name.end()) throw model_error("parent '" + raw[k].parent + "' not found");
      k = p->second;
      if (chain.size() > 3) break;
    }
    if (chain.size() != 3) throw model_error(std::string("leg ") + to_string(leg) + " must have three joints");
    for (int j = 0; j < 3; ++j) {
      if (slot[chain[j]] >= 0) throw model_error("legs share link '" + raw[chain[j]].link.name + "'");
      slot[chain[j]] = RobotModel::joint_index(leg, j);
    }
    model.feet[index(leg)] = {leg, RobotModel::joint_index(leg, 2), pos};
  }
  for (std::size_t i = 1; i < raw.size(); ++i) {
    if (slot[i] < 0) throw model_error("link '" + raw[i].link.name + "' is not on a leg chain");
    Link l = raw[i].link;
    const int parent = by_name.at(raw[i].parent);
    l.parent = parent == 0 ? -1 : slot[parent];
    model.links[slot[i]] = l;
  }
  model.validate();
  return model;
}

const char* default_model_text() { return kFixture; }

const RobotModel& default_model() {
  static const RobotModel model = [] {
    std::istringstream is(kFixture);
    return parse_model(is);
  }();
  return model;
}

Vector12 nominal_joint_angles() {
  Vector12 q;
  for (Leg l : kAllLegs) {
    const double s = is_front(l) ? 1.0 : -1.0;
    const double haa = is_left(l) ? 0.1 : -0.1;
    q.segment<3>(3 * index(l)) << haa, s * 0.7, -s * 1.4;
  }
  return q;
}

}  // namespace quadloco::dyn
