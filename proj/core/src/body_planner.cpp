#include "quadloco/body_planner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "quadloco/error.hpp"
#include "quadloco/geometry.hpp"

namespace quadloco::body {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Error plan_error(const std::string& what) { return Error(Stage::kBodyPlan, what); }

int wrap_heading(int ih, int headings) { return ((ih % headings) + headings) % headings; }

struct FootSample {
  bool on_map = false;
  double mean_best = 0.0;
  std::optional<Eigen::Vector3d> best;
};

FootSample sample_foot(const Eigen::Vector2d& pos, const terrain::TerrainSnapshot& map, const PlannerConfig& cfg) {
  FootSample out;
  const auto& geo = map.geometry();
  if (!geo.cell_at(pos)) return out;
  out.on_map = true;
  const auto cells = geo.cells_in_disc(pos, cfg.disc_radius);
  std::vector<double> values;
  values.reserve(cells.size());
  double best_cost = kInf;
  double best_d2 = kInf;
  for (const auto& c : cells) {
    if (map.costs->is_void(c)) {
      values.push_back(cfg.void_cost);
      continue;
    }
    const double cost = map.costs->cost(c);
    values.push_back(cost);
    const double d2 = (geo.cell_center(c) - pos).squaredNorm();
    if (cost < best_cost || (cost == best_cost && d2 < best_d2)) {
      best_cost = cost;
      best_d2 = d2;
      const Eigen::Vector2d cc = geo.cell_center(c);
      out.best = Eigen::Vector3d(cc.x(), cc.y(), map.grid->at(c));
    }
  }
  if (values.empty()) {
    out.on_map = false;
    return out;
  }
  const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(cfg.best_n), values.size());
  std::partial_sort(values.begin(), values.begin() + n, values.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += values[i];
  out.mean_best = sum / static_cast<double>(n);
  return out;
}

std::uint64_t pack(const LatticeIndex& s) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(s.ix)) << 40) ^
         (static_cast<std::uint64_t>(static_cast<std::uint32_t>(s.iy)) << 16) ^ static_cast<std::uint64_t>(s.ih);
}

}  // namespace

const char* to_string(ActionKind kind) {
  switch (kind) {
    case ActionKind::kForward: return "forward";
    case ActionKind::kDiagonalLeft: return "diagonal_left";
    case ActionKind::kDiagonalRight: return "diagonal_right";
    case ActionKind::kLeft: return "left";
    case ActionKind::kRight: return "right";
    case ActionKind::kBack: return "back";
    case ActionKind::kTurnLeft: return "turn_left";
    case ActionKind::kTurnRight: return "turn_right";
  }
  return "?";
}

ActionKind action_kind_from_string(const std::string& name) {
  for (ActionKind k : {ActionKind::kForward, ActionKind::kDiagonalLeft, ActionKind::kDiagonalRight, ActionKind::kLeft,
                       ActionKind::kRight, ActionKind::kBack, ActionKind::kTurnLeft, ActionKind::kTurnRight}) {
    if (name == to_string(k)) return k;
  }
  throw plan_error("unknown action kind '" + name + "'");
}

double Lattice::dtheta() const { return 2.0 * std::numbers::pi / headings; }

double Lattice::heading(int ih) const { return geometry::wrap_angle(wrap_heading(ih, headings) * dtheta()); }

BodyState Lattice::state(const LatticeIndex& s) const {
  return {s.ix * resolution, s.iy * resolution, heading(s.ih)};
}

LatticeIndex Lattice::index_of(const BodyState& s) const {
  const double fx = s.x / resolution;
  const double fy = s.y / resolution;
  const double fh = geometry::wrap_angle(s.theta) / dtheta();
  LatticeIndex out{static_cast<int>(std::lround(fx)), static_cast<int>(std::lround(fy)),
                   wrap_heading(static_cast<int>(std::lround(fh)), headings)};
  if (std::abs(fx - std::round(fx)) > 1e-6 || std::abs(fy - std::round(fy)) > 1e-6 ||
      std::abs(fh - std::round(fh)) > 1e-6) {
    std::ostringstream msg;
    msg << "pose (" << s.x << ", " << s.y << ", " << s.theta << ") is not on the body lattice";
    throw plan_error(msg.str());
  }
  return out;
}

bool Lattice::allowed(const LatticeIndex& s) const {
  if (!bounds) return true;
  return s.ix >= bounds->ix_min && s.ix <= bounds->ix_max && s.iy >= bounds->iy_min && s.iy <= bounds->iy_max;
}

void Lattice::validate() const {
  if (!(resolution > 0.0)) throw plan_error("lattice resolution must be positive");
  if (headings < 1) throw plan_error("lattice needs at least one heading");
  if (bounds && (bounds->ix_min > bounds->ix_max || bounds->iy_min > bounds->iy_max)) {
    throw plan_error("lattice bounds are empty");
  }
}

std::vector<PrimitiveSpec> default_primitives() {
  return {
      {ActionKind::kForward, 0.12, 0.0, 0, 1.0},       {ActionKind::kDiagonalLeft, 0.08, 0.08, 0, 1.5},
      {ActionKind::kDiagonalRight, 0.08, -0.08, 0, 1.5}, {ActionKind::kLeft, 0.0, 0.08, 0, 2.0},
      {ActionKind::kRight, 0.0, -0.08, 0, 2.0},         {ActionKind::kBack, -0.08, 0.0, 0, 2.5},
      {ActionKind::kTurnLeft, 0.0, 0.0, 1, 1.5},        {ActionKind::kTurnRight, 0.0, 0.0, -1, 1.5},
  };
}

void PlannerConfig::validate() const {
  lattice.validate();
  if (primitives.empty()) throw plan_error("no motion primitives configured");
  for (const auto& p : primitives) {
    if (p.penalty < 0.0) throw plan_error("primitive penalties must be non-negative");
  }
  if (weights.terrain < 0.0 || weights.action < 0.0 || weights.collision < 0.0 || weights.orientation < 0.0) {
    throw plan_error("action cost weights must be non-negative");
  }
  if (best_n < 1) throw plan_error("best_n must be at least 1");
  if (!(disc_radius > 0.0)) throw plan_error("foothold disc radius must be positive");
  if (swing_clearance < 0.0) throw plan_error("swing clearance must be non-negative");
  if (!(void_cost >= 0.0) || !std::isfinite(void_cost)) throw plan_error("void cost must be finite");
  if (!(eps0 >= 1.0)) throw plan_error("eps0 must be at least 1");
  if (!(eps_step > 0.0)) throw plan_error("eps_step must be positive");
  if (budget == 0) throw plan_error("expansion budget must be positive");
  if (!(max_translation() > 0.0)) throw plan_error("primitives must include a translation");
}

double PlannerConfig::max_translation() const {
  double best = 0.0;
  for (const auto& p : primitives) best = std::max(best, std::hypot(p.dx, p.dy));
  return best;
}

Action instantiate(const PrimitiveSpec& spec, int ih, const Lattice& lattice) {
  Action a;
  a.kind = spec.kind;
  a.dih = spec.dheading;
  a.dtheta = spec.dheading * lattice.dtheta();
  const double nominal = std::hypot(spec.dx, spec.dy);
  if (nominal > 0.0) {
    const double th = lattice.heading(ih);
    const double res = lattice.resolution;
    const Eigen::Vector2d ideal =
        Eigen::Vector2d(std::cos(th) * spec.dx - std::sin(th) * spec.dy, std::sin(th) * spec.dx + std::cos(th) * spec.dy) /
        res;
    const double limit = nominal / res + 1e-9;
    double best = kInf;
    for (int ix = static_cast<int>(std::floor(ideal.x())) - 1; ix <= static_cast<int>(std::ceil(ideal.x())) + 1; ++ix) {
      for (int iy = static_cast<int>(std::floor(ideal.y())) - 1; iy <= static_cast<int>(std::ceil(ideal.y())) + 1;
           ++iy) {
        if (ix == 0 && iy == 0) continue;
        if (std::hypot(ix, iy) > limit) continue;
        const double d = std::hypot(ix - ideal.x(), iy - ideal.y());
        if (d < best - 1e-12) {
          best = d;
          a.dix = ix;
          a.diy = iy;
        }
      }
    }
    a.dx = a.dix * res;
    a.dy = a.diy * res;
  }
  return a;
}

LatticeIndex apply(const LatticeIndex& s, const Action& a, const Lattice& lattice) {
  return {s.ix + a.dix, s.iy + a.diy, wrap_heading(s.ih + a.dih, lattice.headings)};
}

CostBreakdown action_cost(const LatticeIndex& s, const PrimitiveSpec& spec, const terrain::TerrainSnapshot& map,
                          const PlannerConfig& cfg) {
  const Action a = instantiate(spec, s.ih, cfg.lattice);
  const LatticeIndex t = apply(s, a, cfg.lattice);
  const BodyState pre = cfg.lattice.state(s);
  const BodyState post = cfg.lattice.state(t);

  CostBreakdown out;
  out.action = spec.penalty;
  std::vector<Eigen::Vector3d> plane;
  double terrain_sum = 0.0;
  for (Leg leg : kAllLegs) {
    const Eigen::Vector2d p1 = cfg.stance.foot(post.xy(), post.theta, leg);
    const FootSample after = sample_foot(p1, map, cfg);
    if (!after.on_map) {
      out.total = kInf;
      out.terrain = kInf;
      return out;
    }
    terrain_sum += after.mean_best;
    if (after.best) plane.push_back(*after.best);

    const Eigen::Vector2d p0 = cfg.stance.foot(pre.xy(), pre.theta, leg);
    const FootSample before = sample_foot(p0, map, cfg);
    const double z1 = after.best ? after.best->z() : (before.best ? before.best->z() : 0.0);
    const double z0 = before.best ? before.best->z() : z1;
    out.collision += terrain::swing_clearance_violation(*map.grid, Eigen::Vector3d(p0.x(), p0.y(), z0),
                                                        Eigen::Vector3d(p1.x(), p1.y(), z1), cfg.swing_clearance);
  }
  out.terrain = terrain_sum / 4.0;
  if (plane.size() >= 3) out.orientation = geometry::roll_pitch_magnitude(plane, post.theta);
  out.total = cfg.weights.terrain * out.terrain + cfg.weights.action * out.action +
              cfg.weights.collision * out.collision + cfg.weights.orientation * out.orientation;
  return out;
}

double heuristic(const BodyState& s, const BodyState& goal, const terrain::CostMap& map, const PlannerConfig& cfg) {
  double min_penalty = kInf;
  for (const auto& p : cfg.primitives) min_penalty = std::min(min_penalty, p.penalty);
  const double cbar =
      cfg.weights.action * min_penalty + cfg.weights.terrain * std::min(map.min_cost(), cfg.void_cost);
  const double d = (goal.xy() - s.xy()).norm();
  const double remaining = std::max(0.0, d - cfg.goal_tolerance() - 1e-9);
  const double steps = std::ceil(remaining / cfg.max_translation() - 1e-9);
  return cbar * std::max(0.0, steps);
}

bool in_goal_region(const LatticeIndex& s, const LatticeIndex& goal, const Lattice& lattice) {
  const double d = lattice.resolution * std::hypot(s.ix - goal.ix, s.iy - goal.iy);
  if (d > lattice.resolution + 1e-9) return false;
  const int dh = wrap_heading(s.ih - goal.ih, lattice.headings);
  return std::min(dh, lattice.headings - dh) <= 1;
}

std::vector<std::pair<LatticeIndex, Action>> successors(const LatticeIndex& s, const terrain::TerrainSnapshot& map,
                                                        const PlannerConfig& cfg) {
  std::vector<std::pair<LatticeIndex, Action>> out;
  for (const auto& spec : cfg.primitives) {
    Action a = instantiate(spec, s.ih, cfg.lattice);
    const LatticeIndex t = apply(s, a, cfg.lattice);
    if (!cfg.lattice.allowed(t)) continue;
    a.cost = action_cost(s, spec, map, cfg).total;
    if (!std::isfinite(a.cost)) continue;
    out.emplace_back(t, a);
  }
  return out;
}

const ActionPlan& SearchResult::best() const {
  if (plans.empty()) {
    std::ostringstream msg;
    msg << "no body plan found after " << total_expansions << " expansions";
    if (budget_exhausted) msg << " (budget exhausted)";
    if (closest) msg << "; closest state (" << closest->x << ", " << closest->y << ") at " << closest_distance << " m";
    throw plan_error(msg.str());
  }
  return plans.back();
}

SearchResult ara_star(const BodyState& start, const BodyState& goal, const terrain::TerrainSnapshot& map,
                      const PlannerConfig& cfg, const PlanCallback& on_plan) {
  cfg.validate();
  const auto& geo = map.geometry();
  if (!geo.cell_at(goal.xy())) throw plan_error("goal is off the map");
  if (!geo.cell_at(start.xy())) throw plan_error("start is off the map");
  const Lattice& lat = cfg.lattice;
  const LatticeIndex s0 = lat.index_of(start);
  const LatticeIndex sg = lat.index_of(goal);
  const BodyState goal_state = lat.state(sg);

  struct Node {
    LatticeIndex idx;
    double g = kInf;
    double h = 0.0;
    std::uint64_t parent = 0;
    bool has_parent = false;
    Action via;
    bool closed = false;
    bool open = false;
    bool incons = false;
    double key = 0.0;
    bool expanded_once = false;
    std::vector<std::pair<std::uint64_t, Action>> edges;
  };
  struct OpenEntry {
    double f;
    double g;
    LatticeIndex idx;
    std::uint64_t id;
    bool operator<(const OpenEntry& o) const {
      if (f != o.f) return f < o.f;
      if (g != o.g) return g < o.g;
      return idx < o.idx;
    }
  };

  std::unordered_map<std::uint64_t, Node> nodes;
  std::set<OpenEntry> open;
  std::vector<std::uint64_t> incons;
  double eps = cfg.eps0;

  const auto node = [&](const LatticeIndex& idx) -> Node& {
    const std::uint64_t id = pack(idx);
    auto it = nodes.find(id);
    if (it == nodes.end()) {
      Node n;
      n.idx = idx;
      n.h = heuristic(lat.state(idx), goal_state, *map.costs, cfg);
      it = nodes.emplace(id, std::move(n)).first;
    }
    return it->second;
  };
  const auto push_open = [&](std::uint64_t id, Node& n) {
    if (n.open) open.erase(OpenEntry{n.key, n.g, n.idx, id});
    n.key = n.g + eps * n.h;
    open.insert(OpenEntry{n.key, n.g, n.idx, id});
    n.open = true;
  };

  SearchResult result;
  std::optional<std::uint64_t> goal_id;
  double g_goal = kInf;

  {
    Node& n0 = node(s0);
    n0.g = 0.0;
    push_open(pack(s0), n0);
    if (in_goal_region(s0, sg, lat)) {
      goal_id = pack(s0);
      g_goal = 0.0;
    }
  }

  double best_distance = kInf;
  const auto build_plan = [&](double eps_bound, std::size_t expansions) {
    ActionPlan plan;
    std::vector<std::uint64_t> chain;
    std::uint64_t id = *goal_id;
    for (;;) {
      chain.push_back(id);
      const Node& n = nodes.at(id);
      if (!n.has_parent) break;
      id = n.parent;
    }
    std::reverse(chain.begin(), chain.end());
    for (std::size_t i = 0; i < chain.size(); ++i) {
      const Node& n = nodes.at(chain[i]);
      plan.indices.push_back(n.idx);
      plan.states.push_back(lat.state(n.idx));
      if (i > 0) plan.actions.push_back(n.via);
    }
    plan.total_cost = 0.0;
    for (const auto& a : plan.actions) plan.total_cost += a.cost;
    plan.epsilon = eps_bound;
    plan.expansions = expansions;
    return plan;
  };

  for (;;) {
    std::size_t expansions = 0;
    while (!open.empty() && open.begin()->f < g_goal) {
      if (expansions >= cfg.budget) {
        result.budget_exhausted = true;
        break;
      }
      const OpenEntry top = *open.begin();
      open.erase(open.begin());
      Node& n = nodes.at(top.id);
      n.open = false;
      n.closed = true;
      ++expansions;
      ++result.total_expansions;

      const double dist = (lat.state(n.idx).xy() - goal_state.xy()).norm();
      if (dist < best_distance) {
        best_distance = dist;
        result.closest = lat.state(n.idx);
        result.closest_distance = dist;
      }

      if (!n.expanded_once) {
        n.expanded_once = true;
        for (auto& [t, a] : successors(n.idx, map, cfg)) n.edges.emplace_back(pack(t), a);
      }
      const double g_here = n.g;
      const auto& edges = n.edges;
      for (const auto& [tid, a] : edges) {
        const double g_new = g_here + a.cost;
        auto it = nodes.find(tid);
        Node* m = it == nodes.end() ? nullptr : &it->second;
        if (!m) {
          Node& created = node(apply(nodes.at(top.id).idx, a, lat));
          m = &created;
        }
        if (!(g_new < m->g)) continue;
        m->g = g_new;
        m->parent = top.id;
        m->has_parent = true;
        m->via = a;
        if (in_goal_region(m->idx, sg, lat) && g_new < g_goal) {
          g_goal = g_new;
          goal_id = tid;
        }
        if (!m->closed) {
          push_open(tid, *m);
        } else if (!m->incons) {
          m->incons = true;
          incons.push_back(tid);
        }
      }
    }

    if (goal_id && std::isfinite(g_goal) && !(result.budget_exhausted && !result.plans.empty())) {
      double lower = g_goal;
      for (const auto& e : open) lower = std::min(lower, nodes.at(e.id).g + nodes.at(e.id).h);
      for (auto id : incons) lower = std::min(lower, nodes.at(id).g + nodes.at(id).h);
      double bound = eps;
      if (lower > 0.0) bound = std::min(eps, g_goal / lower);
      bound = std::max(1.0, bound);
      if (result.plans.empty() || g_goal < result.plans.back().total_cost) {
        result.plans.push_back(build_plan(bound, expansions));
        if (on_plan) on_plan(result.plans.back());
      } else {
        result.plans.back().epsilon = std::min(result.plans.back().epsilon, bound);
      }
    }

    if (result.budget_exhausted || eps <= 1.0) break;
    eps = std::max(1.0, eps - cfg.eps_step);
    for (auto id : incons) {
      Node& n = nodes.at(id);
      n.incons = false;
      n.closed = false;
      push_open(id, n);
    }
    incons.clear();
    std::vector<OpenEntry> entries(open.begin(), open.end());
    open.clear();
    for (const auto& e : entries) {
      Node& n = nodes.at(e.id);
      n.key = n.g + eps * n.h;
      open.insert(OpenEntry{n.key, n.g, n.idx, e.id});
    }
    for (auto& [id, n] : nodes) n.closed = false;
  }
  return result;
}

bool plan_touches(const ActionPlan& plan, std::size_t from, const terrain::CellRect& changed,
                  const terrain::GridGeometry& geometry, const PlannerConfig& cfg) {
  if (changed.empty()) return false;
  const auto footprint = [&](const BodyState& a, const BodyState& b) {
    for (Leg leg : kAllLegs) {
      const terrain::CellRect r0 = geometry.rect_covering_disc(cfg.stance.foot(a.xy(), a.theta, leg), cfg.disc_radius);
      const terrain::CellRect r1 = geometry.rect_covering_disc(cfg.stance.foot(b.xy(), b.theta, leg), cfg.disc_radius);
      if (r0.united(r1).intersects(changed)) return true;
    }
    return false;
  };
  if (plan.states.empty()) return false;
  if (from + 1 >= plan.states.size()) return footprint(plan.states.back(), plan.states.back());
  for (std::size_t i = from; i + 1 < plan.states.size(); ++i) {
    if (footprint(plan.states[i], plan.states[i + 1])) return true;
  }
  return false;
}

ReplanResult replan(const ActionPlan& prev, const terrain::CellRect& changed, const BodyState& current,
                    const BodyState& goal, const terrain::TerrainSnapshot& map, const PlannerConfig& cfg) {
  ReplanResult out;
  if (!plan_touches(prev, 0, changed, map.geometry(), cfg)) {
    out.search.plans.push_back(prev);
    return out;
  }
  out.replanned = true;
  out.search = ara_star(current, goal, map, cfg);
  return out;
}

void write_plan(std::ostream& os, const ActionPlan& plan) {
  char buf[256];
  const BodyState s = plan.states.empty() ? BodyState{} : plan.states.front();
  std::snprintf(buf, sizeof buf, "start %.17g %.17g %.17g\n", s.x, s.y, s.theta);
  os << buf;
  for (const auto& a : plan.actions) {
    std::snprintf(buf, sizeof buf, "action %s %.17g %.17g %.17g %.17g\n", to_string(a.kind), a.dx, a.dy, a.dtheta,
                  a.cost);
    os << buf;
  }
}

ActionPlan read_plan(std::istream& is, const Lattice& lattice) {
  ActionPlan plan;
  std::string line;
  bool have_start = false;
  LatticeIndex cur;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "start") {
      BodyState s;
      if (!(ls >> s.x >> s.y >> s.theta)) throw plan_error("malformed start record");
      cur = lattice.index_of(s);
      plan.indices = {cur};
      plan.states = {lattice.state(cur)};
      have_start = true;
    } else if (tag == "action") {
      if (!have_start) throw plan_error("action record before start record");
      std::string kind;
      Action a;
      if (!(ls >> kind >> a.dx >> a.dy >> a.dtheta >> a.cost)) throw plan_error("malformed action record");
      a.kind = action_kind_from_string(kind);
      a.dix = static_cast<int>(std::lround(a.dx / lattice.resolution));
      a.diy = static_cast<int>(std::lround(a.dy / lattice.resolution));
      a.dih = static_cast<int>(std::lround(a.dtheta / lattice.dtheta()));
      if (std::abs(a.dx - a.dix * lattice.resolution) > 1e-9 || std::abs(a.dy - a.diy * lattice.resolution) > 1e-9) {
        throw plan_error("action displacement is not a lattice multiple");
      }
      cur = apply(cur, a, lattice);
      plan.actions.push_back(a);
      plan.indices.push_back(cur);
      plan.states.push_back(lattice.state(cur));
      plan.total_cost += a.cost;
    } else {
      throw plan_error("unknown plan record '" + tag + "'");
    }
  }
  if (!have_start) throw plan_error("plan has no start record");
  return plan;
}

}  // namespace quadloco::body
