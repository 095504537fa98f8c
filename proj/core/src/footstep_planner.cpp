#include "quadloco/footstep_planner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "quadloco/error.hpp"
#include "quadloco/geometry.hpp"

namespace quadloco::footstep {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Error footstep_error(const std::string& what) { return Error(Stage::kFootstep, what); }

// Leg to move next from `legs`, deferring one that just moved.
std::size_t pick(const std::vector<Leg>& legs, const std::optional<Leg>& last) {
  if (legs.size() > 1 && last && legs.front() == *last) return 1;
  return 0;
}

std::vector<Leg> sequence_vector(body::ActionKind kind) {
  const auto seq = swing_sequence_for(kind);
  return {seq.begin(), seq.end()};
}

std::optional<Leg> upcoming(const body::ActionPlan& plan, std::size_t action, const std::vector<Leg>& remaining,
                            Leg moving) {
  if (!remaining.empty()) return remaining[pick(remaining, moving)];
  if (action + 1 < plan.actions.size()) {
    const auto next = sequence_vector(plan.actions[action + 1].kind);
    return next[pick(next, moving)];
  }
  return std::nullopt;
}

struct Candidate {
  Eigen::Vector2d p;
  terrain::CellIndex cell;
  double distance;
};

}  // namespace

void FootstepConfig::validate() const {
  if (!(disc_radius > 0.0)) throw footstep_error("search disc radius must be positive");
  if (d_ref < 0.0 || swing_clearance < 0.0) throw footstep_error("d_ref and swing clearance must be non-negative");
  if (!(reach > 0.0)) throw footstep_error("reach bound must be positive");
  if (horizon < 1) throw footstep_error("horizon must be at least 1");
  if (weights.terrain < 0.0 || weights.stability < 0.0 || weights.clearance < 0.0 || weights.orientation < 0.0) {
    throw footstep_error("foothold cost weights must be non-negative");
  }
}

std::array<Leg, 4> swing_sequence_for(body::ActionKind kind) {
  using body::ActionKind;
  switch (kind) {
    case ActionKind::kLeft: return {Leg::LF, Leg::LH, Leg::RF, Leg::RH};
    case ActionKind::kRight: return {Leg::RF, Leg::RH, Leg::LF, Leg::LH};
    case ActionKind::kBack: return {Leg::RF, Leg::RH, Leg::LF, Leg::LH};
    case ActionKind::kForward:
    case ActionKind::kDiagonalLeft:
    case ActionKind::kDiagonalRight:
    case ActionKind::kTurnLeft:
    case ActionKind::kTurnRight: break;
  }
  return {Leg::LH, Leg::LF, Leg::RH, Leg::RF};
}

FootholdCost foothold_cost(const Eigen::Vector2d& p, Leg leg, const FootholdContext& ctx,
                           const terrain::TerrainSnapshot& map, const FootstepConfig& cfg) {
  FootholdCost out;
  const auto cell = map.geometry().cell_at(p);
  if (!cell || map.costs->is_void(*cell)) {
    out.terrain = kInf;
    out.total = kInf;
    return out;
  }
  out.terrain = map.costs->cost(*cell);
  const Eigen::Vector3d target(p.x(), p.y(), map.grid->at(*cell));
  Stance next = ctx.stance;
  next[index(leg)] = target;

  if (ctx.next_swing && *ctx.next_swing != leg) {
    std::vector<Eigen::Vector2d> tri;
    for (Leg l : kAllLegs) {
      if (l != *ctx.next_swing) tri.push_back(next[index(l)].head<2>());
    }
    if (geometry::triangle_area(tri[0], tri[1], tri[2]) <= cfg.min_triangle_area) {
      out.stability = kInf;
      out.total = kInf;
      return out;
    }
    out.stability = std::max(0.0, cfg.d_ref - geometry::triangle_inradius(tri[0], tri[1], tri[2]));
  }
  out.clearance =
      terrain::swing_clearance_violation(*map.grid, ctx.stance[index(leg)], target, cfg.swing_clearance);
  out.orientation = geometry::roll_pitch_magnitude(std::vector<Eigen::Vector3d>(next.begin(), next.end()), ctx.yaw);
  out.total = cfg.weights.terrain * out.terrain + cfg.weights.stability * out.stability +
              cfg.weights.clearance * out.clearance + cfg.weights.orientation * out.orientation;
  return out;
}

Stance nominal_stance(const body::BodyState& s, const terrain::TerrainSnapshot& map, const FootstepConfig& cfg) {
  Stance st;
  for (Leg leg : kAllLegs) {
    const Eigen::Vector2d p = cfg.stance.foot(s.xy(), s.theta, leg);
    const auto z = map.height_at(p);
    if (!z) throw footstep_error(std::string("nominal foot ") + to_string(leg) + " is off the map");
    st[index(leg)] = Eigen::Vector3d(p.x(), p.y(), *z);
  }
  return st;
}

Cursor initial_cursor(const body::ActionPlan& plan, const terrain::TerrainSnapshot& map, const FootstepConfig& cfg) {
  if (plan.states.empty()) throw footstep_error("action plan has no states");
  Cursor c;
  c.stance = nominal_stance(plan.states.front(), map, cfg);
  return c;
}

bool FootholdPlan::complete(const body::ActionPlan& plan) const {
  return !cursors.empty() && cursors.back().action >= plan.actions.size();
}

Stance FootholdPlan::stance_after(std::size_t k) const {
  Stance s = initial_stance;
  for (std::size_t i = 0; i < std::min(k, steps.size()); ++i) s[index(steps[i].leg)] = steps[i].position;
  return s;
}

FootholdPlan plan_footsteps(const body::ActionPlan& plan, const terrain::TerrainSnapshot& map,
                            const FootstepConfig& cfg, const Cursor& from, int horizon) {
  cfg.validate();
  if (horizon < 1) throw footstep_error("horizon must be at least 1");
  if (plan.states.size() != plan.actions.size() + 1) throw footstep_error("action plan states do not match actions");
  const auto& geo = map.geometry();

  FootholdPlan out;
  out.initial_stance = from.stance;
  out.horizon = horizon;
  out.cursors.push_back(from);
  Cursor cur = from;

  while (static_cast<int>(out.steps.size()) < horizon && cur.action < plan.actions.size()) {
    out.cursors.back() = cur;
    const std::size_t ai = cur.action;
    if (cur.remaining.empty()) cur.remaining = sequence_vector(plan.actions[ai].kind);
    const std::size_t k = pick(cur.remaining, cur.last_leg);
    const Leg leg = cur.remaining[k];
    cur.remaining.erase(cur.remaining.begin() + static_cast<std::ptrdiff_t>(k));

    const body::BodyState& post = plan.states[ai + 1];
    const Eigen::Vector2d nominal = cfg.stance.foot(post.xy(), post.theta, leg);
    FootholdContext ctx{cur.stance, upcoming(plan, ai, cur.remaining, leg), post.theta};

    std::vector<Candidate> candidates;
    if (const auto c = geo.cell_at(nominal)) candidates.push_back({nominal, *c, 0.0});
    for (const auto& c : geo.cells_in_disc(nominal, cfg.disc_radius)) {
      const Eigen::Vector2d p = geo.cell_center(c);
      candidates.push_back({p, c, (p - nominal).norm()});
    }
    double best_cost = kInf;
    const Candidate* best = nullptr;
    for (const auto& cand : candidates) {
      if ((cand.p - nominal).norm() > cfg.reach) continue;
      const double cost = foothold_cost(cand.p, leg, ctx, map, cfg).total;
      if (!std::isfinite(cost)) continue;
      const bool better =
          !best || cost < best_cost ||
          (cost == best_cost &&
           (cand.distance < best->distance ||
            (cand.distance == best->distance &&
             std::make_pair(cand.cell.ix, cand.cell.iy) < std::make_pair(best->cell.ix, best->cell.iy))));
      if (better) {
        best = &cand;
        best_cost = cost;
      }
    }

    if (!best) {
      if ((cur.stance[index(leg)].head<2>() - nominal).norm() > cfg.reach) {
        std::ostringstream msg;
        msg << "unreachable foothold for leg " << to_string(leg) << " in action " << ai << " ("
            << body::to_string(plan.actions[ai].kind) << ")";
        throw footstep_error(msg.str());
      }
    } else {
      const Eigen::Vector3d pos(best->p.x(), best->p.y(), map.grid->at(best->cell));
      if (cur.last_leg == leg && !out.steps.empty()) {
        out.steps.back().position = pos;
        out.steps.back().action = ai;
      } else {
        out.steps.push_back({leg, pos, cur.next_step_index++, ai});
        out.cursors.push_back(cur);
      }
      cur.stance[index(leg)] = pos;
      cur.last_leg = leg;
    }
    if (cur.remaining.empty()) ++cur.action;
    out.cursors.back() = cur;
  }
  out.cursors.back() = cur;
  return out;
}

FootholdPlan plan_footsteps(const body::ActionPlan& plan, const terrain::TerrainSnapshot& map,
                            const FootstepConfig& cfg) {
  return plan_footsteps(plan, map, cfg, initial_cursor(plan, map, cfg), cfg.horizon);
}

bool steps_touch(const FootholdPlan& plan, std::size_t from, const terrain::CellRect& changed,
                 const body::ActionPlan& actions, const terrain::GridGeometry& geometry, const FootstepConfig& cfg) {
  if (changed.empty()) return false;
  Stance s = plan.stance_after(from);
  for (std::size_t k = from; k < plan.steps.size(); ++k) {
    const Foothold& f = plan.steps[k];
    if (f.action + 1 < actions.states.size()) {
      const body::BodyState& post = actions.states[f.action + 1];
      const Eigen::Vector2d nominal = cfg.stance.foot(post.xy(), post.theta, f.leg);
      if (geometry.rect_covering_disc(nominal, cfg.disc_radius).intersects(changed)) return true;
    }
    const Eigen::Vector2d a = s[index(f.leg)].head<2>();
    const Eigen::Vector2d b = f.position.head<2>();
    if (geometry.rect_covering_disc(a, 0.0).united(geometry.rect_covering_disc(b, 0.0)).intersects(changed)) {
      return true;
    }
    s[index(f.leg)] = f.position;
  }
  return false;
}

FootholdPlan replan_footsteps(const FootholdPlan& prev, const terrain::CellRect& changed, std::size_t executed,
                              const body::ActionPlan& plan, const terrain::TerrainSnapshot& map,
                              const FootstepConfig& cfg) {
  if (executed > prev.steps.size() || executed >= prev.cursors.size()) {
    throw footstep_error("executed step count exceeds the plan");
  }
  if (!steps_touch(prev, executed, changed, plan, map.geometry(), cfg)) return prev;

  const int remaining = prev.complete(plan) ? std::numeric_limits<int>::max()
                                            : std::max(1, static_cast<int>(prev.steps.size() - executed));
  FootholdPlan tail = plan_footsteps(plan, map, cfg, prev.cursors[executed], remaining);

  FootholdPlan out;
  out.initial_stance = prev.initial_stance;
  out.horizon = prev.horizon;
  out.steps.assign(prev.steps.begin(), prev.steps.begin() + static_cast<std::ptrdiff_t>(executed));
  out.cursors.assign(prev.cursors.begin(), prev.cursors.begin() + static_cast<std::ptrdiff_t>(executed));
  out.steps.insert(out.steps.end(), tail.steps.begin(), tail.steps.end());
  out.cursors.insert(out.cursors.end(), tail.cursors.begin(), tail.cursors.end());
  return out;
}

void write_footholds(std::ostream& os, const FootholdPlan& plan) {
  char buf[256];
  for (Leg leg : kAllLegs) {
    const auto& p = plan.initial_stance[index(leg)];
    std::snprintf(buf, sizeof buf, "stance %s %.17g %.17g %.17g\n", to_string(leg), p.x(), p.y(), p.z());
    os << buf;
  }
  for (const auto& f : plan.steps) {
    std::snprintf(buf, sizeof buf, "step %d %s %.17g %.17g %.17g %zu\n", f.step_index, to_string(f.leg),
                  f.position.x(), f.position.y(), f.position.z(), f.action);
    os << buf;
  }
}

FootholdPlan read_footholds(std::istream& is) {
  FootholdPlan plan;
  std::array<bool, 4> have{};
  std::string line;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    std::string leg_name;
    Eigen::Vector3d p;
    if (tag == "stance") {
      if (!(ls >> leg_name >> p.x() >> p.y() >> p.z())) throw footstep_error("malformed stance record");
      const Leg leg = leg_from_string(leg_name);
      plan.initial_stance[index(leg)] = p;
      have[index(leg)] = true;
    } else if (tag == "step") {
      Foothold f;
      if (!(ls >> f.step_index >> leg_name >> p.x() >> p.y() >> p.z())) throw footstep_error("malformed step record");
      f.leg = leg_from_string(leg_name);
      f.position = p;
      std::size_t action = 0;
      if (ls >> action) f.action = action;
      if (!plan.steps.empty() && f.step_index <= plan.steps.back().step_index) {
        throw footstep_error("step indices must increase");
      }
      plan.steps.push_back(f);
    } else {
      throw footstep_error("unknown foothold record '" + tag + "'");
    }
  }
  if (!std::all_of(have.begin(), have.end(), [](bool b) { return b; })) {
    throw footstep_error("foothold file must list the stance of all four legs");
  }
  plan.horizon = static_cast<int>(plan.steps.size());
  return plan;
}

}  // namespace quadloco::footstep
