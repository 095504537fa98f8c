#pragma once

#include <limits>
#include <map>
#include <queue>
#include <random>
#include <vector>

#include "quadloco/body_planner.hpp"
#include "quadloco/terrain.hpp"

namespace testsupport {

// Flat height grid with an explicit random cost table.
inline quadloco::terrain::TerrainSnapshot random_cost_snapshot(std::mt19937& rng, int cells, double origin,
                                                               double max_cost) {
  quadloco::terrain::GridGeometry g;
  g.nx = cells;
  g.ny = cells;
  g.origin = Eigen::Vector2d(origin, origin);
  std::uniform_real_distribution<double> u(0.0, max_cost);
  Eigen::MatrixXd c(cells, cells);
  for (int i = 0; i < c.size(); ++i) c(i) = u(rng);
  quadloco::terrain::TerrainSnapshot snap;
  snap.grid = std::make_shared<const quadloco::terrain::HeightGrid>(
      quadloco::terrain::ingest_heightmap(Eigen::MatrixXd::Zero(cells, cells), g));
  snap.costs = std::make_shared<const quadloco::terrain::CostMap>(quadloco::terrain::CostMap::from_costs(g, c));
  return snap;
}

// Plain Dijkstra over the planner's successor graph; returns the cheapest cost into the goal region.
inline double dijkstra_cost(const quadloco::body::LatticeIndex& start, const quadloco::body::LatticeIndex& goal,
                            const quadloco::terrain::TerrainSnapshot& map, const quadloco::body::PlannerConfig& cfg) {
  using quadloco::body::LatticeIndex;
  std::map<LatticeIndex, double> dist;
  using Item = std::pair<double, LatticeIndex>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
  dist[start] = 0.0;
  pq.emplace(0.0, start);
  while (!pq.empty()) {
    const auto [d, s] = pq.top();
    pq.pop();
    if (d > dist[s]) continue;
    if (quadloco::body::in_goal_region(s, goal, cfg.lattice)) return d;
    for (const auto& [t, a] : quadloco::body::successors(s, map, cfg)) {
      const double nd = d + a.cost;
      auto it = dist.find(t);
      if (it == dist.end() || nd < it->second) {
        dist[t] = nd;
        pq.emplace(nd, t);
      }
    }
  }
  return std::numeric_limits<double>::infinity();
}

inline quadloco::body::PlannerConfig small_lattice_config(int cells) {
  quadloco::body::PlannerConfig cfg;
  cfg.lattice.headings = 8;
  cfg.lattice.bounds = quadloco::body::LatticeBounds{0, cells - 1, 0, cells - 1};
  cfg.eps0 = 3.0;
  cfg.eps_step = 0.5;
  return cfg;
}

}  // namespace testsupport
