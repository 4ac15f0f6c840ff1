#include "smapf/social.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace smapf {

double svo_angle(int bin, int k) {
  if (k < 2 || bin < 0 || bin >= k) throw ParameterError("SVO bin out of range");
  return kMaxSvoDegrees * bin / (k - 1);
}

SvoState SvoState::uniform(int k) {
  SvoState s;
  s.dist.assign(k, 1.0 / k);
  s.prev = s.dist;
  return s;
}

std::vector<PathFlow> agent_flows(const GridMap& map, std::span<const Cell> positions,
                                  std::span<const DistanceField> fields,
                                  std::vector<char>* unreachable) {
  const int n = static_cast<int>(positions.size());
  std::vector<PathFlow> flows(n);
  if (unreachable) unreachable->assign(n, 0);
  for (int i = 0; i < n; ++i) {
    if (fields[i].reachable(positions[i])) {
      flows[i] = descend(map, fields[i], positions[i]);
    } else {
      flows[i].cells = {positions[i]};
      flows[i].dirs = {Action::Idle};
      if (unreachable) (*unreachable)[i] = 1;
    }
  }
  return flows;
}

std::vector<int> select_partners(std::span<const double> weights, int n) {
  std::vector<int> p(n);
  for (int i = 0; i < n; ++i) {
    int best = i;
    double best_w = 0.0;
    for (int j = 0; j < n; ++j) {
      const double w = weights[static_cast<std::size_t>(i) * n + j];
      if (j != i && w > best_w) {
        best_w = w;
        best = j;
      }
    }
    p[i] = best;
  }
  return p;
}

Overlap overlap_from_flows(std::span<const PathFlow> flows, int map_cells, int map_width,
                           double gamma_ol, Exec exec) {
  if (!(gamma_ol > 0.0 && gamma_ol <= 1.0)) throw ParameterError("gamma_ol must lie in (0, 1]");
  const int n = static_cast<int>(flows.size());
  Overlap out;
  out.n = n;
  out.weights.assign(static_cast<std::size_t>(n) * n, 0.0);

  std::size_t longest = 0;
  for (const auto& f : flows) longest = std::max(longest, f.cells.size());
  std::vector<double> pow_g(longest + 1, 1.0);
  for (std::size_t t = 1; t < pow_g.size(); ++t) pow_g[t] = pow_g[t - 1] * gamma_ol;

  // Cell -> visits, bucketed in agent order (CSR layout).
  struct Visit {
    int agent;
    int t;
    Action dir;
  };
  std::vector<int> start(map_cells + 1, 0);
  for (const auto& f : flows) {
    for (Cell c : f.cells) ++start[c.r * map_width + c.c + 1];
  }
  for (int v = 0; v < map_cells; ++v) start[v + 1] += start[v];
  std::vector<Visit> visits(start[map_cells]);
  {
    std::vector<int> fill(start.begin(), start.end() - 1);
    for (int i = 0; i < n; ++i) {
      const auto& f = flows[i];
      for (std::size_t t = 0; t < f.cells.size(); ++t) {
        const int v = f.cells[t].r * map_width + f.cells[t].c;
        visits[fill[v]++] = {i, static_cast<int>(t), f.dirs[t]};
      }
    }
  }

  auto row = [&](int i) {
    double* wi = out.weights.data() + static_cast<std::size_t>(i) * n;
    const auto& f = flows[i];
    for (std::size_t t = 0; t < f.cells.size(); ++t) {
      const int v = f.cells[t].r * map_width + f.cells[t].c;
      for (int k = start[v]; k < start[v + 1]; ++k) {
        const Visit& o = visits[k];
        if (o.agent <= i || o.dir == f.dirs[t]) continue;
        wi[o.agent] += pow_g[t] + pow_g[o.t];
      }
    }
  };
  if (exec == Exec::Serial) {
    for (int i = 0; i < n; ++i) row(i);
  } else {
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) row(i);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      out.weights[static_cast<std::size_t>(j) * n + i] = out.weights[static_cast<std::size_t>(i) * n + j];
    }
  }
  out.partners = select_partners(out.weights, n);
  return out;
}

Overlap compute_overlap(const GridMap& map, std::span<const Cell> positions,
                        std::span<const DistanceField> fields, double gamma_ol, Exec exec) {
  if (positions.size() != fields.size()) throw ParameterError("positions/fields size mismatch");
  std::vector<char> unreachable;
  const auto flows = agent_flows(map, positions, fields, &unreachable);
  auto out = overlap_from_flows(flows, map.size(), map.width(), gamma_ol, exec);
  out.unreachable = std::move(unreachable);
  return out;
}

Overlap compute_overlap(const GridMap& map, std::span<const Cell> positions,
                        std::span<const Cell> goals, double gamma_ol, Exec exec) {
  const auto fields = distance_fields(map, goals, exec);
  return compute_overlap(map, positions, fields, gamma_ol, exec);
}

std::vector<int> update_fixed_partners(std::span<const int> temporary, const Overlap& overlap,
                                       std::span<const int> fixed_prev) {
  const int n = overlap.n;
  if (static_cast<int>(temporary.size()) != n || static_cast<int>(fixed_prev.size()) != n) {
    throw ParameterError("partner vectors must match the overlap size");
  }
  std::vector<int> fixed(n);
  for (int i = 0; i < n; ++i) {
    fixed[i] = overlap.at(i, fixed_prev[i]) == 0.0 ? temporary[i] : fixed_prev[i];
  }
  return fixed;
}

const Overlap& PartnerTracker::update(const GridMap& map, std::span<const Cell> positions,
                                      std::span<const DistanceField> fields) {
  overlap_ = compute_overlap(map, positions, fields, gamma_ol_, Exec::Serial);
  if (fixed_.size() != positions.size()) {
    fixed_ = overlap_.partners;
  } else {
    fixed_ = update_fixed_partners(overlap_.partners, overlap_, fixed_);
  }
  return overlap_;
}

SocialRewards redistribute_rewards(double r_self, double r_partner, double z_degrees, double rho) {
  if (!(z_degrees >= 0.0 && z_degrees <= kMaxSvoDegrees)) {
    throw ContractError("SVO angle outside [0, 45] degrees");
  }
  if (!(rho > 0.0)) throw ContractError("rho must be positive");
  const double z = z_degrees * std::numbers::pi / 180.0;
  return {(r_self + r_partner) / rho, std::cos(z) * r_self + std::sin(z) * r_partner};
}

StabilityTarget stability_target(std::span<const double> z, std::span<const double> z_prev,
                                 double overlap_ip, double kappa) {
  if (!(kappa > 0.0)) throw ParameterError("kappa must be positive");
  if (z.size() != z_prev.size()) throw ParameterError("distribution sizes differ");
  const double clipped = std::clamp(overlap_ip, 0.0, kappa);
  StabilityTarget out;
  out.alpha = std::min(overlap_ip, clipped) / kappa;
  out.alpha = std::clamp(out.alpha, 0.0, 1.0);
  out.z_exp.resize(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) {
    out.z_exp[k] = out.alpha * z_prev[k] + (1.0 - out.alpha) * z[k];
  }
  return out;
}

}  // namespace smapf
