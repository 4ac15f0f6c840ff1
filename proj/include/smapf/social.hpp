#pragma once

#include <span>
#include <vector>

#include "smapf/parallel.hpp"
#include "smapf/pathing.hpp"

namespace smapf {

inline constexpr int kDefaultSvoBins = 5;
inline constexpr double kMaxSvoDegrees = 45.0;

/// Angle in degrees of bin `b` out of `k` bins spread uniformly over [0, 45].
double svo_angle(int bin, int k = kDefaultSvoBins);

/// Per-agent SVO state: current distribution over bins, the distribution from
/// the previous step, and the sampled bin whose angle is in force.
struct SvoState {
  std::vector<double> dist;
  std::vector<double> prev;
  int bin = 0;
  double angle = 0.0;

  static SvoState uniform(int k = kDefaultSvoBins);
};

/// Weighted path-flow overlap between every pair of agents plus the
/// temporary partner choice derived from it.
struct Overlap {
  int n = 0;
  std::vector<double> weights;   // row-major n x n, symmetric, zero diagonal
  std::vector<int> partners;     // argmax per row, self when the row is zero
  std::vector<char> unreachable; // agent fell back to a singleton flow

  double at(int i, int j) const { return weights[static_cast<std::size_t>(i) * n + j]; }
};

/// Flow of every agent from its position on the given fields; agents whose
/// goal is unreachable get a one-vertex Stop flow and are flagged.
std::vector<PathFlow> agent_flows(const GridMap& map, std::span<const Cell> positions,
                                  std::span<const DistanceField> fields,
                                  std::vector<char>* unreachable = nullptr);

/// Overlap of precomputed flows. Each shared cell whose directions differ adds
/// gamma^ti + gamma^tj to the pair; contributions for a pair are summed in the
/// lower-index agent's path order, so both kernels agree bit for bit.
Overlap overlap_from_flows(std::span<const PathFlow> flows, int map_cells, int map_width,
                           double gamma_ol, Exec exec = Exec::Parallel);

Overlap compute_overlap(const GridMap& map, std::span<const Cell> positions,
                        std::span<const DistanceField> fields, double gamma_ol,
                        Exec exec = Exec::Parallel);

/// Builds the goal fields itself.
Overlap compute_overlap(const GridMap& map, std::span<const Cell> positions,
                        std::span<const Cell> goals, double gamma_ol, Exec exec = Exec::Parallel);

/// Argmax per row with ties to the lowest index; self for an all-zero row.
std::vector<int> select_partners(std::span<const double> weights, int n);

/// Keep the fixed partner while the overlap with it stays positive, otherwise
/// adopt the temporary partner.
std::vector<int> update_fixed_partners(std::span<const int> temporary, const Overlap& overlap,
                                       std::span<const int> fixed_prev);

/// Per-episode partner bookkeeping: recomputes the overlap each step and
/// carries the fixed partners forward (initialized from the first step's
/// temporary partners).
class PartnerTracker {
 public:
  explicit PartnerTracker(double gamma_ol = 0.95) : gamma_ol_(gamma_ol) {}

  const Overlap& update(const GridMap& map, std::span<const Cell> positions,
                        std::span<const DistanceField> fields);
  const Overlap& overlap() const { return overlap_; }
  const std::vector<int>& fixed() const { return fixed_; }
  void reset() { fixed_.clear(); }

 private:
  double gamma_ol_;
  Overlap overlap_;
  std::vector<int> fixed_;
};

struct SocialRewards {
  double svo;     // R^s
  double action;  // R^a
};

/// R^s = (Ri + Rp) / rho, R^a = cos(Z) Ri + sin(Z) Rp with Z in degrees.
SocialRewards redistribute_rewards(double r_self, double r_partner, double z_degrees, double rho);

struct StabilityTarget {
  double alpha;
  std::vector<double> z_exp;
};

/// alpha = min(O, clip(O, 0, kappa)) / kappa; z_exp = alpha z_prev + (1 - alpha) z.
StabilityTarget stability_target(std::span<const double> z, std::span<const double> z_prev,
                                 double overlap_ip, double kappa);

}  // namespace smapf
