#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "sbm/coloring.hpp"
#include "sbm/estimate.hpp"
#include "sbm/rng.hpp"

namespace sbm {

// A change of the coincidence structure along realized walker paths.
// Lattice: any change of the coincidence partition (merge or split), with
// `partition` the structure holding from `time` until the next event.
// Brownian: a collision of a pair other than the currently active one;
// `partition` pairs that pair and leaves everyone else single.
struct CollisionEvent {
  double time;
  SetPartition partition;
  int pair_i = 0;  // colliding pair, 1-based; 0 for lattice events
  int pair_j = 0;
};

// Realized dual particle paths on [0, horizon]: continuous-time rate-1
// walks on Z^d, or Brownian motions on a dt grid with bridge-corrected
// collision detection and per-pair local time.
class WalkerPaths {
 public:
  int n() const { return n_; }
  double horizon() const { return horizon_; }
  bool is_lattice() const { return lattice_; }
  int dimension() const { return dim_; }
  long torus() const { return torus_; }
  bool tracks_local_time() const { return tracks_local_time_; }

  const std::vector<CollisionEvent>& events() const { return events_; }
  SetPartition initial_partition() const;

  std::array<long, 3> lattice_position(int walker, double t) const;
  double brownian_position(int walker, double t) const;

  // Pair local time L^{i,j}(t): coincidence time on the lattice, Tanaka
  // local time at 0 of X^i - X^j (variance rate 2) in the continuum.
  double pair_local_time(int i, int j, double t) const;

  // Lattice coincidence intervals of a pair, closed at the horizon.
  std::span<const std::pair<double, double>> pair_intervals(int i, int j) const;

  const std::vector<double>& grid_times() const { return times_; }

 private:
  friend WalkerPaths simulate_lattice_walkers(int, int,
                                              const std::vector<std::array<long, 3>>&,
                                              double, RngStream&, long);
  friend WalkerPaths simulate_brownian_walkers(int, const std::vector<double>&,
                                               double, double, RngStream&, bool);

  int pair_index(int i, int j) const;

  int n_ = 0;
  bool lattice_ = true;
  int dim_ = 1;
  long torus_ = 0;
  double horizon_ = 0;
  bool tracks_local_time_ = false;
  std::vector<CollisionEvent> events_;

  // lattice storage
  std::vector<std::array<long, 3>> starts_;
  std::vector<std::vector<double>> jump_times_;
  std::vector<std::vector<std::array<long, 3>>> jump_pos_;
  std::vector<std::vector<std::pair<double, double>>> intervals_;

  // Brownian storage
  std::vector<double> times_;
  std::vector<std::vector<double>> pos_;
  std::vector<std::vector<double>> cum_local_;
};

// Rate-1 walks on Z^d (uniform neighbour jumps), d in {1,2,3}. With
// torus > 0 coincidence is read modulo torus in each used coordinate.
WalkerPaths simulate_lattice_walkers(int n, int d,
                                     const std::vector<std::array<long, 3>>& starts,
                                     double horizon, RngStream& rng,
                                     long torus = 0);

// Independent Brownian motions on a dt grid. Starts must be distinct.
WalkerPaths simulate_brownian_walkers(int n, const std::vector<double>& starts,
                                      double horizon, double dt, RngStream& rng,
                                      bool track_local_time = true);

// Expected local time at zero accrued over one step of a process with
// variance rate var_rate, conditioned on the step endpoints.
double bridge_local_time(double d0, double d1, double h, double var_rate);

// Probability that a process with variance rate var_rate and endpoint
// distances a, b > 0 on the same side touched zero within the step.
inline double bridge_crossing_probability(double a, double b, double h,
                                          double var_rate) {
  return std::exp(-2.0 * a * b / (var_rate * h));
}

struct DualTrajectory {
  std::vector<double> times;
  std::vector<ColorMeasure> measures;
  double gamma = 0;  // +infinity for the instantaneous-flow limit

  const ColorMeasure& final_measure() const { return measures.back(); }
  const ColorMeasure& measure_at(double t) const;
};

// Color-measure flow along realized paths at interaction rate gamma:
// within a segment of constant structure the measure follows the flow of
// the segment's partition, run in elapsed time (lattice) or in the active
// pair's local time (Brownian).
DualTrajectory evolve_M_gamma(const WalkerPaths& paths, const ColorMeasure& M0,
                              double rho, double gamma,
                              std::span<const double> sample_times = {});

// gamma -> infinity limit: the long-time flow limit is applied
// instantaneously, at t=0 and at every event (lattice), or at each
// new-pair collision (Brownian, where M stays M0 until the first one).
DualTrajectory evolve_M_infinity(const WalkerPaths& paths,
                                 const ColorMeasure& M0, double rho,
                                 std::span<const double> sample_times = {});

struct ColoredDualState {
  double time;
  Coloring coloring;
  double same_local;  // cumulative coincident exposure while same-colored
  double diff_local;  // and while differently colored
};

// Single colored-particle trajectory: same-colored coincident pairs flip
// one of their colors at rate gamma each (in pair local time); different
// colors never flip. Returns states at 0, every flip, and the horizon.
std::vector<ColoredDualState> simulate_colored_dual(const WalkerPaths& paths,
                                                    const Coloring& c0,
                                                    double gamma,
                                                    RngStream& rng);

// exp(gamma (L_same + rho L_diff)) for a finished colored trajectory.
double interaction_weight(const ColoredDualState& end, double rho,
                          double gamma);

// Monte Carlo moment estimate via the measure-valued dual on Z (d = 1):
// mean of sum_m M_t(m) prod_i u0^{(m_i)}(X_i(t)) over replicas. gamma may
// be +infinity. u0 evaluations must be finite and nonnegative.
MomentEstimate dual_moment_estimate_lattice(
    const std::function<double(long)>& u0_color1,
    const std::function<double(long)>& u0_color2,
    const std::vector<long>& start_sites, const Coloring& colors, long torus,
    double rho, double gamma, double t, long replicas, uint64_t seed,
    int threads);

// Same estimator driven by Brownian paths on a dt grid.
MomentEstimate dual_moment_estimate_brownian(
    const std::function<double(double)>& u0_color1,
    const std::function<double(double)>& u0_color2,
    const std::vector<double>& starts, const Coloring& colors, double rho,
    double gamma, double t, double dt, long replicas, uint64_t seed,
    int threads);

}  // namespace sbm
