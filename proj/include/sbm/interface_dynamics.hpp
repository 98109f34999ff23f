#pragma once

#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "sbm/estimate.hpp"
#include "sbm/heat_flow.hpp"
#include "sbm/rng.hpp"

namespace sbm {

// Initial data for the fully anticorrelated regime: a density profile plus
// the ordered positions where the type flips; leftmost_type colours
// everything left of the first interface.
class TypedProfile {
 public:
  TypedProfile(Profile density, std::vector<double> interfaces,
               int leftmost_type);

  const Profile& density() const { return density_; }
  const std::vector<double>& interfaces() const { return interfaces_; }
  int leftmost_type() const { return leftmost_type_; }

  // Initial type at x: 1 or 2, or 0 exactly on an interface.
  int type_at(double x) const;
  double color_value(double x, int color) const;

 private:
  Profile density_;
  std::vector<double> interfaces_;
  int leftmost_type_;
};

// One Euler step of the single-interface motion
// dI = -(S_s w0)'(I)/(S_s w0)(I) ds + dB. At s = 0 the drift can be
// singular on a breakpoint, so the step is noise-only there; drivers start
// with a microscopic step and double it until reaching the regular grid.
double step_single_interface(double position, double s, double dt,
                             const Profile& w0, RngStream& rng);

// Time grid {0, eps, 2 eps, ..., dt, 2 dt, ..., horizon}.
std::vector<double> warmup_time_grid(double horizon, double dt,
                                     double eps = 1e-8);

double simulate_single_interface(const Profile& w0, double position0,
                                 double horizon, double dt, RngStream& rng);

// P(I_t <= x) = S_t(w0 1_{(I0,inf)})(x) / S_t(w0)(x).
double interface_cdf(const Profile& w0, double position0, double t, double x);

// Coalescing system of interface motions driven by the common density
// drift: clusters merge on (bridge-corrected) collision and carry their
// member labels along. Every label's path equals its cluster's path.
struct CoalescingTrajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> label_pos;  // [label][grid index]

  struct Merge {
    int step;  // grid index at which the merged state first holds
    double time;
    int rep_left, rep_right;    // carrier labels of the two clusters
    int mult_left, mult_right;  // multiplicities before the merge
    int rep_after;
  };
  std::vector<Merge> merges;
  int chain_merges = 0;     // clusters absorbed twice within one step
  int overtake_merges = 0;  // merges forced by an ordering violation
  int final_cluster_count = 0;

  int labels() const { return static_cast<int>(label_pos.size()); }
  std::size_t grid_index(double t) const;
};

CoalescingTrajectory simulate_coalescing_system(
    const std::vector<double>& starts, const Profile& w0, double horizon,
    double dt, RngStream& rng);

// Annihilating system read off the coalescing one: a label is alive while
// it carries an odd cluster; merges of two odd clusters kill both carrier
// labels at the merge time. Deaths therefore come in adjacent pairs.
struct AnnihilatingTrajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> label_pos;
  std::vector<double> death_time;  // +inf while alive

  int survivors_at(double t) const;
  std::vector<double> living_positions(double t) const;  // ascending
  std::size_t grid_index(double t) const;
};

AnnihilatingTrajectory annihilate_by_parity(const CoalescingTrajectory& co);

// Type at (t, x) read from the living annihilating paths: the leftmost
// type flipped once per living path left of x; 0 exactly on a path.
int standard_colouring(const TypedProfile& u0,
                       const AnnihilatingTrajectory& paths, double t,
                       double x);

// (hat u^1, hat u^2)(t, x) = S_t w0 (x) split by the colouring.
std::pair<double, double> standard_element(const TypedProfile& u0,
                                           const AnnihilatingTrajectory& paths,
                                           double t, double x);

// E[f(X^1_t) g(X^2_t); X^1 and X^2 from x < y never meet] by the
// determinant kernel p_t(a-x)p_t(b-y) - p_t(b-x)p_t(a-y) integrated over
// a < b. Quadrature panels split at the supplied discontinuities of f, g.
double km_noncrossing_expectation(const std::function<double(double)>& f,
                                  const std::function<double(double)>& g,
                                  double x, double y, double t,
                                  const std::vector<double>& f_breaks,
                                  const std::vector<double>& g_breaks,
                                  int order = 32);

struct SecondMomentReport {
  MomentEstimate interface_side;  // E[hat u^1_t(x) hat u^2_t(y)]
  MomentEstimate dual_side;       // E[u0^1(X^1_t) u0^2(X^2_t); no meeting]
  double km_value = 0;
  double z = 0;  // interface vs dual
};

SecondMomentReport second_moment_check(const TypedProfile& u0, double t,
                                       double x, double y, double dt,
                                       long replicas, uint64_t seed,
                                       int threads);

}  // namespace sbm
