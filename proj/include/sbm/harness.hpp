#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sbm/estimate.hpp"
#include "sbm/heat_flow.hpp"
#include "sbm/rng.hpp"

namespace sbm {

using json = nlohmann::ordered_json;

inline constexpr int kReportSchemaVersion = 1;

// |lhs - rhs| / sqrt(lhs_se^2 + rhs_se^2); 0 when both SEs vanish and the
// values agree, +infinity when they differ with zero SE.
double z_score(double lhs, double lhs_se, double rhs, double rhs_se);

// Kolmogorov-Smirnov distance of a sample against a reference CDF.
double ks_statistic(std::vector<double> sample,
                    const std::function<double(double)>& cdf);
double ks_critical_1pct(std::size_t n);  // 1.63 / sqrt(n)

// Regularized upper incomplete gamma Q(s, x).
double gamma_q(double s, double x);
double chi2_pvalue(double statistic, int dof);

struct Chi2Result {
  double statistic = 0;
  int dof = 0;
  double p_value = 1;
};

// Two-sample homogeneity chi-square over shared categories. Adjacent
// categories are pooled until each cell holds >= min_pooled combined
// counts (trailing remainder pooled backwards).
Chi2Result chi2_two_sample(std::span<const long> a, std::span<const long> b,
                           long min_pooled = 10);

struct ComparisonRow {
  std::string label;
  double lhs = 0, lhs_se = 0, rhs = 0, rhs_se = 0;
  double z = 0;
  bool pass = true;
};

ComparisonRow compare(std::string label, double lhs, double lhs_se, double rhs,
                      double rhs_se, double threshold = 3.0);

// A machine-readable experiment result. The JSON embeds the full config
// (including the seed) and carries no clocks or host data, so identical
// (config, seed) reproduce identical bytes at any parallelism degree.
struct ExperimentReport {
  std::string kind;
  json config = json::object();
  std::vector<ComparisonRow> rows;
  json extra = json::object();

  bool pass() const;
  json to_json() const;
};

void write_report(const ExperimentReport& report, const std::string& path);

// ---- experiment drivers ----------------------------------------------

struct DualityLatticeConfig {
  std::string colors = "12";  // one digit per dual walker
  std::vector<long> sites;    // observation sites, one per walker
  long torus = 256;
  double rho = -1;
  double gamma = 4;    // finite: forward-vs-dual needs a forward run
  double t = 1;
  double dt = 1e-3;
  std::string init = "flat";  // flat | heaviside (complementary halves)
  long replicas = 20000;
};

ExperimentReport duality_lattice_experiment(const DualityLatticeConfig& cfg,
                                            uint64_t seed, int threads);

struct DualityContinuumConfig {
  std::vector<double> starts = {0.0, 1.0};  // two distinct walker starts
  double rho = -1;                          // oracle exists only at -1
  double t = 1;
  double dt = 1e-3;
  std::string u0 = "flat";  // flat (1,1) | heaviside (split at 0, type 1 left)
  long replicas = 10000;
};

// Infinite-rate dual estimate against its closed-form oracle:
// no-collision probability (flat) or non-crossing quadrature (heaviside).
ExperimentReport duality_continuum_experiment(const DualityContinuumConfig& cfg,
                                              uint64_t seed, int threads);

struct InterfaceSimConfig {
  Profile w0 = Profile::constant(1.0);
  std::vector<double> interfaces = {0.0};
  int leftmost_type = 1;
  double t = 1;
  double dt = 1e-3;
  long replicas = 5000;
  std::string trace_path;  // first-replica path CSV when nonempty
};

// Single interface: KS against the closed-form law (plus mean/variance
// rows for a flat profile). Several interfaces: survivor-count table of
// the parity construction against an event-driven annihilating run.
ExperimentReport interface_sim_experiment(const InterfaceSimConfig& cfg,
                                          uint64_t seed, int threads);

// Event-driven annihilating system: Euler steps with the same drift and
// bridge-corrected collision detection, but colliding pairs die on the
// spot. Returns survivor count at the horizon.
int simulate_annihilating_direct(const std::vector<double>& starts,
                                 const Profile& w0, double horizon, double dt,
                                 RngStream& rng);

struct CollisionMomentConfig {
  double rho = -0.5;
  double gamma = 1;
  long replicas = 100000;
  double horizon = 500;
  int batches = 50;  // batch-mean z for the correlated formula comparison
  // Supercritical probe: estimates along nested horizons must blow up.
  double divergence_rho = 0.9;
  double divergence_gamma = 3;
  std::vector<double> divergence_horizons;  // empty: skip the probe
  long divergence_replicas = 20000;
  double divergence_bound = 50;
};

// d=3 total coincidence time of a dual pair: the exponential-moment
// identity E[e^{rho gamma L}] = (1 - rho gamma / (2(1-p3)))^{-1} with p3
// estimated from the same walks' return counts.
ExperimentReport collision_moment_experiment(const CollisionMomentConfig& cfg,
                                         uint64_t seed, int threads);

struct LatticeRunConfig {
  long sites = 256;
  double gamma = 1;
  double rho = -1;
  double dt = 1e-3;
  double t = 1;
  std::string init = "flat";   // flat | heaviside | file
  std::string init_path;       // two-profile file when init == file
  long snapshots = 1;          // evenly spaced sample times up to t
};

struct LatticeRunResult {
  std::vector<double> times;
  std::vector<std::vector<double>> u1, u2;
  long clamp_count = 0;
};

LatticeRunResult lattice_run(const LatticeRunConfig& cfg, uint64_t seed);
void write_lattice_csv(const LatticeRunResult& run, const std::string& path);

// Diffusively rescaled run: snapshots taken at k^2 * (even spacing of t),
// emitted on the coarse grid. Requires k | sites.
LatticeRunResult lattice_rescaled_run(const LatticeRunConfig& cfg, long k,
                                      uint64_t seed);

// JSON tables for the linear flow: spectrum report fields
// {zero_multiplicity, reduced_eigenvalues, gap, below_critical} and a
// K_t / K_infinity table over requested times.
json spectrum_json(int n, double rho);
json kflow_json(int n, double rho, const std::string& partition,
                const std::string& k0_arg, std::span<const double> times);

// Two stacked profiles (type 1 block, then "---", then type 2 block).
std::pair<Profile, Profile> load_field_profiles(std::istream& in);

}  // namespace sbm
