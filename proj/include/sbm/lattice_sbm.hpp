#pragma once

#include <span>
#include <vector>

#include "sbm/coloring.hpp"
#include "sbm/estimate.hpp"
#include "sbm/rng.hpp"

namespace sbm {

// Two coupled nonnegative fields on the periodic 1d lattice.
struct LatticeField {
  double time = 0;
  std::vector<double> u1, u2;
  long clamp_count = 0;  // how many negative excursions were truncated

  long sites() const { return static_cast<long>(u1.size()); }
};

LatticeField make_flat_field(long sites, double v1, double v2);

// Complementary block initial data: type 1 carries v1 on [0, sites/2),
// type 2 carries v2 on [sites/2, sites).
LatticeField make_half_fields(long sites, double v1, double v2);

struct LatticeSimConfig {
  double gamma = 1;  // interaction rate, >= 0
  double rho = -1;   // noise correlation in [-1, 1]
  double dt = 1e-3;
};

// Explicit step: u += (dt/2) Lap u + sqrt(gamma u1 u2 dt) z, with
// z2 = rho z1 + sqrt(1-rho^2) z_perp; at rho = -1, z2 = -z1 exactly so the
// per-site noises cancel bitwise in the sum. Negative results clamp to 0
// and increment clamp_count. One normal per site at |rho| = 1, two
// otherwise.
void step_euler(LatticeField& field, const LatticeSimConfig& cfg,
                RngStream& rng);

// Stability ceiling dt <= 0.1 / (1 + gamma sup(u0)^2) enforced by simulate.
double stability_dt_bound(const LatticeField& field, double gamma);

// Run to max(sample_times), returning a snapshot at each sample time.
// Sample times must sit on the dt grid.
std::vector<LatticeField> simulate(LatticeField field,
                                   const LatticeSimConfig& cfg,
                                   std::span<const double> sample_times,
                                   RngStream& rng);

// Monte Carlo estimate of E prod_i u^{(c_i)}_t(x_i) over fresh forward
// runs; replica r draws from derive_stream(seed, r).
MomentEstimate moment_estimate(const LatticeField& u0,
                               const std::vector<long>& sites,
                               const Coloring& colors, double t,
                               const LatticeSimConfig& cfg, long replicas,
                               uint64_t seed, int threads);

// Sites where both types exceed the threshold.
std::vector<long> interface_set(const LatticeField& field, double threshold);

// Diffusive rescaling by k: site x of the output reads site k*x of the
// input and the clock is divided by k^2. Requires k >= 1 and k | sites.
std::vector<LatticeField> rescale_diffusive(
    const std::vector<LatticeField>& snapshots, long k);

}  // namespace sbm
