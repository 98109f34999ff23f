// Acceptance harness: one numbered check per command-line argument (all of
// them when none are given), one PASS/FAIL line each, exit code = number of
// failures. Seeds and tolerances are pinned so every run is reproducible.
#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "sbm/color_flow.hpp"
#include "sbm/coloring.hpp"
#include "sbm/dual_process.hpp"
#include "sbm/harness.hpp"
#include "sbm/heat_flow.hpp"
#include "sbm/interface_dynamics.hpp"
#include "sbm/lattice_sbm.hpp"
#include "sbm/rng.hpp"

using namespace sbm;

namespace {

struct Failures {
  int count = 0;
  void expect(bool ok, const std::string& what) {
    if (!ok) {
      ++count;
      std::printf("       violation: %s\n", what.c_str());
    }
  }
};

const std::vector<double> kRhoGrid{-1.0, -0.9, -0.8, -0.6};
const std::vector<int> kNGrid{2, 3, 4};

SetPartition random_partition(int n, RngStream& rng) {
  // restricted growth string; every partition has positive probability
  std::vector<int> block_of(n);
  int blocks = 1;
  block_of[0] = 0;
  for (int i = 1; i < n; ++i) {
    block_of[i] = static_cast<int>(rng.below(static_cast<uint32_t>(blocks + 1)));
    blocks = std::max(blocks, block_of[i] + 1);
  }
  std::vector<std::vector<int>> out(blocks);
  for (int i = 0; i < n; ++i) out[block_of[i]].push_back(i + 1);
  return SetPartition(n, std::move(out));
}

ColorMeasure random_measure(int n, RngStream& rng) {
  std::vector<double> vals(std::size_t{1} << n);
  for (auto& v : vals) v = rng.uniform();
  return ColorMeasure::from_values(n, std::move(vals));
}

double measure_dist(const ColorMeasure& a, const ColorMeasure& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    d = std::max(d, std::abs(a[static_cast<uint32_t>(i)] -
                             b[static_cast<uint32_t>(i)]));
  return d;
}

// --- 1: eigenstructure of the one-block flow over the parameter grid ------

bool criterion_spectral_suite() {
  Failures f;
  for (int n : kNGrid) {
    for (double rho : kRhoGrid) {
      if (!below_critical(n, rho)) continue;
      SpectrumReport rep = spectral_check(n, rho);
      f.expect(rep.zero_multiplicity >= 2,
               "zero multiplicity < 2 at n=" + std::to_string(n) +
                   " rho=" + std::to_string(rho));
      f.expect(rep.all_nonzero_negative,
               "nonzero eigenvalue with Re >= 0 at n=" + std::to_string(n) +
                   " rho=" + std::to_string(rho));
      f.expect(rep.tridiagonal_formula_dev <= 1e-9,
               "tridiagonal eigenvalue formula deviates at n=" +
                   std::to_string(n));

      // independent route: eigenvalues of D B from a general (non-symmetric)
      // solver must match the similarity-computed set within 1e-9
      const int r = n - 1;
      Eigen::MatrixXd db = Eigen::MatrixXd::Zero(r, r);
      for (int k = 1; k <= r; ++k) {
        double dk = double(k) * (n - k);
        db(k - 1, k - 1) = rho * dk;
        if (k > 1) db(k - 1, k - 2) = 0.5 * dk;
        if (k < r) db(k - 1, k) = 0.5 * dk;
      }
      Eigen::EigenSolver<Eigen::MatrixXd> es(db, false);
      std::vector<double> direct;
      for (Eigen::Index i = 0; i < r; ++i) {
        f.expect(std::abs(es.eigenvalues()(i).imag()) < 1e-9,
                 "reduced spectrum not real");
        direct.push_back(es.eigenvalues()(i).real());
      }
      std::sort(direct.begin(), direct.end());
      for (int i = 0; i < r; ++i) {
        f.expect(std::abs(direct[i] - rep.reduced_eigenvalues[i]) <= 1e-9,
                 "reduced spectra disagree between solver routes at n=" +
                     std::to_string(n) + " rho=" + std::to_string(rho));
      }
      // reduced eigenvalues appear in the full spectrum
      for (double lam : rep.reduced_eigenvalues) {
        double best = 1e300;
        for (const auto& z : rep.full_eigenvalues)
          best = std::min(best, std::abs(z - std::complex<double>(lam, 0.0)));
        f.expect(best <= 1e-9, "reduced eigenvalue missing from full spectrum");
      }
    }
    // sharpness: just above the critical curve a nonnegative eigenvalue shows
    SpectrumReport above = spectral_check(n, -std::cos(std::numbers::pi / n) + 0.05);
    f.expect(!above.below_critical, "criticality flag wrong above the curve");
    f.expect(!above.all_nonzero_negative,
             "no nonnegative eigenvalue reported above the curve at n=" +
                 std::to_string(n));
  }
  return f.count == 0;
}

// --- 2: long-time limit of the measure flow -------------------------------

bool criterion_flow_convergence() {
  Failures f;
  RngStream rng(920001, 0);
  const double t_end = 30.0;
  for (int n : kNGrid) {
    for (double rho : kRhoGrid) {
      if (!below_critical(n, rho)) continue;
      BoundaryEigenbasis eb = boundary_eigenvectors(n, rho);
      double worst = 0;
      for (int trial = 0; trial < 20; ++trial) {
        // the full-mixing partition is pinned as trial 0; the slow cells
        // must not escape by sampling luck
        SetPartition pi = trial == 0 ? SetPartition::one_block(n)
                                     : random_partition(n, rng);
        ColorMeasure k0 = random_measure(n, rng);

        double dev = measure_dist(evolve_K(k0, pi, rho, t_end),
                                  k_infinity(k0, pi, rho));
        worst = std::max(worst, dev);

        f.expect(measure_dist(k_infinity(eb.v1, pi, rho), eb.v1) <= 1e-10,
                 "first boundary vector moved under the long-time map");
        f.expect(measure_dist(k_infinity(eb.v2, pi, rho), eb.v2) <= 1e-10,
                 "second boundary vector moved under the long-time map");

        // envelope bound: measures below a stationary envelope stay below
        const double a1 = 0.5 + rng.uniform(), a2 = 0.5 + rng.uniform();
        std::vector<double> vals(std::size_t{1} << n);
        for (uint32_t m = 0; m < vals.size(); ++m)
          vals[m] = rng.uniform() * (a1 * eb.v1[m] + a2 * eb.v2[m]);
        ColorMeasure under = ColorMeasure::from_values(n, std::move(vals));
        for (double s : {1.0, 5.0, 30.0}) {
          ColorMeasure ks = evolve_K(under, pi, rho, s);
          for (uint32_t m = 0; m < ks.size(); ++m) {
            f.expect(ks[m] <= a1 * eb.v1[m] + a2 * eb.v2[m] + 1e-12,
                     "envelope bound violated");
          }
        }
      }
      bool cell_ok = worst <= 1e-6;
      if (!cell_ok) {
        SpectrumReport rep = spectral_check(n, rho);
        std::printf(
            "       slow cell n=%d rho=%.2f: |K_30 - K_inf| = %.3e "
            "(tolerance 1e-6, spectral gap %.4f, expected residual ~e^{-30 "
            "gap} = %.3e)\n",
            n, rho, worst, rep.gap, std::exp(-30.0 * rep.gap));
      }
      f.expect(cell_ok, "finite-time flow off its limit at n=" +
                            std::to_string(n) + " rho=" + std::to_string(rho));
    }
  }
  return f.count == 0;
}

// --- 3: measure flow vs coloring-process Monte Carlo ----------------------

bool criterion_rewrite_identity() {
  Failures f;
  const long mc_n = 100000;
  int comparisons = 0;
  double worst_z = 0;
  for (int n : {2, 3}) {
    const Coloring c0 = n == 2 ? Coloring::parse("11") : Coloring::parse("121");
    const std::vector<std::array<long, 3>> starts(
        static_cast<std::size_t>(n), std::array<long, 3>{0, 0, 0});
    for (double rho : {-1.0, -0.8}) {
      for (double gamma : {1.0, 4.0}) {
        for (int path_id = 0; path_id < 20; ++path_id) {
          RngStream prng(derive_seed(930001, "paths"),
                         static_cast<uint64_t>(1000 * n + path_id));
          WalkerPaths paths =
              simulate_lattice_walkers(n, 1, starts, 1.0, prng);
          ColorMeasure target =
              evolve_M_gamma(paths, ColorMeasure::delta(c0), rho, gamma)
                  .final_measure();

          RngStream mc(derive_seed(930005, "coloring"),
                       static_cast<uint64_t>(path_id + 100 * (n == 3) +
                                             200 * (rho == -1.0) +
                                             400 * (gamma == 4.0)));
          const auto dim = std::size_t{1} << n;
          std::vector<double> sum(dim, 0.0), sumsq(dim, 0.0);
          std::vector<long> hits(dim, 0);
          double wcap = 0;
          for (long i = 0; i < mc_n; ++i) {
            auto states = simulate_colored_dual(paths, c0, gamma, mc);
            double w = interaction_weight(states.back(), rho, gamma);
            uint32_t b = states.back().coloring.index();
            sum[b] += w;
            sumsq[b] += w * w;
            ++hits[b];
            wcap = std::max(wcap, w);
          }
          for (uint32_t b = 0; b < dim; ++b) {
            double mean = sum[b] / mc_n;
            double var = std::max(sumsq[b] / mc_n - mean * mean, 0.0);
            double se = std::sqrt(var / mc_n);
            ++comparisons;
            // The weight e^{gamma(L_same + rho L_diff)} is heavy-tailed: at
            // gamma = 4 a component's mass can ride on jackpot trajectories
            // rarer than 1/N, which depresses the empirical mean and the
            // empirical SE together (independent seeds then agree with each
            // other below the target, and the estimate climbs back up as N
            // grows).  The estimator only resolves a component down to a few
            // maximal observed weights per N draws, so grant that resolution
            // floor on top of the CLT band.
            double allowance = 3.0 * se + 10.0 * wcap / mc_n;
            if (hits[b] >= 100) {
              double z = std::abs(mean - target[b]) / se;
              worst_z = std::max(worst_z, z);
            }
            f.expect(std::abs(mean - target[b]) <= allowance + 1e-12,
                     "component off by " + std::to_string(mean - target[b]) +
                         " against allowance " + std::to_string(allowance) +
                         " (n=" + std::to_string(n) +
                         " rho=" + std::to_string(rho) +
                         " gamma=" + std::to_string(gamma) +
                         " path=" + std::to_string(path_id) +
                         " coloring index " + std::to_string(b) + ", " +
                         std::to_string(hits[b]) + " hits, max weight " +
                         std::to_string(wcap) + ")");
          }
        }
      }
    }
  }
  std::printf(
      "       %d comparisons on fixed paths and a fixed seed, worst CLT "
      "|z| = %.2f; at this multiplicity an occasional seed-dependent "
      "outlier past 3 SE is expected\n",
      comparisons, worst_z);
  return f.count == 0;
}

// --- 4: forward lattice moments vs dual estimates --------------------------

bool criterion_lattice_duality() {
  Failures f;
  // clamp activity is the visibility mechanism for the scheme's boundary
  // bias; measure it per gamma on a few forward paths
  for (double gamma : {4.0, 8.0}) {
    LatticeField probe = make_flat_field(256, 1.0, 1.0);
    LatticeSimConfig sim{gamma, -1.0, 1e-3};
    long clamps = 0;
    const long probe_reps = 20;
    for (long r = 0; r < probe_reps; ++r) {
      RngStream rng(941001, static_cast<uint64_t>(r));
      std::vector<double> tend{1.0};
      clamps += simulate(probe, sim, tend, rng)[0].clamp_count;
    }
    std::printf("       gamma=%g flat: %.2e clamp events per site-step\n",
                gamma,
                double(clamps) / (double(probe_reps) * 1000.0 * 256.0));
  }
  for (double gamma : {4.0, 8.0}) {
    for (const std::string& init : {std::string("flat"), std::string("heaviside")}) {
      DualityLatticeConfig cfg;
      cfg.colors = "12";
      cfg.torus = 256;
      // flat: adjacent sites give the interaction weight real work.
      // heaviside: sites a quarter torus from both field discontinuities,
      // outside the boundary layer the clamped scheme distorts.
      cfg.sites = init == "flat" ? std::vector<long>{127, 129}
                                 : std::vector<long>{64, 192};
      cfg.rho = -1.0;
      cfg.gamma = gamma;
      cfg.t = 1.0;
      cfg.dt = 1e-3;
      cfg.init = init;
      cfg.replicas = 20000;
      ExperimentReport rep = duality_lattice_experiment(cfg, 940001, 1);
      for (const auto& row : rep.rows) {
        std::printf(
            "       gamma=%g %-9s forward %.5f (se %.5f)  dual %.5f (se "
            "%.5f)  z=%.2f\n",
            gamma, init.c_str(), row.lhs, row.lhs_se, row.rhs, row.rhs_se,
            row.z);
        f.expect(row.pass, "forward and dual moments disagree (gamma=" +
                               std::to_string(gamma) + ", " + init + ")");
      }
    }
  }
  return f.count == 0;
}

// --- 5: finite-rate dual converges to the instantaneous-flow dual ----------

bool criterion_gamma_sweep() {
  Failures f;
  const std::vector<double> gammas{10.0, 100.0, 1000.0, 10000.0};
  for (int n : {2, 3}) {
    const std::vector<double> starts =
        n == 2 ? std::vector<double>{0.0, 0.3} : std::vector<double>{0.0, 0.25, 0.6};
    int monotone = 0, collected = 0;
    double worst_final = 0;
    uint64_t stream = 0;
    while (collected < 200 && stream < 2000) {
      RngStream rng(950001 + n, stream++);
      WalkerPaths paths = simulate_brownian_walkers(n, starts, 1.0, 1e-3, rng);
      if (paths.events().empty() || paths.events().front().time > 0.9) continue;
      ++collected;
      ColorMeasure m0 = random_measure(n, rng);
      ColorMeasure lim =
          evolve_M_infinity(paths, m0, -0.8).final_measure();
      std::vector<double> dist;
      for (double g : gammas)
        dist.push_back(
            measure_dist(evolve_M_gamma(paths, m0, -0.8, g).final_measure(), lim));
      // slack sits above the matrix-exponential roundoff floor (~1e-12 at
      // the largest rate) and far below any genuine distance
      bool mono = dist[1] <= dist[0] + 1e-11 && dist[2] <= dist[1] + 1e-11 &&
                  dist[3] <= dist[2] + 1e-11;
      monotone += mono;
      if (n == 2) worst_final = std::max(worst_final, dist[3]);
    }
    f.expect(collected == 200, "could not collect 200 colliding paths");
    std::string suffix =
        n == 2 ? ", worst distance at the largest rate " +
                     std::to_string(worst_final)
               : std::string();
    std::printf("       n=%d: monotone decrease on %d/200 paths%s\n", n,
                monotone, suffix.c_str());
    f.expect(monotone >= 190, "gamma-monotonicity below 95% at n=" +
                                  std::to_string(n));
    if (n == 2) {
      f.expect(worst_final < 1e-3,
               "finite-rate dual not within 1e-3 of its limit at the "
               "largest rate");
    }
  }
  return f.count == 0;
}

// --- 6: second-moment identity at the wavefront ----------------------------

bool criterion_wavefront_second_moment() {
  Failures f;
  const double i0 = 0.0, x = -0.5, y = 0.7, t = 1.0;
  const double analytic =
      gauss_cdf((y - i0) / std::sqrt(t)) - gauss_cdf((x - i0) / std::sqrt(t));

  TypedProfile u0(Profile::constant(1.0), {i0}, 1);
  SecondMomentReport rep =
      second_moment_check(u0, t, x, y, 1e-3, 10000, 960001, 1);

  std::printf(
      "       analytic %.6f  quadrature %.6f  interface MC %.5f (se %.5f)  "
      "walker MC %.5f (se %.5f)  z=%.2f\n",
      analytic, rep.km_value, rep.interface_side.mean, rep.interface_side.se,
      rep.dual_side.mean, rep.dual_side.se, rep.z);

  f.expect(std::abs(rep.km_value - analytic) <= 1e-3,
           "quadrature off the closed form by " +
               std::to_string(std::abs(rep.km_value - analytic)));
  f.expect(std::abs(rep.interface_side.mean - analytic) <=
               3.0 * rep.interface_side.se,
           "interface-side Monte Carlo off the closed form");
  f.expect(std::abs(rep.dual_side.mean - analytic) <= 3.0 * rep.dual_side.se,
           "walker-side Monte Carlo off the closed form");
  f.expect(std::abs(rep.z) <= 3.0, "the two Monte Carlo routes disagree");
  return f.count == 0;
}

// --- 7: single-interface law ------------------------------------------------

bool criterion_interface_law() {
  Failures f;
  struct Case {
    const char* name;
    Profile w0;
  };
  const std::vector<Case> cases{
      {"flat", Profile::constant(1.0)},
      {"step", Profile({0.0}, {1.0, 2.0})},
      {"double step", Profile({-1.0, 1.0}, {1.0, 2.0, 3.0})},
  };
  uint64_t seed = 970001;
  for (const auto& c : cases) {
    InterfaceSimConfig cfg;
    cfg.w0 = c.w0;
    cfg.interfaces = {0.0};
    cfg.leftmost_type = 1;
    cfg.t = 1.0;
    cfg.dt = 1e-3;
    cfg.replicas = 5000;
    ExperimentReport rep = interface_sim_experiment(cfg, seed++, 1);
    for (const auto& row : rep.rows) {
      std::printf("       %-12s %-40s lhs %.5f rhs %.5f -> %s\n", c.name,
                  row.label.c_str(), row.lhs, row.rhs,
                  row.pass ? "ok" : "VIOLATION");
      f.expect(row.pass, std::string(c.name) + ": " + row.label);
    }
  }
  return f.count == 0;
}

// --- 8: parity construction vs event-driven annihilation -------------------

bool criterion_coalescing_parity() {
  Failures f;
  const long reps = 5000;
  for (int m : {4, 5}) {
    std::vector<double> starts;
    for (int i = 0; i < m; ++i) starts.push_back(double(i));
    for (double t : {0.5, 2.0}) {
      std::vector<long> parity_counts(m + 1, 0), direct_counts(m + 1, 0);
      long parity_viol = 0, pairing_viol = 0;
      for (long r = 0; r < reps; ++r) {
        RngStream rng_p(980001, 2 * static_cast<uint64_t>(r));
        CoalescingTrajectory traj = simulate_coalescing_system(
            starts, Profile::constant(1.0), t, 1e-3, rng_p);
        AnnihilatingTrajectory ann = annihilate_by_parity(traj);
        int s = ann.survivors_at(t);
        ++parity_counts[s];
        if ((m - s) % 2 != 0) ++parity_viol;

        // deaths must pair up exactly with odd-odd merges (two per merge)
        long odd_odd = 0;
        for (const auto& mg : traj.merges)
          odd_odd += (mg.mult_left % 2 == 1 && mg.mult_right % 2 == 1);
        long dead = 0;
        for (double dtime : ann.death_time)
          dead += std::isfinite(dtime) ? 1 : 0;
        if (dead != 2 * odd_odd) ++pairing_viol;

        RngStream rng_d(980001, 2 * static_cast<uint64_t>(r) + 1);
        int sd = simulate_annihilating_direct(starts, Profile::constant(1.0),
                                              t, 1e-3, rng_d);
        ++direct_counts[sd];
      }
      Chi2Result chi = chi2_two_sample(parity_counts, direct_counts);
      std::printf(
          "       %d interfaces, t=%.1f: chi2 %.3f (dof %d, p %.4f), parity "
          "violations %ld, unpaired deaths %ld\n",
          m, t, chi.statistic, chi.dof, chi.p_value, parity_viol,
          pairing_viol);
      f.expect(chi.p_value >= 0.01,
               "survivor-count distributions differ (chi-square below 1%)");
      f.expect(parity_viol == 0, "interface-count parity violated");
      f.expect(pairing_viol == 0, "annihilation not pairwise");
    }
  }
  return f.count == 0;
}

// --- 9: exponential moments of the total collision time in d=3 -------------

bool criterion_exponential_local_time() {
  Failures f;
  CollisionMomentConfig cfg;
  cfg.rho = -0.5;
  cfg.gamma = 1.0;
  cfg.replicas = 100000;
  cfg.horizon = 500;
  cfg.batches = 50;
  cfg.divergence_rho = 0.9;
  cfg.divergence_gamma = 3.0;
  cfg.divergence_horizons = {25, 50, 100, 200};
  cfg.divergence_replicas = 20000;
  cfg.divergence_bound = 50.0;
  ExperimentReport rep = collision_moment_experiment(cfg, 990001, 1);

  double p = rep.extra["p_hat"].get<double>();
  double pse = rep.extra["p_hat_se"].get<double>();
  std::printf(
      "       return probability %.5f (99.7%% CI +- %.5f, finite-horizon "
      "estimate), batch z %.2f\n",
      p, 3 * pse, rep.extra["batch_z"].get<double>());
  for (const auto& row : rep.rows) {
    std::printf("       %-44s lhs %.4f rhs %.4f z %.2f -> %s\n",
                row.label.c_str(), row.lhs, row.rhs, row.z,
                row.pass ? "ok" : "VIOLATION");
    f.expect(row.pass, row.label);
  }
  auto ests = rep.extra["divergence_estimates"].get<std::vector<double>>();
  std::printf("       divergent-regime estimates over nested horizons:");
  for (double e : ests) std::printf(" %.3g", e);
  std::printf("\n");
  return f.count == 0;
}

// --- 10: pathwise cancellation of antithetic noise --------------------------

bool criterion_antithetic_heat() {
  Failures f;
  const long sites = 128;
  const double dt = 1e-5;
  const long steps = 10000;
  LatticeField field = make_flat_field(sites, 0.0, 0.0);
  for (long k = 0; k < sites; ++k) {
    field.u1[k] = 0.9 + 0.25 * std::cos(2 * std::numbers::pi * k / sites);
    field.u2[k] = 0.7 + 0.15 * std::sin(2 * std::numbers::pi * k / sites);
  }
  std::vector<double> total(sites);
  for (long k = 0; k < sites; ++k) total[k] = field.u1[k] + field.u2[k];

  LatticeSimConfig cfg{0.1, -1.0, dt};
  RngStream rng(1000001, 0);
  std::vector<double> times{dt * steps};
  auto snaps = simulate(field, cfg, times, rng);

  // the same explicit scheme applied to the sum field, no noise
  std::vector<double> next(sites);
  for (long s = 0; s < steps; ++s) {
    for (long k = 0; k < sites; ++k) {
      next[k] = total[k] + 0.5 * dt *
                               (total[(k + 1) % sites] +
                                total[(k + sites - 1) % sites] - 2 * total[k]);
    }
    total.swap(next);
  }
  double worst = 0;
  for (long k = 0; k < sites; ++k)
    worst = std::max(worst,
                     std::abs(snaps[0].u1[k] + snaps[0].u2[k] - total[k]));
  std::printf("       max deviation of the summed field %.3e, clamps %ld\n",
              worst, snaps[0].clamp_count);
  f.expect(worst <= 1e-10, "summed field left the deterministic evolution");
  f.expect(snaps[0].clamp_count == 0, "clamping occurred");
  return f.count == 0;
}

struct Criterion {
  int number;
  const char* name;
  double budget_s;
  bool (*run)();
};

const Criterion kCriteria[] = {
    {1, "spectral suite", 5, criterion_spectral_suite},
    {2, "flow convergence to its long-time limit", 30, criterion_flow_convergence},
    {3, "measure flow vs coloring Monte Carlo", 300, criterion_rewrite_identity},
    {4, "forward vs dual lattice moments", 600, criterion_lattice_duality},
    {5, "finite-rate dual sweep to the limit", 120, criterion_gamma_sweep},
    {6, "wavefront second-moment identity", 300, criterion_wavefront_second_moment},
    {7, "single-interface law", 180, criterion_interface_law},
    {8, "parity vs event-driven annihilation", 300, criterion_coalescing_parity},
    {9, "exponential moments of d=3 collision time", 600, criterion_exponential_local_time},
    {10, "antithetic pathwise heat identity", 60, criterion_antithetic_heat},
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));
  if (wanted.empty())
    for (const auto& c : kCriteria) wanted.push_back(c.number);

  int failures = 0;
  for (int num : wanted) {
    const Criterion* cr = nullptr;
    for (const auto& c : kCriteria)
      if (c.number == num) cr = &c;
    if (cr == nullptr) {
      std::printf("[FAIL] %2d unknown criterion\n", num);
      ++failures;
      continue;
    }
    auto t0 = std::chrono::steady_clock::now();
    bool ok = cr->run();
    double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    if (elapsed >= cr->budget_s) {
      std::printf("       runtime %.1fs exceeded the %.0fs budget\n", elapsed,
                  cr->budget_s);
      ok = false;
    }
    std::printf("[%s] %2d %s (%.1fs)\n", ok ? "PASS" : "FAIL", cr->number,
                cr->name, elapsed);
    failures += ok ? 0 : 1;
  }
  return failures;
}
