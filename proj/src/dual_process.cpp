#include "sbm/dual_process.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "sbm/color_flow.hpp"
#include "sbm/gauss.hpp"
#include "sbm/parallel.hpp"

namespace sbm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SetPartition pair_partition(int n, int i, int j) {
  std::vector<std::vector<int>> blocks;
  blocks.push_back({i, j});
  for (int k = 1; k <= n; ++k) {
    if (k != i && k != j) blocks.push_back({k});
  }
  return SetPartition(n, std::move(blocks));
}

std::vector<std::pair<int, int>> coincident_pairs(const SetPartition& pi) {
  std::vector<std::pair<int, int>> pairs;
  for (const auto& block : pi.blocks()) {
    for (std::size_t a = 0; a < block.size(); ++a) {
      for (std::size_t b = a + 1; b < block.size(); ++b) {
        pairs.emplace_back(block[a], block[b]);
      }
    }
  }
  return pairs;
}

}  // namespace

int WalkerPaths::pair_index(int i, int j) const {
  // 0-based i < j
  return i * n_ - i * (i + 1) / 2 + (j - i - 1);
}

SetPartition WalkerPaths::initial_partition() const {
  if (!lattice_) {
    return SetPartition::singletons(n_);
  }
  std::vector<std::array<long, 3>> w(n_);
  for (int k = 0; k < n_; ++k) {
    w[k] = starts_[k];
    if (torus_ > 0) {
      for (int c = 0; c < dim_; ++c) {
        w[k][c] = ((w[k][c] % torus_) + torus_) % torus_;
      }
    }
  }
  return partition_from_positions(w);
}

std::array<long, 3> WalkerPaths::lattice_position(int walker, double t) const {
  if (!lattice_) throw std::invalid_argument("not lattice paths");
  if (walker < 1 || walker > n_) throw std::invalid_argument("bad walker");
  const auto& jt = jump_times_[walker - 1];
  const auto it = std::upper_bound(jt.begin(), jt.end(), t);
  if (it == jt.begin()) return starts_[walker - 1];
  return jump_pos_[walker - 1][static_cast<std::size_t>(it - jt.begin()) - 1];
}

double WalkerPaths::brownian_position(int walker, double t) const {
  if (lattice_) throw std::invalid_argument("not Brownian paths");
  if (walker < 1 || walker > n_) throw std::invalid_argument("bad walker");
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  const auto idx = static_cast<std::size_t>(it - times_.begin());
  return pos_[walker - 1][idx == 0 ? 0 : idx - 1];
}

double WalkerPaths::pair_local_time(int i, int j, double t) const {
  if (i == j || i < 1 || j < 1 || i > n_ || j > n_) {
    throw std::invalid_argument("bad pair");
  }
  if (i > j) std::swap(i, j);
  const int p = pair_index(i - 1, j - 1);
  if (lattice_) {
    double acc = 0;
    for (const auto& [a, b] : intervals_[p]) {
      if (a >= t) break;
      acc += std::min(b, t) - a;
    }
    return acc;
  }
  if (!tracks_local_time_) {
    throw std::invalid_argument("paths were built without local-time tracking");
  }
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  auto idx = static_cast<std::size_t>(it - times_.begin());
  if (idx == 0) return 0;
  --idx;
  const auto& cum = cum_local_[p];
  if (idx + 1 >= times_.size()) return cum.back();
  const double h = times_[idx + 1] - times_[idx];
  const double frac = h > 0 ? (t - times_[idx]) / h : 0.0;
  return cum[idx] + frac * (cum[idx + 1] - cum[idx]);
}

std::span<const std::pair<double, double>> WalkerPaths::pair_intervals(
    int i, int j) const {
  if (!lattice_) throw std::invalid_argument("intervals are lattice-only");
  if (i == j || i < 1 || j < 1 || i > n_ || j > n_) {
    throw std::invalid_argument("bad pair");
  }
  if (i > j) std::swap(i, j);
  return intervals_[pair_index(i - 1, j - 1)];
}

WalkerPaths simulate_lattice_walkers(int n, int d,
                                     const std::vector<std::array<long, 3>>& starts,
                                     double horizon, RngStream& rng,
                                     long torus) {
  if (n < 1 || n > kMaxParticles) throw std::invalid_argument("bad walker count");
  if (d < 1 || d > 3) throw std::invalid_argument("dimension must be 1, 2 or 3");
  if (static_cast<int>(starts.size()) != n) {
    throw std::invalid_argument("need one start per walker");
  }
  if (!(horizon >= 0) || !std::isfinite(horizon)) {
    throw std::invalid_argument("bad horizon");
  }
  if (torus < 0) throw std::invalid_argument("bad torus size");
  for (const auto& s : starts) {
    for (int c = d; c < 3; ++c) {
      if (s[c] != 0) {
        throw std::invalid_argument("unused coordinates must be zero");
      }
    }
  }

  WalkerPaths p;
  p.lattice_ = true;
  p.n_ = n;
  p.dim_ = d;
  p.torus_ = torus;
  p.horizon_ = horizon;
  p.starts_ = starts;
  p.jump_times_.resize(n);
  p.jump_pos_.resize(n);
  const int npairs = n * (n - 1) / 2;
  p.intervals_.resize(npairs);

  const auto wrap = [&](std::array<long, 3> x) {
    if (torus > 0) {
      for (int c = 0; c < d; ++c) x[c] = ((x[c] % torus) + torus) % torus;
    }
    return x;
  };

  std::vector<std::array<long, 3>> cur = starts;
  std::vector<std::array<long, 3>> wcur(n);
  for (int w = 0; w < n; ++w) wcur[w] = wrap(cur[w]);

  std::vector<char> coincident(npairs, 0);
  std::vector<double> open_since(npairs, 0);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const int idx = p.pair_index(i, j);
      coincident[idx] = (wcur[i] == wcur[j]);
      open_since[idx] = 0;
    }
  }

  double t = 0;
  for (;;) {
    t += rng.exponential(static_cast<double>(n));
    if (t >= horizon) break;
    const int w = static_cast<int>(rng.below(static_cast<uint32_t>(n)));
    const auto dir = rng.below(static_cast<uint32_t>(2 * d));
    cur[w][dir / 2] += (dir & 1) ? 1 : -1;
    wcur[w] = wrap(cur[w]);
    p.jump_times_[w].push_back(t);
    p.jump_pos_[w].push_back(cur[w]);

    bool changed = false;
    for (int o = 0; o < n; ++o) {
      if (o == w) continue;
      const int i = std::min(o, w), j = std::max(o, w);
      const int idx = p.pair_index(i, j);
      const bool now = (wcur[i] == wcur[j]);
      if (now != static_cast<bool>(coincident[idx])) {
        if (coincident[idx]) {
          p.intervals_[idx].emplace_back(open_since[idx], t);
        } else {
          open_since[idx] = t;
        }
        coincident[idx] = now;
        changed = true;
      }
    }
    if (changed) {
      p.events_.push_back({t, partition_from_positions(wcur), 0, 0});
    }
  }

  for (int idx = 0; idx < npairs; ++idx) {
    if (coincident[idx] && horizon > open_since[idx]) {
      p.intervals_[idx].emplace_back(open_since[idx], horizon);
    }
  }
  return p;
}

double bridge_local_time(double d0, double d1, double h, double var_rate) {
  if (!(h > 0) || !(var_rate > 0)) {
    throw std::invalid_argument("bad bridge step parameters");
  }
  const double s2h = var_rate * h;
  if (d0 * d1 > 0) {
    const double amin = std::min(std::abs(d0), std::abs(d1));
    if (amin * amin > 40.0 * s2h) return 0;  // below 4e-18 relative mass
  }
  // E[L] = sqrt(2 h var / pi) * int_0^{pi/2} exp(-m(th)^2 / (2 v(th))) dth
  // with m = d0 + (d1-d0) sin^2, v = var h sin^2 cos^2 (s = h sin^2 th).
  const auto integrand = [&](double theta) {
    const double s = std::sin(theta);
    const double c = std::cos(theta);
    const double m = d0 + (d1 - d0) * s * s;
    const double v = s2h * s * s * c * c;
    if (v <= 0) return m == 0 ? 1.0 : 0.0;
    const double e = m * m / (2.0 * v);
    return e > 700 ? 0.0 : std::exp(-e);
  };
  const double integral =
      gauss_panel(integrand, 0.0, std::numbers::pi / 2, 32);
  return std::sqrt(2.0 * s2h / std::numbers::pi) * integral;
}

WalkerPaths simulate_brownian_walkers(int n, const std::vector<double>& starts,
                                      double horizon, double dt, RngStream& rng,
                                      bool track_local_time) {
  if (n < 1 || n > kMaxParticles) throw std::invalid_argument("bad walker count");
  if (static_cast<int>(starts.size()) != n) {
    throw std::invalid_argument("need one start per walker");
  }
  if (!(horizon > 0) || !(dt > 0)) {
    throw std::invalid_argument("horizon and dt must be positive");
  }
  for (int i = 0; i < n; ++i) {
    if (!std::isfinite(starts[i])) throw std::invalid_argument("bad start");
    for (int j = i + 1; j < n; ++j) {
      if (starts[i] == starts[j]) {
        throw std::invalid_argument("continuum starts must be distinct");
      }
    }
  }

  WalkerPaths p;
  p.lattice_ = false;
  p.n_ = n;
  p.dim_ = 1;
  p.horizon_ = horizon;
  p.tracks_local_time_ = track_local_time;

  const auto steps =
      static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
  p.times_.resize(steps + 1);
  for (std::size_t k = 0; k < steps; ++k) p.times_[k] = static_cast<double>(k) * dt;
  p.times_[steps] = horizon;

  p.pos_.assign(n, std::vector<double>(steps + 1));
  for (int w = 0; w < n; ++w) p.pos_[w][0] = starts[w];
  const int npairs = n * (n - 1) / 2;
  if (track_local_time) {
    p.cum_local_.assign(npairs, std::vector<double>(steps + 1, 0.0));
  }

  int active_i = 0, active_j = 0;  // 1-based; 0 means no active pair yet
  struct Candidate {
    double frac;
    int i, j;  // 0-based
  };
  std::vector<Candidate> candidates;

  for (std::size_t k = 0; k < steps; ++k) {
    const double h = p.times_[k + 1] - p.times_[k];
    const double sh = std::sqrt(h);
    for (int w = 0; w < n; ++w) {
      p.pos_[w][k + 1] = p.pos_[w][k] + sh * rng.normal();
    }
    candidates.clear();
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const double d0 = p.pos_[i][k] - p.pos_[j][k];
        const double d1 = p.pos_[i][k + 1] - p.pos_[j][k + 1];
        if (track_local_time) {
          const int idx = p.pair_index(i, j);
          p.cum_local_[idx][k + 1] =
              p.cum_local_[idx][k] + bridge_local_time(d0, d1, h, 2.0);
        }
        bool crossed = false;
        if (d0 * d1 <= 0) {
          crossed = true;
        } else {
          const double prob =
              bridge_crossing_probability(std::abs(d0), std::abs(d1), h, 2.0);
          if (prob > 1e-14 && rng.uniform() < prob) crossed = true;
        }
        if (crossed) candidates.push_back({rng.uniform(), i, j});
      }
    }
    if (candidates.empty()) continue;
    std::sort(candidates.begin(), candidates.end(),
              [](const Candidate& a, const Candidate& b) {
                if (a.frac != b.frac) return a.frac < b.frac;
                if (a.i != b.i) return a.i < b.i;
                return a.j < b.j;
              });
    for (const auto& c : candidates) {
      if (c.i + 1 == active_i && c.j + 1 == active_j) continue;
      active_i = c.i + 1;
      active_j = c.j + 1;
      p.events_.push_back({p.times_[k] + c.frac * h,
                           pair_partition(n, active_i, active_j), active_i,
                           active_j});
    }
  }
  return p;
}

const ColorMeasure& DualTrajectory::measure_at(double t) const {
  // Lookup is exact: silently returning the state of an earlier time would
  // hide a mismatch between requested and recorded sample grids.
  const auto it = std::lower_bound(times.begin(), times.end(), t - 1e-9);
  if (it == times.end() || std::abs(*it - t) > 1e-9) {
    throw std::invalid_argument("time " + std::to_string(t) +
                                " was not recorded in the trajectory");
  }
  return measures[static_cast<std::size_t>(it - times.begin())];
}

DualTrajectory evolve_M_gamma(const WalkerPaths& paths, const ColorMeasure& M0,
                              double rho, double gamma,
                              std::span<const double> sample_times) {
  if (M0.n() != paths.n()) {
    throw std::invalid_argument("measure size must match walker count");
  }
  if (!(gamma > 0) || std::isinf(gamma)) {
    throw std::invalid_argument("interaction rate must be finite and positive");
  }
  std::vector<double> samples(sample_times.begin(), sample_times.end());
  std::sort(samples.begin(), samples.end());
  for (double s : samples) {
    if (!(s >= 0 && s <= paths.horizon())) {
      throw std::invalid_argument("sample time outside [0, horizon]");
    }
  }

  DualTrajectory out;
  out.gamma = gamma;
  const auto record = [&out](double t, ColorMeasure m) {
    out.times.push_back(t);
    out.measures.push_back(std::move(m));
  };

  ColorMeasure m = M0;
  double tau = 0;
  record(0.0, m);

  const auto& events = paths.events();
  std::size_t e = 0, s = 0;

  if (paths.is_lattice()) {
    SetPartition pi = paths.initial_partition();
    const auto advance = [&](double t) {
      return evolve_K(m, pi, rho, gamma * (t - tau));
    };
    while (e < events.size() || s < samples.size()) {
      const double te = e < events.size() ? events[e].time : kInf;
      const double ts = s < samples.size() ? samples[s] : kInf;
      if (ts <= te) {
        record(ts, advance(ts));
        ++s;
      } else {
        m = advance(te);
        record(te, m);
        tau = te;
        pi = events[e].partition;
        ++e;
      }
    }
    record(paths.horizon(), advance(paths.horizon()));
    return out;
  }

  // Brownian: the flow runs in the active pair's local time.
  int ai = 0, aj = 0;
  double l_start = 0;
  const auto advance = [&](double t) {
    if (ai == 0) return m;
    const double dl = paths.pair_local_time(ai, aj, t) - l_start;
    return evolve_K(m, pair_partition(paths.n(), ai, aj), rho, gamma * dl);
  };
  while (e < events.size() || s < samples.size()) {
    const double te = e < events.size() ? events[e].time : kInf;
    const double ts = s < samples.size() ? samples[s] : kInf;
    if (ts <= te) {
      record(ts, advance(ts));
      ++s;
    } else {
      m = advance(te);
      record(te, m);
      tau = te;
      ai = events[e].pair_i;
      aj = events[e].pair_j;
      l_start = paths.pair_local_time(ai, aj, te);
      ++e;
    }
  }
  record(paths.horizon(), advance(paths.horizon()));
  return out;
}

DualTrajectory evolve_M_infinity(const WalkerPaths& paths,
                                 const ColorMeasure& M0, double rho,
                                 std::span<const double> sample_times) {
  if (M0.n() != paths.n()) {
    throw std::invalid_argument("measure size must match walker count");
  }
  std::vector<double> samples(sample_times.begin(), sample_times.end());
  std::sort(samples.begin(), samples.end());
  for (double s : samples) {
    if (!(s >= 0 && s <= paths.horizon())) {
      throw std::invalid_argument("sample time outside [0, horizon]");
    }
  }

  DualTrajectory out;
  out.gamma = kInf;
  const auto record = [&out](double t, ColorMeasure m) {
    out.times.push_back(t);
    out.measures.push_back(std::move(m));
  };

  ColorMeasure m = paths.is_lattice()
                       ? k_infinity(M0, paths.initial_partition(), rho)
                       : M0;
  record(0.0, m);

  const auto& events = paths.events();
  std::size_t e = 0, s = 0;
  while (e < events.size() || s < samples.size()) {
    const double te = e < events.size() ? events[e].time : kInf;
    const double ts = s < samples.size() ? samples[s] : kInf;
    if (ts <= te) {
      record(ts, m);
      ++s;
    } else {
      m = k_infinity(m, events[e].partition, rho);
      record(te, m);
      ++e;
    }
  }
  record(paths.horizon(), m);
  return out;
}

std::vector<ColoredDualState> simulate_colored_dual(const WalkerPaths& paths,
                                                    const Coloring& c0,
                                                    double gamma,
                                                    RngStream& rng) {
  if (c0.n() != paths.n()) {
    throw std::invalid_argument("coloring size must match walker count");
  }
  if (!(gamma > 0) || std::isinf(gamma)) {
    throw std::invalid_argument("interaction rate must be finite and positive");
  }

  std::vector<ColoredDualState> traj;
  Coloring c = c0;
  double same = 0, diff = 0;
  traj.push_back({0.0, c, same, diff});

  const auto is_same = [&c](const std::pair<int, int>& p) {
    return c.at(p.first) == c.at(p.second);
  };

  if (paths.is_lattice()) {
    // Between events the coincident-pair set is constant; flips arrive at
    // total rate gamma * (# same-colored coincident pairs).
    SetPartition pi = paths.initial_partition();
    double t = 0;
    std::size_t e = 0;
    const auto& events = paths.events();
    while (t < paths.horizon()) {
      const double seg_end =
          e < events.size() ? events[e].time : paths.horizon();
      const auto pairs = coincident_pairs(pi);
      double cur = t;
      while (cur < seg_end) {
        std::vector<std::pair<int, int>> same_pairs;
        for (const auto& p : pairs) {
          if (is_same(p)) same_pairs.push_back(p);
        }
        const auto nsame = static_cast<double>(same_pairs.size());
        const auto ndiff = static_cast<double>(pairs.size()) - nsame;
        if (same_pairs.empty()) {
          diff += ndiff * (seg_end - cur);
          break;
        }
        const double wait = rng.exponential(gamma * nsame);
        if (cur + wait >= seg_end) {
          same += nsame * (seg_end - cur);
          diff += ndiff * (seg_end - cur);
          break;
        }
        same += nsame * wait;
        diff += ndiff * wait;
        cur += wait;
        const auto& p =
            same_pairs[rng.below(static_cast<uint32_t>(same_pairs.size()))];
        const int pos = rng.below(2) ? p.second : p.first;
        c = flip_at(c, pos);
        traj.push_back({cur, c, same, diff});
      }
      t = seg_end;
      if (e < events.size()) {
        pi = events[e].partition;
        ++e;
      }
    }
    traj.push_back({paths.horizon(), c, same, diff});
    return traj;
  }

  // Brownian: exposure accrues in pair local time on the step grid; a
  // same-colored pair flips within a step with prob 1 - exp(-gamma dL).
  const auto& times = paths.grid_times();
  for (std::size_t k = 0; k + 1 < times.size(); ++k) {
    for (int i = 1; i <= paths.n(); ++i) {
      for (int j = i + 1; j <= paths.n(); ++j) {
        const double dl = paths.pair_local_time(i, j, times[k + 1]) -
                          paths.pair_local_time(i, j, times[k]);
        if (dl <= 0) continue;
        if (c.at(i) == c.at(j)) {
          same += dl;
          if (rng.uniform() < -std::expm1(-gamma * dl)) {
            const int pos = rng.below(2) ? j : i;
            c = flip_at(c, pos);
            traj.push_back({times[k + 1], c, same, diff});
          }
        } else {
          diff += dl;
        }
      }
    }
  }
  traj.push_back({paths.horizon(), c, same, diff});
  return traj;
}

double interaction_weight(const ColoredDualState& end, double rho,
                          double gamma) {
  return std::exp(gamma * (end.same_local + rho * end.diff_local));
}

namespace {

template <typename PosEval>
double dual_payoff(const ColorMeasure& m, int n, const PosEval& u0_at) {
  double acc = 0;
  const auto dim = std::size_t{1} << n;
  for (uint32_t idx = 0; idx < dim; ++idx) {
    const double w = m[idx];
    if (w == 0) continue;
    double prod = w;
    for (int i = 1; i <= n; ++i) {
      const int color = 1 + ((idx >> (n - i)) & 1u);
      const double v = u0_at(i, color);
      if (!(v >= 0) || !std::isfinite(v)) {
        throw std::invalid_argument(
            "initial data must be finite and nonnegative");
      }
      prod *= v;
    }
    acc += prod;
  }
  return acc;
}

}  // namespace

MomentEstimate dual_moment_estimate_lattice(
    const std::function<double(long)>& u0_color1,
    const std::function<double(long)>& u0_color2,
    const std::vector<long>& start_sites, const Coloring& colors, long torus,
    double rho, double gamma, double t, long replicas, uint64_t seed,
    int threads) {
  const int n = colors.n();
  if (static_cast<int>(start_sites.size()) != n) {
    throw std::invalid_argument("need one start per particle");
  }
  if (replicas < 1) throw std::invalid_argument("need at least one replica");
  if (!(t > 0)) throw std::invalid_argument("horizon must be positive");

  std::vector<std::array<long, 3>> starts(n);
  for (int i = 0; i < n; ++i) starts[i] = {start_sites[i], 0, 0};
  const ColorMeasure m0 = ColorMeasure::delta(colors);

  std::vector<double> values(static_cast<std::size_t>(replicas));
  parallel_replicas(replicas, threads, [&](long r) {
    RngStream rng = derive_stream(seed, static_cast<uint64_t>(r));
    const WalkerPaths paths =
        simulate_lattice_walkers(n, 1, starts, t, rng, torus);
    const DualTrajectory traj =
        std::isinf(gamma) ? evolve_M_infinity(paths, m0, rho)
                          : evolve_M_gamma(paths, m0, rho, gamma);
    values[static_cast<std::size_t>(r)] = dual_payoff(
        traj.final_measure(), n, [&](int i, int color) {
          long site = paths.lattice_position(i, t)[0];
          if (torus > 0) site = ((site % torus) + torus) % torus;
          return color == 1 ? u0_color1(site) : u0_color2(site);
        });
  });
  return summarize_values(values);
}

MomentEstimate dual_moment_estimate_brownian(
    const std::function<double(double)>& u0_color1,
    const std::function<double(double)>& u0_color2,
    const std::vector<double>& starts, const Coloring& colors, double rho,
    double gamma, double t, double dt, long replicas, uint64_t seed,
    int threads) {
  const int n = colors.n();
  if (static_cast<int>(starts.size()) != n) {
    throw std::invalid_argument("need one start per particle");
  }
  if (replicas < 1) throw std::invalid_argument("need at least one replica");
  if (!(t > 0)) throw std::invalid_argument("horizon must be positive");

  const ColorMeasure m0 = ColorMeasure::delta(colors);
  const bool infinite = std::isinf(gamma);

  std::vector<double> values(static_cast<std::size_t>(replicas));
  parallel_replicas(replicas, threads, [&](long r) {
    RngStream rng = derive_stream(seed, static_cast<uint64_t>(r));
    const WalkerPaths paths =
        simulate_brownian_walkers(n, starts, t, dt, rng, !infinite);
    const DualTrajectory traj = infinite
                                    ? evolve_M_infinity(paths, m0, rho)
                                    : evolve_M_gamma(paths, m0, rho, gamma);
    values[static_cast<std::size_t>(r)] = dual_payoff(
        traj.final_measure(), n, [&](int i, int color) {
          const double x = paths.brownian_position(i, t);
          return color == 1 ? u0_color1(x) : u0_color2(x);
        });
  });
  return summarize_values(values);
}

}  // namespace sbm
