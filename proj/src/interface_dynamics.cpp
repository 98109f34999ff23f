#include "sbm/interface_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "sbm/dual_process.hpp"
#include "sbm/gauss.hpp"
#include "sbm/parallel.hpp"

namespace sbm {

TypedProfile::TypedProfile(Profile density, std::vector<double> interfaces,
                           int leftmost_type)
    : density_(std::move(density)),
      interfaces_(std::move(interfaces)),
      leftmost_type_(leftmost_type) {
  if (leftmost_type_ != 1 && leftmost_type_ != 2) {
    throw std::invalid_argument("leftmost type must be 1 or 2");
  }
  for (std::size_t i = 0; i + 1 < interfaces_.size(); ++i) {
    if (!(interfaces_[i] < interfaces_[i + 1])) {
      throw std::invalid_argument("interfaces must be strictly increasing");
    }
  }
  if (!density_.nonnegative()) {
    throw std::invalid_argument("density must be nonnegative");
  }
}

int TypedProfile::type_at(double x) const {
  auto it = std::lower_bound(interfaces_.begin(), interfaces_.end(), x);
  if (it != interfaces_.end() && *it == x) return 0;
  auto flips = static_cast<std::size_t>(it - interfaces_.begin());
  int other = 3 - leftmost_type_;
  return (flips % 2 == 0) ? leftmost_type_ : other;
}

double TypedProfile::color_value(double x, int color) const {
  if (color != 1 && color != 2) {
    throw std::invalid_argument("color must be 1 or 2");
  }
  return type_at(x) == color ? density_(x) : 0.0;
}

double step_single_interface(double position, double s, double dt,
                             const Profile& w0, RngStream& rng) {
  if (!(dt > 0)) throw std::invalid_argument("step size must be positive");
  double drift = 0;
  if (s > 0) {
    double w = semigroup_apply(w0, s, position);
    if (!(w > 0)) {
      throw std::runtime_error("density vanished at the interface position");
    }
    drift = -semigroup_derivative(w0, s, position) / w;
  }
  return position + drift * dt + std::sqrt(dt) * rng.normal();
}

std::vector<double> warmup_time_grid(double horizon, double dt, double eps) {
  if (!(horizon > 0) || !(dt > 0) || !(eps > 0)) {
    throw std::invalid_argument("horizon, dt and eps must be positive");
  }
  std::vector<double> grid{0.0};
  if (eps < dt) {
    for (double s = eps; s < dt && s < horizon; s *= 2) grid.push_back(s);
  }
  for (long k = 1; static_cast<double>(k) * dt < horizon * (1 - 1e-12); ++k) {
    grid.push_back(static_cast<double>(k) * dt);
  }
  grid.push_back(horizon);
  return grid;
}

double simulate_single_interface(const Profile& w0, double position0,
                                 double horizon, double dt, RngStream& rng) {
  auto grid = warmup_time_grid(horizon, dt);
  double pos = position0;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    pos = step_single_interface(pos, grid[k], grid[k + 1] - grid[k], w0, rng);
  }
  return pos;
}

double interface_cdf(const Profile& w0, double position0, double t, double x) {
  if (!(t > 0)) throw std::invalid_argument("time must be positive");
  double denom = semigroup_apply(w0, t, x);
  if (!(denom > 0)) {
    throw std::runtime_error("flowed density vanished at evaluation point");
  }
  double numer = restricted_semigroup(w0, position0, Side::right, t, x);
  return numer / denom;
}

namespace {

struct Cluster {
  double pos = 0;
  int mult = 0;
  int rep = 0;
  std::vector<int> members;
};

void merge_clusters(Cluster& left, Cluster& right, int step, double time,
                    std::vector<CoalescingTrajectory::Merge>& log) {
  CoalescingTrajectory::Merge m;
  m.step = step;
  m.time = time;
  m.rep_left = left.rep;
  m.rep_right = right.rep;
  m.mult_left = left.mult;
  m.mult_right = right.mult;
  bool left_odd = left.mult % 2 != 0;
  bool right_odd = right.mult % 2 != 0;
  if (left_odd != right_odd) {
    // The surviving odd path continues undisturbed by the dead mass.
    m.rep_after = left_odd ? left.rep : right.rep;
    left.pos = left_odd ? left.pos : right.pos;
  } else {
    m.rep_after = std::min(left.rep, right.rep);
    left.pos = (m.rep_after == left.rep) ? left.pos : right.pos;
  }
  left.rep = m.rep_after;
  left.mult += right.mult;
  left.members.insert(left.members.end(), right.members.begin(),
                      right.members.end());
  log.push_back(m);
}

}  // namespace

CoalescingTrajectory simulate_coalescing_system(
    const std::vector<double>& starts, const Profile& w0, double horizon,
    double dt, RngStream& rng) {
  if (starts.empty()) throw std::invalid_argument("need at least one start");
  for (std::size_t i = 0; i + 1 < starts.size(); ++i) {
    if (!(starts[i] < starts[i + 1])) {
      throw std::invalid_argument("starts must be strictly increasing");
    }
  }
  CoalescingTrajectory out;
  out.times = warmup_time_grid(horizon, dt);
  const auto steps = out.times.size() - 1;
  const int m = static_cast<int>(starts.size());
  out.label_pos.assign(m, std::vector<double>(out.times.size(), 0.0));

  std::vector<Cluster> clusters(m);
  for (int i = 0; i < m; ++i) {
    clusters[i] = Cluster{starts[i], 1, i, {i}};
    out.label_pos[i][0] = starts[i];
  }

  std::vector<double> moved;
  std::vector<char> crossed;
  for (std::size_t k = 0; k < steps; ++k) {
    const double s = out.times[k];
    const double h = out.times[k + 1] - out.times[k];
    const int count = static_cast<int>(clusters.size());

    moved.assign(count, 0.0);
    for (int c = 0; c < count; ++c) {
      double drift = 0;
      if (s > 0) {
        double w = semigroup_apply(w0, s, clusters[c].pos);
        if (!(w > 0)) {
          throw std::runtime_error(
              "density vanished at the interface position");
        }
        drift = -semigroup_derivative(w0, s, clusters[c].pos) / w;
      }
      moved[c] = clusters[c].pos + drift * h + std::sqrt(h) * rng.normal();
    }

    crossed.assign(count > 0 ? count - 1 : 0, 0);
    for (int c = 0; c + 1 < count; ++c) {
      double a = clusters[c + 1].pos - clusters[c].pos;
      double b = moved[c + 1] - moved[c];
      if (b <= 0) {
        crossed[c] = 1;
      } else {
        double p = bridge_crossing_probability(a, b, h, 2.0);
        if (p > 1e-14 && rng.uniform() < p) crossed[c] = 1;
      }
    }

    const int step_index = static_cast<int>(k + 1);
    const double step_time = out.times[k + 1];
    std::vector<Cluster> next;
    next.reserve(count);
    bool last_merged = false;
    for (int c = 0; c < count; ++c) {
      clusters[c].pos = moved[c];
      if (c > 0 && crossed[c - 1]) {
        if (last_merged) ++out.chain_merges;
        merge_clusters(next.back(), clusters[c], step_index, step_time,
                       out.merges);
        last_merged = true;
      } else {
        next.push_back(std::move(clusters[c]));
        last_merged = false;
      }
    }

    // A cluster overtaking a non-merged neighbour still counts as a meeting.
    bool sorted = false;
    while (!sorted) {
      sorted = true;
      for (std::size_t c = 0; c + 1 < next.size(); ++c) {
        if (next[c].pos > next[c + 1].pos) {
          merge_clusters(next[c], next[c + 1], step_index, step_time,
                         out.merges);
          next.erase(next.begin() + static_cast<long>(c) + 1);
          ++out.overtake_merges;
          sorted = false;
          break;
        }
      }
    }

    clusters = std::move(next);
    for (const auto& cl : clusters) {
      for (int label : cl.members) out.label_pos[label][k + 1] = cl.pos;
    }
  }
  out.final_cluster_count = static_cast<int>(clusters.size());
  return out;
}

std::size_t CoalescingTrajectory::grid_index(double t) const {
  if (!(t >= 0)) throw std::invalid_argument("time must be nonnegative");
  auto it = std::upper_bound(times.begin(), times.end(), t);
  return static_cast<std::size_t>(it - times.begin()) - 1;
}

std::size_t AnnihilatingTrajectory::grid_index(double t) const {
  if (!(t >= 0)) throw std::invalid_argument("time must be nonnegative");
  auto it = std::upper_bound(times.begin(), times.end(), t);
  return static_cast<std::size_t>(it - times.begin()) - 1;
}

AnnihilatingTrajectory annihilate_by_parity(const CoalescingTrajectory& co) {
  AnnihilatingTrajectory out;
  out.times = co.times;
  out.label_pos = co.label_pos;
  out.death_time.assign(co.label_pos.size(),
                        std::numeric_limits<double>::infinity());
  for (const auto& m : co.merges) {
    if (m.mult_left % 2 != 0 && m.mult_right % 2 != 0) {
      out.death_time[static_cast<std::size_t>(m.rep_left)] = m.time;
      out.death_time[static_cast<std::size_t>(m.rep_right)] = m.time;
    }
  }
  return out;
}

int AnnihilatingTrajectory::survivors_at(double t) const {
  int alive = 0;
  for (double d : death_time) {
    if (d > t) ++alive;
  }
  return alive;
}

std::vector<double> AnnihilatingTrajectory::living_positions(double t) const {
  std::size_t idx = grid_index(t);
  std::vector<double> pos;
  for (std::size_t label = 0; label < death_time.size(); ++label) {
    if (death_time[label] > t) pos.push_back(label_pos[label][idx]);
  }
  std::sort(pos.begin(), pos.end());
  return pos;
}

int standard_colouring(const TypedProfile& u0,
                       const AnnihilatingTrajectory& paths, double t,
                       double x) {
  auto living = paths.living_positions(t);
  int flips = 0;
  for (double p : living) {
    if (p == x) return 0;
    if (p < x) ++flips;
  }
  int other = 3 - u0.leftmost_type();
  return (flips % 2 == 0) ? u0.leftmost_type() : other;
}

std::pair<double, double> standard_element(const TypedProfile& u0,
                                           const AnnihilatingTrajectory& paths,
                                           double t, double x) {
  double w = semigroup_apply(u0.density(), t, x);
  int colour = standard_colouring(u0, paths, t, x);
  return {colour == 1 ? w : 0.0, colour == 2 ? w : 0.0};
}

namespace {

std::vector<double> panel_edges(double lo, double hi,
                                const std::vector<double>& breaks) {
  std::vector<double> edges{lo, hi};
  for (double b : breaks) {
    if (b > lo && b < hi) edges.push_back(b);
  }
  std::sort(edges.begin(), edges.end());
  return edges;
}

}  // namespace

double km_noncrossing_expectation(const std::function<double(double)>& f,
                                  const std::function<double(double)>& g,
                                  double x, double y, double t,
                                  const std::vector<double>& f_breaks,
                                  const std::vector<double>& g_breaks,
                                  int order) {
  if (!(x < y)) throw std::invalid_argument("need x < y");
  if (!(t > 0)) throw std::invalid_argument("time must be positive");
  const double r = 8 * std::sqrt(t);
  const double norm = 1.0 / std::sqrt(2 * std::numbers::pi * t);
  auto density = [&](double z) { return norm * std::exp(-z * z / (2 * t)); };

  const auto& rule = gauss_legendre(order);
  auto a_edges = panel_edges(x - r, x + r, f_breaks);
  double total = 0;
  for (std::size_t pa = 0; pa + 1 < a_edges.size(); ++pa) {
    const double alo = a_edges[pa], ahi = a_edges[pa + 1];
    const double amid = 0.5 * (alo + ahi), ahalf = 0.5 * (ahi - alo);
    for (std::size_t ia = 0; ia < rule.nodes.size(); ++ia) {
      const double a = amid + ahalf * rule.nodes[ia];
      const double wa = ahalf * rule.weights[ia];
      const double fa = f(a);
      if (fa == 0) continue;
      const double blo = std::max(a, y - r);
      const double bhi = y + r;
      if (!(blo < bhi)) continue;
      auto b_edges = panel_edges(blo, bhi, g_breaks);
      double inner = 0;
      for (std::size_t pb = 0; pb + 1 < b_edges.size(); ++pb) {
        const double bmid = 0.5 * (b_edges[pb] + b_edges[pb + 1]);
        const double bhalf = 0.5 * (b_edges[pb + 1] - b_edges[pb]);
        for (std::size_t ib = 0; ib < rule.nodes.size(); ++ib) {
          const double b = bmid + bhalf * rule.nodes[ib];
          const double wb = bhalf * rule.weights[ib];
          const double det = density(a - x) * density(b - y) -
                             density(b - x) * density(a - y);
          inner += wb * g(b) * det;
        }
      }
      total += wa * fa * inner;
    }
  }
  return total;
}

SecondMomentReport second_moment_check(const TypedProfile& u0, double t,
                                       double x, double y, double dt,
                                       long replicas, uint64_t seed,
                                       int threads) {
  if (!(t > 0) || !(dt > 0)) {
    throw std::invalid_argument("time and dt must be positive");
  }
  if (!(x < y)) throw std::invalid_argument("need x < y");
  if (replicas <= 0) throw std::invalid_argument("need replicas");

  std::vector<double> lhs(static_cast<std::size_t>(replicas));
  std::vector<double> rhs(static_cast<std::size_t>(replicas));
  const long steps = static_cast<long>(std::ceil(t / dt - 1e-9));

  parallel_replicas(replicas, threads, [&](long rep) {
    auto idx = static_cast<std::size_t>(rep);
    {
      RngStream rng = derive_stream(seed, 2 * static_cast<uint64_t>(rep));
      auto co = simulate_coalescing_system(u0.interfaces(), u0.density(), t,
                                           dt, rng);
      auto an = annihilate_by_parity(co);
      auto ex = standard_element(u0, an, t, x);
      auto ey = standard_element(u0, an, t, y);
      lhs[idx] = ex.first * ey.second;
    }
    {
      RngStream rng = derive_stream(seed, 2 * static_cast<uint64_t>(rep) + 1);
      double x1 = x, x2 = y;
      double diff = x1 - x2;
      bool met = false;
      double told = 0;
      for (long k = 1; k <= steps; ++k) {
        const double tk = std::min(t, static_cast<double>(k) * dt);
        const double h = tk - told;
        told = tk;
        if (!(h > 0)) continue;
        x1 += std::sqrt(h) * rng.normal();
        x2 += std::sqrt(h) * rng.normal();
        const double nd = x1 - x2;
        if (!met) {
          if (diff * nd <= 0) {
            met = true;
          } else {
            double p = bridge_crossing_probability(diff, nd, h, 2.0);
            if (p > 1e-14 && rng.uniform() < p) met = true;
          }
        }
        diff = nd;
      }
      rhs[idx] = met ? 0.0 : u0.color_value(x1, 1) * u0.color_value(x2, 2);
    }
  });

  SecondMomentReport report;
  report.interface_side = summarize_values(lhs);
  report.dual_side = summarize_values(rhs);
  auto f = [&](double a) { return u0.color_value(a, 1); };
  auto g = [&](double b) { return u0.color_value(b, 2); };
  std::vector<double> breaks = u0.density().breakpoints();
  breaks.insert(breaks.end(), u0.interfaces().begin(), u0.interfaces().end());
  report.km_value = km_noncrossing_expectation(f, g, x, y, t, breaks, breaks);
  double pooled = std::sqrt(report.interface_side.se * report.interface_side.se +
                            report.dual_side.se * report.dual_side.se);
  report.z = pooled > 0
                 ? (report.interface_side.mean - report.dual_side.mean) / pooled
                 : 0.0;
  return report;
}

}  // namespace sbm
