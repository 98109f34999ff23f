#include "sbm/lattice_sbm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "sbm/parallel.hpp"

namespace sbm {

namespace {

void check_field(const LatticeField& f) {
  if (f.u1.empty() || f.u1.size() != f.u2.size()) {
    throw std::invalid_argument("field needs matching nonempty type arrays");
  }
  for (double v : f.u1) {
    if (!(v >= 0) || !std::isfinite(v)) {
      throw std::invalid_argument("field values must be finite and >= 0");
    }
  }
  for (double v : f.u2) {
    if (!(v >= 0) || !std::isfinite(v)) {
      throw std::invalid_argument("field values must be finite and >= 0");
    }
  }
}

void check_config(const LatticeSimConfig& cfg) {
  if (!(cfg.gamma >= 0) || !std::isfinite(cfg.gamma)) {
    throw std::invalid_argument("interaction rate must be finite and >= 0");
  }
  if (!(cfg.rho >= -1 && cfg.rho <= 1)) {
    throw std::invalid_argument("correlation must lie in [-1,1]");
  }
  if (!(cfg.dt > 0)) throw std::invalid_argument("dt must be positive");
}

double field_sup(const LatticeField& f) {
  double s = 0;
  for (double v : f.u1) s = std::max(s, v);
  for (double v : f.u2) s = std::max(s, v);
  return s;
}

}  // namespace

LatticeField make_flat_field(long sites, double v1, double v2) {
  if (sites < 2) throw std::invalid_argument("need at least two sites");
  LatticeField f;
  f.u1.assign(static_cast<std::size_t>(sites), v1);
  f.u2.assign(static_cast<std::size_t>(sites), v2);
  check_field(f);
  return f;
}

LatticeField make_half_fields(long sites, double v1, double v2) {
  if (sites < 2) throw std::invalid_argument("need at least two sites");
  LatticeField f;
  f.u1.assign(static_cast<std::size_t>(sites), 0.0);
  f.u2.assign(static_cast<std::size_t>(sites), 0.0);
  for (long x = 0; x < sites / 2; ++x) f.u1[static_cast<std::size_t>(x)] = v1;
  for (long x = sites / 2; x < sites; ++x) f.u2[static_cast<std::size_t>(x)] = v2;
  check_field(f);
  return f;
}

void step_euler(LatticeField& f, const LatticeSimConfig& cfg, RngStream& rng) {
  const auto L = f.u1.size();
  if (L < 2 || f.u2.size() != L) {
    throw std::invalid_argument("field needs matching arrays of >= 2 sites");
  }
  check_config(cfg);

  thread_local std::vector<double> n1, n2;
  n1.resize(L);
  n2.resize(L);

  const double dt = cfg.dt;
  const double half = 0.5 * dt;
  const double gdt = cfg.gamma * dt;
  const double* u1 = f.u1.data();
  const double* u2 = f.u2.data();
  long clamps = 0;
  double checksum = 0;

  if (cfg.rho == -1.0 || cfg.rho == 1.0) {
    const double sign = cfg.rho;
    for (std::size_t i = 0; i < L; ++i) {
      const std::size_t l = i == 0 ? L - 1 : i - 1;
      const std::size_t r = i + 1 == L ? 0 : i + 1;
      const double noise = std::sqrt(gdt * u1[i] * u2[i]) * rng.normal();
      double v1 = u1[i] + half * (u1[l] - 2 * u1[i] + u1[r]) + noise;
      double v2 = u2[i] + half * (u2[l] - 2 * u2[i] + u2[r]) + sign * noise;
      if (v1 < 0) {
        v1 = 0;
        ++clamps;
      }
      if (v2 < 0) {
        v2 = 0;
        ++clamps;
      }
      n1[i] = v1;
      n2[i] = v2;
      checksum += v1 + v2;
    }
  } else {
    const double rho = cfg.rho;
    const double orth = std::sqrt(1.0 - rho * rho);
    for (std::size_t i = 0; i < L; ++i) {
      const std::size_t l = i == 0 ? L - 1 : i - 1;
      const std::size_t r = i + 1 == L ? 0 : i + 1;
      const double sig = std::sqrt(gdt * u1[i] * u2[i]);
      const double z1 = rng.normal();
      const double z2 = rho * z1 + orth * rng.normal();
      double v1 = u1[i] + half * (u1[l] - 2 * u1[i] + u1[r]) + sig * z1;
      double v2 = u2[i] + half * (u2[l] - 2 * u2[i] + u2[r]) + sig * z2;
      if (v1 < 0) {
        v1 = 0;
        ++clamps;
      }
      if (v2 < 0) {
        v2 = 0;
        ++clamps;
      }
      n1[i] = v1;
      n2[i] = v2;
      checksum += v1 + v2;
    }
  }

  if (!std::isfinite(checksum)) {
    throw std::runtime_error("field became non-finite at t = " +
                             std::to_string(f.time + dt));
  }
  f.u1.swap(n1);
  f.u2.swap(n2);
  f.clamp_count += clamps;
  f.time += dt;
}

double stability_dt_bound(const LatticeField& field, double gamma) {
  const double sup = field_sup(field);
  return 0.1 / (1.0 + gamma * sup * sup);
}

std::vector<LatticeField> simulate(LatticeField field,
                                   const LatticeSimConfig& cfg,
                                   std::span<const double> sample_times,
                                   RngStream& rng) {
  check_field(field);
  check_config(cfg);
  if (sample_times.empty()) {
    throw std::invalid_argument("need at least one sample time");
  }
  const double bound = stability_dt_bound(field, cfg.gamma);
  if (cfg.dt > bound * (1 + 1e-12)) {
    throw std::invalid_argument("dt = " + std::to_string(cfg.dt) +
                                " exceeds the stability ceiling " +
                                std::to_string(bound));
  }

  std::vector<long> sample_steps;
  long prev = -1;
  for (double s : sample_times) {
    if (!(s >= 0)) throw std::invalid_argument("sample times must be >= 0");
    const long k = std::lround(s / cfg.dt);
    if (std::abs(k * cfg.dt - s) > 1e-9 * std::max(1.0, s)) {
      throw std::invalid_argument("sample time " + std::to_string(s) +
                                  " is not on the dt grid");
    }
    if (k <= prev) {
      throw std::invalid_argument("sample times must be strictly increasing");
    }
    sample_steps.push_back(k);
    prev = k;
  }

  std::vector<LatticeField> out;
  out.reserve(sample_steps.size());
  long step = 0;
  for (long target : sample_steps) {
    while (step < target) {
      step_euler(field, cfg, rng);
      ++step;
    }
    out.push_back(field);
  }
  return out;
}

MomentEstimate moment_estimate(const LatticeField& u0,
                               const std::vector<long>& sites,
                               const Coloring& colors, double t,
                               const LatticeSimConfig& cfg, long replicas,
                               uint64_t seed, int threads) {
  check_field(u0);
  check_config(cfg);
  if (static_cast<int>(sites.size()) != colors.n()) {
    throw std::invalid_argument("need one site per color");
  }
  for (long x : sites) {
    if (x < 0 || x >= u0.sites()) {
      throw std::invalid_argument("observation site out of range");
    }
  }
  if (replicas < 1) throw std::invalid_argument("need at least one replica");
  const long steps = std::lround(t / cfg.dt);
  if (!(t >= 0) || std::abs(steps * cfg.dt - t) > 1e-9 * std::max(1.0, t)) {
    throw std::invalid_argument("time is not on the dt grid");
  }
  const double bound = stability_dt_bound(u0, cfg.gamma);
  if (cfg.dt > bound * (1 + 1e-12)) {
    throw std::invalid_argument("dt exceeds the stability ceiling");
  }

  std::vector<double> values(static_cast<std::size_t>(replicas));
  parallel_replicas(replicas, threads, [&](long r) {
    RngStream rng = derive_stream(seed, static_cast<uint64_t>(r));
    LatticeField f = u0;
    for (long k = 0; k < steps; ++k) step_euler(f, cfg, rng);
    double prod = 1;
    for (std::size_t i = 0; i < sites.size(); ++i) {
      const auto x = static_cast<std::size_t>(sites[i]);
      prod *= colors.at(static_cast<int>(i) + 1) == 1 ? f.u1[x] : f.u2[x];
    }
    values[static_cast<std::size_t>(r)] = prod;
  });
  return summarize_values(values);
}

std::vector<long> interface_set(const LatticeField& field, double threshold) {
  if (!(threshold >= 0)) {
    throw std::invalid_argument("threshold must be >= 0");
  }
  std::vector<long> out;
  for (long x = 0; x < field.sites(); ++x) {
    const auto i = static_cast<std::size_t>(x);
    if (field.u1[i] > threshold && field.u2[i] > threshold) out.push_back(x);
  }
  return out;
}

std::vector<LatticeField> rescale_diffusive(
    const std::vector<LatticeField>& snapshots, long k) {
  if (k < 1) throw std::invalid_argument("scale factor must be >= 1");
  std::vector<LatticeField> out;
  out.reserve(snapshots.size());
  for (const auto& snap : snapshots) {
    const long L = snap.sites();
    if (L % k != 0) {
      throw std::invalid_argument("scale factor must divide the site count");
    }
    LatticeField v;
    v.time = snap.time / static_cast<double>(k * k);
    v.clamp_count = snap.clamp_count;
    const long m = L / k;
    v.u1.resize(static_cast<std::size_t>(m));
    v.u2.resize(static_cast<std::size_t>(m));
    for (long x = 0; x < m; ++x) {
      v.u1[static_cast<std::size_t>(x)] = snap.u1[static_cast<std::size_t>(k * x)];
      v.u2[static_cast<std::size_t>(x)] = snap.u2[static_cast<std::size_t>(k * x)];
    }
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace sbm
