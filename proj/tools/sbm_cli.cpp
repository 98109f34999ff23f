#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sbm/harness.hpp"
#include "sbm/interface_dynamics.hpp"

namespace {

double parse_gamma(const std::string& s) {
  if (s == "inf" || s == "infinity") {
    return std::numeric_limits<double>::infinity();
  }
  return std::stod(s);
}

void emit(const sbm::json& j, const std::string& out_path) {
  const std::string body = j.dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << body;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot open output path: " + out_path);
  out << body;
}

// Typed-profile file: "type <1|2>", "interfaces <x1> <x2> ...", then the
// plain profile block (leading end value, then "breakpoint value" lines).
struct TypedProfileFile {
  sbm::Profile w0 = sbm::Profile::constant(1.0);
  std::vector<double> interfaces;
  int leftmost_type = 1;
};

TypedProfileFile load_typed_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open profile file: " + path);
  TypedProfileFile out;
  std::string line;
  std::string rest;
  bool have_type = false, have_interfaces = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string head;
    ls >> head;
    if (!have_type && head == "type") {
      ls >> out.leftmost_type;
      have_type = true;
    } else if (!have_interfaces && head == "interfaces") {
      double x;
      while (ls >> x) out.interfaces.push_back(x);
      have_interfaces = true;
    } else {
      rest += line + "\n";
    }
  }
  if (!have_type || !have_interfaces) {
    throw std::runtime_error(
        "typed profile needs 'type' and 'interfaces' header lines");
  }
  std::istringstream body(rest);
  out.w0 = sbm::Profile::load(body);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"symbiotic branching model toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  uint64_t seed = 20240801;
  int threads = 1;
  std::string out_path;
  app.add_option("--seed", seed, "base RNG seed");
  app.add_option("--threads", threads, "worker threads for replica loops");
  app.add_option("--out", out_path, "report path (default: stdout)");

  // spectrum
  auto* sp = app.add_subcommand("spectrum", "eigenstructure of the flow matrix");
  int sp_n = 2;
  double sp_rho = -1;
  sp->add_option("--n", sp_n, "particle count")->required();
  sp->add_option("--rho", sp_rho, "noise correlation")->required();

  // kflow
  auto* kf = app.add_subcommand("kflow", "K_t / K_infinity tables");
  int kf_n = 2;
  double kf_rho = -1;
  std::string kf_partition, kf_k0 = "uniform";
  std::vector<double> kf_times{1.0};
  kf->add_option("--n", kf_n)->required();
  kf->add_option("--rho", kf_rho)->required();
  kf->add_option("--partition", kf_partition,
                 "e.g. \"{1,3}{2}\" (default: one block)");
  kf->add_option("--k0", kf_k0, "coloring like 121, or 'uniform'");
  kf->add_option("--times", kf_times, "evaluation times")->delimiter(',');

  // duality-check
  auto* dc = app.add_subcommand("duality-check",
                                "moment duality / oracle comparison");
  std::string dc_space = "lattice", dc_colors = "12", dc_gamma = "4";
  std::string dc_init = "flat", dc_u0 = "flat";
  std::vector<long> dc_sites{64, 65};
  std::vector<double> dc_starts{0.0, 1.0};
  long dc_torus = 256, dc_replicas = 20000;
  double dc_rho = -1, dc_t = 1, dc_dt = 1e-3;
  dc->add_option("--space", dc_space, "lattice | continuum");
  dc->add_option("--colors", dc_colors, "dual coloring, e.g. 12");
  dc->add_option("--sites", dc_sites, "lattice observation sites")
      ->delimiter(',');
  dc->add_option("--starts", dc_starts, "continuum walker starts")
      ->delimiter(',');
  dc->add_option("--torus", dc_torus);
  dc->add_option("--rho", dc_rho);
  dc->add_option("--gamma", dc_gamma, "interaction rate, number or 'inf'");
  dc->add_option("--t", dc_t);
  dc->add_option("--dt", dc_dt);
  dc->add_option("--init", dc_init, "lattice initial data: flat | heaviside");
  dc->add_option("--u0", dc_u0, "continuum initial data: flat | heaviside");
  dc->add_option("--replicas", dc_replicas);

  // lattice-sim
  auto* ls = app.add_subcommand("lattice-sim", "forward Euler simulation");
  sbm::LatticeRunConfig ls_cfg;
  std::string ls_csv, ls_colors;
  std::vector<long> ls_sites;
  long ls_replicas = 10000;
  ls->add_option("--L", ls_cfg.sites);
  ls->add_option("--gamma", ls_cfg.gamma);
  ls->add_option("--rho", ls_cfg.rho);
  ls->add_option("--dt", ls_cfg.dt);
  ls->add_option("--t", ls_cfg.t);
  ls->add_option("--init", ls_cfg.init, "flat | heaviside | file");
  ls->add_option("--init-path", ls_cfg.init_path, "two profiles split by ---");
  ls->add_option("--snapshots", ls_cfg.snapshots);
  ls->add_option("--csv", ls_csv, "snapshot CSV path (time,site,u1,u2)");
  ls->add_option("--sites", ls_sites, "moment-report sites")->delimiter(',');
  ls->add_option("--colors", ls_colors, "moment-report coloring, e.g. 12");
  ls->add_option("--replicas", ls_replicas, "moment-report replicas");

  // interface-sim
  auto* is = app.add_subcommand("interface-sim",
                                "rho=-1 infinite-rate interface system");
  std::string is_init, is_trace;
  std::vector<double> is_interfaces{0.0};
  int is_type = 1;
  double is_t = 1, is_dt = 1e-3;
  long is_replicas = 5000;
  is->add_option("--init", is_init, "typed profile file");
  is->add_option("--interfaces", is_interfaces,
                 "interface positions (flat profile) when no --init")
      ->delimiter(',');
  is->add_option("--leftmost-type", is_type, "type left of all interfaces");
  is->add_option("--t", is_t);
  is->add_option("--dt", is_dt);
  is->add_option("--replicas", is_replicas);
  is->add_option("--trace", is_trace, "first-replica path CSV");

  // rescale
  auto* rs = app.add_subcommand("rescale", "diffusively rescaled lattice run");
  sbm::LatticeRunConfig rs_cfg;
  long rs_k = 2;
  std::string rs_csv;
  rs->add_option("--L", rs_cfg.sites);
  rs->add_option("--gamma", rs_cfg.gamma);
  rs->add_option("--rho", rs_cfg.rho);
  rs->add_option("--dt", rs_cfg.dt);
  rs->add_option("--t", rs_cfg.t, "final time on the coarse clock");
  rs->add_option("--init", rs_cfg.init);
  rs->add_option("--init-path", rs_cfg.init_path);
  rs->add_option("--snapshots", rs_cfg.snapshots);
  rs->add_option("--K", rs_k, "diffusive scale factor")->required();
  rs->add_option("--csv", rs_csv, "rescaled CSV path");

  // collision-moment probe
  auto* c2 = app.add_subcommand("collision-moment",
                                "d=3 exponential-moment bound check");
  sbm::CollisionMomentConfig c2_cfg;
  c2->add_option("--rho", c2_cfg.rho);
  c2->add_option("--gamma", c2_cfg.gamma);
  c2->add_option("--replicas", c2_cfg.replicas);
  c2->add_option("--horizon", c2_cfg.horizon);
  c2->add_option("--batches", c2_cfg.batches);
  c2->add_option("--divergence-horizons", c2_cfg.divergence_horizons,
                 "supercritical probe horizons")
      ->delimiter(',');
  c2->add_option("--divergence-rho", c2_cfg.divergence_rho);
  c2->add_option("--divergence-gamma", c2_cfg.divergence_gamma);
  c2->add_option("--divergence-replicas", c2_cfg.divergence_replicas);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sp) {
      emit(sbm::spectrum_json(sp_n, sp_rho), out_path);
      return 0;
    }
    if (*kf) {
      emit(sbm::kflow_json(kf_n, kf_rho, kf_partition, kf_k0, kf_times),
           out_path);
      return 0;
    }
    if (*dc) {
      sbm::ExperimentReport report;
      if (dc_space == "lattice") {
        sbm::DualityLatticeConfig cfg;
        cfg.colors = dc_colors;
        cfg.sites = dc_sites;
        cfg.torus = dc_torus;
        cfg.rho = dc_rho;
        cfg.gamma = parse_gamma(dc_gamma);
        cfg.t = dc_t;
        cfg.dt = dc_dt;
        cfg.init = dc_init;
        cfg.replicas = dc_replicas;
        report = sbm::duality_lattice_experiment(cfg, seed, threads);
      } else if (dc_space == "continuum") {
        if (!std::isinf(parse_gamma(dc_gamma))) {
          throw std::invalid_argument(
              "continuum oracle comparison needs --gamma inf");
        }
        sbm::DualityContinuumConfig cfg;
        cfg.starts = dc_starts;
        cfg.rho = dc_rho;
        cfg.t = dc_t;
        cfg.dt = dc_dt;
        cfg.u0 = dc_u0;
        cfg.replicas = dc_replicas;
        report = sbm::duality_continuum_experiment(cfg, seed, threads);
      } else {
        throw std::invalid_argument("space must be lattice or continuum");
      }
      emit(report.to_json(), out_path);
      return report.pass() ? 0 : 1;
    }
    if (*ls) {
      auto run = sbm::lattice_run(ls_cfg, seed);
      if (!ls_csv.empty()) sbm::write_lattice_csv(run, ls_csv);
      if (!ls_sites.empty()) {
        if (ls_colors.empty()) {
          throw std::invalid_argument("--sites needs --colors");
        }
        sbm::DualityLatticeConfig cfg;
        cfg.colors = ls_colors;
        cfg.sites = ls_sites;
        cfg.torus = ls_cfg.sites;
        cfg.rho = ls_cfg.rho;
        cfg.gamma = ls_cfg.gamma;
        cfg.t = ls_cfg.t;
        cfg.dt = ls_cfg.dt;
        cfg.init = ls_cfg.init;
        cfg.replicas = ls_replicas;
        auto report = sbm::duality_lattice_experiment(cfg, seed, threads);
        emit(report.to_json(), out_path);
        return report.pass() ? 0 : 1;
      }
      sbm::json j;
      j["schema_version"] = sbm::kReportSchemaVersion;
      j["kind"] = "lattice-sim";
      j["clamp_count"] = run.clamp_count;
      j["times"] = run.times;
      if (ls_csv.empty()) {
        j["note"] = "pass --csv to dump the field snapshots";
      } else {
        j["csv"] = ls_csv;
      }
      emit(j, out_path);
      return 0;
    }
    if (*is) {
      sbm::InterfaceSimConfig cfg;
      if (!is_init.empty()) {
        auto tp = load_typed_profile(is_init);
        cfg.w0 = tp.w0;
        cfg.interfaces = tp.interfaces;
        cfg.leftmost_type = tp.leftmost_type;
      } else {
        cfg.interfaces = is_interfaces;
        cfg.leftmost_type = is_type;
      }
      cfg.t = is_t;
      cfg.dt = is_dt;
      cfg.replicas = is_replicas;
      cfg.trace_path = is_trace;
      auto report = sbm::interface_sim_experiment(cfg, seed, threads);
      emit(report.to_json(), out_path);
      return report.pass() ? 0 : 1;
    }
    if (*rs) {
      auto run = sbm::lattice_rescaled_run(rs_cfg, rs_k, seed);
      if (!rs_csv.empty()) sbm::write_lattice_csv(run, rs_csv);
      sbm::json j;
      j["schema_version"] = sbm::kReportSchemaVersion;
      j["kind"] = "rescale";
      j["K"] = rs_k;
      j["times"] = run.times;
      j["clamp_count"] = run.clamp_count;
      if (!rs_csv.empty()) j["csv"] = rs_csv;
      emit(j, out_path);
      return 0;
    }
    if (*c2) {
      auto report = sbm::collision_moment_experiment(c2_cfg, seed, threads);
      emit(report.to_json(), out_path);
      return report.pass() ? 0 : 1;
    }
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }
  return 0;
}
