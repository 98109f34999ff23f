#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "sbm/harness.hpp"
#include "sbm/rng.hpp"

using namespace sbm;

TEST_CASE("z score edge cases") {
  CHECK(z_score(1.0, 0.1, 1.0, 0.1) == 0.0);
  CHECK(z_score(1.0, 0.3, 2.0, 0.4) == doctest::Approx(2.0));
  CHECK(z_score(1.0, 0.0, 1.0, 0.0) == 0.0);
  CHECK(z_score(1.0, 0.0, 2.0, 0.0) > 1e30);
}

TEST_CASE("ks statistic on a tiny hand-computed sample") {
  std::vector<double> sample{0.5, 0.1, 0.9};  // unsorted on purpose
  double d = ks_statistic(sample, [](double x) { return x; });
  CHECK(d == doctest::Approx(7.0 / 30.0).epsilon(1e-12));
  CHECK(ks_critical_1pct(10000) == doctest::Approx(0.0163));
}

TEST_CASE("chi-square tail probabilities at textbook critical values") {
  CHECK(chi2_pvalue(9.21034, 2) == doctest::Approx(0.01).epsilon(1e-5));
  CHECK(chi2_pvalue(6.634897, 1) == doctest::Approx(0.01).epsilon(1e-5));
  CHECK(chi2_pvalue(0.0, 3) == doctest::Approx(1.0));
  // Q(1/2, x) = erfc(sqrt(x))
  CHECK(gamma_q(0.5, 1.0) == doctest::Approx(std::erfc(1.0)).epsilon(1e-12));
  CHECK(gamma_q(2.5, 40.0) < 1e-12);  // deep tail stays finite and tiny
}

TEST_CASE("two-sample chi-square: equality, asymmetry, pooling") {
  std::vector<long> a{50, 30, 20};
  std::vector<long> same{50, 30, 20};
  Chi2Result eq = chi2_two_sample(a, same);
  CHECK(eq.statistic == doctest::Approx(0.0));
  CHECK(eq.p_value == doctest::Approx(1.0));

  std::vector<long> b{20, 30, 50};
  Chi2Result r = chi2_two_sample(a, b);
  // equal totals: sum (a-b)^2/(a+b) = 900/70 + 0 + 900/70
  CHECK(r.statistic == doctest::Approx(1800.0 / 70.0).epsilon(1e-12));
  CHECK(r.dof == 2);
  CHECK(r.p_value < 1e-4);

  // sparse cells pool with neighbours until >= 10 combined
  std::vector<long> c{12, 1, 2, 15};
  std::vector<long> d{10, 2, 3, 12};
  Chi2Result pooled = chi2_two_sample(c, d);
  CHECK(pooled.dof == 1);  // {12|10}, {1,2,15|2,3,12}

  // everything pooled into one cell leaves nothing to test
  std::vector<long> tiny{1, 2, 1};
  std::vector<long> tiny2{2, 1, 1};
  Chi2Result degenerate = chi2_two_sample(tiny, tiny2);
  CHECK(degenerate.dof == 0);
  CHECK(degenerate.p_value == doctest::Approx(1.0));

  // unbalanced totals use the scaled statistic; identical shapes pass
  std::vector<long> e{100, 300};
  std::vector<long> f{50, 150};
  CHECK(chi2_two_sample(e, f).statistic == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("comparison rows carry the pass verdict") {
  ComparisonRow ok = compare("x", 1.0, 0.5, 2.0, 0.5, 3.0);
  CHECK(ok.pass);
  CHECK(ok.z == doctest::Approx(std::sqrt(2.0)));
  ComparisonRow bad = compare("y", 0.0, 0.1, 1.0, 0.1, 3.0);
  CHECK_FALSE(bad.pass);
}

TEST_CASE("experiment reports serialize deterministically") {
  ExperimentReport rep;
  rep.kind = "demo";
  rep.config = {{"alpha", 1.5}, {"seed", 7}};
  rep.rows.push_back(compare("only row", 1.0, 0.1, 1.1, 0.1));
  json j = rep.to_json();
  CHECK(j["schema_version"] == kReportSchemaVersion);
  CHECK(j["kind"] == "demo");
  CHECK(j["config"]["seed"] == 7);
  CHECK(j["pass"] == true);
  CHECK_FALSE(j.contains("multiple_testing_note"));
  CHECK(j.dump() == rep.to_json().dump());

  for (int i = 0; i < 12; ++i)
    rep.rows.push_back(compare("row " + std::to_string(i), 0, 0.1, 0, 0.1));
  CHECK(rep.to_json().contains("multiple_testing_note"));

  rep.rows.push_back(compare("failing", 0.0, 0.01, 1.0, 0.01));
  CHECK_FALSE(rep.pass());
  CHECK(rep.to_json()["pass"] == false);
}

TEST_CASE("reports have no clock or host fields") {
  DualityContinuumConfig cfg;
  cfg.replicas = 200;
  cfg.t = 0.25;
  ExperimentReport rep = duality_continuum_experiment(cfg, 21, 1);
  std::string s = rep.to_json().dump();
  CHECK(s.find("time_stamp") == std::string::npos);
  CHECK(s.find("date") == std::string::npos);
  CHECK(s.find("host") == std::string::npos);
  CHECK(s.find("duration") == std::string::npos);
  CHECK(s.find("threads") == std::string::npos);
}

TEST_CASE("experiments are byte-deterministic across thread counts") {
  DualityLatticeConfig cfg;
  cfg.sites = {7, 9};
  cfg.torus = 32;
  cfg.t = 0.1;
  cfg.gamma = 4;
  cfg.replicas = 300;
  std::string one = duality_lattice_experiment(cfg, 42, 1).to_json().dump();
  std::string two = duality_lattice_experiment(cfg, 42, 2).to_json().dump();
  CHECK(one == two);
  std::string other = duality_lattice_experiment(cfg, 43, 1).to_json().dump();
  CHECK(one != other);
}

TEST_CASE("interface experiment returns the advertised rows") {
  InterfaceSimConfig cfg;
  cfg.replicas = 400;
  cfg.t = 0.5;
  ExperimentReport rep = interface_sim_experiment(cfg, 33, 1);
  REQUIRE(rep.rows.size() == 3);  // KS, mean, variance for the flat profile
  CHECK(rep.rows[0].label.find("KS") != std::string::npos);

  InterfaceSimConfig multi;
  multi.interfaces = {-0.5, 0.0, 0.5};
  multi.replicas = 300;
  multi.t = 0.5;
  ExperimentReport rep2 = interface_sim_experiment(multi, 34, 1);
  CHECK(rep2.extra.contains("parity_survivor_counts"));
  CHECK(rep2.extra.contains("direct_survivor_counts"));
  // parity conservation row must pass exactly
  bool parity_ok = false;
  for (const auto& row : rep2.rows)
    if (row.label.find("parity") != std::string::npos) parity_ok = row.pass;
  CHECK(parity_ok);
}

TEST_CASE("direct annihilating simulation preserves parity") {
  RngStream rng(12, 0);
  for (int rep = 0; rep < 40; ++rep) {
    int s4 = simulate_annihilating_direct({-1.0, 0.0, 1.0, 2.0},
                                          Profile::constant(1.0), 1.0, 1e-3, rng);
    CHECK(s4 % 2 == 0);
    CHECK(s4 >= 0);
    CHECK(s4 <= 4);
    int s3 = simulate_annihilating_direct({-1.0, 0.0, 1.0},
                                          Profile::constant(1.0), 1.0, 1e-3, rng);
    CHECK(s3 % 2 == 1);
    CHECK(s3 <= 3);
  }
}

TEST_CASE("walk-statistics experiment: consistency fields") {
  CollisionMomentConfig cfg;
  cfg.replicas = 4000;
  cfg.horizon = 100;
  cfg.batches = 20;
  ExperimentReport rep = collision_moment_experiment(cfg, 55, 1);
  CHECK(rep.extra.contains("p_hat"));
  double p = rep.extra["p_hat"].get<double>();
  CHECK(p > 0.30);
  CHECK(p < 0.36);
  CHECK(rep.extra.contains("formula_value"));
  CHECK(rep.extra.contains("batch_z"));
  // identical reruns are byte-identical
  CHECK(rep.to_json().dump() == collision_moment_experiment(cfg, 55, 1).to_json().dump());
}

TEST_CASE("divergent-regime probe grows along nested horizons") {
  CollisionMomentConfig cfg;
  cfg.replicas = 200;
  cfg.horizon = 20;
  cfg.batches = 10;
  cfg.divergence_horizons = {5.0, 15.0, 45.0};
  cfg.divergence_replicas = 500;
  cfg.divergence_bound = 2.0;
  ExperimentReport rep = collision_moment_experiment(cfg, 56, 1);
  auto ests = rep.extra["divergence_estimates"].get<std::vector<double>>();
  REQUIRE(ests.size() == 3);
  CHECK(ests[0] < ests[1]);
  CHECK(ests[1] < ests[2]);
  bool found = false;
  for (const auto& row : rep.rows)
    if (row.label.find("increases") != std::string::npos) {
      found = true;
      CHECK(row.pass);
    }
  CHECK(found);
}

TEST_CASE("field profile pairs load from the two-section text format") {
  std::stringstream ss;
  ss << "1.0\n0.0 2.0\n---\n0.5\n1.5 0.25\n";
  auto [p1, p2] = load_field_profiles(ss);
  CHECK(p1(-1.0) == 1.0);
  CHECK(p1(0.5) == 2.0);
  CHECK(p2(0.0) == 0.5);
  CHECK(p2(2.0) == 0.25);
}

TEST_CASE("spectrum and flow JSON surfaces") {
  json spec = spectrum_json(3, -0.8);
  CHECK(spec["zero_multiplicity"].get<int>() >= 2);
  CHECK(spec["below_critical"] == true);
  CHECK(spec["gap"].get<double>() == doctest::Approx(0.6).epsilon(1e-9));
  CHECK(spec["reduced_eigenvalues"].size() == 2);

  json above = spectrum_json(3, -0.3);
  CHECK(above["below_critical"] == false);

  std::vector<double> times{0.5, 30.0};
  json flow = kflow_json(2, -0.5, "{1,2}", "11", times);
  CHECK(flow["K_t"].size() == 2);
  CHECK(flow.contains("K_infinity"));
  auto kinf = flow["K_infinity"].get<std::vector<double>>();
  REQUIRE(kinf.size() == 4);
  CHECK(kinf[0] == doctest::Approx(1.0));
  CHECK(kinf[3] == doctest::Approx(0.0));

  std::vector<double> one{1.0};
  json nolimit = kflow_json(3, -0.3, "{1,2,3}", "uniform", one);
  CHECK_FALSE(nolimit.contains("K_infinity"));
}
