#pragma once

#include <Eigen/Core>
#include <complex>
#include <vector>

#include "sbm/coloring.hpp"

namespace sbm {

// Generator of the color-measure flow attached to a coincidence partition.
// Row m: diagonal rho * (# within-block discordant pairs of m), entry into
// the single-position flip m^i of 1/2 per discordant block partner of i.
struct FlowMatrix {
  SetPartition partition;
  double rho;
  Eigen::MatrixXd entries;  // 2^n x 2^n, indexed lexicographically

  int n() const { return partition.n(); }
};

FlowMatrix build_block_matrix(int ell, double rho);
FlowMatrix build_partition_matrix(const SetPartition& pi, double rho);

// K_t = exp(t A_pi) K0. Entries in [-1e-12, 0) produced by the matrix
// exponential are clamped to 0; anything more negative is a hard error.
ColorMeasure evolve_K(const ColorMeasure& K0, const SetPartition& pi,
                      double rho, double t);

// t -> infinity limit of evolve_K, in closed form. Requires
// rho + cos(pi/n) < 0. At rho = -1 the sine ratios degenerate to count
// ratios and are evaluated as such directly.
ColorMeasure k_infinity(const ColorMeasure& K0, const SetPartition& pi,
                        double rho);

// The two extremal stationary vectors of the one-block flow:
// v1(m) = sin(lambda #1(m)) / sin(lambda n) and v2 its color swap,
// lambda = arccos(-rho); count ratios at rho = -1.
struct BoundaryEigenbasis {
  int n;
  double rho;
  double lambda;  // arccos(-rho), pi at rho = -1
  ColorMeasure v1;
  ColorMeasure v2;
};

BoundaryEigenbasis boundary_eigenvectors(int n, double rho);

// Spectrum of the one-block flow on n particles, plus the symmetric-sector
// reduction diag(k(n-k)) * tridiag(1/2, rho, 1/2) whose eigenvalues carry
// the decay rate; B itself has eigenvalues rho + cos(j pi / n).
struct SpectrumReport {
  int n;
  double rho;
  bool below_critical;                    // rho + cos(pi/n) < 0
  std::vector<std::complex<double>> full_eigenvalues;
  int zero_multiplicity;                  // always >= 2
  bool all_nonzero_negative;              // every nonzero eigenvalue has Re < 0
  double gap;                             // -max Re over nonzero eigenvalues
  std::vector<double> reduced_eigenvalues;      // of diag(k(n-k)) B, ascending
  std::vector<double> tridiagonal_eigenvalues;  // of B, ascending
  double tridiagonal_formula_dev;  // max |eig_j(B) - (rho + cos(j pi/n))|
};

SpectrumReport spectral_check(int n, double rho);

// Critical moment order p(rho) = pi / arccos(-rho) and its inverse
// rho(p) = -cos(pi/p). p = infinity pairs with rho = -1.
double critical_p(double rho);
double critical_rho(double p);
bool below_critical(int n, double rho);

}  // namespace sbm
