#include "sbm/color_flow.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace sbm {

namespace {

void check_rho(double rho) {
  if (!(rho >= -1.0 && rho <= 0.0)) {
    throw std::invalid_argument("correlation must lie in [-1,0], got " +
                                std::to_string(rho));
  }
}

void check_critical(int n, double rho) {
  const double bound = std::cos(std::numbers::pi / n);
  if (!(rho + bound < 0)) {
    throw std::domain_error(
        "long-time limit requires rho < -cos(pi/n) = " +
        std::to_string(-bound) + " for n = " + std::to_string(n) +
        "; got rho = " + std::to_string(rho));
  }
}

// Position i of an n-coloring sits at bit n-i of the lexicographic index.
inline uint32_t position_bit(int n, int i) { return 1u << (n - i); }

Eigen::MatrixXd partition_entries(const SetPartition& pi, double rho) {
  const int n = pi.n();
  const auto dim = std::size_t{1} << n;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim, dim);

  for (uint32_t m = 0; m < dim; ++m) {
    for (const auto& block : pi.blocks()) {
      for (int i : block) {
        const uint32_t ci = (m >> (n - i)) & 1u;
        int discordant = 0;
        for (int j : block) {
          if (j != i && (((m >> (n - j)) & 1u) != ci)) ++discordant;
        }
        if (discordant == 0) continue;
        // 1/2 per discordant partner goes into the flip at i; the same
        // count contributes rho/2 per ordered pair to the diagonal.
        a(m, m ^ position_bit(n, i)) += 0.5 * discordant;
        a(m, m) += 0.5 * rho * discordant;
      }
    }
  }
  return a;
}

}  // namespace

FlowMatrix build_partition_matrix(const SetPartition& pi, double rho) {
  check_rho(rho);
  return FlowMatrix{pi, rho, partition_entries(pi, rho)};
}

FlowMatrix build_block_matrix(int ell, double rho) {
  return build_partition_matrix(SetPartition::one_block(ell), rho);
}

ColorMeasure evolve_K(const ColorMeasure& K0, const SetPartition& pi,
                      double rho, double t) {
  if (pi.n() != K0.n()) {
    throw std::invalid_argument("partition and measure size mismatch");
  }
  check_rho(rho);
  if (!(t >= 0)) {
    throw std::invalid_argument("flow time must be >= 0");
  }
  if (t == 0 || pi.largest_block() == 1) return K0;

  const FlowMatrix a = build_partition_matrix(pi, rho);
  const Eigen::MatrixXd expm = (t * a.entries).exp();
  const Eigen::Map<const Eigen::VectorXd> k0(K0.values().data(),
                                             K0.values().size());
  Eigen::VectorXd k = expm * k0;

  ColorMeasure out(K0.n());
  for (Eigen::Index i = 0; i < k.size(); ++i) {
    double v = k(i);
    if (!std::isfinite(v)) {
      throw std::runtime_error("flow produced a non-finite entry");
    }
    if (v < 0) {
      if (v < -1e-12) {
        throw std::runtime_error(
            "flow produced a negative entry beyond roundoff: " +
            std::to_string(v) + " at index " + std::to_string(i));
      }
      v = 0;
    }
    out[static_cast<uint32_t>(i)] = v;
  }
  return out;
}

ColorMeasure k_infinity(const ColorMeasure& K0, const SetPartition& pi,
                        double rho) {
  if (pi.n() != K0.n()) {
    throw std::invalid_argument("partition and measure size mismatch");
  }
  check_rho(rho);
  check_critical(pi.n(), rho);

  const int n = pi.n();
  const int nblocks = pi.block_count();
  const auto dim = std::size_t{1} << n;
  const double lambda = std::acos(-rho);
  const bool ratio_form = (rho == -1.0);

  // Per block: bitmask and per-coloring weights for target color 1 and 2.
  // weight(c, m|_B) = sin(lambda #_c) / sin(lambda |B|), or #_c / |B| at
  // rho = -1.
  std::vector<uint32_t> mask(nblocks, 0);
  std::vector<std::vector<double>> w1(nblocks), w2(nblocks);
  for (int k = 0; k < nblocks; ++k) {
    const auto& block = pi.block(k);
    for (int i : block) mask[k] |= position_bit(n, i);
    const int ell = static_cast<int>(block.size());
    std::vector<double> by_count(ell + 1);
    for (int c = 0; c <= ell; ++c) {
      by_count[c] = ratio_form
                        ? static_cast<double>(c) / ell
                        : std::sin(lambda * c) / std::sin(lambda * ell);
    }
    w1[k].resize(dim);
    w2[k].resize(dim);
    for (uint32_t m = 0; m < dim; ++m) {
      const int twos = std::popcount(m & mask[k]);
      w1[k][m] = by_count[ell - twos];
      w2[k][m] = by_count[twos];
    }
  }

  ColorMeasure out(n);
  for (uint32_t c = 0; c < (1u << nblocks); ++c) {
    // Coloring that paints block k with color choice c_k.
    uint32_t lifted = 0;
    for (int k = 0; k < nblocks; ++k) {
      if ((c >> (nblocks - 1 - k)) & 1u) lifted |= mask[k];
    }
    const double k0v = K0[lifted];
    if (k0v == 0) continue;
    for (uint32_t m = 0; m < dim; ++m) {
      double w = k0v;
      for (int k = 0; k < nblocks; ++k) {
        w *= ((c >> (nblocks - 1 - k)) & 1u) ? w2[k][m] : w1[k][m];
      }
      out[m] += w;
    }
  }
  return out;
}

BoundaryEigenbasis boundary_eigenvectors(int n, double rho) {
  check_rho(rho);
  check_critical(n, rho);
  const double lambda = std::acos(-rho);
  BoundaryEigenbasis basis{n, rho, lambda, ColorMeasure(n), ColorMeasure(n)};
  const auto dim = std::size_t{1} << n;
  for (uint32_t m = 0; m < dim; ++m) {
    const int twos = std::popcount(m);
    const int ones = n - twos;
    if (rho == -1.0) {
      basis.v1[m] = static_cast<double>(ones) / n;
      basis.v2[m] = static_cast<double>(twos) / n;
    } else {
      basis.v1[m] = std::sin(lambda * ones) / std::sin(lambda * n);
      basis.v2[m] = std::sin(lambda * twos) / std::sin(lambda * n);
    }
  }
  return basis;
}

SpectrumReport spectral_check(int n, double rho) {
  // The report is meaningful on either side of the critical curve, so the
  // sharpness direction (rho just above -cos(pi/n), possibly positive) is
  // admitted here even though the flow itself runs at rho <= 0.
  if (!(rho >= -1.0 && rho < 1.0)) {
    throw std::invalid_argument("correlation must lie in [-1,1)");
  }
  if (n < 2) throw std::invalid_argument("spectrum needs n >= 2");

  SpectrumReport rep;
  rep.n = n;
  rep.rho = rho;
  rep.below_critical = below_critical(n, rho);

  const Eigen::MatrixXd entries = partition_entries(SetPartition::one_block(n), rho);
  Eigen::EigenSolver<Eigen::MatrixXd> es(entries, false);
  const auto& ev = es.eigenvalues();

  double scale = 1.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    scale = std::max(scale, std::abs(ev(i)));
  }
  const double tol = 1e-9 * scale;

  rep.zero_multiplicity = 0;
  rep.all_nonzero_negative = true;
  double max_re = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    rep.full_eigenvalues.push_back(ev(i));
    if (std::abs(ev(i)) <= tol) {
      ++rep.zero_multiplicity;
    } else {
      max_re = std::max(max_re, ev(i).real());
      if (!(ev(i).real() < -tol)) rep.all_nonzero_negative = false;
    }
  }
  rep.gap = -max_re;

  // Symmetric sector: coordinates k = #2(m) = 1..n-1 (the two uniform
  // colorings decouple as the kernel). The reduction D B with
  // D = diag(k(n-k)) shares its spectrum with the symmetric matrix
  // D^{1/2} B D^{1/2}.
  const int r = n - 1;
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(r, r);
  Eigen::VectorXd dsq(r);
  for (int k = 1; k <= r; ++k) {
    b(k - 1, k - 1) = rho;
    if (k > 1) b(k - 1, k - 2) = 0.5;
    if (k < r) b(k - 1, k) = 0.5;
    dsq(k - 1) = std::sqrt(static_cast<double>(k) * (n - k));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> bs(b);
  Eigen::MatrixXd sym = dsq.asDiagonal() * b * dsq.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> rs(sym);

  rep.tridiagonal_eigenvalues.assign(bs.eigenvalues().data(),
                                     bs.eigenvalues().data() + r);
  rep.reduced_eigenvalues.assign(rs.eigenvalues().data(),
                                 rs.eigenvalues().data() + r);

  rep.tridiagonal_formula_dev = 0;
  for (int j = 1; j <= r; ++j) {
    // ascending order pairs eig_j with j = n-1..1 in the formula
    const double predicted = rho + std::cos((n - j) * std::numbers::pi / n);
    rep.tridiagonal_formula_dev =
        std::max(rep.tridiagonal_formula_dev,
                 std::abs(rep.tridiagonal_eigenvalues[j - 1] - predicted));
  }
  return rep;
}

double critical_p(double rho) {
  if (!(rho >= -1.0 && rho < 1.0)) {
    throw std::invalid_argument("correlation must lie in [-1,1)");
  }
  if (rho == -1.0) return std::numeric_limits<double>::infinity();
  return std::numbers::pi / std::acos(-rho);
}

double critical_rho(double p) {
  if (std::isinf(p)) return -1.0;
  if (!(p > 1.0)) {
    throw std::invalid_argument("moment order must exceed 1");
  }
  return -std::cos(std::numbers::pi / p);
}

bool below_critical(int n, double rho) {
  if (n < 2) throw std::invalid_argument("criticality needs n >= 2");
  if (!(rho >= -1.0 && rho < 1.0)) {
    throw std::invalid_argument("correlation must lie in [-1,1)");
  }
  return rho + std::cos(std::numbers::pi / n) < 0;
}

}  // namespace sbm
