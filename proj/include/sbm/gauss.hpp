#pragma once

#include <vector>

namespace sbm {

// Gauss-Legendre nodes and weights on [-1, 1]. Results are cached per order.
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

const GaussRule& gauss_legendre(int order);

// Integrate f over [a, b] with a single Gauss-Legendre panel.
template <typename F>
double gauss_panel(const F& f, double a, double b, int order) {
  const GaussRule& rule = gauss_legendre(order);
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double acc = 0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    acc += rule.weights[i] * f(mid + half * rule.nodes[i]);
  }
  return acc * half;
}

}  // namespace sbm
