#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

namespace sbm {

// Right-continuous piecewise-constant function on R: values[j] on
// (breakpoints[j-1], breakpoints[j]), with values.size() ==
// breakpoints.size() + 1. Breakpoints strictly increasing.
class Profile {
 public:
  Profile(std::vector<double> breakpoints, std::vector<double> values);
  static Profile constant(double value);
  static Profile heaviside(double at, double left, double right);

  double operator()(double x) const;
  const std::vector<double>& breakpoints() const { return breaks_; }
  const std::vector<double>& values() const { return values_; }
  double sup() const;
  double inf() const;
  bool nonnegative() const { return inf() >= 0; }

  // Text format: first line is the value on the leftmost interval, each
  // following line is "breakpoint value" with breakpoints ascending.
  static Profile load(std::istream& in);
  void save(std::ostream& out) const;

 private:
  std::vector<double> breaks_;
  std::vector<double> values_;
};

// Standard normal CDF and density.
double gauss_cdf(double z);
double gauss_pdf(double z);

// Heat semigroup at variance t applied to a piecewise-constant profile,
// exactly: sum_j v_j (Phi(z_{j+1}) - Phi(z_j)), z_j = (b_j - x)/sqrt(t).
// t <= 0 returns the (right-continuous) profile value itself.
double semigroup_apply(const Profile& w0, double t, double x);

// d/dx of semigroup_apply for t > 0:
// (1/sqrt(t)) sum_breakpoints (v_right - v_left) phi((b - x)/sqrt(t)).
double semigroup_derivative(const Profile& w0, double t, double x);

enum class Side { left, right };

// Semigroup applied to w0 truncated to one side of a (zero on the other).
double restricted_semigroup(const Profile& w0, double a, Side keep, double t,
                            double x);

// Semigroup of the rate-1 nearest-neighbour walk on Z applied to a bounded
// field, evaluated at site x. Computed as a matrix exponential on a
// periodic window sized so that truncation error stays below tol
// (Chernoff bound on the walk displacement).
double discrete_semigroup(const std::function<double(long)>& v0,
                          double sup_norm, double t, long x,
                          double tol = 1e-10);

}  // namespace sbm
