#include "sbm/heat_flow.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace sbm {

Profile::Profile(std::vector<double> breakpoints, std::vector<double> values)
    : breaks_(std::move(breakpoints)), values_(std::move(values)) {
  if (values_.size() != breaks_.size() + 1) {
    throw std::invalid_argument("profile needs one more value than breakpoints");
  }
  for (std::size_t j = 0; j + 1 < breaks_.size(); ++j) {
    if (!(breaks_[j] < breaks_[j + 1])) {
      throw std::invalid_argument("breakpoints must be strictly increasing");
    }
  }
  for (double b : breaks_) {
    if (!std::isfinite(b)) throw std::invalid_argument("non-finite breakpoint");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite profile value");
  }
}

Profile Profile::constant(double value) { return Profile({}, {value}); }

Profile Profile::heaviside(double at, double left, double right) {
  return Profile({at}, {left, right});
}

double Profile::operator()(double x) const {
  const auto it = std::upper_bound(breaks_.begin(), breaks_.end(), x);
  return values_[static_cast<std::size_t>(it - breaks_.begin())];
}

double Profile::sup() const {
  return *std::max_element(values_.begin(), values_.end());
}

double Profile::inf() const {
  return *std::min_element(values_.begin(), values_.end());
}

Profile Profile::load(std::istream& in) {
  std::string line;
  std::vector<double> breaks, values;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    if (first) {
      double v;
      if (!(row >> v)) throw std::invalid_argument("bad profile header line");
      values.push_back(v);
      first = false;
    } else {
      double b, v;
      if (!(row >> b >> v)) throw std::invalid_argument("bad profile line: " + line);
      breaks.push_back(b);
      values.push_back(v);
    }
  }
  if (first) throw std::invalid_argument("empty profile file");
  return Profile(std::move(breaks), std::move(values));
}

void Profile::save(std::ostream& out) const {
  out.precision(17);
  out << values_[0] << '\n';
  for (std::size_t j = 0; j < breaks_.size(); ++j) {
    out << breaks_[j] << ' ' << values_[j + 1] << '\n';
  }
}

double gauss_cdf(double z) { return 0.5 * std::erfc(-z * std::numbers::sqrt2 / 2); }

double gauss_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2 * std::numbers::pi);
}

double semigroup_apply(const Profile& w0, double t, double x) {
  if (!(t > 0)) return w0(x);
  const double s = std::sqrt(t);
  const auto& b = w0.breakpoints();
  const auto& v = w0.values();
  double acc = 0;
  double prev = 0;  // Phi at the left edge of the current interval
  for (std::size_t j = 0; j < b.size(); ++j) {
    const double cur = gauss_cdf((b[j] - x) / s);
    acc += v[j] * (cur - prev);
    prev = cur;
  }
  acc += v[b.size()] * (1.0 - prev);
  return acc;
}

double semigroup_derivative(const Profile& w0, double t, double x) {
  if (!(t > 0)) {
    throw std::invalid_argument("spatial derivative needs t > 0");
  }
  const double s = std::sqrt(t);
  const auto& b = w0.breakpoints();
  const auto& v = w0.values();
  double acc = 0;
  for (std::size_t j = 0; j < b.size(); ++j) {
    acc += (v[j + 1] - v[j]) * gauss_pdf((b[j] - x) / s);
  }
  return acc / s;
}

double restricted_semigroup(const Profile& w0, double a, Side keep, double t,
                            double x) {
  if (!std::isfinite(a)) throw std::invalid_argument("non-finite cut point");
  const auto& b = w0.breakpoints();
  const auto& v = w0.values();
  std::vector<double> nb, nv;
  if (keep == Side::right) {
    nb.push_back(a);
    nv.push_back(0.0);
    nv.push_back(w0(a));  // right-continuous value just right of the cut
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (b[j] > a) {
        nb.push_back(b[j]);
        nv.push_back(v[j + 1]);
      }
    }
  } else {
    nv.push_back(v[0]);
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (b[j] < a) {
        nb.push_back(b[j]);
        nv.push_back(v[j + 1]);
      }
    }
    nb.push_back(a);
    nv.push_back(0.0);
  }
  return semigroup_apply(Profile(std::move(nb), std::move(nv)), t, x);
}

double discrete_semigroup(const std::function<double(long)>& v0,
                          double sup_norm, double t, long x, double tol) {
  if (!(t >= 0)) throw std::invalid_argument("time must be >= 0");
  if (!(sup_norm >= 0) || !std::isfinite(sup_norm)) {
    throw std::invalid_argument("need a finite sup bound for the field");
  }
  if (!(tol > 0)) throw std::invalid_argument("tolerance must be positive");
  if (t == 0) return v0(x);

  // P(|X_t| >= R) <= 2 exp(t (sqrt(1+(R/t)^2) - 1) - R asinh(R/t)); the
  // periodic window misattributes at most 2*sup per wrapped path.
  const auto tail = [t](double radius) {
    const double r = radius / t;
    return 2.0 * std::exp(t * (std::sqrt(1.0 + r * r) - 1.0) -
                          radius * std::asinh(r));
  };
  long radius = std::max<long>(4, static_cast<long>(
                                      std::ceil(t + 6 * std::sqrt(t + 1.0))));
  while (sup_norm > 0 && 2 * sup_norm * tail(static_cast<double>(radius)) > tol) {
    radius += std::max<long>(1, radius / 4);
    if (radius > 4000) {
      throw std::runtime_error("discrete semigroup window exceeds 4000 sites; "
                               "horizon too large for requested tolerance");
    }
  }

  const long w = 2 * radius + 1;
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(w, w);
  for (long i = 0; i < w; ++i) {
    q(i, i) = -1.0;
    q(i, (i + 1) % w) += 0.5;
    q(i, (i + w - 1) % w) += 0.5;
  }
  const Eigen::MatrixXd p = (t * q).exp();
  double acc = 0;
  for (long k = -radius; k <= radius; ++k) {
    acc += p(radius, radius + k) * v0(x + k);
  }
  return acc;
}

}  // namespace sbm
