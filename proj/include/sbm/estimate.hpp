#pragma once

#include <cmath>
#include <span>

namespace sbm {

struct MomentEstimate {
  double mean = 0;
  double se = 0;
  long replicas = 0;
};

inline MomentEstimate summarize_values(std::span<const double> values) {
  MomentEstimate est;
  est.replicas = static_cast<long>(values.size());
  if (values.empty()) return est;
  double sum = 0;
  for (double v : values) sum += v;
  est.mean = sum / static_cast<double>(values.size());
  double ss = 0;
  for (double v : values) ss += (v - est.mean) * (v - est.mean);
  est.se = values.size() > 1
               ? std::sqrt(ss / (static_cast<double>(values.size()) - 1) /
                           static_cast<double>(values.size()))
               : 0;
  return est;
}

}  // namespace sbm
