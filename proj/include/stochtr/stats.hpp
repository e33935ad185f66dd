#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace stochtr {

/// Sample mean with its standard error (sample standard deviation / sqrt(n)).
struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;

  double lo(double k) const { return mean - k * std_error; }
  double hi(double k) const { return mean + k * std_error; }
};

/// Running sums for a fixed-length vector of sample means.
class MomentAccumulator {
 public:
  MomentAccumulator() = default;
  explicit MomentAccumulator(std::size_t n) : sum_(n, 0.0), sum_sq_(n, 0.0) {}

  void add(std::size_t i, double v) {
    sum_[i] += v;
    sum_sq_[i] += v * v;
  }
  void count_sample() { ++count_; }
  void merge(const MomentAccumulator& o) {
    for (std::size_t i = 0; i < sum_.size(); ++i) {
      sum_[i] += o.sum_[i];
      sum_sq_[i] += o.sum_sq_[i];
    }
    count_ += o.count_;
  }

  std::size_t size() const { return sum_.size(); }
  std::size_t count() const { return count_; }

  Estimate estimate(std::size_t i) const {
    Estimate e;
    e.samples = count_;
    if (count_ == 0) return e;
    const double n = static_cast<double>(count_);
    e.mean = sum_[i] / n;
    if (count_ > 1) {
      const double var = std::max(0.0, (sum_sq_[i] - n * e.mean * e.mean) / (n - 1.0));
      e.std_error = std::sqrt(var / n);
    }
    return e;
  }

 private:
  std::vector<double> sum_;
  std::vector<double> sum_sq_;
  std::size_t count_ = 0;
};

/// Least-squares slope of log(y) against log(x).
inline double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

}  // namespace stochtr
