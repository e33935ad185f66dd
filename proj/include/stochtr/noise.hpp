#pragma once

// Brownian paths, piecewise-constant controls and stochastic exponentials
// F_t = exp(int_0^t h . dB - 1/2 int_0^t |h|^2 ds), all on a uniform grid.
//
// Seeding: every random stream is derived from one root seed by labelled
// splitting (derive_seed), and path i of a stream uses path_seed(stream, i),
// so a path is reproducible regardless of how paths are batched.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stochtr/grid.hpp"
#include "stochtr/stats.hpp"

namespace stochtr {

std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t root, std::string_view label);
std::uint64_t path_seed(std::uint64_t stream, std::uint64_t index);

class BrownianPath {
 public:
  BrownianPath(int dim, TimeGrid time, std::vector<double> increments, std::uint64_t seed);

  int dim() const { return dim_; }
  const TimeGrid& time() const { return time_; }
  int steps() const { return time_.steps; }
  double dt() const { return time_.dt(); }
  std::uint64_t seed() const { return seed_; }

  /// Increment B_{t_{k+1}} - B_{t_k}, k = 0..K-1.
  double increment(int k, int axis = 0) const { return inc_[k * dim_ + axis]; }
  std::span<const double> increments() const { return inc_; }
  /// B_{t_k}, k = 0..K.
  double value(int k, int axis = 0) const { return values_[k * dim_ + axis]; }
  Point value_point(int k) const {
    return {values_[k * dim_], dim_ == 2 ? values_[k * dim_ + 1] : 0.0};
  }

 private:
  int dim_;
  TimeGrid time_;
  std::vector<double> inc_;
  std::vector<double> values_;
  std::uint64_t seed_;
};

BrownianPath sample_path(std::uint64_t seed, int steps, double horizon, int dim = 1);
BrownianPath zero_path(int steps, double horizon, int dim = 1);
/// The same path seen on a grid `factor` times coarser (increments summed).
BrownianPath coarsen(const BrownianPath& path, int factor);

struct ControlPiece {
  double start = 0.0;
  Point value{};
};

/// Deterministic h in L2([0,T]; R^d), constant on each grid cell [t_k, t_{k+1}).
class ControlFunction {
 public:
  /// h = 0 on a one-step unit grid.
  ControlFunction() : dim_(1), values_(1, 0.0), label_("zero") {}
  ControlFunction(TimeGrid time, int dim, std::vector<double> values, std::string label = {});

  static ControlFunction constant(TimeGrid time, Point value, int dim = 1, std::string label = {});
  /// Value of the last piece with start <= t_k on cell k.
  static ControlFunction piecewise(TimeGrid time, const std::vector<ControlPiece>& pieces,
                                   int dim = 1, std::string label = {});

  const TimeGrid& time() const { return time_; }
  int dim() const { return dim_; }
  const std::string& label() const { return label_; }
  double value(int k, int axis = 0) const { return values_[k * dim_ + axis]; }
  std::span<const double> values() const { return values_; }
  double l2_norm() const;
  double sup_norm() const;
  /// int_0^{t_k} h.
  Point integral(int k) const;
  bool is_zero() const;

 private:
  TimeGrid time_;
  int dim_;
  std::vector<double> values_;
  std::string label_;
};

/// Parse an h-spec: a probe name ("zero", "one", "switch") or a list of
/// "t_start:value" pairs separated by commas, e.g. "0:1,0.5:-1".
ControlFunction parse_control(std::string_view spec, TimeGrid time, int dim = 1);
std::vector<std::pair<std::string, std::string>> control_probe_ids();

struct ExponentialSample {
  std::vector<double> values;  // F_{t_k}, k = 0..K
  double terminal() const { return values.back(); }
};

ExponentialSample exponential_of(const ControlFunction& h, const BrownianPath& path);

/// max_k |F_k - (1 + sum_{j<k} h_j F_j dB_j)|.
double verify_exponential_sde(const ControlFunction& h, const BrownianPath& path);

/// sum_{k < upto} Y_k . dB_k for an adapted grid process Y (K*d values).
/// upto < 0 means the whole grid.
double ito_integral(std::span<const double> process, const BrownianPath& path, int upto = -1);

struct IdentityReport {
  Estimate lhs;
  Estimate rhs;
  /// True when the k-sigma intervals of both sides intersect.
  bool overlap(double k) const { return lhs.hi(k) >= rhs.lo(k) && rhs.hi(k) >= lhs.lo(k); }
};

using AdaptedProcessFn = std::function<std::vector<double>(const BrownianPath&)>;

/// Monte Carlo estimates of E[(int_0^t Y.dB) F] and int_0^t h . E[Y_s F] ds
/// over shared paths, with F = F_T.
IdentityReport verify_bf_identity(const AdaptedProcessFn& process, const ControlFunction& h,
                                  std::size_t paths, std::uint64_t seed, int upto = -1);

/// Monte Carlo mean of F_{t_k} at every grid time.
std::vector<Estimate> exponential_means(const ControlFunction& h, std::size_t paths,
                                        std::uint64_t seed);

/// Root-mean-square of verify_exponential_sde over independent paths.
double sde_residual_rms(const ControlFunction& h, std::size_t paths, std::uint64_t seed);

}  // namespace stochtr
