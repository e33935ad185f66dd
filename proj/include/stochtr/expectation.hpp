#pragma once

// Monte Carlo estimation of V(t, x) = E[u(t, x) F_t] from pathwise transport
// solutions, plus weak pairings and the Ito weak-form residual.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stochtr/characteristics.hpp"
#include "stochtr/noise.hpp"
#include "stochtr/stats.hpp"

namespace stochtr {

enum class Provenance { MonteCarlo, ParabolicSolver, ClosedForm };

std::string to_string(Provenance p);

/// Deterministic grid function V(t_k, x_i) at selected steps, with pointwise
/// standard errors (zero for deterministic provenance).
struct MeanField {
  Grid grid;
  TimeGrid time;
  std::vector<int> steps;
  std::vector<GridFunction> values;
  std::vector<GridFunction> std_errors;
  std::size_t paths = 0;
  Provenance provenance = Provenance::MonteCarlo;
  std::string label;
  /// Monte Carlo mean of the weight at each stored step (empty otherwise).
  std::vector<Estimate> weight_means;

  std::size_t index_of(int step) const;
  const GridFunction& at(int step) const { return values[index_of(step)]; }
  const GridFunction& error_at(int step) const { return std_errors[index_of(step)]; }
  double sup_abs(int step) const;
  double max_error(int step) const;
};

enum class WeightMode { Running, Terminal };

struct EstimateOptions {
  /// Steps at which V is estimated; empty means {K/4, K/2, K} rounded.
  std::vector<int> store_steps;
  WeightMode weight = WeightMode::Running;
  /// Flow lattice; defaults to the evaluation grid.
  std::optional<Grid> lattice;
  std::size_t block_size = 256;
};

std::vector<int> default_snapshots(int steps);

/// One MeanField per control, all driven by the same paths: path m uses
/// path_seed(seed, m) for both the flow and every exponential weight.
/// Throws InsufficientSamples if paths < 100.
std::vector<MeanField> estimate_V(const VectorField& drift, const ScalarField& initial,
                                  const std::vector<ControlFunction>& controls, const Grid& eval,
                                  std::size_t paths, std::uint64_t seed,
                                  const EstimateOptions& options = {});

MeanField estimate_V(const VectorField& drift, const ScalarField& initial, const ControlFunction& h,
                     const Grid& eval, std::size_t paths, std::uint64_t seed,
                     const EstimateOptions& options = {});

/// Smooth compactly supported probe: a product of one-dimensional bumps
/// psi((x_a - c_a) / r) with psi(s) = exp(1 - 1/(1 - s^2)) on |s| < 1.
class TestFunction {
 public:
  TestFunction(Point center, double radius, int dim = 1, double amplitude = 1.0);

  double value(const Point& x) const;
  Point gradient(const Point& x) const;
  double laplacian(const Point& x) const;

  const Point& center() const { return center_; }
  double radius() const { return radius_; }
  int dim() const { return dim_; }
  double amplitude() const { return amplitude_; }
  /// Throws InvalidTestFunction unless the support lies inside [-L, L]^d.
  void require_inside(double half_width) const;

 private:
  Point center_;
  double radius_;
  int dim_;
  double amplitude_;
};

/// The fixed probe set of five bumps at distinct centres and widths.
std::vector<TestFunction> probe_functions(int dim = 1);

/// W_i = int L_i f over the box for the hat basis L_i of the grid, so that
/// sum_i u_i W_i is the exact pairing of the piecewise-(bi)linear interpolant
/// of u with f (Gauss-Legendre on every cell).
GridFunction hat_moments(const Grid& grid, const std::function<double(const Point&)>& f);

/// (u(t_k), phi) at every stored step, pairing the grid interpolant of u.
std::vector<double> weak_pairing(const TransportSample& sample, const TestFunction& phi);
std::vector<double> weak_pairing(const MeanField& field, const TestFunction& phi);
double weak_pairing(const Grid& grid, std::span<const double> values, const TestFunction& phi);

struct ResidualOptions {
  /// Omit the 1/2 (u, lap phi) Ito correction (negative control).
  bool drop_laplacian = false;
};

/// Hat moments of phi, 1/2 lap phi, grad phi and b.grad phi + phi div b
/// (the last at t = 0), reusable across paths for an autonomous drift.
struct ResidualWeights {
  Grid grid;
  GridFunction value;
  GridFunction half_laplacian;
  std::array<GridFunction, 2> gradient;
  GridFunction drift;
};

ResidualWeights residual_weights(const Grid& grid, const VectorField& drift, const TestFunction& phi,
                                 const ResidualOptions& options = {});

/// R_k = (u_k, phi) - (u_0, phi) - sum_{j<k} [(u_j, b.grad phi + phi div b) dt
///       + (u_j, grad phi) . dB_j + 1/2 (u_j, lap phi) dt]
/// for k = 0..K. The sample must store every step of the path's grid.
std::vector<double> weak_residual(const TransportSample& sample, const BrownianPath& path,
                                  const VectorField& drift, const TestFunction& phi,
                                  const ResidualOptions& options = {});
/// Same, with precomputed weights (autonomous drift).
std::vector<double> weak_residual(const TransportSample& sample, const BrownianPath& path,
                                  const ResidualWeights& weights);

}  // namespace stochtr
