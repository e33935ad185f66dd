#pragma once

// Explicit finite-difference solver for
//   dV/dt + (b + h) . grad V = 1/2 lap V,  V(0) = V0,
// on [-L, L]^d with homogeneous Dirichlet data (boundary nodes frozen at V0),
// plus energy bookkeeping for the L2 and Dirichlet-energy bounds.
//
// Advection is first-order upwind following the transport direction of
// +(b + h); diffusion is the centred second difference. Each step of the
// output time grid is split into equal substeps chosen for stability.

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "stochtr/expectation.hpp"
#include "stochtr/field.hpp"
#include "stochtr/noise.hpp"

namespace stochtr {

struct ParabolicProblem {
  VectorField drift;
  ControlFunction control;
  ScalarField initial;
  Grid grid;
  /// Output steps of control.time(); empty keeps every step.
  std::vector<int> store_steps;
  /// Optional right-hand side f(t, x) added to dV/dt (negative controls only).
  std::function<double(double, const Point&)> source;
  /// Substeps per output step; 0 picks the smallest stable count.
  int substeps = 0;
};

struct StabilityLimits {
  double diffusion_dt = 0.0;  // 0.9 dx^2 / (2 d * 1/2)
  double advection_dt = 0.0;  // 0.9 dx / |b + h|_inf
  double positivity_dt = 0.0; // dt (sum_a |a_a| / dx + d / dx^2) <= 1
  double max_speed = 0.0;

  double limit() const;
};

StabilityLimits stability_limits(const ParabolicProblem& problem);
/// Smallest substep count meeting the limits.
int stable_substeps(const ParabolicProblem& problem);

struct ParabolicSolution {
  MeanField field;  // provenance parabolic-solver
  int substeps = 0;
  double sub_dt = 0.0;
  bool max_principle_ok = true;
  double initial_min = 0.0;
  double initial_max = 0.0;
  /// Indexed by output step k = 0..K.
  std::vector<double> energy;               // int V^2
  std::vector<double> gradient_energy;      // int |grad V|^2
  std::vector<double> cumulative_gradient;  // int_0^t int |grad V|^2
  std::vector<double> cumulative_energy;    // int_0^t int V^2
  std::vector<double> cumulative_divergence;  // int_0^t int V^2 div b
  /// Drift sup norm on the grid (including h), used for the growth constant.
  double drift_sup = 0.0;
};

ParabolicSolution solve_parabolic(const ParabolicProblem& problem);

struct EnergyReport {
  std::vector<double> times;
  std::vector<double> energy;
  std::vector<double> gradient_energy;
  std::vector<double> cumulative_gradient;
  double initial_energy = 0.0;
  /// Smallest C with int V^2(t) <= C int V0^2 and int_0^T int |grad V|^2 <= C int V0^2.
  double measured_constant = 0.0;
  /// Growth rate C_b = |b|_inf^2 + 1 and the predicted bound exp(C_b T).
  double growth_rate = 0.0;
  double predicted_constant = 0.0;
  bool bound_ok = false;
  /// int V^2(t) + 1/2 int_0^t int |grad V|^2 <= int V0^2 + C_b int_0^t int V^2 at every t.
  bool rate_inequality_ok = false;
  double rate_inequality_slack = 0.0;  // min over t of rhs - lhs
  /// max_t |int V^2(t) + int_0^t int |grad V|^2 - int V0^2 - int_0^t int V^2 div b|,
  /// the space-integrated balance of the squared equation.
  double balance_residual = 0.0;
  bool finite = false;
};

/// growth_rate overrides |b|_inf^2 + 1 when given (drift sup taken from the solution).
EnergyReport energy_report(const ParabolicSolution& solution,
                           std::optional<double> growth_rate = std::nullopt);

struct DifferenceReport {
  std::vector<double> times;
  std::vector<double> lhs;  // int (V - W)^2 (t)
  std::vector<double> rhs;
  double initial_difference = 0.0;  // int (V0 - W0)^2
  double growth_rate = 0.0;
  double constant = 0.0;  // multiplier of the cross term
  bool holds = false;
  double min_slack = 0.0;
};

/// Difference-energy check
///   int (V - W)^2 (t) <= e^{C_b t} [ int (V0 - W0)^2
///                        + 4 |u0|_inf (int_0^t int |grad W|^2)^{1/2} (int_0^t int |b_v - b_w|^2)^{1/2} ].
/// v and w share grid and snapshots; w_cumulative_gradient is indexed by step 0..K.
DifferenceReport difference_energy(const MeanField& v, const MeanField& w,
                                   std::span<const double> w_cumulative_gradient,
                                   const VectorField& drift_v, const VectorField& drift_w,
                                   std::span<const double> v0, std::span<const double> w0,
                                   double sup_bound);

/// (G_t * u0)(x - shift) by Gauss-Legendre quadrature of the heat kernel,
/// the exact solution for zero drift with int_0^t h = shift.
GridFunction heat_reference(const ScalarField& initial, double t, const Point& shift, const Grid& grid);

}  // namespace stochtr
