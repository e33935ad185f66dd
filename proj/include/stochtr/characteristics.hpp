#pragma once

// Stochastic characteristics dX = b(t, X) dt + dB for a smooth (mollified)
// drift, the inverse flow on an evaluation grid, and the pathwise transport
// solution u(t, x) = u0(phi_t^{-1}(x)).
//
// The noise is spatially constant, so all lattice trajectories of one path
// share the same increments.

#include <span>
#include <string>
#include <vector>

#include "stochtr/field.hpp"
#include "stochtr/noise.hpp"

namespace stochtr {

struct FlowOptions {
  /// Steps at which lattice positions are kept; empty keeps every step.
  std::vector<int> store_steps;
  /// Trajectories leaving [-R, R]^d set the clipped flag; 0 means the lattice box.
  double outer_half_width = 0.0;
};

struct FlowMap {
  Grid lattice;
  TimeGrid time;
  std::vector<int> stored_steps;
  /// Node-major positions X_k(x0) for each stored step.
  std::vector<std::vector<double>> positions;
  bool clipped = false;
  std::string drift_id;

  const std::vector<double>& at(int step) const;
};

FlowMap solve_forward(const VectorField& drift, const BrownianPath& path, const Grid& lattice,
                      const FlowOptions& options = {});

/// One Euler-Maruyama step applied to every lattice point in place.
/// Returns true when some point ends outside [-outer, outer]^d.
bool euler_step(const VectorField& drift, double t, double dt, const Point& increment,
                std::span<double> positions, int dim, double outer);

/// Inverse of x0 -> X(x0) on the nodes of `eval`, written node-major into
/// `preimages`. d = 1 uses monotone piecewise-linear inversion, d = 2
/// barycentric interpolation on the deformed lattice triangulation. Points not
/// covered by the deformed lattice are pulled back by the displacement of the
/// nearest lattice edge point (the drift vanishes there).
/// Throws NonInvertibleFlow if the map folds beyond round-off.
void invert_positions(const Grid& lattice, std::span<const double> positions, const Grid& eval,
                      std::span<double> preimages);

struct InverseMap {
  Grid grid;
  int step = 0;
  std::vector<double> preimages;
};

InverseMap invert_flow(const FlowMap& flow, int step, const Grid& eval);

struct TransportSample {
  Grid grid;
  TimeGrid time;
  std::vector<int> steps;
  std::vector<GridFunction> values;
  double bound = 0.0;  // sup |u0|

  const GridFunction& at(int step) const;
};

TransportSample transport_solution(const ScalarField& initial, const FlowMap& flow,
                                   const Grid& eval);

/// Zero-noise pipeline (classical characteristics).
TransportSample deterministic_solve(const VectorField& drift, const ScalarField& initial,
                                    const Grid& lattice, TimeGrid time, const Grid& eval,
                                    std::vector<int> store_steps = {});

}  // namespace stochtr
