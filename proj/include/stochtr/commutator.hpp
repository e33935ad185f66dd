#pragma once

// R_eps(f, g) = (f . grad)(rho_eps * g) - rho_eps * (f . grad g) on a grid.
//
// Both convolutions use the same normalised grid taps of rho_eps, so the
// commutator of a constant f vanishes up to rounding. Nodes closer than eps
// to the box edge carry no value (set to zero, flagged invalid).

#include <vector>

#include "stochtr/field.hpp"

namespace stochtr {

struct CommutatorField {
  Grid grid;
  double width = 0.0;
  GridFunction values;
  std::vector<char> valid;
};

/// Grad g is analytic when available; otherwise g is pre-smoothed at width/8
/// with the same mollifier family and differenced.
/// Throws UnresolvedMollifier if width < 4 * grid spacing.
CommutatorField compute_commutator(const VectorField& f, const ScalarField& g, const Mollifier& rho,
                                   const Grid& grid);

/// Variant with separate kernels for the two terms; only meaningful as a
/// broken control (the constant-field cancellation needs one kernel).
CommutatorField compute_commutator(const VectorField& f, const ScalarField& g, const Mollifier& lead,
                                   const Mollifier& inner, const Grid& grid);

/// int_K |R| with K = [-radius, radius]^d; throws GridMismatch if K reaches
/// invalid nodes.
double l1loc_norm(const CommutatorField& r, double radius);

struct CommutatorRow {
  double width = 0.0;
  double norm = 0.0;
};

struct CommutatorStudy {
  VectorField f;
  ScalarField g;
  MollifierKind kind = MollifierKind::Bump;
  std::vector<double> ladder{0.2, 0.1, 0.05, 0.025};
  double radius = 1.5;  // K = [-radius, radius]^d
  /// Grid spacing; 0 picks smallest width / 8.
  double spacing = 0.0;
};

struct CommutatorTable {
  std::vector<CommutatorRow> rows;
  bool finite = false;
  double last_over_first = 0.0;
  double max_successive_ratio = 0.0;
};

/// Throws ConfigError if the ladder is not strictly decreasing or K is not
/// strictly inside the box minus the largest width.
CommutatorTable convergence_study(const CommutatorStudy& study);

}  // namespace stochtr
