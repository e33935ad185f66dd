#pragma once

// End-to-end experiments producing machine-checkable verdicts.
//
// Each run is a deterministic function of its ExperimentConfig: all random
// streams derive from cfg.seed by labelled splitting and every parallel
// reduction merges in a fixed order.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "stochtr/commutator.hpp"
#include "stochtr/expectation.hpp"
#include "stochtr/parabolic.hpp"

namespace stochtr {

struct ExperimentConfig {
  std::string experiment = "meanreg";

  // field
  std::vector<std::string> drifts{"sign"};
  std::string initial = "gauss";
  MollifierKind mollifier = MollifierKind::Bump;
  MollifierKind second_mollifier = MollifierKind::TruncatedGaussian;
  double eps = 0.1;
  std::vector<double> eps_ladder{0.2, 0.1, 0.05};

  // grid
  double half_width = 3.0;
  int cells = 256;
  int steps = 512;
  double horizon = 1.0;

  // noise
  std::size_t paths = 100000;
  std::uint64_t seed = 20240917;
  std::vector<std::string> controls{"zero", "one", "switch"};
  std::vector<int> sde_steps{64, 256, 1024};
  std::size_t sde_paths = 1000;

  // expectation
  int probes = 5;
  std::vector<int> residual_steps{128, 512};
  std::size_t residual_paths = 100;

  // commutator
  std::vector<double> commutator_ladder{0.2, 0.1, 0.05, 0.025};
  double compact_radius = 1.5;

  // tolerances
  double k_sigma = 4.0;
  double ci_sigma = 3.0;
  double scheme_safety = 2.0;
  double halving = 0.5;
  double min_order = 0.45;
  double negative_factor = 10.0;
  double ratio_cap = 0.6;
  double vanish_tol = 1e-6;

  double spacing() const { return 2.0 * half_width / cells; }
  TimeGrid time() const { return {horizon, steps}; }
};

/// Experiment ids accepted by run_experiment.
const std::vector<std::string>& experiment_ids();

/// Defaults for one experiment (sizes of the acceptance criteria).
ExperimentConfig default_config(const std::string& experiment);

/// Throws ConfigError listing every violated constraint.
void validate(const ExperimentConfig& cfg);

/// Canonical "section.key = value" text; covers every field that affects numerics.
std::string canonical_text(const ExperimentConfig& cfg);
/// FNV-1a 64 of canonical_text, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

struct Assertion {
  std::string name;
  /// The invariant the assertion checks, in plain words.
  std::string invariant;
  bool passed = false;
  double measured = 0.0;
  double threshold = 0.0;
  /// "<=", ">=", "==" or "info".
  std::string relation = "<=";
  /// Negative controls must fail their inner check; `passed` records that they did.
  bool negative_control = false;
};

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

struct Verdict {
  std::string experiment;
  std::vector<Assertion> assertions;
  std::map<std::string, double> measured;
  std::vector<Table> tables;
  std::vector<std::string> notes;

  bool passed() const;
  const Assertion& assertion(const std::string& name) const;
  nlohmann::json to_json() const;
};

/// Stable decimal rendering used in every table.
std::string format_number(double v);

Verdict run_existence(const ExperimentConfig& cfg);
Verdict run_mean_regularity(const ExperimentConfig& cfg);
Verdict run_uniqueness_energy(const ExperimentConfig& cfg);
Verdict run_selection(const ExperimentConfig& cfg);
Verdict run_deterministic_contrast(const ExperimentConfig& cfg);
Verdict run_noise_suite(const ExperimentConfig& cfg);
Verdict run_commutator_suite(const ExperimentConfig& cfg);

/// Validates, then dispatches on cfg.experiment.
Verdict run_experiment(const ExperimentConfig& cfg);

/// Mollified and tabulated drift / initial data for one width.
struct PreparedFields {
  VectorField drift;
  ScalarField initial;
};

PreparedFields prepare_fields(const std::string& drift_id, const std::string& initial_id,
                              MollifierKind kind, double width, double half_width);

}  // namespace stochtr
