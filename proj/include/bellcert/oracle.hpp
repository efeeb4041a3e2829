#pragma once

#include <vector>

#include "bellcert/bounds.hpp"

namespace bellcert {

struct AscentResult {
  double value = 0.0;
  std::vector<Vector3d> bloch;         // one per qubit when blocks are single qubits
  std::vector<MatrixXcd> block_states; // density matrices per block
  std::vector<double> trace;           // per-sweep objective of the winning restart
  int iterations = 0;
  int restarts_used = 0;
  bool converged = false;
};

/// Largest eigenvalue of a Hermitian Bell operator.
double quantum_max(const MatrixXcd& bell_operator);

/// Alternating ascent over pure product states: the Bell value is linear in
/// each party's Bloch vector given the others, so every sweep sets one
/// party's vector to the normalized gradient. Best over `restarts`
/// stratified initializations (axis-aligned seeds first, then uniform).
AscentResult max_over_product_states(const MatrixXcd& bell_operator, int n,
                                     int restarts, std::uint64_t seed);

/// Alternating eigen-ascent over one bipartition: given one block's state,
/// the conditional operator on the other block is a partial contraction of
/// the Bell operator; its top eigenprojector is the exact block update.
AscentResult max_over_bipartition(const MatrixXcd& bell_operator,
                                  const std::vector<int>& block, int restarts,
                                  std::uint64_t seed);
AscentResult max_over_bipartition(const MatrixXcd& bell_operator, int k, int restarts,
                                  std::uint64_t seed);

struct CampaignViolation {
  std::vector<double> omega;
  double oracle = 0.0;
  double bound = 0.0;
};

struct CampaignReport {
  int trials = 0;
  int restarts = 0;
  std::uint64_t seed = 0;
  std::string expression;
  std::string cls;
  std::vector<CampaignViolation> violations;
  double worst_gap = -std::numeric_limits<double>::infinity();  // max(oracle - bound)
  int in_region_R = 0;  // f3sum full-product campaigns only
  bool passed() const { return violations.empty(); }
};

/// Samples random settings, runs the class-matching oracle against the
/// analytic bound and records every oracle value above bound + 1e-6. For
/// TwoSeparable the oracle maximum runs over all bipartition assignments.
/// F3+F3' full-product campaigns stratify so that at least a tenth of the
/// trials land inside region R.
CampaignReport validation_campaign(const BellExpression& expr, const PartitionClass& cls,
                                   int trials, std::uint64_t seed, int restarts = 8);

/// Soundness of the general-measurement extension: random generalized
/// observables, oracle on the literal Bell operator vs general_setting_bound.
CampaignReport general_measurement_campaign(const BellExpression& expr,
                                            const PartitionClass& cls, int trials,
                                            std::uint64_t seed, int restarts = 8);

}  // namespace bellcert
