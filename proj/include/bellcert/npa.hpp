#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bellcert/core.hpp"

namespace bellcert {

/// p(ab|nu mu) for binary outcomes a,b in {1,2} and settings nu,mu in {0,1}.
/// Outcome 1 carries value +1, outcome 2 value -1.
struct CorrelationTable {
  // indexed [a][b][nu][mu] with a,b in {0,1} for outcomes {1,2}
  double p[2][2][2][2] = {};

  double correlator(int nu, int mu) const;
  double marginal_alice(int nu) const;
  double marginal_bob(int mu) const;
  double chsh_value() const;  // E(01) + E(10) + E(00) - E(11)

  /// Nonnegativity, per-setting normalization, no-signaling (1e-10).
  void validate() const;

  /// p(ab|nu mu) = (1 + lambda (-1)^(a+b+nu mu)) / 4.
  static CorrelationTable lambda_family(double lambda);

  static CorrelationTable from_json_text(const std::string& text);
  std::string to_json_text() const;
};

/// Alice's characterized measurements (Bloch form per measurement).
struct KnownSide {
  std::vector<Observable> measurements;  // exactly two

  double pair_cosine() const;
  void validate() const;

  static KnownSide orthogonal();              // sigma_z, sigma_x
  static KnownSide projective_pair(double cosine);
  static KnownSide from_json_text(const std::string& text);
};

/// Coefficients of O_e† O_e' + O_e'† O_e on {identity, O_e, O_e'} for two
/// known qubit observables with pair cosine a:
///   2 ( rstar0 O_e' + rstar1 O_e + (r0 r1 a - rstar0 rstar1) 1 ).
struct ReducedProduct {
  double c_identity = 0.0;
  double c_e = 0.0;
  double c_eprime = 0.0;
};

ReducedProduct reduce_known_products(const Observable& obs_e, const Observable& obs_eprime);

enum class NpaLevel { One, OneWithProducts };

std::string npa_level_name(NpaLevel level);

struct ProvenanceTerm {
  std::string symbol;  // "E(0,1)", "mA(0)", "mB(1)", "1"
  double coeff = 0.0;
  double value = 0.0;
};

struct MomentUnknown {
  std::string name;   // e.g. "A0*wB"
  double bound = 1.0; // box |x| <= bound
  MatrixXd basis;
};

/// Affine family Gamma(x) = constant + sum_g x_g basis_g with entries
/// classified physical / nonphysical. Entries are normalized symmetrized
/// moments <sym(O_e O_e') (x) sym(O_f O_f')> with sym(PQ) = (P†Q + Q†P)/2,
/// so diagonal entries are 1 and correlator entries equal E(nu, mu).
struct MomentMatrix {
  int d = 0;
  MatrixXd constant;
  std::vector<MomentUnknown> unknowns;
  std::vector<std::vector<bool>> physical;
  std::map<std::pair<int, int>, std::vector<ProvenanceTerm>> provenance;
  std::vector<std::string> labels;
  std::string operator_set;

  MatrixXd at(const VectorXd& x) const;
};

/// Builds Gamma from statistics plus (optionally) known Alice measurements.
/// Alice-side operator products reduce to operational terms when `alice` is
/// given; otherwise both sides contribute unknowns. Bob observables are
/// dichotomic (B^2 = 1). Throws UsageError for signaling input.
MomentMatrix build_moment_matrix(const CorrelationTable& corr,
                                 const std::optional<KnownSide>& alice, NpaLevel level);

struct MarginResult {
  double margin = 0.0;  // max over the box of lambda_min(Gamma(x))
  VectorXd x;
  double start_spread = 0.0;  // agreement across multistarts
};

/// Maximizes lambda_min(Gamma(x)) over the box. The objective is concave,
/// so projected supergradient ascent with diminishing steps followed by
/// cyclic golden-section polish converges to the global maximum;
/// multistarts guard degenerate-eigenvalue corners.
MarginResult psd_completion_margin(const MomentMatrix& mm, int multistarts,
                                   std::uint64_t seed);

inline constexpr double kEntangledMargin = -1e-8;

struct NpaVerdict {
  bool entangled = false;
  double margin = 0.0;
  VectorXd assignment;
  std::string operator_set;
};

NpaVerdict certify_correlation(const CorrelationTable& corr,
                               const std::optional<KnownSide>& alice, NpaLevel level,
                               int multistarts = 16, std::uint64_t seed = 1);

struct ScanResult {
  bool found = false;
  double lambda_star = 0.0;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  double margin_lo = 0.0;   // margin at lambda = 0
  double margin_hi = 0.0;   // margin at lambda = sqrt(2)/2
  bool margin_monotone = true;
  std::vector<std::pair<double, double>> trace;  // (lambda, margin), sorted
  std::string operator_set;
};

/// Bisection on lambda in [0, sqrt(2)/2] for the first margin sign change.
/// tol >= 1e-4. Margins along the trace are checked for monotone decrease.
ScanResult lambda_threshold_scan(const std::optional<KnownSide>& alice, NpaLevel level,
                                 double tol, std::uint64_t seed, int multistarts = 16);

/// --- simulation helpers (oracle side of the NPA tests) ---

/// Correlation from a (possibly entangled) two-qubit state and explicit
/// binary observables via the POVMs (1 +- O)/2.
CorrelationTable simulate_correlation(const MatrixXcd& rho_joint,
                                      const std::vector<Observable>& alice,
                                      const std::vector<Observable>& bob);

/// One-side moment factor Gamma^(X) from a known state and operator list.
MatrixXd simulated_side_gamma(const MatrixXcd& rho, const std::vector<MatrixXcd>& ops);

/// Fully simulated Gamma (every entry evaluated, no unknowns) for a joint
/// state; operator lists per side must match the chosen level.
MatrixXd simulated_gamma(const MatrixXcd& rho_joint, const std::vector<MatrixXcd>& ops_a,
                         const std::vector<MatrixXcd>& ops_b);

/// Operator list {1, M0, M1[, M0 M1]} for one side.
std::vector<MatrixXcd> side_operator_list(const Observable& m0, const Observable& m1,
                                          NpaLevel level);

}  // namespace bellcert
