#pragma once

#include <string>
#include <utility>
#include <vector>

#include "bellcert/core.hpp"

namespace bellcert {

inline constexpr int kMaxParties = 6;  // operators are dense, 64x64 at most

/// Per-party cosines between the two measurement Bloch axes.
struct Setting {
  std::vector<double> cosines;

  int n() const { return static_cast<int>(cosines.size()); }
  void validate() const;
};

enum class Preset { CHSH, MERMIN3, F3_PLUS_F3PRIME, MK_GENERAL };

/// Member of the Mermin-Klyshko family: the operator F_n cos t + F'_n sin t,
/// scaled by `factor` for presets that report a rescaled combination.
struct BellExpression {
  int n = 2;
  double t = 0.0;
  double factor = 1.0;
  Preset preset = Preset::MK_GENERAL;

  static BellExpression chsh() { return {2, 0.0, 1.0, Preset::CHSH}; }
  static BellExpression mermin3() { return {3, 0.0, 1.0, Preset::MERMIN3}; }
  /// F3 + F3' stored as t = pi/4 with overall factor sqrt(2), so reported
  /// values equal <F3 + F3'> exactly.
  static BellExpression f3sum() {
    return {3, M_PI / 4.0, std::sqrt(2.0), Preset::F3_PLUS_F3PRIME};
  }
  static BellExpression mk(int n, double t) { return {n, t, 1.0, Preset::MK_GENERAL}; }

  std::string name() const;
  void validate() const;
};

BellExpression expression_by_name(const std::string& name, int n = 0, double t = 0.0);

struct MKPair {
  MatrixXcd F;
  MatrixXcd Fprime;
  int n = 0;
};

/// Recursive Mermin-Klyshko construction from per-party observable pairs.
/// Party 1 is the leftmost tensor factor. Base case:
///   F2 = A1 A'2 + A'1 A2 + A1 A2 - A'1 A'2,  F'2 = A1 A'2 + A'1 A2 - A1 A2 + A'1 A'2.
MKPair mk_operators(const std::vector<std::pair<Observable, Observable>>& pairs);
MKPair mk_operators_from_matrices(const std::vector<std::pair<MatrixXcd, MatrixXcd>>& pairs);

/// Canonical Bloch frame: first axis (0,0,1), second (abar_i, 0, a_i).
std::vector<std::pair<Observable, Observable>> canonical_observables(const Setting& s);

/// <F_n cos t + F'_n sin t> (times the preset factor) on `state`, with
/// observables in the canonical frame of `setting`.
double bell_value(const MatrixXcd& state, const BellExpression& expr, const Setting& setting);

/// Bell operator (factor included) in the canonical frame.
MatrixXcd bell_operator(const BellExpression& expr, const Setting& setting);

struct DeltaEpsilon {
  double delta = 1.0;
  double epsilon = 1.0;
};

/// delta_l = (prod(1+abar_j) + prod(1-abar_j)) / 2,  epsilon_l = prod a_j,
/// over the prefix j = 1..l.
DeltaEpsilon delta_epsilon(const Setting& s, int l);
/// Same over an arbitrary subset of parties (0-based indices).
DeltaEpsilon delta_epsilon_subset(const Setting& s, const std::vector<int>& subset);

/// Frobenius residuals of the operator identities underlying the tilted
/// bounds:
///   F^2 = F'^2 = 4 dhat+,  F+-^2 = 2(dhat+ +- eps),  {F+, F-} = 0,
/// with dhat+- = (prod(1 + abar_j Y_j) +- prod(1 - abar_j Y_j)) / 2 and
/// Y_j the canonical-frame sigma_y on party j.
struct MkIdentityReport {
  double res_F_sq = 0;        // ||F^2 - 4 dhat+||
  double res_Fprime_sq = 0;   // ||F'^2 - 4 dhat+||
  double res_Fplus_sq = 0;    // ||F+^2 - 2(dhat+ + eps)||
  double res_Fminus_sq = 0;   // ||F-^2 - 2(dhat+ - eps)||
  double res_anticommute = 0; // ||{F+, F-}||

  double max_residual() const {
    return std::max({res_F_sq, res_Fprime_sq, res_Fplus_sq, res_Fminus_sq,
                     res_anticommute});
  }
};

MkIdentityReport verify_mk_identities(int n, const Setting& setting);

}  // namespace bellcert
