#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bellcert/mk.hpp"

namespace bellcert {

/// Separability class against which a bound or verdict is computed.
struct PartitionClass {
  enum class Kind { General, FullProduct, TwoSeparable, Bipartition };
  Kind kind = Kind::General;
  std::vector<int> block;  // Bipartition only: 0-based party indices of one block

  static PartitionClass general() { return {Kind::General, {}}; }
  static PartitionClass full_product() { return {Kind::FullProduct, {}}; }
  static PartitionClass two_separable() { return {Kind::TwoSeparable, {}}; }
  static PartitionClass bipartition(std::vector<int> block) {
    return {Kind::Bipartition, std::move(block)};
  }

  std::string label(int n) const;
};

/// Quantum bound plus per-class separable bounds with achieving parameters.
struct BoundReport {
  double quantum = 0.0;
  std::map<std::string, double> class_bounds;
  std::map<std::string, double> achieving;  // e.g. {"perm", "u", "x", "y", "interior"}
};

/// CHSH: U = 2 sqrt(1 + abar bbar), U_(11) = sqrt(1 + abar bbar) + sqrt(1 - abar bbar).
BoundReport chsh_bounds(double a, double b);

/// Structure function f(v) = sqrt(2 + 2 sqrt(1 - (v^2/4 - 1)^2)) on [2, 2 sqrt(2)];
/// clamps below 2, rejects above 2 sqrt(2) as non-quantum.
double chsh_structure_f(double v);

/// Mermin F3 bounds: quantum U, two-separable U_(21) (max over the three
/// bipartition roles) and fully separable U_(111) (inner angle maximized by
/// grid + golden-section refinement, then over the three roles).
BoundReport mermin3_bounds(double a, double b, double c);

/// Closed form f_(21)(v) = v/2 + sqrt(4 - v^2/4) on [2 sqrt(2), 4];
/// clamps below, rejects above 4 as non-quantum.
double f21_closed(double v);

/// Spectral MK bound: U^(t) = 2 sqrt(delta_n + eps_n sin 2t).
double mk_quantum_bound(const Setting& s, double t);

/// U^(t)_(kk') for the contiguous prefix block of size k; permutations are
/// the caller's concern (or use mk_bipartition_bound_subset).
double mk_bipartition_bound(const Setting& s, double t, int k);
double mk_bipartition_bound_subset(const Setting& s, double t, const std::vector<int>& block);

/// max over all bipartitions of U^(t)_(kk'); valid for the convex hull of
/// bipartition-separable states.
double mk_two_separable_bound(const Setting& s, double t);

/// F3 + F3' bounds (values on the unscaled sum, local bound 4): quantum U,
/// U_(21), and the piecewise fully separable U_(111) over region R.
BoundReport f3sum_bounds(double a, double b, double c);

struct RegionDiagnostics {
  double lhs = 0.0;       // membership expression, <= 0 inside R
  double sqrt_arg = 0.0;  // a^2 + b^2 + c^2 + 2abc
  bool sqrt_arg_negative = false;
};

/// Membership in R = { lhs <= 0 }; negative square-root argument is recorded
/// and treated as non-membership.
bool region_R_member(double a, double b, double c, RegionDiagnostics* diag = nullptr);

/// Per-party fully separable F3+F3' bound at one Omega (interior stationary
/// form inside R, boundary sign enumeration outside).
double f3sum_full_product_bound(double a, double b, double c,
                                std::map<std::string, double>* achieving = nullptr);

enum class ComponentKind { Projective, PlusIdentity, MinusIdentity };

struct ObservableComponent {
  double weight = 0.0;
  ComponentKind kind = ComponentKind::Projective;
};

/// Convex split of a generalized observable into a projective part and
/// +-identity parts: weights (r, (1 - r + r*)/2, (1 - r - r*)/2).
std::vector<ObservableComponent> decompose_observable(const Observable& obs);

struct GeneralBoundDetails {
  double t0 = 1.0;                       // weight of the all-projective term
  std::optional<double> coarse_chsh;     // t0 U(Omega) + 2 (1 - t0), CHSH/General only
  int terms = 0;
};

/// Upper bound for general (non-projective) measurements by enumerating the
/// full convex decomposition; identity components are replaced by effective
/// cosines +-1 with the sign maximizing each term bound.
double general_setting_bound(const std::vector<std::pair<Observable, Observable>>& pairs,
                             const BellExpression& expr, const PartitionClass& cls,
                             GeneralBoundDetails* details = nullptr);

enum class VerdictKind {
  Entangled,
  GenuineTripartiteEntangled,
  NotFullySeparable,
  NotCertified,
};

struct Verdict {
  VerdictKind kind = VerdictKind::NotCertified;
  double threshold = 0.0;
  double margin = 0.0;  // beta_obs - threshold
  bool certified() const { return kind != VerdictKind::NotCertified; }
};

std::string verdict_name(VerdictKind k);

/// Certification from a calibration Bell value and an observed Bell value.
/// CHSH uses the closed-form structure function; Mermin3/TwoSeparable uses
/// f_(21); FullProduct classes need a numeric structure-function envelope
/// (see structure.hpp), passed as a callable upper bound on f.
Verdict certify(const BellExpression& expr, double beta_cal, double beta_obs,
                const PartitionClass& cls,
                const std::function<double(double)>* envelope = nullptr);

/// Quantum maximum of the expression over all settings (domain edge for
/// calibration values).
double expression_quantum_max(const BellExpression& expr);
/// Local (and lower trade-off) edge of the calibration domain.
double expression_local_bound(const BellExpression& expr);

}  // namespace bellcert
