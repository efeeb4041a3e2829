#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "bellcert/bounds.hpp"

namespace bellcert {

struct StructureRow {
  double v = 0.0;
  double f = 0.0;
  std::vector<double> omega;
  double residual = 0.0;  // |U(omega) - v| after polish
};

/// Sampled structure function f_X(v) = max { U_X(Omega) : U(Omega) = v }.
struct StructureTable {
  std::string expression;
  std::string cls;
  std::vector<StructureRow> rows;
  int omega_resolution = 0;
  double band = 1e-3;

  double worst_residual() const;
};

/// Constrained maximization over the cosine cube: coarse per-axis grid,
/// band selection around each v, then deterministic pattern-search polish
/// with exact re-projection onto U(Omega) = v. Lowest lexicographic Omega
/// wins coarse ties. Throws GridError when a v has no feasible point.
StructureTable compute_structure_fn(const BellExpression& expr, const PartitionClass& cls,
                                    const std::vector<double>& v_grid,
                                    int omega_resolution, double band = 1e-3);

/// Uniform v-grid over the default domain of (expr, cls).
std::vector<double> default_v_grid(const BellExpression& expr, const PartitionClass& cls,
                                   int points);

struct ShapeReport {
  double max_monotone_violation = 0.0;   // f(v_{i+1}) - f(v_i) above 0
  double max_concavity_violation = 0.0;  // chord above midpoint value
  int worst_index = -1;
  double tol = 5e-3;
  bool pass = false;
};

/// Discrete monotone-decrease and midpoint-concavity audit on the grid.
ShapeReport audit_shape(const StructureTable& table, double tol = 5e-3);

/// Conservative upper envelope of an audited, decreasing table: on each
/// segment the larger endpoint value, shifted up by the worst constraint
/// residual (a chord of a concave function is not an upper bound, a
/// per-segment max of a decreasing one is).
class Envelope {
 public:
  Envelope() = default;
  Envelope(std::vector<double> v, std::vector<double> f, double margin);

  double operator()(double v) const;
  double margin() const { return margin_; }
  double v_min() const { return v_.front(); }
  double v_max() const { return v_.back(); }

 private:
  std::vector<double> v_, f_;
  double margin_ = 0.0;
};

/// Requires a passing shape audit; throws UsageError otherwise.
Envelope conservative_envelope(const StructureTable& table, const ShapeReport& audit);

void write_structure_csv(const StructureTable& table, std::ostream& os);
StructureTable read_structure_csv(std::istream& is);

}  // namespace bellcert
