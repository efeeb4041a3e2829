#pragma once

#include <utility>
#include <vector>

#include "bellcert/common.hpp"

namespace bellcert {

// Pauli matrices and the 2x2 identity.
const MatrixXcd& pauli_x();
const MatrixXcd& pauli_y();
const MatrixXcd& pauli_z();
const MatrixXcd& id2();

/// Generalized binary qubit observable in Bloch form:
///   r * (axis . sigma) + shift * 1
/// with r in [0,1], |axis| = 1 and r + |shift| <= 1 so that the spectrum
/// stays inside [-1, 1]. r = 1, shift = 0 is the projective case.
struct Observable {
  double r = 1.0;
  Vector3d axis = Vector3d(0, 0, 1);
  double shift = 0.0;

  static Observable projective(const Vector3d& axis) { return {1.0, axis, 0.0}; }

  bool is_projective(double tol = 1e-12) const {
    return std::abs(r - 1.0) <= tol && std::abs(shift) <= tol;
  }

  /// Throws ConstraintError naming the violated bound.
  void validate() const;
};

/// Single-qubit state as a Bloch vector with |v| <= 1.
struct BlochState {
  Vector3d vector = Vector3d(0, 0, 1);

  void validate() const;
  MatrixXcd density() const;  // (1 + v . sigma) / 2
};

/// r * (axis . sigma) + shift * 1 as a 2x2 Hermitian matrix.
MatrixXcd observable_matrix(const Observable& obs);

/// Kronecker product of the factors in list order.
MatrixXcd tensor(const std::vector<MatrixXcd>& factors);
MatrixXcd kron(const MatrixXcd& a, const MatrixXcd& b);

double hermiticity_defect(const MatrixXcd& m);
bool is_hermitian(const MatrixXcd& m, double tol = kHermTol);
bool is_density_matrix(const MatrixXcd& m, double tol = kHermTol);

struct EigenSystem {
  VectorXd values;    // sorted descending
  MatrixXcd vectors;  // columns matching `values`
};

/// Hermitian eigendecomposition; throws on non-Hermitian input with the
/// asymmetry magnitude in the message.
EigenSystem hermitian_eigen(const MatrixXcd& m);

/// Largest eigenvalue of a Hermitian matrix.
double top_eigenvalue(const MatrixXcd& m);

/// Partial trace keeping the subsystems listed in `keep` (indices into
/// `dims`, leftmost factor first). Trace is preserved.
MatrixXcd partial_trace(const MatrixXcd& m, const std::vector<int>& dims,
                        const std::vector<int>& keep);

/// Re Tr(state * op). `imag_residual`, when given, receives |Im Tr|.
double expectation(const MatrixXcd& state, const MatrixXcd& op,
                   double* imag_residual = nullptr);

/// n independent uniform pure single-qubit states; deterministic per seed.
std::vector<BlochState> random_product_state(int n, std::uint64_t seed);

}  // namespace bellcert
