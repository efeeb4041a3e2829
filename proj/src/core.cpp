#include "bellcert/core.hpp"

#include <algorithm>
#include <sstream>

namespace bellcert {

namespace {
MatrixXcd make_pauli(int which) {
  MatrixXcd m(2, 2);
  const Complex i(0, 1);
  switch (which) {
    case 0: m << 0, 1, 1, 0; break;
    case 1: m << 0, -i, i, 0; break;
    case 2: m << 1, 0, 0, -1; break;
    default: m << 1, 0, 0, 1; break;
  }
  return m;
}
}  // namespace

const MatrixXcd& pauli_x() { static const MatrixXcd m = make_pauli(0); return m; }
const MatrixXcd& pauli_y() { static const MatrixXcd m = make_pauli(1); return m; }
const MatrixXcd& pauli_z() { static const MatrixXcd m = make_pauli(2); return m; }
const MatrixXcd& id2()     { static const MatrixXcd m = make_pauli(3); return m; }

void Observable::validate() const {
  if (std::abs(axis.norm() - 1.0) > kHermTol) {
    std::ostringstream os;
    os << "observable axis must be unit length (|axis| = " << axis.norm() << ")";
    throw ConstraintError(os.str());
  }
  if (r < -kHermTol || r > 1.0 + kHermTol) {
    throw ConstraintError("observable scale r must lie in [0, 1] (r = " +
                          std::to_string(r) + ")");
  }
  if (r + std::abs(shift) > 1.0 + kHermTol) {
    std::ostringstream os;
    os << "observable must satisfy r + |r*| <= 1 (got " << r + std::abs(shift) << ")";
    throw ConstraintError(os.str());
  }
}

void BlochState::validate() const {
  if (vector.norm() > 1.0 + kHermTol) {
    throw ConstraintError("Bloch vector norm exceeds 1: " + std::to_string(vector.norm()));
  }
}

MatrixXcd BlochState::density() const {
  validate();
  return 0.5 * (id2() + vector.x() * pauli_x() + vector.y() * pauli_y() +
                vector.z() * pauli_z());
}

MatrixXcd observable_matrix(const Observable& obs) {
  obs.validate();
  return obs.r * (obs.axis.x() * pauli_x() + obs.axis.y() * pauli_y() +
                  obs.axis.z() * pauli_z()) +
         obs.shift * id2();
}

MatrixXcd kron(const MatrixXcd& a, const MatrixXcd& b) {
  MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

MatrixXcd tensor(const std::vector<MatrixXcd>& factors) {
  if (factors.empty()) throw UsageError("tensor: empty factor list");
  MatrixXcd out = factors.front();
  for (std::size_t k = 1; k < factors.size(); ++k) out = kron(out, factors[k]);
  return out;
}

double hermiticity_defect(const MatrixXcd& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

bool is_hermitian(const MatrixXcd& m, double tol) {
  return m.rows() == m.cols() && hermiticity_defect(m) <= tol;
}

bool is_density_matrix(const MatrixXcd& m, double tol) {
  if (!is_hermitian(m, tol)) return false;
  if (std::abs(m.trace().real() - 1.0) > tol || std::abs(m.trace().imag()) > tol) {
    return false;
  }
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -1e-10;
}

EigenSystem hermitian_eigen(const MatrixXcd& m) {
  if (m.rows() != m.cols()) throw UsageError("hermitian_eigen: matrix not square");
  const double defect = hermiticity_defect(m);
  if (defect > kHermTol * std::max(1.0, m.cwiseAbs().maxCoeff())) {
    throw std::domain_error("hermitian_eigen: input not Hermitian (asymmetry " +
                            std::to_string(defect) + ")");
  }
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(m);
  const Eigen::Index n = m.rows();
  EigenSystem out;
  out.values = es.eigenvalues().reverse();
  out.vectors = MatrixXcd(n, n);
  for (Eigen::Index k = 0; k < n; ++k) out.vectors.col(k) = es.eigenvectors().col(n - 1 - k);
  return out;
}

double top_eigenvalue(const MatrixXcd& m) { return hermitian_eigen(m).values(0); }

MatrixXcd partial_trace(const MatrixXcd& m, const std::vector<int>& dims,
                        const std::vector<int>& keep) {
  Eigen::Index total = 1;
  for (int d : dims) total *= d;
  if (total != m.rows() || m.rows() != m.cols()) {
    throw UsageError("partial_trace: subsystem dims inconsistent with matrix size");
  }
  const int ns = static_cast<int>(dims.size());
  std::vector<bool> kept(ns, false);
  for (int k : keep) {
    if (k < 0 || k >= ns) throw UsageError("partial_trace: keep index out of range");
    kept[k] = true;
  }

  Eigen::Index dkeep = 1, dtrace = 1;
  for (int s = 0; s < ns; ++s) (kept[s] ? dkeep : dtrace) *= dims[s];

  // Row-major strides, leftmost subsystem most significant.
  std::vector<Eigen::Index> stride(ns);
  Eigen::Index acc = 1;
  for (int s = ns - 1; s >= 0; --s) {
    stride[s] = acc;
    acc *= dims[s];
  }

  std::vector<int> keep_order, trace_order;
  for (int s = 0; s < ns; ++s) (kept[s] ? keep_order : trace_order).push_back(s);

  auto expand = [&](Eigen::Index flat, const std::vector<int>& order) {
    // Map a flat index over `order` to a full-space offset.
    Eigen::Index off = 0;
    for (int s = static_cast<int>(order.size()) - 1; s >= 0; --s) {
      const int sub = order[s];
      off += (flat % dims[sub]) * stride[sub];
      flat /= dims[sub];
    }
    return off;
  };

  MatrixXcd out = MatrixXcd::Zero(dkeep, dkeep);
  for (Eigen::Index i = 0; i < dkeep; ++i) {
    const Eigen::Index oi = expand(i, keep_order);
    for (Eigen::Index j = 0; j < dkeep; ++j) {
      const Eigen::Index oj = expand(j, keep_order);
      Complex sum = 0;
      for (Eigen::Index t = 0; t < dtrace; ++t) {
        const Eigen::Index ot = expand(t, trace_order);
        sum += m(oi + ot, oj + ot);
      }
      out(i, j) = sum;
    }
  }
  return out;
}

double expectation(const MatrixXcd& state, const MatrixXcd& op, double* imag_residual) {
  if (state.rows() != op.rows() || state.cols() != op.cols()) {
    throw UsageError("expectation: dimension mismatch between state and operator");
  }
  const Complex tr = (state * op).trace();
  if (imag_residual) *imag_residual = std::abs(tr.imag());
  return tr.real();
}

std::vector<BlochState> random_product_state(int n, std::uint64_t seed) {
  if (n < 1) throw UsageError("random_product_state: n must be >= 1");
  Rng rng(seed);
  std::vector<BlochState> out;
  out.reserve(n);
  for (int k = 0; k < n; ++k) out.push_back({rng.unit_vector()});
  return out;
}

}  // namespace bellcert
