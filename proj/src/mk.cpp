#include "bellcert/mk.hpp"

#include <algorithm>

namespace bellcert {

void Setting::validate() const {
  if (cosines.empty()) throw UsageError("setting: at least one cosine required");
  for (double c : cosines) {
    if (std::abs(c) > 1.0 + 1e-12) {
      throw UsageError("setting: cosine out of [-1, 1]: " + std::to_string(c));
    }
  }
}

std::string BellExpression::name() const {
  switch (preset) {
    case Preset::CHSH: return "chsh";
    case Preset::MERMIN3: return "mermin3";
    case Preset::F3_PLUS_F3PRIME: return "f3sum";
    case Preset::MK_GENERAL: return "mk";
  }
  return "mk";
}

void BellExpression::validate() const {
  if (n < 2) throw UsageError("bell expression: party count must be >= 2");
  if (n > kMaxParties) {
    throw ResourceError("bell expression: party count capped at " +
                        std::to_string(kMaxParties));
  }
  switch (preset) {
    case Preset::CHSH:
      if (n != 2 || t != 0.0) throw UsageError("chsh preset requires n=2, t=0");
      break;
    case Preset::MERMIN3:
      if (n != 3 || t != 0.0) throw UsageError("mermin3 preset requires n=3, t=0");
      break;
    case Preset::F3_PLUS_F3PRIME:
      if (n != 3) throw UsageError("f3sum preset requires n=3");
      break;
    case Preset::MK_GENERAL:
      break;
  }
}

BellExpression expression_by_name(const std::string& name, int n, double t) {
  if (name == "chsh") return BellExpression::chsh();
  if (name == "mermin3") return BellExpression::mermin3();
  if (name == "f3sum") return BellExpression::f3sum();
  if (name == "mk") {
    if (n < 2) throw UsageError("mk inequality requires --n >= 2");
    return BellExpression::mk(n, t);
  }
  throw UsageError("unknown inequality '" + name + "'");
}

MKPair mk_operators_from_matrices(
    const std::vector<std::pair<MatrixXcd, MatrixXcd>>& pairs) {
  const int n = static_cast<int>(pairs.size());
  if (n < 2) throw UsageError("mk_operators: need at least two parties");
  if (n > kMaxParties) {
    throw ResourceError("mk_operators: party count capped at " +
                        std::to_string(kMaxParties));
  }

  const auto& [a1, a1p] = pairs[0];
  const auto& [a2, a2p] = pairs[1];
  MatrixXcd F = kron(a1, a2p) + kron(a1p, a2) + kron(a1, a2) - kron(a1p, a2p);
  MatrixXcd Fp = kron(a1, a2p) + kron(a1p, a2) - kron(a1, a2) + kron(a1p, a2p);

  for (int k = 2; k < n; ++k) {
    const MatrixXcd plus = 0.5 * (pairs[k].first + pairs[k].second);
    const MatrixXcd minus = 0.5 * (pairs[k].first - pairs[k].second);
    MatrixXcd Fn = kron(F, plus) + kron(Fp, minus);
    MatrixXcd Fpn = kron(Fp, plus) - kron(F, minus);
    F = std::move(Fn);
    Fp = std::move(Fpn);
  }
  return {std::move(F), std::move(Fp), n};
}

MKPair mk_operators(const std::vector<std::pair<Observable, Observable>>& pairs) {
  std::vector<std::pair<MatrixXcd, MatrixXcd>> mats;
  mats.reserve(pairs.size());
  for (const auto& [a, ap] : pairs) {
    mats.emplace_back(observable_matrix(a), observable_matrix(ap));
  }
  return mk_operators_from_matrices(mats);
}

std::vector<std::pair<Observable, Observable>> canonical_observables(const Setting& s) {
  s.validate();
  std::vector<std::pair<Observable, Observable>> out;
  out.reserve(s.cosines.size());
  for (double a : s.cosines) {
    const double abar = sbar(a);
    out.emplace_back(Observable::projective({0, 0, 1}),
                     Observable::projective({abar, 0, a}));
  }
  return out;
}

MatrixXcd bell_operator(const BellExpression& expr, const Setting& setting) {
  expr.validate();
  setting.validate();
  if (setting.n() != expr.n) {
    throw UsageError("bell_operator: setting has " + std::to_string(setting.n()) +
                     " cosines, expression expects " + std::to_string(expr.n));
  }
  const MKPair ops = mk_operators(canonical_observables(setting));
  return expr.factor * (std::cos(expr.t) * ops.F + std::sin(expr.t) * ops.Fprime);
}

double bell_value(const MatrixXcd& state, const BellExpression& expr,
                  const Setting& setting) {
  const MatrixXcd op = bell_operator(expr, setting);
  if (state.rows() != op.rows() || state.cols() != op.cols()) {
    throw UsageError("bell_value: state dimension must be 2^n");
  }
  return expectation(state, op);
}

DeltaEpsilon delta_epsilon(const Setting& s, int l) {
  if (l < 1 || l > s.n()) throw UsageError("delta_epsilon: prefix length out of range");
  std::vector<int> prefix(l);
  for (int i = 0; i < l; ++i) prefix[i] = i;
  return delta_epsilon_subset(s, prefix);
}

DeltaEpsilon delta_epsilon_subset(const Setting& s, const std::vector<int>& subset) {
  s.validate();
  double plus = 1.0, minus = 1.0, eps = 1.0;
  for (int j : subset) {
    if (j < 0 || j >= s.n()) throw UsageError("delta_epsilon: party index out of range");
    const double abar = sbar(s.cosines[j]);
    plus *= 1.0 + abar;
    minus *= 1.0 - abar;
    eps *= s.cosines[j];
  }
  DeltaEpsilon de{0.5 * (plus + minus), eps};
  if (de.delta < std::abs(de.epsilon) - 1e-12) {
    throw std::runtime_error("delta_epsilon: sanity check delta >= |epsilon| failed");
  }
  return de;
}

MkIdentityReport verify_mk_identities(int n, const Setting& setting) {
  if (n < 2 || n > kMaxParties) {
    throw UsageError("verify_mk_identities: n must be in [2, " +
                     std::to_string(kMaxParties) + "]");
  }
  if (setting.n() != n) throw UsageError("verify_mk_identities: setting size mismatch");
  setting.validate();

  const MKPair ops = mk_operators(canonical_observables(setting));
  const Eigen::Index dim = ops.F.rows();

  // dhat_n+ = (prod_j (1 + abar_j Y_j) + prod_j (1 - abar_j Y_j)) / 2.
  // In the canonical frame A_j A'_j = a_j + i abar_j sigma_y, so Y_j = sigma_y.
  std::vector<MatrixXcd> fplus, fminus;
  for (int j = 0; j < n; ++j) {
    const double abar = sbar(setting.cosines[j]);
    fplus.push_back(id2() + abar * pauli_y());
    fminus.push_back(id2() - abar * pauli_y());
  }
  const MatrixXcd delta_hat = 0.5 * (tensor(fplus) + tensor(fminus));
  const double eps = delta_epsilon(setting, n).epsilon;

  const MatrixXcd Fplus = 0.5 * (ops.F + ops.Fprime);
  const MatrixXcd Fminus = 0.5 * (ops.F - ops.Fprime);
  const MatrixXcd eye = MatrixXcd::Identity(dim, dim);

  MkIdentityReport rep;
  rep.res_F_sq = (ops.F * ops.F - 4.0 * delta_hat).norm();
  rep.res_Fprime_sq = (ops.Fprime * ops.Fprime - 4.0 * delta_hat).norm();
  rep.res_Fplus_sq = (Fplus * Fplus - 2.0 * (delta_hat + eps * eye)).norm();
  rep.res_Fminus_sq = (Fminus * Fminus - 2.0 * (delta_hat - eps * eye)).norm();
  rep.res_anticommute = (Fplus * Fminus + Fminus * Fplus).norm();
  return rep;
}

}  // namespace bellcert
