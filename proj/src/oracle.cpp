#include "bellcert/oracle.hpp"

#include <algorithm>
#include <array>

namespace bellcert {

namespace {

constexpr double kRelTol = 1e-12;
constexpr int kMaxSweeps = 10000;
constexpr double kViolationTol = 1e-6;

int party_count(const MatrixXcd& op) {
  const Eigen::Index d = op.rows();
  int n = 0;
  while ((Eigen::Index{1} << n) < d) ++n;
  if ((Eigen::Index{1} << n) != d || op.rows() != op.cols()) {
    throw UsageError("bell operator dimension must be a power of two");
  }
  return n;
}

void require_hermitian(const MatrixXcd& op) {
  const double defect = hermiticity_defect(op);
  if (defect > 1e-10 * std::max(1.0, op.cwiseAbs().maxCoeff())) {
    throw std::domain_error("oracle: operator not Hermitian (asymmetry " +
                            std::to_string(defect) + ")");
  }
}

/// Axis-aligned initializations 0..5, uniform sphere afterwards.
Vector3d init_bloch(int restart, int party, Rng& rng) {
  static const std::array<Vector3d, 6> axes = {
      Vector3d(0, 0, 1), Vector3d(1, 0, 0),  Vector3d(0, 1, 0),
      Vector3d(0, 0, -1), Vector3d(-1, 0, 0), Vector3d(0, -1, 0)};
  if (restart < 6) return axes[restart];
  (void)party;
  return rng.unit_vector();
}

MatrixXcd bloch_density(const Vector3d& v) {
  return 0.5 * (id2() + v.x() * pauli_x() + v.y() * pauli_y() + v.z() * pauli_z());
}

/// Conditional 2x2 operator on `party` given the other parties' states.
MatrixXcd conditional_op(const MatrixXcd& op, const std::vector<MatrixXcd>& rho,
                         int party) {
  const int n = static_cast<int>(rho.size());
  std::vector<MatrixXcd> factors(n);
  for (int i = 0; i < n; ++i) factors[i] = (i == party) ? id2() : rho[i];
  const std::vector<int> dims(n, 2);
  return partial_trace(op * tensor(factors), dims, {party});
}

}  // namespace

double quantum_max(const MatrixXcd& bell_operator) {
  require_hermitian(bell_operator);
  return top_eigenvalue(bell_operator);
}

AscentResult max_over_product_states(const MatrixXcd& bell_operator, int n,
                                     int restarts, std::uint64_t seed) {
  require_hermitian(bell_operator);
  if (party_count(bell_operator) != n) {
    throw UsageError("max_over_product_states: operator dimension is not 2^n");
  }
  if (restarts < 1) throw UsageError("restarts must be >= 1");

  AscentResult best;
  best.value = -std::numeric_limits<double>::infinity();

  for (int r = 0; r < restarts; ++r) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(r));
    std::vector<Vector3d> v(n);
    for (int i = 0; i < n; ++i) v[i] = init_bloch(r, i, rng);

    std::vector<MatrixXcd> rho(n);
    for (int i = 0; i < n; ++i) rho[i] = bloch_density(v[i]);

    double value = -std::numeric_limits<double>::infinity();
    bool converged = false;
    int sweep = 0;
    std::vector<double> trace;
    for (; sweep < kMaxSweeps; ++sweep) {
      double sweep_value = value;
      for (int i = 0; i < n; ++i) {
        const MatrixXcd m = conditional_op(bell_operator, rho, i);
        const double c0 = 0.5 * m.trace().real();
        const Vector3d grad(0.5 * (m * pauli_x()).trace().real(),
                            0.5 * (m * pauli_y()).trace().real(),
                            0.5 * (m * pauli_z()).trace().real());
        if (grad.norm() > 1e-15) v[i] = grad.normalized();
        rho[i] = bloch_density(v[i]);
        sweep_value = c0 + grad.dot(v[i]);
      }
      trace.push_back(sweep_value);
      if (std::abs(sweep_value - value) <= kRelTol * std::max(1.0, std::abs(sweep_value))) {
        value = sweep_value;
        converged = true;
        break;
      }
      value = sweep_value;
    }

    if (value > best.value) {
      best.value = value;
      best.bloch = v;
      best.block_states.clear();
      for (int i = 0; i < n; ++i) best.block_states.push_back(rho[i]);
      best.trace = std::move(trace);
      best.iterations = sweep + 1;
      best.converged = converged;
    }
  }
  best.restarts_used = restarts;
  return best;
}

AscentResult max_over_bipartition(const MatrixXcd& bell_operator,
                                  const std::vector<int>& block, int restarts,
                                  std::uint64_t seed) {
  require_hermitian(bell_operator);
  const int n = party_count(bell_operator);
  if (restarts < 1) throw UsageError("restarts must be >= 1");
  std::vector<bool> in_block(n, false);
  for (int j : block) {
    if (j < 0 || j >= n || in_block[j]) {
      throw UsageError("bipartition block indices must be distinct and in range");
    }
    in_block[j] = true;
  }
  const int k = static_cast<int>(block.size());
  if (k < 1 || k >= n) throw UsageError("bipartition block must be a proper subset");

  std::vector<int> rest;
  for (int j = 0; j < n; ++j) {
    if (!in_block[j]) rest.push_back(j);
  }
  const std::vector<int> dims(n, 2);
  const Eigen::Index dA = Eigen::Index{1} << k;
  const Eigen::Index dB = Eigen::Index{1} << (n - k);

  // Embed block states back into the full (unpermuted) party order.
  auto embed = [&](const MatrixXcd& rhoA, const MatrixXcd& rhoB) {
    std::vector<int> pos(n);  // party -> (which block, index within block)
    for (int q = 0; q < k; ++q) pos[block[q]] = q;
    for (int q = 0; q < n - k; ++q) pos[rest[q]] = k + q;
    const Eigen::Index d = Eigen::Index{1} << n;
    MatrixXcd out(d, d);
    auto bits = [&](Eigen::Index idx, int party) {
      return (idx >> (n - 1 - party)) & 1;  // party 0 is the leftmost factor
    };
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) {
        Eigen::Index ia = 0, ja = 0, ib = 0, jb = 0;
        for (int p = 0; p < n; ++p) {
          if (in_block[p]) {
            ia = (ia << 1) | bits(i, p);
            ja = (ja << 1) | bits(j, p);
          } else {
            ib = (ib << 1) | bits(i, p);
            jb = (jb << 1) | bits(j, p);
          }
        }
        out(i, j) = rhoA(ia, ja) * rhoB(ib, jb);
      }
    }
    return out;
  };

  AscentResult best;
  best.value = -std::numeric_limits<double>::infinity();

  for (int r = 0; r < restarts; ++r) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(r) | (1ULL << 40));
    auto random_block_state = [&](int nq) {
      std::vector<MatrixXcd> qs;
      for (int q = 0; q < nq; ++q) qs.push_back(bloch_density(init_bloch(r, q, rng)));
      return tensor(qs);
    };
    MatrixXcd rhoA = random_block_state(k);
    MatrixXcd rhoB = random_block_state(n - k);

    double value = -std::numeric_limits<double>::infinity();
    bool converged = false;
    int sweep = 0;
    std::vector<double> trace;
    for (; sweep < kMaxSweeps; ++sweep) {
      // Update block A given B, then B given A; each update is the exact
      // maximizer (top eigenprojector of the conditional operator).
      const MatrixXcd condA =
          partial_trace(bell_operator * embed(MatrixXcd::Identity(dA, dA), rhoB), dims,
                        block);
      EigenSystem esA = hermitian_eigen(condA);
      rhoA = esA.vectors.col(0) * esA.vectors.col(0).adjoint();

      const MatrixXcd condB =
          partial_trace(bell_operator * embed(rhoA, MatrixXcd::Identity(dB, dB)), dims,
                        rest);
      EigenSystem esB = hermitian_eigen(condB);
      rhoB = esB.vectors.col(0) * esB.vectors.col(0).adjoint();

      const double sweep_value = esB.values(0);
      trace.push_back(sweep_value);
      if (std::abs(sweep_value - value) <= kRelTol * std::max(1.0, std::abs(sweep_value))) {
        value = sweep_value;
        converged = true;
        break;
      }
      value = sweep_value;
    }

    if (value > best.value) {
      best.value = value;
      best.block_states = {rhoA, rhoB};
      best.trace = std::move(trace);
      best.iterations = sweep + 1;
      best.converged = converged;
    }
  }
  best.restarts_used = restarts;
  return best;
}

AscentResult max_over_bipartition(const MatrixXcd& bell_operator, int k, int restarts,
                                  std::uint64_t seed) {
  const int n = party_count(bell_operator);
  if (k < 1 || k > n - 1) throw UsageError("bipartition size k out of range");
  std::vector<int> block(k);
  for (int i = 0; i < k; ++i) block[i] = i;
  return max_over_bipartition(bell_operator, block, restarts, seed);
}

namespace {

/// All bipartitions as block index lists (each containing party 0).
std::vector<std::vector<int>> all_bipartitions(int n) {
  std::vector<std::vector<int>> out;
  for (unsigned mask = 0; mask + 1 < (1u << (n - 1)); ++mask) {
    std::vector<int> block = {0};
    for (int j = 1; j < n; ++j) {
      if (mask & (1u << (j - 1))) block.push_back(j);
    }
    out.push_back(block);
  }
  return out;
}

double oracle_value(const MatrixXcd& op, int n, const PartitionClass& cls, int restarts,
                    std::uint64_t trial_seed) {
  switch (cls.kind) {
    case PartitionClass::Kind::General:
      return quantum_max(op);
    case PartitionClass::Kind::FullProduct:
      return max_over_product_states(op, n, restarts, trial_seed).value;
    case PartitionClass::Kind::Bipartition:
      return max_over_bipartition(op, cls.block, restarts, trial_seed).value;
    case PartitionClass::Kind::TwoSeparable: {
      double best = -std::numeric_limits<double>::infinity();
      for (const auto& block : all_bipartitions(n)) {
        best = std::max(best,
                        max_over_bipartition(op, block, restarts, trial_seed).value);
      }
      return best;
    }
  }
  throw UsageError("unsupported oracle class");
}

double analytic_bound(const Setting& s, const BellExpression& expr,
                      const PartitionClass& cls) {
  switch (cls.kind) {
    case PartitionClass::Kind::General:
      return expr.factor * mk_quantum_bound(s, expr.t);
    case PartitionClass::Kind::Bipartition:
      return expr.factor * mk_bipartition_bound_subset(s, expr.t, cls.block);
    case PartitionClass::Kind::TwoSeparable:
      switch (expr.preset) {
        case Preset::CHSH:
          return chsh_bounds(s.cosines[0], s.cosines[1]).class_bounds.at("11");
        case Preset::MERMIN3:
          return mermin3_bounds(s.cosines[0], s.cosines[1], s.cosines[2])
              .class_bounds.at("21");
        case Preset::F3_PLUS_F3PRIME:
          return f3sum_bounds(s.cosines[0], s.cosines[1], s.cosines[2])
              .class_bounds.at("21");
        case Preset::MK_GENERAL:
          return expr.factor * mk_two_separable_bound(s, expr.t);
      }
      break;
    case PartitionClass::Kind::FullProduct:
      switch (expr.preset) {
        case Preset::CHSH:
          return chsh_bounds(s.cosines[0], s.cosines[1]).class_bounds.at("11");
        case Preset::MERMIN3:
          return mermin3_bounds(s.cosines[0], s.cosines[1], s.cosines[2])
              .class_bounds.at("111");
        case Preset::F3_PLUS_F3PRIME:
          return f3sum_full_product_bound(s.cosines[0], s.cosines[1], s.cosines[2]);
        case Preset::MK_GENERAL:
          if (expr.n == 2) return expr.factor * mk_bipartition_bound(s, expr.t, 1);
          throw UsageError("no analytic fully separable bound for general MK, n > 2");
      }
      break;
  }
  throw UsageError("unsupported campaign class");
}

/// Sampler biased toward region R (near the negative diagonal), used to
/// guarantee coverage of the interior branch of the F3+F3' bound.
Setting sample_in_region_R(Rng& rng) {
  for (int attempt = 0; attempt < 256; ++attempt) {
    const double t = rng.uniform(0.05, 0.85);
    Setting s;
    s.cosines = {-t, -t, -t};
    for (double& c : s.cosines) {
      c = std::clamp(c + rng.uniform(-0.12, 0.12), -1.0, 1.0);
    }
    if (region_R_member(s.cosines[0], s.cosines[1], s.cosines[2])) return s;
  }
  return Setting{{-0.5, -0.5, -0.5}};
}

}  // namespace

CampaignReport validation_campaign(const BellExpression& expr, const PartitionClass& cls,
                                   int trials, std::uint64_t seed, int restarts) {
  expr.validate();
  if (trials < 1) throw UsageError("campaign needs trials >= 1");
  const int n = expr.n;

  CampaignReport rep;
  rep.trials = trials;
  rep.restarts = restarts;
  rep.seed = seed;
  rep.expression = expr.name();
  rep.cls = cls.label(n);

  const bool stratify_R = expr.preset == Preset::F3_PLUS_F3PRIME &&
                          cls.kind == PartitionClass::Kind::FullProduct;
  const int r_quota = stratify_R ? (trials + 9) / 10 : 0;

  for (int trial = 0; trial < trials; ++trial) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(trial) | (2ULL << 40));
    Setting s;
    if (trial < r_quota) {
      s = sample_in_region_R(rng);
    } else {
      s.cosines.resize(n);
      for (double& c : s.cosines) c = rng.uniform(-1.0, 1.0);
    }
    if (n == 3 && region_R_member(s.cosines[0], s.cosines[1], s.cosines[2])) {
      ++rep.in_region_R;
    }

    const double bound = analytic_bound(s, expr, cls);
    const MatrixXcd op = bell_operator(expr, s);
    const double oracle = oracle_value(op, n, cls, restarts,
                                       seed ^ (0x5bd1e995ULL * (trial + 1)));
    rep.worst_gap = std::max(rep.worst_gap, oracle - bound);
    if (oracle > bound + kViolationTol) {
      rep.violations.push_back({s.cosines, oracle, bound});
    }
  }
  return rep;
}

CampaignReport general_measurement_campaign(const BellExpression& expr,
                                            const PartitionClass& cls, int trials,
                                            std::uint64_t seed, int restarts) {
  expr.validate();
  if (trials < 1) throw UsageError("campaign needs trials >= 1");
  const int n = expr.n;

  CampaignReport rep;
  rep.trials = trials;
  rep.restarts = restarts;
  rep.seed = seed;
  rep.expression = expr.name() + "+general";
  rep.cls = cls.label(n);

  for (int trial = 0; trial < trials; ++trial) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(trial) | (3ULL << 40));
    std::vector<std::pair<Observable, Observable>> pairs;
    for (int i = 0; i < n; ++i) {
      auto sample = [&]() {
        Observable o;
        o.r = rng.uniform();
        o.shift = rng.uniform(-(1.0 - o.r), 1.0 - o.r);
        o.axis = rng.unit_vector();
        return o;
      };
      pairs.emplace_back(sample(), sample());
    }

    const double bound = general_setting_bound(pairs, expr, cls);
    std::vector<std::pair<MatrixXcd, MatrixXcd>> mats;
    for (const auto& [o0, o1] : pairs) {
      mats.emplace_back(observable_matrix(o0), observable_matrix(o1));
    }
    const MKPair ops = mk_operators_from_matrices(mats);
    const MatrixXcd op =
        expr.factor * (std::cos(expr.t) * ops.F + std::sin(expr.t) * ops.Fprime);
    const double oracle = oracle_value(op, n, cls, restarts,
                                       seed ^ (0xc2b2ae35ULL * (trial + 1)));
    rep.worst_gap = std::max(rep.worst_gap, oracle - bound);
    if (oracle > bound + kViolationTol) {
      std::vector<double> flat;
      for (const auto& [o0, o1] : pairs) {
        flat.insert(flat.end(), {o0.r, o0.shift, o1.r, o1.shift});
      }
      rep.violations.push_back({flat, oracle, bound});
    }
  }
  return rep;
}

}  // namespace bellcert
