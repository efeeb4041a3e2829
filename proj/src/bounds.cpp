#include "bellcert/bounds.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace bellcert {

namespace {

constexpr double kTwoSqrtTwo = 2.0 * M_SQRT2;

/// Golden-section maximization on [lo, hi] for a unimodal-enough section.
double golden_max(const std::function<double(double)>& f, double lo, double hi,
                  double tol, double* argmax) {
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - gr * (b - a);
  double d = a + gr * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc > fd) {
      b = d; d = c; fd = fc;
      c = b - gr * (b - a);
      fc = f(c);
    } else {
      a = c; c = d; fc = fd;
      d = a + gr * (b - a);
      fd = f(d);
    }
  }
  const double u = 0.5 * (a + b);
  if (argmax) *argmax = u;
  return f(u);
}

/// max_u of `f` over [0, 2pi): dense grid then golden refinement.
double periodic_max(const std::function<double(double)>& f, double* argmax) {
  constexpr int kGrid = 1024;
  double best = -std::numeric_limits<double>::infinity();
  int best_i = 0;
  for (int i = 0; i < kGrid; ++i) {
    const double u = 2.0 * M_PI * i / kGrid;
    const double v = f(u);
    if (v > best) {
      best = v;
      best_i = i;
    }
  }
  const double h = 2.0 * M_PI / kGrid;
  const double u0 = 2.0 * M_PI * best_i / kGrid;
  return golden_max(f, u0 - h, u0 + h, 1e-10, argmax);
}

double mermin3_u21_role(double pair1, double pair2, double single) {
  const double pq = sbar(pair1) * sbar(pair2);
  const double cross = sbar(single) * (sbar(pair1) + sbar(pair2));
  return safe_sqrt(1.0 + pq + cross) + safe_sqrt(std::max(0.0, 1.0 + pq - cross));
}

double mermin3_u111_role(double a, double b, double c, double* ustar) {
  const double ab_bar = sbar(a) * sbar(b);
  const double ab = a * b;
  const double cbar = sbar(c);
  auto g = [&](double u) {
    const double common = 1.0 + c * std::cos(u);
    const double tilt = ab * cbar * std::sin(u);
    double total = 0.0;
    for (double sign : {1.0, -1.0}) {
      total += std::sqrt(std::max(0.0, 0.5 * ((1.0 + sign * ab_bar) * common + tilt)));
    }
    return total;
  };
  return periodic_max(g, ustar);
}

void check_cosine(double c, const char* name) {
  if (std::abs(c) > 1.0 + 1e-12) {
    std::ostringstream os;
    os << "cosine " << name << " out of [-1, 1]: " << c;
    throw UsageError(os.str());
  }
}

}  // namespace

std::string PartitionClass::label(int n) const {
  switch (kind) {
    case Kind::General: return "general";
    case Kind::FullProduct: {
      std::string s(static_cast<std::size_t>(std::max(n, 1)), '1');
      return s;  // "11", "111", ...
    }
    case Kind::TwoSeparable: return n == 2 ? "11" : "21";
    case Kind::Bipartition: {
      std::ostringstream os;
      os << block.size() << "|" << n - static_cast<int>(block.size());
      return os.str();
    }
  }
  return "general";
}

BoundReport chsh_bounds(double a, double b) {
  check_cosine(a, "a");
  check_cosine(b, "b");
  const double p = sbar(a) * sbar(b);
  BoundReport rep;
  rep.quantum = 2.0 * std::sqrt(1.0 + p);
  rep.class_bounds["11"] = std::sqrt(1.0 + p) + std::sqrt(std::max(0.0, 1.0 - p));
  return rep;
}

double chsh_structure_f(double v) {
  if (v > kTwoSqrtTwo + 1e-9) {
    throw CalibrationError("chsh_structure_f: calibration value " + std::to_string(v) +
                           " exceeds the quantum maximum 2*sqrt(2)");
  }
  v = std::clamp(v, 2.0, kTwoSqrtTwo);
  const double w = v * v / 4.0 - 1.0;  // in [0, 1]
  return std::sqrt(2.0 + 2.0 * std::sqrt(std::max(0.0, 1.0 - w * w)));
}

BoundReport mermin3_bounds(double a, double b, double c) {
  check_cosine(a, "a");
  check_cosine(b, "b");
  check_cosine(c, "c");
  const double ab = sbar(a) * sbar(b), ac = sbar(a) * sbar(c), bc = sbar(b) * sbar(c);

  BoundReport rep;
  rep.quantum = 2.0 * std::sqrt(1.0 + ab + ac + bc);

  // The three roles: which party the bipartition separates off.
  const std::array<std::array<double, 3>, 3> roles = {{{b, c, a}, {a, c, b}, {a, b, c}}};

  double u21 = -1.0;
  int perm21 = 0;
  for (int r = 0; r < 3; ++r) {
    const double v = mermin3_u21_role(roles[r][0], roles[r][1], roles[r][2]);
    if (v > u21) {
      u21 = v;
      perm21 = r;
    }
  }
  rep.class_bounds["21"] = u21;

  double u111 = -1.0, ubest = 0.0;
  int perm111 = 0;
  for (int r = 0; r < 3; ++r) {
    double ustar = 0.0;
    const double v = mermin3_u111_role(roles[r][0], roles[r][1], roles[r][2], &ustar);
    if (v > u111) {
      u111 = v;
      ubest = ustar;
      perm111 = r;
    }
  }
  rep.class_bounds["111"] = u111;
  rep.achieving["perm_21"] = perm21;
  rep.achieving["perm_111"] = perm111;
  rep.achieving["u"] = ubest;
  return rep;
}

double f21_closed(double v) {
  if (v > 4.0 + 1e-9) {
    throw CalibrationError("f21_closed: calibration value " + std::to_string(v) +
                           " exceeds the quantum maximum 4");
  }
  v = std::clamp(v, kTwoSqrtTwo, 4.0);
  return v / 2.0 + std::sqrt(std::max(0.0, 4.0 - v * v / 4.0));
}

double mk_quantum_bound(const Setting& s, double t) {
  const DeltaEpsilon de = delta_epsilon(s, s.n());
  const double arg = de.delta + de.epsilon * std::sin(2.0 * t);
  if (arg < -1e-12) {
    throw std::runtime_error("mk_quantum_bound: negative radicand " + std::to_string(arg));
  }
  return 2.0 * std::sqrt(std::max(0.0, arg));
}

double mk_bipartition_bound_subset(const Setting& s, double t,
                                   const std::vector<int>& block) {
  s.validate();
  const int n = s.n();
  if (block.empty() || static_cast<int>(block.size()) >= n) {
    throw UsageError("bipartition block must be a nonempty proper subset");
  }
  std::vector<bool> in_block(n, false);
  for (int j : block) {
    if (j < 0 || j >= n || in_block[j]) {
      throw UsageError("bipartition block indices must be distinct and in range");
    }
    in_block[j] = true;
  }
  std::vector<int> rest;
  for (int j = 0; j < n; ++j) {
    if (!in_block[j]) rest.push_back(j);
  }

  const DeltaEpsilon k = delta_epsilon_subset(s, block);
  const DeltaEpsilon kp = delta_epsilon_subset(s, rest);
  const double alpha = k.delta * kp.delta + k.epsilon * kp.epsilon * std::sin(2.0 * t);
  const double inner =
      alpha * alpha - (k.delta * k.delta - k.epsilon * k.epsilon) *
                          (kp.delta * kp.delta - kp.epsilon * kp.epsilon);
  // inner may dip below zero by float noise only
  return std::sqrt(std::max(0.0, 2.0 * alpha + 2.0 * safe_sqrt(inner, 1e-9)));
}

double mk_bipartition_bound(const Setting& s, double t, int k) {
  if (k < 1 || k > s.n() - 1) {
    throw UsageError("bipartition size k must satisfy 1 <= k <= n-1");
  }
  std::vector<int> block(k);
  for (int i = 0; i < k; ++i) block[i] = i;
  return mk_bipartition_bound_subset(s, t, block);
}

double mk_two_separable_bound(const Setting& s, double t) {
  const int n = s.n();
  if (n < 2) throw UsageError("two-separable bound requires n >= 2");
  double best = 0.0;
  // Enumerate subsets containing party 0 (complement symmetry halves the
  // work); the all-parties mask is the excluded trivial cut.
  for (unsigned mask = 0; mask + 1 < (1u << (n - 1)); ++mask) {
    std::vector<int> block = {0};
    for (int j = 1; j < n; ++j) {
      if (mask & (1u << (j - 1))) block.push_back(j);
    }
    best = std::max(best, mk_bipartition_bound_subset(s, t, block));
  }
  return best;
}

bool region_R_member(double a, double b, double c, RegionDiagnostics* diag) {
  check_cosine(a, "a");
  check_cosine(b, "b");
  check_cosine(c, "c");
  const double sq = a * a + b * b + c * c + 2.0 * a * b * c;
  RegionDiagnostics d;
  d.sqrt_arg = sq;
  if (sq < 0.0) {
    d.sqrt_arg_negative = true;
    d.lhs = std::numeric_limits<double>::quiet_NaN();
    if (diag) *diag = d;
    return false;
  }
  d.lhs = a * a * b * b + a * a * c * c + b * b * c * c - a * a * b * b * c * c +
          2.0 * a * b * c * std::sqrt(sq);
  if (diag) *diag = d;
  return d.lhs <= 0.0;
}

double f3sum_full_product_bound(double a, double b, double c,
                                std::map<std::string, double>* achieving) {
  const double w = a * b * c;
  const bool interior = region_R_member(a, b, c) && std::abs(w) > 0.0;
  if (interior) {
    // Interior stationary point; the argument is nonnegative throughout R.
    const double arg = 2.0 + (a * b) / c + (a * c) / b + (b * c) / a - w;
    if (arg > 1e-14) {
      if (achieving) {
        (*achieving)["interior"] = 1.0;
      }
      return 2.0 * sbar(a) * sbar(b) * sbar(c) / std::sqrt(arg);
    }
  }
  double best = -1.0;
  int bx = 1, by = 1;
  for (int x : {1, -1}) {
    for (int y : {1, -1}) {
      const double v = std::sqrt(
          std::max(0.0, 2.0 * (1.0 + x * a) * (1.0 + y * b) * (1.0 + x * y * c)));
      if (v > best) {
        best = v;
        bx = x;
        by = y;
      }
    }
  }
  if (achieving) {
    (*achieving)["interior"] = 0.0;
    (*achieving)["x"] = bx;
    (*achieving)["y"] = by;
  }
  return best;
}

BoundReport f3sum_bounds(double a, double b, double c) {
  check_cosine(a, "a");
  check_cosine(b, "b");
  check_cosine(c, "c");
  const double ab = sbar(a) * sbar(b), ac = sbar(a) * sbar(c), bc = sbar(b) * sbar(c);

  BoundReport rep;
  rep.quantum = std::sqrt(std::max(0.0, 8.0 * (1.0 + ab + ac + bc + a * b * c)));

  const std::array<std::array<double, 3>, 3> roles = {{{b, c, a}, {a, c, b}, {a, b, c}}};
  double u21 = -1.0;
  int perm21 = 0, sign21 = 1;
  for (int r = 0; r < 3; ++r) {
    const double x = roles[r][0], y = roles[r][1], s = roles[r][2];
    for (int sg : {1, -1}) {
      const double v = 2.0 * std::sqrt(std::max(
                                 0.0, (1.0 + sg * s) * (1.0 + sbar(x) * sbar(y) + sg * x * y)));
      if (v > u21) {
        u21 = v;
        perm21 = r;
        sign21 = sg;
      }
    }
  }
  rep.class_bounds["21"] = u21;
  rep.class_bounds["111"] = f3sum_full_product_bound(a, b, c, &rep.achieving);
  rep.achieving["perm_21"] = perm21;
  rep.achieving["sign_21"] = sign21;
  return rep;
}

std::vector<ObservableComponent> decompose_observable(const Observable& obs) {
  obs.validate();
  const double r_plus = 0.5 * (1.0 - obs.r + obs.shift);
  const double r_minus = 0.5 * (1.0 - obs.r - obs.shift);
  return {{obs.r, ComponentKind::Projective},
          {r_plus, ComponentKind::PlusIdentity},
          {r_minus, ComponentKind::MinusIdentity}};
}

namespace {

/// Class bound at a projective setting, on the expression's reported scale.
double class_bound_at(const Setting& s, const BellExpression& expr,
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
          throw UsageError(
              "no analytic fully separable bound for the general MK family with n > 2");
      }
      break;
  }
  throw UsageError("unsupported class for this expression");
}

}  // namespace

double general_setting_bound(const std::vector<std::pair<Observable, Observable>>& pairs,
                             const BellExpression& expr, const PartitionClass& cls,
                             GeneralBoundDetails* details) {
  expr.validate();
  const int n = static_cast<int>(pairs.size());
  if (n != expr.n) throw UsageError("general_setting_bound: party count mismatch");
  if (n > 4) {
    throw ResourceError("general_setting_bound: term enumeration capped at n = 4");
  }

  struct Slot {
    std::vector<ObservableComponent> comps;
    Vector3d axis;
  };
  std::vector<Slot> slots;
  for (const auto& [o0, o1] : pairs) {
    slots.push_back({decompose_observable(o0), o0.axis});
    slots.push_back({decompose_observable(o1), o1.axis});
  }
  const int ns = 2 * n;

  // Projective-pair cosines, used whenever both of a party's components are
  // projective in a term.
  std::vector<double> proj_cos(n);
  for (int i = 0; i < n; ++i) {
    proj_cos[i] = std::clamp(pairs[i].first.axis.dot(pairs[i].second.axis), -1.0, 1.0);
  }

  double total = 0.0, t0 = 0.0;
  int terms = 0;
  std::vector<int> pick(ns, 0);
  while (true) {
    double w = 1.0;
    for (int sl = 0; sl < ns; ++sl) w *= slots[sl].comps[pick[sl]].weight;
    if (w > 0.0) {
      ++terms;
      Setting eff;
      eff.cosines.assign(n, 0.0);
      std::vector<int> id_parties;
      bool all_proj = true;
      for (int i = 0; i < n; ++i) {
        const auto k0 = slots[2 * i].comps[pick[2 * i]].kind;
        const auto k1 = slots[2 * i + 1].comps[pick[2 * i + 1]].kind;
        if (k0 == ComponentKind::Projective && k1 == ComponentKind::Projective) {
          eff.cosines[i] = proj_cos[i];
        } else {
          id_parties.push_back(i);
          all_proj = false;
        }
      }
      // Identity components are replaced by effective cosines +-1; the sign
      // maximizing the term bound keeps the bound valid.
      double term_bound = 0.0;
      const int m = static_cast<int>(id_parties.size());
      for (unsigned sgn = 0; sgn < (1u << m); ++sgn) {
        for (int q = 0; q < m; ++q) {
          eff.cosines[id_parties[q]] = (sgn & (1u << q)) ? -1.0 : 1.0;
        }
        term_bound = std::max(term_bound, class_bound_at(eff, expr, cls));
      }
      total += w * term_bound;
      if (all_proj) t0 = w;
    }
    // odometer
    int sl = 0;
    while (sl < ns) {
      if (++pick[sl] < 3) break;
      pick[sl] = 0;
      ++sl;
    }
    if (sl == ns) break;
  }

  if (details) {
    details->t0 = t0;
    details->terms = terms;
    details->coarse_chsh.reset();
    if (expr.preset == Preset::CHSH && cls.kind == PartitionClass::Kind::General) {
      Setting proj{proj_cos};
      details->coarse_chsh = t0 * mk_quantum_bound(proj, 0.0) + 2.0 * (1.0 - t0);
    }
  }
  return total;
}

std::string verdict_name(VerdictKind k) {
  switch (k) {
    case VerdictKind::Entangled: return "ENTANGLED";
    case VerdictKind::GenuineTripartiteEntangled: return "GENUINE_TRIPARTITE_ENTANGLED";
    case VerdictKind::NotFullySeparable: return "NOT_FULLY_SEPARABLE";
    case VerdictKind::NotCertified: return "NOT_CERTIFIED";
  }
  return "NOT_CERTIFIED";
}

double expression_quantum_max(const BellExpression& expr) {
  expr.validate();
  // delta_n + eps_n sin 2t <= 2^(n-1), attained at the all-zeros setting.
  return expr.factor * 2.0 * std::sqrt(std::pow(2.0, expr.n - 1));
}

double expression_local_bound(const BellExpression& expr) {
  switch (expr.preset) {
    case Preset::CHSH: return 2.0;
    case Preset::MERMIN3: return 2.0;
    case Preset::F3_PLUS_F3PRIME: return 4.0;
    case Preset::MK_GENERAL:
      throw UsageError("local bound not tabulated for the general MK family");
  }
  return 2.0;
}

Verdict certify(const BellExpression& expr, double beta_cal, double beta_obs,
                const PartitionClass& cls,
                const std::function<double(double)>* envelope) {
  expr.validate();
  const double qmax = expression_quantum_max(expr);
  if (beta_cal > qmax + 1e-9) {
    throw CalibrationError("calibration value " + std::to_string(beta_cal) +
                           " exceeds the quantum maximum " + std::to_string(qmax));
  }

  Verdict v;
  if (expr.preset == Preset::CHSH) {
    v.threshold = chsh_structure_f(beta_cal);
    v.margin = beta_obs - v.threshold;
    v.kind = beta_obs > v.threshold ? VerdictKind::Entangled : VerdictKind::NotCertified;
    return v;
  }
  if (expr.preset == Preset::MERMIN3 &&
      (cls.kind == PartitionClass::Kind::TwoSeparable ||
       cls.kind == PartitionClass::Kind::Bipartition)) {
    v.threshold = f21_closed(beta_cal);
    v.margin = beta_obs - v.threshold;
    v.kind = beta_obs > v.threshold ? VerdictKind::GenuineTripartiteEntangled
                                    : VerdictKind::NotCertified;
    return v;
  }
  if (!envelope) {
    throw UsageError("certification for class '" + cls.label(expr.n) +
                     "' needs a numeric structure-function table");
  }
  v.threshold = (*envelope)(beta_cal);
  v.margin = beta_obs - v.threshold;
  if (beta_obs > v.threshold) {
    v.kind = cls.kind == PartitionClass::Kind::FullProduct
                 ? VerdictKind::NotFullySeparable
                 : (expr.n >= 3 ? VerdictKind::GenuineTripartiteEntangled
                                : VerdictKind::Entangled);
  } else {
    v.kind = VerdictKind::NotCertified;
  }
  return v;
}

}  // namespace bellcert
