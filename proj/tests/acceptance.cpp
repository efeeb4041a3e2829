// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failed criteria. `-c N` runs a single criterion.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "bellcert/bounds.hpp"
#include "bellcert/npa.hpp"
#include "bellcert/oracle.hpp"
#include "bellcert/structure.hpp"

using namespace bellcert;

namespace {

constexpr double kTwoSqrtTwo = 2.0 * M_SQRT2;

struct Check {
  bool ok = true;
  std::ostringstream detail;

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      if (detail.tellp() > 0) detail << "; ";
      detail << what;
    }
  }
  void note(const std::string& what) {
    if (detail.tellp() > 0) detail << "; ";
    detail << what;
  }
};

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

// ---------------------------------------------------------------------------

void criterion1(Check& c) {  // CHSH endpoints
  const BoundReport rep = chsh_bounds(0.0, 0.0);
  c.expect(std::abs(rep.quantum - kTwoSqrtTwo) <= 1e-9,
           "U(0,0) = " + fmt(rep.quantum) + " != 2*sqrt(2)");
  c.expect(std::abs(rep.class_bounds.at("11") - M_SQRT2) <= 1e-9,
           "U_11(0,0) = " + fmt(rep.class_bounds.at("11")) + " != sqrt(2)");
  c.expect(std::abs(chsh_structure_f(kTwoSqrtTwo) - M_SQRT2) <= 1e-9,
           "f(2*sqrt(2)) != sqrt(2)");
  c.expect(std::abs(chsh_structure_f(2.0) - 2.0) <= 1e-9, "f(2) != 2");
}

void criterion2(Check& c) {  // Mermin extremes
  const BoundReport zero = mermin3_bounds(0.0, 0.0, 0.0);
  c.expect(std::abs(zero.quantum - 4.0) <= 1e-6, "U(0,0,0) != 4");
  c.expect(std::abs(zero.class_bounds.at("21") - 2.0) <= 1e-6, "U_21(0,0,0) != 2");
  c.expect(std::abs(zero.class_bounds.at("111") - 1.0) <= 1e-6, "U_111(0,0,0) != 1");
  const BoundReport edge = mermin3_bounds(0.0, 0.0, 1.0);
  c.expect(std::abs(edge.class_bounds.at("21") - kTwoSqrtTwo) <= 1e-9,
           "U_21(0,0,1) != 2*sqrt(2)");
}

void criterion3(Check& c) {  // two-separable certification thresholds
  const auto yes =
      certify(BellExpression::mermin3(), 4.0, 2.05, PartitionClass::two_separable());
  c.expect(yes.kind == VerdictKind::GenuineTripartiteEntangled,
           "beta_obs 2.05 not certified, verdict " + verdict_name(yes.kind));
  const auto no =
      certify(BellExpression::mermin3(), 4.0, 1.95, PartitionClass::two_separable());
  c.expect(no.kind == VerdictKind::NotCertified,
           "beta_obs 1.95 wrongly certified as " + verdict_name(no.kind));
}

void criterion4(Check& c) {  // oracle tightness, 64 restarts
  const MatrixXcd chsh = bell_operator(BellExpression::chsh(), Setting{{0, 0}});
  const double v1 = max_over_product_states(chsh, 2, 64, 11).value;
  c.expect(std::abs(v1 - M_SQRT2) <= 1e-4, "CHSH product oracle " + fmt(v1));

  const MatrixXcd mermin = bell_operator(BellExpression::mermin3(), Setting{{0, 0, 0}});
  const double v2 = max_over_product_states(mermin, 3, 64, 12).value;
  c.expect(std::abs(v2 - 1.0) <= 1e-4, "Mermin product oracle " + fmt(v2));

  const double v3 = max_over_bipartition(mermin, std::vector<int>{0, 1}, 64, 13).value;
  c.expect(std::abs(v3 - 2.0) <= 1e-4, "Mermin AB|C oracle " + fmt(v3));

  const MatrixXcd edge = bell_operator(BellExpression::mermin3(), Setting{{0, 0, 1}});
  const double v4 = max_over_bipartition(edge, std::vector<int>{0, 1}, 64, 14).value;
  c.expect(std::abs(v4 - kTwoSqrtTwo) <= 1e-4, "Mermin (0,0,1) oracle " + fmt(v4));
}

void criterion5(Check& c) {  // bound-soundness campaigns
  const auto chsh = validation_campaign(BellExpression::chsh(),
                                        PartitionClass::full_product(), 10000, 101);
  c.expect(chsh.passed(), "CHSH (11): " + std::to_string(chsh.violations.size()) +
                              " violations, worst gap " + fmt(chsh.worst_gap));

  const auto m21 = validation_campaign(BellExpression::mermin3(),
                                       PartitionClass::two_separable(), 1000, 102);
  c.expect(m21.passed(),
           "Mermin3 (21): " + std::to_string(m21.violations.size()) + " violations");

  const auto m111 = validation_campaign(BellExpression::mermin3(),
                                        PartitionClass::full_product(), 1000, 103);
  c.expect(m111.passed(),
           "Mermin3 (111): " + std::to_string(m111.violations.size()) + " violations");

  const auto f3 = validation_campaign(BellExpression::f3sum(),
                                      PartitionClass::full_product(), 1000, 104);
  c.expect(f3.passed(),
           "F3+F3' (111): " + std::to_string(f3.violations.size()) + " violations");
  c.expect(f3.in_region_R >= 100, "only " + std::to_string(f3.in_region_R) +
                                      " settings inside region R (need >= 100)");
  c.note("worst gaps: chsh " + fmt(chsh.worst_gap) + ", m21 " + fmt(m21.worst_gap) +
         ", m111 " + fmt(m111.worst_gap) + ", f3sum " + fmt(f3.worst_gap) +
         ", R count " + std::to_string(f3.in_region_R));
}

void criterion6(Check& c) {  // operator identities and the spectral bound
  double worst = 0.0;
  for (int n = 2; n <= 5; ++n) {
    Rng rng(600 + n);
    for (int trial = 0; trial < 100; ++trial) {
      Setting s;
      for (int j = 0; j < n; ++j) s.cosines.push_back(rng.uniform(-1, 1));
      worst = std::max(worst, verify_mk_identities(n, s).max_residual());
    }
  }
  c.expect(worst <= 1e-10, "identity residual " + fmt(worst) + " > 1e-10");

  double worst_gap = -1.0;
  int checked = 0;
  for (int n = 2; n <= 5; ++n) {
    Rng rng(650 + n);
    for (int trial = 0; trial < 250; ++trial) {
      Setting s;
      for (int j = 0; j < n; ++j) s.cosines.push_back(rng.uniform(-1, 1));
      const double t = rng.uniform(0, 2 * M_PI);
      const MKPair ops = mk_operators(canonical_observables(s));
      const double lmax = top_eigenvalue(std::cos(t) * ops.F + std::sin(t) * ops.Fprime);
      worst_gap = std::max(worst_gap, lmax - mk_quantum_bound(s, t));
      ++checked;
    }
  }
  c.expect(worst_gap <= 1e-9, "lambda_max exceeds U^(t) by " + fmt(worst_gap));
  c.note("identity residual " + fmt(worst) + ", spectral gap " + fmt(worst_gap) +
         " over " + std::to_string(checked) + " draws");
}

void criterion7(Check& c) {  // structure-function reproduction
  {
    const auto expr = BellExpression::mermin3();
    const auto cls = PartitionClass::two_separable();
    const auto table = compute_structure_fn(expr, cls, default_v_grid(expr, cls, 41), 101);
    double worst = 0.0;
    for (const auto& row : table.rows) {
      worst = std::max(worst, std::abs(row.f - f21_closed(row.v)));
    }
    c.expect(worst <= 1e-4, "f_21 numeric-vs-closed gap " + fmt(worst));
    c.note("f21 gap " + fmt(worst));
  }
  {
    const auto expr = BellExpression::chsh();
    const auto cls = PartitionClass::full_product();
    const auto table = compute_structure_fn(expr, cls, default_v_grid(expr, cls, 41), 201);
    double worst = 0.0;
    for (const auto& row : table.rows) {
      worst = std::max(worst, std::abs(row.f - chsh_structure_f(row.v)));
    }
    c.expect(worst <= 1e-4, "CHSH f numeric-vs-closed gap " + fmt(worst));
    c.note("chsh gap " + fmt(worst));
  }
  {
    const auto expr = BellExpression::mermin3();
    const auto cls = PartitionClass::full_product();
    const auto table = compute_structure_fn(expr, cls, default_v_grid(expr, cls, 41), 101);
    const auto audit = audit_shape(table, 5e-3);
    c.expect(audit.pass, "Mermin3 f_111 audit: monotone " +
                             fmt(audit.max_monotone_violation) + ", concavity " +
                             fmt(audit.max_concavity_violation));
  }
  {
    const auto expr = BellExpression::f3sum();
    const auto cls = PartitionClass::full_product();
    const auto table = compute_structure_fn(expr, cls, default_v_grid(expr, cls, 41), 101);
    const auto audit = audit_shape(table, 5e-3);
    c.expect(audit.pass, "F3+F3' f_111 audit: monotone " +
                             fmt(audit.max_monotone_violation) + ", concavity " +
                             fmt(audit.max_concavity_violation));
  }
}

void criterion8(Check& c) {  // NPA threshold window and soundness
  const auto alice = KnownSide::orthogonal();

  const ScanResult level1 = lambda_threshold_scan(alice, NpaLevel::One, 1e-3, 801, 16);
  const bool window1 = level1.found && std::abs(level1.lambda_star - 0.447) <= 0.02;
  ScanResult level2;
  bool window2 = false;
  if (!window1) {
    level2 = lambda_threshold_scan(alice, NpaLevel::OneWithProducts, 1e-3, 801, 16);
    window2 = level2.found && std::abs(level2.lambda_star - 0.447) <= 0.02;
  }
  c.expect(window1 || window2,
           "lambda* outside 0.447 +- 0.02 at both operator-set levels: level-1 " +
               (level1.found ? fmt(level1.lambda_star) : std::string("absent")) +
               ", level-1+products " +
               (level2.found ? fmt(level2.lambda_star) : std::string("absent")) +
               " (both sit at the local-bound crossing 1/2; for lambda <= 1/2 the "
               "family admits a separable realization with a commuting Bob pair, so "
               "a sound completion test cannot certify lower)");

  Rng rng(808);
  int false_positives = 0;
  const int sims = 1000;
  for (int trial = 0; trial < sims; ++trial) {
    const Observable b0 = Observable::projective(rng.unit_vector());
    const Observable b1 = Observable::projective(rng.unit_vector());
    const int ncomp = 1 + static_cast<int>(rng.uniform() * 3);
    MatrixXcd rho = MatrixXcd::Zero(4, 4);
    double wsum = 0.0;
    for (int comp = 0; comp < ncomp; ++comp) {
      const double w = rng.uniform(0.1, 1.0);
      rho += w * kron(BlochState{std::cbrt(rng.uniform()) * rng.unit_vector()}.density(),
                      BlochState{std::cbrt(rng.uniform()) * rng.unit_vector()}.density());
      wsum += w;
    }
    rho /= wsum;
    const auto corr = simulate_correlation(rho, alice.measurements, {b0, b1});
    if (certify_correlation(corr, alice, NpaLevel::One, 4, 9000 + trial).entangled) {
      ++false_positives;
    }
  }
  c.expect(false_positives == 0,
           std::to_string(false_positives) + " false ENTANGLED verdicts on " +
               std::to_string(sims) + " separable simulations");
  c.note("soundness " + std::to_string(sims - false_positives) + "/" +
         std::to_string(sims) + " clean");
}

// -- criterion 9 helpers ------------------------------------------------------

std::string cli_binary() {
  const char* env = std::getenv("BELLCERT_CLI");
  return env ? env : "./build/bellcert";
}

std::string capture(const std::string& cmd) {
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return "<popen failed>";
  std::string out;
  char buf[4096];
  while (std::size_t got = fread(buf, 1, sizeof(buf), pipe)) out.append(buf, got);
  pclose(pipe);
  return out;
}

void criterion9(Check& c) {  // determinism of seeded commands
  const std::string cli = cli_binary();
  const std::vector<std::string> seeded = {
      " oracle --inequality chsh --class 11 --trials 60 --seed 42 --restarts 4",
      " oracle --inequality f3sum --class 111 --trials 40 --seed 9 --restarts 4",
      " npa scan --family lambda --alice orthogonal --tol 1e-2 --seed 5 --starts 6 --level 1",
      " structure --inequality chsh --class 11 --grid 9 --omega-res 81 --out /dev/stdout",
  };
  for (const auto& args : seeded) {
    const std::string one = capture(cli + args + " 2>/dev/null");
    const std::string two = capture(cli + args + " 2>/dev/null");
    c.expect(!one.empty() && one == two, "output differs across runs for:" + args);
    // thread-count invariance: the env knob must not change bytes
    const std::string t1 = capture("BELLCERT_THREADS=1 " + cli + args + " 2>/dev/null");
    const std::string t8 = capture("BELLCERT_THREADS=8 " + cli + args + " 2>/dev/null");
    c.expect(t1 == t8 && t1 == one, "output differs across thread counts for:" + args);
  }
}

struct Criterion {
  int id;
  const char* title;
  std::function<void(Check&)> run;
};

const std::vector<Criterion> kCriteria = {
    {1, "CHSH endpoints (bounds and structure function)", criterion1},
    {2, "Mermin extremes", criterion2},
    {3, "two-separable certification thresholds", criterion3},
    {4, "oracle tightness at extremal settings", criterion4},
    {5, "bound-soundness campaigns", criterion5},
    {6, "MK operator identities and spectral bound", criterion6},
    {7, "structure-function reproduction", criterion7},
    {8, "NPA threshold window and soundness", criterion8},
    {9, "seeded-output determinism", criterion9},
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "-c") == 0 && i + 1 < argc) only = std::atoi(argv[i + 1]);
  }

  int failures = 0;
  for (const auto& crit : kCriteria) {
    if (only != 0 && crit.id != only) continue;
    Check check;
    const auto start = std::chrono::steady_clock::now();
    try {
      crit.run(check);
    } catch (const std::exception& e) {
      check.expect(false, std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] criterion %d: %s (%.1fs)%s%s\n", check.ok ? "PASS" : "FAIL",
                crit.id, crit.title, secs, check.detail.tellp() > 0 ? " -- " : "",
                check.detail.str().c_str());
    std::fflush(stdout);
    if (!check.ok) ++failures;
  }
  return failures;
}
