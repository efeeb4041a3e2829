#include <doctest.h>

#include "bellcert/bounds.hpp"
#include "bellcert/mk.hpp"
#include "bellcert/oracle.hpp"

using namespace bellcert;

namespace {
std::vector<std::pair<Observable, Observable>> repeated_pair(int n, const Observable& a,
                                                             const Observable& b) {
  return std::vector<std::pair<Observable, Observable>>(n, {a, b});
}
}  // namespace

TEST_CASE("mk_operators base cases") {
  const Observable z = Observable::projective({0, 0, 1});
  const Observable x = Observable::projective({1, 0, 0});

  SUBCASE("maximally incompatible CHSH reaches 2 sqrt 2") {
    const MKPair ops = mk_operators(repeated_pair(2, z, x));
    CHECK(top_eigenvalue(ops.F) == doctest::Approx(2.0 * M_SQRT2).epsilon(1e-12));
  }

  SUBCASE("compatible measurements give the local bound") {
    const MKPair ops = mk_operators(repeated_pair(2, z, z));
    CHECK((ops.F - 2.0 * tensor({pauli_z(), pauli_z()})).norm() <= 1e-12);
    CHECK(top_eigenvalue(ops.F) == doctest::Approx(2.0));
  }

  SUBCASE("n=3 operator identity F^2 = 4 dhat+") {
    Setting s{{0.0, 0.0, 0.0}};
    CHECK(verify_mk_identities(3, s).max_residual() <= 1e-10);
  }

  CHECK_THROWS_AS(mk_operators(repeated_pair(1, z, x)), UsageError);
}

TEST_CASE("canonical_observables") {
  auto pairs = canonical_observables(Setting{{0.0}});
  CHECK((observable_matrix(pairs[0].first) - pauli_z()).norm() <= 1e-14);
  CHECK((observable_matrix(pairs[0].second) - pauli_x()).norm() <= 1e-14);

  pairs = canonical_observables(Setting{{1.0}});
  CHECK((observable_matrix(pairs[0].second) - pauli_z()).norm() <= 1e-14);

  pairs = canonical_observables(Setting{{0.6}});
  const MatrixXcd expect = 0.6 * pauli_z() + 0.8 * pauli_x();
  CHECK((observable_matrix(pairs[0].second) - expect).norm() <= 1e-12);
  CHECK(pairs[0].first.axis.dot(pairs[0].second.axis) == doctest::Approx(0.6));
}

TEST_CASE("bell_value") {
  SUBCASE("Mermin operator at the all-zeros setting has top eigenvalue 4") {
    const MatrixXcd op = bell_operator(BellExpression::mermin3(), Setting{{0, 0, 0}});
    CHECK(top_eigenvalue(op) == doctest::Approx(4.0).epsilon(1e-12));
  }

  SUBCASE("maximally mixed state gives zero") {
    const MatrixXcd rho = MatrixXcd::Identity(8, 8) / 8.0;
    CHECK(bell_value(rho, BellExpression::mermin3(), Setting{{0.3, -0.2, 0.7}}) ==
          doctest::Approx(0.0).epsilon(1e-12));
  }

  SUBCASE("CHSH quantum maximum") {
    const MatrixXcd op = bell_operator(BellExpression::chsh(), Setting{{0, 0}});
    CHECK(top_eigenvalue(op) == doctest::Approx(2.0 * M_SQRT2).epsilon(1e-12));
  }

  SUBCASE("dimension mismatch is rejected") {
    CHECK_THROWS_AS(
        bell_value(MatrixXcd::Identity(4, 4) / 4.0, BellExpression::mermin3(),
                   Setting{{0, 0, 0}}),
        UsageError);
  }
}

TEST_CASE("delta_epsilon") {
  auto de = delta_epsilon(Setting{{0.0, 0.0}}, 2);
  CHECK(de.delta == doctest::Approx(2.0));
  CHECK(de.epsilon == doctest::Approx(0.0));

  de = delta_epsilon(Setting{{0.6, 0.8}}, 2);
  CHECK(de.delta == doctest::Approx(1.48).epsilon(1e-12));
  CHECK(de.epsilon == doctest::Approx(0.48).epsilon(1e-12));

  de = delta_epsilon(Setting{{0.0, 0.0, 0.0}}, 3);
  CHECK(de.delta == doctest::Approx(4.0));
  CHECK(de.epsilon == doctest::Approx(0.0));

  // delta_2 = 1 + abar1 abar2 algebraic identity
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    Setting s{{rng.uniform(-1, 1), rng.uniform(-1, 1)}};
    const auto d2 = delta_epsilon(s, 2);
    CHECK(d2.delta ==
          doctest::Approx(1.0 + sbar(s.cosines[0]) * sbar(s.cosines[1])).epsilon(1e-12));
    CHECK(d2.delta >= std::abs(d2.epsilon) - 1e-12);
  }
}

TEST_CASE("verify_mk_identities") {
  SUBCASE("n=2 X^2 display identity at the orthogonal setting") {
    // X = F2+, X^2 = 2(1+ab) 1 + 2 abar bbar sigma_y x sigma_y
    const Setting s{{0.0, 0.0}};
    const MKPair ops = mk_operators(canonical_observables(s));
    const MatrixXcd X = 0.5 * (ops.F + ops.Fprime);
    const MatrixXcd expect =
        2.0 * MatrixXcd::Identity(4, 4) + 2.0 * tensor({pauli_y(), pauli_y()});
    CHECK((X * X - expect).cwiseAbs().maxCoeff() <= 1e-12);
  }

  SUBCASE("random settings satisfy all identities") {
    for (int n = 2; n <= 5; ++n) {
      Rng rng(11 + n);
      for (int trial = 0; trial < 10; ++trial) {
        Setting s;
        for (int j = 0; j < n; ++j) s.cosines.push_back(rng.uniform(-1, 1));
        CHECK(verify_mk_identities(n, s).max_residual() <= 1e-10);
      }
    }
  }

  SUBCASE("compatible degenerate case n=4") {
    const Setting s{{1.0, 1.0, 1.0, 1.0}};
    const auto rep = verify_mk_identities(4, s);
    CHECK(rep.res_F_sq <= 1e-12);
    CHECK(delta_epsilon(s, 4).epsilon == doctest::Approx(1.0));
  }
}

TEST_CASE("MK pair anticommutation invariant") {
  Rng rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    Setting s{{rng.uniform(-1, 1), rng.uniform(-1, 1)}};
    const MKPair ops = mk_operators(canonical_observables(s));
    const MatrixXcd X = 0.5 * (ops.F + ops.Fprime);
    const MatrixXcd Y = 0.5 * (ops.F - ops.Fprime);
    CHECK((X * Y + Y * X).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("recursion consistency against an independent n-1 build") {
  Rng rng(31);
  for (int n : {3, 4, 5}) {
    Setting s;
    for (int j = 0; j < n; ++j) s.cosines.push_back(rng.uniform(-1, 1));
    auto pairs = canonical_observables(s);
    const MKPair big = mk_operators(pairs);

    auto sub_pairs = pairs;
    sub_pairs.pop_back();
    const MKPair sub = mk_operators(sub_pairs);
    const MatrixXcd an = observable_matrix(pairs.back().first);
    const MatrixXcd anp = observable_matrix(pairs.back().second);
    const MatrixXcd rebuilt =
        kron(sub.F, 0.5 * (an + anp)) + kron(sub.Fprime, 0.5 * (an - anp));
    CHECK((big.F - rebuilt).norm() <= 1e-12);
  }
}

TEST_CASE("tilted-family top eigenvalue never exceeds the spectral bound") {
  Rng rng(47);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform() * 4);  // 2..5
    Setting s;
    for (int j = 0; j < n; ++j) s.cosines.push_back(rng.uniform(-1, 1));
    const double t = rng.uniform(0, 2 * M_PI);
    const MKPair ops = mk_operators(canonical_observables(s));
    const double lmax =
        top_eigenvalue(std::cos(t) * ops.F + std::sin(t) * ops.Fprime);
    CHECK(lmax <= mk_quantum_bound(s, t) + 1e-9);
  }
}

TEST_CASE("f3sum preset reports <F3 + F3'> exactly") {
  const BellExpression expr = BellExpression::f3sum();
  const Setting s{{0.2, -0.4, 0.6}};
  const auto pairs = canonical_observables(s);
  const MKPair ops = mk_operators(pairs);
  const MatrixXcd direct = ops.F + ops.Fprime;
  CHECK((bell_operator(expr, s) - direct).norm() <= 1e-10);
}
