#include <doctest.h>

#include "bellcert/core.hpp"

using namespace bellcert;

TEST_CASE("observable_matrix reproduces the Pauli and identity limits") {
  const MatrixXcd z = observable_matrix(Observable::projective({0, 0, 1}));
  CHECK((z - pauli_z()).norm() == doctest::Approx(0.0).epsilon(1e-14));
  auto ev = hermitian_eigen(z);
  CHECK(ev.values(0) == doctest::Approx(1.0));
  CHECK(ev.values(1) == doctest::Approx(-1.0));

  const MatrixXcd eye = observable_matrix({0.0, {0, 0, 1}, 1.0});
  CHECK((eye - id2()).norm() == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("observable_matrix eigenvalues for a tilted unsharp observable") {
  // 0.5 sigma_x + 0.3: spectrum {0.8, -0.2}
  auto ev = hermitian_eigen(observable_matrix({0.5, {1, 0, 0}, 0.3}));
  CHECK(ev.values(0) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(ev.values(1) == doctest::Approx(-0.2).epsilon(1e-12));
}

TEST_CASE("observable invariants are enforced") {
  CHECK_THROWS_AS(observable_matrix({0.8, {0, 0, 1}, 0.4}), ConstraintError);
  CHECK_THROWS_AS(observable_matrix({1.0, {0, 0, 2}, 0.0}), ConstraintError);
  CHECK_THROWS_AS(observable_matrix({-0.1, {0, 0, 1}, 0.0}), ConstraintError);
}

TEST_CASE("observable spectrum stays in [-1, 1] for random valid observables") {
  Rng rng(42);
  for (int i = 0; i < 500; ++i) {
    Observable o;
    o.r = rng.uniform();
    o.shift = rng.uniform(-(1.0 - o.r), 1.0 - o.r);
    o.axis = rng.unit_vector();
    auto ev = hermitian_eigen(observable_matrix(o));
    CHECK(ev.values(0) <= 1.0 + 1e-12);
    CHECK(ev.values(ev.values.size() - 1) >= -1.0 - 1e-12);
  }
}

TEST_CASE("tensor products") {
  CHECK((tensor({id2(), id2()}) - MatrixXcd::Identity(4, 4)).norm() ==
        doctest::Approx(0.0));

  MatrixXcd zz = tensor({pauli_z(), pauli_z()});
  MatrixXcd expect = MatrixXcd::Zero(4, 4);
  expect(0, 0) = 1;
  expect(1, 1) = -1;
  expect(2, 2) = -1;
  expect(3, 3) = 1;
  CHECK((zz - expect).norm() == doctest::Approx(0.0));

  const MatrixXcd xyz = tensor({pauli_x(), pauli_y(), pauli_z()});
  CHECK(std::abs(xyz.trace()) == doctest::Approx(0.0));
  CHECK((xyz * xyz - MatrixXcd::Identity(8, 8)).norm() == doctest::Approx(0.0));

  CHECK_THROWS_AS(tensor({}), UsageError);
}

TEST_CASE("hermitian_eigen basics and residual property") {
  auto ev = hermitian_eigen(pauli_x());
  CHECK(ev.values(0) == doctest::Approx(1.0));
  CHECK(ev.values(1) == doctest::Approx(-1.0));

  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    MatrixXcd a(8, 8);
    for (int i = 0; i < 8; ++i) {
      for (int j = 0; j < 8; ++j) {
        a(i, j) = Complex(rng.uniform(-1, 1), rng.uniform(-1, 1));
      }
    }
    MatrixXcd h = 0.5 * (a + a.adjoint());
    auto es = hermitian_eigen(h);
    MatrixXcd rebuilt =
        es.vectors * es.values.asDiagonal().toDenseMatrix().cast<Complex>() *
        es.vectors.adjoint();
    CHECK((h - rebuilt).norm() <= 1e-9 * h.norm());
    for (int k = 0; k + 1 < 8; ++k) CHECK(es.values(k) >= es.values(k + 1));
  }

  MatrixXcd bad(2, 2);
  bad << 0, 1, 0, 0;
  CHECK_THROWS_AS(hermitian_eigen(bad), std::domain_error);
}

TEST_CASE("partial trace") {
  // maximally entangled two-qubit state -> maximally mixed marginal
  VectorXcd phi = VectorXcd::Zero(4);
  phi(0) = M_SQRT1_2;
  phi(3) = M_SQRT1_2;
  MatrixXcd rho = phi * phi.adjoint();
  MatrixXcd red = partial_trace(rho, {2, 2}, {0});
  CHECK((red - 0.5 * id2()).norm() == doctest::Approx(0.0).epsilon(1e-12));

  // product state factorization
  BlochState sa{Vector3d(0.3, 0.2, 0.5)};
  BlochState sb{Vector3d(-0.4, 0.1, 0.8).normalized()};
  MatrixXcd prod = kron(sa.density(), sb.density());
  CHECK((partial_trace(prod, {2, 2}, {0}) - sa.density()).norm() <= 1e-12);
  CHECK((partial_trace(prod, {2, 2}, {1}) - sb.density()).norm() <= 1e-12);

  // trace preservation on random matrices
  Rng rng(3);
  MatrixXcd m(8, 8);
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) m(i, j) = Complex(rng.uniform(-1, 1), rng.uniform(-1, 1));
  }
  for (auto keep : {std::vector<int>{0}, {1}, {2}, {0, 2}, {1, 2}}) {
    CHECK(std::abs((partial_trace(m, {2, 2, 2}, keep).trace() - m.trace())) <= 1e-12);
  }

  CHECK_THROWS_AS(partial_trace(m, {2, 2}, {0}), UsageError);
}

TEST_CASE("expectation values") {
  CHECK(expectation(0.5 * id2(), pauli_z()) == doctest::Approx(0.0));
  MatrixXcd ket0 = MatrixXcd::Zero(2, 2);
  ket0(0, 0) = 1;
  CHECK(expectation(ket0, pauli_z()) == doctest::Approx(1.0));

  VectorXcd phi = VectorXcd::Zero(4);
  phi(0) = M_SQRT1_2;
  phi(3) = M_SQRT1_2;
  double imag = 1.0;
  const double v = expectation(phi * phi.adjoint(), tensor({pauli_z(), pauli_z()}), &imag);
  CHECK(std::abs(v) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(imag <= 1e-10);

  CHECK_THROWS_AS(expectation(id2(), MatrixXcd::Identity(4, 4)), UsageError);
}

TEST_CASE("random_product_state determinism and uniformity") {
  auto a = random_product_state(1, 7);
  auto b = random_product_state(1, 7);
  CHECK((a[0].vector - b[0].vector).norm() == 0.0);

  auto three = random_product_state(3, 5);
  REQUIRE(three.size() == 3);
  for (const auto& s : three) CHECK(std::abs(s.vector.norm() - 1.0) <= 1e-12);

  double zsum = 0.0;
  const int samples = 100000;
  auto many = random_product_state(samples, 11);
  for (const auto& s : many) zsum += s.vector.z();
  CHECK(std::abs(zsum / samples) <= 0.02);

  CHECK_THROWS_AS(random_product_state(0, 1), UsageError);
}

TEST_CASE("single-qubit uncertainty relation over random states and axes") {
  Rng rng(2024);
  int checked = 0;
  for (int i = 0; i < 10000; ++i) {
    // mixed states included: Bloch vector of random length
    const Vector3d v = std::cbrt(rng.uniform()) * rng.unit_vector();
    const MatrixXcd rho = BlochState{v}.density();
    const Vector3d n0 = rng.unit_vector();
    const Vector3d n1 = rng.unit_vector();
    const double a = n0.dot(n1);
    if (std::abs(std::abs(a) - 1.0) < 1e-9) continue;  // degenerate branch below
    const MatrixXcd a0 = observable_matrix(Observable::projective(n0));
    const MatrixXcd a1 = observable_matrix(Observable::projective(n1));
    const double plus = expectation(rho, a0 + a1);
    const double minus = expectation(rho, a0 - a1);
    const double lhs =
        plus * plus / (2.0 * (1.0 + a)) + minus * minus / (2.0 * (1.0 - a));
    CHECK(lhs <= 1.0 + 1e-10);
    ++checked;
  }
  CHECK(checked >= 9900);

  // degenerate cosine: vanishing-denominator numerator must vanish
  const MatrixXcd a0 = observable_matrix(Observable::projective({0, 0, 1}));
  const MatrixXcd rho = BlochState{Vector3d(0.2, 0.3, 0.4)}.density();
  CHECK(std::abs(expectation(rho, a0 - a0)) <= 1e-10);
}

TEST_CASE("anticommutator norm identities for measurement sums") {
  Rng rng(77);
  for (int i = 0; i < 200; ++i) {
    const Vector3d n0 = rng.unit_vector();
    const Vector3d n1 = rng.unit_vector();
    const double a = n0.dot(n1);
    const MatrixXcd a0 = observable_matrix(Observable::projective(n0));
    const MatrixXcd a1 = observable_matrix(Observable::projective(n1));
    const MatrixXcd plus = a0 + a1;
    const MatrixXcd minus = a0 - a1;
    CHECK((plus * plus - 2.0 * (1.0 + a) * id2()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((minus * minus - 2.0 * (1.0 - a) * id2()).cwiseAbs().maxCoeff() <= 1e-12);
  }
}
