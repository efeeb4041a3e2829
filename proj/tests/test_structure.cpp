#include <doctest.h>

#include <sstream>

#include "bellcert/structure.hpp"

using namespace bellcert;

namespace {
constexpr double kTwoSqrtTwo = 2.0 * M_SQRT2;
}

TEST_CASE("CHSH structure table matches the closed form") {
  const auto expr = BellExpression::chsh();
  const auto cls = PartitionClass::full_product();
  const auto grid = default_v_grid(expr, cls, 17);
  const StructureTable table = compute_structure_fn(expr, cls, grid, 101);

  REQUIRE(table.rows.size() == 17);
  for (const auto& row : table.rows) {
    CHECK(row.residual <= 1e-3);
    CHECK(std::abs(row.f - chsh_structure_f(row.v)) <= 1e-4);
  }
  CHECK(table.rows.front().v == doctest::Approx(2.0));
  CHECK(table.rows.front().f == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(table.rows.back().v == doctest::Approx(kTwoSqrtTwo));
  CHECK(table.rows.back().f == doctest::Approx(M_SQRT2).epsilon(1e-6));
}

TEST_CASE("Mermin3 two-separable table matches f21_closed and is witnessed") {
  const auto expr = BellExpression::mermin3();
  const auto cls = PartitionClass::two_separable();
  const auto grid = default_v_grid(expr, cls, 13);
  const StructureTable table = compute_structure_fn(expr, cls, grid, 61);

  for (const auto& row : table.rows) {
    CHECK(std::abs(row.f - f21_closed(row.v)) <= 1e-4);
    // every row is witnessed: the stored argmax reproduces (v, f)
    const auto rep = mermin3_bounds(row.omega[0], row.omega[1], row.omega[2]);
    CHECK(std::abs(rep.quantum - row.v) <= 1e-3 + 1e-9);
    CHECK(rep.class_bounds.at("21") == doctest::Approx(row.f).epsilon(1e-9));
  }
  CHECK(table.rows.back().f == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("Mermin3 full-product table endpoint reproduces the threshold 1") {
  const auto expr = BellExpression::mermin3();
  const auto cls = PartitionClass::full_product();
  std::vector<double> grid(9);
  for (int i = 0; i < 9; ++i) grid[i] = 3.6 + 0.05 * i;
  const StructureTable table = compute_structure_fn(expr, cls, grid, 41);
  CHECK(table.rows.back().f == doctest::Approx(1.0).epsilon(1e-4));
  const auto audit = audit_shape(table);
  CHECK(audit.pass);
}

TEST_CASE("audit_shape") {
  const auto expr = BellExpression::chsh();
  const auto cls = PartitionClass::full_product();
  StructureTable table =
      compute_structure_fn(expr, cls, default_v_grid(expr, cls, 17), 101);

  auto audit = audit_shape(table);
  CHECK(audit.pass);
  CHECK(audit.max_monotone_violation <= 1e-9);

  SUBCASE("corrupted row is located") {
    table.rows[8].f += 0.1;
    audit = audit_shape(table);
    CHECK_FALSE(audit.pass);
    CHECK(audit.worst_index == 8);
  }

  SUBCASE("too few rows rejected") {
    table.rows.resize(5);
    CHECK_THROWS_AS(audit_shape(table), UsageError);
  }
}

TEST_CASE("conservative_envelope") {
  const auto expr = BellExpression::chsh();
  const auto cls = PartitionClass::full_product();
  const StructureTable table =
      compute_structure_fn(expr, cls, default_v_grid(expr, cls, 33), 101);
  const auto audit = audit_shape(table);
  REQUIRE(audit.pass);
  const Envelope env = conservative_envelope(table, audit);

  // at a grid point: table value plus the residual margin
  CHECK(env(table.rows[4].v) ==
        doctest::Approx(table.rows[4].f + env.margin()).epsilon(1e-12));

  // between grid points of a concave decreasing table: above the chord
  for (std::size_t i = 0; i + 1 < table.rows.size(); ++i) {
    const double mid = 0.5 * (table.rows[i].v + table.rows[i + 1].v);
    const double chord = 0.5 * (table.rows[i].f + table.rows[i + 1].f);
    CHECK(env(mid) >= chord);
  }

  // dominates the closed form everywhere on the domain
  Rng rng(71);
  for (int i = 0; i < 100; ++i) {
    const double v = rng.uniform(2.0, kTwoSqrtTwo);
    CHECK(env(v) >= chsh_structure_f(v));
  }

  SUBCASE("audit failure blocks the envelope") {
    StructureTable broken = table;
    broken.rows[10].f += 0.1;
    const auto bad = audit_shape(broken);
    CHECK_THROWS_AS(conservative_envelope(broken, bad), UsageError);
  }
}

TEST_CASE("structure CSV round trip") {
  const auto expr = BellExpression::chsh();
  const auto cls = PartitionClass::full_product();
  const StructureTable table =
      compute_structure_fn(expr, cls, default_v_grid(expr, cls, 9), 61);

  std::stringstream ss;
  write_structure_csv(table, ss);
  const StructureTable back = read_structure_csv(ss);
  REQUIRE(back.rows.size() == table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    CHECK(back.rows[i].v == table.rows[i].v);
    CHECK(back.rows[i].f == table.rows[i].f);
    REQUIRE(back.rows[i].omega.size() == table.rows[i].omega.size());
  }
}

TEST_CASE("infeasible v grid raises a grid error") {
  const auto expr = BellExpression::chsh();
  CHECK_THROWS_AS(
      compute_structure_fn(expr, PartitionClass::full_product(), {5.0}, 41),
      UsageError);  // above the quantum maximum: rejected as unattainable
}

TEST_CASE("f3sum full-product table audits clean on a coarse grid") {
  const auto expr = BellExpression::f3sum();
  const auto cls = PartitionClass::full_product();
  const auto grid = default_v_grid(expr, cls, 9);
  const StructureTable table = compute_structure_fn(expr, cls, grid, 41);
  const auto audit = audit_shape(table);
  CHECK(audit.pass);
  CHECK(table.rows.back().f == doctest::Approx(M_SQRT2).epsilon(1e-4));
}
