#include "rkz/linalg.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <sstream>

#include "rkz/generators.hpp"
#include "rkz/io.hpp"
#include "rkz/rng.hpp"
#include "rkz/sampler.hpp"
#include "oracles.hpp"

using namespace rkz;

namespace {

RowMatrix identity(std::size_t n) {
  RowMatrix mat(n);
  for (std::size_t i = 0; i < n; ++i) mat.add_sparse_row(std::vector<SparseEntry>{{i, 1.0}});
  return mat;
}

RowMatrix random_dense(std::size_t m, std::size_t n, std::uint64_t seed,
                       std::vector<double>* raw = nullptr) {
  CounterRng rng(seed);
  std::vector<double> vals(m * n);
  for (double& v : vals) v = rng.next_normal();
  if (raw) *raw = vals;
  return RowMatrix::from_dense(m, n, vals);
}

}  // namespace

TEST_CASE("construction validation") {
  RowMatrix mat(3);
  CHECK_THROWS_AS(mat.add_dense_row(std::vector<double>{0.0, 0.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(mat.add_dense_row(std::vector<double>{1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(mat.add_sparse_row(std::vector<SparseEntry>{}), std::invalid_argument);
  CHECK_THROWS_AS(mat.add_sparse_row(std::vector<SparseEntry>{{3, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(mat.add_sparse_row(std::vector<SparseEntry>{{1, 1.0}, {1, 2.0}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(mat.add_sparse_row(std::vector<SparseEntry>{{2, 1.0}, {0, 2.0}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(RowMatrix(0), std::invalid_argument);
}

TEST_CASE("cached norms match recomputation on every construction path") {
  auto check_all = [](const RowMatrix& mat) {
    for (std::size_t i = 0; i < mat.rows(); ++i) {
      const double cached = mat.row_norm2(i);
      const double fresh = mat.recompute_row_norm2(i);
      REQUIRE(std::abs(cached - fresh) <= 1e-12 * fresh);
      REQUIRE(cached > 0.0);
    }
  };
  check_all(random_dense(20, 7, 99));
  check_all(identity(9));
  check_all(gen_sparse_sphere({Ensemble::sparse_sphere, 50, 40, 5, 0.0, 3}));
}

TEST_CASE("sparse rows above half density become dense") {
  RowMatrix mat(4);
  mat.add_sparse_row(std::vector<SparseEntry>{{0, 1.0}, {1, 2.0}, {3, 3.0}});  // 3/4 dense
  mat.add_sparse_row(std::vector<SparseEntry>{{2, 5.0}});                      // 1/4 sparse
  CHECK(mat.row_is_dense(0));
  CHECK_FALSE(mat.row_is_dense(1));
  CHECK(mat.row_nnz(0) == 4);
  CHECK(mat.row_nnz(1) == 1);
  const std::vector<double> v{1.0, 1.0, 1.0, 1.0};
  CHECK(mat.row_dot(0, v) == 6.0);
  CHECK(mat.row_dot(1, v) == 5.0);
}

TEST_CASE("row_dot basics") {
  auto id = identity(5);
  const std::vector<double> v{2.0, 4.0, 8.0, 16.0, 32.0};
  CHECK(id.row_dot(3, v) == 16.0);

  RowMatrix mat(3);
  mat.add_sparse_row(std::vector<SparseEntry>{{0, 3.0}, {2, 4.0}});
  CHECK(mat.row_dot(0, std::vector<double>{1.0, 1.0, 1.0}) == 7.0);
  CHECK(mat.row_dot(0, std::vector<double>{0.0, 0.0, 0.0}) == 0.0);
  CHECK_THROWS_AS(mat.row_dot(1, std::vector<double>{1.0, 1.0, 1.0}), std::out_of_range);
  CHECK_THROWS_AS(mat.row_dot(0, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("axpy_row basics") {
  RowMatrix mat(2);
  mat.add_dense_row(std::vector<double>{2.0, 0.0});

  std::vector<double> x{1.0, 1.0};
  mat.axpy_row(0, 0.0, x);
  CHECK(x == std::vector<double>{1.0, 1.0});
  mat.axpy_row(0, 0.5, x);
  CHECK(x == std::vector<double>{2.0, 1.0});

  std::vector<double> zero{0.0, 0.0};
  mat.axpy_row(0, 1.0, zero);
  CHECK(zero == std::vector<double>{2.0, 0.0});
  CHECK_THROWS_AS(mat.axpy_row(2, 1.0, x), std::out_of_range);
}

TEST_CASE("frobenius norm") {
  CHECK(identity(3).frobenius_norm2() == 3.0);
  RowMatrix single(2);
  single.add_dense_row(std::vector<double>{3.0, 4.0});
  CHECK(single.frobenius_norm2() == 25.0);
  const auto sphere = gen_dense_sphere({Ensemble::dense_sphere, 64, 10, 0, 0.0, 5});
  CHECK(sphere.frobenius_norm2() == Catch::Approx(64.0).epsilon(1e-12));
}

TEST_CASE("min singular value on easy matrices") {
  CHECK(min_singular_value(identity(6)) == Catch::Approx(1.0).margin(1e-12));

  RowMatrix diag(3);
  diag.add_sparse_row(std::vector<SparseEntry>{{0, 1.0}});
  diag.add_sparse_row(std::vector<SparseEntry>{{1, 2.0}});
  diag.add_sparse_row(std::vector<SparseEntry>{{2, 3.0}});
  CHECK(min_singular_value(diag) == Catch::Approx(1.0).margin(1e-12));

  RowMatrix wide(3);
  wide.add_dense_row(std::vector<double>{1.0, 0.0, 0.0});
  CHECK_THROWS_AS(min_singular_value(wide), std::invalid_argument);
  CHECK_THROWS_AS(min_singular_value(identity(3), 0.0), std::invalid_argument);
}

TEST_CASE("min singular value matches the one-sided Jacobi SVD oracle") {
  std::vector<double> raw;
  const auto mat = random_dense(50, 20, 4242, &raw);
  const auto sv = oracle::singular_values_one_sided_jacobi(raw, 50, 20);
  CHECK(min_singular_value(mat) == Catch::Approx(sv.front()).epsilon(1e-8));
}

TEST_CASE("rank-deficient matrices report a vanishing singular value") {
  RowMatrix mat(3);
  mat.add_dense_row(std::vector<double>{1.0, 2.0, 3.0});
  mat.add_dense_row(std::vector<double>{2.0, 4.0, 6.0});
  mat.add_dense_row(std::vector<double>{1.0, 0.0, 0.0});
  mat.add_dense_row(std::vector<double>{3.0, 2.0, 3.0});  // rank 2 overall
  CHECK(min_singular_value(mat) <= 1e-6);
}

TEST_CASE("eta of the identity is exactly one over n") {
  for (std::size_t n : {2, 5, 17}) {
    CHECK(eta_of(identity(n)) ==
          Catch::Approx(1.0 / static_cast<double>(n)).epsilon(1e-12));
  }
}

TEST_CASE("eta of the row-duplicated identity, against the SVD oracle") {
  const std::size_t n = 4;
  RowMatrix mat(n);
  std::vector<double> raw;
  for (std::size_t i = 0; i < n; ++i) {
    for (int rep = 0; rep < 2; ++rep) {
      std::vector<double> row(n, 0.0);
      row[i] = 1.0;
      mat.add_dense_row(row);
      raw.insert(raw.end(), row.begin(), row.end());
    }
  }
  const auto sv = oracle::singular_values_one_sided_jacobi(raw, 2 * n, n);
  const double eta_oracle = sv.front() * sv.front() / mat.frobenius_norm2();
  CHECK(eta_of(mat) == Catch::Approx(eta_oracle).epsilon(1e-10));
  CHECK(eta_of(mat) == Catch::Approx(1.0 / n).epsilon(1e-12));
}

TEST_CASE("eta of a tall sphere ensemble concentrates below 1/n") {
  const std::size_t n = 50, m = 5000;
  const auto mat = gen_dense_sphere({Ensemble::dense_sphere, m, n, 0, 0.0, 321});
  const double eta = eta_of(mat);
  // lambda_min(A^T A) ~ (m/n)(1 - sqrt(n/m))^2, so eta ~ 0.016 here
  CHECK(eta <= 1.0 / n + 1e-12);
  CHECK(eta > 0.6 / n);
}

TEST_CASE("eta stays on scale when drawn rows are removed") {
  // spot-check of the submatrix condition: the eta of a prefix-trimmed
  // matrix remains within a factor of two of the full-matrix eta
  const auto full = gen_sparse_sphere({Ensemble::sparse_sphere, 300, 20, 5, 0.0, 55});
  const double eta_full = eta_of(full);
  WeightedSampler sampler(full.row_norms2(), 56);
  std::vector<std::size_t> order;
  while (auto idx = sampler.next()) order.push_back(*idx);
  for (std::size_t removed : {20, 60}) {
    std::vector<bool> gone(full.rows(), false);
    for (std::size_t k = 0; k < removed; ++k) gone[order[k]] = true;
    RowMatrix trimmed(full.cols());
    for (std::size_t i = 0; i < full.rows(); ++i) {
      if (gone[i]) continue;
      if (full.row_is_dense(i)) {
        trimmed.add_dense_row(full.row_values(i));
      } else {
        std::vector<SparseEntry> entries;
        const auto idx = full.row_indices(i);
        const auto vals = full.row_values(i);
        for (std::size_t j = 0; j < idx.size(); ++j) entries.push_back({idx[j], vals[j]});
        trimmed.add_sparse_row(entries);
      }
    }
    const double eta_trimmed = eta_of(trimmed);
    CHECK(eta_trimmed > 0.5 * eta_full);
    CHECK(eta_trimmed < 2.0 * eta_full);
  }
}

TEST_CASE("unit-direction row averages dominate eta") {
  // |Az|^2/|A|_F^2 >= sigma_min^2/|A|_F^2 for every unit z
  const auto mat = random_dense(40, 12, 777);
  const double eta = eta_of(mat);
  CounterRng rng(31337);
  for (int rep = 0; rep < 25; ++rep) {
    std::vector<double> z(12);
    double norm2 = 0.0;
    for (double& v : z) {
      v = rng.next_normal();
      norm2 += v * v;
    }
    for (double& v : z) v /= std::sqrt(norm2);
    CHECK(empirical_eta(mat, z) >= eta - 1e-10);
  }
}

TEST_CASE("matrix file round trip is bit exact") {
  const auto sparse = gen_sparse_sphere({Ensemble::sparse_sphere, 30, 20, 4, 0.0, 11});
  std::stringstream ss;
  write_matrix(ss, sparse);
  const auto back = read_matrix(ss);
  REQUIRE(back.rows() == sparse.rows());
  REQUIRE(back.cols() == sparse.cols());
  for (std::size_t i = 0; i < sparse.rows(); ++i) {
    REQUIRE(back.row_nnz(i) == sparse.row_nnz(i));
    const auto a = sparse.row_values(i);
    const auto b = back.row_values(i);
    for (std::size_t j = 0; j < a.size(); ++j) REQUIRE(a[j] == b[j]);
  }

  const auto dense = random_dense(7, 5, 123);
  std::stringstream ds;
  write_matrix(ds, dense);
  const auto dback = read_matrix(ds);
  for (std::size_t i = 0; i < dense.rows(); ++i) {
    const auto a = dense.row_values(i);
    const auto b = dback.row_values(i);
    for (std::size_t j = 0; j < a.size(); ++j) REQUIRE(a[j] == b[j]);
  }

  std::stringstream bad("2 2 funky\n1 0\n0 1\n");
  CHECK_THROWS_AS(read_matrix(bad), std::runtime_error);
}
