#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rkz/linalg.hpp"
#include "rkz/rng.hpp"
#include "rkz/solver.hpp"

namespace rkz {

// Synthetic problem families used by the experiment harness: rows drawn
// uniformly from a unit sphere, either supported on s random coordinates or
// fully dense, a standard-normal ground truth, and per-equation noise of
// standard deviation sigma*|a_i|. Everything is a pure function of its seed;
// row r of a matrix draws from the sub-stream (seed, r), so generation order
// does not matter.

enum class Ensemble { sparse_sphere, dense_sphere };

struct EnsembleSpec {
  Ensemble kind = Ensemble::sparse_sphere;
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t s = 0;  // nonzeros per row; used by the sparse ensemble only
  double sigma = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (m < 1) throw std::invalid_argument("EnsembleSpec: m must be >= 1");
    if (n < 1) throw std::invalid_argument("EnsembleSpec: n must be >= 1");
    if (kind == Ensemble::sparse_sphere && (s < 1 || s > n))
      throw std::invalid_argument("EnsembleSpec: need 1 <= s <= n");
    if (!(sigma >= 0.0)) throw std::invalid_argument("EnsembleSpec: sigma must be >= 0");
  }
};

namespace detail {

// Uniform random size-s subset of {0,...,n-1} (Floyd's algorithm), sorted.
inline std::vector<std::size_t> random_subset(std::size_t n, std::size_t s, CounterRng& rng) {
  std::vector<std::size_t> out;
  out.reserve(s);
  for (std::size_t j = n - s; j < n; ++j) {
    const std::size_t t = rng.next_below(j + 1);
    if (std::find(out.begin(), out.end(), t) != out.end())
      out.push_back(j);
    else
      out.push_back(t);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// s i.i.d. normals scaled to the unit sphere S^(s-1).
inline std::vector<double> unit_sphere_point(std::size_t s, CounterRng& rng) {
  std::vector<double> v(s);
  for (;;) {
    double norm2 = 0.0;
    for (std::size_t j = 0; j < s; ++j) {
      v[j] = rng.next_normal();
      norm2 += v[j] * v[j];
    }
    if (norm2 > 0.0) {
      const double inv = 1.0 / std::sqrt(norm2);
      for (double& x : v) x *= inv;
      return v;
    }
  }
}

}  // namespace detail

inline RowMatrix gen_sparse_sphere(const EnsembleSpec& spec) {
  spec.validate();
  if (spec.kind != Ensemble::sparse_sphere)
    throw std::invalid_argument("gen_sparse_sphere: wrong ensemble kind");
  RowMatrix mat(spec.n);
  std::vector<SparseEntry> entries(spec.s);
  for (std::size_t i = 0; i < spec.m; ++i) {
    auto rng = CounterRng::keyed(spec.seed, i);
    const auto support = detail::random_subset(spec.n, spec.s, rng);
    const auto values = detail::unit_sphere_point(spec.s, rng);
    for (std::size_t j = 0; j < spec.s; ++j) entries[j] = {support[j], values[j]};
    mat.add_sparse_row(entries);
  }
  return mat;
}

inline RowMatrix gen_dense_sphere(const EnsembleSpec& spec) {
  spec.validate();
  if (spec.kind != Ensemble::dense_sphere)
    throw std::invalid_argument("gen_dense_sphere: wrong ensemble kind");
  RowMatrix mat(spec.n);
  for (std::size_t i = 0; i < spec.m; ++i) {
    auto rng = CounterRng::keyed(spec.seed, i);
    mat.add_dense_row(detail::unit_sphere_point(spec.n, rng));
  }
  return mat;
}

inline RowMatrix gen_matrix(const EnsembleSpec& spec) {
  return spec.kind == Ensemble::sparse_sphere ? gen_sparse_sphere(spec) : gen_dense_sphere(spec);
}

// n i.i.d. standard normal entries.
inline std::vector<double> gen_signal(std::size_t n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("gen_signal: n must be >= 1");
  auto rng = CounterRng::keyed(seed, 0);
  std::vector<double> x(n);
  for (double& v : x) v = rng.next_normal();
  return x;
}

enum class NoiseKind { gaussian, rademacher };

// Assembles the corrupted system: b = A x exactly, then b_tilde = b + eps
// with eps_i of standard deviation sigma*|a_i| (gaussian) or exactly
// +-sigma*|a_i| (rademacher, same mean and variance).
inline Problem make_problem(RowMatrix a, std::span<const double> x, double sigma,
                            std::uint64_t seed, NoiseKind noise = NoiseKind::gaussian) {
  if (x.size() != a.cols()) throw std::invalid_argument("make_problem: x length != n");
  if (!(sigma >= 0.0)) throw std::invalid_argument("make_problem: sigma must be >= 0");
  const std::size_t m = a.rows();
  std::vector<double> b(m);
  for (std::size_t i = 0; i < m; ++i) b[i] = a.row_dot(i, x);
  std::vector<double> b_tilde = b;
  if (sigma > 0.0) {
    auto rng = CounterRng::keyed(seed, 0);
    for (std::size_t i = 0; i < m; ++i) {
      const double scale = sigma * std::sqrt(a.row_norm2(i));
      const double eps = noise == NoiseKind::gaussian
                             ? scale * rng.next_normal()
                             : ((rng.next_u64() >> 63) ? scale : -scale);
      b_tilde[i] += eps;
    }
  }
  Problem p{std::move(a), std::move(b_tilde), sigma, std::vector<double>(x.begin(), x.end()),
            std::move(b)};
  p.validate();
  return p;
}

}  // namespace rkz
