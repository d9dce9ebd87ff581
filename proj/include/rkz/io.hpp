#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rkz/linalg.hpp"
#include "rkz/solver.hpp"

namespace rkz {

// Shortest decimal string that parses back to exactly the same double.
// Keeps text outputs both readable and bit-exact under round trips.
inline std::string format_double(double v) {
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  return buf;
}

// Matrix file format: a header line "m n dense|sparse", then one row per
// line. Dense rows hold n whitespace-separated values; sparse rows hold
// index:value pairs with strictly increasing indices. A matrix containing
// any sparse row is written in sparse mode (dense rows then list every
// column). Values round-trip bit-exactly.

inline void write_matrix(std::ostream& os, const RowMatrix& mat) {
  bool any_sparse = false;
  for (std::size_t i = 0; i < mat.rows(); ++i) any_sparse |= !mat.row_is_dense(i);
  os << mat.rows() << ' ' << mat.cols() << ' ' << (any_sparse ? "sparse" : "dense") << '\n';
  for (std::size_t i = 0; i < mat.rows(); ++i) {
    const auto vals = mat.row_values(i);
    if (!any_sparse) {
      for (std::size_t j = 0; j < vals.size(); ++j) {
        if (j) os << ' ';
        os << format_double(vals[j]);
      }
    } else if (mat.row_is_dense(i)) {
      for (std::size_t j = 0; j < vals.size(); ++j) {
        if (j) os << ' ';
        os << j << ':' << format_double(vals[j]);
      }
    } else {
      const auto idx = mat.row_indices(i);
      for (std::size_t j = 0; j < idx.size(); ++j) {
        if (j) os << ' ';
        os << idx[j] << ':' << format_double(vals[j]);
      }
    }
    os << '\n';
  }
}

inline RowMatrix read_matrix(std::istream& is) {
  std::size_t m = 0, n = 0;
  std::string mode;
  if (!(is >> m >> n >> mode) || (mode != "dense" && mode != "sparse"))
    throw std::runtime_error("read_matrix: bad header, expected 'm n dense|sparse'");
  RowMatrix mat(n);
  if (mode == "dense") {
    std::vector<double> row(n);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j)
        if (!(is >> row[j])) throw std::runtime_error("read_matrix: truncated dense row");
      mat.add_dense_row(row);
    }
  } else {
    std::string line;
    std::getline(is, line);  // rest of header line
    std::vector<SparseEntry> entries;
    for (std::size_t i = 0; i < m; ++i) {
      if (!std::getline(is, line)) throw std::runtime_error("read_matrix: truncated sparse row");
      entries.clear();
      std::istringstream ls(line);
      std::string tok;
      while (ls >> tok) {
        const auto colon = tok.find(':');
        if (colon == std::string::npos)
          throw std::runtime_error("read_matrix: expected index:value pair");
        entries.push_back({static_cast<std::size_t>(std::stoull(tok.substr(0, colon))),
                           std::stod(tok.substr(colon + 1))});
      }
      mat.add_sparse_row(entries);
    }
  }
  return mat;
}

// Problem sidecar: JSON holding sigma, the generator seed, and the vectors
// x_true, b, b_tilde. x_true and b may be omitted (real-data mode); the
// matrix itself lives in the matrix file above.

inline void write_problem_sidecar(std::ostream& os, const Problem& p, std::uint64_t seed) {
  nlohmann::ordered_json j;
  j["sigma"] = p.sigma;
  j["seed"] = seed;
  if (p.x_true) j["x_true"] = *p.x_true;
  if (p.b) j["b"] = *p.b;
  j["b_tilde"] = p.b_tilde;
  os << j.dump(2) << '\n';
}

inline Problem read_problem_sidecar(std::istream& is, RowMatrix mat,
                                    std::uint64_t* seed_out = nullptr) {
  nlohmann::json j;
  is >> j;
  Problem p{std::move(mat), {}, 0.0, std::nullopt, std::nullopt};
  p.sigma = j.at("sigma").get<double>();
  p.b_tilde = j.at("b_tilde").get<std::vector<double>>();
  if (j.contains("x_true")) p.x_true = j["x_true"].get<std::vector<double>>();
  if (j.contains("b")) p.b = j["b"].get<std::vector<double>>();
  if (seed_out) *seed_out = j.value("seed", 0ull);
  p.validate();
  return p;
}

inline void save_matrix(const std::string& path, const RowMatrix& mat) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  write_matrix(os, mat);
}

inline RowMatrix load_matrix(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  return read_matrix(is);
}

inline void save_problem(const std::string& dir, const Problem& p, std::uint64_t seed) {
  save_matrix(dir + "/matrix.txt", p.A);
  std::ofstream os(dir + "/problem.json");
  if (!os) throw std::runtime_error("cannot open for writing: " + dir + "/problem.json");
  write_problem_sidecar(os, p, seed);
}

inline Problem load_problem(const std::string& dir, std::uint64_t* seed_out = nullptr) {
  auto mat = load_matrix(dir + "/matrix.txt");
  std::ifstream is(dir + "/problem.json");
  if (!is) throw std::runtime_error("cannot open: " + dir + "/problem.json");
  return read_problem_sidecar(is, std::move(mat), seed_out);
}

}  // namespace rkz
