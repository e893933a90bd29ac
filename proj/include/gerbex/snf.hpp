#pragma once

#include <optional>
#include <vector>

#include "gerbex/common.hpp"

namespace gerbex {

// Dense integer matrix, row major. Entries stay small in practice but all
// arithmetic is overflow checked and throws StructuralError on wraparound.
using Mat = std::vector<std::vector<long long>>;

Mat mat_identity(int n);
std::vector<long long> mat_apply(const Mat& a, const std::vector<long long>& x);

struct SmithResult {
  Mat u, s, v;  // u * a * v = s, u and v unimodular, s diagonal, d1 | d2 | ...
  int rank = 0;
};

SmithResult smith_normal_form(const Mat& a);

// One solution of a * x = b over the integers, or nullopt when none exists.
std::optional<std::vector<long long>> solve_linear(
    const Mat& a, const std::vector<long long>& b);

// Columnwise a * X = B with a single normal form; nullopt when any column
// has no solution.
std::optional<Mat> solve_linear_columns(const Mat& a, const Mat& b);

// Rows of the result form a basis of { x : a * x = 0 }.
Mat kernel_basis(const Mat& a);

// Independent rows spanning the same lattice as the given generating rows
// (integer row echelon form).
Mat row_lattice_basis(Mat gens);

}  // namespace gerbex
