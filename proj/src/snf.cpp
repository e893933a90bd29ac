#include "gerbex/snf.hpp"

#include <cstdlib>

namespace gerbex {

namespace {

long long cmul(long long a, long long b) {
  long long r;
  if (__builtin_mul_overflow(a, b, &r))
    throw StructuralError("integer overflow in normal form");
  return r;
}

long long cadd(long long a, long long b) {
  long long r;
  if (__builtin_add_overflow(a, b, &r))
    throw StructuralError("integer overflow in normal form");
  return r;
}

long long csub(long long a, long long b) {
  long long r;
  if (__builtin_sub_overflow(a, b, &r))
    throw StructuralError("integer overflow in normal form");
  return r;
}

// row[i] -= q * row[t]
void row_op(Mat& m, int i, int t, long long q) {
  for (size_t j = 0; j < m[i].size(); ++j)
    m[i][j] = csub(m[i][j], cmul(q, m[t][j]));
}

void col_op(Mat& m, int j, int t, long long q) {
  for (size_t i = 0; i < m.size(); ++i)
    m[i][j] = csub(m[i][j], cmul(q, m[i][t]));
}

void swap_rows(Mat& m, int a, int b) { std::swap(m[a], m[b]); }

void swap_cols(Mat& m, int a, int b) {
  for (auto& row : m) std::swap(row[a], row[b]);
}

}  // namespace

Mat mat_identity(int n) {
  Mat m(n, std::vector<long long>(n, 0));
  for (int i = 0; i < n; ++i) m[i][i] = 1;
  return m;
}

std::vector<long long> mat_apply(const Mat& a, const std::vector<long long>& x) {
  std::vector<long long> y(a.size(), 0);
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != x.size()) throw StructuralError("matrix/vector shape");
    for (size_t j = 0; j < x.size(); ++j)
      y[i] = cadd(y[i], cmul(a[i][j], x[j]));
  }
  return y;
}

SmithResult smith_normal_form(const Mat& a) {
  int m = static_cast<int>(a.size());
  int n = m ? static_cast<int>(a[0].size()) : 0;
  for (const auto& row : a)
    if (static_cast<int>(row.size()) != n)
      throw StructuralError("ragged matrix");
  SmithResult r;
  r.s = a;
  r.u = mat_identity(m);
  r.v = mat_identity(n);
  Mat& s = r.s;

  for (int t = 0; t < std::min(m, n); ++t) {
    // pivot: nonzero entry of least magnitude in the remaining block
    int pi = -1, pj = -1;
    for (int i = t; i < m; ++i)
      for (int j = t; j < n; ++j)
        if (s[i][j] != 0 &&
            (pi < 0 || std::llabs(s[i][j]) < std::llabs(s[pi][pj]))) {
          pi = i;
          pj = j;
        }
    if (pi < 0) break;
    swap_rows(s, t, pi);
    swap_rows(r.u, t, pi);
    swap_cols(s, t, pj);
    swap_cols(r.v, t, pj);

    for (bool dirty = true; dirty;) {
      dirty = false;
      for (int i = t + 1; i < m; ++i) {
        if (s[i][t] == 0) continue;
        long long q = s[i][t] / s[t][t];
        row_op(s, i, t, q);
        row_op(r.u, i, t, q);
        if (s[i][t] != 0) {  // remainder became the smaller pivot
          swap_rows(s, t, i);
          swap_rows(r.u, t, i);
          dirty = true;
        }
      }
      for (int j = t + 1; j < n; ++j) {
        if (s[t][j] == 0) continue;
        long long q = s[t][j] / s[t][t];
        col_op(s, j, t, q);
        col_op(r.v, j, t, q);
        if (s[t][j] != 0) {
          swap_cols(s, t, j);
          swap_cols(r.v, t, j);
          dirty = true;
        }
      }
      if (dirty) continue;
      // divisibility of the remaining block by the pivot
      for (int i = t + 1; i < m && !dirty; ++i)
        for (int j = t + 1; j < n && !dirty; ++j)
          if (s[i][j] % s[t][t] != 0) {
            row_op(s, t, i, -1);  // row t += row i
            row_op(r.u, t, i, -1);
            dirty = true;
          }
    }
    if (s[t][t] < 0) {
      for (int j = 0; j < n; ++j) s[t][j] = csub(0, s[t][j]);
      for (int j = 0; j < m; ++j) r.u[t][j] = csub(0, r.u[t][j]);
    }
  }
  r.rank = 0;
  for (int t = 0; t < std::min(m, n); ++t)
    if (s[t][t] != 0) ++r.rank;
  return r;
}

namespace {

std::optional<std::vector<long long>> solve_with(
    const SmithResult& r, int m, int n, const std::vector<long long>& b) {
  std::vector<long long> c = mat_apply(r.u, b);
  std::vector<long long> y(n, 0);
  for (int i = 0; i < m; ++i) {
    long long d = (i < n) ? r.s[i][i] : 0;
    if (d == 0) {
      if (c[i] != 0) return std::nullopt;
    } else {
      if (c[i] % d != 0) return std::nullopt;
      y[i] = c[i] / d;
    }
  }
  return mat_apply(r.v, y);
}

}  // namespace

std::optional<std::vector<long long>> solve_linear(
    const Mat& a, const std::vector<long long>& b) {
  int m = static_cast<int>(a.size());
  int n = m ? static_cast<int>(a[0].size()) : 0;
  if (static_cast<int>(b.size()) != m)
    throw StructuralError("rhs length mismatch");
  if (m == 0) return std::vector<long long>(n, 0);
  return solve_with(smith_normal_form(a), m, n, b);
}

std::optional<Mat> solve_linear_columns(const Mat& a, const Mat& b) {
  int m = static_cast<int>(a.size());
  int n = m ? static_cast<int>(a[0].size()) : 0;
  if (static_cast<int>(b.size()) != m && !(m == 0 && b.empty()))
    throw StructuralError("rhs row count mismatch");
  int cols = b.empty() ? 0 : static_cast<int>(b[0].size());
  Mat out(cols, std::vector<long long>(n, 0));
  if (m == 0) return out;
  SmithResult r = smith_normal_form(a);
  for (int j = 0; j < cols; ++j) {
    std::vector<long long> rhs(m);
    for (int i = 0; i < m; ++i) rhs[i] = b[i][j];
    auto x = solve_with(r, m, n, rhs);
    if (!x) return std::nullopt;
    out[j] = std::move(*x);
  }
  return out;  // out[j] solves a * out[j] = column j of b
}

Mat row_lattice_basis(Mat gens) {
  int m = static_cast<int>(gens.size());
  int n = m ? static_cast<int>(gens[0].size()) : 0;
  int r = 0;
  for (int c = 0; c < n && r < m; ++c) {
    // gcd-reduce column c among rows >= r until at most one entry remains
    for (bool again = true; again;) {
      again = false;
      int best = -1;
      for (int i = r; i < m; ++i)
        if (gens[i][c] != 0 &&
            (best < 0 || std::llabs(gens[i][c]) < std::llabs(gens[best][c])))
          best = i;
      if (best < 0) break;
      for (int i = r; i < m; ++i) {
        if (i == best || gens[i][c] == 0) continue;
        long long q = gens[i][c] / gens[best][c];
        for (int j = 0; j < n; ++j)
          gens[i][j] = csub(gens[i][j], cmul(q, gens[best][j]));
        if (gens[i][c] != 0) again = true;
      }
      if (!again) {
        std::swap(gens[r], gens[best]);
        if (gens[r][c] < 0)
          for (int j = 0; j < n; ++j) gens[r][j] = -gens[r][j];
        ++r;
      }
    }
  }
  gens.resize(r);
  return gens;
}

Mat kernel_basis(const Mat& a) {
  int m = static_cast<int>(a.size());
  int n = m ? static_cast<int>(a[0].size()) : 0;
  if (m == 0) return {};  // caller treats the whole domain as kernel
  SmithResult r = smith_normal_form(a);
  Mat out;
  for (int j = r.rank; j < n; ++j) {
    std::vector<long long> col(n);
    for (int i = 0; i < n; ++i) col[i] = r.v[i][j];
    out.push_back(std::move(col));
  }
  return out;
}

}  // namespace gerbex
