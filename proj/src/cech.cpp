#include "gerbex/cech.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "gerbex/snf.hpp"

namespace gerbex {

namespace {

constexpr long long kSearchCap = 4'000'000;   // DFS candidate tests
constexpr long long kTwistCap = 1 << 20;       // twist tuples
constexpr long long kEnumCap = 2'000'000;      // cochains enumerated

std::vector<Elt> flatten(const std::vector<std::vector<Elt>>& vals) {
  std::vector<Elt> out;
  for (const auto& v : vals) out.insert(out.end(), v.begin(), v.end());
  return out;
}

}  // namespace

Cochain Cochain::identity(const SheafOfGroups& f, const Cover& c, int degree) {
  if (degree < 0) throw StructuralError("negative cochain degree");
  Cochain out;
  out.sheaf = &f;
  out.cover = c;
  out.degree = degree;
  long long n = out.tuple_count();
  out.vals.reserve(n);
  for (long long i = 0; i < n; ++i) {
    auto t = out.decode(i);
    out.vals.push_back(f.fam_id(out.face(t)));
  }
  return out;
}

long long Cochain::tuple_count() const {
  long long n = 1;
  for (int i = 0; i <= degree; ++i) n *= cover.size();
  return n;
}

long long Cochain::encode(std::span<const int> t) const {
  if (static_cast<int>(t.size()) != degree + 1)
    throw StructuralError("tuple arity mismatch");
  long long idx = 0, w = 1;
  for (int i = 0; i <= degree; ++i) {
    if (t[i] < 0 || t[i] >= cover.size())
      throw StructuralError("part index out of range");
    idx += t[i] * w;
    w *= cover.size();
  }
  return idx;
}

std::vector<int> Cochain::decode(long long idx) const {
  std::vector<int> t(degree + 1);
  for (int i = 0; i <= degree; ++i) {
    t[i] = static_cast<int>(idx % cover.size());
    idx /= cover.size();
  }
  return t;
}

const std::vector<Elt>& Cochain::at(std::span<const int> t) const {
  return vals[encode(t)];
}

void Cochain::set(std::span<const int> t, std::vector<Elt> v) {
  vals[encode(t)] = std::move(v);
}

bool Cochain::same_shape(const Cochain& o) const {
  return sheaf == o.sheaf && degree == o.degree &&
         cover.target == o.cover.target && cover.parts == o.cover.parts;
}

Cochain coboundary0(const Cochain& b) {
  if (b.degree != 0) throw StructuralError("coboundary0 needs degree 0");
  const SheafOfGroups& f = *b.sheaf;
  Cochain out;
  out.sheaf = b.sheaf;
  out.cover = b.cover;
  out.degree = 1;
  int m = b.parts();
  out.vals.resize(static_cast<size_t>(m) * m);
  for (int k0 = 0; k0 < m; ++k0)
    for (int k1 = 0; k1 < m; ++k1) {
      std::vector<int> t{k0, k1};
      Open w = out.face(t);
      auto r0 = f.restrict_fam(b.cover.parts[k0], b.vals[k0], w);
      auto r1 = f.restrict_fam(b.cover.parts[k1], b.vals[k1], w);
      out.set(t, f.fam_mul(w, f.fam_inv(w, r1), r0));
    }
  return out;
}

Cochain coboundary1(const Cochain& b) {
  if (b.degree != 1) throw StructuralError("coboundary1 needs degree 1");
  const SheafOfGroups& f = *b.sheaf;
  Cochain out;
  out.sheaf = b.sheaf;
  out.cover = b.cover;
  out.degree = 2;
  int m = b.parts();
  out.vals.resize(static_cast<size_t>(m) * m * m);
  for (int k0 = 0; k0 < m; ++k0)
    for (int k1 = 0; k1 < m; ++k1)
      for (int k2 = 0; k2 < m; ++k2) {
        std::vector<int> t{k0, k1, k2};
        Open w = out.face(t);
        auto r01 = f.restrict_fam(b.face(std::vector<int>{k0, k1}),
                                  b.at(std::vector<int>{k0, k1}), w);
        auto r02 = f.restrict_fam(b.face(std::vector<int>{k0, k2}),
                                  b.at(std::vector<int>{k0, k2}), w);
        auto r12 = f.restrict_fam(b.face(std::vector<int>{k1, k2}),
                                  b.at(std::vector<int>{k1, k2}), w);
        out.set(t, f.fam_mul(w, f.fam_mul(w, f.fam_inv(w, r02), r01), r12));
      }
  return out;
}

Cochain coboundary_abelian(const Cochain& b) {
  if (!b.sheaf->abelian())
    throw StructuralError("alternating coboundary needs an abelian sheaf");
  const SheafOfGroups& f = *b.sheaf;
  Cochain out;
  out.sheaf = b.sheaf;
  out.cover = b.cover;
  out.degree = b.degree + 1;
  long long n = out.tuple_count();
  out.vals.resize(n);
  for (long long idx = 0; idx < n; ++idx) {
    auto t = out.decode(idx);
    Open w = out.face(t);
    auto acc = f.fam_id(w);
    for (int j = 0; j <= out.degree; ++j) {
      std::vector<int> sub;
      for (int i = 0; i <= out.degree; ++i)
        if (i != j) sub.push_back(t[i]);
      auto v = f.restrict_fam(b.face(sub), b.at(sub), w);
      if (j % 2) v = f.fam_inv(w, v);
      acc = f.fam_mul(w, acc, v);
    }
    out.vals[idx] = std::move(acc);
  }
  return out;
}

CheckResult is_cochain(const Cochain& c) {
  if (!c.sheaf) return CheckResult::fail("no sheaf");
  if (c.degree < 0) return CheckResult::fail("negative degree");
  if (static_cast<long long>(c.vals.size()) != c.tuple_count())
    return CheckResult::fail("value count does not match tuple count");
  for (long long i = 0; i < c.tuple_count(); ++i) {
    auto t = c.decode(i);
    if (!c.sheaf->is_section(c.face(t), c.vals[i]))
      return CheckResult::fail("value at a tuple is not a section");
  }
  return CheckResult::pass();
}

CheckResult is_cocycle(const Cochain& c) {
  if (auto r = is_cochain(c); !r) return r;
  const SheafOfGroups& f = *c.sheaf;
  int m = c.parts();
  if (c.degree == 0) {
    for (int k0 = 0; k0 < m; ++k0)
      for (int k1 = 0; k1 < m; ++k1) {
        std::vector<int> t{k0, k1};
        Open w = nerve_face(c.cover, t);
        if (f.restrict_fam(c.cover.parts[k0], c.vals[k0], w) !=
            f.restrict_fam(c.cover.parts[k1], c.vals[k1], w))
          return CheckResult::fail("values disagree on an overlap");
      }
    return CheckResult::pass();
  }
  if (c.degree == 1) {
    for (int k0 = 0; k0 < m; ++k0)
      for (int k1 = 0; k1 < m; ++k1)
        for (int k2 = 0; k2 < m; ++k2) {
          std::vector<int> t{k0, k1, k2};
          Open w = nerve_face(c.cover, t);
          auto r01 = f.restrict_fam(c.face(std::vector<int>{k0, k1}),
                                    c.at(std::vector<int>{k0, k1}), w);
          auto r02 = f.restrict_fam(c.face(std::vector<int>{k0, k2}),
                                    c.at(std::vector<int>{k0, k2}), w);
          auto r12 = f.restrict_fam(c.face(std::vector<int>{k1, k2}),
                                    c.at(std::vector<int>{k1, k2}), w);
          if (f.fam_mul(w, r12, r01) != r02)
            return CheckResult::fail("degree-1 cocycle identity fails");
        }
    return CheckResult::pass();
  }
  if (c.degree == 2) {
    Cochain d = coboundary_abelian(c);
    Cochain id3 = Cochain::identity(f, c.cover, 3);
    if (d.vals != id3.vals)
      return CheckResult::fail("degree-2 cocycle identity fails");
    return CheckResult::pass();
  }
  throw StructuralError("cocycle checks stop at degree 2");
}

Cochain cochain_mul(const Cochain& a, const Cochain& b) {
  if (!a.same_shape(b)) throw StructuralError("cochain shape mismatch");
  Cochain out = a;
  for (long long i = 0; i < a.tuple_count(); ++i)
    out.vals[i] = a.sheaf->fam_mul(a.face(a.decode(i)), a.vals[i], b.vals[i]);
  return out;
}

Cochain cochain_inv(const Cochain& a) {
  Cochain out = a;
  for (long long i = 0; i < a.tuple_count(); ++i)
    out.vals[i] = a.sheaf->fam_inv(a.face(a.decode(i)), a.vals[i]);
  return out;
}

Cochain apply_hom(const SheafHom& f, const Cochain& c) {
  if (f.src != c.sheaf) throw StructuralError("hom source is not the sheaf");
  Cochain out = c;
  out.sheaf = f.dst;
  for (long long i = 0; i < c.tuple_count(); ++i)
    out.vals[i] = f.apply_fam(c.face(c.decode(i)), c.vals[i]);
  return out;
}

Cochain refine_cochain(const Cochain& c, const Refinement& r) {
  if (r.fine.target != c.cover.target)
    throw StructuralError("refinement targets a different open");
  if (r.phi.size() != r.fine.parts.size())
    throw StructuralError("refinement map size mismatch");
  for (size_t l = 0; l < r.fine.parts.size(); ++l) {
    if (r.phi[l] < 0 || r.phi[l] >= c.cover.size())
      throw StructuralError("refinement map out of range");
    if (!open_subset(r.fine.parts[l], c.cover.parts[r.phi[l]]))
      throw StructuralError("fine part not inside its coarse part");
  }
  Cochain out;
  out.sheaf = c.sheaf;
  out.cover = r.fine;
  out.degree = c.degree;
  long long n = out.tuple_count();
  out.vals.resize(n);
  for (long long i = 0; i < n; ++i) {
    auto t = out.decode(i);
    std::vector<int> ct(t.size());
    for (size_t j = 0; j < t.size(); ++j) ct[j] = r.phi[t[j]];
    out.vals[i] = c.sheaf->restrict_fam(c.face(ct), c.at(ct), out.face(t));
  }
  return out;
}

Cochain refine_to_minimal(const Cochain& c) {
  const FiniteSpace& sp = c.sheaf->space();
  Cover mc = minimal_open_cover(sp, c.cover.target);
  if (mc.parts == c.cover.parts) return c;
  Refinement r = refine_into(c.cover, mc);
  return refine_cochain(c, r);
}

// ---------------------------------------------------------------------------
// degree-1 solving and twisted equivalence: section-family search

namespace {

// b_k = b_j * c_{(j,k)}^{-1} on overlaps, scanning parts in order; returns
// the lexicographically first solution.
std::optional<std::vector<std::vector<Elt>>> solve_deg1_families(
    const Cochain& c) {
  const SheafOfGroups& f = *c.sheaf;
  int m = c.parts();
  std::vector<std::vector<Elt>> chosen(m);
  long long work = 0;
  std::vector<int> stack_idx(m, 0);
  int k = 0;
  while (true) {
    if (k == m) return chosen;
    const auto& sg = f.sections(c.cover.parts[k]);
    bool advanced = false;
    for (int& i = stack_idx[k]; i < sg.size(); ++i) {
      if (++work > kSearchCap)
        throw StructuralError("coboundary search exceeded its work cap");
      const auto& cand = sg.elems[i];
      bool ok = true;
      for (int j = 0; j < k && ok; ++j) {
        std::vector<int> t{j, k};
        Open w = nerve_face(c.cover, t);
        if (w == 0) continue;
        auto lhs = f.restrict_fam(c.cover.parts[k], cand, w);
        auto rhs = f.fam_mul(
            w, f.restrict_fam(c.cover.parts[j], chosen[j], w),
            f.fam_inv(w, f.restrict_fam(c.face(t), c.at(t), w)));
        ok = lhs == rhs;
      }
      if (ok) {
        chosen[k] = cand;
        ++i;
        ++k;
        if (k < m) stack_idx[k] = 0;
        advanced = true;
        break;
      }
    }
    if (!advanced) {
      if (k == 0) return std::nullopt;
      --k;
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// linearized alternating complex (abelian sheaves)

namespace {

std::vector<AbelianBasis> point_bases(const SheafOfGroups& f) {
  std::vector<AbelianBasis> out;
  for (int x = 0; x < f.space().size(); ++x)
    out.push_back(abelian_basis(f.stalk(x)));
  return out;
}

struct LinDeg {
  int degree = 0;
  std::vector<std::vector<int>> tuples;  // increasing, nonempty face
  std::map<std::vector<int>, int> pos;
  std::vector<Open> faces;
  std::vector<std::vector<int>> mins;
  std::vector<std::vector<int>> off;  // per tuple, per min point
  int width = 0;
  std::vector<long long> mod;  // per variable
};

LinDeg build_lin(const SheafOfGroups& f, const Cover& c, int degree,
                 const std::vector<AbelianBasis>& pb) {
  LinDeg lin;
  lin.degree = degree;
  int m = c.size();
  std::vector<int> cur;
  auto rec = [&](auto&& self, int start) -> void {
    if (static_cast<int>(cur.size()) == degree + 1) {
      Open w = nerve_face(c, cur);
      if (w == 0) return;
      lin.pos[cur] = static_cast<int>(lin.tuples.size());
      lin.tuples.push_back(cur);
      lin.faces.push_back(w);
      lin.mins.push_back(f.space().minimal_points(w));
      return;
    }
    for (int i = start; i < m; ++i) {
      cur.push_back(i);
      self(self, i + 1);
      cur.pop_back();
    }
  };
  rec(rec, 0);
  lin.off.resize(lin.tuples.size());
  for (size_t t = 0; t < lin.tuples.size(); ++t) {
    for (int mp : lin.mins[t]) {
      lin.off[t].push_back(lin.width);
      lin.width += pb[mp].rank();
      for (int o : pb[mp].orders) lin.mod.push_back(o);
    }
  }
  return lin;
}

using RowCombo = std::vector<std::vector<std::pair<int, long long>>>;

// dlog rows at point q of the value carried by min point `mi` of tuple `tp`
RowCombo block_of(const SheafOfGroups& f, const LinDeg& lin, int tp, int mi,
                  int q, const std::vector<AbelianBasis>& pb) {
  int mp = lin.mins[tp][mi];
  int base = lin.off[tp][mi];
  RowCombo rows(pb[q].rank());
  if (mp == q) {
    for (int i = 0; i < pb[q].rank(); ++i) rows[i].push_back({base + i, 1});
    return rows;
  }
  for (int j = 0; j < pb[mp].rank(); ++j) {
    Elt img = f.comp(mp, q, pb[mp].gens[j]);
    const auto& d = pb[q].dlog[img];
    for (int i = 0; i < pb[q].rank(); ++i)
      if (d[i]) rows[i].push_back({base + j, d[i]});
  }
  return rows;
}

// value of the tuple's section at q, via the first min point below q
RowCombo coords_at(const SheafOfGroups& f, const LinDeg& lin, int tp, int q,
                   const std::vector<AbelianBasis>& pb) {
  for (size_t mi = 0; mi < lin.mins[tp].size(); ++mi)
    if (f.space().leq(lin.mins[tp][mi], q))
      return block_of(f, lin, tp, static_cast<int>(mi), q, pb);
  throw StructuralError("point with no minimal point below");
}

struct Rows {
  Mat a;
  std::vector<long long> mod;
  std::vector<long long> rhs;
};

// clash constraints: all min points below q propagate the same value
void compat_rows(const SheafOfGroups& f, const LinDeg& lin,
                 const std::vector<AbelianBasis>& pb, Rows& out) {
  for (size_t tp = 0; tp < lin.tuples.size(); ++tp) {
    for (int q : f.space().points_of(lin.faces[tp])) {
      int first = -1;
      for (size_t mi = 0; mi < lin.mins[tp].size(); ++mi) {
        if (!f.space().leq(lin.mins[tp][mi], q)) continue;
        if (first < 0) {
          first = static_cast<int>(mi);
          continue;
        }
        auto b0 = block_of(f, lin, static_cast<int>(tp), first, q, pb);
        auto b1 = block_of(f, lin, static_cast<int>(tp), static_cast<int>(mi),
                           q, pb);
        for (int i = 0; i < pb[q].rank(); ++i) {
          std::vector<long long> row(lin.width, 0);
          for (auto [v, coeff] : b1[i]) row[v] += coeff;
          for (auto [v, coeff] : b0[i]) row[v] -= coeff;
          out.a.push_back(std::move(row));
          out.mod.push_back(pb[q].orders[i]);
          out.rhs.push_back(0);
        }
      }
    }
  }
}

// standard alternating coboundary rows, one per (target tuple, target min
// point, basis index), in exactly the target variable order
void delta_rows(const SheafOfGroups& f, const LinDeg& src, const LinDeg& tgt,
                const std::vector<AbelianBasis>& pb, const Cochain* rhs,
                Rows& out) {
  for (size_t ts = 0; ts < tgt.tuples.size(); ++ts) {
    const auto& s = tgt.tuples[ts];
    for (int q : tgt.mins[ts]) {
      std::vector<std::vector<long long>> rows(
          pb[q].rank(), std::vector<long long>(src.width, 0));
      for (size_t j = 0; j < s.size(); ++j) {
        std::vector<int> sub;
        for (size_t i = 0; i < s.size(); ++i)
          if (i != j) sub.push_back(s[i]);
        auto it = src.pos.find(sub);
        if (it == src.pos.end())
          throw StructuralError("face of a nonempty tuple missing");
        auto combo = coords_at(f, src, it->second, q, pb);
        long long sign = (j % 2) ? -1 : 1;
        for (int i = 0; i < pb[q].rank(); ++i)
          for (auto [v, coeff] : combo[i]) rows[i][v] += sign * coeff;
      }
      for (int i = 0; i < pb[q].rank(); ++i) {
        long long r = 0;
        if (rhs) {
          const auto& val = rhs->at(s);
          int ci = f.coord_of(tgt.faces[ts], q);
          r = pb[q].dlog[val[ci]][i];
        }
        out.a.push_back(std::move(rows[i]));
        out.mod.push_back(pb[q].orders[i]);
        out.rhs.push_back(r);
      }
    }
  }
}

Mat augmented(const Rows& r, int width) {
  int n = static_cast<int>(r.a.size());
  Mat aug(n, std::vector<long long>(width + n, 0));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < width; ++j) aug[i][j] = r.a[i][j];
    aug[i][width + i] = r.mod[i];
  }
  return aug;
}

std::optional<std::vector<long long>> solve_rows(const Rows& r, int width) {
  if (r.a.empty()) return std::vector<long long>(width, 0);
  auto x = solve_linear(augmented(r, width), r.rhs);
  if (!x) return std::nullopt;
  x->resize(width);
  return x;
}

// spanning rows of { x : rows hold with rhs 0 }
Mat kernel_rows(const Rows& r, int width) {
  if (r.a.empty()) return mat_identity(width);
  Mat k = kernel_basis(augmented(r, width));
  for (auto& row : k) row.resize(width);
  return k;
}

Elt elt_from_exps(const FiniteGroup& g, const AbelianBasis& b,
                  std::span<const long long> e) {
  Elt v = g.id();
  for (int i = 0; i < b.rank(); ++i) {
    long long k = e[i] % b.orders[i];
    if (k < 0) k += b.orders[i];
    for (long long s = 0; s < k; ++s) v = g.mul(v, b.gens[i]);
  }
  return v;
}

// coordinates -> per-tuple sections
std::vector<std::vector<Elt>> sections_from_coords(
    const SheafOfGroups& f, const LinDeg& lin,
    const std::vector<AbelianBasis>& pb, std::span<const long long> x) {
  std::vector<std::vector<Elt>> out(lin.tuples.size());
  for (size_t tp = 0; tp < lin.tuples.size(); ++tp) {
    std::vector<Elt> minvals;
    for (size_t mi = 0; mi < lin.mins[tp].size(); ++mi) {
      int mp = lin.mins[tp][mi];
      minvals.push_back(elt_from_exps(
          f.stalk(mp), pb[mp],
          x.subspan(lin.off[tp][mi], pb[mp].rank())));
    }
    auto fam = f.extend_from_minimal(lin.faces[tp], minvals);
    if (!fam)
      throw StructuralError("solved coordinates clash across minimal points");
    out[tp] = std::move(*fam);
  }
  return out;
}

std::optional<Cochain> solve_deg2(const Cochain& c) {
  const SheafOfGroups& f = *c.sheaf;
  auto pb = point_bases(f);
  LinDeg l1 = build_lin(f, c.cover, 1, pb);
  LinDeg l2 = build_lin(f, c.cover, 2, pb);
  Rows eq;
  compat_rows(f, l1, pb, eq);
  delta_rows(f, l1, l2, pb, &c, eq);
  auto x = solve_rows(eq, l1.width);
  if (!x) return std::nullopt;
  auto alt = sections_from_coords(f, l1, pb, *x);

  Cochain b;
  b.sheaf = c.sheaf;
  b.cover = c.cover;
  b.degree = 1;
  int m = c.parts();
  b.vals.resize(static_cast<size_t>(m) * m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      std::vector<int> t{i, j};
      if (i < j) {
        auto it = l1.pos.find(t);
        b.set(t, it == l1.pos.end() ? std::vector<Elt>{} : alt[it->second]);
      } else if (i == j) {
        b.set(t, c.at(std::vector<int>{i, i, i}));
      }
    }
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      // value at (j, i) from the (i, j) value and the degenerate triple
      std::vector<int> fwd{i, j}, rev{j, i}, tri{i, j, i};
      Open w = b.face(fwd);
      auto bii = f.restrict_fam(b.face(std::vector<int>{i, i}),
                                b.at(std::vector<int>{i, i}), w);
      b.set(rev, f.fam_mul(w, f.fam_mul(w, f.fam_inv(w, b.at(fwd)), bii),
                           c.at(tri)));
    }
  Cochain check = coboundary1(b);
  if (check.vals != c.vals)
    throw StructuralError(
        "internal: ordered extension of an alternating solution failed");
  return b;
}

}  // namespace

std::optional<Cochain> solve_coboundary(const Cochain& c) {
  if (auto r = is_cochain(c); !r)
    throw StructuralError("not a cochain: " + r.reason);
  if (c.degree == 1) {
    if (!is_cocycle(c)) return std::nullopt;
    auto fams = solve_deg1_families(c);
    if (!fams) return std::nullopt;
    Cochain b;
    b.sheaf = c.sheaf;
    b.cover = c.cover;
    b.degree = 0;
    b.vals = std::move(*fams);
    return b;
  }
  if (c.degree == 2) {
    if (!c.sheaf->abelian())
      throw StructuralError("degree-2 solving needs an abelian sheaf");
    if (!is_cocycle(c)) return std::nullopt;
    return solve_deg2(c);
  }
  throw StructuralError("coboundary solving handles degrees 1 and 2");
}

bool class_is_trivial(const Cochain& c) {
  Cochain r = refine_to_minimal(c);
  if (r.degree == 0) {
    Cochain id = Cochain::identity(*r.sheaf, r.cover, 0);
    return r.vals == id.vals;
  }
  return solve_coboundary(r).has_value();
}

bool classes_equal(const Cochain& a, const Cochain& b) {
  if (a.sheaf != b.sheaf || a.degree != b.degree ||
      a.cover.target != b.cover.target)
    throw StructuralError("class comparison across different settings");
  Cochain am = refine_to_minimal(a);
  Cochain bm = refine_to_minimal(b);
  const SheafOfGroups& f = *am.sheaf;
  if (am.degree == 0) return am.vals == bm.vals;
  if (am.degree == 2) {
    if (!f.abelian())
      throw StructuralError("degree-2 classes need an abelian sheaf");
    return solve_coboundary(cochain_mul(am, cochain_inv(bm))).has_value();
  }
  if (am.degree != 1)
    throw StructuralError("class comparison handles degrees 0 to 2");
  if (!is_cocycle(am) || !is_cocycle(bm))
    throw StructuralError("degree-1 classes are carried by cocycles");
  // twist search: bm_{k0,k1} = f_{k1}^{-1} am_{k0,k1} f_{k0}
  int m = am.parts();
  std::vector<std::vector<Elt>> chosen(m);
  std::vector<int> stack_idx(m, 0);
  long long work = 0;
  int k = 0;
  while (true) {
    if (k == m) return true;
    const auto& sg = f.sections(am.cover.parts[k]);
    bool advanced = false;
    for (int& i = stack_idx[k]; i < sg.size(); ++i) {
      if (++work > kSearchCap)
        throw StructuralError("twist search exceeded its work cap");
      const auto& cand = sg.elems[i];
      bool ok = true;
      for (int j = 0; j <= k && ok; ++j) {
        for (auto [k0, k1] : {std::pair{j, k}, std::pair{k, j}}) {
          std::vector<int> t{k0, k1};
          Open w = nerve_face(am.cover, t);
          if (w == 0) continue;
          const auto& f0 = (k0 == k) ? cand : chosen[k0];
          const auto& f1 = (k1 == k) ? cand : chosen[k1];
          auto lhs = f.fam_mul(
              w,
              f.fam_mul(w,
                        f.fam_inv(w, f.restrict_fam(am.cover.parts[k1], f1, w)),
                        f.restrict_fam(am.face(t), am.at(t), w)),
              f.restrict_fam(am.cover.parts[k0], f0, w));
          if (lhs != bm.at(t)) {
            ok = false;
            break;
          }
        }
      }
      if (ok) {
        chosen[k] = cand;
        ++i;
        ++k;
        if (k < m) stack_idx[k] = 0;
        advanced = true;
        break;
      }
    }
    if (!advanced) {
      if (k == 0) return false;
      --k;
    }
  }
}

// ---------------------------------------------------------------------------
// cohomology groups

long long CohomologyGroup::order() const {
  long long n = 1;
  for (long long d : invariants) n *= d;
  return n;
}

namespace {

CohomologyGroup invariants_from_lattices(const Mat& k_gens, Mat i_gens,
                                         int width) {
  if (width == 0) return CohomologyGroup{{}};
  Mat kb = row_lattice_basis(k_gens);
  int k = static_cast<int>(kb.size());
  if (k == 0) return CohomologyGroup{{}};
  // express every image generator in the kernel basis
  Mat kbt(width, std::vector<long long>(k, 0));
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < width; ++j) kbt[j][i] = kb[i][j];
  Mat rhs(width, std::vector<long long>(i_gens.size(), 0));
  for (size_t g = 0; g < i_gens.size(); ++g)
    for (int j = 0; j < width; ++j) rhs[j][g] = i_gens[g][j];
  auto coeffs = solve_linear_columns(kbt, rhs);
  if (!coeffs)
    throw StructuralError("internal: image does not lie in the kernel");
  SmithResult sr = smith_normal_form(*coeffs);
  if (sr.rank != k)
    throw StructuralError("internal: cohomology group not finite");
  CohomologyGroup out;
  for (int i = 0; i < k; ++i)
    if (sr.s[i][i] > 1) out.invariants.push_back(sr.s[i][i]);
  return out;
}

}  // namespace

CohomologyGroup cohomology_group(const SheafOfGroups& f, const Cover& c,
                                 int degree) {
  if (!f.abelian())
    throw StructuralError("cohomology groups need an abelian sheaf");
  if (degree < 0 || degree > 2)
    throw StructuralError("cohomology degree must be 0, 1 or 2");
  validate_cover(f.space(), c);
  auto pb = point_bases(f);
  LinDeg lp = build_lin(f, c, degree, pb);
  if (lp.width == 0) return CohomologyGroup{{}};
  LinDeg lup = build_lin(f, c, degree + 1, pb);
  Rows keq;
  compat_rows(f, lp, pb, keq);
  delta_rows(f, lp, lup, pb, nullptr, keq);
  Mat k_gens = kernel_rows(keq, lp.width);

  Mat i_gens;
  for (int j = 0; j < lp.width; ++j) {
    std::vector<long long> row(lp.width, 0);
    row[j] = lp.mod[j];
    i_gens.push_back(std::move(row));
  }
  if (degree > 0) {
    LinDeg ldown = build_lin(f, c, degree - 1, pb);
    if (ldown.width > 0) {
      Rows cdown;
      compat_rows(f, ldown, pb, cdown);
      Mat kd = kernel_rows(cdown, ldown.width);
      Rows dmap;
      delta_rows(f, ldown, lp, pb, nullptr, dmap);
      for (const auto& y : kd) i_gens.push_back(mat_apply(dmap.a, y));
    }
  }
  return invariants_from_lattices(k_gens, std::move(i_gens), lp.width);
}

namespace {

// section-level alternating coboundary on the increasing-tuple complex
std::vector<std::vector<Elt>> eval_alt_delta(
    const SheafOfGroups& f, const LinDeg& src, const LinDeg& tgt,
    const std::vector<std::vector<Elt>>& values) {
  std::vector<std::vector<Elt>> out(tgt.tuples.size());
  for (size_t ts = 0; ts < tgt.tuples.size(); ++ts) {
    const auto& s = tgt.tuples[ts];
    Open w = tgt.faces[ts];
    auto acc = f.fam_id(w);
    for (size_t j = 0; j < s.size(); ++j) {
      std::vector<int> sub;
      for (size_t i = 0; i < s.size(); ++i)
        if (i != j) sub.push_back(s[i]);
      auto it = src.pos.find(sub);
      if (it == src.pos.end())
        throw StructuralError("face of a nonempty tuple missing");
      auto v = f.restrict_fam(src.faces[it->second], values[it->second], w);
      if (j % 2) v = f.fam_inv(w, v);
      acc = f.fam_mul(w, acc, v);
    }
    out[ts] = std::move(acc);
  }
  return out;
}

std::vector<Elt> flatten_values(const std::vector<std::vector<Elt>>& vals) {
  return flatten(vals);
}

// odometer over per-tuple section groups; calls fn for each cochain
template <typename Fn>
void for_each_alt_cochain(const SheafOfGroups& f, const LinDeg& lin, Fn&& fn) {
  long long total = 1;
  std::vector<const SectionGroup*> sgs;
  for (size_t t = 0; t < lin.tuples.size(); ++t) {
    sgs.push_back(&f.sections(lin.faces[t]));
    total *= sgs.back()->size();
    if (total > kEnumCap)
      throw StructuralError("cochain complex too large to enumerate");
  }
  std::vector<int> idx(lin.tuples.size(), 0);
  std::vector<std::vector<Elt>> values(lin.tuples.size());
  for (long long step = 0; step < total; ++step) {
    for (size_t t = 0; t < lin.tuples.size(); ++t)
      values[t] = sgs[t]->elems[idx[t]];
    fn(values);
    for (size_t t = 0; t < idx.size(); ++t) {
      if (++idx[t] < sgs[t]->size()) break;
      idx[t] = 0;
    }
    if (lin.tuples.empty()) break;
  }
}

}  // namespace

CohomologyGroup cohomology_group_enumerated(const SheafOfGroups& f,
                                            const Cover& c, int degree) {
  if (!f.abelian())
    throw StructuralError("cohomology groups need an abelian sheaf");
  if (degree < 0 || degree > 2)
    throw StructuralError("cohomology degree must be 0, 1 or 2");
  validate_cover(f.space(), c);
  auto pb = point_bases(f);
  LinDeg lp = build_lin(f, c, degree, pb);
  LinDeg lup = build_lin(f, c, degree + 1, pb);

  std::vector<std::vector<std::vector<Elt>>> zlist;
  std::map<std::vector<Elt>, int> zindex;
  for_each_alt_cochain(f, lp, [&](const std::vector<std::vector<Elt>>& v) {
    auto d = eval_alt_delta(f, lp, lup, v);
    for (size_t t = 0; t < lup.tuples.size(); ++t)
      if (d[t] != f.fam_id(lup.faces[t])) return;
    zindex[flatten_values(v)] = static_cast<int>(zlist.size());
    zlist.push_back(v);
  });

  std::set<std::vector<Elt>> bset;
  std::vector<std::vector<std::vector<Elt>>> blist;
  if (degree == 0) {
    std::vector<std::vector<Elt>> idv(lp.tuples.size());
    for (size_t t = 0; t < lp.tuples.size(); ++t)
      idv[t] = f.fam_id(lp.faces[t]);
    bset.insert(flatten_values(idv));
    blist.push_back(idv);
  } else {
    LinDeg ldown = build_lin(f, c, degree - 1, pb);
    for_each_alt_cochain(f, ldown,
                         [&](const std::vector<std::vector<Elt>>& v) {
                           auto d = eval_alt_delta(f, ldown, lp, v);
                           if (bset.insert(flatten_values(d)).second)
                             blist.push_back(d);
                         });
  }
  for (const auto& b : blist)
    if (!zindex.count(flatten_values(b)))
      throw StructuralError("internal: coboundary outside the cocycles");

  // quotient as an explicit group on coset representatives
  int nz = static_cast<int>(zlist.size());
  std::vector<int> coset_of(nz, -1);
  std::vector<int> reps;
  for (int i = 0; i < nz; ++i) {
    if (coset_of[i] >= 0) continue;
    int id = static_cast<int>(reps.size());
    reps.push_back(i);
    for (const auto& b : blist) {
      std::vector<std::vector<Elt>> prod(lp.tuples.size());
      for (size_t t = 0; t < lp.tuples.size(); ++t)
        prod[t] = f.fam_mul(lp.faces[t], zlist[i][t], b[t]);
      coset_of[zindex.at(flatten_values(prod))] = id;
    }
  }
  int h = static_cast<int>(reps.size());
  if (h > FiniteGroup::kMaxOrder)
    throw StructuralError("quotient too large to materialize");
  std::vector<std::vector<int>> mul(h, std::vector<int>(h));
  for (int a = 0; a < h; ++a)
    for (int b = 0; b < h; ++b) {
      std::vector<std::vector<Elt>> prod(lp.tuples.size());
      for (size_t t = 0; t < lp.tuples.size(); ++t)
        prod[t] = f.fam_mul(lp.faces[t], zlist[reps[a]][t], zlist[reps[b]][t]);
      mul[a][b] = coset_of[zindex.at(flatten_values(prod))];
    }
  FiniteGroup hg = FiniteGroup::from_table(mul);
  CohomologyGroup out;
  for (long long d : invariant_factors(hg)) out.invariants.push_back(d);
  return out;
}

// ---------------------------------------------------------------------------
// cocycle enumeration and twisting

std::vector<Cochain> enumerate_cocycles1(const SheafOfGroups& f,
                                         const Cover& c) {
  validate_cover(f.space(), c);
  int m = c.size();
  // increasing pairs with nonempty faces
  std::vector<std::pair<int, int>> pairs;
  std::map<std::pair<int, int>, int> pair_pos;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j)
      if (nerve_face(c, std::vector<int>{i, j}) != 0) {
        pair_pos[{i, j}] = static_cast<int>(pairs.size());
        pairs.push_back({i, j});
      }
  struct Tri {
    int i, j, k;
    int last;  // largest pair position
  };
  std::vector<Tri> tris;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j)
      for (int k = j + 1; k < m; ++k) {
        if (nerve_face(c, std::vector<int>{i, j, k}) == 0) continue;
        int a = pair_pos.at({i, j}), b = pair_pos.at({i, k}),
            d = pair_pos.at({j, k});
        tris.push_back({i, j, k, std::max({a, b, d})});
      }

  std::vector<std::vector<Elt>> chosen(pairs.size());
  std::vector<int> stack_idx(pairs.size(), 0);
  std::vector<Cochain> out;
  long long work = 0;
  int p = 0;
  auto emit = [&]() {
    Cochain z;
    z.sheaf = &f;
    z.cover = c;
    z.degree = 1;
    z.vals.resize(static_cast<size_t>(m) * m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        std::vector<int> t{i, j};
        Open w = z.face(t);
        if (i == j) {
          z.set(t, f.fam_id(w));
        } else if (i < j) {
          auto it = pair_pos.find({i, j});
          z.set(t, it == pair_pos.end() ? std::vector<Elt>{}
                                        : chosen[it->second]);
        } else {
          auto it = pair_pos.find({j, i});
          z.set(t, it == pair_pos.end()
                       ? std::vector<Elt>{}
                       : f.fam_inv(w, chosen[it->second]));
        }
      }
    out.push_back(std::move(z));
  };
  if (pairs.empty()) {
    emit();
    return out;
  }
  while (true) {
    if (p == static_cast<int>(pairs.size())) {
      emit();
      --p;  // backtrack to look for the next assignment
      continue;
    }
    Open w = nerve_face(c, std::vector<int>{pairs[p].first, pairs[p].second});
    const auto& sg = f.sections(w);
    bool advanced = false;
    for (int& i = stack_idx[p]; i < sg.size(); ++i) {
      if (++work > kSearchCap)
        throw StructuralError("cocycle enumeration exceeded its work cap");
      chosen[p] = sg.elems[i];
      bool ok = true;
      for (const auto& t : tris) {
        if (t.last != p) continue;
        Open tw = nerve_face(c, std::vector<int>{t.i, t.j, t.k});
        auto rij = f.restrict_fam(
            nerve_face(c, std::vector<int>{t.i, t.j}),
            chosen[pair_pos.at({t.i, t.j})], tw);
        auto rik = f.restrict_fam(
            nerve_face(c, std::vector<int>{t.i, t.k}),
            chosen[pair_pos.at({t.i, t.k})], tw);
        auto rjk = f.restrict_fam(
            nerve_face(c, std::vector<int>{t.j, t.k}),
            chosen[pair_pos.at({t.j, t.k})], tw);
        if (f.fam_mul(tw, rjk, rij) != rik) {
          ok = false;
          break;
        }
      }
      if (ok) {
        ++i;
        ++p;
        if (p < static_cast<int>(pairs.size())) stack_idx[p] = 0;
        advanced = true;
        break;
      }
    }
    if (!advanced) {
      if (p == 0) return out;
      --p;
    }
  }
}

std::vector<int> twist_orbits(const std::vector<Cochain>& cocycles) {
  if (cocycles.empty()) return {};
  const Cochain& c0 = cocycles[0];
  const SheafOfGroups& f = *c0.sheaf;
  int m = c0.parts();
  std::map<std::vector<Elt>, int> index;
  for (size_t i = 0; i < cocycles.size(); ++i) {
    if (!cocycles[i].same_shape(c0))
      throw StructuralError("cocycle list mixes shapes");
    index[flatten(cocycles[i].vals)] = static_cast<int>(i);
  }
  std::vector<const SectionGroup*> sgs;
  long long total = 1;
  for (int k = 0; k < m; ++k) {
    sgs.push_back(&f.sections(c0.cover.parts[k]));
    total *= sgs.back()->size();
    if (total > kTwistCap)
      throw StructuralError("twist group too large to enumerate");
  }
  std::vector<int> orbit(cocycles.size(), -1);
  int next = 0;
  for (size_t i = 0; i < cocycles.size(); ++i) {
    if (orbit[i] >= 0) continue;
    orbit[i] = next;
    std::vector<int> idx(m, 0);
    for (long long step = 0; step < total; ++step) {
      Cochain tw = cocycles[i];
      for (int k0 = 0; k0 < m; ++k0)
        for (int k1 = 0; k1 < m; ++k1) {
          std::vector<int> t{k0, k1};
          Open w = tw.face(t);
          auto r0 = f.restrict_fam(c0.cover.parts[k0], sgs[k0]->elems[idx[k0]],
                                   w);
          auto r1 = f.restrict_fam(c0.cover.parts[k1], sgs[k1]->elems[idx[k1]],
                                   w);
          tw.set(t, f.fam_mul(w, f.fam_mul(w, f.fam_inv(w, r1), tw.at(t)), r0));
        }
      auto it = index.find(flatten(tw.vals));
      if (it == index.end())
        throw StructuralError("cocycle list is not closed under twisting");
      orbit[it->second] = next;
      for (int k = 0; k < m; ++k) {
        if (++idx[k] < sgs[k]->size()) break;
        idx[k] = 0;
      }
    }
    ++next;
  }
  return orbit;
}

// ---------------------------------------------------------------------------
// six-term exact sequence

namespace {

int orbit_of_key(const std::map<std::vector<Elt>, int>& index,
                 const std::vector<int>& orbits, const Cochain& z,
                 const char* what) {
  auto it = index.find(flatten(z.vals));
  if (it == index.end())
    throw StructuralError(std::string("internal: ") + what +
                          " missing from the cocycle list");
  return orbits[it->second];
}

}  // namespace

SixTermReport six_term_exactness(const SheafHom& incl, const SheafHom& proj) {
  if (auto r = is_central_extension(incl, proj); !r)
    throw StructuralError("not a central extension: " + r.reason);
  const SheafOfGroups& N = *incl.src;
  const SheafOfGroups& G = *incl.dst;
  const SheafOfGroups& H = *proj.dst;
  const FiniteSpace& sp = G.space();
  Open X = sp.points_mask();
  Cover M = minimal_open_cover(sp, X);
  SixTermReport rep;

  const auto& gn = N.sections(X);
  const auto& gg = G.sections(X);
  const auto& gh = H.sections(X);
  rep.n_global = gn.size();
  rep.g_global = gg.size();
  rep.h_global = gh.size();

  // exactness at G(X)
  std::set<std::vector<Elt>> im_incl0;
  for (const auto& n : gn.elems) im_incl0.insert(incl.apply_fam(X, n));
  rep.exact_at_g0 = true;
  for (const auto& g : gg.elems) {
    bool in_ker = proj.apply_fam(X, g) == H.fam_id(X);
    bool in_im = im_incl0.count(g) > 0;
    if (in_ker != in_im) rep.exact_at_g0 = false;
  }

  auto zn = enumerate_cocycles1(N, M);
  auto zg = enumerate_cocycles1(G, M);
  auto zh = enumerate_cocycles1(H, M);
  auto on = twist_orbits(zn);
  auto og = twist_orbits(zg);
  auto oh = twist_orbits(zh);
  auto count = [](const std::vector<int>& o) {
    int mx = -1;
    for (int v : o) mx = std::max(mx, v);
    return mx + 1;
  };
  rep.h1_n = count(on);
  rep.h1_g = count(og);
  rep.h1_h = count(oh);
  std::map<std::vector<Elt>, int> in, ig, ih;
  for (size_t i = 0; i < zn.size(); ++i) in[flatten(zn[i].vals)] = i;
  for (size_t i = 0; i < zg.size(); ++i) ig[flatten(zg[i].vals)] = i;
  for (size_t i = 0; i < zh.size(); ++i) ih[flatten(zh[i].vals)] = i;
  int triv_n = orbit_of_key(in, on, Cochain::identity(N, M, 1), "identity");
  int triv_g = orbit_of_key(ig, og, Cochain::identity(G, M, 1), "identity");
  int triv_h = orbit_of_key(ih, oh, Cochain::identity(H, M, 1), "identity");

  // connecting map on global H-sections
  int m = M.size();
  auto delta0 = [&](const std::vector<Elt>& h) {
    std::vector<std::vector<Elt>> lifts(m);
    for (int k = 0; k < m; ++k) {
      Open u = M.parts[k];
      auto hu = H.restrict_fam(X, h, u);
      const auto& sg = G.sections(u);
      int found = -1;
      for (int i = 0; i < sg.size(); ++i)
        if (proj.apply_fam(u, sg.elems[i]) == hu) {
          found = i;
          break;
        }
      if (found < 0)
        throw StructuralError(
            "internal: no lift over a minimal open despite stalk "
            "surjectivity");
      lifts[k] = sg.elems[found];
    }
    Cochain nz;
    nz.sheaf = &N;
    nz.cover = M;
    nz.degree = 1;
    nz.vals.resize(static_cast<size_t>(m) * m);
    for (int k0 = 0; k0 < m; ++k0)
      for (int k1 = 0; k1 < m; ++k1) {
        std::vector<int> t{k0, k1};
        Open w = nz.face(t);
        auto val = G.fam_mul(
            w, G.fam_inv(w, G.restrict_fam(M.parts[k1], lifts[k1], w)),
            G.restrict_fam(M.parts[k0], lifts[k0], w));
        auto pre = preimage_fam(incl, w, val);
        if (!pre)
          throw StructuralError("internal: kernel value outside the image");
        nz.set(t, std::move(*pre));
      }
    return nz;
  };

  std::set<std::vector<Elt>> im_proj0;
  for (const auto& g : gg.elems) im_proj0.insert(proj.apply_fam(X, g));
  std::set<int> im_delta0;
  rep.exact_at_h0 = true;
  for (const auto& h : gh.elems) {
    int o = orbit_of_key(in, on, delta0(h), "connecting value");
    im_delta0.insert(o);
    bool in_ker = o == triv_n;
    bool in_im = im_proj0.count(h) > 0;
    if (in_ker != in_im) rep.exact_at_h0 = false;
  }

  // induced maps on 1-classes
  std::vector<int> map_n_to_g(rep.h1_n, -1), map_g_to_h(rep.h1_g, -1);
  for (size_t i = 0; i < zn.size(); ++i)
    if (map_n_to_g[on[i]] < 0)
      map_n_to_g[on[i]] =
          orbit_of_key(ig, og, apply_hom(incl, zn[i]), "induced cocycle");
  for (size_t i = 0; i < zg.size(); ++i)
    if (map_g_to_h[og[i]] < 0)
      map_g_to_h[og[i]] =
          orbit_of_key(ih, oh, apply_hom(proj, zg[i]), "induced cocycle");

  std::set<int> ker_incl1, im_incl1, ker_proj1, im_proj1;
  for (int o = 0; o < rep.h1_n; ++o) {
    im_incl1.insert(map_n_to_g[o]);
    if (map_n_to_g[o] == triv_g) ker_incl1.insert(o);
  }
  for (int o = 0; o < rep.h1_g; ++o) {
    im_proj1.insert(map_g_to_h[o]);
    if (map_g_to_h[o] == triv_h) ker_proj1.insert(o);
  }
  rep.exact_at_h1n = ker_incl1 == im_delta0;
  rep.exact_at_h1g = ker_proj1 == im_incl1;

  // degree-2 connecting map: lift a representative pairwise, measure the
  // failure of the cocycle identity in N
  std::vector<std::vector<int>> members(rep.h1_h);
  for (size_t i = 0; i < zh.size(); ++i)
    members[oh[i]].push_back(static_cast<int>(i));
  std::set<int> ker_delta1;
  int undefined = 0;
  for (int o = 0; o < rep.h1_h; ++o) {
    bool found = false;
    for (int zi : members[o]) {
      const Cochain& h = zh[zi];
      // lift increasing pairs sectionwise
      std::map<std::pair<int, int>, std::vector<Elt>> glift;
      bool liftable = true;
      for (int i = 0; i < m && liftable; ++i)
        for (int j = i + 1; j < m && liftable; ++j) {
          std::vector<int> t{i, j};
          Open w = nerve_face(M, t);
          if (w == 0) continue;
          const auto& sg = G.sections(w);
          int pick = -1;
          for (int s = 0; s < sg.size(); ++s)
            if (proj.apply_fam(w, sg.elems[s]) == h.at(t)) {
              pick = s;
              break;
            }
          if (pick < 0) {
            liftable = false;
            break;
          }
          glift[{i, j}] = sg.elems[pick];
        }
      if (!liftable) continue;
      auto gval = [&](int i, int j, Open w) {
        if (i == j) return G.fam_id(w);
        std::vector<int> t{std::min(i, j), std::max(i, j)};
        Open pw = nerve_face(M, t);
        auto v = glift.count({t[0], t[1]}) ? glift.at({t[0], t[1]})
                                           : std::vector<Elt>{};
        if (i > j) v = G.fam_inv(pw, v);
        return G.restrict_fam(pw, v, w);
      };
      Cochain n2;
      n2.sheaf = &N;
      n2.cover = M;
      n2.degree = 2;
      n2.vals.resize(static_cast<size_t>(m) * m * m);
      for (int k0 = 0; k0 < m; ++k0)
        for (int k1 = 0; k1 < m; ++k1)
          for (int k2 = 0; k2 < m; ++k2) {
            std::vector<int> t{k0, k1, k2};
            Open w = n2.face(t);
            auto val = G.fam_mul(
                w, G.fam_mul(w, G.fam_inv(w, gval(k0, k2, w)), gval(k1, k2, w)),
                gval(k0, k1, w));
            auto pre = preimage_fam(incl, w, val);
            if (!pre)
              throw StructuralError(
                  "internal: connecting value outside the kernel");
            n2.set(t, std::move(*pre));
          }
      if (!is_cocycle(n2))
        throw StructuralError("internal: connecting value is not a cocycle");
      if (class_is_trivial(n2)) ker_delta1.insert(o);
      found = true;
      break;
    }
    if (!found) {
      ++undefined;
      rep.connecting_defined = false;
    }
  }
  if (undefined)
    rep.note = std::to_string(undefined) +
               " degree-1 classes had no liftable representative";
  rep.exact_at_h1h = ker_delta1 == im_proj1;
  return rep;
}

}  // namespace gerbex
