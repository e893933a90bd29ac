#include "gerbex/group.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace gerbex {

FiniteGroup FiniteGroup::from_table(const std::vector<std::vector<int>>& mul,
                                    std::vector<std::string> labels) {
  FiniteGroup g;
  int n = static_cast<int>(mul.size());
  if (n == 0 || n > kMaxOrder) throw StructuralError("group order out of range");
  g.n_ = n;
  g.mul_.assign(n * n, 0);
  for (int a = 0; a < n; ++a) {
    if (static_cast<int>(mul[a].size()) != n)
      throw StructuralError("multiplication table not square");
    for (int b = 0; b < n; ++b) {
      int c = mul[a][b];
      if (c < 0 || c >= n) throw StructuralError("table entry out of range");
      g.mul_[a * n + b] = static_cast<Elt>(c);
    }
  }
  // identity
  int id = -1;
  for (int e = 0; e < n; ++e) {
    bool ok = true;
    for (int a = 0; a < n; ++a)
      if (g.mul_[e * n + a] != a || g.mul_[a * n + e] != a) {
        ok = false;
        break;
      }
    if (ok) {
      id = e;
      break;
    }
  }
  if (id < 0) throw StructuralError("no identity element");
  g.id_ = static_cast<Elt>(id);
  // inverses
  g.inv_.assign(n, 0);
  for (int a = 0; a < n; ++a) {
    int found = -1;
    for (int b = 0; b < n; ++b)
      if (g.mul_[a * n + b] == id && g.mul_[b * n + a] == id) {
        found = b;
        break;
      }
    if (found < 0) throw StructuralError("element without inverse");
    g.inv_[a] = static_cast<Elt>(found);
  }
  // associativity
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        if (g.mul_[g.mul_[a * n + b] * n + c] != g.mul_[a * n + g.mul_[b * n + c]])
          throw StructuralError("multiplication not associative");
  g.abelian_ = true;
  for (int a = 0; a < n && g.abelian_; ++a)
    for (int b = a + 1; b < n; ++b)
      if (g.mul_[a * n + b] != g.mul_[b * n + a]) {
        g.abelian_ = false;
        break;
      }
  if (labels.empty()) {
    for (int a = 0; a < n; ++a) labels.push_back("g" + std::to_string(a));
  }
  if (static_cast<int>(labels.size()) != n)
    throw StructuralError("label count mismatch");
  g.labels_ = std::move(labels);
  return g;
}

FiniteGroup FiniteGroup::trivial() {
  return from_table({{0}}, {"1"});
}

FiniteGroup FiniteGroup::cyclic(int m) {
  if (m < 1 || m > kMaxOrder) throw StructuralError("cyclic order out of range");
  std::vector<std::vector<int>> mul(m, std::vector<int>(m));
  std::vector<std::string> labels;
  for (int a = 0; a < m; ++a) {
    labels.push_back(std::to_string(a));
    for (int b = 0; b < m; ++b) mul[a][b] = (a + b) % m;
  }
  return from_table(mul, std::move(labels));
}

FiniteGroup FiniteGroup::direct_product(const FiniteGroup& a,
                                        const FiniteGroup& b) {
  int n = a.order() * b.order();
  if (n > kMaxOrder) throw StructuralError("product order exceeds cap");
  auto enc = [&](int x, int y) { return x * b.order() + y; };
  std::vector<std::vector<int>> mul(n, std::vector<int>(n));
  std::vector<std::string> labels(n);
  for (int x0 = 0; x0 < a.order(); ++x0)
    for (int y0 = 0; y0 < b.order(); ++y0) {
      labels[enc(x0, y0)] = "(" + a.label(x0) + "," + b.label(y0) + ")";
      for (int x1 = 0; x1 < a.order(); ++x1)
        for (int y1 = 0; y1 < b.order(); ++y1)
          mul[enc(x0, y0)][enc(x1, y1)] =
              enc(a.mul(x0, x1), b.mul(y0, y1));
    }
  return from_table(mul, std::move(labels));
}

FiniteGroup FiniteGroup::heisenberg2() {
  // (a, b, c) is the unitriangular matrix with entries (1,2)=a, (1,3)=b,
  // (2,3)=c over Z/2; (a,b,c)(a',b',c') = (a+a', b+b'+a*c', c+c').
  auto enc = [](int a, int b, int c) { return a + 2 * b + 4 * c; };
  std::vector<std::vector<int>> mul(8, std::vector<int>(8));
  std::vector<std::string> labels(8);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c) {
        labels[enc(a, b, c)] =
            std::to_string(a) + std::to_string(b) + std::to_string(c);
        for (int a2 = 0; a2 < 2; ++a2)
          for (int b2 = 0; b2 < 2; ++b2)
            for (int c2 = 0; c2 < 2; ++c2)
              mul[enc(a, b, c)][enc(a2, b2, c2)] =
                  enc((a + a2) & 1, (b + b2 + a * c2) & 1, (c + c2) & 1);
      }
  return from_table(mul, std::move(labels));
}

std::optional<Elt> FiniteGroup::element(const std::string& label) const {
  for (int a = 0; a < n_; ++a)
    if (labels_[a] == label) return static_cast<Elt>(a);
  return std::nullopt;
}

int FiniteGroup::element_order(Elt a) const {
  int k = 1;
  Elt x = a;
  while (x != id_) {
    x = mul(x, a);
    ++k;
  }
  return k;
}

std::vector<Elt> FiniteGroup::center() const {
  std::vector<Elt> z;
  for (int a = 0; a < n_; ++a) {
    bool central = true;
    for (int b = 0; b < n_; ++b)
      if (mul(a, b) != mul(b, a)) {
        central = false;
        break;
      }
    if (central) z.push_back(static_cast<Elt>(a));
  }
  return z;
}

std::vector<Elt> FiniteGroup::subgroup_closure(std::span<const Elt> gens) const {
  std::vector<char> in(n_, 0);
  in[id_] = 1;
  std::vector<Elt> stack{id_}, out{id_};
  for (Elt g : gens)
    if (!in[g]) {
      in[g] = 1;
      out.push_back(g);
      stack.push_back(g);
    }
  while (!stack.empty()) {
    Elt a = stack.back();
    stack.pop_back();
    for (Elt b : std::vector<Elt>(out)) {
      for (Elt c : {mul(a, b), mul(b, a), inv(a)}) {
        if (!in[c]) {
          in[c] = 1;
          out.push_back(c);
          stack.push_back(c);
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool FiniteGroup::is_subgroup(std::span<const Elt> elems) const {
  if (elems.empty()) return false;
  std::vector<char> in(n_, 0);
  for (Elt a : elems) in[a] = 1;
  if (!in[id_]) return false;
  for (Elt a : elems) {
    if (!in[inv(a)]) return false;
    for (Elt b : elems)
      if (!in[mul(a, b)]) return false;
  }
  return true;
}

bool FiniteGroup::is_normal(std::span<const Elt> elems) const {
  if (!is_subgroup(elems)) return false;
  std::vector<char> in(n_, 0);
  for (Elt a : elems) in[a] = 1;
  for (int g = 0; g < n_; ++g)
    for (Elt a : elems)
      if (!in[conj(static_cast<Elt>(g), a)]) return false;
  return true;
}

bool FiniteGroup::is_central(std::span<const Elt> elems) const {
  for (Elt a : elems)
    for (int b = 0; b < n_; ++b)
      if (mul(a, static_cast<Elt>(b)) != mul(static_cast<Elt>(b), a))
        return false;
  return true;
}

GroupHom::GroupHom(const FiniteGroup& s, const FiniteGroup& d,
                   std::vector<Elt> m)
    : src(&s), dst(&d), map(std::move(m)) {
  if (static_cast<int>(map.size()) != s.order())
    throw StructuralError("hom table size mismatch");
  for (Elt v : map)
    if (v >= d.order()) throw StructuralError("hom value out of range");
  for (int a = 0; a < s.order(); ++a)
    for (int b = 0; b < s.order(); ++b)
      if (map[s.mul(a, b)] != d.mul(map[a], map[b]))
        throw StructuralError("table is not a homomorphism");
}

GroupHom GroupHom::identity(const FiniteGroup& g) {
  std::vector<Elt> m(g.order());
  std::iota(m.begin(), m.end(), 0);
  return GroupHom(g, g, std::move(m));
}

std::vector<Elt> GroupHom::kernel() const {
  std::vector<Elt> k;
  for (int a = 0; a < src->order(); ++a)
    if (map[a] == dst->id()) k.push_back(static_cast<Elt>(a));
  return k;
}

std::vector<Elt> GroupHom::image() const {
  std::vector<char> hit(dst->order(), 0);
  for (Elt v : map) hit[v] = 1;
  std::vector<Elt> out;
  for (int a = 0; a < dst->order(); ++a)
    if (hit[a]) out.push_back(static_cast<Elt>(a));
  return out;
}

bool GroupHom::surjective() const {
  return static_cast<int>(image().size()) == dst->order();
}

bool GroupHom::injective() const { return kernel().size() == 1; }

QuotientGroup quotient_group(const FiniteGroup& g,
                             std::span<const Elt> normal) {
  if (!g.is_normal(normal))
    throw StructuralError("quotient by a non-normal subset");
  int n = g.order();
  std::vector<int> coset_of(n, -1);
  std::vector<Elt> reps;
  for (int a = 0; a < n; ++a) {
    if (coset_of[a] >= 0) continue;
    int c = static_cast<int>(reps.size());
    reps.push_back(static_cast<Elt>(a));
    for (Elt h : normal) coset_of[g.mul(static_cast<Elt>(a), h)] = c;
  }
  int q = static_cast<int>(reps.size());
  std::vector<std::vector<int>> mul(q, std::vector<int>(q));
  std::vector<std::string> labels(q);
  for (int i = 0; i < q; ++i) {
    labels[i] = "[" + g.label(reps[i]) + "]";
    for (int j = 0; j < q; ++j) mul[i][j] = coset_of[g.mul(reps[i], reps[j])];
  }
  QuotientGroup out{FiniteGroup::from_table(mul, std::move(labels)), {}, reps};
  out.proj.resize(n);
  for (int a = 0; a < n; ++a) out.proj[a] = static_cast<Elt>(coset_of[a]);
  return out;
}

SubgroupAsGroup subgroup_as_group(const FiniteGroup& g,
                                  std::span<const Elt> elems) {
  if (!g.is_subgroup(elems)) throw StructuralError("not a subgroup");
  int m = static_cast<int>(elems.size());
  std::vector<int> idx(g.order(), -1);
  for (int i = 0; i < m; ++i) idx[elems[i]] = i;
  std::vector<std::vector<int>> mul(m, std::vector<int>(m));
  std::vector<std::string> labels(m);
  for (int i = 0; i < m; ++i) {
    labels[i] = g.label(elems[i]);
    for (int j = 0; j < m; ++j) mul[i][j] = idx[g.mul(elems[i], elems[j])];
  }
  return SubgroupAsGroup{FiniteGroup::from_table(mul, std::move(labels)),
                         std::vector<Elt>(elems.begin(), elems.end()),
                         std::move(idx)};
}

namespace {

// Lifts each basis element of the quotient to a same-order element of g;
// with exact orders the joint sum is automatically direct.
void basis_rec(const FiniteGroup& g, std::vector<Elt>& gens,
               std::vector<int>& orders) {
  if (g.order() == 1) return;
  int best = -1, best_ord = 0;
  for (int a = 0; a < g.order(); ++a) {
    int o = g.element_order(static_cast<Elt>(a));
    if (o > best_ord) {
      best_ord = o;
      best = a;
    }
  }
  Elt g1 = static_cast<Elt>(best);
  std::vector<Elt> cyc{g1};
  auto sub = g.subgroup_closure(cyc);
  QuotientGroup q = quotient_group(g, sub);
  std::vector<Elt> qgens;
  std::vector<int> qorders;
  basis_rec(q.group, qgens, qorders);
  gens.push_back(g1);
  orders.push_back(best_ord);
  for (size_t i = 0; i < qgens.size(); ++i) {
    int want = qorders[i];
    int found = -1;
    for (int a = 0; a < g.order(); ++a)
      if (q.proj[a] == qgens[i] &&
          g.element_order(static_cast<Elt>(a)) == want) {
        found = a;
        break;
      }
    if (found < 0)
      throw StructuralError("abelian basis lift failed");  // cannot happen
    gens.push_back(static_cast<Elt>(found));
    orders.push_back(want);
  }
}

}  // namespace

AbelianBasis abelian_basis(const FiniteGroup& g) {
  if (!g.abelian()) throw StructuralError("abelian basis of nonabelian group");
  AbelianBasis b;
  basis_rec(g, b.gens, b.orders);
  // verify: exponent tuples enumerate the group bijectively, fill dlog
  b.dlog.assign(g.order(), {});
  long long total = 1;
  for (int o : b.orders) total *= o;
  if (total != g.order()) throw StructuralError("abelian basis wrong size");
  std::vector<int> exp(b.gens.size(), 0);
  std::vector<char> seen(g.order(), 0);
  for (long long it = 0;; ++it) {
    Elt v = g.id();
    for (size_t i = 0; i < b.gens.size(); ++i)
      for (int k = 0; k < exp[i]; ++k) v = g.mul(v, b.gens[i]);
    if (seen[v]) throw StructuralError("abelian basis not direct");
    seen[v] = 1;
    b.dlog[v] = exp;
    // next tuple
    size_t i = 0;
    for (; i < exp.size(); ++i) {
      if (++exp[i] < b.orders[i]) break;
      exp[i] = 0;
    }
    if (i == exp.size()) break;
  }
  for (char s : seen)
    if (!s) throw StructuralError("abelian basis does not span");
  return b;
}

std::vector<long long> invariant_factors(const FiniteGroup& g) {
  AbelianBasis b = abelian_basis(g);
  // primary decomposition of each cyclic order
  std::map<long long, std::vector<int>> primary;  // prime -> exponents desc
  for (int o : b.orders) {
    long long m = o;
    for (long long p = 2; p * p <= m; ++p)
      if (m % p == 0) {
        int e = 0;
        while (m % p == 0) {
          m /= p;
          ++e;
        }
        primary[p].push_back(e);
      }
    if (m > 1) primary[m].push_back(1);
  }
  size_t k = 0;
  for (auto& [p, es] : primary) {
    std::sort(es.rbegin(), es.rend());
    k = std::max(k, es.size());
  }
  std::vector<long long> factors(k, 1);  // factors[0] = largest
  for (auto& [p, es] : primary)
    for (size_t i = 0; i < es.size(); ++i) {
      long long pe = 1;
      for (int t = 0; t < es[i]; ++t) pe *= p;
      factors[i] *= pe;
    }
  std::reverse(factors.begin(), factors.end());  // ascending, d1 | d2 | ...
  return factors;
}

}  // namespace gerbex
