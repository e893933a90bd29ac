#include "gerbex/gerbe.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace gerbex {

namespace {

constexpr long long kStackCap = 20'000'000;

void bump(long long& work, const char* what) {
  if (++work > kStackCap)
    throw StructuralError(std::string(what) + " exceeded the work cap");
}

std::string open_str(const FiniteSpace& sp, Open u) {
  if (u == 0) return "(empty)";
  std::string s = "{";
  bool first = true;
  for (int p : sp.points_of(u)) {
    if (!first) s += ",";
    s += sp.label(p);
    first = false;
  }
  return s + "}";
}

}  // namespace

CheckResult validate_prestack(const PrestackGroupoid& p,
                              std::span<const Open> opens) {
  const FiniteSpace& sp = p.space();
  long long work = 0;
  for (Open u : opens) {
    if (!sp.is_open(u))
      return CheckResult::fail("not an open set: " + open_str(sp, u));
    int n = p.n_objects(u);
    if (n < 0) return CheckResult::fail("negative object count");
    if (u == 0 && (n != 1 || p.n_homs(0, 0, 0) != 1))
      return CheckResult::fail(
          "the empty open must carry one object and one morphism");
    for (int i = 0; i < n; ++i) {
      int e = p.identity(u, i);
      if (e < 0 || e >= p.n_homs(u, i, i))
        return CheckResult::fail("identity out of range over " +
                                 open_str(sp, u));
      for (int j = 0; j < n; ++j) {
        int hij = p.n_homs(u, i, j);
        for (int f = 0; f < hij; ++f) {
          bump(work, "prestack validation");
          if (p.compose(u, i, i, j, e, f) != f ||
              p.compose(u, i, j, j, f, p.identity(u, j)) != f)
            return CheckResult::fail("identity law fails over " +
                                     open_str(sp, u));
          int g = p.inverse(u, i, j, f);
          if (g < 0 || g >= p.n_homs(u, j, i))
            return CheckResult::fail("inverse out of range over " +
                                     open_str(sp, u));
          if (p.compose(u, i, j, i, f, g) != p.identity(u, i) ||
              p.compose(u, j, i, j, g, f) != p.identity(u, j))
            return CheckResult::fail("inverse law fails over " +
                                     open_str(sp, u));
        }
      }
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          int hij = p.n_homs(u, i, j), hjk = p.n_homs(u, j, k);
          for (int f = 0; f < hij; ++f)
            for (int g = 0; g < hjk; ++g) {
              int gf = p.compose(u, i, j, k, f, g);
              if (gf < 0 || gf >= p.n_homs(u, i, k))
                return CheckResult::fail("composition out of range over " +
                                         open_str(sp, u));
              for (int l = 0; l < n; ++l) {
                int hkl = p.n_homs(u, k, l);
                for (int h = 0; h < hkl; ++h) {
                  bump(work, "prestack validation");
                  int hg = p.compose(u, j, k, l, g, h);
                  if (p.compose(u, i, k, l, gf, h) !=
                      p.compose(u, i, j, l, f, hg))
                    return CheckResult::fail("associativity fails over " +
                                             open_str(sp, u));
                }
              }
            }
        }
  }
  for (Open u : opens) {
    int n = p.n_objects(u);
    for (int i = 0; i < n; ++i) {
      if (p.restrict_obj(u, i, u) != i)
        return CheckResult::fail("restriction along the identity moves an "
                                 "object over " +
                                 open_str(sp, u));
      for (int j = 0; j < n; ++j)
        for (int f = 0; f < p.n_homs(u, i, j); ++f)
          if (p.restrict_mor(u, i, j, f, u) != f)
            return CheckResult::fail(
                "restriction along the identity moves a morphism over " +
                open_str(sp, u));
    }
    for (Open v : opens) {
      if (v == u || !open_subset(v, u)) continue;
      for (int i = 0; i < n; ++i) {
        int iv = p.restrict_obj(u, i, v);
        if (iv < 0 || iv >= p.n_objects(v))
          return CheckResult::fail("object restriction out of range from " +
                                   open_str(sp, u) + " to " + open_str(sp, v));
        if (p.restrict_mor(u, i, i, p.identity(u, i), v) !=
            p.identity(v, iv))
          return CheckResult::fail("restriction does not preserve identities");
      }
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          int iv = p.restrict_obj(u, i, v), jv = p.restrict_obj(u, j, v);
          for (int f = 0; f < p.n_homs(u, i, j); ++f) {
            bump(work, "prestack validation");
            int fv = p.restrict_mor(u, i, j, f, v);
            if (fv < 0 || fv >= p.n_homs(v, iv, jv))
              return CheckResult::fail(
                  "morphism restriction out of range from " +
                  open_str(sp, u) + " to " + open_str(sp, v));
            for (int k = 0; k < n; ++k) {
              int kv = p.restrict_obj(u, k, v);
              for (int g = 0; g < p.n_homs(u, j, k); ++g) {
                bump(work, "prestack validation");
                int gv = p.restrict_mor(u, j, k, g, v);
                if (p.restrict_mor(u, i, k, p.compose(u, i, j, k, f, g), v) !=
                    p.compose(v, iv, jv, kv, fv, gv))
                  return CheckResult::fail(
                      "restriction is not functorial from " +
                      open_str(sp, u) + " to " + open_str(sp, v));
              }
            }
          }
        }
      // transitivity through intermediate listed opens
      for (Open w : opens) {
        if (w == v || !open_subset(w, v)) continue;
        for (int i = 0; i < n; ++i) {
          bump(work, "prestack validation");
          if (p.restrict_obj(u, i, w) !=
              p.restrict_obj(v, p.restrict_obj(u, i, v), w))
            return CheckResult::fail("object restriction is not transitive");
          for (int j = 0; j < n; ++j)
            for (int f = 0; f < p.n_homs(u, i, j); ++f)
              if (p.restrict_mor(u, i, j, f, w) !=
                  p.restrict_mor(v, p.restrict_obj(u, i, v),
                                 p.restrict_obj(u, j, v),
                                 p.restrict_mor(u, i, j, f, v), w))
                return CheckResult::fail(
                    "morphism restriction is not transitive");
        }
      }
    }
  }
  return CheckResult::pass();
}

std::vector<int> ad(const PrestackGroupoid& p, Open u, int i, int j, int g) {
  if (g < 0 || g >= p.n_homs(u, i, j))
    throw StructuralError("conjugation along a morphism id out of range");
  int ginv = p.inverse(u, i, j, g);
  std::vector<int> table(p.n_homs(u, i, i));
  for (int m = 0; m < static_cast<int>(table.size()); ++m) {
    int gm = p.compose(u, i, i, j, m, g);        // g . m : i -> j
    table[m] = p.compose(u, j, i, j, ginv, gm);  // (g . m) . g^-1 : j -> j
  }
  return table;
}

FiniteGroup automorphism_group(const PrestackGroupoid& p, Open u, int i) {
  int n = p.n_homs(u, i, i);
  if (n > FiniteGroup::kMaxOrder)
    throw StructuralError("automorphism group exceeds the supported order");
  std::vector<std::vector<int>> mul(n, std::vector<int>(n));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) mul[a][b] = p.compose(u, i, i, i, b, a);
  return FiniteGroup::from_table(mul);
}

// ---------------------------------------------------------------------------
// ExplicitPrestack

ExplicitPrestack::ExplicitPrestack(
    const FiniteSpace& sp, std::map<Open, GroupoidTable> tables,
    std::map<std::pair<Open, Open>,
             std::pair<std::vector<int>, std::vector<int>>>
        restr)
    : space_(&sp), tables_(std::move(tables)), restr_(std::move(restr)) {
  for (const auto& [u, tab] : tables_) {
    if (!sp.is_open(u))
      throw StructuralError("prestack table over a non-open set");
    int nm = static_cast<int>(tab.mor.size());
    if (u == 0 && (tab.n_obj != 1 || nm != 1))
      throw StructuralError(
          "the empty open must carry one object and one morphism");
    for (auto [s, t] : tab.mor)
      if (s < 0 || s >= tab.n_obj || t < 0 || t >= tab.n_obj)
        throw StructuralError("morphism endpoint out of range over " +
                              open_str(sp, u));
    if (static_cast<int>(tab.comp.size()) != nm)
      throw StructuralError("composition table has the wrong shape over " +
                            open_str(sp, u));
    for (int g = 0; g < nm; ++g) {
      if (static_cast<int>(tab.comp[g].size()) != nm)
        throw StructuralError("composition table has the wrong shape over " +
                              open_str(sp, u));
      for (int f = 0; f < nm; ++f) {
        bool composable = tab.mor[f].second == tab.mor[g].first;
        int r = tab.comp[g][f];
        if (composable != (r >= 0))
          throw StructuralError(
              "composition defined exactly on composable pairs fails over " +
              open_str(sp, u));
        if (r >= 0) {
          if (r >= nm) throw StructuralError("composite out of range");
          if (tab.mor[r] !=
              std::make_pair(tab.mor[f].first, tab.mor[g].second))
            throw StructuralError("composite has the wrong endpoints over " +
                                  open_str(sp, u));
        }
      }
    }
  }
  for (const auto& [key, maps] : restr_) {
    auto [u, v] = key;
    if (!open_subset(v, u))
      throw StructuralError("restriction table not along an inclusion");
    if (v == 0 || v == u) continue;  // implicit
    const GroupoidTable& tu = table(u);
    const GroupoidTable& tv = table(v);
    const auto& [omap, mmap] = maps;
    if (static_cast<int>(omap.size()) != tu.n_obj ||
        mmap.size() != tu.mor.size())
      throw StructuralError("restriction table has the wrong shape from " +
                            open_str(sp, u) + " to " + open_str(sp, v));
    for (int i : omap)
      if (i < 0 || i >= tv.n_obj)
        throw StructuralError("restricted object out of range");
    for (int f = 0; f < static_cast<int>(mmap.size()); ++f) {
      int fv = mmap[f];
      if (fv < 0 || fv >= static_cast<int>(tv.mor.size()))
        throw StructuralError("restricted morphism out of range");
      if (tv.mor[fv] != std::make_pair(omap[tu.mor[f].first],
                                       omap[tu.mor[f].second]))
        throw StructuralError(
            "restricted morphism endpoints disagree with restricted objects");
    }
  }
}

const ExplicitPrestack::GroupoidTable& ExplicitPrestack::table(Open u) const {
  static const GroupoidTable kTerminal{1, {{0, 0}}, {{0}}};
  if (u == 0) return kTerminal;
  auto it = tables_.find(u);
  if (it == tables_.end())
    throw StructuralError("no table for open " + open_str(*space_, u));
  return it->second;
}

const std::vector<int>& ExplicitPrestack::hom_list(Open u, int i,
                                                   int j) const {
  auto key = std::make_tuple(u, i, j);
  auto it = homs_.find(key);
  if (it != homs_.end()) return it->second;
  const GroupoidTable& tab = table(u);
  std::vector<int> ids;
  for (int f = 0; f < static_cast<int>(tab.mor.size()); ++f)
    if (tab.mor[f] == std::make_pair(i, j)) ids.push_back(f);
  return homs_.emplace(key, std::move(ids)).first->second;
}

int ExplicitPrestack::n_objects(Open u) const { return table(u).n_obj; }

int ExplicitPrestack::n_homs(Open u, int i, int j) const {
  return static_cast<int>(hom_list(u, i, j).size());
}

int ExplicitPrestack::compose(Open u, int i, int j, int k, int f,
                              int g) const {
  const GroupoidTable& tab = table(u);
  int r = tab.comp[hom_list(u, j, k)[g]][hom_list(u, i, j)[f]];
  const std::vector<int>& out = hom_list(u, i, k);
  return static_cast<int>(std::find(out.begin(), out.end(), r) - out.begin());
}

int ExplicitPrestack::identity(Open u, int i) const {
  const GroupoidTable& tab = table(u);
  const std::vector<int>& aut = hom_list(u, i, i);
  for (int e = 0; e < static_cast<int>(aut.size()); ++e) {
    bool ok = true;
    int ge = aut[e];
    for (int f = 0; f < static_cast<int>(tab.mor.size()) && ok; ++f) {
      if (tab.mor[f].first == i && tab.comp[f][ge] != f) ok = false;
      if (tab.mor[f].second == i && tab.comp[ge][f] != f) ok = false;
    }
    if (ok) return e;
  }
  throw StructuralError("no identity on object " + std::to_string(i) +
                        " over " + open_str(*space_, u));
}

int ExplicitPrestack::inverse(Open u, int i, int j, int f) const {
  int e = identity(u, i);
  int nh = n_homs(u, j, i);
  for (int g = 0; g < nh; ++g)
    if (compose(u, i, j, i, f, g) == e &&
        compose(u, j, i, j, g, f) == identity(u, j))
      return g;
  throw StructuralError("morphism without inverse over " +
                        open_str(*space_, u));
}

int ExplicitPrestack::restrict_obj(Open u, int i, Open v) const {
  if (v == 0) return 0;
  if (v == u) return i;
  auto it = restr_.find({u, v});
  if (it == restr_.end())
    throw StructuralError("no restriction table from " + open_str(*space_, u) +
                          " to " + open_str(*space_, v));
  return it->second.first[i];
}

int ExplicitPrestack::restrict_mor(Open u, int i, int j, int f, Open v) const {
  if (v == 0) return 0;
  if (v == u) return f;
  auto it = restr_.find({u, v});
  if (it == restr_.end())
    throw StructuralError("no restriction table from " + open_str(*space_, u) +
                          " to " + open_str(*space_, v));
  int gv = it->second.second[hom_list(u, i, j)[f]];
  const std::vector<int>& out =
      hom_list(v, restrict_obj(u, i, v), restrict_obj(u, j, v));
  return static_cast<int>(std::find(out.begin(), out.end(), gv) -
                          out.begin());
}

// ---------------------------------------------------------------------------
// Morphisms and checks

CheckResult is_prestack_morphism(const GerbeMorphism& f,
                                 std::span<const Open> opens) {
  if (!f.source || !f.target || !f.on_obj || !f.on_mor)
    return CheckResult::fail("morphism with missing pieces");
  if (!(f.source->space() == f.target->space()))
    return CheckResult::fail("morphism across different spaces");
  const PrestackGroupoid& s = *f.source;
  const PrestackGroupoid& t = *f.target;
  long long work = 0;
  for (Open u : opens) {
    int n = s.n_objects(u);
    for (int i = 0; i < n; ++i) {
      int fi = f.on_obj(u, i);
      if (fi < 0 || fi >= t.n_objects(u))
        return CheckResult::fail("object image out of range over " +
                                 open_str(s.space(), u));
      if (f.on_mor(u, i, i, s.identity(u, i)) != t.identity(u, fi))
        return CheckResult::fail("identities are not preserved over " +
                                 open_str(s.space(), u));
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        int fi = f.on_obj(u, i), fj = f.on_obj(u, j);
        for (int m = 0; m < s.n_homs(u, i, j); ++m) {
          bump(work, "morphism validation");
          int fm = f.on_mor(u, i, j, m);
          if (fm < 0 || fm >= t.n_homs(u, fi, fj))
            return CheckResult::fail("morphism image out of range over " +
                                     open_str(s.space(), u));
          for (int k = 0; k < n; ++k)
            for (int g = 0; g < s.n_homs(u, j, k); ++g) {
              bump(work, "morphism validation");
              int fk = f.on_obj(u, k);
              if (f.on_mor(u, i, k, s.compose(u, i, j, k, m, g)) !=
                  t.compose(u, fi, fj, fk, fm, f.on_mor(u, j, k, g)))
                return CheckResult::fail("composition is not preserved over " +
                                         open_str(s.space(), u));
            }
        }
      }
    for (Open v : opens) {
      if (v == u || !open_subset(v, u)) continue;
      for (int i = 0; i < n; ++i) {
        bump(work, "morphism validation");
        if (f.on_obj(v, s.restrict_obj(u, i, v)) !=
            t.restrict_obj(u, f.on_obj(u, i), v))
          return CheckResult::fail(
              "object images do not commute with restriction");
        for (int j = 0; j < n; ++j)
          for (int m = 0; m < s.n_homs(u, i, j); ++m)
            if (f.on_mor(v, s.restrict_obj(u, i, v), s.restrict_obj(u, j, v),
                         s.restrict_mor(u, i, j, m, v)) !=
                t.restrict_mor(u, f.on_obj(u, i), f.on_obj(u, j),
                               f.on_mor(u, i, j, m), v))
              return CheckResult::fail(
                  "morphism images do not commute with restriction");
      }
    }
  }
  return CheckResult::pass();
}

namespace {

// all families (m_k) over the parts with matching restrictions on overlaps,
// m_k a hom-local index between the given endpoint lists
std::vector<std::vector<int>> compatible_families(
    const PrestackGroupoid& p, const Cover& c, const std::vector<int>& src,
    const std::vector<int>& dst, long long& work) {
  int m = c.size();
  std::vector<std::vector<int>> out;
  std::vector<int> cur(m, 0);
  std::vector<int> counts(m);
  for (int k = 0; k < m; ++k)
    counts[k] = p.n_homs(c.parts[k], src[k], dst[k]);
  auto rec = [&](auto&& self, int k) -> void {
    if (k == m) {
      out.push_back(cur);
      return;
    }
    for (int f = 0; f < counts[k]; ++f) {
      bump(work, "descent check");
      bool ok = true;
      for (int l = 0; l < k && ok; ++l) {
        Open w = c.parts[k] & c.parts[l];
        if (w == 0) continue;
        if (p.restrict_mor(c.parts[k], src[k], dst[k], f, w) !=
            p.restrict_mor(c.parts[l], src[l], dst[l], cur[l], w))
          ok = false;
      }
      if (!ok) continue;
      cur[k] = f;
      self(self, k + 1);
    }
  };
  rec(rec, 0);
  return out;
}

}  // namespace

StackReport is_stack(const PrestackGroupoid& p,
                     std::span<const Cover> covers) {
  const FiniteSpace& sp = p.space();
  long long work = 0;
  for (const Cover& c : covers) {
    validate_cover(sp, c);
    int m = c.size();
    Open T = c.target;
    int nT = p.n_objects(T);
    // (a) each hom presheaf is a sheaf on this cover
    for (int a = 0; a < nT; ++a)
      for (int b = 0; b < nT; ++b) {
        std::vector<int> src(m), dst(m);
        for (int k = 0; k < m; ++k) {
          src[k] = p.restrict_obj(T, a, c.parts[k]);
          dst[k] = p.restrict_obj(T, b, c.parts[k]);
        }
        auto families = compatible_families(p, c, src, dst, work);
        std::set<std::vector<int>> seen;
        std::set<std::vector<int>> all(families.begin(), families.end());
        for (int g = 0; g < p.n_homs(T, a, b); ++g) {
          std::vector<int> fam(m);
          for (int k = 0; k < m; ++k)
            fam[k] = p.restrict_mor(T, a, b, g, c.parts[k]);
          if (!all.count(fam))
            return {false, "a morphism restricts to an incompatible family "
                           "over " +
                               open_str(sp, T)};
          if (!seen.insert(fam).second)
            return {false,
                    "two morphisms between objects (" + std::to_string(a) +
                        ", " + std::to_string(b) + ") over " +
                        open_str(sp, T) +
                        " have equal restrictions to the cover"};
        }
        for (const auto& fam : families)
          if (!seen.count(fam))
            return {false,
                    "a compatible family of morphisms between objects (" +
                        std::to_string(a) + ", " + std::to_string(b) +
                        ") over " + open_str(sp, T) + " does not glue"};
      }
    // (b) every descent datum glues
    std::vector<std::pair<int, int>> pairs;
    for (int k = 0; k < m; ++k)
      for (int l = k + 1; l < m; ++l)
        if ((c.parts[k] & c.parts[l]) != 0) pairs.emplace_back(k, l);
    std::vector<int> objs(m, 0);
    std::string witness;
    auto glue_exists = [&](const std::map<std::pair<int, int>, int>& trans) {
      for (int I = 0; I < nT; ++I) {
        std::vector<int> Ik(m), ek(m, -1);
        for (int k = 0; k < m; ++k) Ik[k] = p.restrict_obj(T, I, c.parts[k]);
        auto rec = [&](auto&& self, int k) -> bool {
          if (k == m) return true;
          int nh = p.n_homs(c.parts[k], Ik[k], objs[k]);
          for (int e = 0; e < nh; ++e) {
            bump(work, "descent check");
            bool ok = true;
            for (int l = 0; l < k && ok; ++l) {
              Open w = c.parts[k] & c.parts[l];
              if (w == 0) continue;
              int il_w = p.restrict_obj(c.parts[l], objs[l], w);
              int ik_w = p.restrict_obj(c.parts[k], objs[k], w);
              int I_w = p.restrict_obj(c.parts[l], Ik[l], w);
              int el_w =
                  p.restrict_mor(c.parts[l], Ik[l], objs[l], ek[l], w);
              int ek_w = p.restrict_mor(c.parts[k], Ik[k], objs[k], e, w);
              int inv_ek = p.inverse(w, I_w, ik_w, ek_w);
              if (p.compose(w, ik_w, I_w, il_w, inv_ek, el_w) !=
                  trans.at({l, k}))
                ok = false;
            }
            if (!ok) continue;
            ek[k] = e;
            if (self(self, k + 1)) return true;
          }
          return false;
        };
        if (rec(rec, 0)) return true;
      }
      return false;
    };
    // transitions chosen over increasing pairs; g_{l,k} in hom(w, i_k|, i_l|)
    std::map<std::pair<int, int>, int> trans;
    auto datum_rec = [&](auto&& self, size_t pi) -> bool {
      if (pi == pairs.size()) {
        if (!glue_exists(trans)) {
          std::ostringstream os;
          os << "descent datum over " << open_str(sp, T)
             << " does not glue: objects (";
          for (int k = 0; k < m; ++k) os << (k ? "," : "") << objs[k];
          os << "), transitions (";
          bool first = true;
          for (const auto& [kl, g] : trans) {
            if (!first) os << ",";
            os << g;
            first = false;
          }
          os << ")";
          witness = os.str();
          return false;
        }
        return true;
      }
      auto [k, l] = pairs[pi];
      Open w = c.parts[k] & c.parts[l];
      int ik_w = p.restrict_obj(c.parts[k], objs[k], w);
      int il_w = p.restrict_obj(c.parts[l], objs[l], w);
      int nh = p.n_homs(w, il_w, ik_w);
      for (int g = 0; g < nh; ++g) {
        bump(work, "descent check");
        trans[{k, l}] = g;
        // cocycle condition for triples completed by this pair
        bool ok = true;
        for (int r = 0; r < k && ok; ++r) {
          auto it_rk = trans.find({r, k});
          auto it_rl = trans.find({r, l});
          if (it_rk == trans.end() || it_rl == trans.end()) continue;
          Open y = c.parts[r] & w;
          if (y == 0) continue;
          int ir_y = p.restrict_obj(c.parts[r], objs[r], y);
          int ik_y = p.restrict_obj(c.parts[k], objs[k], y);
          int il_y = p.restrict_obj(c.parts[l], objs[l], y);
          Open wrk = c.parts[r] & c.parts[k];
          Open wrl = c.parts[r] & c.parts[l];
          int g_rk = p.restrict_mor(wrk, p.restrict_obj(c.parts[k], objs[k], wrk),
                                    p.restrict_obj(c.parts[r], objs[r], wrk),
                                    it_rk->second, y);
          int g_rl = p.restrict_mor(wrl, p.restrict_obj(c.parts[l], objs[l], wrl),
                                    p.restrict_obj(c.parts[r], objs[r], wrl),
                                    it_rl->second, y);
          int g_kl = p.restrict_mor(w, il_w, ik_w, g, y);
          // g_{r,k}|y . g_{k,l}|y == g_{r,l}|y
          if (p.compose(y, il_y, ik_y, ir_y, g_kl, g_rk) != g_rl) ok = false;
        }
        if (ok && !self(self, pi + 1)) return false;
      }
      trans.erase({k, l});
      return true;
    };
    auto obj_rec = [&](auto&& self, int k) -> bool {
      if (k == m) return datum_rec(datum_rec, 0);
      for (int i = 0; i < p.n_objects(c.parts[k]); ++i) {
        bump(work, "descent check");
        objs[k] = i;
        if (!self(self, k + 1)) return false;
      }
      return true;
    };
    if (!obj_rec(obj_rec, 0)) return {false, witness};
  }
  return {true, ""};
}

bool is_gerbe(const PrestackGroupoid& p) {
  const FiniteSpace& sp = p.space();
  for (int x = 0; x < sp.size(); ++x) {
    Open ux = sp.minimal_open(x);
    int n = p.n_objects(ux);
    if (n < 1) return false;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (p.n_homs(ux, i, j) < 1) return false;
  }
  return true;
}

bool is_weak_epi(const GerbeMorphism& f, std::span<const Open> opens) {
  const PrestackGroupoid& s = *f.source;
  const PrestackGroupoid& t = *f.target;
  const FiniteSpace& sp = s.space();
  for (int x = 0; x < sp.size(); ++x) {
    Open ux = sp.minimal_open(x);
    for (int b = 0; b < t.n_objects(ux); ++b) {
      bool hit = false;
      for (int a = 0; a < s.n_objects(ux) && !hit; ++a)
        if (t.n_homs(ux, f.on_obj(ux, a), b) > 0) hit = true;
      if (!hit) return false;
    }
  }
  for (Open u : opens) {
    int n = s.n_objects(u);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        int fa = f.on_obj(u, a), fb = f.on_obj(u, b);
        std::set<int> image;
        for (int m = 0; m < s.n_homs(u, a, b); ++m)
          image.insert(f.on_mor(u, a, b, m));
        if (static_cast<int>(image.size()) < t.n_homs(u, fa, fb))
          return false;
      }
  }
  return true;
}

bool is_weak_equivalence(const GerbeMorphism& f, std::span<const Open> opens) {
  const PrestackGroupoid& s = *f.source;
  const PrestackGroupoid& t = *f.target;
  const FiniteSpace& sp = s.space();
  for (int x = 0; x < sp.size(); ++x) {
    Open ux = sp.minimal_open(x);
    for (int b = 0; b < t.n_objects(ux); ++b) {
      bool hit = false;
      for (int a = 0; a < s.n_objects(ux) && !hit; ++a)
        if (t.n_homs(ux, f.on_obj(ux, a), b) > 0) hit = true;
      if (!hit) return false;
    }
  }
  for (Open u : opens) {
    int n = s.n_objects(u);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        int fa = f.on_obj(u, a), fb = f.on_obj(u, b);
        std::set<int> image;
        int nh = s.n_homs(u, a, b);
        for (int m = 0; m < nh; ++m) image.insert(f.on_mor(u, a, b, m));
        if (static_cast<int>(image.size()) != nh ||
            nh != t.n_homs(u, fa, fb))
          return false;
      }
  }
  return true;
}

NormalSubgroupoid kernel(const GerbeMorphism& f) {
  NormalSubgroupoid n;
  n.ambient = f.source;
  n.members = [f](Open u, int i) {
    const PrestackGroupoid& t = *f.target;
    int fi = f.on_obj(u, i);
    int e = t.identity(u, fi);
    std::vector<int> out;
    for (int m = 0; m < f.source->n_homs(u, i, i); ++m)
      if (f.on_mor(u, i, i, m) == e) out.push_back(m);
    return out;
  };
  return n;
}

NormalSubgroupoid center(const PrestackGroupoid& p) {
  NormalSubgroupoid n;
  n.ambient = &p;
  const PrestackGroupoid* pp = &p;
  n.members = [pp](Open u, int i) {
    const FiniteSpace& sp = pp->space();
    std::vector<int> out;
    for (int m = 0; m < pp->n_homs(u, i, i); ++m) {
      bool central = true;
      for (int x : sp.points_of(u)) {
        Open ux = sp.minimal_open(x);
        int ix = pp->restrict_obj(u, i, ux);
        int mx = pp->restrict_mor(u, i, i, m, ux);
        for (int h = 0; h < pp->n_homs(ux, ix, ix) && central; ++h)
          if (pp->compose(ux, ix, ix, ix, mx, h) !=
              pp->compose(ux, ix, ix, ix, h, mx))
            central = false;
        if (!central) break;
      }
      if (central) out.push_back(m);
    }
    return out;
  };
  return n;
}

CheckResult is_normal_subgroupoid(const NormalSubgroupoid& n,
                                  std::span<const Open> opens,
                                  std::span<const Cover> covers) {
  if (!n.ambient || !n.members)
    return CheckResult::fail("subgroupoid with missing pieces");
  const PrestackGroupoid& p = *n.ambient;
  const FiniteSpace& sp = p.space();
  long long work = 0;
  for (Open u : opens) {
    for (int i = 0; i < p.n_objects(u); ++i) {
      std::vector<int> mem = n.members(u, i);
      std::set<int> ms(mem.begin(), mem.end());
      if (!ms.count(p.identity(u, i)))
        return CheckResult::fail("members without the identity over " +
                                 open_str(sp, u));
      for (int a : mem) {
        if (!ms.count(p.inverse(u, i, i, a)))
          return CheckResult::fail("members not closed under inverses over " +
                                   open_str(sp, u));
        for (int b : mem) {
          bump(work, "subgroupoid check");
          if (!ms.count(p.compose(u, i, i, i, a, b)))
            return CheckResult::fail(
                "members not closed under composition over " +
                open_str(sp, u));
        }
      }
      for (int j = 0; j < p.n_objects(u); ++j) {
        std::vector<int> memj = n.members(u, j);
        std::set<int> msj(memj.begin(), memj.end());
        for (int g = 0; g < p.n_homs(u, i, j); ++g) {
          std::vector<int> table = ad(p, u, i, j, g);
          for (int a : mem) {
            bump(work, "subgroupoid check");
            if (!msj.count(table[a]))
              return CheckResult::fail(
                  "members are not Ad-stable over " + open_str(sp, u) +
                  ": conjugation along morphism " + std::to_string(g) +
                  " in hom(" + std::to_string(i) + ", " + std::to_string(j) +
                  ") carries member " + std::to_string(a) + " outside");
          }
        }
      }
    }
  }
  for (const Cover& c : covers) {
    validate_cover(sp, c);
    int m = c.size();
    for (int i = 0; i < p.n_objects(c.target); ++i) {
      // the member presheaf of i must satisfy the sheaf axioms on c
      std::vector<int> src(m), counts(m);
      std::vector<std::vector<int>> mem_k(m);
      for (int k = 0; k < m; ++k) {
        src[k] = p.restrict_obj(c.target, i, c.parts[k]);
        mem_k[k] = n.members(c.parts[k], src[k]);
        counts[k] = static_cast<int>(mem_k[k].size());
      }
      std::set<std::vector<int>> families;
      std::vector<int> cur(m);
      auto rec = [&](auto&& self, int k) -> void {
        if (k == m) {
          families.insert(cur);
          return;
        }
        for (int idx = 0; idx < counts[k]; ++idx) {
          bump(work, "subgroupoid check");
          int f = mem_k[k][idx];
          bool ok = true;
          for (int l = 0; l < k && ok; ++l) {
            Open w = c.parts[k] & c.parts[l];
            if (w == 0) continue;
            if (p.restrict_mor(c.parts[k], src[k], src[k], f, w) !=
                p.restrict_mor(c.parts[l], src[l], src[l], cur[l], w))
              ok = false;
          }
          if (!ok) continue;
          cur[k] = f;
          self(self, k + 1);
        }
      };
      rec(rec, 0);
      std::set<std::vector<int>> seen;
      for (int a : n.members(c.target, i)) {
        std::vector<int> fam(m);
        for (int k = 0; k < m; ++k)
          fam[k] = p.restrict_mor(c.target, i, i, a, c.parts[k]);
        if (!families.count(fam))
          return CheckResult::fail(
              "a member restricts to a non-member family");
        if (!seen.insert(fam).second)
          return CheckResult::fail(
              "two members have equal restrictions to the cover of " +
              open_str(sp, c.target));
      }
      for (const auto& fam : families)
        if (!seen.count(fam))
          return CheckResult::fail(
              "a compatible family of members does not glue over " +
              open_str(sp, c.target));
    }
  }
  return CheckResult::pass();
}

CheckResult bitorsor_check(const PrestackGroupoid& p, Open u) {
  const FiniteSpace& sp = p.space();
  int n = p.n_objects(u);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      int h = p.n_homs(u, i, j);
      if (h == 0) continue;
      int ai = p.n_homs(u, i, i), aj = p.n_homs(u, j, j);
      if (h != ai || h != aj)
        return CheckResult::fail(
            "hom set and automorphism groups differ in size over " +
            open_str(sp, u));
      for (int f0 = 0; f0 < h; ++f0) {
        std::set<int> left, right;
        for (int g = 0; g < aj; ++g)
          left.insert(p.compose(u, i, j, j, f0, g));
        for (int g = 0; g < ai; ++g)
          right.insert(p.compose(u, i, i, j, g, f0));
        if (static_cast<int>(left.size()) != h ||
            static_cast<int>(right.size()) != h)
          return CheckResult::fail(
              "a one-sided action is not simply transitive over " +
              open_str(sp, u));
      }
    }
  return CheckResult::pass();
}

}  // namespace gerbex
