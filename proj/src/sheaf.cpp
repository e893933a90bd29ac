#include "gerbex/sheaf.hpp"

#include <algorithm>

namespace gerbex {

namespace {
constexpr long long kEnumerationCap = 1 << 20;
}

int SectionGroup::index_of(std::span<const Elt> fam) const {
  std::vector<Elt> key(fam.begin(), fam.end());
  auto it = std::lower_bound(elems.begin(), elems.end(), key);
  if (it == elems.end() || *it != key) return -1;
  return static_cast<int>(it - elems.begin());
}

SheafOfGroups::SheafOfGroups(
    const FiniteSpace& space, std::vector<FiniteGroup> stalks,
    const std::map<std::pair<int, int>, std::vector<Elt>>& comps)
    : space_(&space), stalks_(std::move(stalks)) {
  int n = space.size();
  if (static_cast<int>(stalks_.size()) != n)
    throw StructuralError("one stalk per point required");
  comp_.assign(n * n, {});
  for (int x = 0; x < n; ++x) {
    std::vector<Elt> ident(stalks_[x].order());
    for (int g = 0; g < stalks_[x].order(); ++g) ident[g] = static_cast<Elt>(g);
    comp_[x * n + x] = ident;
  }
  for (const auto& [key, tab] : comps) {
    auto [x, y] = key;
    if (x < 0 || x >= n || y < 0 || y >= n || !space.leq(x, y))
      throw StructuralError("comparison map for unrelated points");
    if (static_cast<int>(tab.size()) != stalks_[x].order())
      throw StructuralError("comparison table size mismatch");
    for (Elt v : tab)
      if (v >= stalks_[y].order())
        throw StructuralError("comparison value out of range");
    if (x == y) {
      if (tab != comp_[x * n + x])
        throw StructuralError("self comparison must be the identity");
      continue;
    }
    comp_[x * n + y] = tab;
  }
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) {
      if (!space.leq(x, y) || x == y) continue;
      const auto& tab = comp_[x * n + y];
      if (tab.empty())
        throw StructuralError("missing comparison map " + space.label(x) +
                              " <= " + space.label(y));
      for (int a = 0; a < stalks_[x].order(); ++a)
        for (int b = 0; b < stalks_[x].order(); ++b)
          if (tab[stalks_[x].mul(static_cast<Elt>(a), static_cast<Elt>(b))] !=
              stalks_[y].mul(tab[a], tab[b]))
            throw StructuralError("comparison map is not a homomorphism");
    }
  // functoriality along chains
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y)
      for (int z = 0; z < n; ++z) {
        if (!(space.leq(x, y) && space.leq(y, z))) continue;
        for (int g = 0; g < stalks_[x].order(); ++g)
          if (comp(y, z, comp(x, y, static_cast<Elt>(g))) !=
              comp(x, z, static_cast<Elt>(g)))
            throw StructuralError("comparison maps are not functorial");
      }
}

SheafOfGroups SheafOfGroups::constant(const FiniteSpace& space,
                                      const FiniteGroup& g) {
  std::vector<Elt> ident(g.order());
  for (int a = 0; a < g.order(); ++a) ident[a] = static_cast<Elt>(a);
  std::map<std::pair<int, int>, std::vector<Elt>> comps;
  for (int x = 0; x < space.size(); ++x)
    for (int y = 0; y < space.size(); ++y)
      if (x != y && space.leq(x, y)) comps[{x, y}] = ident;
  return SheafOfGroups(space, std::vector<FiniteGroup>(space.size(), g),
                       comps);
}

SheafOfGroups SheafOfGroups::extension_by_zero(const FiniteSpace& space,
                                               Open w, const FiniteGroup& g) {
  if (!space.is_open(w)) throw StructuralError("support must be open");
  std::vector<FiniteGroup> stalks;
  for (int x = 0; x < space.size(); ++x)
    stalks.push_back((w >> x) & 1 ? g : FiniteGroup::trivial());
  std::map<std::pair<int, int>, std::vector<Elt>> comps;
  for (int x = 0; x < space.size(); ++x)
    for (int y = 0; y < space.size(); ++y) {
      if (x == y || !space.leq(x, y)) continue;
      std::vector<Elt> tab(stalks[x].order());
      for (int a = 0; a < stalks[x].order(); ++a)
        tab[a] = ((w >> x) & 1) ? static_cast<Elt>(a)  // y in w too: w open
                                : stalks[y].id();
      comps[{x, y}] = tab;
    }
  return SheafOfGroups(space, std::move(stalks), comps);
}

Elt SheafOfGroups::comp(int x, int y, Elt g) const {
  const auto& tab = comp_[x * space_->size() + y];
  if (tab.empty()) throw StructuralError("comparison along unrelated points");
  return tab[g];
}

bool SheafOfGroups::abelian() const {
  for (const auto& s : stalks_)
    if (!s.abelian()) return false;
  return true;
}

int SheafOfGroups::coord_of(Open u, int p) const {
  if (!((u >> p) & 1)) return -1;
  int c = 0;
  for (int q = 0; q < p; ++q)
    if ((u >> q) & 1) ++c;
  return c;
}

bool SheafOfGroups::is_section(Open u, std::span<const Elt> fam) const {
  auto pts = space_->points_of(u);
  if (fam.size() != pts.size()) return false;
  for (size_t i = 0; i < pts.size(); ++i) {
    if (fam[i] >= stalks_[pts[i]].order()) return false;
    for (size_t j = 0; j < pts.size(); ++j)
      if (space_->leq(pts[i], pts[j]) &&
          comp(pts[i], pts[j], fam[i]) != fam[j])
        return false;
  }
  return true;
}

std::vector<Elt> SheafOfGroups::fam_id(Open u) const {
  std::vector<Elt> out;
  for (int p : space_->points_of(u)) out.push_back(stalks_[p].id());
  return out;
}

std::vector<Elt> SheafOfGroups::fam_mul(Open u, std::span<const Elt> a,
                                        std::span<const Elt> b) const {
  auto pts = space_->points_of(u);
  if (a.size() != pts.size() || b.size() != pts.size())
    throw StructuralError("family length mismatch");
  std::vector<Elt> out(pts.size());
  for (size_t i = 0; i < pts.size(); ++i)
    out[i] = stalks_[pts[i]].mul(a[i], b[i]);
  return out;
}

std::vector<Elt> SheafOfGroups::fam_inv(Open u, std::span<const Elt> a) const {
  auto pts = space_->points_of(u);
  if (a.size() != pts.size()) throw StructuralError("family length mismatch");
  std::vector<Elt> out(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) out[i] = stalks_[pts[i]].inv(a[i]);
  return out;
}

std::vector<Elt> SheafOfGroups::restrict_fam(Open u, std::span<const Elt> s,
                                             Open v) const {
  if (!open_subset(v, u)) throw StructuralError("restriction to a non-subset");
  auto pts = space_->points_of(u);
  if (s.size() != pts.size()) throw StructuralError("family length mismatch");
  std::vector<Elt> out;
  for (size_t i = 0; i < pts.size(); ++i)
    if ((v >> pts[i]) & 1) out.push_back(s[i]);
  return out;
}

std::optional<std::vector<Elt>> SheafOfGroups::extend_from_minimal(
    Open u, std::span<const Elt> minimal_values) const {
  auto pts = space_->points_of(u);
  auto mins = space_->minimal_points(u);
  if (minimal_values.size() != mins.size())
    throw StructuralError("one value per minimal point required");
  std::vector<Elt> fam(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) {
    bool have = false;
    Elt val = 0;
    for (size_t k = 0; k < mins.size(); ++k) {
      if (!space_->leq(mins[k], pts[i])) continue;
      Elt v = comp(mins[k], pts[i], minimal_values[k]);
      if (have && v != val) return std::nullopt;
      have = true;
      val = v;
    }
    if (!have) throw StructuralError("point with no minimal point below");
    fam[i] = val;
  }
  return fam;
}

const SectionGroup& SheafOfGroups::sections(Open u) const {
  auto it = cache_.find(u);
  if (it != cache_.end()) return it->second;
  if (!space_->is_open(u)) throw StructuralError("sections of a non-open set");
  SectionGroup sg;
  sg.domain = u;
  sg.pts = space_->points_of(u);
  auto mins = space_->minimal_points(u);
  long long total = 1;
  for (int m : mins) {
    total *= stalks_[m].order();
    if (total > kEnumerationCap)
      throw StructuralError("section enumeration too large");
  }
  std::vector<Elt> tuple(mins.size(), 0);
  for (long long step = 0; step < total; ++step) {
    if (auto fam = extend_from_minimal(u, tuple)) sg.elems.push_back(*fam);
    size_t i = 0;
    for (; i < tuple.size(); ++i) {
      if (++tuple[i] < stalks_[mins[i]].order()) break;
      tuple[i] = 0;
    }
  }
  std::sort(sg.elems.begin(), sg.elems.end());
  sg.identity = sg.index_of(fam_id(u));
  if (sg.identity < 0) throw StructuralError("identity family not a section");
  return cache_.emplace(u, std::move(sg)).first->second;
}

SheafHom::SheafHom(const SheafOfGroups& s, const SheafOfGroups& d,
                   std::vector<std::vector<Elt>> m)
    : src(&s), dst(&d), maps(std::move(m)) {
  if (!(s.space() == d.space()))
    throw StructuralError("sheaf hom across different spaces");
  int n = s.space().size();
  if (static_cast<int>(maps.size()) != n)
    throw StructuralError("one map per point required");
  for (int x = 0; x < n; ++x) {
    if (static_cast<int>(maps[x].size()) != s.stalk(x).order())
      throw StructuralError("stalk map size mismatch");
    for (Elt v : maps[x])
      if (v >= d.stalk(x).order())
        throw StructuralError("stalk map value out of range");
    for (int a = 0; a < s.stalk(x).order(); ++a)
      for (int b = 0; b < s.stalk(x).order(); ++b)
        if (maps[x][s.stalk(x).mul(static_cast<Elt>(a), static_cast<Elt>(b))] !=
            d.stalk(x).mul(maps[x][a], maps[x][b]))
          throw StructuralError("stalk map is not a homomorphism");
  }
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) {
      if (x == y || !s.space().leq(x, y)) continue;
      for (int g = 0; g < s.stalk(x).order(); ++g)
        if (d.comp(x, y, maps[x][g]) !=
            maps[y][s.comp(x, y, static_cast<Elt>(g))])
          throw StructuralError("sheaf hom does not commute with comparisons");
    }
}

SheafHom SheafHom::identity(const SheafOfGroups& g) {
  std::vector<std::vector<Elt>> maps;
  for (int x = 0; x < g.space().size(); ++x) {
    std::vector<Elt> t(g.stalk(x).order());
    for (int a = 0; a < g.stalk(x).order(); ++a) t[a] = static_cast<Elt>(a);
    maps.push_back(std::move(t));
  }
  return SheafHom(g, g, std::move(maps));
}

std::vector<Elt> SheafHom::apply_fam(Open u, std::span<const Elt> fam) const {
  auto pts = src->space().points_of(u);
  if (fam.size() != pts.size()) throw StructuralError("family length mismatch");
  std::vector<Elt> out(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) out[i] = maps[pts[i]][fam[i]];
  return out;
}

bool SheafHom::stalkwise_injective() const {
  for (int x = 0; x < src->space().size(); ++x) {
    std::vector<char> hit(dst->stalk(x).order(), 0);
    for (Elt v : maps[x]) {
      if (hit[v]) return false;
      hit[v] = 1;
    }
  }
  return true;
}

bool SheafHom::stalkwise_surjective() const {
  for (int x = 0; x < src->space().size(); ++x) {
    std::vector<char> hit(dst->stalk(x).order(), 0);
    for (Elt v : maps[x]) hit[v] = 1;
    for (char h : hit)
      if (!h) return false;
  }
  return true;
}

namespace {

// Subsheaf on the listed (sorted) stalk subsets, with induced comparisons.
SubSheaf subsheaf_on(const SheafOfGroups& g,
                     const std::vector<std::vector<Elt>>& members) {
  const FiniteSpace& sp = g.space();
  int n = sp.size();
  std::vector<SubgroupAsGroup> subs;
  for (int x = 0; x < n; ++x) subs.push_back(subgroup_as_group(g.stalk(x), members[x]));
  std::vector<FiniteGroup> stalks;
  for (auto& s : subs) stalks.push_back(s.group);
  std::map<std::pair<int, int>, std::vector<Elt>> comps;
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) {
      if (x == y || !sp.leq(x, y)) continue;
      std::vector<Elt> tab(subs[x].group.order());
      for (int a = 0; a < subs[x].group.order(); ++a) {
        int j = subs[y].index_in_sub[g.comp(x, y, subs[x].embed[a])];
        if (j < 0)
          throw StructuralError("subset not closed under comparisons");
        tab[a] = static_cast<Elt>(j);
      }
      comps[{x, y}] = tab;
    }
  auto sheaf =
      std::make_shared<const SheafOfGroups>(sp, std::move(stalks), comps);
  std::vector<std::vector<Elt>> incl_maps;
  for (auto& s : subs) incl_maps.push_back(s.embed);
  SheafHom incl(*sheaf, g, std::move(incl_maps));
  return SubSheaf{std::move(sheaf), std::move(incl)};
}

}  // namespace

SubSheaf center_of_sheaf(const SheafOfGroups& g) {
  const FiniteSpace& sp = g.space();
  std::vector<std::vector<Elt>> members(sp.size());
  for (int x = 0; x < sp.size(); ++x) {
    for (int a = 0; a < g.stalk(x).order(); ++a) {
      bool ok = true;
      for (int y = 0; y < sp.size() && ok; ++y) {
        if (!sp.leq(x, y)) continue;
        Elt v = g.comp(x, y, static_cast<Elt>(a));
        for (int b = 0; b < g.stalk(y).order() && ok; ++b)
          if (g.stalk(y).mul(v, static_cast<Elt>(b)) !=
              g.stalk(y).mul(static_cast<Elt>(b), v))
            ok = false;
      }
      if (ok) members[x].push_back(static_cast<Elt>(a));
    }
  }
  return subsheaf_on(g, members);
}

SubSheaf kernel_sheaf(const SheafHom& f) {
  std::vector<std::vector<Elt>> members(f.src->space().size());
  for (int x = 0; x < f.src->space().size(); ++x)
    for (int a = 0; a < f.src->stalk(x).order(); ++a)
      if (f.maps[x][a] == f.dst->stalk(x).id())
        members[x].push_back(static_cast<Elt>(a));
  return subsheaf_on(*f.src, members);
}

QuotientSheaf quotient_sheaf(const SheafOfGroups& g, const SheafHom& incl) {
  if (incl.dst != &g) throw StructuralError("inclusion targets another sheaf");
  if (!incl.stalkwise_injective())
    throw StructuralError("inclusion is not injective");
  const FiniteSpace& sp = g.space();
  int n = sp.size();
  std::vector<QuotientGroup> qs;
  for (int x = 0; x < n; ++x) {
    std::vector<Elt> img(incl.maps[x]);
    std::sort(img.begin(), img.end());
    if (!g.stalk(x).is_normal(img))
      throw StructuralError("subsheaf not stalkwise normal");
    qs.push_back(quotient_group(g.stalk(x), img));
  }
  std::vector<FiniteGroup> stalks;
  for (auto& q : qs) stalks.push_back(q.group);
  std::map<std::pair<int, int>, std::vector<Elt>> comps;
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) {
      if (x == y || !sp.leq(x, y)) continue;
      std::vector<Elt> tab(qs[x].group.order());
      for (int a = 0; a < qs[x].group.order(); ++a)
        tab[a] = qs[y].proj[g.comp(x, y, qs[x].rep[a])];
      comps[{x, y}] = tab;
    }
  auto sheaf =
      std::make_shared<const SheafOfGroups>(sp, std::move(stalks), comps);
  std::vector<std::vector<Elt>> proj_maps;
  std::vector<std::vector<Elt>> reps;
  for (auto& q : qs) {
    proj_maps.push_back(q.proj);
    reps.push_back(q.rep);
  }
  SheafHom proj(g, *sheaf, std::move(proj_maps));
  return QuotientSheaf{std::move(sheaf), std::move(proj), std::move(reps)};
}

std::optional<std::vector<Elt>> preimage_fam(const SheafHom& f, Open u,
                                             std::span<const Elt> fam) {
  if (!f.stalkwise_injective())
    throw StructuralError("preimage under a non-injective hom");
  auto pts = f.src->space().points_of(u);
  if (fam.size() != pts.size()) throw StructuralError("family length mismatch");
  std::vector<Elt> out(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) {
    int found = -1;
    for (int a = 0; a < f.src->stalk(pts[i]).order(); ++a)
      if (f.maps[pts[i]][a] == fam[i]) {
        found = a;
        break;
      }
    if (found < 0) return std::nullopt;
    out[i] = static_cast<Elt>(found);
  }
  return out;
}

CheckResult is_central_extension(const SheafHom& incl, const SheafHom& proj) {
  if (incl.dst != proj.src)
    return CheckResult::fail("maps do not share the middle sheaf");
  const SheafOfGroups& g = *incl.dst;
  for (int x = 0; x < g.space().size(); ++x) {
    const std::string at = " at point " + g.space().label(x);
    std::vector<char> img(g.stalk(x).order(), 0);
    std::vector<char> seen(g.stalk(x).order(), 0);
    for (Elt v : incl.maps[x]) {
      if (seen[v]) return CheckResult::fail("inclusion not injective" + at);
      seen[v] = img[v] = 1;
    }
    std::vector<char> hit(proj.dst->stalk(x).order(), 0);
    for (Elt v : proj.maps[x]) hit[v] = 1;
    for (char h : hit)
      if (!h) return CheckResult::fail("projection not surjective" + at);
    for (int a = 0; a < g.stalk(x).order(); ++a) {
      bool in_img = img[a];
      bool in_ker = proj.maps[x][a] == proj.dst->stalk(x).id();
      if (in_img != in_ker)
        return CheckResult::fail("image and kernel differ" + at);
      if (in_img)
        for (int b = 0; b < g.stalk(x).order(); ++b)
          if (g.stalk(x).mul(static_cast<Elt>(a), static_cast<Elt>(b)) !=
              g.stalk(x).mul(static_cast<Elt>(b), static_cast<Elt>(a)))
            return CheckResult::fail("kernel not central" + at);
    }
  }
  return CheckResult::pass();
}

}  // namespace gerbex
