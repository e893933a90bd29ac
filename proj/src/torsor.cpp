#include "gerbex/torsor.hpp"

#include <algorithm>

namespace gerbex {

namespace {

constexpr long long kEnumerationCap = 1 << 20;

std::vector<int> stalk_sizes(const SheafOfGroups& g) {
  std::vector<int> sizes(g.space().size());
  for (int p = 0; p < g.space().size(); ++p) sizes[p] = g.stalk(p).order();
  return sizes;
}

std::vector<std::vector<std::vector<int>>> left_mul_action(
    const SheafOfGroups& g) {
  int n = g.space().size();
  std::vector<std::vector<std::vector<int>>> action(n);
  for (int p = 0; p < n; ++p) {
    int o = g.stalk(p).order();
    action[p].assign(o, std::vector<int>(o));
    for (int a = 0; a < o; ++a)
      for (int s = 0; s < o; ++s)
        action[p][a][s] =
            g.stalk(p).mul(static_cast<Elt>(a), static_cast<Elt>(s));
  }
  return action;
}

// carrier index -> the group element moving carrier element 0 onto it
std::vector<std::vector<Elt>> transport_from_base(const Torsor& t) {
  int n = t.space().size();
  std::vector<std::vector<Elt>> to_g(n);
  for (int p = 0; p < n; ++p) {
    to_g[p].assign(t.carrier_size(p), 0);
    for (int a = 0; a < t.group().stalk(p).order(); ++a)
      to_g[p][t.act(p, static_cast<Elt>(a), 0)] = static_cast<Elt>(a);
  }
  return to_g;
}

}  // namespace

Torsor::Torsor(const SheafOfGroups& group, std::vector<int> carrier_sizes,
               std::vector<std::vector<std::vector<int>>> action,
               const std::map<std::pair<int, int>, std::vector<int>>& comps)
    : group_(&group), sizes_(std::move(carrier_sizes)), act_(std::move(action)) {
  const FiniteSpace& sp = group.space();
  int n = sp.size();
  if (static_cast<int>(sizes_.size()) != n)
    throw StructuralError("one carrier per point required");
  if (static_cast<int>(act_.size()) != n)
    throw StructuralError("one action table per point required");
  for (int p = 0; p < n; ++p) {
    if (sizes_[p] <= 0) throw StructuralError("carriers must be nonempty");
    const FiniteGroup& gp = group.stalk(p);
    if (static_cast<int>(act_[p].size()) != gp.order())
      throw StructuralError("action table size mismatch");
    for (const auto& row : act_[p]) {
      if (static_cast<int>(row.size()) != sizes_[p])
        throw StructuralError("action table size mismatch");
      for (int v : row)
        if (v < 0 || v >= sizes_[p])
          throw StructuralError("action value out of range");
    }
    for (int s = 0; s < sizes_[p]; ++s)
      if (act_[p][gp.id()][s] != s)
        throw StructuralError("identity must act trivially");
    for (int a = 0; a < gp.order(); ++a)
      for (int b = 0; b < gp.order(); ++b)
        for (int s = 0; s < sizes_[p]; ++s)
          if (act_[p][gp.mul(static_cast<Elt>(a), static_cast<Elt>(b))][s] !=
              act_[p][a][act_[p][b][s]])
            throw StructuralError("action does not respect multiplication");
    if (gp.order() != sizes_[p])
      throw StructuralError("action is not simply transitive");
    for (int s = 0; s < sizes_[p]; ++s) {
      std::vector<char> hit(sizes_[p], 0);
      for (int a = 0; a < gp.order(); ++a) hit[act_[p][a][s]] = 1;
      for (char h : hit)
        if (!h) throw StructuralError("action is not simply transitive");
    }
  }
  comp_.assign(n * n, {});
  for (int x = 0; x < n; ++x) {
    std::vector<int> ident(sizes_[x]);
    for (int s = 0; s < sizes_[x]; ++s) ident[s] = s;
    comp_[x * n + x] = ident;
  }
  for (const auto& [key, tab] : comps) {
    auto [x, y] = key;
    if (x < 0 || x >= n || y < 0 || y >= n || !sp.leq(x, y))
      throw StructuralError("comparison map for unrelated points");
    if (static_cast<int>(tab.size()) != sizes_[x])
      throw StructuralError("comparison table size mismatch");
    for (int v : tab)
      if (v < 0 || v >= sizes_[y])
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
      if (!sp.leq(x, y) || x == y) continue;
      if (comp_[x * n + y].empty())
        throw StructuralError("missing comparison map " + sp.label(x) +
                              " <= " + sp.label(y));
    }
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y)
      for (int z = 0; z < n; ++z) {
        if (!(sp.leq(x, y) && sp.leq(y, z))) continue;
        for (int s = 0; s < sizes_[x]; ++s)
          if (comp(y, z, comp(x, y, s)) != comp(x, z, s))
            throw StructuralError("comparison maps are not functorial");
      }
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) {
      if (!sp.leq(x, y)) continue;
      for (int a = 0; a < group.stalk(x).order(); ++a)
        for (int s = 0; s < sizes_[x]; ++s)
          if (comp(x, y, act_[x][a][s]) !=
              act_[y][group.comp(x, y, static_cast<Elt>(a))][comp(x, y, s)])
            throw StructuralError("comparisons are not equivariant");
    }
}

Torsor Torsor::trivial(const SheafOfGroups& g) {
  const FiniteSpace& sp = g.space();
  std::map<std::pair<int, int>, std::vector<int>> comps;
  for (int x = 0; x < sp.size(); ++x)
    for (int y = 0; y < sp.size(); ++y) {
      if (x == y || !sp.leq(x, y)) continue;
      std::vector<int> tab(g.stalk(x).order());
      for (int s = 0; s < g.stalk(x).order(); ++s)
        tab[s] = g.comp(x, y, static_cast<Elt>(s));
      comps[{x, y}] = tab;
    }
  return Torsor(g, stalk_sizes(g), left_mul_action(g), comps);
}

int Torsor::comp(int x, int y, int s) const {
  const auto& tab = comp_[x * group_->space().size() + y];
  if (tab.empty()) throw StructuralError("comparison along unrelated points");
  return tab[s];
}

bool Torsor::is_section(Open u, std::span<const int> fam) const {
  auto pts = space().points_of(u);
  if (fam.size() != pts.size()) return false;
  for (size_t i = 0; i < pts.size(); ++i) {
    if (fam[i] < 0 || fam[i] >= sizes_[pts[i]]) return false;
    for (size_t j = 0; j < pts.size(); ++j)
      if (space().leq(pts[i], pts[j]) &&
          comp(pts[i], pts[j], fam[i]) != fam[j])
        return false;
  }
  return true;
}

std::vector<int> Torsor::restrict_fam(Open u, std::span<const int> s,
                                      Open v) const {
  if (!open_subset(v, u)) throw StructuralError("restriction to a non-subset");
  auto pts = space().points_of(u);
  if (s.size() != pts.size()) throw StructuralError("family length mismatch");
  std::vector<int> out;
  for (size_t i = 0; i < pts.size(); ++i)
    if ((v >> pts[i]) & 1) out.push_back(s[i]);
  return out;
}

std::vector<int> Torsor::act_fam(Open u, std::span<const Elt> g,
                                 std::span<const int> s) const {
  auto pts = space().points_of(u);
  if (g.size() != pts.size() || s.size() != pts.size())
    throw StructuralError("family length mismatch");
  std::vector<int> out(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) out[i] = act(pts[i], g[i], s[i]);
  return out;
}

std::vector<Elt> Torsor::transporter(Open u, std::span<const int> s,
                                     std::span<const int> t) const {
  if (!is_section(u, s) || !is_section(u, t))
    throw StructuralError("transporter between non-sections");
  auto pts = space().points_of(u);
  std::vector<Elt> out(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) {
    int found = -1;
    for (int a = 0; a < group_->stalk(pts[i]).order(); ++a)
      if (act(pts[i], static_cast<Elt>(a), s[i]) == t[i]) {
        found = a;
        break;
      }
    if (found < 0)
      throw StructuralError("internal: transitive action missed a carrier");
    out[i] = static_cast<Elt>(found);
  }
  return out;
}

std::optional<std::vector<int>> Torsor::extend_from_minimal(
    Open u, std::span<const int> minimal_values) const {
  auto pts = space().points_of(u);
  auto mins = space().minimal_points(u);
  if (minimal_values.size() != mins.size())
    throw StructuralError("one value per minimal point required");
  std::vector<int> fam(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) {
    bool have = false;
    int val = 0;
    for (size_t k = 0; k < mins.size(); ++k) {
      if (!space().leq(mins[k], pts[i])) continue;
      int v = comp(mins[k], pts[i], minimal_values[k]);
      if (have && v != val) return std::nullopt;
      have = true;
      val = v;
    }
    if (!have) throw StructuralError("point with no minimal point below");
    fam[i] = val;
  }
  return fam;
}

const std::vector<std::vector<int>>& Torsor::sections(Open u) const {
  auto it = cache_.find(u);
  if (it != cache_.end()) return it->second;
  if (!space().is_open(u)) throw StructuralError("sections of a non-open set");
  std::vector<std::vector<int>> out;
  auto mins = space().minimal_points(u);
  long long total = 1;
  for (int m : mins) {
    total *= sizes_[m];
    if (total > kEnumerationCap)
      throw StructuralError("section enumeration too large");
  }
  std::vector<int> tuple(mins.size(), 0);
  for (long long step = 0; step < total; ++step) {
    if (auto fam = extend_from_minimal(u, tuple)) out.push_back(*fam);
    size_t i = 0;
    for (; i < tuple.size(); ++i) {
      if (++tuple[i] < sizes_[mins[i]]) break;
      tuple[i] = 0;
    }
  }
  std::sort(out.begin(), out.end());
  return cache_.emplace(u, std::move(out)).first->second;
}

Torsor torsor_from_cocycle(const Cochain& c) {
  if (c.degree != 1) throw StructuralError("gluing needs a degree-1 cocycle");
  const SheafOfGroups& g = *c.sheaf;
  const FiniteSpace& sp = g.space();
  validate_cover(sp, c.cover);
  if (c.cover.target != sp.points_mask())
    throw StructuralError("gluing cover must cover the whole space");
  CheckResult cr = is_cocycle(c);
  if (!cr) throw StructuralError("gluing needs a cocycle: " + cr.reason);
  int n = sp.size();
  std::vector<int> chart(n, -1);
  for (int p = 0; p < n; ++p)
    for (int k = 0; k < c.parts(); ++k)
      if ((c.cover.parts[k] >> p) & 1) {
        chart[p] = k;
        break;
      }
  // carrier over x is the stalk of g; restriction to y >= x follows the
  // stalk comparison and crosses from chart(x) to chart(y) along c
  std::map<std::pair<int, int>, std::vector<int>> comps;
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) {
      if (x == y || !sp.leq(x, y)) continue;
      int tup[2] = {chart[y], chart[x]};
      const auto& fam = c.at(tup);
      Elt cross = fam[g.coord_of(c.face(tup), y)];
      std::vector<int> tab(g.stalk(x).order());
      for (int s = 0; s < g.stalk(x).order(); ++s)
        tab[s] =
            g.stalk(y).mul(g.comp(x, y, static_cast<Elt>(s)), cross);
      comps[{x, y}] = tab;
    }
  return Torsor(g, stalk_sizes(g), left_mul_action(g), comps);
}

Cochain classify(const Torsor& t) {
  const FiniteSpace& sp = t.space();
  Cover mc = minimal_open_cover(sp, sp.points_mask());
  int m = mc.size();
  std::vector<std::vector<int>> first;
  for (int k = 0; k < m; ++k) first.push_back(t.sections(mc.parts[k])[0]);
  Cochain out = Cochain::identity(t.group(), mc, 1);
  for (int k0 = 0; k0 < m; ++k0)
    for (int k1 = 0; k1 < m; ++k1) {
      Open w = mc.parts[k0] & mc.parts[k1];
      out.set(std::vector<int>{k0, k1},
              t.transporter(w, t.restrict_fam(mc.parts[k0], first[k0], w),
                            t.restrict_fam(mc.parts[k1], first[k1], w)));
    }
  CheckResult cr = is_cocycle(out);
  if (!cr)
    throw StructuralError(
        "internal: classification transitions break the cocycle law");
  return out;
}

Torsor induce(const SheafHom& f, const Torsor& t) {
  if (f.src != &t.group())
    throw StructuralError("hom source is not the acting sheaf");
  const SheafOfGroups& h = *f.dst;
  const FiniteSpace& sp = t.space();
  int n = sp.size();
  auto to_g = transport_from_base(t);
  // class of (u, s) in dst(x) x carrier(x) has coordinate u . f(g) for the
  // g moving the base to s; restriction crosses by tau = f(g_{x,y}) with
  // g_{x,y} moving the base at y onto the restricted base from x
  std::map<std::pair<int, int>, std::vector<int>> comps;
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) {
      if (x == y || !sp.leq(x, y)) continue;
      Elt tau = f.at(y, to_g[y][t.comp(x, y, 0)]);
      std::vector<int> tab(h.stalk(x).order());
      for (int u = 0; u < h.stalk(x).order(); ++u)
        tab[u] = h.stalk(y).mul(h.comp(x, y, static_cast<Elt>(u)), tau);
      comps[{x, y}] = tab;
    }
  return Torsor(h, stalk_sizes(h), left_mul_action(h), comps);
}

std::optional<std::vector<int>> torsor_isomorphism(const Torsor& a,
                                                   const Torsor& b) {
  if (&a.group() != &b.group())
    throw StructuralError("isomorphism across different acting sheaves");
  const FiniteSpace& sp = a.space();
  int n = sp.size();
  for (int p = 0; p < n; ++p)
    if (a.group().stalk(p).order() > 16)
      throw StructuralError("isomorphism search capped at stalk order 16");
  auto to_g = transport_from_base(a);
  std::vector<int> img(n, -1);
  // img[x] is the image of a's base at x; the induced map sends s to
  // to_g[x][s] . img[x], so compatibility only needs checking at the bases
  auto compatible = [&](int x, int y) {
    return b.act(y, to_g[y][a.comp(x, y, 0)], img[y]) ==
           b.comp(x, y, img[x]);
  };
  int x = 0;
  while (true) {
    bool advanced = false;
    for (int v = img[x] + 1; v < a.carrier_size(x); ++v) {
      img[x] = v;
      bool ok = true;
      for (int y = 0; y < x && ok; ++y) {
        if (sp.leq(y, x) && !compatible(y, x)) ok = false;
        if (ok && sp.leq(x, y) && !compatible(x, y)) ok = false;
      }
      if (ok) {
        advanced = true;
        break;
      }
    }
    if (!advanced) {
      img[x] = -1;
      if (--x < 0) return std::nullopt;
      continue;
    }
    if (++x == n) return img;
  }
}

ConnectingClass connecting_class(const SheafHom& incl, const SheafHom& proj,
                                 const Torsor& t, const Cover& cover) {
  CheckResult ext = is_central_extension(incl, proj);
  if (!ext) throw StructuralError("not a central extension: " + ext.reason);
  if (&t.group() != proj.dst)
    throw StructuralError("torsor is not over the quotient sheaf");
  const SheafOfGroups& g = *proj.src;
  const FiniteSpace& sp = t.space();
  validate_cover(sp, cover);
  if (cover.target != sp.points_mask())
    throw StructuralError("connecting map needs a cover of the whole space");
  int m = cover.size();
  std::vector<std::vector<int>> sec(m);
  for (int k = 0; k < m; ++k) {
    const auto& s = t.sections(cover.parts[k]);
    if (s.empty())
      return {std::nullopt, "cover part " + std::to_string(k) +
                                " has no section of the torsor"};
    sec[k] = s[0];
  }
  std::vector<std::vector<Elt>> lift(m * m);
  for (int k0 = 0; k0 < m; ++k0)
    for (int k1 = 0; k1 < m; ++k1) {
      Open w = cover.parts[k0] & cover.parts[k1];
      auto h = t.transporter(
          w, t.restrict_fam(cover.parts[k0], sec[k0], w),
          t.restrict_fam(cover.parts[k1], sec[k1], w));
      const SectionGroup& gs = g.sections(w);
      int found = -1;
      for (int i = 0; i < gs.size() && found < 0; ++i)
        if (proj.apply_fam(w, gs.elems[i]) == h) found = i;
      if (found < 0)
        return {std::nullopt, "transition over parts (" + std::to_string(k0) +
                                  ", " + std::to_string(k1) +
                                  ") has no lift"};
      lift[k0 * m + k1] = gs.elems[found];
    }
  Cochain out = Cochain::identity(*incl.src, cover, 2);
  for (int k0 = 0; k0 < m; ++k0)
    for (int k1 = 0; k1 < m; ++k1)
      for (int k2 = 0; k2 < m; ++k2) {
        int tup[3] = {k0, k1, k2};
        Open w = nerve_face(cover, tup);
        auto g01 = g.restrict_fam(cover.parts[k0] & cover.parts[k1],
                                  lift[k0 * m + k1], w);
        auto g12 = g.restrict_fam(cover.parts[k1] & cover.parts[k2],
                                  lift[k1 * m + k2], w);
        auto g02 = g.restrict_fam(cover.parts[k0] & cover.parts[k2],
                                  lift[k0 * m + k2], w);
        auto val = g.fam_mul(w, g.fam_inv(w, g02), g.fam_mul(w, g12, g01));
        auto nval = preimage_fam(incl, w, val);
        if (!nval)
          throw StructuralError(
              "internal: connecting value escapes the subsheaf");
        out.set(tup, std::move(*nval));
      }
  CheckResult cz = is_cocycle(out);
  if (!cz)
    throw StructuralError("internal: connecting class is not a cocycle");
  return {std::move(out), ""};
}

ConnectingClass connecting_class(const SheafHom& incl, const SheafHom& proj,
                                 const Torsor& t) {
  return connecting_class(incl, proj, t,
                          minimal_open_cover(t.space(), t.space().points_mask()));
}

}  // namespace gerbex
