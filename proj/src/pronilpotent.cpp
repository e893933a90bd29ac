#include <algorithm>
#include <array>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "gerbex/pronilpotent.hpp"

namespace gerbex {

namespace {

constexpr long long kPronilCap = 20'000'000;

void spend(long long& budget, long long cost) {
  budget -= cost;
  if (budget < 0)
    throw StructuralError("work cap exceeded in a pronilpotent computation");
}

std::string open_str(const FiniteSpace& sp, Open u) {
  std::string s = "{";
  for (int p = 0; p < sp.size(); ++p)
    if (u >> p & 1) {
      if (s.size() > 1) s += ",";
      s += sp.label(p);
    }
  return s + "}";
}

// sorted image of one filtration level in the ambient stalk at x
std::vector<Elt> level_image(const FilteredSheafGroup& f, int p, int x) {
  std::vector<Elt> im(f.levels[p].incl.maps[x]);
  std::sort(im.begin(), im.end());
  return im;
}

CheckResult sheaf_filtration_shape(const FilteredSheafGroup& f) {
  if (!f.ambient) return CheckResult::fail("no ambient sheaf");
  if (f.depth() < 1)
    return CheckResult::fail("a filtration needs at least two levels");
  for (int p = 0; p <= f.depth(); ++p) {
    const SubSheaf& s = f.levels[p];
    if (!s.sheaf || s.incl.src != s.sheaf.get() || s.incl.dst != f.ambient)
      return CheckResult::fail("level " + std::to_string(p) +
                               " does not include into the ambient sheaf");
    if (!s.incl.stalkwise_injective())
      return CheckResult::fail("the level " + std::to_string(p) +
                               " inclusion is not stalkwise injective");
  }
  return CheckResult::pass();
}

void require_central(const FilteredSheafGroup& f) {
  CheckResult rc = is_central_filtration(f);
  if (!rc.ok)
    throw StructuralError("not a central filtration: " + rc.reason);
}

void require_shape(const FilteredGerbe& g) {
  if (!g.ambient)
    throw StructuralError("the filtered gerbe has no ambient prestack");
  if (g.depth() < 1)
    throw StructuralError("a filtration needs at least two levels");
  for (const NormalSubgroupoid& n : g.levels)
    if (n.ambient != g.ambient || !n.members)
      throw StructuralError(
          "a filtration level does not belong to the ambient prestack");
}

}  // namespace

FilteredSheafGroup filtration_from_stalks(
    const SheafOfGroups& g,
    const std::vector<std::vector<std::vector<Elt>>>& chains) {
  const FiniteSpace& sp = g.space();
  const int n = sp.size();
  const int d = static_cast<int>(chains.size()) - 1;
  if (d < 1) throw StructuralError("a filtration needs at least two levels");
  for (const auto& level : chains)
    if (static_cast<int>(level.size()) != n)
      throw StructuralError("chains must list one subgroup per level per point");
  for (int x = 0; x < n; ++x) {
    for (int p = 0; p <= d; ++p) {
      const std::vector<Elt>& e = chains[p][x];
      if (!std::is_sorted(e.begin(), e.end()) ||
          std::adjacent_find(e.begin(), e.end()) != e.end() ||
          !g.stalk(x).is_subgroup(e))
        throw StructuralError("level " + std::to_string(p) + " at point " +
                              sp.label(x) + " is not a sorted subgroup");
      if (p > 0 &&
          !std::includes(chains[p - 1][x].begin(), chains[p - 1][x].end(),
                         e.begin(), e.end()))
        throw StructuralError("level " + std::to_string(p) + " at point " +
                              sp.label(x) + " is not inside level " +
                              std::to_string(p - 1));
    }
    if (static_cast<int>(chains[0][x].size()) != g.stalk(x).order())
      throw StructuralError("level 0 must be the full stalk at point " +
                            sp.label(x));
    if (chains[d][x] != std::vector<Elt>{g.stalk(x).id()})
      throw StructuralError("the last level must be trivial at point " +
                            sp.label(x));
  }
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) {
      if (x == y || !sp.leq(x, y)) continue;
      for (int p = 0; p <= d; ++p)
        for (Elt e : chains[p][x])
          if (!std::binary_search(chains[p][y].begin(), chains[p][y].end(),
                                  g.comp(x, y, e)))
            throw StructuralError("level " + std::to_string(p) +
                                  " is not stable under the comparison map "
                                  "from " +
                                  sp.label(x) + " to " + sp.label(y));
    }

  FilteredSheafGroup out;
  out.ambient = &g;
  for (int p = 0; p <= d; ++p) {
    std::vector<FiniteGroup> stalks;
    std::vector<SubgroupAsGroup> subs;
    for (int x = 0; x < n; ++x) {
      subs.push_back(subgroup_as_group(g.stalk(x), chains[p][x]));
      stalks.push_back(subs.back().group);
    }
    std::map<std::pair<int, int>, std::vector<Elt>> comps;
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y) {
        if (x == y || !sp.leq(x, y)) continue;
        std::vector<Elt> m(stalks[x].order());
        for (int a = 0; a < stalks[x].order(); ++a)
          m[a] = static_cast<Elt>(
              subs[y].index_in_sub[g.comp(x, y, subs[x].embed[a])]);
        comps[{x, y}] = std::move(m);
      }
    auto sheaf = std::make_shared<SheafOfGroups>(sp, std::move(stalks), comps);
    std::vector<std::vector<Elt>> maps;
    for (int x = 0; x < n; ++x) maps.push_back(subs[x].embed);
    SheafHom incl(*sheaf, g, std::move(maps));
    out.levels.push_back(SubSheaf{std::move(sheaf), std::move(incl)});
  }
  return out;
}

CheckResult is_central_filtration(const FilteredSheafGroup& f) {
  CheckResult shape = sheaf_filtration_shape(f);
  if (!shape.ok) return shape;
  const FiniteSpace& sp = f.ambient->space();
  for (int x = 0; x < sp.size(); ++x) {
    const FiniteGroup& st = f.ambient->stalk(x);
    std::vector<std::vector<Elt>> im;
    for (int p = 0; p <= f.depth(); ++p) im.push_back(level_image(f, p, x));
    if (static_cast<int>(im[0].size()) != st.order())
      return CheckResult::fail("level 0 is not the full stalk at " +
                               sp.label(x));
    if (im.back() != std::vector<Elt>{st.id()})
      return CheckResult::fail("the last level is not trivial at " +
                               sp.label(x));
    for (int p = 0; p < f.depth(); ++p) {
      if (!std::includes(im[p].begin(), im[p].end(), im[p + 1].begin(),
                         im[p + 1].end()))
        return CheckResult::fail("level " + std::to_string(p + 1) +
                                 " is not inside level " + std::to_string(p) +
                                 " at " + sp.label(x));
      for (Elt a : im[p])
        for (int g = 0; g < st.order(); ++g) {
          Elt comm = st.mul(st.mul(a, static_cast<Elt>(g)),
                            st.inv(st.mul(static_cast<Elt>(g), a)));
          if (!std::binary_search(im[p + 1].begin(), im[p + 1].end(), comm))
            return CheckResult::fail(
                "a commutator of a level-" + std::to_string(p) +
                " element escapes level " + std::to_string(p + 1) + " at " +
                sp.label(x));
        }
    }
  }
  return CheckResult::pass();
}

std::vector<Elt> LayerSheaf::class_fam(Open u,
                                       std::span<const Elt> fam) const {
  const std::vector<int> pts = sheaf->space().points_of(u);
  if (fam.size() != pts.size())
    throw StructuralError("family size does not match the open");
  std::vector<Elt> out;
  for (size_t k = 0; k < pts.size(); ++k) {
    int lab = cls[pts[k]][fam[k]];
    if (lab < 0)
      throw StructuralError("a value falls outside the filtration level");
    out.push_back(static_cast<Elt>(lab));
  }
  return out;
}

LayerSheaf layer_sheaf(const FilteredSheafGroup& f, int p, int q) {
  CheckResult shape = sheaf_filtration_shape(f);
  if (!shape.ok) throw StructuralError(shape.reason);
  if (p < 0 || q <= p || q > f.depth())
    throw StructuralError("layer indices out of range");
  const FiniteSpace& sp = f.ambient->space();
  const int n = sp.size();

  LayerSheaf out;
  out.cls.resize(n);
  out.rep.resize(n);
  std::vector<FiniteGroup> stalks;
  for (int x = 0; x < n; ++x) {
    const FiniteGroup& st = f.ambient->stalk(x);
    SubgroupAsGroup sub = subgroup_as_group(st, level_image(f, p, x));
    std::vector<Elt> nq;
    for (Elt e : level_image(f, q, x)) {
      int idx = sub.index_in_sub[e];
      if (idx < 0)
        throw StructuralError("level " + std::to_string(q) +
                              " is not inside level " + std::to_string(p) +
                              " at " + sp.label(x));
      nq.push_back(static_cast<Elt>(idx));
    }
    QuotientGroup qg = quotient_group(sub.group, nq);
    out.cls[x].assign(st.order(), -1);
    for (int a = 0; a < sub.group.order(); ++a)
      out.cls[x][sub.embed[a]] = qg.proj[a];
    out.rep[x].resize(qg.group.order());
    for (int lab = 0; lab < qg.group.order(); ++lab)
      out.rep[x][lab] = sub.embed[qg.rep[lab]];
    stalks.push_back(std::move(qg.group));
  }
  std::map<std::pair<int, int>, std::vector<Elt>> comps;
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) {
      if (x == y || !sp.leq(x, y)) continue;
      std::vector<Elt> m(stalks[x].order());
      for (int lab = 0; lab < stalks[x].order(); ++lab) {
        int ly = out.cls[y][f.ambient->comp(x, y, out.rep[x][lab])];
        if (ly < 0)
          throw StructuralError("level " + std::to_string(p) +
                                " is not stable under the comparison map "
                                "from " +
                                sp.label(x) + " to " + sp.label(y));
        m[lab] = static_cast<Elt>(ly);
      }
      comps[{x, y}] = std::move(m);
    }
  out.sheaf = std::make_shared<SheafOfGroups>(sp, std::move(stalks), comps);
  return out;
}

namespace {

// image of N_p sections inside the sections of N_p/N_q over u
bool level_sections_surject(const FilteredSheafGroup& f, int p, int q, Open u,
                            std::string* why) {
  const FiniteSpace& sp = f.ambient->space();
  LayerSheaf L = layer_sheaf(f, p, q);
  std::set<std::vector<Elt>> image;
  for (const std::vector<Elt>& s : f.levels[p].sheaf->sections(u).elems)
    image.insert(L.class_fam(u, f.levels[p].incl.apply_fam(u, s)));
  if (static_cast<int>(image.size()) != L.sheaf->sections(u).size()) {
    *why = "sections of level " + std::to_string(p) + " over " +
           open_str(sp, u) + " miss a section of its quotient by level " +
           std::to_string(q);
    return false;
  }
  return true;
}

}  // namespace

CheckResult acyclic_open(const FilteredSheafGroup& f, Open u) {
  require_central(f);
  const FiniteSpace& sp = f.ambient->space();
  if (!sp.is_open(u)) throw StructuralError("not an open set");
  if (u == 0) return CheckResult::pass();
  Cover mc = minimal_open_cover(sp, u);
  for (int p = 0; p < f.depth(); ++p) {
    LayerSheaf L = layer_sheaf(f, p, p + 1);
    for (int deg = 1; deg <= 2; ++deg)
      if (!cohomology_group(*L.sheaf, mc, deg).trivial())
        return CheckResult::fail(
            "degree-" + std::to_string(deg) + " cohomology of the level-" +
            std::to_string(p) + " layer does not vanish over " +
            open_str(sp, u));
  }
  for (int p = 0; p < f.depth(); ++p)
    for (int q = p + 1; q <= f.depth(); ++q) {
      std::string why;
      if (!level_sections_surject(f, p, q, u, &why))
        return CheckResult::fail(why);
    }
  return CheckResult::pass();
}

CheckResult completeness_check(const FilteredSheafGroup& f, Open u) {
  require_central(f);
  const FiniteSpace& sp = f.ambient->space();
  if (!sp.is_open(u)) throw StructuralError("not an open set");
  const SectionGroup& amb = f.ambient->sections(u);
  for (int p = 1; p <= f.depth(); ++p) {
    LayerSheaf L = layer_sheaf(f, 0, p);
    const std::vector<Elt> idfam = L.sheaf->fam_id(u);
    std::set<std::vector<Elt>> image;
    std::set<std::vector<Elt>> kernel;
    for (const std::vector<Elt>& s : amb.elems) {
      std::vector<Elt> cf = L.class_fam(u, s);
      image.insert(cf);
      if (cf == idfam) kernel.insert(s);
    }
    if (static_cast<int>(image.size()) != L.sheaf->sections(u).size())
      return CheckResult::fail("a section of the quotient by level " +
                               std::to_string(p) + " over " + open_str(sp, u) +
                               " has no ambient lift");
    std::set<std::vector<Elt>> lvl;
    for (const std::vector<Elt>& s : f.levels[p].sheaf->sections(u).elems)
      lvl.insert(f.levels[p].incl.apply_fam(u, s));
    if (lvl != kernel)
      return CheckResult::fail(
          "the kernel of the projection to the quotient by level " +
          std::to_string(p) + " over " + open_str(sp, u) +
          " is not the level's sections");
  }
  return CheckResult::pass();
}

FilteredGerbe filter_torsor_gerbe(const TorsorGerbe& g,
                                  const FilteredSheafGroup& f) {
  CheckResult shape = sheaf_filtration_shape(f);
  if (!shape.ok) throw StructuralError(shape.reason);
  if (f.ambient != &g.sheaf())
    throw StructuralError("the filtration is not over the torsor gerbe's sheaf");
  const int n = g.space().size();
  FilteredGerbe out;
  out.ambient = &g;
  for (int p = 0; p <= f.depth(); ++p) {
    std::vector<std::vector<char>> in(n);
    for (int x = 0; x < n; ++x) {
      in[x].assign(f.ambient->stalk(x).order(), 0);
      for (Elt e : level_image(f, p, x)) in[x][e] = 1;
    }
    const TorsorGerbe* gp = &g;
    out.levels.push_back(NormalSubgroupoid{
        &g, [gp, in = std::move(in)](Open u, int i) {
          std::vector<int> ids;
          const std::vector<int> pts = gp->space().points_of(u);
          const int nh = gp->n_homs(u, i, i);
          for (int h = 0; h < nh; ++h) {
            const std::vector<Elt>& fam = gp->mor_family(u, i, i, h);
            bool ok = true;
            for (size_t k = 0; k < pts.size() && ok; ++k)
              ok = in[pts[k]][fam[k]];
            if (ok) ids.push_back(h);
          }
          return ids;
        }});
  }
  return out;
}

CheckResult is_central_filtration(const FilteredGerbe& g,
                                  std::span<const Open> opens,
                                  std::span<const Cover> covers) {
  if (!g.ambient) return CheckResult::fail("no ambient prestack");
  if (g.depth() < 1)
    return CheckResult::fail("a filtration needs at least two levels");
  for (const NormalSubgroupoid& n : g.levels)
    if (n.ambient != g.ambient || !n.members)
      return CheckResult::fail(
          "a filtration level does not belong to the ambient prestack");
  const PrestackGroupoid& P = *g.ambient;
  const FiniteSpace& sp = P.space();
  for (int p = 0; p <= g.depth(); ++p) {
    CheckResult rc = is_normal_subgroupoid(g.levels[p], opens, covers);
    if (!rc.ok)
      return CheckResult::fail("level " + std::to_string(p) + ": " + rc.reason);
  }
  for (Open u : opens)
    for (int i = 0; i < P.n_objects(u); ++i) {
      const std::string at = " over " + open_str(sp, u) + " at object " +
                             std::to_string(i);
      const int nh = P.n_homs(u, i, i);
      std::vector<std::vector<int>> m;
      for (int p = 0; p <= g.depth(); ++p) m.push_back(g.levels[p].members(u, i));
      if (static_cast<int>(m[0].size()) != nh)
        return CheckResult::fail("level 0 is not the full automorphism group" +
                                 at);
      if (m.back() != std::vector<int>{P.identity(u, i)})
        return CheckResult::fail(
            "the last level keeps a non-identity automorphism" + at);
      for (int p = 0; p < g.depth(); ++p) {
        if (!std::includes(m[p].begin(), m[p].end(), m[p + 1].begin(),
                           m[p + 1].end()))
          return CheckResult::fail("level " + std::to_string(p + 1) +
                                   " is not inside level " + std::to_string(p) +
                                   at);
        for (int a : m[p])
          for (int h = 0; h < nh; ++h) {
            int ainv = P.inverse(u, i, i, a);
            int hinv = P.inverse(u, i, i, h);
            int t = P.compose(u, i, i, i, hinv, ainv);
            t = P.compose(u, i, i, i, t, h);
            t = P.compose(u, i, i, i, t, a);
            if (!std::binary_search(m[p + 1].begin(), m[p + 1].end(), t))
              return CheckResult::fail("a commutator of a level-" +
                                       std::to_string(p) +
                                       " member escapes level " +
                                       std::to_string(p + 1) + at);
          }
      }
    }
  return CheckResult::pass();
}

namespace {

// automorphism of the base local object (index 0) over the minimal open uy
// conjugate to mor, an automorphism of obj; centrality of the filtration
// makes the identification independent of the chosen isomorphism
int transport_to_base(const PrestackGroupoid& P, Open uy, int obj, int mor,
                      const FiniteSpace& sp, int y) {
  if (obj == 0) return mor;
  if (P.n_homs(uy, obj, 0) == 0)
    throw StructuralError(
        "no isomorphism onto the chosen local object over the minimal open "
        "of " +
        sp.label(y));
  return ad(P, uy, obj, 0, 0)[mor];
}

}  // namespace

LayerBand::LayerBand(const FilteredGerbe& g, int p)
    : amb_(g.ambient), levels_(g.levels), p_(p) {
  require_shape(g);
  if (p < 0 || p >= g.depth())
    throw StructuralError("layer index out of range");
  const FiniteSpace& sp = amb_->space();
  const int n = sp.size();
  cls_.resize(n);
  rep_.resize(n);
  std::vector<FiniteGroup> stalks;
  for (int x = 0; x < n; ++x) {
    Open ux = sp.minimal_open(x);
    if (amb_->n_objects(ux) == 0)
      throw StructuralError("no object over the minimal open of " +
                            sp.label(x));
    FiniteGroup aut = automorphism_group(*amb_, ux, 0);
    std::vector<int> mp = g.levels[p].members(ux, 0);
    std::vector<int> mq = g.levels[p + 1].members(ux, 0);
    for (int a : mp)
      for (int h = 0; h < aut.order(); ++h) {
        Elt ea = static_cast<Elt>(a), eh = static_cast<Elt>(h);
        Elt comm = aut.mul(aut.mul(ea, eh), aut.inv(aut.mul(eh, ea)));
        if (!std::binary_search(mq.begin(), mq.end(), static_cast<int>(comm)))
          throw StructuralError(
              "the filtration is not central: a commutator of a level-" +
              std::to_string(p) + " member escapes level " +
              std::to_string(p + 1) + " at " + sp.label(x));
      }
    SubgroupAsGroup sub =
        subgroup_as_group(aut, std::vector<Elt>(mp.begin(), mp.end()));
    std::vector<Elt> nq;
    for (int m : mq) {
      int idx = sub.index_in_sub[m];
      if (idx < 0)
        throw StructuralError("level " + std::to_string(p + 1) +
                              " is not inside level " + std::to_string(p) +
                              " at " + sp.label(x));
      nq.push_back(static_cast<Elt>(idx));
    }
    QuotientGroup qg = quotient_group(sub.group, nq);
    cls_[x].assign(aut.order(), -1);
    for (int a = 0; a < sub.group.order(); ++a)
      cls_[x][sub.embed[a]] = qg.proj[a];
    rep_[x].resize(qg.group.order());
    for (int lab = 0; lab < qg.group.order(); ++lab)
      rep_[x][lab] = sub.embed[qg.rep[lab]];
    stalks.push_back(std::move(qg.group));
  }
  std::map<std::pair<int, int>, std::vector<Elt>> comps;
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) {
      if (x == y || !sp.leq(x, y)) continue;
      Open ux = sp.minimal_open(x), uy = sp.minimal_open(y);
      std::vector<Elt> m(stalks[x].order());
      for (int lab = 0; lab < stalks[x].order(); ++lab) {
        int rr = amb_->restrict_mor(ux, 0, 0, rep_[x][lab], uy);
        int oxy = amb_->restrict_obj(ux, 0, uy);
        int t = transport_to_base(*amb_, uy, oxy, rr, sp, y);
        int ly = cls_[y][t];
        if (ly < 0)
          throw StructuralError(
              "a restricted member leaves the filtration level at " +
              sp.label(y));
        m[lab] = static_cast<Elt>(ly);
      }
      comps[{x, y}] = std::move(m);
    }
  sheaf_ = std::make_shared<SheafOfGroups>(sp, std::move(stalks), comps);
  if (!sheaf_->abelian()) throw StructuralError("the layer is not abelian");
}

std::vector<Elt> LayerBand::class_family(Open u, int i, int mor) const {
  const FiniteSpace& sp = amb_->space();
  if (!sp.is_open(u)) throw StructuralError("not an open set");
  if (i < 0 || i >= amb_->n_objects(u))
    throw StructuralError("object out of range");
  if (mor < 0 || mor >= amb_->n_homs(u, i, i))
    throw StructuralError("morphism out of range");
  std::vector<Elt> fam;
  for (int y : sp.points_of(u)) {
    Open uy = sp.minimal_open(y);
    int ry = amb_->restrict_mor(u, i, i, mor, uy);
    int iy = amb_->restrict_obj(u, i, uy);
    int t = transport_to_base(*amb_, uy, iy, ry, sp, y);
    int lab = cls_[y][t];
    if (lab < 0)
      throw StructuralError("not a member of filtration level " +
                            std::to_string(p_) + " over " + open_str(sp, u));
    fam.push_back(static_cast<Elt>(lab));
  }
  if (!sheaf_->is_section(u, fam))
    throw StructuralError("layer class family is not a section");
  return fam;
}

int LayerBand::lift(Open u, int i, std::span<const Elt> fam) const {
  const FiniteSpace& sp = amb_->space();
  if (!sp.is_open(u)) throw StructuralError("not an open set");
  if (i < 0 || i >= amb_->n_objects(u))
    throw StructuralError("object out of range");
  if (fam.size() != sp.points_of(u).size())
    throw StructuralError("family size does not match the open");
  const std::vector<Elt> want(fam.begin(), fam.end());
  for (int m : levels_[p_].members(u, i))
    if (class_family(u, i, m) == want) return m;
  return -1;
}

CentralExtensionOfGerbes layer_extension(const FilteredGerbe& g, int p) {
  require_shape(g);
  if (p < 0 || p >= g.depth())
    throw StructuralError("layer index out of range");
  QuotientGerbeResult q = quotient_gerbe(*g.ambient, g.levels[p + 1]);

  // The image of level p in the quotient: an automorphism belongs when at
  // every point, conjugated onto an induced object, it is the image of a
  // level-p member. Centrality mod level p+1 makes the test independent of
  // the chosen identification.
  struct Push {
    std::shared_ptr<const PrestackGroupoid> Q;
    GerbeMorphism proj;
    const PrestackGroupoid* amb;
    std::function<std::vector<int>(Open, int)> mem;
    std::map<std::pair<Open, int>, std::vector<char>> good;

    const std::vector<char>& good_at(Open ux, int dd) {
      auto it = good.find({ux, dd});
      if (it != good.end()) return it->second;
      int j = -1, qj = -1;
      for (int cand = 0; cand < amb->n_objects(ux) && j < 0; ++cand) {
        int qcand = proj.on_obj(ux, cand);
        if (Q->n_homs(ux, dd, qcand) > 0) {
          j = cand;
          qj = qcand;
        }
      }
      if (j < 0)
        throw StructuralError("a quotient object is not locally induced");
      std::set<int> im;
      for (int n : mem(ux, j)) im.insert(proj.on_mor(ux, j, j, n));
      int psiinv = Q->inverse(ux, dd, qj, 0);
      std::vector<char> ok(Q->n_homs(ux, dd, dd));
      for (int r = 0; r < static_cast<int>(ok.size()); ++r) {
        int c1 = Q->compose(ux, qj, dd, dd, psiinv, r);
        int c2 = Q->compose(ux, qj, dd, qj, c1, 0);
        ok[r] = im.count(c2) ? 1 : 0;
      }
      return good.emplace(std::make_pair(ux, dd), std::move(ok))
          .first->second;
    }
  };
  auto push = std::make_shared<Push>();
  push->Q = q.quotient;
  push->proj = q.proj;
  push->amb = g.ambient;
  push->mem = g.levels[p].members;

  NormalSubgroupoid image{
      q.quotient.get(), [push](Open u, int d) {
        std::vector<int> out;
        const std::vector<int> pts = push->Q->space().points_of(u);
        const int nh = push->Q->n_homs(u, d, d);
        for (int m = 0; m < nh; ++m) {
          bool pass = true;
          for (size_t k = 0; k < pts.size() && pass; ++k) {
            Open ux = push->Q->space().minimal_open(pts[k]);
            int dd = push->Q->restrict_obj(u, d, ux);
            int r = push->Q->restrict_mor(u, d, d, m, ux);
            pass = push->good_at(ux, dd)[r];
          }
          if (pass) out.push_back(m);
        }
        return out;
      }};
  return central_quotient_extension(q.quotient, std::move(image));
}

namespace {

// coset labels of level q inside the level-p members at (u, obj); reps are
// the sorted smallest coset members, label_of maps each member to its coset
struct CosetTable {
  std::vector<int> reps;
  std::map<int, int> label_of;
};

CosetTable cosets_at(const PrestackGroupoid& P, const FilteredGerbe& g, int p,
                     int q, Open u, int obj) {
  std::vector<int> mp = g.levels[p].members(u, obj);
  std::vector<int> mq = g.levels[q].members(u, obj);
  CosetTable t;
  std::map<int, int> rep_of;
  for (int m : mp) {
    if (rep_of.count(m)) continue;
    int best = -1;
    std::vector<int> orbit;
    for (int nu : mq) {
      int e = P.compose(u, obj, obj, obj, nu, m);
      orbit.push_back(e);
      if (best < 0 || e < best) best = e;
    }
    for (int e : orbit) rep_of[e] = best;
  }
  for (const auto& [m, r] : rep_of)
    if (m == r) t.reps.push_back(r);
  for (const auto& [m, r] : rep_of)
    t.label_of[m] = static_cast<int>(
        std::lower_bound(t.reps.begin(), t.reps.end(), r) - t.reps.begin());
  return t;
}

// surjectivity of level-p member sections onto their mod-level-q classes
// over u at the object i
bool member_sections_surject(const PrestackGroupoid& P, const FilteredGerbe& g,
                             int p, int q, Open u, int i) {
  const FiniteSpace& sp = P.space();
  const std::vector<int> pts = sp.points_of(u);
  const int np = static_cast<int>(pts.size());
  std::vector<CosetTable> tab(np);
  std::vector<int> iy(np);
  for (int k = 0; k < np; ++k) {
    Open uy = sp.minimal_open(pts[k]);
    iy[k] = P.restrict_obj(u, i, uy);
    tab[k] = cosets_at(P, g, p, q, uy, iy[k]);
  }
  // compatible label families, by depth-first assignment
  long long target = 0;
  std::vector<int> pick(np, -1);
  std::function<void(int)> walk = [&](int k) {
    if (k == np) {
      ++target;
      return;
    }
    for (size_t a = 0; a < tab[k].reps.size(); ++a) {
      bool ok = true;
      for (int l = 0; l < np && ok; ++l) {
        if (l == k || pick[l] < 0) continue;
        int hi = -1, lo = -1;  // lo <= hi in the specialization order
        if (sp.leq(pts[l], pts[k]))
          lo = l, hi = k;
        else if (sp.leq(pts[k], pts[l]))
          lo = k, hi = l;
        else
          continue;
        int lab_lo = lo == k ? static_cast<int>(a) : pick[lo];
        int lab_hi = hi == k ? static_cast<int>(a) : pick[hi];
        Open ulo = sp.minimal_open(pts[lo]), uhi = sp.minimal_open(pts[hi]);
        int r = P.restrict_mor(ulo, iy[lo], iy[lo], tab[lo].reps[lab_lo], uhi);
        ok = tab[hi].label_of.at(r) == lab_hi;
      }
      if (ok) {
        pick[k] = static_cast<int>(a);
        walk(k + 1);
        pick[k] = -1;
      }
    }
  };
  walk(0);
  std::set<std::vector<int>> image;
  for (int n : g.levels[p].members(u, i)) {
    std::vector<int> fam;
    for (int k = 0; k < np; ++k) {
      Open uy = sp.minimal_open(pts[k]);
      fam.push_back(tab[k].label_of.at(P.restrict_mor(u, i, i, n, uy)));
    }
    image.insert(fam);
  }
  return static_cast<long long>(image.size()) == target;
}

}  // namespace

CheckResult acyclic_open(const FilteredGerbe& g, Open u) {
  require_shape(g);
  const PrestackGroupoid& P = *g.ambient;
  const FiniteSpace& sp = P.space();
  if (!sp.is_open(u)) throw StructuralError("not an open set");
  if (P.n_objects(u) == 0)
    return CheckResult::fail("no object over " + open_str(sp, u));
  if (u == 0) return CheckResult::pass();
  Cover mc = minimal_open_cover(sp, u);
  for (int p = 0; p < g.depth(); ++p) {
    LayerBand band(g, p);
    for (int deg = 1; deg <= 2; ++deg)
      if (!cohomology_group(band.sheaf(), mc, deg).trivial())
        return CheckResult::fail(
            "degree-" + std::to_string(deg) + " cohomology of the level-" +
            std::to_string(p) + " layer does not vanish over " +
            open_str(sp, u));
  }
  for (int i = 0; i < P.n_objects(u); ++i)
    for (int p = 0; p < g.depth(); ++p)
      for (int q = p + 1; q <= g.depth(); ++q)
        if (!member_sections_surject(P, g, p, q, u, i))
          return CheckResult::fail(
              "automorphism sections of level " + std::to_string(p) +
              " at object " + std::to_string(i) + " over " + open_str(sp, u) +
              " miss a section of its quotient by level " + std::to_string(q));
  return CheckResult::pass();
}

namespace {

// one trivializing cochain lift attempt: twist b by z, then lift every
// degree-0 value (connect) over its part
std::optional<std::vector<int>> lift_parts(const LayerBand& band,
                                           const Cover& c,
                                           const std::vector<int>& iobj,
                                           const Cochain& b) {
  std::vector<int> out(c.size());
  for (int k = 0; k < c.size(); ++k) {
    std::array<int, 1> t{k};
    out[k] = band.lift(c.parts[k], iobj[k], b.at(t));
    if (out[k] < 0) return std::nullopt;
  }
  return out;
}

}  // namespace

ConnectResult connect(const FilteredGerbe& g, const Cover& c, int i, int j) {
  require_shape(g);
  const PrestackGroupoid& P = *g.ambient;
  const FiniteSpace& sp = P.space();
  validate_cover(sp, c);
  const Open X = c.target;
  if (i < 0 || i >= P.n_objects(X))
    throw StructuralError("source object out of range");
  if (j < 0 || j >= P.n_objects(X))
    throw StructuralError("target object out of range");
  const int K = c.size();

  std::vector<int> ik(K), jk(K), gk(K);
  for (int k = 0; k < K; ++k) {
    ik[k] = P.restrict_obj(X, i, c.parts[k]);
    jk[k] = P.restrict_obj(X, j, c.parts[k]);
    if (P.n_homs(c.parts[k], ik[k], jk[k]) == 0) {
      ConnectResult r;
      r.status = ConnectResult::Status::NoLocalMorphism;
      r.reason = "no local morphism over part " + std::to_string(k);
      return r;
    }
    gk[k] = 0;
  }

  for (int p = 0; p < g.depth(); ++p) {
    LayerBand band(g, p);
    Cochain ch = Cochain::identity(band.sheaf(), c, 1);
    for (int k0 = 0; k0 < K; ++k0)
      for (int k1 = 0; k1 < K; ++k1) {
        Open w = c.parts[k0] & c.parts[k1];
        if (w == 0) continue;
        int iw = P.restrict_obj(X, i, w);
        int jw = P.restrict_obj(X, j, w);
        int r0 = P.restrict_mor(c.parts[k0], ik[k0], jk[k0], gk[k0], w);
        int r1 = P.restrict_mor(c.parts[k1], ik[k1], jk[k1], gk[k1], w);
        int r1inv = P.inverse(w, iw, jw, r1);
        int d = P.compose(w, iw, jw, iw, r0, r1inv);
        std::array<int, 2> t{k0, k1};
        ch.set(t, band.class_family(w, iw, d));
      }
    CheckResult cy = is_cocycle(ch);
    if (!cy.ok)
      throw StructuralError("the layer comparison cochain is not a cocycle: " +
                            cy.reason);
    std::optional<Cochain> b = solve_coboundary(ch);
    if (!b) {
      ConnectResult r;
      r.status = ConnectResult::Status::LayerObstructed;
      r.layer = p;
      r.reason =
          class_is_trivial(ch)
              ? "the level-" + std::to_string(p) +
                    " comparison cocycle is not a coboundary on this cover, "
                    "though its class dies on the minimal cover"
              : "the level-" + std::to_string(p) +
                    " comparison cocycle has a nontrivial class";
      r.witness = std::move(ch);
      r.layer_sheaf = band.sheaf_ptr();
      return r;
    }
    std::optional<std::vector<int>> lifts = lift_parts(band, c, ik, *b);
    if (!lifts) {
      for (const std::vector<Elt>& s : band.sheaf().sections(X).elems) {
        Cochain tw = *b;
        for (int k = 0; k < K; ++k) {
          std::array<int, 1> t{k};
          tw.set(t, band.sheaf().fam_mul(
                        c.parts[k], tw.at(t),
                        band.sheaf().restrict_fam(X, s, c.parts[k])));
        }
        lifts = lift_parts(band, c, ik, tw);
        if (lifts) break;
      }
    }
    if (!lifts)
      throw StructuralError(
          "no section lift of the level-" + std::to_string(p) +
          " correction over the cover parts; they are not acyclic for the "
          "filtration");
    for (int k = 0; k < K; ++k) {
      int finv = P.inverse(c.parts[k], ik[k], ik[k], (*lifts)[k]);
      gk[k] = P.compose(c.parts[k], ik[k], ik[k], jk[k], finv, gk[k]);
    }
  }

  for (int k0 = 0; k0 < K; ++k0)
    for (int k1 = 0; k1 < K; ++k1) {
      Open w = c.parts[k0] & c.parts[k1];
      if (w == 0) continue;
      if (P.restrict_mor(c.parts[k0], ik[k0], jk[k0], gk[k0], w) !=
          P.restrict_mor(c.parts[k1], ik[k1], jk[k1], gk[k1], w))
        throw StructuralError(
            "local morphisms disagree after the last correction");
    }
  for (int f = 0; f < P.n_homs(X, i, j); ++f) {
    bool ok = true;
    for (int k = 0; k < K && ok; ++k)
      ok = P.restrict_mor(X, i, j, f, c.parts[k]) == gk[k];
    if (ok) {
      ConnectResult r;
      r.mor = f;
      return r;
    }
  }
  throw StructuralError(
      "the local morphisms agree on overlaps but no global morphism "
      "restricts to them; the prestack violates descent for morphisms");
}

GlueResult glue_object(const FilteredGerbe& g, const Cover& c) {
  require_shape(g);
  const PrestackGroupoid& P = *g.ambient;
  const FiniteSpace& sp = P.space();
  validate_cover(sp, c);
  const Open X = c.target;
  const int K = c.size();

  std::vector<int> io(K, 0);
  for (int k = 0; k < K; ++k)
    if (P.n_objects(c.parts[k]) == 0) {
      GlueResult r;
      r.status = GlueResult::Status::NotLocallyNonempty;
      r.reason = "no object over part " + std::to_string(k);
      return r;
    }

  auto obj_at = [&](int k, Open w) { return P.restrict_obj(c.parts[k], io[k], w); };

  // transitions t[k0][k1] over the pairwise overlaps, i_{k0} -> i_{k1}
  std::vector<std::vector<int>> t(K, std::vector<int>(K, -1));
  for (int k = 0; k < K; ++k) t[k][k] = P.identity(c.parts[k], io[k]);
  for (int k0 = 0; k0 < K; ++k0)
    for (int k1 = k0 + 1; k1 < K; ++k1) {
      Open w = c.parts[k0] & c.parts[k1];
      if (w == 0) {
        // nothing to compare over an empty overlap; the entries are never
        // restricted anywhere
        t[k0][k1] = t[k1][k0] = 0;
        continue;
      }
      int a0 = obj_at(k0, w), a1 = obj_at(k1, w);
      int mor;
      if (P.n_homs(w, a0, a1) > 0) {
        mor = 0;
      } else {
        ConnectResult cr = connect(g, minimal_open_cover(sp, w), a0, a1);
        if (cr.status == ConnectResult::Status::NoLocalMorphism)
          throw StructuralError("the prestack is not locally connected over " +
                                open_str(sp, w));
        if (!cr) {
          GlueResult r;
          r.status = GlueResult::Status::LayerObstructed;
          r.layer = cr.layer;
          r.witness = std::move(cr.witness);
          r.layer_sheaf = std::move(cr.layer_sheaf);
          r.reason = "connecting the transitions over the overlap of parts " +
                     std::to_string(k0) + " and " + std::to_string(k1) + ": " +
                     cr.reason;
          return r;
        }
        mor = cr.mor;
      }
      t[k0][k1] = mor;
      t[k1][k0] = P.inverse(w, a0, a1, mor);
    }

  auto face_mor = [&](int k0, int k1, Open y) {
    Open w = c.parts[k0] & c.parts[k1];
    return P.restrict_mor(w, obj_at(k0, w), obj_at(k1, w), t[k0][k1], y);
  };
  auto triple_defect = [&](int k0, int k1, int k2, Open y) {
    int a0 = obj_at(k0, y), a1 = obj_at(k1, y), a2 = obj_at(k2, y);
    int r01 = face_mor(k0, k1, y);
    int r12 = face_mor(k1, k2, y);
    int r02 = face_mor(k0, k2, y);
    int s = P.compose(y, a0, a1, a2, r01, r12);
    return P.compose(y, a0, a2, a0, s, P.inverse(y, a0, a2, r02));
  };

  for (int p = 0; p < g.depth(); ++p) {
    LayerBand band(g, p);
    Cochain ch = Cochain::identity(band.sheaf(), c, 2);
    for (int k0 = 0; k0 < K; ++k0)
      for (int k1 = 0; k1 < K; ++k1)
        for (int k2 = 0; k2 < K; ++k2) {
          Open y = c.parts[k0] & c.parts[k1] & c.parts[k2];
          if (y == 0) continue;
          std::array<int, 3> tu{k0, k1, k2};
          ch.set(tu, band.class_family(y, obj_at(k0, y),
                                       triple_defect(k0, k1, k2, y)));
        }
    CheckResult cy = is_cocycle(ch);
    if (!cy.ok)
      throw StructuralError(
          "the layer associativity cochain is not a cocycle: " + cy.reason);
    std::optional<Cochain> b = solve_coboundary(ch);
    if (!b) {
      GlueResult r;
      r.status = GlueResult::Status::LayerObstructed;
      r.layer = p;
      r.reason =
          class_is_trivial(ch)
              ? "the level-" + std::to_string(p) +
                    " associativity cocycle is not a coboundary on this "
                    "cover, though its class dies on the minimal cover"
              : "the level-" + std::to_string(p) +
                    " associativity cocycle has a nontrivial class";
      r.witness = std::move(ch);
      r.layer_sheaf = band.sheaf_ptr();
      return r;
    }
    auto lift_pairs = [&](const Cochain& bb)
        -> std::optional<std::vector<std::vector<int>>> {
      std::vector<std::vector<int>> f(K, std::vector<int>(K, -1));
      for (int k0 = 0; k0 < K; ++k0)
        for (int k1 = k0 + 1; k1 < K; ++k1) {
          Open w = c.parts[k0] & c.parts[k1];
          if (w == 0) continue;
          std::array<int, 2> tu{k0, k1};
          f[k0][k1] = band.lift(w, obj_at(k0, w), bb.at(tu));
          if (f[k0][k1] < 0) return std::nullopt;
        }
      return f;
    };
    std::optional<std::vector<std::vector<int>>> fs = lift_pairs(*b);
    if (!fs) {
      std::vector<Cochain> twists;
      try {
        twists = enumerate_cocycles1(band.sheaf(), c);
      } catch (const StructuralError&) {
        twists.clear();
      }
      for (const Cochain& z : twists) {
        fs = lift_pairs(cochain_mul(*b, z));
        if (fs) break;
      }
    }
    if (!fs)
      throw StructuralError(
          "no section lift of the level-" + std::to_string(p) +
          " correction over the pairwise overlaps; the cover parts are not "
          "acyclic for the filtration");
    for (int k0 = 0; k0 < K; ++k0)
      for (int k1 = k0 + 1; k1 < K; ++k1) {
        Open w = c.parts[k0] & c.parts[k1];
        if (w == 0) continue;
        int a0 = obj_at(k0, w), a1 = obj_at(k1, w);
        int finv = P.inverse(w, a0, a0, (*fs)[k0][k1]);
        t[k0][k1] = P.compose(w, a0, a0, a1, finv, t[k0][k1]);
        t[k1][k0] = P.inverse(w, a0, a1, t[k0][k1]);
      }
  }

  for (int k0 = 0; k0 < K; ++k0)
    for (int k1 = 0; k1 < K; ++k1)
      for (int k2 = 0; k2 < K; ++k2) {
        Open y = c.parts[k0] & c.parts[k1] & c.parts[k2];
        if (y == 0) continue;
        if (triple_defect(k0, k1, k2, y) != P.identity(y, obj_at(k0, y)))
          throw StructuralError(
              "transitions break the cocycle condition after the last "
              "correction");
      }

  // realize the exact descent datum by a global object
  long long budget = kPronilCap;
  auto intertwines = [&](int o, int k0, int k1, int phi0, int phi1) {
    Open w = c.parts[k0] & c.parts[k1];
    if (w == 0) return true;
    int ow = P.restrict_obj(X, o, w);
    int a0 = obj_at(k0, w), a1 = obj_at(k1, w);
    int r0 = P.restrict_mor(c.parts[k0], P.restrict_obj(X, o, c.parts[k0]),
                            io[k0], phi0, w);
    int r1 = P.restrict_mor(c.parts[k1], P.restrict_obj(X, o, c.parts[k1]),
                            io[k1], phi1, w);
    int lhs = P.compose(w, ow, a0, a1, r0, face_mor(k0, k1, w));
    return lhs == r1;
  };
  for (int o = 0; o < P.n_objects(X); ++o) {
    std::vector<int> phi(K, -1);
    std::function<bool(int)> dfs = [&](int k) -> bool {
      if (k == K) return true;
      int ok_obj = P.restrict_obj(X, o, c.parts[k]);
      const int nh = P.n_homs(c.parts[k], ok_obj, io[k]);
      for (int f = 0; f < nh; ++f) {
        spend(budget, 1);
        bool ok = true;
        for (int k2 = 0; k2 < k && ok; ++k2)
          ok = intertwines(o, k2, k, phi[k2], f);
        if (!ok) continue;
        phi[k] = f;
        if (dfs(k + 1)) return true;
        phi[k] = -1;
      }
      return false;
    };
    if (!dfs(0)) continue;
    for (int k0 = 0; k0 < K; ++k0)
      for (int k1 = 0; k1 < K; ++k1)
        if (!intertwines(o, k0, k1, phi[k0], phi[k1]))
          throw StructuralError("glued witness fails its descent check");
    GlueResult r;
    r.object = o;
    r.part_isos = std::move(phi);
    return r;
  }
  throw StructuralError(
      "the glued transition data is exact but no global object realizes it; "
      "the prestack violates descent for objects");
}

}  // namespace gerbex
