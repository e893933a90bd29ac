#include <algorithm>

#include "gerbex/gerbe.hpp"

namespace gerbex {

namespace {

constexpr long long kGerbeCap = 4'000'000;

std::vector<Elt> flatten(const std::vector<std::vector<Elt>>& vals) {
  std::vector<Elt> out;
  for (const auto& v : vals) {
    out.push_back(static_cast<Elt>(v.size()));
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

}  // namespace

TorsorGerbe::TorsorGerbe(const SheafOfGroups& g) : g_(&g) {}

const TorsorGerbe::ObjectList& TorsorGerbe::objects(Open u) const {
  auto it = objs_.find(u);
  if (it != objs_.end()) return it->second;
  ObjectList ol;
  if (u == 0) {
    Cochain empty;
    empty.sheaf = g_;
    empty.cover = Cover{0, {}};
    empty.degree = 1;
    ol.cocycles.push_back(std::move(empty));
    ol.index[{}] = 0;
  } else {
    ol.cocycles = enumerate_cocycles1(*g_, minimal_open_cover(g_->space(), u));
    for (size_t i = 0; i < ol.cocycles.size(); ++i)
      ol.index[flatten(ol.cocycles[i].vals)] = static_cast<int>(i);
  }
  return objs_.emplace(u, std::move(ol)).first->second;
}

const std::vector<std::vector<Elt>>& TorsorGerbe::homs(Open u, int i,
                                                       int j) const {
  auto key = std::make_tuple(u, i, j);
  auto it = homs_.find(key);
  if (it != homs_.end()) return it->second;
  std::vector<std::vector<Elt>> out;
  if (u == 0) {
    out.push_back({});
    return homs_.emplace(key, std::move(out)).first->second;
  }
  const FiniteSpace& sp = g_->space();
  const Cochain& ci = objects(u).cocycles[i];
  const Cochain& cj = objects(u).cocycles[j];
  std::vector<int> pts = sp.points_of(u);
  int m = static_cast<int>(pts.size());
  std::vector<Elt> cur(m, 0);
  long long work = 0;
  // f_a generates a section over U_{x_a}; the twist condition is pointwise
  // on overlaps, and increasing pairs suffice (reversed values are inverses)
  auto rec = [&](auto&& self, int a) -> void {
    if (a == m) {
      out.push_back(cur);
      return;
    }
    int xa = pts[a];
    Open ua = sp.minimal_open(xa);
    for (int v = 0; v < g_->stalk(xa).order(); ++v) {
      if (++work > kGerbeCap)
        throw StructuralError("torsor gerbe hom search exceeded the work cap");
      cur[a] = static_cast<Elt>(v);
      bool ok = true;
      for (int b = 0; b < a && ok; ++b) {
        Open w = sp.minimal_open(pts[b]) & ua;
        if (w == 0) continue;
        std::vector<int> t{b, a};
        const std::vector<Elt>& vi = ci.at(t);
        const std::vector<Elt>& vj = cj.at(t);
        for (int q : sp.points_of(w)) {
          int coord = g_->coord_of(w, q);
          const FiniteGroup& gq = g_->stalk(q);
          Elt fa = g_->comp(xa, q, cur[a]);
          Elt fb = g_->comp(pts[b], q, cur[b]);
          if (vj[coord] != gq.mul(fa, gq.mul(vi[coord], gq.inv(fb)))) {
            ok = false;
            break;
          }
        }
      }
      if (ok) self(self, a + 1);
    }
  };
  rec(rec, 0);
  return homs_.emplace(key, std::move(out)).first->second;
}

int TorsorGerbe::n_objects(Open u) const {
  return static_cast<int>(objects(u).cocycles.size());
}

int TorsorGerbe::n_homs(Open u, int i, int j) const {
  return static_cast<int>(homs(u, i, j).size());
}

const Cochain& TorsorGerbe::object_cocycle(Open u, int i) const {
  return objects(u).cocycles[i];
}

const std::vector<Elt>& TorsorGerbe::mor_family(Open u, int i, int j,
                                                int f) const {
  return homs(u, i, j)[f];
}

int TorsorGerbe::mor_index(Open u, int i, int j,
                           std::span<const Elt> fam) const {
  const auto& list = homs(u, i, j);
  std::vector<Elt> key(fam.begin(), fam.end());
  auto it = std::lower_bound(list.begin(), list.end(), key);
  if (it == list.end() || *it != key) return -1;
  return static_cast<int>(it - list.begin());
}

int TorsorGerbe::object_index(Open u, const Cochain& c) const {
  auto it = objects(u).index.find(flatten(c.vals));
  return it == objects(u).index.end() ? -1 : it->second;
}

int TorsorGerbe::compose(Open u, int i, int j, int k, int f, int g) const {
  if (u == 0) return 0;
  const std::vector<Elt>& ff = homs(u, i, j)[f];
  const std::vector<Elt>& gg = homs(u, j, k)[g];
  std::vector<int> pts = g_->space().points_of(u);
  std::vector<Elt> out(ff.size());
  for (size_t a = 0; a < ff.size(); ++a)
    out[a] = g_->stalk(pts[a]).mul(gg[a], ff[a]);
  int r = mor_index(u, i, k, out);
  if (r < 0)
    throw StructuralError("internal: composite twisting family is missing");
  return r;
}

int TorsorGerbe::identity(Open u, int i) const {
  if (u == 0) return 0;
  std::vector<int> pts = g_->space().points_of(u);
  std::vector<Elt> e(pts.size());
  for (size_t a = 0; a < pts.size(); ++a) e[a] = g_->stalk(pts[a]).id();
  int r = mor_index(u, i, i, e);
  if (r < 0) throw StructuralError("internal: identity family is missing");
  return r;
}

int TorsorGerbe::inverse(Open u, int i, int j, int f) const {
  if (u == 0) return 0;
  const std::vector<Elt>& ff = homs(u, i, j)[f];
  std::vector<int> pts = g_->space().points_of(u);
  std::vector<Elt> out(ff.size());
  for (size_t a = 0; a < ff.size(); ++a)
    out[a] = g_->stalk(pts[a]).inv(ff[a]);
  int r = mor_index(u, j, i, out);
  if (r < 0) throw StructuralError("internal: inverse family is missing");
  return r;
}

int TorsorGerbe::restrict_obj(Open u, int i, Open v) const {
  if (v == 0) return 0;
  if (v == u) return i;
  const FiniteSpace& sp = g_->space();
  const Cochain& ci = objects(u).cocycles[i];
  std::vector<int> ptsu = sp.points_of(u);
  std::vector<int> ptsv = sp.points_of(v);
  std::vector<int> pos(ptsv.size());
  for (size_t a = 0; a < ptsv.size(); ++a)
    pos[a] = static_cast<int>(
        std::find(ptsu.begin(), ptsu.end(), ptsv[a]) - ptsu.begin());
  Cochain out;
  out.sheaf = g_;
  out.cover = minimal_open_cover(sp, v);
  out.degree = 1;
  long long n = out.tuple_count();
  out.vals.resize(n);
  for (long long e = 0; e < n; ++e) {
    std::vector<int> t = out.decode(e);
    std::vector<int> ct(t.size());
    for (size_t a = 0; a < t.size(); ++a) ct[a] = pos[t[a]];
    out.vals[e] = g_->restrict_fam(ci.face(ct), ci.at(ct), out.face(t));
  }
  int r = object_index(v, out);
  if (r < 0) throw StructuralError("internal: restricted cocycle is missing");
  return r;
}

int TorsorGerbe::restrict_mor(Open u, int i, int j, int f, Open v) const {
  if (v == 0) return 0;
  if (v == u) return f;
  const FiniteSpace& sp = g_->space();
  const std::vector<Elt>& ff = homs(u, i, j)[f];
  std::vector<int> ptsu = sp.points_of(u);
  std::vector<Elt> out;
  for (size_t a = 0; a < ptsu.size(); ++a)
    if (v & (Open{1} << ptsu[a])) out.push_back(ff[a]);
  int r = mor_index(v, restrict_obj(u, i, v), restrict_obj(u, j, v), out);
  if (r < 0)
    throw StructuralError("internal: restricted twisting family is missing");
  return r;
}

TorsorGerbe torsor_gerbe(const SheafOfGroups& g) { return TorsorGerbe(g); }

// ---------------------------------------------------------------------------
// CentralSubgroupoidAsSheaf

namespace {

// first isomorphism from object i to object 0 over u
int first_iso_to_base(const PrestackGroupoid& p, Open u, int i) {
  if (p.n_homs(u, i, 0) == 0)
    throw StructuralError("local objects are not connected");
  return 0;
}

}  // namespace

CentralSubgroupoidAsSheaf::CentralSubgroupoidAsSheaf(
    const PrestackGroupoid& ambient, NormalSubgroupoid n) {
  if (n.ambient != &ambient)
    throw StructuralError("subgroupoid of a different prestack");
  ambient_ = &ambient;
  n_ = std::move(n);
  const FiniteSpace& sp = ambient.space();
  std::vector<FiniteGroup> stalks;
  std::vector<std::vector<int>> memb(sp.size());
  for (int x = 0; x < sp.size(); ++x) {
    Open ux = sp.minimal_open(x);
    if (ambient.n_objects(ux) < 1)
      throw StructuralError("no local object at " + sp.label(x));
    memb[x] = n_.members(ux, 0);
    int nm = static_cast<int>(memb[x].size());
    if (nm == 0 || nm > FiniteGroup::kMaxOrder)
      throw StructuralError("member set has an unusable size at " +
                            sp.label(x));
    // centrality in the full automorphism group
    for (int m : memb[x])
      for (int h = 0; h < ambient.n_homs(ux, 0, 0); ++h)
        if (ambient.compose(ux, 0, 0, 0, m, h) !=
            ambient.compose(ux, 0, 0, 0, h, m))
          throw StructuralError("subgroupoid is not central at " +
                                sp.label(x));
    std::vector<std::vector<int>> mul(nm, std::vector<int>(nm));
    for (int a = 0; a < nm; ++a)
      for (int b = 0; b < nm; ++b) {
        int c = ambient.compose(ux, 0, 0, 0, memb[x][b], memb[x][a]);
        auto it = std::lower_bound(memb[x].begin(), memb[x].end(), c);
        if (it == memb[x].end() || *it != c)
          throw StructuralError("members are not closed under composition");
        mul[a][b] = static_cast<int>(it - memb[x].begin());
      }
    stalks.push_back(FiniteGroup::from_table(mul));
  }
  std::map<std::pair<int, int>, std::vector<Elt>> comps;
  for (int x = 0; x < sp.size(); ++x)
    for (int y = 0; y < sp.size(); ++y) {
      if (x == y || !sp.leq(x, y)) continue;
      Open ux = sp.minimal_open(x), uy = sp.minimal_open(y);
      int r = ambient.restrict_obj(ux, 0, uy);
      std::vector<Elt> cmap(memb[x].size());
      for (size_t a = 0; a < memb[x].size(); ++a) {
        int rm = ambient.restrict_mor(ux, 0, 0, memb[x][a], uy);
        int image = -1;
        for (int g = 0; g < ambient.n_homs(uy, r, 0); ++g) {
          int im = ad(ambient, uy, r, 0, g)[rm];
          if (image == -1)
            image = im;
          else if (image != im)
            throw StructuralError(
                "subgroupoid is not central: transport depends on the "
                "identification at " +
                sp.label(y));
        }
        if (image == -1)
          throw StructuralError("local objects are not connected at " +
                                sp.label(y));
        auto it = std::lower_bound(memb[y].begin(), memb[y].end(), image);
        if (it == memb[y].end() || *it != image)
          throw StructuralError("transported member escapes the subgroupoid");
        cmap[a] = static_cast<Elt>(it - memb[y].begin());
      }
      comps[{x, y}] = std::move(cmap);
    }
  band_ = std::make_shared<SheafOfGroups>(sp, std::move(stalks), comps);
  if (!band_->abelian())
    throw StructuralError("internal: central members form a nonabelian band");
}

CentralSubgroupoidAsSheaf CentralSubgroupoidAsSheaf::identity_band(
    const PrestackGroupoid& ambient,
    std::shared_ptr<const SheafOfGroups> band) {
  CentralSubgroupoidAsSheaf out;
  out.ambient_ = &ambient;
  out.identity_chi_ = true;
  out.band_ = std::move(band);
  return out;
}

const std::vector<int>& CentralSubgroupoidAsSheaf::chi(Open u, int i) const {
  auto key = std::make_pair(u, i);
  auto it = chi_.find(key);
  if (it != chi_.end()) return it->second;
  const PrestackGroupoid& p = *ambient_;
  const FiniteSpace& sp = p.space();
  const SectionGroup& sec = band_->sections(u);
  std::vector<int> table;
  if (identity_chi_) {
    if (p.n_homs(u, i, i) != sec.size())
      throw StructuralError(
          "automorphisms do not match the band sections over the open");
    table.resize(sec.size());
    for (int s = 0; s < sec.size(); ++s) table[s] = s;
  } else {
    table.assign(sec.size(), -1);
    std::vector<int> pts = sp.points_of(u);
    for (int m : n_.members(u, i)) {
      std::vector<Elt> fam(pts.size());
      for (size_t a = 0; a < pts.size(); ++a) {
        int x = pts[a];
        Open ux = sp.minimal_open(x);
        int ix = p.restrict_obj(u, i, ux);
        int mx = p.restrict_mor(u, i, i, m, ux);
        int g = first_iso_to_base(p, ux, ix);
        int im = ad(p, ux, ix, 0, g)[mx];
        std::vector<int> mx_members = n_.members(ux, 0);
        auto pos = std::lower_bound(mx_members.begin(), mx_members.end(), im);
        if (pos == mx_members.end() || *pos != im)
          throw StructuralError(
              "a member's restriction leaves the subgroupoid");
        fam[a] = static_cast<Elt>(pos - mx_members.begin());
      }
      int si = sec.index_of(fam);
      if (si < 0)
        throw StructuralError("a member family is not a band section");
      if (table[si] != -1)
        throw StructuralError("two members share a band section");
      table[si] = m;
    }
    for (int v : table)
      if (v == -1)
        throw StructuralError(
            "a band section is not realized by a member; the member "
            "presheaf is not the band's section sheaf");
  }
  return chi_.emplace(key, std::move(table)).first->second;
}

int CentralSubgroupoidAsSheaf::chi_inv(Open u, int i, int mor) const {
  const std::vector<int>& table = chi(u, i);
  for (size_t s = 0; s < table.size(); ++s)
    if (table[s] == mor) return static_cast<int>(s);
  return -1;
}

CheckResult chi_condition(const CentralSubgroupoidAsSheaf& c,
                          std::span<const Open> opens) {
  const PrestackGroupoid& p = c.ambient();
  for (Open u : opens) {
    int n = p.n_objects(u);
    for (int i = 0; i < n; ++i) {
      const std::vector<int>& ci = c.chi(u, i);
      for (int j = 0; j < n; ++j) {
        const std::vector<int>& cj = c.chi(u, j);
        for (int g = 0; g < p.n_homs(u, i, j); ++g) {
          std::vector<int> table = ad(p, u, i, j, g);
          for (size_t s = 0; s < ci.size(); ++s)
            if (table[ci[s]] != cj[s])
              return CheckResult::fail(
                  "conjugation does not carry the band identification "
                  "between objects " +
                  std::to_string(i) + " and " + std::to_string(j));
        }
      }
    }
  }
  return CheckResult::pass();
}

// ---------------------------------------------------------------------------
// extension of torsor gerbes

CentralExtensionOfGerbes extension_of_torsor_gerbes(const SheafHom& incl,
                                                    const SheafHom& proj) {
  CheckResult ce = is_central_extension(incl, proj);
  if (!ce)
    throw StructuralError("not a central extension of sheaves: " + ce.reason);
  auto total = std::make_shared<TorsorGerbe>(*proj.src);
  auto base = std::make_shared<TorsorGerbe>(*proj.dst);
  SheafHom pr = proj;
  GerbeMorphism f;
  f.source = total.get();
  f.target = base.get();
  f.on_obj = [total, base, pr](Open u, int i) {
    Cochain c = apply_hom(pr, total->object_cocycle(u, i));
    int r = base->object_index(u, c);
    if (r < 0)
      throw StructuralError("internal: pushed cocycle is not enumerated");
    return r;
  };
  f.on_mor = [total, base, pr](Open u, int i, int j, int m) {
    const std::vector<Elt>& fam = total->mor_family(u, i, j, m);
    std::vector<int> pts = total->space().points_of(u);
    std::vector<Elt> out(fam.size());
    for (size_t a = 0; a < fam.size(); ++a)
      out[a] = pr.at(pts[a], fam[a]);
    Cochain ci = apply_hom(pr, total->object_cocycle(u, i));
    Cochain cj = apply_hom(pr, total->object_cocycle(u, j));
    int r = base->mor_index(u, base->object_index(u, ci),
                            base->object_index(u, cj), out);
    if (r < 0)
      throw StructuralError("internal: pushed twisting family is missing");
    return r;
  };
  auto band = std::make_shared<CentralSubgroupoidAsSheaf>(*total, kernel(f));
  return CentralExtensionOfGerbes{total, base, std::move(f), std::move(band)};
}

}  // namespace gerbex
