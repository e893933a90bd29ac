#include <algorithm>

#include "gerbex/gerbe.hpp"

namespace gerbex {

namespace {

bool has_adjacent_repeat(const std::vector<int>& t) {
  for (size_t a = 0; a + 1 < t.size(); ++a)
    if (t[a] == t[a + 1]) return true;
  return false;
}

bool is_identity_fam(const SheafOfGroups& f, Open u,
                     const std::vector<Elt>& fam) {
  return fam == f.fam_id(u);
}

}  // namespace

Cochain normalize_cocycle2(const Cochain& c) {
  if (!c.sheaf || c.degree != 2)
    throw StructuralError("normalization expects a degree-2 cochain");
  if (!c.sheaf->abelian())
    throw StructuralError("normalization expects an abelian sheaf");
  CheckResult z = is_cocycle(c);
  if (!z) throw StructuralError("not a cocycle: " + z.reason);
  Cochain b = Cochain::identity(*c.sheaf, c.cover, 1);
  int m = c.parts();
  for (int k0 = 0; k0 < m; ++k0)
    for (int k1 = 0; k1 < m; ++k1) {
      std::vector<int> pair{k0, k1};
      std::vector<int> triple{k0, k0, k1};
      Open w = b.face(pair);
      b.set(pair, c.sheaf->fam_inv(w, c.at(triple)));
    }
  Cochain out = cochain_mul(c, coboundary1(b));
  long long n = out.tuple_count();
  for (long long e = 0; e < n; ++e) {
    std::vector<int> t = out.decode(e);
    if (has_adjacent_repeat(t) &&
        !is_identity_fam(*c.sheaf, out.face(t), out.vals[e]))
      throw StructuralError("internal: normalization left a degenerate value");
  }
  if (!is_cocycle(out))
    throw StructuralError("internal: normalization broke the cocycle");
  return out;
}

// ---------------------------------------------------------------------------
// TwoCocycleGerbe

TwoCocycleGerbe::TwoCocycleGerbe(std::shared_ptr<const SheafOfGroups> band,
                                 Cover cover, Cochain normalized)
    : band_(std::move(band)), cover_(std::move(cover)),
      c_(std::move(normalized)) {
  if (!band_->abelian())
    throw StructuralError("the band of a two-cocycle gerbe must be abelian");
  validate_cover(band_->space(), cover_);
  if (cover_.target != band_->space().points_mask())
    throw StructuralError("the cover must cover the whole space");
  if (c_.sheaf != band_.get() || c_.degree != 2 ||
      c_.cover.parts != cover_.parts || c_.cover.target != cover_.target)
    throw StructuralError("cocycle does not match the band and cover");
  CheckResult z = is_cocycle(c_);
  if (!z) throw StructuralError("not a cocycle: " + z.reason);
  long long n = c_.tuple_count();
  for (long long e = 0; e < n; ++e) {
    std::vector<int> t = c_.decode(e);
    if (has_adjacent_repeat(t) &&
        !is_identity_fam(*band_, c_.face(t), c_.vals[e]))
      throw StructuralError(
          "cocycle is not normalized on degenerate tuples");
  }
}

const std::vector<int>& TwoCocycleGerbe::charts(Open u) const {
  auto it = charts_.find(u);
  if (it != charts_.end()) return it->second;
  std::vector<int> ks;
  for (int k = 0; k < cover_.size(); ++k)
    if (open_subset(u, cover_.parts[k])) ks.push_back(k);
  return charts_.emplace(u, std::move(ks)).first->second;
}

int TwoCocycleGerbe::part_of(Open u, int i) const {
  if (u == 0) return -1;
  return charts(u)[i];
}

int TwoCocycleGerbe::n_objects(Open u) const {
  if (u == 0) return 1;
  return static_cast<int>(charts(u).size());
}

int TwoCocycleGerbe::n_homs(Open u, int, int) const {
  if (u == 0) return 1;
  return band_->sections(u).size();
}

int TwoCocycleGerbe::compose(Open u, int i, int j, int k, int f,
                             int g) const {
  if (u == 0) return 0;
  const SectionGroup& sec = band_->sections(u);
  std::vector<int> t{part_of(u, i), part_of(u, j), part_of(u, k)};
  std::vector<Elt> tw = band_->restrict_fam(c_.face(t), c_.at(t), u);
  std::vector<Elt> out =
      band_->fam_mul(u, band_->fam_mul(u, sec.elems[g], sec.elems[f]), tw);
  return sec.index_of(out);
}

int TwoCocycleGerbe::identity(Open u, int) const {
  if (u == 0) return 0;
  return band_->sections(u).identity;
}

int TwoCocycleGerbe::inverse(Open u, int i, int j, int f) const {
  if (u == 0) return 0;
  const SectionGroup& sec = band_->sections(u);
  std::vector<int> t{part_of(u, i), part_of(u, j), part_of(u, i)};
  std::vector<Elt> tw = band_->restrict_fam(c_.face(t), c_.at(t), u);
  std::vector<Elt> out = band_->fam_mul(u, band_->fam_inv(u, sec.elems[f]),
                                        band_->fam_inv(u, tw));
  return sec.index_of(out);
}

int TwoCocycleGerbe::restrict_obj(Open u, int i, Open v) const {
  if (v == 0) return 0;
  if (v == u) return i;
  int ki = part_of(u, i);
  const std::vector<int>& kv = charts(v);
  auto it = std::lower_bound(kv.begin(), kv.end(), ki);
  return static_cast<int>(it - kv.begin());
}

int TwoCocycleGerbe::restrict_mor(Open u, int, int, int f, Open v) const {
  if (v == 0) return 0;
  if (v == u) return f;
  const SectionGroup& sec = band_->sections(u);
  return band_->sections(v).index_of(
      band_->restrict_fam(u, sec.elems[f], v));
}

CentralExtensionOfGerbes gerbe_from_2cocycle(const Cochain& c) {
  if (!c.sheaf || c.degree != 2)
    throw StructuralError("expected a degree-2 cochain");
  if (!c.sheaf->abelian())
    throw StructuralError("the band of a two-cocycle gerbe must be abelian");
  if (c.cover.target != c.sheaf->space().points_mask())
    throw StructuralError("the cocycle must live on a cover of the whole "
                          "space");
  CheckResult z = is_cocycle(c);
  if (!z) throw StructuralError("not a cocycle: " + z.reason);
  Cochain cn = normalize_cocycle2(refine_to_minimal(c));
  // the band aliases the cocycle's sheaf; the caller keeps it alive
  std::shared_ptr<const SheafOfGroups> band(
      std::shared_ptr<const SheafOfGroups>(), c.sheaf);
  auto total = std::make_shared<TwoCocycleGerbe>(band, cn.cover, cn);
  auto base = std::make_shared<TerminalGerbe>(c.sheaf->space());
  GerbeMorphism proj;
  proj.source = total.get();
  proj.target = base.get();
  proj.on_obj = [total, base](Open, int) { return 0; };
  proj.on_mor = [total, base](Open, int, int, int) { return 0; };
  auto csg = std::make_shared<CentralSubgroupoidAsSheaf>(
      CentralSubgroupoidAsSheaf::identity_band(*total, band));
  return CentralExtensionOfGerbes{total, base, std::move(proj),
                                  std::move(csg)};
}

}  // namespace gerbex
