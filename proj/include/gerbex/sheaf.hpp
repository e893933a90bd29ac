#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "gerbex/group.hpp"
#include "gerbex/space.hpp"

namespace gerbex {

// Sections of a sheaf over one open, fully enumerated. A section is a family
// of stalk values indexed by the ascending point ids of the open (pts). The
// empty open has the single empty family.
struct SectionGroup {
  Open domain = 0;
  std::vector<int> pts;
  std::vector<std::vector<Elt>> elems;  // lexicographically sorted
  int identity = 0;

  int size() const { return static_cast<int>(elems.size()); }
  int index_of(std::span<const Elt> fam) const;  // -1 when absent
};

// A sheaf of groups on a finite space, given by one stalk group per point and
// comparison homomorphisms along the specialization order. Sections over any
// open are the comparison-compatible families; on these spaces that is
// exactly the sheaf condition, and the stalk at x is the value on the
// minimal open of x.
class SheafOfGroups {
 public:
  // comps[x][y] (for x <= y) maps stalk(x) -> stalk(y); must be functorial.
  // Pairs with x == y may be omitted (identity is implied) but if present
  // must be the identity map.
  SheafOfGroups(const FiniteSpace& space, std::vector<FiniteGroup> stalks,
                const std::map<std::pair<int, int>, std::vector<Elt>>& comps);

  static SheafOfGroups constant(const FiniteSpace& space,
                                const FiniteGroup& g);
  // Stalk g on points of w, trivial elsewhere; sections near the boundary of
  // w are forced to the identity.
  static SheafOfGroups extension_by_zero(const FiniteSpace& space, Open w,
                                         const FiniteGroup& g);

  const FiniteSpace& space() const { return *space_; }
  const FiniteGroup& stalk(int p) const { return stalks_[p]; }
  Elt comp(int x, int y, Elt g) const;  // requires x <= y
  bool abelian() const;

  // position of point p in the ascending point list of u, -1 when p not in u
  int coord_of(Open u, int p) const;

  bool is_section(Open u, std::span<const Elt> fam) const;
  std::vector<Elt> fam_id(Open u) const;
  std::vector<Elt> fam_mul(Open u, std::span<const Elt> a,
                           std::span<const Elt> b) const;
  std::vector<Elt> fam_inv(Open u, std::span<const Elt> a) const;
  std::vector<Elt> restrict_fam(Open u, std::span<const Elt> s, Open v) const;
  // section over u from its values on the minimal points of u; nullopt when
  // the propagated values clash
  std::optional<std::vector<Elt>> extend_from_minimal(
      Open u, std::span<const Elt> minimal_values) const;

  const SectionGroup& sections(Open u) const;  // enumerated, cached

 private:
  const FiniteSpace* space_;
  std::vector<FiniteGroup> stalks_;
  std::vector<std::vector<Elt>> comp_;  // [x * n + y], empty when !leq(x,y)
  mutable std::map<Open, SectionGroup> cache_;
};

// Pointwise homomorphism of sheaves on the same space, commuting with the
// comparison maps. Holds non-owning pointers; keep both sheaves alive.
struct SheafHom {
  const SheafOfGroups* src;
  const SheafOfGroups* dst;
  std::vector<std::vector<Elt>> maps;  // per point

  SheafHom(const SheafOfGroups& s, const SheafOfGroups& d,
           std::vector<std::vector<Elt>> maps);
  static SheafHom identity(const SheafOfGroups& g);

  Elt at(int p, Elt g) const { return maps[p][g]; }
  std::vector<Elt> apply_fam(Open u, std::span<const Elt> fam) const;
  bool stalkwise_injective() const;
  bool stalkwise_surjective() const;
};

// shared_ptr keeps the hom's sheaf pointer stable across moves; the parent
// sheaf is the caller's to keep alive.
struct SubSheaf {
  std::shared_ptr<const SheafOfGroups> sheaf;
  SheafHom incl;  // *sheaf -> parent
};

struct QuotientSheaf {
  std::shared_ptr<const SheafOfGroups> sheaf;
  SheafHom proj;  // parent -> *sheaf
  // per point: smallest coset representative in the parent stalk
  std::vector<std::vector<Elt>> rep;
};

// Largest subsheaf that is central in every section group: g lies in the
// center stalk at x iff its image in every stalk above x is central there.
SubSheaf center_of_sheaf(const SheafOfGroups& g);

SubSheaf kernel_sheaf(const SheafHom& f);

// incl must embed a stalkwise normal subsheaf.
QuotientSheaf quotient_sheaf(const SheafOfGroups& g, const SheafHom& incl);

// 1 -> N -> G -> H -> 1: incl stalkwise injective with central image, proj
// stalkwise surjective, image(incl) = kernel(proj) at every point.
CheckResult is_central_extension(const SheafHom& incl, const SheafHom& proj);

// Pointwise preimage of a family under a stalkwise injective hom (so the
// preimage is unique when it exists); nullopt when some value has none.
std::optional<std::vector<Elt>> preimage_fam(const SheafHom& f, Open u,
                                             std::span<const Elt> fam);

}  // namespace gerbex
