#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gerbex/cech.hpp"
#include "gerbex/gerbe.hpp"
#include "gerbex/sheaf.hpp"
#include "gerbex/space.hpp"

namespace gerbex {

// A sheaf of groups with a finite descending central filtration
// G = N_0 >= N_1 >= ... >= N_d = 1. Levels are subsheaves of one ambient
// sheaf; centrality means commutators of N_p values with arbitrary stalk
// values land in N_{p+1}, which makes each consecutive layer N_p/N_{p+1}
// an abelian sheaf, central in G/N_{p+1}. Non-owning ambient pointer; the
// levels own their sheaves.
struct FilteredSheafGroup {
  const SheafOfGroups* ambient = nullptr;
  std::vector<SubSheaf> levels;

  int depth() const { return static_cast<int>(levels.size()) - 1; }
};

// Filtration from stalkwise element lists: chains[p][x] is the sorted
// element list of the level-p subgroup at point x. Validates the chain
// shape (full top, trivial bottom, descending subgroups, stability under
// the comparison maps); centrality is the separate check below.
FilteredSheafGroup filtration_from_stalks(
    const SheafOfGroups& g,
    const std::vector<std::vector<std::vector<Elt>>>& chains);

// Chain shape plus centrality at every stalk.
CheckResult is_central_filtration(const FilteredSheafGroup& f);

// The subquotient N_p/N_q (p < q) as a sheaf, with stalkwise translation
// tables: cls[x] sends an ambient stalk element to its coset label (-1
// outside N_p), rep[x] picks the smallest ambient representative per label.
struct LayerSheaf {
  std::shared_ptr<const SheafOfGroups> sheaf;
  std::vector<std::vector<int>> cls;
  std::vector<std::vector<Elt>> rep;

  // coset labels of an ambient family over u, pointwise; throws when some
  // value falls outside N_p
  std::vector<Elt> class_fam(Open u, std::span<const Elt> fam) const;
};
LayerSheaf layer_sheaf(const FilteredSheafGroup& f, int p, int q);

// Acyclicity of the open u for the filtration: degree 1 and 2 cohomology
// of every consecutive layer vanishes on the minimal open cover of u, and
// sections of N_p over u surject onto sections of N_p/N_q for all
// q > p >= 0. The reason names the first violated condition.
CheckResult acyclic_open(const FilteredSheafGroup& f, Open u);

// Exactness of 1 -> N_p(u) -> G(u) -> (G/N_p)(u) -> 1 for every level p:
// the projection is surjective on sections over u and its kernel is
// exactly the level's sections. At finite depth this is the completeness
// of G(u) for the filtration topology.
CheckResult completeness_check(const FilteredSheafGroup& f, Open u);

// A prestack of groupoids with a finite descending central filtration of
// its automorphisms: levels[0](u, i) is all of hom(u, i, i), the last
// level is identities only, and commutators of level-p members with
// arbitrary automorphisms land in level p+1. Non-owning ambient pointer;
// whatever the member callbacks capture must stay alive.
struct FilteredGerbe {
  const PrestackGroupoid* ambient = nullptr;
  std::vector<NormalSubgroupoid> levels;

  int depth() const { return static_cast<int>(levels.size()) - 1; }
};

// Levels of the torsor gerbe induced by a sheaf filtration: level-p
// members at (u, i) are the automorphisms whose twisting family lies
// stalkwise in the sheaf level. Member tables are copied out of f; only g
// must outlive the result.
FilteredGerbe filter_torsor_gerbe(const TorsorGerbe& g,
                                  const FilteredSheafGroup& f);

// Chain shape over the listed opens, the normal-subgroupoid axioms per
// level, and centrality of every consecutive layer.
CheckResult is_central_filtration(const FilteredGerbe& g,
                                  std::span<const Open> opens,
                                  std::span<const Cover> covers);

// One consecutive layer N_p/N_{p+1} of a filtered gerbe as an abelian
// sheaf on the whole space. The stalk at x is the coset group of the
// levels inside the automorphisms of a fixed local object at x; sections
// translate to and from automorphism cosets at any (open, object) pair by
// restriction and transport, which centrality makes choice-independent.
// Construction throws when the prestack has no objects or is locally
// disconnected at some minimal open, or when centrality fails at a stalk.
class LayerBand {
 public:
  LayerBand(const FilteredGerbe& g, int p);

  int level() const { return p_; }
  const SheafOfGroups& sheaf() const { return *sheaf_; }
  std::shared_ptr<const SheafOfGroups> sheaf_ptr() const { return sheaf_; }

  // the section of the layer over u carried by a level-p member of
  // hom(u, i, i); throws when mor is not a level-p member
  std::vector<Elt> class_family(Open u, int i, int mor) const;
  // smallest level-p member of hom(u, i, i) with the given class family,
  // -1 when the family has no section lift
  int lift(Open u, int i, std::span<const Elt> fam) const;

 private:
  const PrestackGroupoid* amb_ = nullptr;
  std::vector<NormalSubgroupoid> levels_;
  int p_ = 0;
  std::shared_ptr<const SheafOfGroups> sheaf_;
  std::vector<std::vector<int>> cls_;  // per point: mor id -> label, -1 out
  std::vector<std::vector<int>> rep_;  // per point: label -> mor id
};

// The central extension of gerbes
//   1 -> N_p/N_{p+1} -> G/N_{p+1} -> G/N_p -> 1
// realized on stackified quotients: the total is the quotient by level
// p+1, the base its further quotient by the image of level p, the band
// that image as a sheaf (construction fails loudly when it is not
// central). The result keeps the intermediate quotient alive; the ambient
// prestack and the level callbacks must outlive it.
CentralExtensionOfGerbes layer_extension(const FilteredGerbe& g, int p);

// Gerbe acyclicity of the open u: objects exist over u, degree 1 and 2
// cohomology of every layer vanishes on the minimal open cover of u, and
// at every object over u the level-p automorphism sections surject onto
// their level-q quotients for all q > p.
CheckResult acyclic_open(const FilteredGerbe& g, Open u);

// Outcome of the level-by-level connection of two objects over a cover.
// Connected carries a glued morphism verified to restrict to the local
// family. LayerObstructed reports the first level whose comparison
// 1-cocycle is not a coboundary on the cover, with the cocycle as witness
// (layer keeps its sheaf alive); the reason says whether the class
// survives refinement to the minimal cover. NoLocalMorphism names a part
// where the restrictions admit no morphism at all.
struct ConnectResult {
  enum class Status { Connected, NoLocalMorphism, LayerObstructed };
  Status status = Status::Connected;
  int mor = -1;
  int layer = -1;
  std::optional<Cochain> witness;
  std::shared_ptr<const SheafOfGroups> layer_sheaf;
  std::string reason;

  explicit operator bool() const { return status == Status::Connected; }
};

// Morphism i -> j over c.target glued from local morphisms over the
// parts: local choices are corrected level by level, solving one layer
// 1-cocycle per level, until they agree exactly on overlaps, then glued.
// Success is verified against the final local family. Throws when a
// solved correction has no section lift over some part after twisting
// (the parts are not acyclic for the filtration), or when exact local
// data fails to glue (the prestack is not a stack).
ConnectResult connect(const FilteredGerbe& g, const Cover& c, int i, int j);

// Outcome of gluing an object from local pieces. Glued carries the object
// and, per part, an isomorphism from the object's restriction to the
// chosen local object, verified to intertwine the final transitions.
// LayerObstructed reports the first level whose associativity 2-cocycle
// is not a coboundary on the cover (witness as in ConnectResult); it also
// arises from connecting transitions over an overlap, with the overlap
// named in the reason. NotLocallyNonempty names a part with no objects.
struct GlueResult {
  enum class Status { Glued, NotLocallyNonempty, LayerObstructed };
  Status status = Status::Glued;
  int object = -1;
  std::vector<int> part_isos;
  int layer = -1;
  std::optional<Cochain> witness;
  std::shared_ptr<const SheafOfGroups> layer_sheaf;
  std::string reason;

  explicit operator bool() const { return status == Status::Glued; }
};

// Object over c.target glued from arbitrary local objects over the parts:
// transition isomorphisms are found over pairwise overlaps (through
// connect when no direct one exists), corrected level by level, solving
// one layer 2-cocycle per level, until they satisfy the exact cocycle
// condition, and the resulting descent datum is realized by a global
// object. Throws as connect does, and when the exact datum is realized by
// no global object.
GlueResult glue_object(const FilteredGerbe& g, const Cover& c);

}  // namespace gerbex
