#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "gerbex/cech.hpp"
#include "gerbex/sheaf.hpp"
#include "gerbex/space.hpp"

namespace gerbex {

// A strict prestack of groupoids on the open lattice of a finite space.
// Objects and morphisms over each open are canonically indexed from 0;
// hom(u, i, j) is the ordered set of isomorphisms i -> j over u. Restriction
// along v subset u is strictly functorial. The empty open carries exactly one
// object and one morphism. Implementations are deterministic and memoize
// internally; all queries are const.
class PrestackGroupoid {
 public:
  virtual ~PrestackGroupoid() = default;

  virtual const FiniteSpace& space() const = 0;
  virtual int n_objects(Open u) const = 0;
  virtual int n_homs(Open u, int i, int j) const = 0;
  // g after f: f in hom(u, i, j), g in hom(u, j, k), result in hom(u, i, k)
  virtual int compose(Open u, int i, int j, int k, int f, int g) const = 0;
  virtual int identity(Open u, int i) const = 0;
  virtual int inverse(Open u, int i, int j, int f) const = 0;
  virtual int restrict_obj(Open u, int i, Open v) const = 0;
  virtual int restrict_mor(Open u, int i, int j, int f, Open v) const = 0;
};

// Groupoid and strictness axioms over the listed opens (restriction
// functoriality over comparable pairs from the list).
CheckResult validate_prestack(const PrestackGroupoid& p,
                              std::span<const Open> opens);

// Conjugation hom(u, i, i) -> hom(u, j, j) along g in hom(u, i, j).
std::vector<int> ad(const PrestackGroupoid& p, Open u, int i, int j, int g);

// hom(u, i, i) as a group; element indices are the morphism ids, and
// mul(a, b) is the composite a after b.
FiniteGroup automorphism_group(const PrestackGroupoid& p, Open u, int i);

// The terminal prestack: one object, one morphism over every open.
class TerminalGerbe : public PrestackGroupoid {
 public:
  explicit TerminalGerbe(const FiniteSpace& sp) : space_(&sp) {}
  const FiniteSpace& space() const override { return *space_; }
  int n_objects(Open) const override { return 1; }
  int n_homs(Open, int, int) const override { return 1; }
  int compose(Open, int, int, int, int, int) const override { return 0; }
  int identity(Open, int) const override { return 0; }
  int inverse(Open, int, int, int) const override { return 0; }
  int restrict_obj(Open, int, Open) const override { return 0; }
  int restrict_mor(Open, int, int, int, Open) const override { return 0; }

 private:
  const FiniteSpace* space_;
};

// A prestack given by literal tables. Morphisms over an open are globally
// indexed with endpoint lists; hom-local indices are positions among the
// morphisms with the same endpoints, in global order. Restriction tables
// must be supplied for every comparable pair of listed opens.
class ExplicitPrestack : public PrestackGroupoid {
 public:
  struct GroupoidTable {
    int n_obj = 0;
    std::vector<std::pair<int, int>> mor;  // (source, target) per global id
    std::vector<std::vector<int>> comp;    // comp[g][f] = g after f, -1 n/a
  };
  // restr keys (u, v) with v subset u: object map then global morphism map
  ExplicitPrestack(
      const FiniteSpace& sp, std::map<Open, GroupoidTable> tables,
      std::map<std::pair<Open, Open>,
               std::pair<std::vector<int>, std::vector<int>>>
          restr);

  const FiniteSpace& space() const override { return *space_; }
  int n_objects(Open u) const override;
  int n_homs(Open u, int i, int j) const override;
  int compose(Open u, int i, int j, int k, int f, int g) const override;
  int identity(Open u, int i) const override;
  int inverse(Open u, int i, int j, int f) const override;
  int restrict_obj(Open u, int i, Open v) const override;
  int restrict_mor(Open u, int i, int j, int f, Open v) const override;

  // global morphism ids over u with the given endpoints, in order
  const std::vector<int>& hom_list(Open u, int i, int j) const;

 private:
  const GroupoidTable& table(Open u) const;
  const FiniteSpace* space_;
  std::map<Open, GroupoidTable> tables_;
  std::map<std::pair<Open, Open>,
           std::pair<std::vector<int>, std::vector<int>>>
      restr_;
  mutable std::map<std::tuple<Open, int, int>, std::vector<int>> homs_;
};

// The gerbe of torsors of a sheaf of groups: objects over u are the degree-1
// cocycles on the minimal open cover of u, morphisms c -> c' are twisting
// families (one stalk value per point x of u, read as a section over U_x)
// with c'_{x,y} = f_y c_{x,y} f_x^{-1} on overlaps, composed pointwise.
class TorsorGerbe : public PrestackGroupoid {
 public:
  explicit TorsorGerbe(const SheafOfGroups& g);

  const FiniteSpace& space() const override { return g_->space(); }
  const SheafOfGroups& sheaf() const { return *g_; }
  int n_objects(Open u) const override;
  int n_homs(Open u, int i, int j) const override;
  int compose(Open u, int i, int j, int k, int f, int g) const override;
  int identity(Open u, int i) const override;
  int inverse(Open u, int i, int j, int f) const override;
  int restrict_obj(Open u, int i, Open v) const override;
  int restrict_mor(Open u, int i, int j, int f, Open v) const override;

  const Cochain& object_cocycle(Open u, int i) const;
  // twisting family of a morphism, one stalk value per point of u
  const std::vector<Elt>& mor_family(Open u, int i, int j, int f) const;
  int mor_index(Open u, int i, int j, std::span<const Elt> fam) const;
  int object_index(Open u, const Cochain& c) const;  // -1 when absent

 private:
  struct ObjectList {
    std::vector<Cochain> cocycles;
    std::map<std::vector<Elt>, int> index;  // flattened values -> id
  };
  const ObjectList& objects(Open u) const;
  const std::vector<std::vector<Elt>>& homs(Open u, int i, int j) const;
  const SheafOfGroups* g_;
  mutable std::map<Open, ObjectList> objs_;
  mutable std::map<std::tuple<Open, int, int>, std::vector<std::vector<Elt>>>
      homs_;
};

// Strict morphism of prestacks over one space; holds non-owning pointers.
struct GerbeMorphism {
  const PrestackGroupoid* source = nullptr;
  const PrestackGroupoid* target = nullptr;
  std::function<int(Open, int)> on_obj;
  std::function<int(Open, int, int, int)> on_mor;  // (u, i, j, f)
};

// Functoriality and strict restriction-compatibility over the listed opens.
CheckResult is_prestack_morphism(const GerbeMorphism& f,
                                 std::span<const Open> opens);

// Verdict of the stack axioms over a family of covers, with a witness
// describing the first failure: (a) descent for morphisms (each hom
// presheaf is a sheaf on each cover), (b) descent for objects (every
// descent datum glues). Throws when a check exceeds its work cap.
struct StackReport {
  bool ok = true;
  std::string witness;
};
StackReport is_stack(const PrestackGroupoid& p, std::span<const Cover> covers);

// Local nonemptiness and local connectivity at minimal opens; callers are
// expected to have passed is_stack on their cover family first.
bool is_gerbe(const PrestackGroupoid& p);

// Weak epimorphism: locally essentially surjective at minimal opens, and
// surjective on isomorphism sections over each listed open.
bool is_weak_epi(const GerbeMorphism& f, std::span<const Open> opens);

// Weak equivalence certificate: local essential surjectivity at minimal
// opens plus hom bijectivity over each listed open.
bool is_weak_equivalence(const GerbeMorphism& f, std::span<const Open> opens);

// A totally disconnected normal subgroupoid: per open and object, a subgroup
// of the automorphisms, Ad-stable across morphisms.
struct NormalSubgroupoid {
  const PrestackGroupoid* ambient = nullptr;
  std::function<std::vector<int>(Open, int)> members;  // sorted mor ids
};

// Subgroup, Ad-stability and the sheaf condition for the member presheaves,
// over the listed opens and covers.
CheckResult is_normal_subgroupoid(const NormalSubgroupoid& n,
                                  std::span<const Open> opens,
                                  std::span<const Cover> covers);

NormalSubgroupoid kernel(const GerbeMorphism& f);

// Members whose restrictions are central in every automorphism group over
// the minimal opens below; the gerbe-level analogue of the sheaf center.
NormalSubgroupoid center(const PrestackGroupoid& p);

// A central totally disconnected subgroupoid presented as an abelian sheaf:
// the band. chi(u, i) tables identify band sections with the members of
// hom(u, i, i); they satisfy chi_j = Ad(g) o chi_i for every g: i -> j.
// Construction transports members along local isomorphisms and throws when
// n is not central (transport would depend on the identification) or the
// member presheaf is not the band's section sheaf.
class CentralSubgroupoidAsSheaf {
 public:
  CentralSubgroupoidAsSheaf(const PrestackGroupoid& ambient,
                            NormalSubgroupoid n);
  // band and chi already canonical: morphism ids in hom(u, i, i) literally
  // equal band section indices (the two-cocycle gerbe)
  static CentralSubgroupoidAsSheaf identity_band(
      const PrestackGroupoid& ambient,
      std::shared_ptr<const SheafOfGroups> band);

  const PrestackGroupoid& ambient() const { return *ambient_; }
  const SheafOfGroups& band() const { return *band_; }
  std::shared_ptr<const SheafOfGroups> band_ptr() const { return band_; }
  // band section index -> morphism id in hom(u, i, i)
  const std::vector<int>& chi(Open u, int i) const;
  int chi_inv(Open u, int i, int mor) const;  // -1 when not a member

 private:
  CentralSubgroupoidAsSheaf() = default;
  const PrestackGroupoid* ambient_ = nullptr;
  NormalSubgroupoid n_;
  bool identity_chi_ = false;
  std::shared_ptr<const SheafOfGroups> band_;
  mutable std::map<std::pair<Open, int>, std::vector<int>> chi_;
};

// chi condition over the listed opens: Ad(g) carries chi_i to chi_j for
// every isomorphism g over every listed open.
CheckResult chi_condition(const CentralSubgroupoidAsSheaf& c,
                          std::span<const Open> opens);

// 1 -> band -> total -> base -> 1 with proj a weak epimorphism whose kernel
// is the central subgroupoid. Owns its prestacks; proj and the band point
// into them.
struct CentralExtensionOfGerbes {
  std::shared_ptr<const PrestackGroupoid> total;
  std::shared_ptr<const PrestackGroupoid> base;
  GerbeMorphism proj;
  std::shared_ptr<const CentralSubgroupoidAsSheaf> band;
};

TorsorGerbe torsor_gerbe(const SheafOfGroups& g);

// The extension Tors G -> Tors H induced by a central extension of sheaves
// 1 -> N -> G -> H -> 1: objects push forward along proj, morphisms
// pointwise; the kernel band is built by transport and is isomorphic to N.
CentralExtensionOfGerbes extension_of_torsor_gerbes(const SheafHom& incl,
                                                    const SheafHom& proj);

// The abelian gerbe of a degree-2 cocycle c on a cover of the whole space:
// objects over u are the cover parts containing u, homs are band sections,
// and composition is twisted by c (normalized first; the twist is hidden in
// triple overlaps). The base is the terminal gerbe, the kernel is the band.
// Charts only: a descent datum over the cover glues in the associated stack
// iff the class of c is trivial.
class TwoCocycleGerbe : public PrestackGroupoid {
 public:
  TwoCocycleGerbe(std::shared_ptr<const SheafOfGroups> band, Cover cover,
                  Cochain normalized);

  const FiniteSpace& space() const override { return band_->space(); }
  const SheafOfGroups& band() const { return *band_; }
  const Cover& cover() const { return cover_; }
  const Cochain& cocycle() const { return c_; }
  int part_of(Open u, int i) const;  // the cover part an object charts

  int n_objects(Open u) const override;
  int n_homs(Open u, int i, int j) const override;
  int compose(Open u, int i, int j, int k, int f, int g) const override;
  int identity(Open u, int i) const override;
  int inverse(Open u, int i, int j, int f) const override;
  int restrict_obj(Open u, int i, Open v) const override;
  int restrict_mor(Open u, int i, int j, int f, Open v) const override;

 private:
  const std::vector<int>& charts(Open u) const;
  std::shared_ptr<const SheafOfGroups> band_;
  Cover cover_;
  Cochain c_;
  mutable std::map<Open, std::vector<int>> charts_;
};

// Cohomologous normalized representative: identity on every tuple with a
// repeated adjacent index.
Cochain normalize_cocycle2(const Cochain& c);

// pre: c an abelian degree-2 cocycle on a cover of the whole space.
CentralExtensionOfGerbes gerbe_from_2cocycle(const Cochain& c);

// The quotient of a gerbe by a normal subgroupoid: morphisms are sheafified
// classes (families of local classes over minimal opens), objects over u are
// the descent data over the minimal open cover of u. Every datum is kept as
// an object so that restriction stays strictly functorial; equivalent data
// are isomorphic inside the quotient rather than collapsed. Returns the
// quotient and the projection morphism, a weak epimorphism with kernel n.
struct QuotientGerbeResult {
  std::shared_ptr<const PrestackGroupoid> quotient;
  GerbeMorphism proj;
};
QuotientGerbeResult quotient_gerbe(const PrestackGroupoid& p,
                                   const NormalSubgroupoid& n);

// The central extension total -> total/n with band n; throws when n is not
// central. The returned extension owns the quotient and keeps total alive.
CentralExtensionOfGerbes central_quotient_extension(
    std::shared_ptr<const PrestackGroupoid> total, NormalSubgroupoid n);

// Both one-sided compositions act simply transitively on every nonempty
// hom set over u (the bitorsor structure of hom sheaves in a gerbe).
CheckResult bitorsor_check(const PrestackGroupoid& p, Open u);

}  // namespace gerbex
