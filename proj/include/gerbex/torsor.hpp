#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gerbex/cech.hpp"
#include "gerbex/sheaf.hpp"

namespace gerbex {

// A left torsor over a sheaf of groups, materialized pointwise: one carrier
// set per point, a simply transitive stalk action, and comparison maps along
// the specialization order, equivariant over the group's comparisons.
// Sections over an open are the comparison-compatible families. Carriers are
// nonempty, so minimal opens always have sections; larger opens may have
// none, and which ones do is exactly the twist the torsor carries.
class Torsor {
 public:
  // action[p][g][s]: the stalk group at p acting on carrier indices.
  // comps[{x, y}] (for x <= y) maps carrier(x) -> carrier(y); functoriality
  // and equivariance are checked. Pairs with x == y may be omitted.
  Torsor(const SheafOfGroups& group, std::vector<int> carrier_sizes,
         std::vector<std::vector<std::vector<int>>> action,
         const std::map<std::pair<int, int>, std::vector<int>>& comps);

  // the group acting on itself by left multiplication
  static Torsor trivial(const SheafOfGroups& g);

  const SheafOfGroups& group() const { return *group_; }
  const FiniteSpace& space() const { return group_->space(); }
  int carrier_size(int p) const { return sizes_[p]; }
  int act(int p, Elt g, int s) const { return act_[p][g][s]; }
  int comp(int x, int y, int s) const;  // requires x <= y

  bool is_section(Open u, std::span<const int> fam) const;
  std::vector<int> restrict_fam(Open u, std::span<const int> s, Open v) const;
  std::vector<int> act_fam(Open u, std::span<const Elt> g,
                           std::span<const int> s) const;
  // the unique group section carrying section s to section t over u
  std::vector<Elt> transporter(Open u, std::span<const int> s,
                               std::span<const int> t) const;
  // section over u from its values on the minimal points of u; nullopt when
  // the propagated values clash
  std::optional<std::vector<int>> extend_from_minimal(
      Open u, std::span<const int> minimal_values) const;

  // all sections over u, lexicographically sorted; cached
  const std::vector<std::vector<int>>& sections(Open u) const;

 private:
  const SheafOfGroups* group_;
  std::vector<int> sizes_;
  std::vector<std::vector<std::vector<int>>> act_;
  std::vector<std::vector<int>> comp_;  // [x * n + y], empty when !leq(x, y)
  mutable std::map<Open, std::vector<std::vector<int>>> cache_;
};

// Glues the trivial torsors over the parts of c's cover along a degree-1
// cocycle c; the cover must cover the whole space. The classifying class of
// the result is the class of c.
Torsor torsor_from_cocycle(const Cochain& c);

// Transition cocycle of the first sections over the minimal open cover:
// s_{k1} = h_{k0,k1} . s_{k0} on overlaps. Another choice of sections twists
// the result, so the class is well defined. The cochain borrows the torsor's
// acting sheaf.
Cochain classify(const Torsor& t);

// Contracted product along f: carriers dst(x) x_src carrier(x). Classifying
// classes push forward: classify(induce(f, t)) ~ f(classify(t)).
Torsor induce(const SheafHom& f, const Torsor& t);

// Equivariant comparison-compatible bijection between torsors over one
// sheaf, returned as the per-point images of a's base elements
// (lexicographically first witness), nullopt when none exists. The search is
// exhaustive; stalks of order > 16 exceed its cap.
std::optional<std::vector<int>> torsor_isomorphism(const Torsor& a,
                                                   const Torsor& b);

// Outcome of the degree-2 connecting map on a torsor class. Failure of the
// cover to trivialize the torsor or to lift its transitions is a domain
// outcome, reported as a value; structural misuse throws.
struct ConnectingClass {
  std::optional<Cochain> cls;
  std::string no_liftable_cover;  // nonempty exactly when cls is empty
  bool defined() const { return cls.has_value(); }
};

// For a central extension 1 -> N -> G -> H -> 1 and a torsor t over H: lift
// the transitions h_{k0,k1} of t through proj to g_{k0,k1}, and measure
// n_{k0,k1,k2} = g_{k0,k2}^{-1} g_{k1,k2} g_{k0,k1} pulled back through
// incl. The class is trivial exactly when t is induced from a G-torsor. The
// result borrows incl's source sheaf. The cover-free overload uses the
// minimal open cover.
ConnectingClass connecting_class(const SheafHom& incl, const SheafHom& proj,
                                 const Torsor& t, const Cover& cover);
ConnectingClass connecting_class(const SheafHom& incl, const SheafHom& proj,
                                 const Torsor& t);

}  // namespace gerbex
