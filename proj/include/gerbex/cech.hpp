#pragma once

#include <optional>
#include <span>
#include <vector>

#include "gerbex/sheaf.hpp"
#include "gerbex/space.hpp"

namespace gerbex {

// A degree-p cochain on an ordered cover, valued in sections of a sheaf.
// Every (p+1)-tuple of part indices carries a value, repeats included; the
// value over a tuple is a section over that tuple's face (the empty family
// when the face is empty). Tuples are encoded in mixed radix, k0 least
// significant.
struct Cochain {
  const SheafOfGroups* sheaf = nullptr;
  Cover cover;
  int degree = 0;
  std::vector<std::vector<Elt>> vals;

  static Cochain identity(const SheafOfGroups& f, const Cover& c, int degree);

  int parts() const { return cover.size(); }
  long long tuple_count() const;
  long long encode(std::span<const int> t) const;
  std::vector<int> decode(long long idx) const;
  Open face(std::span<const int> t) const { return nerve_face(cover, t); }
  const std::vector<Elt>& at(std::span<const int> t) const;
  void set(std::span<const int> t, std::vector<Elt> v);
  bool same_shape(const Cochain& o) const;
};

// (db)_{k0,k1} = b_{k1}^{-1} b_{k0}; a 0-cochain trivializes a 1-cocycle g
// when g = db.
Cochain coboundary0(const Cochain& b);
// (db)_{k0,k1,k2} = b_{k0,k2}^{-1} b_{k0,k1} b_{k1,k2}.
Cochain coboundary1(const Cochain& b);
// Alternating-sign coboundary in any degree; abelian sheaves only.
Cochain coboundary_abelian(const Cochain& b);

CheckResult is_cochain(const Cochain& c);
// degree 0: values agree on overlaps; degree 1: g_{k1,k2} g_{k0,k1} =
// g_{k0,k2} on triple faces (no commutativity needed); degree 2 (abelian):
// the alternating coboundary vanishes.
CheckResult is_cocycle(const Cochain& c);

Cochain cochain_mul(const Cochain& a, const Cochain& b);  // pointwise
Cochain cochain_inv(const Cochain& a);
Cochain apply_hom(const SheafHom& f, const Cochain& c);

// Pullback along a refinement of c's cover: the value at a fine tuple is the
// value at its image coarse tuple, restricted to the fine face.
Cochain refine_cochain(const Cochain& c, const Refinement& r);
// Pullback to the minimal open cover of the target, which refines every
// cover; class questions are decided there.
Cochain refine_to_minimal(const Cochain& c);

// b with db = c, on c's own cover. Degree 1 searches section families
// directly (nonabelian allowed); degree 2 requires an abelian sheaf and goes
// through integer normal forms. nullopt is exact: no solution exists.
std::optional<Cochain> solve_coboundary(const Cochain& c);

// Class triviality / equality after refinement to the minimal open cover.
// Degree 1 compares up to twist g'_{k0,k1} = f_{k1}^{-1} g_{k0,k1} f_{k0};
// degree 2 requires an abelian sheaf and compares differences against
// coboundaries.
bool class_is_trivial(const Cochain& c);
bool classes_equal(const Cochain& a, const Cochain& b);

struct CohomologyGroup {
  std::vector<long long> invariants;  // d1 | d2 | ..., each > 1
  long long order() const;
  bool trivial() const { return invariants.empty(); }
  bool operator==(const CohomologyGroup& o) const {
    return invariants == o.invariants;
  }
};

// Degree 0..2 cohomology of an abelian sheaf on a cover, via the alternating
// complex and integer normal forms.
CohomologyGroup cohomology_group(const SheafOfGroups& f, const Cover& c,
                                 int degree);
// Same by literal enumeration of cocycles and coboundaries (independent
// slow path; throws when the complex is too large to enumerate).
CohomologyGroup cohomology_group_enumerated(const SheafOfGroups& f,
                                            const Cover& c, int degree);

// All 1-cocycles on the cover, lexicographically ordered by their values on
// increasing pairs. Throws when the search exceeds its work cap.
std::vector<Cochain> enumerate_cocycles1(const SheafOfGroups& f,
                                         const Cover& c);
// Orbit index per cocycle under twisting by families (f_k), f_k a section
// over part k. Orbits are numbered in order of first appearance.
std::vector<int> twist_orbits(const std::vector<Cochain>& cocycles);

// The six-term exact sequence of a central extension of sheaves
// 1 -> N -> G -> H -> 1 on the whole space, checked by enumeration on the
// minimal open cover:
//   1 -> N(X) -> G(X) -> H(X) -> H^1(X,N) -> H^1(X,G) -> H^1(X,H) -> H^2(X,N)
struct SixTermReport {
  long long n_global = 0, g_global = 0, h_global = 0;  // section counts
  int h1_n = 0, h1_g = 0, h1_h = 0;                    // class counts
  bool exact_at_g0 = false;   // ker(proj_*) = im(incl_*) in G(X)
  bool exact_at_h0 = false;   // ker(delta0) = im(proj_*) in H(X)
  bool exact_at_h1n = false;  // ker(incl_*) = im(delta0)
  bool exact_at_h1g = false;  // ker(proj_*) = im(incl_*)
  bool exact_at_h1h = false;  // ker(delta1) = im(proj_*)
  bool connecting_defined = true;  // delta1 had a liftable representative
                                   // for every class
  std::string note;

  bool ok() const {
    return exact_at_g0 && exact_at_h0 && exact_at_h1n && exact_at_h1g &&
           exact_at_h1h && connecting_defined;
  }
};
SixTermReport six_term_exactness(const SheafHom& incl, const SheafHom& proj);

}  // namespace gerbex
