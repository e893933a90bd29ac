#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gerbex/cech.hpp"
#include "gerbex/gerbe.hpp"
#include "gerbex/sheaf.hpp"
#include "gerbex/space.hpp"

namespace gerbex {

// Lifting problems along a central extension of gerbes 1 -> N -> G -> H -> 1
// over the whole space, and the degree-1 and degree-2 classes in band
// cohomology that decide them. Classes are independent of every choice made
// in their construction; representatives are not. Inadequate cover families
// and undefined degree-2 classes are values, not errors.

// Lift a base isomorphism: i, j objects of the total prestack over the whole
// space, h a morphism F(i) -> F(j) in the base over the whole space. The
// class is computed per isomorphism h and nothing is cached on (i, j) alone;
// distinct_classes_for_parallel_isos searches for h-dependence.
struct LiftProblem1 {
  const CentralExtensionOfGerbes* ext = nullptr;
  int i = -1;
  int j = -1;
  int h = -1;
};

// Lift a base object: j an object of the base prestack over the whole space.
struct LiftProblem2 {
  const CentralExtensionOfGerbes* ext = nullptr;
  int j = -1;
};

// Randomizes the marked choice points; unmarked points take the first valid
// candidate in enumeration order, so the default policy is deterministic.
// Every policy yields a representative of the same class.
struct ChoicePolicy {
  std::uint64_t seed = 0;
  bool objects = false;  // local objects i_k
  bool isos = false;     // local base isomorphisms h_k
  bool lifts = false;    // local lifts g_k and g_{k0,k1}
};

// Degree-1 class of {g_{k1}^{-1} o g_{k0}} for local lifts g_k of h, read
// through the band identification. found = false means no cover in the
// family admits local lifts everywhere: an inadequate family, not a verdict
// on liftability. Covers are tried sorted by part count, then by parts
// lexicographically; the first success wins.
struct Class1Result {
  bool found = false;
  std::string reason;
  std::optional<Cochain> rep;  // degree 1 over the band sheaf
  Cover cover;                 // the cover carrying rep
};
Class1Result obstruction_class1(const LiftProblem1& p,
                                std::span<const Cover> covers,
                                const ChoicePolicy& pol = {});

// Degree-2 class of {g_{k0,k2}^{-1} o g_{k1,k2} o g_{k0,k1}} for choices of
// local objects i_k, isomorphisms h_k: F(i_k) -> j, and lifts g_{k0,k1} of
// h_{k1}^{-1} o h_{k0}. Undefined when no cover in the family admits all
// choices; failed_step records which choice failed ("object" or "lift") on
// the last cover tried, held in cover.
struct Class2Result {
  bool defined = false;
  std::string reason;
  std::string failed_step;
  std::optional<Cochain> rep;  // degree 2 over the band sheaf
  Cover cover;
};
Class2Result obstruction_class2(const LiftProblem2& p,
                                std::span<const Cover> covers,
                                const ChoicePolicy& pol = {});

// Constructive lifting of an isomorphism. Trivial class: local lifts are
// corrected by a trivializing 0-cochain on the minimal open cover and glued
// to g with F(g) = h. Nontrivial class: the minimal-cover representative is
// the certificate. A corrected family that fails to glue means the total
// prestack violates descent and throws.
struct IsoLift {
  enum class Status { Lifted, Obstructed, NoCover };
  Status status = Status::NoCover;
  int g = -1;                  // morphism in total hom over X with F(g) = h
  std::optional<Cochain> cls;  // nontrivial class when Obstructed
  std::string reason;
};
IsoLift lift_isomorphism(const LiftProblem1& p, std::span<const Cover> covers);

// Constructive lifting of an object. Trivial class: transition lifts are
// corrected by a trivializing 1-cochain into a descent datum, the datum is
// glued to a global object i, and the comparisons F(g'_k) o h_k^{-1} glue to
// e: j -> F(i). The contract is isomorphism-level: F(i) is isomorphic to j
// via e, not equal to it.
struct ObjectLift {
  enum class Status { Lifted, Obstructed, Undefined };
  Status status = Status::Undefined;
  int i = -1;                  // object of the total prestack over X
  int e = -1;                  // morphism in base hom(X, j, F(i))
  std::optional<Cochain> cls;
  std::string reason;
};
ObjectLift lift_object(const LiftProblem2& p, std::span<const Cover> covers);

// Isomorphic global base objects have equal degree-2 classes. The
// isomorphism certifies the hypothesis: pass a base morphism id j -> j', or
// -1 to search for one.
CheckResult isomorphic_objects_same_class(const LiftProblem2& p,
                                          const LiftProblem2& q,
                                          std::span<const Cover> covers,
                                          int iso = -1);

// A strict morphism of central extensions: d on totals and e on bases with
// proj' o d = e o proj, d carrying the band of the source into the band of
// the target.
struct ExtensionSquare {
  const CentralExtensionOfGerbes* upstairs = nullptr;
  const CentralExtensionOfGerbes* downstairs = nullptr;
  GerbeMorphism d;  // total -> total
  GerbeMorphism e;  // base -> base
};
CheckResult is_extension_square(const ExtensionSquare& s,
                                std::span<const Open> opens);

// The band map induced by d, read through the two band identifications;
// throws when d does not carry band members to band members.
SheafHom induced_band_map(const ExtensionSquare& s);

// Pushing the upstairs class through the induced band map agrees with the
// class computed downstairs on the image problem. p poses the upstairs
// problem; its image under (d, e) poses the downstairs one.
CheckResult pushforward_matches_class1(const ExtensionSquare& s,
                                       const LiftProblem1& p,
                                       std::span<const Cover> covers);
CheckResult pushforward_matches_class2(const ExtensionSquare& s,
                                       const LiftProblem2& p,
                                       std::span<const Cover> covers);

// Degree-1 band cohomology of u vanishes, decided on the minimal open cover
// of u.
bool band_acyclic(const CentralExtensionOfGerbes& ext, Open u);

// Over a band-acyclic open every base isomorphism between projected objects
// lifts: hom surjectivity for all object pairs, checked exhaustively. When u
// is not band-acyclic the assertion is vacuous: ok with reason "skipped ...".
CheckResult acyclic_surjectivity(const CentralExtensionOfGerbes& ext, Open u);

// Every finite intersection of parts of every cover in the family is
// band-acyclic, and then the degree-2 class is defined for every global base
// object on this family.
CheckResult classes_defined_on_acyclic_family(
    const CentralExtensionOfGerbes& ext, std::span<const Cover> covers);

// Scans object pairs (i, j) of the total prestack for two parallel base
// isomorphisms h0, h1: F(i) -> F(j) with different degree-1 classes. Whether
// such a pair can exist is open; this only searches. complete reports
// whether the scan finished within max_classes class computations.
struct ParallelIsoSearch {
  bool found = false;
  int i = -1, j = -1, h0 = -1, h1 = -1;
  long long checked = 0;
  bool complete = false;
};
ParallelIsoSearch distinct_classes_for_parallel_isos(
    const CentralExtensionOfGerbes& ext, std::span<const Cover> covers,
    long long max_classes = 100000);

}  // namespace gerbex
