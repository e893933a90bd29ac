#include <algorithm>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "gerbex/obstruction.hpp"

using namespace gerbex;

namespace {

SheafHom constant_hom(const SheafOfGroups& a, const SheafOfGroups& b,
                      const std::vector<Elt>& table) {
  std::vector<std::vector<Elt>> maps(a.space().size(), table);
  return SheafHom(a, b, std::move(maps));
}

// 1 -> Z/m -> Z/mn -> Z/n -> 1 as constant sheaves, then as torsor gerbes.
// Owns the sheaves: the extension keeps raw pointers into them.
struct CyclicExt {
  std::unique_ptr<SheafOfGroups> sub, mid, quo;
  CentralExtensionOfGerbes ext;
};

CyclicExt cyclic_ext(const FiniteSpace& sp, int m, int n) {
  CyclicExt o;
  o.sub = std::make_unique<SheafOfGroups>(
      SheafOfGroups::constant(sp, FiniteGroup::cyclic(m)));
  o.mid = std::make_unique<SheafOfGroups>(
      SheafOfGroups::constant(sp, FiniteGroup::cyclic(m * n)));
  o.quo = std::make_unique<SheafOfGroups>(
      SheafOfGroups::constant(sp, FiniteGroup::cyclic(n)));
  std::vector<Elt> up(m), down(m * n);
  for (int k = 0; k < m; ++k) up[k] = static_cast<Elt>(k * n);
  for (int k = 0; k < m * n; ++k) down[k] = static_cast<Elt>(k % n);
  o.ext = extension_of_torsor_gerbes(constant_hom(*o.sub, *o.mid, up),
                                     constant_hom(*o.mid, *o.quo, down));
  return o;
}

// oracle: some global morphism i -> j in the total prestack projects to h
bool lifts_exist(const CentralExtensionOfGerbes& e, int i, int j, int h) {
  Open x = e.total->space().points_mask();
  int n = e.total->n_homs(x, i, j);
  for (int g = 0; g < n; ++g)
    if (e.proj.on_mor(x, i, j, g) == h) return true;
  return false;
}

// the morphism Tors G -> Tors H pushing cocycles and twisting families
// pointwise along a sheaf homomorphism
GerbeMorphism torsor_push(const PrestackGroupoid& src,
                          const PrestackGroupoid& dst, const SheafHom& f) {
  const auto* s = dynamic_cast<const TorsorGerbe*>(&src);
  const auto* t = dynamic_cast<const TorsorGerbe*>(&dst);
  REQUIRE(s != nullptr);
  REQUIRE(t != nullptr);
  GerbeMorphism m;
  m.source = &src;
  m.target = &dst;
  m.on_obj = [s, t, f](Open u, int i) {
    return t->object_index(u, apply_hom(f, s->object_cocycle(u, i)));
  };
  m.on_mor = [s, t, f](Open u, int i, int j, int g) {
    const std::vector<Elt>& fam = s->mor_family(u, i, j, g);
    std::vector<int> pts = s->space().points_of(u);
    std::vector<Elt> out(fam.size());
    for (std::size_t a = 0; a < fam.size(); ++a) out[a] = f.at(pts[a], fam[a]);
    int oi = t->object_index(u, apply_hom(f, s->object_cocycle(u, i)));
    int oj = t->object_index(u, apply_hom(f, s->object_cocycle(u, j)));
    return t->mor_index(u, oi, oj, out);
  };
  return m;
}

Cover whole_cover(const FiniteSpace& sp) {
  return minimal_open_cover(sp, sp.points_mask());
}

std::vector<Cover> mc_family(const FiniteSpace& sp) {
  return {whole_cover(sp)};
}

// first enumerated degree-1 cocycle in a nontrivial class
Cochain nontrivial_cocycle1(const SheafOfGroups& f) {
  std::vector<Cochain> zs = enumerate_cocycles1(f, whole_cover(f.space()));
  for (const Cochain& z : zs)
    if (!class_is_trivial(z)) return z;
  REQUIRE(false);
  return zs.front();
}

// an unsolvable degree-2 cocycle on the tetrahedron boundary: the pullback
// of the generator along the weak equivalence to the two-sphere
Cochain sphere_cocycle(const SheafOfGroups& f) {
  Cochain z = Cochain::identity(f, whole_cover(f.space()), 2);
  int support[8][3] = {{0, 1, 2}, {0, 1, 5}, {0, 1, 7}, {0, 1, 10},
                       {0, 2, 4}, {0, 4, 5}, {0, 4, 7}, {0, 4, 10}};
  for (auto& t : support) {
    int p[3] = {t[0], t[1], t[2]};
    std::sort(p, p + 3);
    do {
      z.set(std::vector<int>{p[0], p[1], p[2]}, std::vector<Elt>{1});
    } while (std::next_permutation(p, p + 3));
  }
  return z;
}

}  // namespace

TEST_SUITE("obstruction") {

TEST_CASE("projected isomorphisms pull back with trivial classes") {
  FiniteSpace pc = fixtures::pseudocircle();
  CyclicExt w = cyclic_ext(pc, 2, 2);
  Open x = pc.points_mask();
  std::vector<Cover> fam = mc_family(pc);

  // automorphisms of the trivial torsor are the global sections
  int ng = w.ext.total->n_homs(x, 0, 0);
  REQUIRE(ng == 4);
  for (int g = 0; g < ng; ++g) {
    int h = w.ext.proj.on_mor(x, 0, 0, g);
    LiftProblem1 p{&w.ext, 0, 0, h};
    Class1Result r = obstruction_class1(p, fam);
    REQUIRE(r.found);
    CHECK(class_is_trivial(*r.rep));
    CHECK(is_cocycle(*r.rep).ok);
    CHECK(r.cover.parts.size() == 4);

    IsoLift l = lift_isomorphism(p, fam);
    REQUIRE(l.status == IsoLift::Status::Lifted);
    CHECK(w.ext.proj.on_mor(x, 0, 0, l.g) == h);
  }
}

TEST_CASE("an exhaustive scan over the circle matches brute force") {
  FiniteSpace pc = fixtures::pseudocircle();
  CyclicExt w = cyclic_ext(pc, 2, 2);
  Open x = pc.points_mask();
  std::vector<Cover> fam = mc_family(pc);
  const PrestackGroupoid& tot = *w.ext.total;
  const PrestackGroupoid& bas = *w.ext.base;

  int nobj = tot.n_objects(x);
  REQUIRE(nobj == 256);
  int f0 = w.ext.proj.on_obj(x, 0);

  std::optional<LiftProblem1> obstructed;
  int lifted_cases = 0, obstructed_cases = 0, empty_cases = 0;
  for (int j = 0; j < nobj; ++j) {
    int fj = w.ext.proj.on_obj(x, j);
    int nh = bas.n_homs(x, f0, fj);
    if (nh == 0) {
      // morphisms push forward, so the total homs are empty too
      CHECK(tot.n_homs(x, 0, j) == 0);
      ++empty_cases;
      continue;
    }
    for (int h = 0; h < nh; ++h) {
      LiftProblem1 p{&w.ext, 0, j, h};
      bool oracle = lifts_exist(w.ext, 0, j, h);
      Class1Result r = obstruction_class1(p, fam);
      REQUIRE(r.found);
      CHECK(class_is_trivial(*r.rep) == oracle);

      IsoLift l = lift_isomorphism(p, fam);
      if (oracle) {
        REQUIRE(l.status == IsoLift::Status::Lifted);
        CHECK(w.ext.proj.on_mor(x, 0, j, l.g) == h);
        ++lifted_cases;
      } else {
        REQUIRE(l.status == IsoLift::Status::Obstructed);
        REQUIRE(l.cls.has_value());
        CHECK(!class_is_trivial(*l.cls));
        if (!obstructed) obstructed = p;
        ++obstructed_cases;
      }
    }
  }
  // twisting orbits on the circle all have 64 objects, one per class mod 4;
  // only the even classes land near the trivial base object
  CHECK(lifted_cases == 128);
  CHECK(obstructed_cases == 128);
  CHECK(empty_cases == 128);
  REQUIRE(obstructed.has_value());

  // the obstruction is the one nontrivial degree-1 band class
  Class1Result r = obstruction_class1(*obstructed, fam);
  Cochain want = nontrivial_cocycle1(w.ext.band->band());
  CHECK(classes_equal(*r.rep, want));
}

TEST_CASE("degree-1 representatives move but the class stays") {
  FiniteSpace pc = fixtures::pseudocircle();
  CyclicExt w = cyclic_ext(pc, 2, 2);
  Open x = pc.points_mask();
  std::vector<Cover> fam = mc_family(pc);
  const PrestackGroupoid& tot = *w.ext.total;
  const PrestackGroupoid& bas = *w.ext.base;
  int f0 = w.ext.proj.on_obj(x, 0);

  int jobs = -1;
  for (int j = 0; j < tot.n_objects(x) && jobs < 0; ++j)
    if (bas.n_homs(x, f0, w.ext.proj.on_obj(x, j)) > 0 &&
        tot.n_homs(x, 0, j) == 0)
      jobs = j;
  REQUIRE(jobs >= 0);

  for (LiftProblem1 p : {LiftProblem1{&w.ext, 0, 0, 0},
                         LiftProblem1{&w.ext, 0, jobs, 0}}) {
    Class1Result det = obstruction_class1(p, fam);
    REQUIRE(det.found);
    for (std::uint64_t s = 1; s <= 10; ++s) {
      ChoicePolicy pol;
      pol.seed = s;
      pol.lifts = true;
      Class1Result r = obstruction_class1(p, fam, pol);
      REQUIRE(r.found);
      CHECK(classes_equal(*r.rep, *det.rep));
    }
    std::vector<Cover> two{Cover{x, {7, 11}}};
    std::vector<Cover> shuffled{Cover{x, {11, 7, 2, 1}}};
    Class1Result r2 = obstruction_class1(p, two);
    Class1Result r3 = obstruction_class1(p, shuffled);
    REQUIRE(r2.found);
    REQUIRE(r3.found);
    CHECK(classes_equal(*r2.rep, *det.rep));
    CHECK(classes_equal(*r3.rep, *det.rep));
  }

  // families are tried sorted by part count: the two-part cover wins
  std::vector<Cover> mixed{whole_cover(pc), Cover{x, {7, 11}}};
  Class1Result rm = obstruction_class1({&w.ext, 0, 0, 0}, mixed);
  REQUIRE(rm.found);
  CHECK(rm.cover.parts.size() == 2);
}

TEST_CASE("sampled lifting problems agree with brute force") {
  FiniteSpace pc = fixtures::pseudocircle();
  CyclicExt w = cyclic_ext(pc, 2, 2);
  Open x = pc.points_mask();
  std::vector<Cover> fam = mc_family(pc);
  const PrestackGroupoid& tot = *w.ext.total;
  const PrestackGroupoid& bas = *w.ext.base;
  int nobj = tot.n_objects(x);

  std::mt19937_64 rng(20260819);
  for (int trial = 0; trial < 40; ++trial) {
    int i = static_cast<int>(rng() % nobj);
    int j = static_cast<int>(rng() % nobj);
    int fi = w.ext.proj.on_obj(x, i);
    int fj = w.ext.proj.on_obj(x, j);
    int nh = bas.n_homs(x, fi, fj);
    if (nh == 0) {
      CHECK(tot.n_homs(x, i, j) == 0);
      continue;
    }
    for (int h = 0; h < nh; ++h) {
      LiftProblem1 p{&w.ext, i, j, h};
      bool oracle = lifts_exist(w.ext, i, j, h);
      Class1Result r = obstruction_class1(p, fam);
      REQUIRE(r.found);
      CHECK(class_is_trivial(*r.rep) == oracle);
      IsoLift l = lift_isomorphism(p, fam);
      CHECK((l.status == IsoLift::Status::Lifted) == oracle);
      if (l.status == IsoLift::Status::Lifted)
        CHECK(w.ext.proj.on_mor(x, i, j, l.g) == h);
    }
  }
}

TEST_CASE("a splitting section makes every problem it induces liftable") {
  FiniteSpace pc = fixtures::pseudocircle();
  SheafOfGroups n2 = SheafOfGroups::constant(pc, FiniteGroup::cyclic(2));
  SheafOfGroups g4 = SheafOfGroups::constant(
      pc, FiniteGroup::direct_product(FiniteGroup::cyclic(2),
                                      FiniteGroup::cyclic(2)));
  SheafOfGroups h2 = SheafOfGroups::constant(pc, FiniteGroup::cyclic(2));
  // kernel of the first-factor projection is the second factor
  CentralExtensionOfGerbes ext = extension_of_torsor_gerbes(
      constant_hom(n2, g4, {0, 1}), constant_hom(g4, h2, {0, 0, 1, 1}));
  SheafHom sec = constant_hom(h2, g4, {0, 2});

  Open x = pc.points_mask();
  std::vector<Cover> fam = mc_family(pc);
  const auto* tot = dynamic_cast<const TorsorGerbe*>(ext.total.get());
  const auto* bas = dynamic_cast<const TorsorGerbe*>(ext.base.get());
  REQUIRE(tot != nullptr);
  REQUIRE(bas != nullptr);

  int nb = bas->n_objects(x);
  REQUIRE(nb == 16);
  std::vector<int> ind(nb, -1);
  for (int b = 0; b < nb; ++b) {
    ind[b] = tot->object_index(x, apply_hom(sec, bas->object_cocycle(x, b)));
    REQUIRE(ind[b] >= 0);
    CHECK(ext.proj.on_obj(x, ind[b]) == b);
  }

  // between induced objects every base isomorphism lifts: apply the section
  for (int b = 0; b < nb; ++b)
    for (int b2 = 0; b2 < nb; ++b2) {
      int nh = bas->n_homs(x, b, b2);
      for (int h = 0; h < nh; ++h) {
        LiftProblem1 p{&ext, ind[b], ind[b2], h};
        Class1Result r = obstruction_class1(p, fam);
        REQUIRE(r.found);
        CHECK(class_is_trivial(*r.rep));
        IsoLift l = lift_isomorphism(p, fam);
        REQUIRE(l.status == IsoLift::Status::Lifted);
        CHECK(ext.proj.on_mor(x, ind[b], ind[b2], l.g) == h);
      }
    }

  // and every base object lifts outright
  for (int b = 0; b < nb; ++b) {
    Class2Result r = obstruction_class2({&ext, b}, fam);
    REQUIRE(r.defined);
    CHECK(class_is_trivial(*r.rep));
    ObjectLift l = lift_object({&ext, b}, fam);
    REQUIRE(l.status == ObjectLift::Status::Lifted);
  }
}

TEST_CASE("base objects lift across the circle extension") {
  FiniteSpace pc = fixtures::pseudocircle();
  CyclicExt w = cyclic_ext(pc, 2, 2);
  Open x = pc.points_mask();
  std::vector<Cover> fam = mc_family(pc);
  const PrestackGroupoid& tot = *w.ext.total;
  const PrestackGroupoid& bas = *w.ext.base;

  // degree-2 band cohomology of the circle vanishes, so nothing obstructs
  CHECK(cohomology_group(w.ext.band->band(), whole_cover(pc), 2).trivial());

  int nb = bas.n_objects(x);
  REQUIRE(nb == 16);
  for (int j = 0; j < nb; ++j) {
    bool oracle = false;
    for (int i = 0; i < tot.n_objects(x) && !oracle; ++i)
      oracle = bas.n_homs(x, j, w.ext.proj.on_obj(x, i)) > 0;
    CHECK(oracle);

    Class2Result r = obstruction_class2({&w.ext, j}, fam);
    REQUIRE(r.defined);
    CHECK(class_is_trivial(*r.rep));
    CHECK(is_cocycle(*r.rep).ok);

    ObjectLift l = lift_object({&w.ext, j}, fam);
    REQUIRE(l.status == ObjectLift::Status::Lifted);
    REQUIRE(l.i >= 0);
    int fi = w.ext.proj.on_obj(x, l.i);
    REQUIRE(l.e >= 0);
    CHECK(l.e < bas.n_homs(x, j, fi));
  }
}

TEST_CASE("an unsolvable cocycle obstructs object lifting") {
  FiniteSpace s14 = fixtures::sphere14();
  SheafOfGroups f = SheafOfGroups::constant(s14, FiniteGroup::cyclic(2));
  Cochain z = sphere_cocycle(f);
  REQUIRE(is_cocycle(z).ok);
  REQUIRE(!class_is_trivial(z));
  CentralExtensionOfGerbes ext = gerbe_from_2cocycle(z);
  std::vector<Cover> fam{z.cover};

  LiftProblem2 p{&ext, 0};
  Class2Result r = obstruction_class2(p, fam);
  REQUIRE(r.defined);
  REQUIRE(r.rep.has_value());
  CHECK(!class_is_trivial(*r.rep));
  // the gerbe of a cocycle carries the class of that cocycle
  CHECK(classes_equal(*r.rep, z));

  ObjectLift l = lift_object(p, fam);
  REQUIRE(l.status == ObjectLift::Status::Obstructed);
  REQUIRE(l.cls.has_value());
  CHECK(!class_is_trivial(*l.cls));
  CHECK(l.reason == "the degree-2 class is nontrivial");
  // oracle: the total prestack has no object over the whole space at all
  CHECK(ext.total->n_objects(s14.points_mask()) == 0);

  // a coboundary input gives the trivial class back
  FiniteSpace pc = fixtures::pseudocircle();
  SheafOfGroups f2 = SheafOfGroups::constant(pc, FiniteGroup::cyclic(2));
  Cover mc = whole_cover(pc);
  Cochain b = Cochain::identity(f2, mc, 1);
  b.set(std::vector<int>{0, 2}, std::vector<Elt>{1});
  b.set(std::vector<int>{2, 3}, std::vector<Elt>{1, 0});
  Cochain c = coboundary1(b);
  CentralExtensionOfGerbes extc = gerbe_from_2cocycle(c);
  Class2Result rc = obstruction_class2({&extc, 0}, mc_family(pc));
  REQUIRE(rc.defined);
  CHECK(class_is_trivial(*rc.rep));
  CHECK(classes_equal(*rc.rep, c));
}

TEST_CASE("undefined classes name the failing step") {
  FiniteSpace pc = fixtures::pseudocircle();
  Open x = pc.points_mask();

  SheafOfGroups f2 = SheafOfGroups::constant(pc, FiniteGroup::cyclic(2));
  Cover mc = whole_cover(pc);
  Cochain b = Cochain::identity(f2, mc, 1);
  b.set(std::vector<int>{0, 2}, std::vector<Elt>{1});
  Cochain c = coboundary1(b);
  CentralExtensionOfGerbes extc = gerbe_from_2cocycle(c);

  // a gerbe of charts has no object over the whole space: the coarse cover
  // cannot even choose local objects
  std::vector<Cover> coarse{Cover{x, {x}}};
  Class2Result r = obstruction_class2({&extc, 0}, coarse);
  CHECK(!r.defined);
  CHECK(r.failed_step == "object");
  CHECK(r.reason.find("no local object projects near the base object") !=
        std::string::npos);
  CHECK(r.cover.parts.size() == 1);
  ObjectLift l = lift_object({&extc, 0}, coarse);
  CHECK(l.status == ObjectLift::Status::Undefined);
  CHECK(l.reason.find("undefined on this cover family") != std::string::npos);

  // the empty family fails before any cover is tried
  std::vector<Cover> none;
  Class2Result re = obstruction_class2({&extc, 0}, none);
  CHECK(!re.defined);
  CHECK(re.failed_step == "cover");
  CHECK(re.reason == "the cover family is empty");

  // on a torsor extension the doubled coarse cover defines the class only
  // when both random object choices land in one isomorphism class upstairs
  CyclicExt w = cyclic_ext(pc, 2, 2);
  Class1Result r1 = obstruction_class1({&w.ext, 0, 0, 0}, none);
  CHECK(!r1.found);
  CHECK(r1.reason == "the cover family is empty");
  std::vector<Cover> doubled{Cover{x, {x, x}}};
  LiftProblem2 p{&w.ext, 0};
  Class2Result det = obstruction_class2(p, mc_family(pc));
  REQUIRE(det.defined);
  Class2Result flat = obstruction_class2(p, doubled);
  REQUIRE(flat.defined);
  CHECK(classes_equal(*flat.rep, *det.rep));

  bool hit_lift_fail = false, hit_defined = false;
  for (std::uint64_t s = 1; s <= 64 && !(hit_lift_fail && hit_defined); ++s) {
    ChoicePolicy pol;
    pol.seed = s;
    pol.objects = true;
    Class2Result rr = obstruction_class2(p, doubled, pol);
    if (!rr.defined) {
      CHECK(rr.failed_step == "lift");
      CHECK(rr.reason.find("no lift of the comparison isomorphism") !=
            std::string::npos);
      hit_lift_fail = true;
    } else {
      CHECK(classes_equal(*rr.rep, *det.rep));
      hit_defined = true;
    }
  }
  CHECK(hit_lift_fail);
  CHECK(hit_defined);
}

TEST_CASE("degree-2 classes survive re-chosen objects isos lifts and covers") {
  FiniteSpace pc = fixtures::pseudocircle();
  CyclicExt w = cyclic_ext(pc, 2, 2);
  Open x = pc.points_mask();
  LiftProblem2 p{&w.ext, 3};

  Class2Result det = obstruction_class2(p, mc_family(pc));
  REQUIRE(det.defined);
  for (int axis = 0; axis < 3; ++axis)
    for (std::uint64_t s = 1; s <= 5; ++s) {
      ChoicePolicy pol;
      pol.seed = s;
      pol.objects = axis == 0;
      pol.isos = axis == 1;
      pol.lifts = axis == 2;
      Class2Result r = obstruction_class2(p, mc_family(pc), pol);
      REQUIRE(r.defined);
      CHECK(classes_equal(*r.rep, *det.rep));
    }
  for (std::vector<Cover> fam :
       {std::vector<Cover>{Cover{x, {7, 11}}},
        std::vector<Cover>{Cover{x, {7, 11, 1, 2}}}}) {
    Class2Result r = obstruction_class2(p, fam);
    REQUIRE(r.defined);
    CHECK(classes_equal(*r.rep, *det.rep));
  }

  // same drill where the class is nontrivial
  FiniteSpace s14 = fixtures::sphere14();
  SheafOfGroups f = SheafOfGroups::constant(s14, FiniteGroup::cyclic(2));
  Cochain z = sphere_cocycle(f);
  CentralExtensionOfGerbes ext = gerbe_from_2cocycle(z);
  std::vector<Cover> fine{z.cover};
  LiftProblem2 q{&ext, 0};
  Class2Result sdet = obstruction_class2(q, fine);
  REQUIRE(sdet.defined);
  CHECK(!class_is_trivial(*sdet.rep));
  for (int axis = 0; axis < 3; ++axis)
    for (std::uint64_t s = 1; s <= 2; ++s) {
      ChoicePolicy pol;
      pol.seed = s;
      pol.objects = axis == 0;
      pol.isos = axis == 1;
      pol.lifts = axis == 2;
      Class2Result r = obstruction_class2(q, fine, pol);
      REQUIRE(r.defined);
      CHECK(classes_equal(*r.rep, *sdet.rep));
    }

  // the four vertex stars cover the sphere and still carry the class
  Cover vst{s14.points_mask(), {}};
  for (const char* v : {"1", "2", "3", "4"})
    vst.parts.push_back(s14.minimal_open(s14.point(v)));
  Class2Result rv = obstruction_class2(q, std::vector<Cover>{vst});
  REQUIRE(rv.defined);
  CHECK(rv.cover.parts.size() == 4);
  CHECK(classes_equal(*rv.rep, *sdet.rep));
}

TEST_CASE("isomorphic base objects carry one class") {
  FiniteSpace pc = fixtures::pseudocircle();
  CyclicExt w = cyclic_ext(pc, 2, 2);
  Open x = pc.points_mask();
  std::vector<Cover> fam = mc_family(pc);
  const PrestackGroupoid& bas = *w.ext.base;
  int nb = bas.n_objects(x);

  int partner0 = -1;
  for (int j = 0; j < nb; ++j) {
    int j2 = -1;
    for (int k = 0; k < nb && j2 < 0; ++k)
      if (k != j && bas.n_homs(x, j, k) > 0) j2 = k;
    REQUIRE(j2 >= 0);
    if (j == 0) partner0 = j2;
    CHECK(isomorphic_objects_same_class({&w.ext, j}, {&w.ext, j2}, fam).ok);
  }
  // an explicit certificate works too
  CHECK(isomorphic_objects_same_class({&w.ext, 0}, {&w.ext, partner0}, fam, 0)
            .ok);

  // non-isomorphic objects are refused, not compared
  int stranger = -1;
  for (int k = 0; k < nb && stranger < 0; ++k)
    if (bas.n_homs(x, 0, k) == 0) stranger = k;
  REQUIRE(stranger >= 0);
  CheckResult bad =
      isomorphic_objects_same_class({&w.ext, 0}, {&w.ext, stranger}, fam);
  CHECK(!bad.ok);
  CHECK(bad.reason.find("not isomorphic") != std::string::npos);

  CyclicExt other = cyclic_ext(pc, 2, 2);
  CheckResult mixed =
      isomorphic_objects_same_class({&w.ext, 0}, {&other.ext, 0}, fam);
  CHECK(!mixed.ok);
  CHECK(mixed.reason.find("different extensions") != std::string::npos);

  CHECK_THROWS_WITH(
      isomorphic_objects_same_class({&w.ext, 0}, {&w.ext, partner0}, fam, 99),
      doctest::Contains("out of range"));
}

TEST_CASE("extension squares push classes forward") {
  FiniteSpace pc = fixtures::pseudocircle();
  CyclicExt up = cyclic_ext(pc, 4, 2);
  CyclicExt dn = cyclic_ext(pc, 2, 2);
  Open x = pc.points_mask();
  std::vector<Cover> fam = mc_family(pc);

  SheafHom dmap = constant_hom(*up.mid, *dn.mid, {0, 1, 2, 3, 0, 1, 2, 3});
  SheafHom emap = constant_hom(*up.quo, *dn.quo, {0, 1});
  ExtensionSquare sq{&up.ext, &dn.ext,
                     torsor_push(*up.ext.total, *dn.ext.total, dmap),
                     torsor_push(*up.ext.base, *dn.ext.base, emap)};
  std::vector<Open> opens{0, 1, 2, 3};
  CHECK(is_extension_square(sq, opens).ok);

  // the induced band map is reduction mod 2 on every stalk
  SheafHom bm = induced_band_map(sq);
  CHECK(bm.src == &up.ext.band->band());
  CHECK(bm.dst == &dn.ext.band->band());
  for (int pt = 0; pt < 4; ++pt)
    for (int g = 0; g < 4; ++g)
      CHECK(bm.at(pt, static_cast<Elt>(g)) == g % 2);

  // pick one problem whose pushed class stays nontrivial and one where the
  // obstruction dies in the smaller band
  const PrestackGroupoid& gu = *up.ext.total;
  const PrestackGroupoid& bu = *up.ext.base;
  int f0 = up.ext.proj.on_obj(x, 0);
  int d0 = sq.d.on_obj(x, 0);
  int strong = -1, weak = -1;
  for (int j = 0; j < gu.n_objects(x) && (strong < 0 || weak < 0); ++j) {
    if (bu.n_homs(x, f0, up.ext.proj.on_obj(x, j)) == 0) continue;
    if (gu.n_homs(x, 0, j) > 0) continue;
    bool dn_lifts = dn.ext.total->n_homs(x, d0, sq.d.on_obj(x, j)) > 0;
    if (!dn_lifts && strong < 0) strong = j;
    if (dn_lifts && weak < 0) weak = j;
  }
  REQUIRE(strong >= 0);
  REQUIRE(weak >= 0);

  for (int j : {strong, weak}) {
    LiftProblem1 p{&up.ext, 0, j, 0};
    CHECK(pushforward_matches_class1(sq, p, fam).ok);
    int fj = up.ext.proj.on_obj(x, j);
    LiftProblem1 q{&dn.ext, d0, sq.d.on_obj(x, j),
                   sq.e.on_mor(x, f0, fj, 0)};
    Class1Result rdn = obstruction_class1(q, fam);
    REQUIRE(rdn.found);
    CHECK(class_is_trivial(*rdn.rep) == (j == weak));
  }

  // degree-2 classes push for every global base object
  for (int b = 0; b < bu.n_objects(x); ++b)
    CHECK(pushforward_matches_class2(sq, {&up.ext, b}, fam).ok);

  // the identity square is a square
  SheafHom idm = constant_hom(*dn.mid, *dn.mid, {0, 1, 2, 3});
  SheafHom ide = constant_hom(*dn.quo, *dn.quo, {0, 1});
  ExtensionSquare idsq{&dn.ext, &dn.ext,
                       torsor_push(*dn.ext.total, *dn.ext.total, idm),
                       torsor_push(*dn.ext.base, *dn.ext.base, ide)};
  CHECK(is_extension_square(idsq, opens).ok);
  CHECK(pushforward_matches_class1(idsq, {&dn.ext, 0, 0, 0}, fam).ok);

  // mismatched joints are named
  ExtensionSquare bad = sq;
  bad.d = sq.e;
  CheckResult rb = is_extension_square(bad, opens);
  CHECK(!rb.ok);
  CHECK(rb.reason.find("does not join") != std::string::npos);
  CHECK_THROWS_WITH(pushforward_matches_class1(sq, {&dn.ext, 0, 0, 0}, fam),
                    doctest::Contains("upstairs extension"));
}

TEST_CASE("surjectivity holds over acyclic opens and fails over the circle") {
  FiniteSpace pc = fixtures::pseudocircle();
  CyclicExt w = cyclic_ext(pc, 2, 2);
  Open x = pc.points_mask();

  for (Open u : {Open{1}, Open{2}, Open{3}, Open{7}, Open{11}}) {
    CHECK(band_acyclic(w.ext, u));
    CheckResult r = acyclic_surjectivity(w.ext, u);
    CHECK(r.ok);
    CHECK(r.reason.empty());
  }

  // the whole circle is not band-acyclic, and the skip is genuine: some base
  // isomorphism over it has no lift
  CHECK(!band_acyclic(w.ext, x));
  CheckResult skip = acyclic_surjectivity(w.ext, x);
  CHECK(skip.ok);
  CHECK(skip.reason.find("skipped") != std::string::npos);
  bool counterexample = false;
  int f0 = w.ext.proj.on_obj(x, 0);
  for (int j = 0; j < w.ext.total->n_objects(x) && !counterexample; ++j)
    counterexample =
        w.ext.base->n_homs(x, f0, w.ext.proj.on_obj(x, j)) > 0 &&
        w.ext.total->n_homs(x, 0, j) == 0;
  CHECK(counterexample);

  // over a space with a minimum everything lifts
  FiniteSpace f3 = fixtures::fan3();
  CyclicExt w3 = cyclic_ext(f3, 2, 2);
  CHECK(band_acyclic(w3.ext, f3.points_mask()));
  CheckResult r3 = acyclic_surjectivity(w3.ext, f3.points_mask());
  CHECK(r3.ok);
  CHECK(r3.reason.empty());

  CHECK_THROWS_WITH(band_acyclic(w.ext, 5), doctest::Contains("not an open"));
}

TEST_CASE("band-acyclic families define every class") {
  FiniteSpace pc = fixtures::pseudocircle();
  CyclicExt w = cyclic_ext(pc, 2, 2);
  Open x = pc.points_mask();

  CHECK(classes_defined_on_acyclic_family(w.ext, mc_family(pc)).ok);

  std::vector<Cover> coarse{Cover{x, {x}}};
  CheckResult neg = classes_defined_on_acyclic_family(w.ext, coarse);
  CHECK(!neg.ok);
  CHECK(neg.reason.find("not band-acyclic") != std::string::npos);

  std::vector<Cover> none;
  CHECK(!classes_defined_on_acyclic_family(w.ext, none).ok);

  // chart gerbes: the circle coboundary and the sphere cocycle
  SheafOfGroups f2 = SheafOfGroups::constant(pc, FiniteGroup::cyclic(2));
  Cochain b = Cochain::identity(f2, whole_cover(pc), 1);
  b.set(std::vector<int>{0, 2}, std::vector<Elt>{1});
  Cochain c = coboundary1(b);
  CentralExtensionOfGerbes extc = gerbe_from_2cocycle(c);
  CHECK(classes_defined_on_acyclic_family(extc, mc_family(pc)).ok);

  FiniteSpace s14 = fixtures::sphere14();
  SheafOfGroups f = SheafOfGroups::constant(s14, FiniteGroup::cyclic(2));
  Cochain z = sphere_cocycle(f);
  CentralExtensionOfGerbes ext = gerbe_from_2cocycle(z);
  CHECK(classes_defined_on_acyclic_family(ext, std::vector<Cover>{z.cover})
            .ok);
  Cover vst{s14.points_mask(), {}};
  for (const char* v : {"1", "2", "3", "4"})
    vst.parts.push_back(s14.minimal_open(s14.point(v)));
  CHECK(
      classes_defined_on_acyclic_family(ext, std::vector<Cover>{vst}).ok);
}

TEST_CASE("no parallel pair of base isomorphisms separates classes") {
  FiniteSpace pc = fixtures::pseudocircle();
  CyclicExt w = cyclic_ext(pc, 2, 2);
  std::vector<Cover> fam = mc_family(pc);

  ParallelIsoSearch full =
      distinct_classes_for_parallel_isos(w.ext, fam, 200000);
  CHECK(!full.found);
  CHECK(full.complete);
  // 256 x 128 object pairs with matching images, two isomorphisms each
  CHECK(full.checked == 65536);

  ParallelIsoSearch capped = distinct_classes_for_parallel_isos(w.ext, fam, 5);
  CHECK(!capped.found);
  CHECK(!capped.complete);
  CHECK(capped.checked == 5);
}

TEST_CASE("quotient extensions lift objects where cohomology allows") {
  FiniteSpace pc = fixtures::pseudocircle();
  Open x = pc.points_mask();
  std::vector<Cover> fam = mc_family(pc);
  SheafOfGroups f2 = SheafOfGroups::constant(pc, FiniteGroup::cyclic(2));
  auto tors = std::make_shared<TorsorGerbe>(f2);
  CentralExtensionOfGerbes q = central_quotient_extension(tors, center(*tors));

  // degree 2 vanishes on the circle, degree 1 does not
  CHECK(cohomology_group(q.band->band(), whole_cover(pc), 2).trivial());
  CHECK(!cohomology_group(q.band->band(), whole_cover(pc), 1).trivial());

  int nb = q.base->n_objects(x);
  REQUIRE(nb > 0);
  for (int j = 0; j < nb; ++j) {
    bool oracle = false;
    for (int i = 0; i < tors->n_objects(x) && !oracle; ++i)
      oracle = q.base->n_homs(x, j, q.proj.on_obj(x, i)) > 0;
    CHECK(oracle);
    Class2Result r = obstruction_class2({&q, j}, fam);
    REQUIRE(r.defined);
    CHECK(class_is_trivial(*r.rep));
    ObjectLift l = lift_object({&q, j}, fam);
    REQUIRE(l.status == ObjectLift::Status::Lifted);
    CHECK(l.e < q.base->n_homs(x, j, q.proj.on_obj(x, l.i)));
  }

  // lifting everywhere is not injectivity: two non-isomorphic torsors become
  // isomorphic in the quotient because degree 1 does not vanish
  int jbad = -1;
  for (int k = 1; k < tors->n_objects(x) && jbad < 0; ++k)
    if (tors->n_homs(x, 0, k) == 0) jbad = k;
  REQUIRE(jbad >= 0);
  CHECK(q.base->n_homs(x, q.proj.on_obj(x, 0), q.proj.on_obj(x, jbad)) > 0);

  // over the fan both degrees vanish and the lift is a bijection on classes
  FiniteSpace f3 = fixtures::fan3();
  Open x3 = f3.points_mask();
  SheafOfGroups f23 = SheafOfGroups::constant(f3, FiniteGroup::cyclic(2));
  auto tors3 = std::make_shared<TorsorGerbe>(f23);
  CentralExtensionOfGerbes q3 =
      central_quotient_extension(tors3, center(*tors3));
  CHECK(cohomology_group(q3.band->band(), whole_cover(f3), 1).trivial());
  CHECK(cohomology_group(q3.band->band(), whole_cover(f3), 2).trivial());
  for (int j = 0; j < q3.base->n_objects(x3); ++j) {
    ObjectLift l = lift_object({&q3, j}, mc_family(f3));
    CHECK(l.status == ObjectLift::Status::Lifted);
  }
  for (int i = 0; i < tors3->n_objects(x3); ++i)
    for (int k = 0; k < tors3->n_objects(x3); ++k)
      CHECK(tors3->n_homs(x3, i, k) > 0);
  for (int i = 0; i < q3.base->n_objects(x3); ++i)
    for (int k = 0; k < q3.base->n_objects(x3); ++k)
      CHECK(q3.base->n_homs(x3, i, k) > 0);
}

TEST_CASE("global homs exist exactly when some class is trivial") {
  FiniteSpace pc = fixtures::pseudocircle();
  CyclicExt w = cyclic_ext(pc, 2, 2);
  Open x = pc.points_mask();
  std::vector<Cover> fam = mc_family(pc);
  const PrestackGroupoid& tot = *w.ext.total;
  const PrestackGroupoid& bas = *w.ext.base;
  int nobj = tot.n_objects(x);

  std::mt19937_64 rng(11);
  std::vector<std::pair<int, int>> pairs{{0, 0}};
  for (int t = 0; t < 24; ++t)
    pairs.push_back({static_cast<int>(rng() % nobj),
                     static_cast<int>(rng() % nobj)});
  for (auto [i, j] : pairs) {
    int fi = w.ext.proj.on_obj(x, i);
    int fj = w.ext.proj.on_obj(x, j);
    int nh = bas.n_homs(x, fi, fj);
    bool any_trivial = false;
    for (int h = 0; h < nh; ++h) {
      Class1Result r = obstruction_class1({&w.ext, i, j, h}, fam);
      REQUIRE(r.found);
      any_trivial = any_trivial || class_is_trivial(*r.rep);
    }
    CHECK(any_trivial == (tot.n_homs(x, i, j) > 0));
  }
}

TEST_CASE("malformed lifting problems are rejected") {
  FiniteSpace pc = fixtures::pseudocircle();
  CyclicExt w = cyclic_ext(pc, 2, 2);
  std::vector<Cover> fam = mc_family(pc);

  CHECK_THROWS_WITH(obstruction_class1({nullptr, 0, 0, 0}, fam),
                    doctest::Contains("incomplete extension"));
  CHECK_THROWS_WITH(obstruction_class1({&w.ext, -1, 0, 0}, fam),
                    doctest::Contains("object out of range"));
  CHECK_THROWS_WITH(obstruction_class1({&w.ext, 0, 0, 99}, fam),
                    doctest::Contains("isomorphism out of range"));
  CHECK_THROWS_WITH(obstruction_class2({&w.ext, -1}, fam),
                    doctest::Contains("base object out of range"));
  CHECK_THROWS_WITH(lift_isomorphism({&w.ext, 0, 0, -1}, fam),
                    doctest::Contains("isomorphism out of range"));

  std::vector<Cover> partial{Cover{Open{7}, {7}}};
  CHECK_THROWS_WITH(obstruction_class1({&w.ext, 0, 0, 0}, partial),
                    doctest::Contains("must cover the whole space"));
  CHECK_THROWS_WITH(lift_object({&w.ext, 0}, partial),
                    doctest::Contains("must cover the whole space"));

  // empty families are domain outcomes for the lifting routines
  std::vector<Cover> none;
  IsoLift li = lift_isomorphism({&w.ext, 0, 0, 0}, none);
  CHECK(li.status == IsoLift::Status::NoCover);
  CHECK(li.reason == "the cover family is empty");
  ObjectLift lo = lift_object({&w.ext, 0}, none);
  CHECK(lo.status == ObjectLift::Status::Undefined);
  CHECK(lo.reason == "the cover family is empty");
}

}  // TEST_SUITE
