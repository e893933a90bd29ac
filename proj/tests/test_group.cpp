#include <algorithm>
#include <vector>

#include "doctest.h"
#include "gerbex/group.hpp"

using namespace gerbex;

TEST_SUITE("group") {

TEST_CASE("cyclic groups") {
  FiniteGroup c6 = FiniteGroup::cyclic(6);
  CHECK(c6.order() == 6);
  CHECK(c6.abelian());
  CHECK(c6.id() == 0);
  CHECK(c6.mul(4, 5) == 3);
  CHECK(c6.inv(2) == 4);
  CHECK(c6.element_order(1) == 6);
  CHECK(c6.element_order(2) == 3);
  CHECK(c6.label(4) == "4");
  CHECK(c6.element("4") == Elt{4});
  CHECK(!c6.element("9").has_value());
  CHECK(FiniteGroup::trivial().order() == 1);
}

TEST_CASE("table validation") {
  // Klein four group
  std::vector<std::vector<int>> klein = {
      {0, 1, 2, 3}, {1, 0, 3, 2}, {2, 3, 0, 1}, {3, 2, 1, 0}};
  FiniteGroup k = FiniteGroup::from_table(klein);
  CHECK(k.order() == 4);
  CHECK(k.abelian());
  for (Elt a = 0; a < 4; ++a) CHECK(k.mul(a, a) == k.id());

  std::vector<std::vector<int>> not_square = {{0, 1}, {1}};
  CHECK_THROWS_AS(FiniteGroup::from_table(not_square), StructuralError);
  std::vector<std::vector<int>> out_of_range = {{0, 1}, {1, 2}};
  CHECK_THROWS_AS(FiniteGroup::from_table(out_of_range), StructuralError);
  std::vector<std::vector<int>> no_identity = {{0, 0}, {0, 0}};
  CHECK_THROWS_AS(FiniteGroup::from_table(no_identity), StructuralError);
  // identity need not sit at index zero
  std::vector<std::vector<int>> relabeled = {{1, 0}, {0, 1}};
  CHECK(FiniteGroup::from_table(relabeled).id() == 1);
  // associativity failure on three elements
  std::vector<std::vector<int>> not_assoc = {
      {0, 1, 2}, {1, 0, 0}, {2, 0, 1}};
  CHECK_THROWS_AS(FiniteGroup::from_table(not_assoc), StructuralError);
}

TEST_CASE("direct products") {
  FiniteGroup p = FiniteGroup::direct_product(FiniteGroup::cyclic(2),
                                              FiniteGroup::cyclic(3));
  CHECK(p.order() == 6);
  CHECK(p.abelian());
  CHECK(invariant_factors(p) == std::vector<long long>{6});
  CHECK(p.label(0) == "(0,0)");
}

TEST_CASE("unitriangular group over Z/2") {
  FiniteGroup h = FiniteGroup::heisenberg2();
  CHECK(h.order() == 8);
  CHECK(!h.abelian());
  auto z = h.center();
  CHECK(z == std::vector<Elt>{0, 2});
  CHECK(h.element_order(5) == 4);  // a=1, c=1 entry
  CHECK(h.mul(5, 5) == 2);
  // some pair fails to commute
  bool noncomm = false;
  for (Elt a = 0; a < 8 && !noncomm; ++a)
    for (Elt b = 0; b < 8 && !noncomm; ++b)
      if (h.mul(a, b) != h.mul(b, a)) noncomm = h.conj(a, b) != b;
  CHECK(noncomm);
}

TEST_CASE("subgroup predicates") {
  FiniteGroup h = FiniteGroup::heisenberg2();
  auto c = h.subgroup_closure(std::vector<Elt>{2});
  CHECK(c == std::vector<Elt>{0, 2});
  CHECK(h.is_subgroup(c));
  CHECK(h.is_normal(c));
  CHECK(h.is_central(c));
  auto big = h.subgroup_closure(std::vector<Elt>{5});
  CHECK(big.size() == 4);
  CHECK(h.is_subgroup(big));
  CHECK(!h.is_central(big));
  std::vector<Elt> not_closed = {0, 5};
  CHECK(!h.is_subgroup(not_closed));
}

TEST_CASE("homomorphisms") {
  FiniteGroup c4 = FiniteGroup::cyclic(4);
  FiniteGroup c2 = FiniteGroup::cyclic(2);
  GroupHom red(c4, c2, {0, 1, 0, 1});
  CHECK(red(3) == 1);
  CHECK(red.kernel() == std::vector<Elt>{0, 2});
  CHECK(red.image() == std::vector<Elt>{0, 1});
  CHECK(red.surjective());
  CHECK(!red.injective());
  CHECK_THROWS_AS(GroupHom(c4, c2, {0, 1, 1, 0}), StructuralError);
  GroupHom idh = GroupHom::identity(c4);
  CHECK(idh.injective());
  CHECK(idh.surjective());
}

TEST_CASE("quotients") {
  FiniteGroup h = FiniteGroup::heisenberg2();
  QuotientGroup q = quotient_group(h, h.center());
  CHECK(q.group.order() == 4);
  CHECK(q.group.abelian());
  CHECK(invariant_factors(q.group) == std::vector<long long>{2, 2});
  for (Elt c = 0; c < q.group.order(); ++c) CHECK(q.proj[q.rep[c]] == c);
  CHECK(q.rep[0] == 0);
  // proj is a homomorphism
  GroupHom ph(h, q.group, q.proj);
  CHECK(ph.surjective());
  std::vector<Elt> not_normal = {0, 1};  // not closed under conjugation
  CHECK_FALSE(h.is_normal(not_normal));
  CHECK_THROWS_AS(quotient_group(h, not_normal), StructuralError);
}

TEST_CASE("subgroups as groups") {
  FiniteGroup h = FiniteGroup::heisenberg2();
  SubgroupAsGroup s = subgroup_as_group(h, h.center());
  CHECK(s.group.order() == 2);
  CHECK(s.embed == std::vector<Elt>{0, 2});
  CHECK(s.index_in_sub[0] == 0);
  CHECK(s.index_in_sub[2] == 1);
  CHECK(s.index_in_sub[1] == -1);
}

TEST_CASE("cyclic decompositions") {
  FiniteGroup c2 = FiniteGroup::cyclic(2);
  FiniteGroup klein = FiniteGroup::direct_product(c2, c2);
  AbelianBasis b = abelian_basis(klein);
  CHECK(b.rank() == 2);
  CHECK(b.orders == std::vector<int>{2, 2});
  // dlog inverts the basis expansion
  for (Elt a = 0; a < klein.order(); ++a) {
    Elt v = klein.id();
    for (int i = 0; i < b.rank(); ++i)
      for (int e = 0; e < b.dlog[a][i]; ++e) v = klein.mul(v, b.gens[i]);
    CHECK(v == a);
  }
  FiniteGroup c12 = FiniteGroup::direct_product(FiniteGroup::cyclic(4),
                                                FiniteGroup::cyclic(3));
  CHECK(abelian_basis(c12).orders == std::vector<int>{12});
  CHECK_THROWS_AS(abelian_basis(FiniteGroup::heisenberg2()), StructuralError);
}

TEST_CASE("invariant factors") {
  FiniteGroup c2 = FiniteGroup::cyclic(2);
  CHECK(invariant_factors(FiniteGroup::trivial()).empty());
  CHECK(invariant_factors(FiniteGroup::direct_product(c2, c2)) ==
        std::vector<long long>{2, 2});
  CHECK(invariant_factors(FiniteGroup::direct_product(
            FiniteGroup::cyclic(4), c2)) == std::vector<long long>{2, 4});
  CHECK(invariant_factors(FiniteGroup::cyclic(6)) ==
        std::vector<long long>{6});
}

}  // suite
