#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gerbex/common.hpp"

namespace gerbex {

using Elt = std::uint8_t;

// A finite group of order <= 64, given by its full multiplication table.
// Immutable after construction; the constructor validates all axioms.
class FiniteGroup {
 public:
  static constexpr int kMaxOrder = 64;

  static FiniteGroup from_table(const std::vector<std::vector<int>>& mul,
                                std::vector<std::string> labels = {});
  static FiniteGroup trivial();
  static FiniteGroup cyclic(int m);
  static FiniteGroup direct_product(const FiniteGroup& a, const FiniteGroup& b);
  // Unitriangular 3x3 matrices over Z/2: order 8, center Z/2.
  static FiniteGroup heisenberg2();

  int order() const { return n_; }
  Elt mul(Elt a, Elt b) const { return mul_[a * n_ + b]; }
  Elt inv(Elt a) const { return inv_[a]; }
  Elt id() const { return id_; }
  bool abelian() const { return abelian_; }
  const std::string& label(Elt a) const { return labels_[a]; }
  std::optional<Elt> element(const std::string& label) const;

  Elt conj(Elt g, Elt a) const { return mul(mul(g, a), inv(g)); }
  int element_order(Elt a) const;

  std::vector<Elt> center() const;
  std::vector<Elt> subgroup_closure(std::span<const Elt> gens) const;
  bool is_subgroup(std::span<const Elt> elems) const;  // expects sorted
  bool is_normal(std::span<const Elt> elems) const;
  bool is_central(std::span<const Elt> elems) const;

  bool operator==(const FiniteGroup& o) const {
    return n_ == o.n_ && mul_ == o.mul_;
  }

 private:
  FiniteGroup() = default;
  int n_ = 0;
  Elt id_ = 0;
  bool abelian_ = false;
  std::vector<Elt> mul_;
  std::vector<Elt> inv_;
  std::vector<std::string> labels_;
};

// Total homomorphism table src -> dst, validated at construction.
struct GroupHom {
  GroupHom(const FiniteGroup& src, const FiniteGroup& dst,
           std::vector<Elt> map);
  static GroupHom identity(const FiniteGroup& g);

  Elt operator()(Elt a) const { return map[a]; }
  std::vector<Elt> kernel() const;  // sorted
  std::vector<Elt> image() const;   // sorted
  bool surjective() const;
  bool injective() const;

  const FiniteGroup* src;
  const FiniteGroup* dst;
  std::vector<Elt> map;
};

// G/N for normal N: elements are cosets, labeled and represented by their
// smallest member. proj maps G onto the quotient; rep picks the smallest
// coset representative (a set-theoretic section).
struct QuotientGroup {
  FiniteGroup group;
  std::vector<Elt> proj;  // size |G|
  std::vector<Elt> rep;   // size |G/N|
};
QuotientGroup quotient_group(const FiniteGroup& g, std::span<const Elt> normal);

// Subgroup of g on the listed (sorted) elements, as a group in its own right
// with `embed` mapping back into g.
struct SubgroupAsGroup {
  FiniteGroup group;
  std::vector<Elt> embed;  // size = subgroup order
  std::vector<int> index_in_sub;  // size |G|; -1 when not a member
};
SubgroupAsGroup subgroup_as_group(const FiniteGroup& g,
                                  std::span<const Elt> elems);

// Cyclic decomposition of a finite abelian group: every element is uniquely
// prod gens[i]^{e_i} with 0 <= e_i < orders[i]. dlog[a] is that exponent
// vector. Greedy max-order basis construction; verified exhaustively before
// returning.
struct AbelianBasis {
  std::vector<Elt> gens;
  std::vector<int> orders;
  std::vector<std::vector<int>> dlog;

  int rank() const { return static_cast<int>(gens.size()); }
};
AbelianBasis abelian_basis(const FiniteGroup& g);  // throws if g not abelian

// Invariant factors d_1 | d_2 | ... | d_k (each > 1) of a finite abelian
// group, computed from any cyclic decomposition.
std::vector<long long> invariant_factors(const FiniteGroup& g);

}  // namespace gerbex
