#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gerbex/common.hpp"

namespace gerbex {

// A finite T0 topological space, stored as its specialization order:
// leq(p, q) means p <= q, i.e. every open containing p contains q.
// Opens are exactly the up-sets of the order; the minimal open of p is the
// principal up-set at p. At most 16 points.
class FiniteSpace {
 public:
  static constexpr int kMaxPoints = 16;

  // Relations are closed reflexively and transitively; a violation of
  // antisymmetry (two distinct points below each other) is rejected since the
  // space would not be T0.
  FiniteSpace(std::vector<std::string> labels,
              const std::vector<std::pair<int, int>>& leq_pairs);

  int size() const { return n_; }
  const std::string& label(int p) const { return labels_[p]; }
  int point(const std::string& label) const;  // throws if unknown

  bool leq(int p, int q) const { return leq_[p * n_ + q]; }
  Open minimal_open(int p) const { return min_open_[p]; }
  Open points_mask() const { return all_; }

  bool is_open(Open u) const;
  Open up_closure(Open s) const;

  std::vector<int> points_of(Open u) const;        // ascending point ids
  std::vector<int> minimal_points(Open u) const;   // minimal in the induced order
  std::vector<Open> components(Open u) const;      // ordered by smallest point
  bool connected(Open u) const { return components(u).size() == 1; }

  // All opens, ascending as masks. Count is exponential in antichain size but
  // small for the desk-scale spaces this library targets.
  std::vector<Open> all_opens() const;

  bool has_minimum(Open u) const;  // a point of u below every point of u

  bool operator==(const FiniteSpace& o) const {
    return labels_ == o.labels_ && leq_ == o.leq_;
  }

 private:
  int n_ = 0;
  Open all_ = 0;
  std::vector<std::string> labels_;
  std::vector<char> leq_;       // n x n
  std::vector<Open> min_open_;  // per point
};

// An ordered open cover of a target open. Part order is meaningful: cochains
// are indexed by tuples of part indices and all first-witness selections scan
// parts in this order.
struct Cover {
  Open target = 0;
  std::vector<Open> parts;

  int size() const { return static_cast<int>(parts.size()); }
};

// Checks union and up-closedness of every part.
void validate_cover(const FiniteSpace& sp, const Cover& c);

// The cover of u by the minimal opens of its points, in ascending point order.
// It refines every other cover of u.
Cover minimal_open_cover(const FiniteSpace& sp, Open u);

// Intersection of the parts selected by `tuple` (indices into c.parts,
// repetitions allowed). Empty tuple yields the target.
Open nerve_face(const Cover& c, std::span<const int> tuple);

// fine.parts[l] is contained in coarse.parts[phi[l]].
struct Refinement {
  Cover fine;
  std::vector<int> phi;
};

// Refinement of `fine` into `coarse` with phi[l] = first coarse part
// containing fine part l. Throws if some part has no container.
Refinement refine_into(const Cover& coarse, const Cover& fine);

// Common refinement of two covers of the same target: all nonempty pairwise
// intersections in lexicographic (i, j) order, with the two projection maps.
struct CommonRefinement {
  Cover fine;
  std::vector<int> phi_a;
  std::vector<int> phi_b;
};
CommonRefinement common_refinement(const FiniteSpace& sp, const Cover& a,
                                   const Cover& b);

}  // namespace gerbex
