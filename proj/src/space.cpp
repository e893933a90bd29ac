#include "gerbex/space.hpp"

#include <algorithm>
#include <set>

namespace gerbex {

FiniteSpace::FiniteSpace(std::vector<std::string> labels,
                         const std::vector<std::pair<int, int>>& leq_pairs)
    : labels_(std::move(labels)) {
  n_ = static_cast<int>(labels_.size());
  if (n_ == 0) throw StructuralError("space needs at least one point");
  if (n_ > kMaxPoints) throw StructuralError("too many points (cap 16)");
  {
    std::set<std::string> uniq(labels_.begin(), labels_.end());
    if (static_cast<int>(uniq.size()) != n_)
      throw StructuralError("duplicate point labels");
  }
  leq_.assign(n_ * n_, 0);
  for (int p = 0; p < n_; ++p) leq_[p * n_ + p] = 1;
  for (auto [p, q] : leq_pairs) {
    if (p < 0 || q < 0 || p >= n_ || q >= n_)
      throw StructuralError("leq pair out of range");
    leq_[p * n_ + q] = 1;
  }
  // transitive closure
  for (int k = 0; k < n_; ++k)
    for (int p = 0; p < n_; ++p)
      if (leq_[p * n_ + k])
        for (int q = 0; q < n_; ++q)
          if (leq_[k * n_ + q]) leq_[p * n_ + q] = 1;
  for (int p = 0; p < n_; ++p)
    for (int q = p + 1; q < n_; ++q)
      if (leq_[p * n_ + q] && leq_[q * n_ + p])
        throw StructuralError("order not antisymmetric (space not T0): " +
                              labels_[p] + " and " + labels_[q]);
  min_open_.assign(n_, 0);
  for (int p = 0; p < n_; ++p) {
    Open u = 0;
    for (int q = 0; q < n_; ++q)
      if (leq_[p * n_ + q]) u |= Open(1) << q;
    min_open_[p] = u;
  }
  all_ = (n_ == 32) ? ~Open(0) : ((Open(1) << n_) - 1);
}

int FiniteSpace::point(const std::string& label) const {
  for (int p = 0; p < n_; ++p)
    if (labels_[p] == label) return p;
  throw StructuralError("unknown point label: " + label);
}

bool FiniteSpace::is_open(Open u) const {
  if (u & ~all_) return false;
  return up_closure(u) == u;
}

Open FiniteSpace::up_closure(Open s) const {
  Open u = 0;
  for (int p = 0; p < n_; ++p)
    if (s & (Open(1) << p)) u |= min_open_[p];
  return u;
}

std::vector<int> FiniteSpace::points_of(Open u) const {
  std::vector<int> out;
  for (int p = 0; p < n_; ++p)
    if (u & (Open(1) << p)) out.push_back(p);
  return out;
}

std::vector<int> FiniteSpace::minimal_points(Open u) const {
  std::vector<int> out;
  for (int p : points_of(u)) {
    bool minimal = true;
    for (int q : points_of(u))
      if (q != p && leq(q, p)) {
        minimal = false;
        break;
      }
    if (minimal) out.push_back(p);
  }
  return out;
}

std::vector<Open> FiniteSpace::components(Open u) const {
  std::vector<int> pts = points_of(u);
  std::vector<Open> comps;
  std::vector<char> seen(n_, 0);
  for (int start : pts) {
    if (seen[start]) continue;
    Open comp = 0;
    std::vector<int> stack{start};
    seen[start] = 1;
    while (!stack.empty()) {
      int p = stack.back();
      stack.pop_back();
      comp |= Open(1) << p;
      for (int q : pts)
        if (!seen[q] && (leq(p, q) || leq(q, p))) {
          seen[q] = 1;
          stack.push_back(q);
        }
    }
    comps.push_back(comp);
  }
  return comps;
}

std::vector<Open> FiniteSpace::all_opens() const {
  std::vector<Open> out;
  for (Open u = 0; u <= all_; ++u)
    if (is_open(u)) out.push_back(u);
  return out;
}

bool FiniteSpace::has_minimum(Open u) const {
  if (u == 0) return false;
  return minimal_points(u).size() == 1;
}

void validate_cover(const FiniteSpace& sp, const Cover& c) {
  if (!sp.is_open(c.target)) throw StructuralError("cover target not open");
  if (c.parts.empty()) throw StructuralError("cover has no parts");
  Open u = 0;
  for (Open p : c.parts) {
    if (!sp.is_open(p)) throw StructuralError("cover part not open");
    if (!open_subset(p, c.target))
      throw StructuralError("cover part not contained in target");
    u |= p;
  }
  if (u != c.target) throw StructuralError("cover parts do not cover target");
}

Cover minimal_open_cover(const FiniteSpace& sp, Open u) {
  if (!sp.is_open(u)) throw StructuralError("not an open set");
  Cover c;
  c.target = u;
  for (int p : sp.points_of(u)) c.parts.push_back(sp.minimal_open(p));
  return c;
}

Open nerve_face(const Cover& c, std::span<const int> tuple) {
  Open f = c.target;
  for (int i : tuple) {
    if (i < 0 || i >= c.size()) throw StructuralError("tuple index out of range");
    f &= c.parts[i];
  }
  return f;
}

Refinement refine_into(const Cover& coarse, const Cover& fine) {
  Refinement r;
  r.fine = fine;
  for (Open p : fine.parts) {
    int found = -1;
    for (int j = 0; j < coarse.size(); ++j)
      if (open_subset(p, coarse.parts[j])) {
        found = j;
        break;
      }
    if (found < 0) throw StructuralError("cover does not refine the coarse one");
    r.phi.push_back(found);
  }
  return r;
}

CommonRefinement common_refinement(const FiniteSpace& sp, const Cover& a,
                                   const Cover& b) {
  if (a.target != b.target)
    throw StructuralError("common refinement needs covers of the same open");
  CommonRefinement out;
  out.fine.target = a.target;
  for (int i = 0; i < a.size(); ++i)
    for (int j = 0; j < b.size(); ++j) {
      Open u = a.parts[i] & b.parts[j];
      if (u == 0 && a.target != 0) continue;
      out.fine.parts.push_back(u);
      out.phi_a.push_back(i);
      out.phi_b.push_back(j);
    }
  validate_cover(sp, out.fine);
  return out;
}

}  // namespace gerbex
