#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gerbex/space.hpp"

namespace gerbex::fixtures {

// Four-point circle: c, d below a, b. Minimal opens {a}, {b}, {a,b,c},
// {a,b,d}; the two big opens overlap in the disconnected {a,b}.
inline FiniteSpace pseudocircle() {
  return FiniteSpace({"a", "b", "c", "d"},
                     {{2, 0}, {2, 1}, {3, 0}, {3, 1}});
}

// Six-point sphere: the circle above, with e, f below all of a..d.
inline FiniteSpace pseudosphere() {
  std::vector<std::pair<int, int>> rel = {{2, 0}, {2, 1}, {3, 0}, {3, 1}};
  for (int low : {4, 5})
    for (int high : {0, 1, 2, 3}) rel.push_back({low, high});
  return FiniteSpace({"a", "b", "c", "d", "e", "f"}, rel);
}

// Face poset of the tetrahedron boundary: 4 vertices, 6 edges, 4 triangles,
// ordered by inclusion. Minimal opens are open stars; every nonempty
// intersection of stars has a minimum point (the star of the spanned face).
inline FiniteSpace sphere14() {
  std::vector<std::string> labels = {"1",   "2",   "3",   "4",  "12",
                                     "13",  "14",  "23",  "24", "34",
                                     "123", "124", "134", "234"};
  auto subset = [](const std::string& s, const std::string& t) {
    for (char c : s)
      if (t.find(c) == std::string::npos) return false;
    return true;
  };
  std::vector<std::pair<int, int>> rel;
  for (int i = 0; i < 14; ++i)
    for (int j = 0; j < 14; ++j)
      if (i != j && subset(labels[i], labels[j])) rel.push_back({i, j});
  return FiniteSpace(std::move(labels), rel);
}

// Three points with a minimum: m below x and y. Contractible.
inline FiniteSpace fan3() {
  return FiniteSpace({"m", "x", "y"}, {{0, 1}, {0, 2}});
}

}  // namespace gerbex::fixtures
