#pragma once

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace gerbex {

// Thrown on malformed inputs and broken structural invariants (bad tables,
// mismatched spaces, non-posets, ...). Domain outcomes that the theory itself
// produces (obstructed, undefined, no liftable cover) are returned as values,
// never thrown.
struct StructuralError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An open subset of a finite space, as a bitmask over point ids (point p in
// the set iff bit p is set). Validity (up-closedness) is relative to a space.
using Open = std::uint32_t;

inline int popcount(Open u) { return std::popcount(u); }

inline bool open_subset(Open a, Open b) { return (a & ~b) == 0; }

// Verdict of a structural predicate, with a human-readable reason on failure.
struct CheckResult {
  bool ok = true;
  std::string reason;
  explicit operator bool() const { return ok; }
  static CheckResult pass() { return {true, ""}; }
  static CheckResult fail(std::string why) { return {false, std::move(why)}; }
};

}  // namespace gerbex
