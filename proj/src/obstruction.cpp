#include <algorithm>
#include <array>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "gerbex/obstruction.hpp"

namespace gerbex {

namespace {

constexpr long long kObstructionCap = 4'000'000;

void spend(long long& budget, long long cost) {
  budget -= cost;
  if (budget < 0)
    throw StructuralError("work cap exceeded in an obstruction computation");
}

std::string open_str(const FiniteSpace& sp, Open u) {
  std::string s = "{";
  for (int p = 0; p < sp.size(); ++p)
    if (u >> p & 1) {
      if (s.size() > 1) s += ",";
      s += sp.label(p);
    }
  return s + "}";
}

struct Ctx {
  const CentralExtensionOfGerbes* e = nullptr;
  const PrestackGroupoid* G = nullptr;
  const PrestackGroupoid* H = nullptr;
  const CentralSubgroupoidAsSheaf* band = nullptr;
  const SheafOfGroups* N = nullptr;
  const FiniteSpace* sp = nullptr;
  Open X = 0;
};

Ctx make_ctx(const CentralExtensionOfGerbes* e) {
  if (!e || !e->total || !e->base || !e->band || !e->proj.on_obj ||
      !e->proj.on_mor)
    throw StructuralError("lift problem on an incomplete extension");
  Ctx c;
  c.e = e;
  c.G = e->total.get();
  c.H = e->base.get();
  c.band = e->band.get();
  c.N = &e->band->band();
  c.sp = &e->total->space();
  c.X = c.sp->points_mask();
  if (&e->base->space() != c.sp || &c.N->space() != c.sp)
    throw StructuralError("extension pieces live on different spaces");
  return c;
}

void validate_problem1(const Ctx& c, const LiftProblem1& p) {
  if (p.i < 0 || p.i >= c.G->n_objects(c.X) || p.j < 0 ||
      p.j >= c.G->n_objects(c.X))
    throw StructuralError("lift problem object out of range");
  int fi = c.e->proj.on_obj(c.X, p.i);
  int fj = c.e->proj.on_obj(c.X, p.j);
  if (p.h < 0 || p.h >= c.H->n_homs(c.X, fi, fj))
    throw StructuralError("lift problem isomorphism out of range");
}

void validate_problem2(const Ctx& c, const LiftProblem2& p) {
  if (p.j < 0 || p.j >= c.H->n_objects(c.X))
    throw StructuralError("lift problem base object out of range");
}

void check_cover(const Ctx& c, const Cover& cv) {
  validate_cover(*c.sp, cv);
  if (cv.target != c.X)
    throw StructuralError("lifting covers must cover the whole space");
}

// family indices sorted by part count, then parts lexicographically
std::vector<int> cover_order(std::span<const Cover> covers) {
  std::vector<int> idx(covers.size());
  for (size_t k = 0; k < covers.size(); ++k) idx[k] = static_cast<int>(k);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (covers[a].parts.size() != covers[b].parts.size())
      return covers[a].parts.size() < covers[b].parts.size();
    return covers[a].parts < covers[b].parts;
  });
  return idx;
}

int pick(const std::vector<int>& cand, bool randomize, std::mt19937_64& rng) {
  if (cand.empty()) return -1;
  if (!randomize) return cand.front();
  return cand[rng() % cand.size()];
}

// automorphism m of object i over w, read as a band section
std::vector<Elt> band_section(const Ctx& c, Open w, int i, int m) {
  int s = c.band->chi_inv(w, i, m);
  if (s < 0)
    throw StructuralError("internal: a lift discrepancy lies outside the band");
  return c.N->sections(w).elems[s];
}

// band section over w -> automorphism of i
int band_member(const Ctx& c, Open w, int i, std::span<const Elt> sec) {
  int s = c.N->sections(w).index_of(sec);
  if (s < 0) throw StructuralError("internal: not a band section");
  return c.band->chi(w, i)[s];
}

struct IsoChoices {
  bool ok = false;
  std::string reason;
  std::vector<int> lifts;  // g_k over part k
};

IsoChoices choose_iso_lifts(const Ctx& c, const Cover& cv,
                            const LiftProblem1& p, bool randomize,
                            std::mt19937_64& rng, long long& budget) {
  IsoChoices out;
  const int K = cv.size();
  out.lifts.assign(K, -1);
  int fi = c.e->proj.on_obj(c.X, p.i);
  int fj = c.e->proj.on_obj(c.X, p.j);
  for (int k = 0; k < K; ++k) {
    Open u = cv.parts[k];
    int iu = c.G->restrict_obj(c.X, p.i, u);
    int ju = c.G->restrict_obj(c.X, p.j, u);
    int hu = c.H->restrict_mor(c.X, fi, fj, p.h, u);
    int nh = c.G->n_homs(u, iu, ju);
    spend(budget, nh + 1);
    std::vector<int> cand;
    for (int g = 0; g < nh; ++g)
      if (c.e->proj.on_mor(u, iu, ju, g) == hu) cand.push_back(g);
    int g = pick(cand, randomize, rng);
    if (g < 0) {
      out.reason =
          "no lift of the base isomorphism over " + open_str(*c.sp, u);
      return out;
    }
    out.lifts[k] = g;
  }
  out.ok = true;
  return out;
}

// c_{k0,k1} = g_{k1}^{-1} o g_{k0} on overlaps, read through the band
Cochain iso_lift_cocycle(const Ctx& c, const Cover& cv, const LiftProblem1& p,
                         const std::vector<int>& lifts, long long& budget) {
  Cochain z = Cochain::identity(*c.N, cv, 1);
  const int K = cv.size();
  for (int k0 = 0; k0 < K; ++k0)
    for (int k1 = 0; k1 < K; ++k1) {
      if (k0 == k1) continue;
      Open u0 = cv.parts[k0], u1 = cv.parts[k1];
      Open w = u0 & u1;
      if (w == 0) continue;
      spend(budget, 8);
      int i0 = c.G->restrict_obj(c.X, p.i, u0);
      int j0 = c.G->restrict_obj(c.X, p.j, u0);
      int i1 = c.G->restrict_obj(c.X, p.i, u1);
      int j1 = c.G->restrict_obj(c.X, p.j, u1);
      int iw = c.G->restrict_obj(c.X, p.i, w);
      int jw = c.G->restrict_obj(c.X, p.j, w);
      int g0 = c.G->restrict_mor(u0, i0, j0, lifts[k0], w);
      int g1 = c.G->restrict_mor(u1, i1, j1, lifts[k1], w);
      int m = c.G->compose(w, iw, jw, iw, g0, c.G->inverse(w, iw, jw, g1));
      std::array<int, 2> t{k0, k1};
      z.set(t, band_section(c, w, iw, m));
    }
  return z;
}

struct ObjChoices {
  bool ok = false;
  std::string step;  // "object" or "lift" on failure
  std::string reason;
  std::vector<int> objs;                // i_k over part k
  std::vector<int> isos;                // h_k: F(i_k) -> j| over part k
  std::vector<std::vector<int>> trans;  // g_{k0,k1} over overlaps, -1 empty
};

ObjChoices choose_object_lifts(const Ctx& c, const Cover& cv, int j,
                               const ChoicePolicy& pol, std::mt19937_64& rng,
                               long long& budget) {
  ObjChoices out;
  const int K = cv.size();
  out.objs.assign(K, -1);
  out.isos.assign(K, -1);
  for (int k = 0; k < K; ++k) {
    Open u = cv.parts[k];
    int ju = c.H->restrict_obj(c.X, j, u);
    int no = c.G->n_objects(u);
    spend(budget, no + 1);
    std::vector<int> objcand;
    for (int i = 0; i < no; ++i)
      if (c.H->n_homs(u, c.e->proj.on_obj(u, i), ju) > 0) objcand.push_back(i);
    int i = pick(objcand, pol.objects, rng);
    if (i < 0) {
      out.step = "object";
      out.reason = "no local object projects near the base object over " +
                   open_str(*c.sp, u);
      return out;
    }
    out.objs[k] = i;
    int nh = c.H->n_homs(u, c.e->proj.on_obj(u, i), ju);
    std::vector<int> hcand(nh);
    for (int t = 0; t < nh; ++t) hcand[t] = t;
    out.isos[k] = pick(hcand, pol.isos, rng);
  }
  out.trans.assign(K, std::vector<int>(K, -1));
  for (int k0 = 0; k0 < K; ++k0)
    for (int k1 = 0; k1 < K; ++k1) {
      Open w = cv.parts[k0] & cv.parts[k1];
      if (w == 0) continue;
      if (k0 == k1) {
        out.trans[k0][k0] = c.G->identity(w, out.objs[k0]);
        continue;
      }
      Open u0 = cv.parts[k0], u1 = cv.parts[k1];
      int i0w = c.G->restrict_obj(u0, out.objs[k0], w);
      int i1w = c.G->restrict_obj(u1, out.objs[k1], w);
      int f0w = c.e->proj.on_obj(w, i0w);
      int f1w = c.e->proj.on_obj(w, i1w);
      int jw = c.H->restrict_obj(c.X, j, w);
      // h_{k0,k1} = h_{k1}^{-1} o h_{k0} over the overlap
      int a = c.H->restrict_mor(u0, c.e->proj.on_obj(u0, out.objs[k0]),
                                c.H->restrict_obj(c.X, j, u0), out.isos[k0],
                                w);
      int b = c.H->restrict_mor(u1, c.e->proj.on_obj(u1, out.objs[k1]),
                                c.H->restrict_obj(c.X, j, u1), out.isos[k1],
                                w);
      int h01 = c.H->compose(w, f0w, jw, f1w, a, c.H->inverse(w, f1w, jw, b));
      int ng = c.G->n_homs(w, i0w, i1w);
      spend(budget, ng + 1);
      std::vector<int> cand;
      for (int g = 0; g < ng; ++g)
        if (c.e->proj.on_mor(w, i0w, i1w, g) == h01) cand.push_back(g);
      int g = pick(cand, pol.lifts, rng);
      if (g < 0) {
        out.step = "lift";
        out.reason = "no lift of the comparison isomorphism over " +
                     open_str(*c.sp, w);
        return out;
      }
      out.trans[k0][k1] = g;
    }
  out.ok = true;
  return out;
}

// c_{k0,k1,k2} = g_{k0,k2}^{-1} o g_{k1,k2} o g_{k0,k1} on triple overlaps;
// identity transitions on the diagonal make the cocycle normalized.
Cochain transition_cocycle(const Ctx& c, const Cover& cv, const ObjChoices& ch,
                           long long& budget) {
  Cochain z = Cochain::identity(*c.N, cv, 2);
  const int K = cv.size();
  for (int k0 = 0; k0 < K; ++k0)
    for (int k1 = 0; k1 < K; ++k1)
      for (int k2 = 0; k2 < K; ++k2) {
        std::array<int, 3> t{k0, k1, k2};
        Open w = nerve_face(cv, t);
        if (w == 0) continue;
        spend(budget, 12);
        int i0w = c.G->restrict_obj(cv.parts[k0], ch.objs[k0], w);
        int i1w = c.G->restrict_obj(cv.parts[k1], ch.objs[k1], w);
        int i2w = c.G->restrict_obj(cv.parts[k2], ch.objs[k2], w);
        Open w01 = cv.parts[k0] & cv.parts[k1];
        Open w12 = cv.parts[k1] & cv.parts[k2];
        Open w02 = cv.parts[k0] & cv.parts[k2];
        int g01 = c.G->restrict_mor(
            w01, c.G->restrict_obj(cv.parts[k0], ch.objs[k0], w01),
            c.G->restrict_obj(cv.parts[k1], ch.objs[k1], w01),
            ch.trans[k0][k1], w);
        int g12 = c.G->restrict_mor(
            w12, c.G->restrict_obj(cv.parts[k1], ch.objs[k1], w12),
            c.G->restrict_obj(cv.parts[k2], ch.objs[k2], w12),
            ch.trans[k1][k2], w);
        int g02 = c.G->restrict_mor(
            w02, c.G->restrict_obj(cv.parts[k0], ch.objs[k0], w02),
            c.G->restrict_obj(cv.parts[k2], ch.objs[k2], w02),
            ch.trans[k0][k2], w);
        int m = c.G->compose(w, i0w, i1w, i2w, g01, g12);
        m = c.G->compose(w, i0w, i2w, i0w, m,
                         c.G->inverse(w, i0w, i2w, g02));
        z.set(t, band_section(c, w, i0w, m));
      }
  return z;
}

// first cover part containing each minimal open
std::vector<int> minimal_assignment(const Cover& mc, const Cover& cv) {
  std::vector<int> phi(mc.size(), -1);
  for (int l = 0; l < mc.size(); ++l) {
    for (int k = 0; k < cv.size(); ++k)
      if (open_subset(mc.parts[l], cv.parts[k])) {
        phi[l] = k;
        break;
      }
    if (phi[l] < 0)
      throw StructuralError("internal: a minimal open escapes the cover");
  }
  return phi;
}

}  // namespace

Class1Result obstruction_class1(const LiftProblem1& p,
                                std::span<const Cover> covers,
                                const ChoicePolicy& pol) {
  Ctx c = make_ctx(p.ext);
  validate_problem1(c, p);
  long long budget = kObstructionCap;
  std::mt19937_64 rng(pol.seed);
  Class1Result out;
  std::string last;
  for (int k : cover_order(covers)) {
    const Cover& cv = covers[k];
    check_cover(c, cv);
    IsoChoices ch = choose_iso_lifts(c, cv, p, pol.lifts, rng, budget);
    if (!ch.ok) {
      last = ch.reason;
      continue;
    }
    Cochain z = iso_lift_cocycle(c, cv, p, ch.lifts, budget);
    if (CheckResult cz = is_cocycle(z); !cz)
      throw StructuralError(
          "internal: lift discrepancies are not a cocycle: " + cz.reason);
    out.found = true;
    out.rep = std::move(z);
    out.cover = cv;
    return out;
  }
  out.reason = covers.empty()
                   ? "the cover family is empty"
                   : "no cover in the family admits local lifts of the "
                     "isomorphism; last failure: " +
                         last;
  return out;
}

Class2Result obstruction_class2(const LiftProblem2& p,
                                std::span<const Cover> covers,
                                const ChoicePolicy& pol) {
  Ctx c = make_ctx(p.ext);
  validate_problem2(c, p);
  long long budget = kObstructionCap;
  std::mt19937_64 rng(pol.seed);
  Class2Result out;
  for (int k : cover_order(covers)) {
    const Cover& cv = covers[k];
    check_cover(c, cv);
    ObjChoices ch = choose_object_lifts(c, cv, p.j, pol, rng, budget);
    if (!ch.ok) {
      out.failed_step = ch.step;
      out.reason = ch.reason;
      out.cover = cv;
      continue;
    }
    Cochain z = transition_cocycle(c, cv, ch, budget);
    if (CheckResult cz = is_cocycle(z); !cz)
      throw StructuralError(
          "internal: transition discrepancies are not a cocycle: " +
          cz.reason);
    out.defined = true;
    out.failed_step.clear();
    out.reason.clear();
    out.rep = std::move(z);
    out.cover = cv;
    return out;
  }
  if (covers.empty()) {
    out.failed_step = "cover";
    out.reason = "the cover family is empty";
  } else {
    out.reason = "undefined on this cover family: " + out.reason;
  }
  return out;
}

IsoLift lift_isomorphism(const LiftProblem1& p, std::span<const Cover> covers) {
  Ctx c = make_ctx(p.ext);
  validate_problem1(c, p);
  long long budget = kObstructionCap;
  std::mt19937_64 rng(0);
  IsoLift out;
  Cover used;
  std::vector<int> lifts;
  bool got = false;
  std::string last;
  for (int k : cover_order(covers)) {
    const Cover& cv = covers[k];
    check_cover(c, cv);
    IsoChoices ch = choose_iso_lifts(c, cv, p, false, rng, budget);
    if (ch.ok) {
      used = cv;
      lifts = std::move(ch.lifts);
      got = true;
      break;
    }
    last = ch.reason;
  }
  if (!got) {
    out.status = IsoLift::Status::NoCover;
    out.reason = covers.empty()
                     ? "the cover family is empty"
                     : "no cover in the family admits local lifts of the "
                       "isomorphism; last failure: " +
                           last;
    return out;
  }
  // restrict the lifts to the minimal open cover, where the coboundary
  // equation is solved
  Cover mc = minimal_open_cover(*c.sp, c.X);
  const int L = mc.size();
  std::vector<int> phi = minimal_assignment(mc, used);
  std::vector<int> mlifts(L, -1);
  for (int l = 0; l < L; ++l) {
    Open u = used.parts[phi[l]];
    int iu = c.G->restrict_obj(c.X, p.i, u);
    int ju = c.G->restrict_obj(c.X, p.j, u);
    mlifts[l] = c.G->restrict_mor(u, iu, ju, lifts[phi[l]], mc.parts[l]);
  }
  Cochain z = iso_lift_cocycle(c, mc, p, mlifts, budget);
  std::optional<Cochain> b = solve_coboundary(z);
  if (!b) {
    out.status = IsoLift::Status::Obstructed;
    out.cls = std::move(z);
    out.reason = "the degree-1 class is nontrivial";
    return out;
  }
  // corrected lifts g_l o chi(b_l)^{-1} agree on overlaps and glue
  std::vector<int> corr(L);
  for (int l = 0; l < L; ++l) {
    Open v = mc.parts[l];
    int iv = c.G->restrict_obj(c.X, p.i, v);
    int jv = c.G->restrict_obj(c.X, p.j, v);
    std::array<int, 1> t{l};
    int f = band_member(c, v, iv, b->at(t));
    corr[l] = c.G->compose(v, iv, iv, jv, c.G->inverse(v, iv, iv, f),
                           mlifts[l]);
  }
  int ng = c.G->n_homs(c.X, p.i, p.j);
  for (int g = 0; g < ng; ++g) {
    spend(budget, L + 1);
    bool match = true;
    for (int l = 0; l < L && match; ++l)
      match = c.G->restrict_mor(c.X, p.i, p.j, g, mc.parts[l]) == corr[l];
    if (!match) continue;
    if (c.e->proj.on_mor(c.X, p.i, p.j, g) != p.h)
      throw StructuralError(
          "internal: a glued lift projects to a different isomorphism; the "
          "base hom presheaf is not separated");
    out.status = IsoLift::Status::Lifted;
    out.g = g;
    out.reason.clear();
    return out;
  }
  throw StructuralError(
      "a corrected compatible family of lifts does not glue; the total "
      "prestack violates descent for morphisms");
}

ObjectLift lift_object(const LiftProblem2& p, std::span<const Cover> covers) {
  Ctx c = make_ctx(p.ext);
  validate_problem2(c, p);
  long long budget = kObstructionCap;
  std::mt19937_64 rng(0);
  ChoicePolicy det;
  ObjectLift out;
  Cover used;
  ObjChoices ch;
  bool got = false;
  std::string last;
  for (int k : cover_order(covers)) {
    const Cover& cv = covers[k];
    check_cover(c, cv);
    ObjChoices t = choose_object_lifts(c, cv, p.j, det, rng, budget);
    if (t.ok) {
      used = cv;
      ch = std::move(t);
      got = true;
      break;
    }
    last = t.reason;
  }
  if (!got) {
    out.status = ObjectLift::Status::Undefined;
    out.reason = covers.empty()
                     ? "the cover family is empty"
                     : "undefined on this cover family: " + last;
    return out;
  }
  // refine every choice to the minimal open cover
  Cover mc = minimal_open_cover(*c.sp, c.X);
  const int L = mc.size();
  std::vector<int> phi = minimal_assignment(mc, used);
  ObjChoices m;
  m.objs.assign(L, -1);
  m.isos.assign(L, -1);
  m.trans.assign(L, std::vector<int>(L, -1));
  for (int l = 0; l < L; ++l) {
    Open v = mc.parts[l], u = used.parts[phi[l]];
    m.objs[l] = c.G->restrict_obj(u, ch.objs[phi[l]], v);
    m.isos[l] = c.H->restrict_mor(u, c.e->proj.on_obj(u, ch.objs[phi[l]]),
                                  c.H->restrict_obj(c.X, p.j, u),
                                  ch.isos[phi[l]], v);
  }
  for (int l0 = 0; l0 < L; ++l0)
    for (int l1 = 0; l1 < L; ++l1) {
      Open w = mc.parts[l0] & mc.parts[l1];
      if (w == 0) continue;
      int k0 = phi[l0], k1 = phi[l1];
      Open wu = used.parts[k0] & used.parts[k1];
      int i0 = c.G->restrict_obj(used.parts[k0], ch.objs[k0], wu);
      int i1 = c.G->restrict_obj(used.parts[k1], ch.objs[k1], wu);
      m.trans[l0][l1] = c.G->restrict_mor(wu, i0, i1, ch.trans[k0][k1], w);
    }
  Cochain z = transition_cocycle(c, mc, m, budget);
  std::optional<Cochain> b = solve_coboundary(z);
  if (!b) {
    out.status = ObjectLift::Status::Obstructed;
    out.cls = std::move(z);
    out.reason = "the degree-2 class is nontrivial";
    return out;
  }
  // corrected transitions g_{l0,l1} o chi(b_{l0,l1})^{-1} form a descent
  // datum for the total prestack
  std::vector<std::vector<int>> corr(L, std::vector<int>(L, -1));
  for (int l0 = 0; l0 < L; ++l0)
    for (int l1 = 0; l1 < L; ++l1) {
      Open w = mc.parts[l0] & mc.parts[l1];
      if (w == 0) continue;
      int i0w = c.G->restrict_obj(mc.parts[l0], m.objs[l0], w);
      int i1w = c.G->restrict_obj(mc.parts[l1], m.objs[l1], w);
      std::array<int, 2> t{l0, l1};
      int f = band_member(c, w, i0w, b->at(t));
      corr[l0][l1] = c.G->compose(w, i0w, i0w, i1w,
                                  c.G->inverse(w, i0w, i0w, f),
                                  m.trans[l0][l1]);
    }
  // glue: a global object i with comparisons g'_l in hom(V_l, i_l, i|) whose
  // discrepancies g'_{l1}^{-1} o g'_{l0} are the corrected transitions
  int no = c.G->n_objects(c.X);
  for (int gi = 0; gi < no; ++gi) {
    std::vector<int> gl(L, -1);
    std::function<bool(int)> rec = [&](int l) -> bool {
      if (l == L) return true;
      Open v = mc.parts[l];
      int iv = c.G->restrict_obj(c.X, gi, v);
      int nh = c.G->n_homs(v, m.objs[l], iv);
      for (int g = 0; g < nh; ++g) {
        spend(budget, L);
        bool fit = true;
        for (int l2 = 0; l2 < l && fit; ++l2) {
          Open w = mc.parts[l2] & v;
          if (w == 0) continue;
          int i2w = c.G->restrict_obj(mc.parts[l2], m.objs[l2], w);
          int ilw = c.G->restrict_obj(v, m.objs[l], w);
          int iw = c.G->restrict_obj(c.X, gi, w);
          int a = c.G->restrict_mor(mc.parts[l2], m.objs[l2],
                                    c.G->restrict_obj(c.X, gi, mc.parts[l2]),
                                    gl[l2], w);
          int bb = c.G->restrict_mor(v, m.objs[l], iv, g, w);
          int lhs =
              c.G->compose(w, i2w, iw, ilw, a, c.G->inverse(w, ilw, iw, bb));
          fit = lhs == corr[l2][l];
        }
        if (!fit) continue;
        gl[l] = g;
        if (rec(l + 1)) return true;
        gl[l] = -1;
      }
      return false;
    };
    if (!rec(0)) continue;
    // e_l = F(g'_l) o h_l^{-1} glue to e: j -> F(i)
    int fgi = c.e->proj.on_obj(c.X, gi);
    std::vector<int> el(L);
    for (int l = 0; l < L; ++l) {
      Open v = mc.parts[l];
      int iv = c.G->restrict_obj(c.X, gi, v);
      int fiv = c.e->proj.on_obj(v, iv);
      int fil = c.e->proj.on_obj(v, m.objs[l]);
      int jv = c.H->restrict_obj(c.X, p.j, v);
      int fg = c.e->proj.on_mor(v, m.objs[l], iv, gl[l]);
      el[l] = c.H->compose(v, jv, fil, fiv,
                           c.H->inverse(v, fil, jv, m.isos[l]), fg);
    }
    int ne = c.H->n_homs(c.X, p.j, fgi);
    for (int eid = 0; eid < ne; ++eid) {
      spend(budget, L + 1);
      bool match = true;
      for (int l = 0; l < L && match; ++l)
        match = c.H->restrict_mor(c.X, p.j, fgi, eid, mc.parts[l]) == el[l];
      if (match) {
        out.status = ObjectLift::Status::Lifted;
        out.i = gi;
        out.e = eid;
        out.reason.clear();
        return out;
      }
    }
    throw StructuralError(
        "local comparisons of a glued lift do not glue in the base; the base "
        "prestack violates descent for morphisms");
  }
  throw StructuralError(
      "a corrected descent datum does not glue; the total prestack violates "
      "descent for objects");
}

CheckResult isomorphic_objects_same_class(const LiftProblem2& p,
                                          const LiftProblem2& q,
                                          std::span<const Cover> covers,
                                          int iso) {
  Ctx c = make_ctx(p.ext);
  if (q.ext != p.ext)
    return CheckResult::fail("the two problems pose different extensions");
  validate_problem2(c, p);
  validate_problem2(c, q);
  int nh = c.H->n_homs(c.X, p.j, q.j);
  if (iso >= 0) {
    if (iso >= nh)
      throw StructuralError("certifying isomorphism out of range");
  } else if (nh == 0) {
    return CheckResult::fail(
        "the base objects are not isomorphic over the whole space");
  }
  Class2Result a = obstruction_class2(p, covers);
  if (!a.defined)
    return CheckResult::fail("first class undefined: " + a.reason);
  Class2Result b = obstruction_class2(q, covers);
  if (!b.defined)
    return CheckResult::fail("second class undefined: " + b.reason);
  if (!classes_equal(*a.rep, *b.rep))
    return CheckResult::fail(
        "isomorphic base objects produced different classes");
  return CheckResult::pass();
}

CheckResult is_extension_square(const ExtensionSquare& s,
                                std::span<const Open> opens) {
  Ctx up = make_ctx(s.upstairs);
  Ctx dn = make_ctx(s.downstairs);
  if (up.sp != dn.sp)
    return CheckResult::fail("the extensions live on different spaces");
  if (s.d.source != up.G || s.d.target != dn.G)
    return CheckResult::fail("the total morphism does not join the totals");
  if (s.e.source != up.H || s.e.target != dn.H)
    return CheckResult::fail("the base morphism does not join the bases");
  if (CheckResult r = is_prestack_morphism(s.d, opens); !r)
    return CheckResult::fail("total morphism: " + r.reason);
  if (CheckResult r = is_prestack_morphism(s.e, opens); !r)
    return CheckResult::fail("base morphism: " + r.reason);
  for (Open u : opens) {
    int no = up.G->n_objects(u);
    for (int i = 0; i < no; ++i) {
      if (s.e.on_obj(u, up.e->proj.on_obj(u, i)) !=
          dn.e->proj.on_obj(u, s.d.on_obj(u, i)))
        return CheckResult::fail(
            "the square does not commute on an object over " +
            open_str(*up.sp, u));
      for (int j = 0; j < no; ++j) {
        int fi = up.e->proj.on_obj(u, i);
        int fj = up.e->proj.on_obj(u, j);
        int nh = up.G->n_homs(u, i, j);
        for (int f = 0; f < nh; ++f)
          if (s.e.on_mor(u, fi, fj, up.e->proj.on_mor(u, i, j, f)) !=
              dn.e->proj.on_mor(u, s.d.on_obj(u, i), s.d.on_obj(u, j),
                                s.d.on_mor(u, i, j, f)))
            return CheckResult::fail(
                "the square does not commute on a morphism over " +
                open_str(*up.sp, u));
      }
      for (int mor : up.band->chi(u, i))
        if (dn.band->chi_inv(u, s.d.on_obj(u, i),
                             s.d.on_mor(u, i, i, mor)) < 0)
          return CheckResult::fail("the total morphism leaves the band over " +
                                   open_str(*up.sp, u));
    }
  }
  return CheckResult::pass();
}

SheafHom induced_band_map(const ExtensionSquare& s) {
  Ctx up = make_ctx(s.upstairs);
  Ctx dn = make_ctx(s.downstairs);
  if (up.sp != dn.sp)
    throw StructuralError("the extensions live on different spaces");
  if (s.d.source != up.G || s.d.target != dn.G)
    throw StructuralError("the total morphism does not join the totals");
  int n = up.sp->size();
  std::vector<std::vector<Elt>> maps(n);
  for (int x = 0; x < n; ++x) {
    Open ux = up.sp->minimal_open(x);
    if (up.G->n_objects(ux) == 0)
      throw StructuralError("no local object near a point; not a gerbe");
    int order = up.N->stalk(x).order();
    maps[x].resize(order);
    int di = s.d.on_obj(ux, 0);
    int cx = dn.N->coord_of(ux, x);
    for (Elt g = 0; g < order; ++g) {
      std::array<Elt, 1> seed{g};
      auto sec = up.N->extend_from_minimal(ux, seed);
      if (!sec)
        throw StructuralError(
            "internal: a stalk value fails to extend over its minimal open");
      int si = up.N->sections(ux).index_of(*sec);
      if (si < 0)
        throw StructuralError("internal: extension is not a section");
      int mor = up.band->chi(ux, 0)[si];
      int sj = dn.band->chi_inv(ux, di, s.d.on_mor(ux, 0, 0, mor));
      if (sj < 0)
        throw StructuralError(
            "the total morphism does not carry the band into the band");
      maps[x][g] = dn.N->sections(ux).elems[sj][cx];
    }
  }
  return SheafHom(*up.N, *dn.N, std::move(maps));
}

CheckResult pushforward_matches_class1(const ExtensionSquare& s,
                                       const LiftProblem1& p,
                                       std::span<const Cover> covers) {
  if (p.ext != s.upstairs)
    throw StructuralError("the problem does not pose the upstairs extension");
  Ctx up = make_ctx(s.upstairs);
  Class1Result a = obstruction_class1(p, covers);
  if (!a.found)
    return CheckResult::fail("upstairs class not computed: " + a.reason);
  SheafHom dm = induced_band_map(s);
  Cochain pushed = apply_hom(dm, *a.rep);
  LiftProblem1 q;
  q.ext = s.downstairs;
  q.i = s.d.on_obj(up.X, p.i);
  q.j = s.d.on_obj(up.X, p.j);
  int fi = up.e->proj.on_obj(up.X, p.i);
  int fj = up.e->proj.on_obj(up.X, p.j);
  q.h = s.e.on_mor(up.X, fi, fj, p.h);
  Class1Result b = obstruction_class1(q, covers);
  if (!b.found)
    return CheckResult::fail("downstairs class not computed: " + b.reason);
  if (!classes_equal(pushed, *b.rep))
    return CheckResult::fail(
        "the pushed class differs from the class downstairs");
  return CheckResult::pass();
}

CheckResult pushforward_matches_class2(const ExtensionSquare& s,
                                       const LiftProblem2& p,
                                       std::span<const Cover> covers) {
  if (p.ext != s.upstairs)
    throw StructuralError("the problem does not pose the upstairs extension");
  Ctx up = make_ctx(s.upstairs);
  Class2Result a = obstruction_class2(p, covers);
  if (!a.defined)
    return CheckResult::fail("upstairs class undefined: " + a.reason);
  SheafHom dm = induced_band_map(s);
  Cochain pushed = apply_hom(dm, *a.rep);
  LiftProblem2 q;
  q.ext = s.downstairs;
  q.j = s.e.on_obj(up.X, p.j);
  Class2Result b = obstruction_class2(q, covers);
  if (!b.defined)
    return CheckResult::fail("downstairs class undefined: " + b.reason);
  if (!classes_equal(pushed, *b.rep))
    return CheckResult::fail(
        "the pushed class differs from the class downstairs");
  return CheckResult::pass();
}

bool band_acyclic(const CentralExtensionOfGerbes& ext, Open u) {
  Ctx c = make_ctx(&ext);
  if (!c.sp->is_open(u)) throw StructuralError("not an open set");
  if (u == 0) return true;
  return cohomology_group(*c.N, minimal_open_cover(*c.sp, u), 1).trivial();
}

CheckResult acyclic_surjectivity(const CentralExtensionOfGerbes& ext, Open u) {
  Ctx c = make_ctx(&ext);
  if (!band_acyclic(ext, u))
    return CheckResult{true, "skipped: degree-1 band cohomology of " +
                                 open_str(*c.sp, u) + " does not vanish"};
  long long budget = kObstructionCap;
  int no = c.G->n_objects(u);
  for (int a = 0; a < no; ++a)
    for (int b = 0; b < no; ++b) {
      int fa = c.e->proj.on_obj(u, a);
      int fb = c.e->proj.on_obj(u, b);
      int nh = c.H->n_homs(u, fa, fb);
      int ng = c.G->n_homs(u, a, b);
      spend(budget, static_cast<long long>(nh) * (ng + 1) + 1);
      for (int m = 0; m < nh; ++m) {
        bool hit = false;
        for (int g = 0; g < ng && !hit; ++g)
          hit = c.e->proj.on_mor(u, a, b, g) == m;
        if (!hit)
          return CheckResult::fail(
              "a base isomorphism over " + open_str(*c.sp, u) +
              " between the images of objects " + std::to_string(a) + " and " +
              std::to_string(b) + " has no lift");
      }
    }
  return CheckResult::pass();
}

CheckResult classes_defined_on_acyclic_family(
    const CentralExtensionOfGerbes& ext, std::span<const Cover> covers) {
  Ctx c = make_ctx(&ext);
  if (covers.empty()) return CheckResult::fail("the cover family is empty");
  long long budget = kObstructionCap;
  for (const Cover& cv : covers) {
    check_cover(c, cv);
    // close the parts under intersection: every finite intersection of parts
    // must be band-acyclic
    std::set<Open> inters(cv.parts.begin(), cv.parts.end());
    bool grew = true;
    while (grew) {
      grew = false;
      std::vector<Open> cur(inters.begin(), inters.end());
      spend(budget, static_cast<long long>(cur.size()) * cv.size());
      for (Open a : cur)
        for (Open b : cv.parts)
          if (inters.insert(a & b).second) grew = true;
    }
    for (Open w : inters) {
      if (w == 0) continue;
      if (!band_acyclic(ext, w))
        return CheckResult::fail("part intersection " + open_str(*c.sp, w) +
                                 " is not band-acyclic");
    }
  }
  int nb = c.H->n_objects(c.X);
  for (int j = 0; j < nb; ++j) {
    LiftProblem2 p{&ext, j};
    Class2Result r = obstruction_class2(p, covers);
    if (!r.defined)
      return CheckResult::fail("class undefined for base object " +
                               std::to_string(j) + ": " + r.reason);
  }
  return CheckResult::pass();
}

ParallelIsoSearch distinct_classes_for_parallel_isos(
    const CentralExtensionOfGerbes& ext, std::span<const Cover> covers,
    long long max_classes) {
  Ctx c = make_ctx(&ext);
  ParallelIsoSearch out;
  int no = c.G->n_objects(c.X);
  for (int i = 0; i < no; ++i)
    for (int j = 0; j < no; ++j) {
      int fi = c.e->proj.on_obj(c.X, i);
      int fj = c.e->proj.on_obj(c.X, j);
      int nh = c.H->n_homs(c.X, fi, fj);
      std::optional<Cochain> first;
      int firsth = -1;
      for (int h = 0; h < nh; ++h) {
        if (out.checked >= max_classes) return out;
        LiftProblem1 p{&ext, i, j, h};
        Class1Result r = obstruction_class1(p, covers);
        ++out.checked;
        if (!r.found) continue;
        if (!first) {
          first = std::move(r.rep);
          firsth = h;
          continue;
        }
        if (!classes_equal(*first, *r.rep)) {
          out.found = true;
          out.i = i;
          out.j = j;
          out.h0 = firsth;
          out.h1 = h;
          return out;
        }
      }
    }
  out.complete = true;
  return out;
}

}  // namespace gerbex
