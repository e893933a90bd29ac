#include <algorithm>
#include <memory>

#include "gerbex/gerbe.hpp"

namespace gerbex {

namespace {

constexpr long long kQuotientCap = 4'000'000;

void bump(long long& work) {
  if (++work > kQuotientCap)
    throw StructuralError("quotient construction exceeded the work cap");
}

// Objects as in the ambient gerbe; morphisms over u are families of
// automorphism-orbit classes over the minimal opens below u, compatible
// under restriction (the sheafification of the hom quotient).
class HomQuotient : public PrestackGroupoid {
 public:
  HomQuotient(const PrestackGroupoid& p, NormalSubgroupoid n)
      : p_(&p), n_(std::move(n)) {}

  const FiniteSpace& space() const override { return p_->space(); }
  int n_objects(Open u) const override { return p_->n_objects(u); }
  int n_homs(Open u, int i, int j) const override {
    return static_cast<int>(families(u, i, j).size());
  }

  int compose(Open u, int i, int j, int k, int f, int g) const override {
    const std::vector<int>& ff = families(u, i, j)[f];
    const std::vector<int>& gg = families(u, j, k)[g];
    const FiniteSpace& sp = p_->space();
    std::vector<int> pts = sp.points_of(u);
    std::vector<int> out(pts.size());
    for (size_t a = 0; a < pts.size(); ++a) {
      Open ux = sp.minimal_open(pts[a]);
      int ix = p_->restrict_obj(u, i, ux), jx = p_->restrict_obj(u, j, ux),
          kx = p_->restrict_obj(u, k, ux);
      int rf = classes(ux, ix, jx).reps[ff[a]];
      int rg = classes(ux, jx, kx).reps[gg[a]];
      out[a] = classes(ux, ix, kx).class_of[p_->compose(ux, ix, jx, kx, rf,
                                                        rg)];
    }
    return family_index(u, i, k, out);
  }

  int identity(Open u, int i) const override {
    const FiniteSpace& sp = p_->space();
    std::vector<int> pts = sp.points_of(u);
    std::vector<int> out(pts.size());
    for (size_t a = 0; a < pts.size(); ++a) {
      Open ux = sp.minimal_open(pts[a]);
      int ix = p_->restrict_obj(u, i, ux);
      out[a] = classes(ux, ix, ix).class_of[p_->identity(ux, ix)];
    }
    return family_index(u, i, i, out);
  }

  int inverse(Open u, int i, int j, int f) const override {
    const std::vector<int>& ff = families(u, i, j)[f];
    const FiniteSpace& sp = p_->space();
    std::vector<int> pts = sp.points_of(u);
    std::vector<int> out(pts.size());
    for (size_t a = 0; a < pts.size(); ++a) {
      Open ux = sp.minimal_open(pts[a]);
      int ix = p_->restrict_obj(u, i, ux), jx = p_->restrict_obj(u, j, ux);
      int rf = classes(ux, ix, jx).reps[ff[a]];
      out[a] = classes(ux, jx, ix).class_of[p_->inverse(ux, ix, jx, rf)];
    }
    return family_index(u, j, i, out);
  }

  int restrict_obj(Open u, int i, Open v) const override {
    return p_->restrict_obj(u, i, v);
  }

  int restrict_mor(Open u, int i, int j, int f, Open v) const override {
    if (v == u) return f;
    const std::vector<int>& ff = families(u, i, j)[f];
    const FiniteSpace& sp = p_->space();
    std::vector<int> pts = sp.points_of(u);
    std::vector<int> out;
    for (size_t a = 0; a < pts.size(); ++a)
      if (v & (Open{1} << pts[a])) out.push_back(ff[a]);
    return family_index(v, p_->restrict_obj(u, i, v),
                        p_->restrict_obj(u, j, v), out);
  }

  // the sheafified class of an ambient morphism
  int class_family_of(Open u, int i, int j, int mor) const {
    const FiniteSpace& sp = p_->space();
    std::vector<int> pts = sp.points_of(u);
    std::vector<int> out(pts.size());
    for (size_t a = 0; a < pts.size(); ++a) {
      Open ux = sp.minimal_open(pts[a]);
      int ix = p_->restrict_obj(u, i, ux), jx = p_->restrict_obj(u, j, ux);
      out[a] = classes(ux, ix, jx)
                   .class_of[p_->restrict_mor(u, i, j, mor, ux)];
    }
    return family_index(u, i, j, out);
  }

  const PrestackGroupoid& ambient() const { return *p_; }

 private:
  struct Classes {
    std::vector<int> reps;      // smallest morphism id per class, ascending
    std::vector<int> class_of;  // per morphism id
  };

  // orbit classes of hom(ux, a, b) under composition with members; checks
  // that left and right orbits agree (normality at this open)
  const Classes& classes(Open ux, int a, int b) const {
    auto key = std::make_tuple(ux, a, b);
    auto it = cls_.find(key);
    if (it != cls_.end()) return it->second;
    Classes cl;
    int nm = p_->n_homs(ux, a, b);
    cl.class_of.assign(nm, -1);
    std::vector<int> left = n_.members(ux, b);
    std::vector<int> right = n_.members(ux, a);
    for (int f = 0; f < nm; ++f) {
      if (cl.class_of[f] != -1) continue;
      int ci = static_cast<int>(cl.reps.size());
      cl.reps.push_back(f);
      for (int nu : left) cl.class_of[p_->compose(ux, a, b, b, f, nu)] = ci;
      for (int mu : right)
        if (cl.class_of[p_->compose(ux, a, a, b, mu, f)] != ci)
          throw StructuralError(
              "subgroupoid is not normal: one-sided orbits differ");
    }
    return cls_.emplace(key, std::move(cl)).first->second;
  }

  const std::vector<std::vector<int>>& families(Open u, int i, int j) const {
    auto key = std::make_tuple(u, i, j);
    auto it = fams_.find(key);
    if (it != fams_.end()) return it->second;
    const FiniteSpace& sp = p_->space();
    std::vector<int> pts = sp.points_of(u);
    int m = static_cast<int>(pts.size());
    std::vector<std::vector<int>> out;
    std::vector<int> cur(m, 0);
    long long work = 0;
    auto rec = [&](auto&& self, int a) -> void {
      if (a == m) {
        out.push_back(cur);
        return;
      }
      Open ua = sp.minimal_open(pts[a]);
      int ia = p_->restrict_obj(u, i, ua), ja = p_->restrict_obj(u, j, ua);
      int count = static_cast<int>(classes(ua, ia, ja).reps.size());
      for (int c = 0; c < count; ++c) {
        bump(work);
        cur[a] = c;
        bool ok = true;
        for (int b = 0; b < a && ok; ++b) {
          // classes must agree under restriction along the order
          int xa = pts[a], xb = pts[b];
          if (sp.leq(xb, xa))
            ok = restricted_class(u, i, j, pts[b], cur[b], xa) == c;
          else if (sp.leq(xa, xb))
            ok = restricted_class(u, i, j, pts[a], c, xb) == cur[b];
        }
        if (ok) self(self, a + 1);
      }
    };
    rec(rec, 0);
    return fams_.emplace(key, std::move(out)).first->second;
  }

  // class at U_y of (the representative of) class c at U_x, for x <= y
  int restricted_class(Open u, int i, int j, int x, int c, int y) const {
    const FiniteSpace& sp = p_->space();
    Open ux = sp.minimal_open(x), uy = sp.minimal_open(y);
    int ix = p_->restrict_obj(u, i, ux), jx = p_->restrict_obj(u, j, ux);
    int iy = p_->restrict_obj(u, i, uy), jy = p_->restrict_obj(u, j, uy);
    int rep = classes(ux, ix, jx).reps[c];
    return classes(uy, iy, jy).class_of[p_->restrict_mor(ux, ix, jx, rep,
                                                         uy)];
  }

  int family_index(Open u, int i, int j, const std::vector<int>& fam) const {
    const auto& list = families(u, i, j);
    auto it = std::lower_bound(list.begin(), list.end(), fam);
    if (it == list.end() || *it != fam)
      throw StructuralError("internal: quotient class family is missing");
    return static_cast<int>(it - list.begin());
  }

  const PrestackGroupoid* p_;
  NormalSubgroupoid n_;
  mutable std::map<std::tuple<Open, int, int>, Classes> cls_;
  mutable std::map<std::tuple<Open, int, int>, std::vector<std::vector<int>>>
      fams_;
};

// Objects over u are the descent data of the inner prestack over the minimal
// open cover of u (objects over each minimal open plus transition classes
// with the cocycle condition); morphisms are compatible families. All data
// are kept as objects: restriction is then literal sub-selection, which is
// strictly functorial, and equivalent data are isomorphic via hom families.
class Stackified : public PrestackGroupoid {
 public:
  explicit Stackified(std::shared_ptr<const HomQuotient> q)
      : q_(std::move(q)) {}

  const FiniteSpace& space() const override { return q_->space(); }

  int n_objects(Open u) const override {
    return static_cast<int>(data(u).encs.size());
  }

  int n_homs(Open u, int i, int j) const override {
    return static_cast<int>(homs(u, i, j).size());
  }

  int compose(Open u, int i, int j, int k, int f, int g) const override {
    const Layout& lay = layout(u);
    const std::vector<int>& A = data(u).encs[i];
    const std::vector<int>& B = data(u).encs[j];
    const std::vector<int>& C = data(u).encs[k];
    const std::vector<int>& ff = homs(u, i, j)[f];
    const std::vector<int>& gg = homs(u, j, k)[g];
    std::vector<int> out(lay.pts.size());
    for (size_t a = 0; a < lay.pts.size(); ++a) {
      Open ux = lay.mins[a];
      out[a] = q_->compose(ux, A[a], B[a], C[a], ff[a], gg[a]);
    }
    return hom_index(u, i, k, out);
  }

  int identity(Open u, int i) const override {
    const Layout& lay = layout(u);
    const std::vector<int>& A = data(u).encs[i];
    std::vector<int> out(lay.pts.size());
    for (size_t a = 0; a < lay.pts.size(); ++a)
      out[a] = q_->identity(lay.mins[a], A[a]);
    return hom_index(u, i, i, out);
  }

  int inverse(Open u, int i, int j, int f) const override {
    const Layout& lay = layout(u);
    const std::vector<int>& A = data(u).encs[i];
    const std::vector<int>& B = data(u).encs[j];
    const std::vector<int>& ff = homs(u, i, j)[f];
    std::vector<int> out(lay.pts.size());
    for (size_t a = 0; a < lay.pts.size(); ++a)
      out[a] = q_->inverse(lay.mins[a], A[a], B[a], ff[a]);
    return hom_index(u, j, i, out);
  }

  int restrict_obj(Open u, int i, Open v) const override {
    if (v == u) return i;
    std::vector<int> enc = sub_encoding(u, data(u).encs[i], v);
    auto it = data(v).index.find(enc);
    if (it == data(v).index.end())
      throw StructuralError("internal: restricted descent datum is missing");
    return it->second;
  }

  int restrict_mor(Open u, int i, int j, int f, Open v) const override {
    if (v == u) return f;
    const Layout& lay = layout(u);
    const std::vector<int>& ff = homs(u, i, j)[f];
    std::vector<int> out;
    for (size_t a = 0; a < lay.pts.size(); ++a)
      if (v & (Open{1} << lay.pts[a])) out.push_back(ff[a]);
    return hom_index(v, restrict_obj(u, i, v), restrict_obj(u, j, v), out);
  }

  // the descent datum induced by an inner object over u
  int induced_object(Open u, int inner) const {
    const Layout& lay = layout(u);
    std::vector<int> enc;
    for (size_t a = 0; a < lay.pts.size(); ++a)
      enc.push_back(q_->restrict_obj(u, inner, lay.mins[a]));
    for (const auto& pr : lay.pairs) {
      Open w = pr.overlap;
      enc.push_back(q_->identity(w, q_->restrict_obj(u, inner, w)));
    }
    auto it = data(u).index.find(enc);
    if (it == data(u).index.end())
      throw StructuralError("internal: induced descent datum is missing");
    return it->second;
  }

  // the morphism of induced data coming from an inner morphism over u
  int induced_mor(Open u, int inner_i, int inner_j, int inner_f) const {
    const Layout& lay = layout(u);
    std::vector<int> out(lay.pts.size());
    for (size_t a = 0; a < lay.pts.size(); ++a)
      out[a] = q_->restrict_mor(u, inner_i, inner_j, inner_f, lay.mins[a]);
    return hom_index(u, induced_object(u, inner_i),
                     induced_object(u, inner_j), out);
  }

 private:
  struct PairInfo {
    int a = 0, b = 0;  // positions with a < b
    Open overlap = 0;
  };
  struct Layout {
    std::vector<int> pts;
    std::vector<Open> mins;
    std::vector<PairInfo> pairs;  // increasing, nonempty overlaps only
  };
  struct Data {
    std::vector<std::vector<int>> encs;  // sorted
    std::map<std::vector<int>, int> index;
  };

  const Layout& layout(Open u) const {
    auto it = lay_.find(u);
    if (it != lay_.end()) return it->second;
    Layout lay;
    const FiniteSpace& sp = q_->space();
    lay.pts = sp.points_of(u);
    for (int x : lay.pts) lay.mins.push_back(sp.minimal_open(x));
    for (size_t a = 0; a < lay.pts.size(); ++a)
      for (size_t b = a + 1; b < lay.pts.size(); ++b) {
        Open w = lay.mins[a] & lay.mins[b];
        if (w != 0)
          lay.pairs.push_back(
              {static_cast<int>(a), static_cast<int>(b), w});
      }
    return lay_.emplace(u, std::move(lay)).first->second;
  }

  // endpoints of the transition at `pr` given the objects per point:
  // g_{a,b} in hom(w, i_b|w, i_a|w)
  std::pair<int, int> trans_endpoints(const Layout& lay,
                                      const std::vector<int>& objs,
                                      const PairInfo& pr) const {
    int src = q_->restrict_obj(lay.mins[pr.b], objs[pr.b], pr.overlap);
    int dst = q_->restrict_obj(lay.mins[pr.a], objs[pr.a], pr.overlap);
    return {src, dst};
  }

  const Data& data(Open u) const {
    auto it = data_.find(u);
    if (it != data_.end()) return it->second;
    const Layout& lay = layout(u);
    int m = static_cast<int>(lay.pts.size());
    int np = static_cast<int>(lay.pairs.size());
    Data out;
    std::vector<int> objs(m, 0), trans(np, 0);
    long long work = 0;
    auto cocycle_ok = [&](int pi) {
      // triples completed by pair pi = (a, b): all r < a with overlaps
      const PairInfo& pr = lay.pairs[pi];
      for (int r = 0; r < pr.a; ++r) {
        Open y = lay.mins[r] & pr.overlap;
        if (y == 0) continue;
        int p_ra = -1, p_rb = -1;
        for (int k = 0; k < np; ++k) {
          if (lay.pairs[k].a == r && lay.pairs[k].b == pr.a) p_ra = k;
          if (lay.pairs[k].a == r && lay.pairs[k].b == pr.b) p_rb = k;
        }
        // y nonempty forces both overlaps nonempty
        auto [s_ra, d_ra] = trans_endpoints(lay, objs, lay.pairs[p_ra]);
        auto [s_rb, d_rb] = trans_endpoints(lay, objs, lay.pairs[p_rb]);
        auto [s_ab, d_ab] = trans_endpoints(lay, objs, pr);
        int ir_y = q_->restrict_obj(lay.mins[r], objs[r], y);
        int ia_y = q_->restrict_obj(lay.mins[pr.a], objs[pr.a], y);
        int ib_y = q_->restrict_obj(lay.mins[pr.b], objs[pr.b], y);
        int g_ra = q_->restrict_mor(lay.pairs[p_ra].overlap, s_ra, d_ra,
                                    trans[p_ra], y);
        int g_rb = q_->restrict_mor(lay.pairs[p_rb].overlap, s_rb, d_rb,
                                    trans[p_rb], y);
        int g_ab = q_->restrict_mor(pr.overlap, s_ab, d_ab, trans[pi], y);
        // g_{r,a}|y . g_{a,b}|y == g_{r,b}|y
        if (q_->compose(y, ib_y, ia_y, ir_y, g_ab, g_ra) != g_rb)
          return false;
      }
      return true;
    };
    auto trans_rec = [&](auto&& self, int pi) -> void {
      if (pi == np) {
        std::vector<int> enc = objs;
        enc.insert(enc.end(), trans.begin(), trans.end());
        out.encs.push_back(std::move(enc));
        return;
      }
      auto [src, dst] = trans_endpoints(lay, objs, lay.pairs[pi]);
      int nh = q_->n_homs(lay.pairs[pi].overlap, src, dst);
      for (int g = 0; g < nh; ++g) {
        bump(work);
        trans[pi] = g;
        if (cocycle_ok(pi)) self(self, pi + 1);
      }
    };
    auto obj_rec = [&](auto&& self, int a) -> void {
      if (a == m) {
        trans_rec(trans_rec, 0);
        return;
      }
      int n = q_->n_objects(lay.mins[a]);
      for (int i = 0; i < n; ++i) {
        bump(work);
        objs[a] = i;
        self(self, a + 1);
      }
    };
    obj_rec(obj_rec, 0);
    std::sort(out.encs.begin(), out.encs.end());
    for (size_t i = 0; i < out.encs.size(); ++i)
      out.index[out.encs[i]] = static_cast<int>(i);
    return data_.emplace(u, std::move(out)).first->second;
  }

  std::vector<int> sub_encoding(Open u, const std::vector<int>& enc,
                                Open v) const {
    const Layout& lu = layout(u);
    int m = static_cast<int>(lu.pts.size());
    std::vector<int> keep(m, 0), out;
    for (int a = 0; a < m; ++a)
      if (v & (Open{1} << lu.pts[a])) {
        keep[a] = 1;
        out.push_back(enc[a]);
      }
    for (size_t k = 0; k < lu.pairs.size(); ++k)
      if (keep[lu.pairs[k].a] && keep[lu.pairs[k].b])
        out.push_back(enc[m + k]);
    return out;
  }

  const std::vector<std::vector<int>>& homs(Open u, int i, int j) const {
    auto key = std::make_tuple(u, i, j);
    auto it = homs_.find(key);
    if (it != homs_.end()) return it->second;
    const Layout& lay = layout(u);
    const std::vector<int>& A = data(u).encs[i];
    const std::vector<int>& B = data(u).encs[j];
    int m = static_cast<int>(lay.pts.size());
    std::vector<std::vector<int>> out;
    std::vector<int> cur(m, 0);
    long long work = 0;
    auto rec = [&](auto&& self, int a) -> void {
      if (a == m) {
        out.push_back(cur);
        return;
      }
      int nh = q_->n_homs(lay.mins[a], A[a], B[a]);
      for (int t = 0; t < nh; ++t) {
        bump(work);
        cur[a] = t;
        bool ok = true;
        for (size_t k = 0; k < lay.pairs.size() && ok; ++k) {
          const PairInfo& pr = lay.pairs[k];
          if (pr.b != a || pr.a >= a) continue;  // both endpoints assigned
          Open w = pr.overlap;
          int iA_a = q_->restrict_obj(lay.mins[pr.a], A[pr.a], w);
          int iA_b = q_->restrict_obj(lay.mins[pr.b], A[pr.b], w);
          int iB_a = q_->restrict_obj(lay.mins[pr.a], B[pr.a], w);
          int iB_b = q_->restrict_obj(lay.mins[pr.b], B[pr.b], w);
          int tA = A[m + k], tB = B[m + k];
          int ta = q_->restrict_mor(lay.mins[pr.a], A[pr.a], B[pr.a],
                                    cur[pr.a], w);
          int tb = q_->restrict_mor(lay.mins[pr.b], A[pr.b], B[pr.b],
                                    cur[pr.b], w);
          // t_a|w . g^A_{a,b} == g^B_{a,b} . t_b|w
          if (q_->compose(w, iA_b, iA_a, iB_a, tA, ta) !=
              q_->compose(w, iA_b, iB_b, iB_a, tb, tB))
            ok = false;
        }
        if (ok) self(self, a + 1);
      }
    };
    rec(rec, 0);
    return homs_.emplace(key, std::move(out)).first->second;
  }

  int hom_index(Open u, int i, int j, const std::vector<int>& fam) const {
    const auto& list = homs(u, i, j);
    auto it = std::lower_bound(list.begin(), list.end(), fam);
    if (it == list.end() || *it != fam)
      throw StructuralError("internal: descent morphism family is missing");
    return static_cast<int>(it - list.begin());
  }

  std::shared_ptr<const HomQuotient> q_;
  mutable std::map<Open, Layout> lay_;
  mutable std::map<Open, Data> data_;
  mutable std::map<std::tuple<Open, int, int>, std::vector<std::vector<int>>>
      homs_;
};

}  // namespace

QuotientGerbeResult quotient_gerbe(const PrestackGroupoid& p,
                                   const NormalSubgroupoid& n) {
  if (n.ambient != &p)
    throw StructuralError("subgroupoid of a different prestack");
  if (!n.members) throw StructuralError("subgroupoid with missing pieces");
  auto hq = std::make_shared<HomQuotient>(p, n);
  auto st = std::make_shared<Stackified>(hq);
  GerbeMorphism f;
  f.source = &p;
  f.target = st.get();
  f.on_obj = [hq, st](Open u, int i) { return st->induced_object(u, i); };
  f.on_mor = [hq, st](Open u, int i, int j, int m) {
    return st->induced_mor(u, i, j, hq->class_family_of(u, i, j, m));
  };
  return QuotientGerbeResult{st, std::move(f)};
}

CentralExtensionOfGerbes central_quotient_extension(
    std::shared_ptr<const PrestackGroupoid> total, NormalSubgroupoid n) {
  if (!total) throw StructuralError("quotient extension needs a total prestack");
  if (n.ambient != total.get())
    throw StructuralError("subgroupoid of a different prestack");
  auto band =
      std::make_shared<const CentralSubgroupoidAsSheaf>(*total, n);
  QuotientGerbeResult q = quotient_gerbe(*total, n);
  CentralExtensionOfGerbes e;
  e.total = std::move(total);
  e.base = q.quotient;
  e.proj = std::move(q.proj);
  e.band = std::move(band);
  return e;
}

}  // namespace gerbex
