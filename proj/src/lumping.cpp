// lumping.cpp — partition refinement, closed-form level partition, quotients.
#include "treewalk/lumping.hpp"

#include <algorithm>
#include <bit>
#include <map>
#include <numeric>

namespace treewalk {

u64 start_state(const tree_graph& g, start_spec s) {
  if (s.type == start_spec::kind::path_vertex) {
    if (s.path_pos > g.nk) throw address_error("path position out of range");
    return s.path_pos;
  }
  if (s.region < 0 || (size_t)s.region >= g.regions.size())
    throw address_error("no such region");
  return g.deepest_leaf_state(s.region);
}

namespace {

void require_perfect(const tree_graph& g) {
  if (g.spec.mode != tree_mode::perfect)
    throw lump_error("exact lumping needs perfect mode (exact_size trees break the symmetry)");
}

// Exact per-state row signature: sorted (class, ends/deg) with the fraction
// reduced.  All walk probabilities are ends/deg, so integer pairs suffice.
using signature = std::vector<std::pair<u32, std::pair<u64, u64>>>;

signature row_signature(const chain_operator& c, const std::vector<u32>& class_of, u64 x) {
  u64 nbr[4];
  int n = c.graph.neighbor_states(x, nbr);
  u64 deg = (u64)c.graph.degree(x);
  std::map<u32, u64> ends;
  for (int i = 0; i < n; ++i) ends[class_of[nbr[i]]] += 1;
  if (c.graph.has_self_loop(x)) ends[class_of[x]] += 2;
  signature sig;
  sig.reserve(ends.size());
  for (auto [cls, e] : ends) {
    u64 g = std::gcd(e, deg);
    sig.emplace_back(cls, std::make_pair(e / g, deg / g));
  }
  return sig;
}

// Renumbers classes by smallest member state (the canonical order shared by
// both construction routes).
void canonical_renumber(std::vector<u32>& class_of, u32 n_classes) {
  std::vector<u32> first_to_new(n_classes, UINT32_MAX);
  u32 next = 0;
  for (u32 c : class_of)
    if (first_to_new[c] == UINT32_MAX) first_to_new[c] = next++;
  for (u32& c : class_of) c = first_to_new[c];
}

}  // namespace

bool verify_lumpable(const chain_operator& c, const std::vector<u32>& class_of,
                     u32 n_classes) {
  std::vector<signature> rep_sig(n_classes);
  std::vector<char> seen(n_classes, 0);
  for (u64 x = 0; x < c.states(); ++x) {
    signature s = row_signature(c, class_of, x);
    u32 cls = class_of[x];
    if (!seen[cls]) {
      rep_sig[cls] = std::move(s);
      seen[cls] = 1;
    } else if (s != rep_sig[cls]) {
      return false;
    }
  }
  return true;
}

partition coarsest_lumpable_partition(const chain_operator& c, u64 start) {
  require_perfect(c.graph);
  u64 n = c.states();
  if (n > c.dense_limit) throw lump_error("state space too large for refinement");
  if (start >= n) throw address_error("start state out of range");

  partition p;
  p.class_of.assign(n, 1);
  p.class_of[start] = 0;
  p.n_classes = n == 1 ? 1 : 2;

  // Moore-style refinement: recompute every row signature against the current
  // partition and split classes whose members disagree, until stable.
  for (;;) {
    std::map<std::pair<u32, signature>, u32> remap;
    std::vector<u32> next(n);
    for (u64 x = 0; x < n; ++x) {
      auto key = std::make_pair(p.class_of[x], row_signature(c, p.class_of, x));
      auto [it, fresh] = remap.emplace(key, (u32)remap.size());
      (void)fresh;
      next[x] = it->second;
    }
    u32 classes = (u32)remap.size();
    bool changed = classes != p.n_classes;
    p.class_of.swap(next);
    p.n_classes = classes;
    if (!changed) break;
  }
  canonical_renumber(p.class_of, p.n_classes);
  p.start_class = p.class_of[start];
  p.certified = verify_lumpable(c, p.class_of, p.n_classes);
  if (!p.certified) throw lump_error("refinement fixed point failed certification");
  return p;
}

quotient_chain quotient_of(const chain_operator& c, const partition& p) {
  if (!p.certified) throw lump_error("partition is not certified lumpable");
  u64 n = c.states();
  u32 nc = p.n_classes;
  quotient_chain q;
  q.laziness = c.laziness;
  q.method = "refinement";
  q.start_class = p.start_class;
  q.class_size.assign(nc, 0);
  q.class_degsum.assign(nc, 0);
  q.representative.assign(nc, UINT64_MAX);

  std::vector<u64> flow((size_t)nc * nc, 0);  // integer edge-end counts
  for (u64 x = 0; x < n; ++x) {
    u32 cx = p.class_of[x];
    q.class_size[cx] += 1;
    q.class_degsum[cx] += (u64)c.graph.degree(x);
    q.representative[cx] = std::min(q.representative[cx], x);
    u64 nbr[4];
    int cnt = c.graph.neighbor_states(x, nbr);
    for (int i = 0; i < cnt; ++i) flow[(size_t)cx * nc + p.class_of[nbr[i]]] += 1;
    if (c.graph.has_self_loop(x)) flow[(size_t)cx * nc + cx] += 2;
  }
  q.T = Eigen::MatrixXd::Zero(nc, nc);
  q.pi = Eigen::VectorXd::Zero(nc);
  double total = (double)c.graph.degree_total;
  for (u32 a = 0; a < nc; ++a) {
    q.pi(a) = q.class_degsum[a] / total;
    for (u32 b = 0; b < nc; ++b)
      q.T(a, b) = (1 - c.laziness) * flow[(size_t)a * nc + b] / (double)q.class_degsum[a];
    q.T(a, a) += c.laziness;
  }
  return q;
}

// ---- closed-form route ----

namespace {

// Descriptor of one class of the level/ancestor partition, in canonical
// (smallest-member-state) order.
struct class_desc {
  int region;      // -1: path singleton
  u64 path_pos;    // for region == -1
  int d;           // depth in the region (>= 1)
  int m;           // meet depth with the start's ancestral line; m == d on the
                   // line, m < d off it; d for plain level classes
  bool split;      // true when the region is ancestor-split (start's region)
  u64 size;
  u64 degsum;
  u64 rep;
};

struct layout {
  std::vector<class_desc> classes;
  // id lookup: path classes are 0..nk; tree classes follow per region
  std::vector<u64> region_class_base;                 // per region
  const tree_graph* g;
  int split_region;                                   // -1 for a path start

  u32 id_path(u64 pos) const { return (u32)pos; }
  u32 id_level(int region, int d) const {             // plain region, depth d >= 1
    return (u32)(region_class_base[region] + (d - 1));
  }
  u32 id_split(int region, int d, int m) const {      // ancestor-split region
    // depth-major blocks of size d+1, ordered m = d, d-1, ..., 0
    u64 before = (u64)(d - 1) * d / 2 + (d - 1);      // classes at depths < d
    return (u32)(region_class_base[region] + before + (u64)(d - m));
  }
};

layout build_layout(const tree_graph& g, start_spec s) {
  require_perfect(g);
  layout L;
  L.g = &g;
  L.split_region = s.type == start_spec::kind::deepest_leaf ? s.region : -1;
  if (L.split_region >= 0 && g.regions[L.split_region].depth == 0)
    L.split_region = -1;  // a size-1 region's "leaf" is its path root

  for (u64 p = 0; p <= g.nk; ++p)
    L.classes.push_back({-1, p, 0, 0, false, 1, (u64)g.degree(p), p});

  L.region_class_base.resize(g.regions.size());
  for (size_t ri = 0; ri < g.regions.size(); ++ri) {
    const region_info& r = g.regions[ri];
    L.region_class_base[ri] = L.classes.size();
    bool split = (int)ri == L.split_region;
    int D = r.depth;
    for (int d = 1; d <= D; ++d) {
      bool leaf = d == D;
      u64 leaf_extra = leaf && g.spec.leaf_self_loops ? 2 : 0;
      u64 per_vertex_deg = (leaf ? 1 : 3) + leaf_extra;
      if (!split) {
        u64 size = u64(1) << d;
        L.classes.push_back({(int)ri, 0, d, d, false, size, size * per_vertex_deg,
                             r.base_state + size - 2});
      } else {
        for (int m = d; m >= 0; --m) {
          u64 size = m == d ? 1 : u64(1) << (d - m - 1);
          u64 rep_heap = m == d ? u64(1) << d : (u64(1) << d) + (u64(1) << (d - m - 1));
          L.classes.push_back({(int)ri, 0, d, m, true, size, size * per_vertex_deg,
                               r.base_state + rep_heap - 2});
        }
      }
    }
  }
  return L;
}

}  // namespace

quotient_chain level_quotient(const tree_graph& g, double laziness, start_spec s) {
  layout L = build_layout(g, s);
  u32 nc = (u32)L.classes.size();
  quotient_chain q;
  q.laziness = laziness;
  q.method = "closed-form";
  q.class_size.resize(nc);
  q.class_degsum.resize(nc);
  q.representative.resize(nc);
  for (u32 i = 0; i < nc; ++i) {
    q.class_size[i] = L.classes[i].size;
    q.class_degsum[i] = L.classes[i].degsum;
    q.representative[i] = L.classes[i].rep;
  }

  std::vector<u64> flow((size_t)nc * nc, 0);
  auto add = [&](u32 a, u32 b, u64 ends) {
    flow[(size_t)a * nc + b] += ends;
    if (a != b) flow[(size_t)b * nc + a] += ends;  // undirected: same end count
  };

  for (u64 p = 0; p + 1 <= g.nk; ++p) add(L.id_path(p), L.id_path(p + 1), 1);

  for (size_t ri = 0; ri < g.regions.size(); ++ri) {
    const region_info& r = g.regions[ri];
    int D = r.depth;
    if (D == 0) continue;
    bool split = (int)ri == L.split_region;
    u32 root = L.id_path(r.root_pos);
    if (!split) {
      add(root, L.id_level((int)ri, 1), 2);  // two root children
      for (int d = 1; d < D; ++d)
        add(L.id_level((int)ri, d), L.id_level((int)ri, d + 1), u64(1) << (d + 1));
      if (g.spec.leaf_self_loops)
        flow[(size_t)L.id_level((int)ri, D) * nc + L.id_level((int)ri, D)] +=
            2 * (u64(1) << D);
    } else {
      add(root, L.id_split((int)ri, 1, 1), 1);  // the ancestral child
      add(root, L.id_split((int)ri, 1, 0), 1);  // its sibling
      for (int d = 1; d < D; ++d) {
        add(L.id_split((int)ri, d, d), L.id_split((int)ri, d + 1, d + 1), 1);
        add(L.id_split((int)ri, d, d), L.id_split((int)ri, d + 1, d), 1);
        for (int m = d - 1; m >= 0; --m)
          add(L.id_split((int)ri, d, m), L.id_split((int)ri, d + 1, m),
              u64(1) << (d - m));  // 2 children per member
      }
      if (g.spec.leaf_self_loops)
        for (int m = D; m >= 0; --m) {
          u32 c = L.id_split((int)ri, D, m);
          flow[(size_t)c * nc + c] += 2 * L.classes[c].size;
        }
    }
  }

  // every edge end must be accounted for: row end-sums equal class degsums
  for (u32 a = 0; a < nc; ++a) {
    u64 ends = 0;
    for (u32 b = 0; b < nc; ++b) ends += flow[(size_t)a * nc + b];
    if (ends != q.class_degsum[a]) throw lump_error("internal: flow/degree mismatch");
  }

  q.T = Eigen::MatrixXd::Zero(nc, nc);
  q.pi = Eigen::VectorXd::Zero(nc);
  double total = (double)g.degree_total;
  for (u32 a = 0; a < nc; ++a) {
    q.pi(a) = q.class_degsum[a] / total;
    for (u32 b = 0; b < nc; ++b)
      q.T(a, b) = (1 - laziness) * flow[(size_t)a * nc + b] / (double)q.class_degsum[a];
    q.T(a, a) += laziness;
  }

  u64 start = start_state(g, s);
  if (s.type == start_spec::kind::path_vertex) {
    q.start_class = L.id_path(s.path_pos);
  } else if (L.split_region < 0) {
    q.start_class = L.id_path(g.regions[s.region].root_pos);
  } else {
    int D = g.regions[s.region].depth;
    q.start_class = L.id_split(s.region, D, D);
  }
  if (q.representative[q.start_class] != start || q.class_size[q.start_class] != 1)
    throw lump_error("internal: start is not a singleton class");
  return q;
}

partition materialize_level_partition(const tree_graph& g, start_spec s) {
  layout L = build_layout(g, s);
  partition p;
  p.n_classes = (u32)L.classes.size();
  p.class_of.resize(g.n_vertices);
  for (u64 pos = 0; pos <= g.nk; ++pos) p.class_of[pos] = L.id_path(pos);
  for (size_t ri = 0; ri < g.regions.size(); ++ri) {
    const region_info& r = g.regions[ri];
    bool split = (int)ri == L.split_region;
    for (u64 st = r.base_state; st < r.base_state + r.actual - 1; ++st) {
      u64 heap = st - r.base_state + 2;
      int d = std::bit_width(heap) - 1;
      if (!split) {
        p.class_of[st] = L.id_level((int)ri, d);
      } else {
        u64 rest = heap - (u64(1) << d);
        int m = rest == 0 ? d : d - std::bit_width(rest);
        p.class_of[st] = L.id_split((int)ri, d, m);
      }
    }
  }
  p.start_class = p.class_of[start_state(g, s)];
  return p;  // certified separately by verify_lumpable at small scale
}

Eigen::VectorXd quotient_power_row(const quotient_chain& q, u64 t) {
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(q.n_classes());
  row(q.start_class) = 1.0;
  for (u64 s = 0; s < t; ++s) row = row * q.T;
  return row.transpose();
}

lump_report validate_lumping(const chain_operator& c, const quotient_chain& q,
                             const partition& p, u64 start,
                             const std::vector<u64>& t_list) {
  lump_report rep;
  for (u64 t : t_list) {
    prob_vector full = c.step_distribution(c.point_mass(start), t);
    Eigen::VectorXd qrow = quotient_power_row(q, t);
    double total = (double)c.graph.degree_total;
    double err = 0;
    for (u64 x = 0; x < c.states(); ++x) {
      u32 cls = p.class_of[x];
      double lifted = qrow(cls) * (c.graph.degree(x) / total) / q.pi(cls);
      err = std::max(err, std::abs(lifted - full.m[x]));
    }
    rep.by_t.emplace_back(t, err);
    rep.max_linf = std::max(rep.max_linf, err);
  }
  return rep;
}

}  // namespace treewalk
