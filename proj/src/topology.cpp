// topology.cpp — family construction and implicit adjacency.
#include "treewalk/topology.hpp"

#include <algorithm>
#include <bit>

namespace treewalk {

namespace {

constexpr u64 kMaxN = u64(1) << 61;  // keeps vertex counts inside u64 math

u64 checked_pow(u64 b, int e) {
  unsigned __int128 r = 1;
  for (int i = 0; i < e; ++i) {
    r *= b;
    if (r > (unsigned __int128)kMaxN * kMaxN) throw spec_error("schedule overflow");
  }
  if (r > kMaxN) throw spec_error("schedule value too large");
  return (u64)r;
}

// floor(x^(num/den)) by binary search on y^den <= x^num, all in 128-bit
u64 rational_pow_floor(u64 x, int num, int den) {
  unsigned __int128 target = 1;
  for (int i = 0; i < num; ++i) {
    target *= x;
    if (target > ((unsigned __int128)1 << 124)) throw spec_error("mass exponent overflow");
  }
  u64 lo = 1, hi = kMaxN;
  while (lo < hi) {  // invariant: lo^den <= target < (hi+1)^den is sought
    u64 mid = lo + (hi - lo + 1) / 2;
    unsigned __int128 p = 1;
    bool over = false;
    for (int i = 0; i < den && !over; ++i) {
      p *= mid;
      if (p > target) over = true;
    }
    if (over) hi = mid - 1; else lo = mid;
  }
  return lo;
}

}  // namespace

int family_spec::attach_first() const {
  return attach_lo < 0 ? std::max(1, k / 2) : attach_lo;
}

u64 family_spec::n_of(int j) const {
  if (base == 0) {
    if (j >= 6) throw spec_error("doubly exponential schedule overflows past j=5");
    return u64(1) << (u64(1) << j);
  }
  return checked_pow((u64)base, j);
}

u64 family_spec::big_n() const {
  if (alpha_den == 1) {
    unsigned __int128 r = 1;
    for (int i = 0; i < alpha_num; ++i) {
      r *= n_of(k);
      if (r > kMaxN) throw spec_error("N overflows the supported range");
    }
    return (u64)r;
  }
  return rational_pow_floor(n_of(k), alpha_num, alpha_den);
}

void family_spec::validate() const {
  if (k < 1) throw spec_error("k must be >= 1");
  if (base != 0 && base < 2) throw spec_error("schedule base must be 0 or >= 2");
  if (alpha_num < 1 || alpha_den < 1) throw spec_error("mass exponent must be positive");
  if (alpha_num < alpha_den) throw spec_error("mass exponent must be >= 1");
  if (attach_lo != -1 && (attach_lo < 1 || attach_lo > k))
    throw spec_error("attach_lo must be in [1, k]");
  u64 prev = 0;
  for (int j = attach_first(); j <= k; ++j) {
    u64 nj = n_of(j);
    if (nj <= prev) throw spec_error("schedule not strictly increasing");
    prev = nj;
  }
  if (big_n() < n_of(k)) throw spec_error("origin tree smaller than the path");
}

tree_graph build_family_tree(const family_spec& spec) {
  spec.validate();
  tree_graph g;
  g.spec = spec;
  g.nk = spec.n_of(spec.k);
  g.N = spec.big_n();

  auto add_region = [&](std::string name, int j, u64 root_pos, u64 requested) {
    region_info r;
    r.name = std::move(name);
    r.j = j;
    r.root_pos = root_pos;
    r.requested = requested;
    r.actual = spec.mode == tree_mode::perfect
                   ? std::bit_floor(requested + 1) - 1
                   : requested;
    r.depth = std::bit_width(r.actual) - 1;
    g.regions.push_back(r);
  };
  add_region("T0", 0, 0, g.N);
  for (int j = spec.attach_first(); j <= spec.k; ++j)
    add_region("T" + std::to_string(j), j, spec.n_of(j), g.N / spec.n_of(j));

  u64 state = g.nk + 1;
  for (auto& r : g.regions) {
    r.base_state = state;
    state += r.actual - 1;  // heap indices 2..actual; the root is a path vertex
    if (spec.leaf_self_loops && r.actual >= 2)
      g.n_self_loops += r.actual - r.actual / 2;  // vertices i with 2i > actual
  }
  g.n_vertices = state;
  g.degree_total = 2 * (g.n_vertices - 1) + 2 * g.n_self_loops;
  return g;
}

u64 tree_graph::state_of(vertex_ref v) const {
  if (v.region == 0) {
    if (v.index > nk) throw address_error("path position out of range");
    return v.index;
  }
  if (v.region < 1 || (size_t)v.region > regions.size())
    throw address_error("no such region");
  const region_info& r = regions[v.region - 1];
  if (v.index == 1) return r.root_pos;
  if (v.index < 2 || v.index > r.actual) throw address_error("heap index out of range");
  return r.base_state + v.index - 2;
}

vertex_ref tree_graph::ref_of(u64 state) const {
  if (state <= nk) return {0, state};
  if (state >= n_vertices) throw address_error("state out of range");
  int ri = region_of_state(state);
  return {ri + 1, state - regions[ri].base_state + 2};
}

std::string tree_graph::describe(u64 state) const {
  if (state <= nk) return "path:" + std::to_string(state);
  vertex_ref v = ref_of(state);
  return regions[v.region - 1].name + "[" + std::to_string(v.index) + "]";
}

int tree_graph::region_of_state(u64 state) const {
  if (state <= nk || state >= n_vertices) return -1;
  // regions are laid out consecutively; find the one whose range holds state
  int ri = 0;
  while ((size_t)(ri + 1) < regions.size() && state >= regions[ri + 1].base_state)
    ++ri;
  return ri;
}

int tree_graph::region_rooted_at(u64 pos) const {
  for (size_t i = 0; i < regions.size(); ++i)
    if (regions[i].root_pos == pos && regions[i].actual >= 2) return (int)i;
  return -1;
}

int tree_graph::depth_in_region(u64 state) const {
  if (state <= nk) return 0;
  int ri = region_of_state(state);
  u64 heap = state - regions[ri].base_state + 2;
  return std::bit_width(heap) - 1;
}

bool tree_graph::has_self_loop(u64 state) const {
  if (!spec.leaf_self_loops || state <= nk) return false;
  int ri = region_of_state(state);
  u64 heap = state - regions[ri].base_state + 2;
  return 2 * heap > regions[ri].actual;
}

int tree_graph::degree(u64 state) const {
  int d;
  if (state <= nk) {
    d = (state > 0 ? 1 : 0) + (state < nk ? 1 : 0);
    int ri = region_rooted_at(state);
    if (ri >= 0) d += (regions[ri].actual >= 2 ? 1 : 0) + (regions[ri].actual >= 3 ? 1 : 0);
    return d;
  }
  int ri = region_of_state(state);
  u64 m = regions[ri].actual;
  u64 heap = state - regions[ri].base_state + 2;
  d = 1 + (2 * heap <= m ? 1 : 0) + (2 * heap + 1 <= m ? 1 : 0);
  if (has_self_loop(state)) d += 2;
  return d;
}

int tree_graph::neighbor_states(u64 state, u64 out[4]) const {
  int n = 0;
  if (state <= nk) {
    if (state > 0) out[n++] = state - 1;
    if (state < nk) out[n++] = state + 1;
    int ri = region_rooted_at(state);
    if (ri >= 0) {
      const region_info& r = regions[ri];
      if (r.actual >= 2) out[n++] = r.base_state;      // heap 2
      if (r.actual >= 3) out[n++] = r.base_state + 1;  // heap 3
    }
    return n;
  }
  int ri = region_of_state(state);
  const region_info& r = regions[ri];
  u64 heap = state - r.base_state + 2;
  u64 parent = heap / 2;
  out[n++] = parent == 1 ? r.root_pos : r.base_state + parent - 2;
  if (2 * heap <= r.actual) out[n++] = r.base_state + 2 * heap - 2;
  if (2 * heap + 1 <= r.actual) out[n++] = r.base_state + 2 * heap - 1;
  return n;
}

std::vector<vertex_ref> tree_graph::neighbors(vertex_ref v) const {
  u64 s = state_of(v);
  u64 out[4];
  int n = neighbor_states(s, out);
  std::vector<vertex_ref> refs;
  refs.reserve(n + 1);
  for (int i = 0; i < n; ++i) refs.push_back(ref_of(out[i]));
  if (has_self_loop(s)) refs.push_back(ref_of(s));
  return refs;
}

u64 tree_graph::deepest_leaf_state(int region) const {
  const region_info& r = regions[region];
  if (r.depth == 0) return r.root_pos;
  return r.base_state + (u64(1) << r.depth) - 2;  // leftmost vertex of the bottom level
}

std::vector<u64> tree_graph::canonical_starts() const {
  std::vector<u64> s;
  auto push = [&](u64 x) {
    if (std::find(s.begin(), s.end(), x) == s.end()) s.push_back(x);
  };
  push(nk);
  for (size_t i = 0; i < regions.size(); ++i) {
    push(regions[i].root_pos);
    push(deepest_leaf_state((int)i));
  }
  return s;
}

}  // namespace treewalk
