// topology.hpp — tree family: a path [0, n_k] with binary trees hung at the
// positions n_j; implicit O(1) adjacency via binary-heap index arithmetic.
#pragma once
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace treewalk {

using u64 = std::uint64_t;
using u32 = std::uint32_t;

struct spec_error : std::runtime_error { using std::runtime_error::runtime_error; };
struct address_error : std::runtime_error { using std::runtime_error::runtime_error; };

enum class tree_mode { perfect, exact_size };

// Family parameters.  The attachment schedule is n_j = 2^(2^j) (doubly
// exponential) when base == 0, else n_j = base^j.  A tree of size roughly
// N = n_k^alpha sits at the origin, and a tree of size N/n_j at each n_j for
// j = attach_lo .. k.  In perfect mode sizes round down to 2^(d+1)-1 so every
// attached tree is a perfect binary tree; exact_size keeps the requested size
// and fills the bottom level left to right.
struct family_spec {
  int k = 2;
  int base = 0;               // 0: n_j = 2^(2^j); else n_j = base^j (base >= 2)
  int alpha_num = 3;          // N = floor(n_k^(alpha_num/alpha_den))
  int alpha_den = 1;
  int attach_lo = -1;         // first j with an attached tree; -1: max(1, k/2)
  tree_mode mode = tree_mode::perfect;
  bool leaf_self_loops = false;  // self-loop at every childless tree vertex,
                                 // counting 2 toward that vertex's degree

  int attach_first() const;
  u64 n_of(int j) const;      // the schedule value n_j
  u64 big_n() const;          // N, requested size of the origin tree
  void validate() const;      // throws spec_error on bad fields or overflow
};

// One attached tree.  Vertices are addressed by heap index (root = 1,
// children of i are 2i and 2i+1, parent is i/2); the root is identified with
// the path vertex at root_pos, so only heap indices 2..actual own states.
struct region_info {
  std::string name;           // "T0", "T1", ...
  int j = 0;                  // schedule index (0 for the origin tree)
  u64 root_pos = 0;           // path position of the root
  u64 requested = 0;          // size asked for (N or N/n_j)
  u64 actual = 0;             // size built
  int depth = 0;              // deepest level below the root
  u64 base_state = 0;         // state index of heap vertex 2 (if actual >= 2)
};

// Addressing: region 0 is the path (index = position 0..n_k); region r >= 1
// is tree region r-1 with index = heap index.  Canonical refs use heap
// indices >= 2; heap index 1 is accepted and means the root's path vertex.
struct vertex_ref {
  int region = 0;
  u64 index = 0;
  bool operator==(const vertex_ref&) const = default;
};

// The built family.  States are numbered path 0..n_k first, then each tree
// region's heap indices 2..actual in region order; all adjacency is computed
// arithmetically, so construction is O(k) regardless of vertex count.
struct tree_graph {
  family_spec spec;
  u64 nk = 0;                 // path occupies positions (= states) 0..nk
  u64 N = 0;
  std::vector<region_info> regions;   // [0] = T0, then T_attach_lo..T_k
  u64 n_vertices = 0;
  u64 n_self_loops = 0;
  u64 degree_total = 0;       // sum of degrees; a self-loop contributes 2

  u64 edge_count() const { return n_vertices - 1 + n_self_loops; }

  u64 state_of(vertex_ref v) const;          // throws address_error
  vertex_ref ref_of(u64 state) const;
  std::string describe(u64 state) const;     // e.g. "path:4", "T1[5]"

  // -1 when the state is a path vertex, else index into regions[].  Note a
  // region root is a path state and reports -1.
  int region_of_state(u64 state) const;
  // region rooted at this path position, or -1
  int region_rooted_at(u64 pos) const;
  int depth_in_region(u64 state) const;      // heap depth; 0 for path states

  bool has_self_loop(u64 state) const;
  int degree(u64 state) const;
  // Non-self neighbor states in a fixed order (path-left, path-right, parent,
  // child-left, child-right as applicable); returns the count.  A self-loop
  // contributes to degree() but is not listed here.
  int neighbor_states(u64 state, u64 out[4]) const;
  std::vector<vertex_ref> neighbors(vertex_ref v) const;  // self-loop listed once

  // Worst-case-start candidates: path endpoint n_k, every region root, and
  // the leftmost deepest leaf of every region; deduplicated, fixed order.
  std::vector<u64> canonical_starts() const;
  u64 deepest_leaf_state(int region) const;  // leftmost deepest leaf
};

tree_graph build_family_tree(const family_spec& spec);

}  // namespace treewalk
