// lumping.hpp — exact quotients of the walk.  Two routes to the same object:
// brute-force partition refinement over an enumerated state space (small
// scale, certifies the Dynkin condition exactly), and a closed-form
// level/ancestor partition built without touching states (any scale).
#pragma once
#include "treewalk/chain.hpp"

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace treewalk {

struct lump_error : std::runtime_error { using std::runtime_error::runtime_error; };

struct partition {
  std::vector<u32> class_of;        // by state
  u32 n_classes = 0;
  u32 start_class = 0;
  bool certified = false;           // Dynkin condition verified exactly
};

// Where the walk starts: a path vertex (covers the endpoint and every region
// root), or the leftmost deepest leaf of one tree region.
struct start_spec {
  enum class kind { path_vertex, deepest_leaf };
  kind type = kind::path_vertex;
  u64 path_pos = 0;
  int region = 0;
  static start_spec path(u64 pos) { return {kind::path_vertex, pos, 0}; }
  static start_spec leaf(int region) { return {kind::deepest_leaf, 0, region}; }
};
u64 start_state(const tree_graph& g, start_spec s);

struct quotient_chain {
  Eigen::MatrixXd T;                // row-stochastic over classes
  Eigen::VectorXd pi;               // stationary class masses
  u32 start_class = 0;
  double laziness = 0.5;
  std::vector<u64> class_size;
  std::vector<u64> class_degsum;
  std::vector<u64> representative;  // smallest member state per class
  std::string method;               // "refinement" or "closed-form"
  u32 n_classes() const { return (u32)class_size.size(); }
};

// Coarsest exact lumping with the start as a singleton, by iterated signature
// refinement with exact integer arithmetic.  Perfect mode only.
partition coarsest_lumpable_partition(const chain_operator& c, u64 start);

// Exact Dynkin check of an arbitrary partition (integer arithmetic).
bool verify_lumpable(const chain_operator& c, const std::vector<u32>& class_of,
                     u32 n_classes);

// Aggregates a certified partition into the quotient chain (integer edge
// flows, then one division per entry).
quotient_chain quotient_of(const chain_operator& c, const partition& p);

// The closed-form partition: path vertices are singletons; every tree region
// splits by depth, except the start's region (for a leaf start) which splits
// by (depth, depth of the meet with the start's ancestral line).  Class
// numbering matches the refinement route exactly.
quotient_chain level_quotient(const tree_graph& g, double laziness, start_spec s);
partition materialize_level_partition(const tree_graph& g, start_spec s);

struct lump_report {
  std::vector<std::pair<u64, double>> by_t;  // (t, L-inf error)
  double max_linf = 0;
};
// Lifts the quotient distribution at each t (class mass spread pi-
// proportionally within the class) and compares against full-chain powering.
lump_report validate_lumping(const chain_operator& c, const quotient_chain& q,
                             const partition& p, u64 start,
                             const std::vector<u64>& t_list);

// Row vector e_start T^t by repeated multiplication.
Eigen::VectorXd quotient_power_row(const quotient_chain& q, u64 t);

}  // namespace treewalk
