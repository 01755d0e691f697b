// hitting.hpp — exact hitting-time moments by linear solves: a tree-
// structured elimination over the implicit family graph (any scale), a dense
// LU oracle for small chains, excursion and local-time laws on toys.
#pragma once
#include "treewalk/chain.hpp"

#include <vector>

namespace treewalk {

struct solve_error : std::runtime_error { using std::runtime_error::runtime_error; };

// Linear systems (I - P|V) x = rhs where V is every state except path
// position 0 and the origin tree's interior (the walk killed at the origin).
// Vectors live in per-segment storage so nothing indexes the full state
// space: path slots 1..nk plus one array per attached tree region.
// Keeps a reference to the graph, which must outlive the system.
class family_system {
 public:
  family_system(const tree_graph& g, double laziness);

  struct vec {
    std::vector<double> path;                // [0..nk]; slot 0 unused
    std::vector<std::vector<double>> tree;   // per non-origin region, heap 2..m
  };
  vec make_vec(double fill = 0) const;
  u64 unknowns() const { return unknowns_; }

  // One upward sweep (leaves to path, then path toward 0) and one downward
  // back-substitution; exact elimination, O(unknowns), no iteration.
  void solve(const vec& rhs, vec& out) const;
  void apply(const vec& x, vec& out) const;            // (I - P|V) x
  double max_residual(const vec& x, const vec& rhs) const;
  double dot_pi(const vec& a, const vec& b) const;     // full-chain pi weights
  double norm_pi(const vec& a) const;

  const tree_graph& graph() const { return *g_; }
  int region_index(int slot) const { return region_ids_[slot]; }
  size_t tree_segments() const { return region_ids_.size(); }

 private:
  const tree_graph* g_;
  double laziness_;
  std::vector<int> region_ids_;              // graph region index per segment
  std::vector<std::vector<double>> inv_denom_;  // elimination coefficients
  std::vector<double> path_inv_denom_;
  u64 unknowns_ = 0;
};

// Moments of the time to reach path position 0, exact for every path start.
struct family_hitting {
  std::vector<double> mean;     // by path position 0..nk
  std::vector<double> second;   // E[tau^2]
  double mean_residual = 0;     // max |(I-P)h - 1| over unknowns, / max|h|
  double second_residual = 0;   // same for the second-moment system
  double variance(u64 pos) const { return second[pos] - mean[pos] * mean[pos]; }
};
family_hitting hitting_from_path(const tree_graph& g, double laziness);

// Dense oracle: mean and second moment of the hitting time of `target` from
// every state, by LU solves of the first-step equations.
struct hitting_table {
  std::vector<double> mean, second;
  double variance(size_t x) const { return second[x] - mean[x] * mean[x]; }
};
hitting_table hitting_solve_dense(const dense_chain& c, const std::vector<int>& target);

// Both sides of the lazy/non-lazy identities E_lazy = 2 E, Var_lazy =
// 4 Var + 2 E, from independent solves.
struct transfer_report {
  double mean_lazy = 0, mean_plain = 0, var_lazy = 0, var_plain = 0;
  double mean_rel_err = 0;  // |E_lazy - 2E| / (2E)
  double var_rel_err = 0;   // |Var_lazy - (4Var + 2E)| / (4Var + 2E)
};
transfer_report transfer_identities(double mean_lazy, double var_lazy,
                                    double mean_plain, double var_plain);

// An excursion starts when the walk at the root commits to a move into the
// tree (lazy holds before that move count), and ends on the return to the
// root.  Under this definition the lazy excursion is the plain one run
// through geometric step delays, so its mean doubles exactly.
struct excursion_conventions {
  bool lazy = false;
  bool self_loops = false;
  bool root_in_situ = false;  // root embedded with outside edges; conditioned
                              // on entry this does not change the length law
};
struct excursion_report {
  int n = 0;
  excursion_conventions conv;
  double mean = 0, second = 0;
  // degree-sum return identity (3n-1)/2, the value the mean matches when
  // leaves carry self-loops and the walk is plain
  double loop_identity_value = 0;
  bool matches_loop_identity = false;
};
excursion_report excursion_moments(int n, excursion_conventions conv);

// Visits to site i (counted per time step) of the walk on {0..n} started at
// n and killed at 0, with a hold-in-place probability 1/2 at the right
// endpoint; the law is geometric and the per-visit escape probability is
// computed from gambler's-ruin solves, closed form 1/(2i).
struct local_time_report {
  int n = 0, i = 0;
  double escape_exact = 0;      // from the linear solves
  double escape_closed = 0;     // 1/(2i)
  double mean = 0;              // 1/escape_exact
  double max_pmf_err = 0;       // sup over support vs Geometric(1/(2i))
};
local_time_report local_time_law(int n, int i);

}  // namespace treewalk
