// chain.hpp — lazy simple random walk as a reversible operator: stationary
// distribution, distribution evolution, TV distance, Dirichlet forms.  Also a
// small explicit-adjacency graph type for toy chains and isolated trees.
#pragma once
#include "treewalk/topology.hpp"

#include <Eigen/Dense>
#include <vector>

namespace treewalk {

struct chain_error : std::runtime_error { using std::runtime_error::runtime_error; };

// Dense non-negative mass by state.  Dense vectors are only created when the
// state count fits the configured limit.
struct prob_vector {
  std::vector<double> m;
  double total() const;                    // compensated sum
  size_t size() const { return m.size(); }
  double& operator[](size_t i) { return m[i]; }
  double operator[](size_t i) const { return m[i]; }
};

struct step_stats {
  u64 steps = 0;
  u64 renormalizations = 0;
  double max_drift = 0;                    // worst |mass-1| seen before renorm
};

// The walk on a family graph: transition matrix laziness*I + (1-laziness)*
// (walk step), where the walk step leaves a vertex along each of its degree()
// edge ends with equal probability (a self-loop owns 2 ends).
struct chain_operator {
  tree_graph graph;
  double laziness = 0.5;
  u64 dense_limit = 50'000'000;            // refuse dense vectors above this

  u64 states() const { return graph.n_vertices; }
  double transition(u64 x, u64 y) const;   // P(x,y)
  prob_vector stationary() const;          // pi(x) = degree(x)/degree_total
  prob_vector point_mass(u64 state) const;
  // mu P^t with renormalization every 10^4 steps (drift logged in stats)
  prob_vector step_distribution(const prob_vector& mu, u64 t,
                                step_stats* stats = nullptr) const;
  Eigen::MatrixXd dense_matrix() const;    // refuses above dense_limit
};

chain_operator make_walk(const family_spec& spec, double laziness = 0.5);

double tv_distance(const prob_vector& a, const prob_vector& b);

// Dirichlet form E(f,g) = sum over edges pi(x)P(x,y)(f(x)-f(y))(g(x)-g(y)),
// i.e. <f,(I-P)g> under pi; and Var_pi(f).
double dirichlet_form(const chain_operator& c, const std::vector<double>& f,
                      const std::vector<double>& g);
double variance_under_pi(const chain_operator& c, const std::vector<double>& f);

// ---- explicit small graphs (toys, isolated trees, oracle chains) ----

struct small_graph {
  int n = 0;
  std::vector<std::vector<int>> adj;       // neighbor lists, no self entries
  std::vector<char> loop;                  // self-loop flag (degree += 2)

  static small_graph path(int len);        // vertices 0..len
  static small_graph single_edge();
  // heap-ordered complete binary tree on m vertices, root = vertex 0
  static small_graph complete_tree(int m, bool self_loops);
  int degree(int v) const { return (int)adj[v].size() + 2 * (loop[v] ? 1 : 0); }
};

// Materialized chain: dense P and pi, used by eigen and linear-solve oracles.
struct dense_chain {
  Eigen::MatrixXd P;
  Eigen::VectorXd pi;
  void check_reversible(double tol = 1e-12) const;  // throws chain_error
};

dense_chain make_chain(const small_graph& g, double laziness);
dense_chain materialize(const chain_operator& c);

}  // namespace treewalk
