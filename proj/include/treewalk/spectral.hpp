// spectral.hpp — relaxation time, bottleneck (Cheeger) ratios, and discrete
// Poincaré inequalities with exact best constants from Dirichlet
// eigenproblems.
#pragma once
#include "treewalk/chain.hpp"
#include "treewalk/lumping.hpp"

#include <map>
#include <string>
#include <vector>

namespace treewalk {

struct spectral_error : std::runtime_error { using std::runtime_error::runtime_error; };

struct spectral_report {
  double lambda_2 = 0;      // second-largest eigenvalue
  double lambda_star = 0;   // largest nontrivial modulus; equals lambda_2
                            // for lazy chains (nonnegative spectrum)
  double t_rel = 0;         // 1 / (1 - lambda_star)
  std::map<std::string, double> bottleneck;  // set name -> ratio, caller-filled
  std::string method;       // dense | quotient | power-iteration
  u64 iterations = 0;       // power iteration only
  double residual = 0;      // ||S v - mu v||_2 at termination (power route)
};

// Full symmetric eigensolve of the chain (or of an exact quotient, whose
// spectrum embeds in the full chain's; validate against a dense solve at
// small scale before trusting it on large instances).
spectral_report relaxation_dense(const dense_chain& c);
spectral_report relaxation_quotient(const quotient_chain& q);

// Deflated power iteration on the symmetrized operator over the implicit
// family graph: projects out the sqrt-pi direction each step and declares
// convergence when Rayleigh increments stay below increment_tol.  Finds the
// largest nontrivial eigenvalue *modulus*.
spectral_report relaxation_power(const chain_operator& c, double increment_tol = 1e-12,
                                 u64 max_iter = 1'000'000);

// Phi(S) = sum_{x in S, y not in S} pi(x) P(x,y) / pi(S); requires
// 0 < pi(S) <= 1/2 (pass the complement otherwise).
double bottleneck_ratio(const dense_chain& c, const std::vector<char>& in_set);

// The one-edge cut isolating the origin tree together with path position 0.
// The origin side carries most of the stationary mass, so the ratio is
// reported for the smaller (complement) side, closed form: one crossing edge
// of flow (1-laziness)/degree_total.
struct cut_report {
  double pi_block = 0;     // stationary mass of the origin block
  double pi_side = 0;      // min(pi_block, 1 - pi_block)
  u64 cut_edges = 1;
  double phi = 0;
  double lower_bound = 0;  // 1/(2 phi), a relaxation-time lower bound
};
cut_report origin_cut(const tree_graph& g, double laziness);

// Segment inequality sum_{k=1..n} f(k)^2 <= n^2 * sum_l (f(l)-f(l-1))^2 for
// f(0) = 0: checked on `trials` random functions plus the exact maximizer
// (bottom Dirichlet eigenvector); exact best constant compared against the
// closed form 1/(4 sin^2(pi / (2(2n+1)))).
struct line_poincare_report {
  u64 n = 0, trials = 0;
  double max_ratio = 0;        // max over functions of LHS / (n^2 RHS)
  double exact_sup = 0;        // best constant sup LHS/RHS
  double sup_ratio = 0;        // exact_sup / n^2
  double closed_form_gap = 0;  // |mu_min - closed form|
  bool all_pass = false;
};
line_poincare_report poincare_line_check(u64 n, u64 trials, u64 seed);

// ||g||_pi^2 / E(g,g) for a function vanishing at `grounded` (throws if it
// does not); E is the chain's Dirichlet form.
double grounded_rayleigh(const dense_chain& c, int grounded, const std::vector<double>& g);

// Exact sup of ||g||^2 / E(g,g) over g vanishing at the root of a complete
// binary tree on m vertices (plain walk), via the grounded Dirichlet
// eigenproblem; the sup grows linearly in m.
struct tree_poincare_entry { u64 m = 0; double sup = 0, sup_over_m = 0; };
struct tree_poincare_report {
  std::vector<tree_poincare_entry> rows;
  double spread = 0;  // max/min of sup/m across rows
  bool bounded = false;  // spread <= 16
};
tree_poincare_report poincare_tree_check(const std::vector<u64>& m_list);

// Exact sup of ||h||^2 / E(h,h) over h vanishing on the origin tree and path
// position 0 (plain walk): dense grounded eigensolve when the complement is
// small, inverse iteration through the tree-structured solver otherwise.
struct complement_poincare_report {
  double mu_min = 0;      // smallest grounded eigenvalue
  double sup = 0;         // 1 / mu_min
  double sup_over_n = 0;  // sup / N
  double residual = 0;    // pi-norm of (A - mu)v at termination
  u64 states = 0;         // size of the grounded complement
  u64 iterations = 0;
  std::string method;     // dense | inverse-iteration
};
complement_poincare_report complement_poincare_check(const family_spec& spec,
                                                    u64 dense_limit = 20'000);

// 1/(1 - lambda_2) against the Rayleigh sup Var_pi(f)/E(f,f) evaluated at
// the exact maximizer from the eigensolve.
struct variational_report {
  double t_rel = 0, rayleigh_sup = 0, rel_err = 0;
};
variational_report variational_gap_check(const dense_chain& c);

}  // namespace treewalk
