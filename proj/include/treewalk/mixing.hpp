// mixing.hpp — exact TV distance profiles d(t), mixing times, and cutoff
// diagnostics.  d(t) comes from the eigendecomposition of the symmetrized
// chain (full at small scale, quotient at any scale), so arbitrary t up to
// 2^62 costs one O(n^2) expansion instead of t matvecs.
#pragma once
#include "treewalk/chain.hpp"
#include "treewalk/lumping.hpp"

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace treewalk {

struct mixing_error : std::runtime_error { using std::runtime_error::runtime_error; };

struct spectral_decomposition {
  Eigen::VectorXd eigenvalues;  // descending; top is 1
  Eigen::MatrixXd U;            // eigenvectors of D^1/2 P D^-1/2, columns
  Eigen::VectorXd pi;
  Eigen::VectorXd sqrt_pi;
  int n() const { return (int)pi.size(); }
};

// Symmetrizes and decomposes; rejects non-reversible input.
spectral_decomposition spectral_decompose(const Eigen::MatrixXd& P,
                                          const Eigen::VectorXd& pi);
spectral_decomposition spectral_decompose(const dense_chain& c);
spectral_decomposition spectral_decompose(const quotient_chain& q);
double reconstruction_error(const spectral_decomposition& d, const Eigen::MatrixXd& P);

// TV distance between P^t(start,.) and pi via the eigen-expansion.
double tv_at(const spectral_decomposition& d, int start, u64 t);

struct mixing_profile {
  std::string start_name;
  std::vector<std::pair<u64, double>> samples;       // (t, d(t))
  std::vector<std::pair<double, u64>> tmix_table;    // (eps, t_mix)
};
mixing_profile distance_profile(const spectral_decomposition& d, int start,
                                const std::vector<u64>& t_grid,
                                std::string name = "");

// Smallest integer t with d(t) <= eps, by exponential bracketing plus binary
// search; d must be non-increasing (true for lazy chains from a point mass).
u64 mixing_time_of(const std::function<double(u64)>& d, double eps);

// Worst case over the canonical starts of a perfect-mode family, evaluated
// through exact quotients: one path quotient covers the endpoint and all
// region roots, one ancestor-split quotient per region covers its deepest
// leaf.  Distances are exactly the full-chain distances (lumping is exact and
// the start class is a singleton).
class family_analyzer {
 public:
  family_analyzer(const family_spec& spec, double laziness = 0.5);
  const tree_graph& graph() const { return graph_; }
  size_t start_count() const { return starts_.size(); }
  const std::string& start_name(size_t i) const { return starts_[i].name; }
  u64 start_state_of(size_t i) const { return starts_[i].state; }
  double d_start(size_t i, u64 t) const;
  double d_max(u64 t) const;                 // max over starts, memoized
  size_t worst_start(u64 t) const;           // argmax index
  u64 mixing_time(double eps) const;
  const spectral_decomposition& path_decomposition() const { return *path_dec_; }

 private:
  tree_graph graph_;
  double laziness_;
  std::shared_ptr<spectral_decomposition> path_dec_;
  struct start_entry {
    std::string name;
    u64 state;
    std::shared_ptr<spectral_decomposition> dec;
    int index;                               // class index within dec
  };
  std::vector<start_entry> starts_;
  mutable std::map<u64, std::pair<double, size_t>> dmax_memo_;
};

struct eps_grid_entry {
  double eps;
  u64 tmix;
};
struct cutoff_row {
  int k = 0;
  u64 N = 0;
  u64 nk = 0;
  std::vector<eps_grid_entry> tmix;          // ascending eps
  u64 tmix_at(double eps) const;             // throws if eps absent
  double ratio(double eps) const;            // tmix(eps)/tmix(1-eps)
  double window(double eps) const;           // tmix(eps)-tmix(1-eps)
};
std::vector<double> default_eps_grid();

// One row per spec; windows and ratios computed from exact t_mix values.
std::vector<cutoff_row> cutoff_report(const std::vector<family_spec>& specs,
                                      const std::vector<double>& eps_grid,
                                      double laziness = 0.5);

}  // namespace treewalk
