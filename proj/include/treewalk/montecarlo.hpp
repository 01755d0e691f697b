// montecarlo.hpp — seeded walk simulation on the implicit family graph:
// hitting-time replicates with the path/tree step split, the three-phase
// coupling against a stationary copy, excursion sampling, and chi-square
// goodness-of-fit helpers.  Per-replicate RNG streams are a pure function of
// (seed, replicate), so outputs are identical for any worker count.
#pragma once
#include "treewalk/chain.hpp"
#include "treewalk/hitting.hpp"

#include <string>
#include <vector>

namespace treewalk {

struct mc_error : std::runtime_error { using std::runtime_error::runtime_error; };

struct mc_config {
  u64 seed = 1;
  u64 replicates = 1000;
  u64 max_steps = u64(1) << 40;  // per replicate; reaching it is a truncation
};

// mean/variance (unbiased) with standard errors of both, from a full pass
// over the samples
struct moment_summary {
  u64 n = 0;
  double mean = 0, var = 0;
  double se_mean = 0, se_var = 0;
  double min = 0, max = 0;
};
moment_summary summarize(const std::vector<double>& xs);
moment_summary summarize_counts(const std::vector<u64>& xs);

// Per-replicate hitting times split by where each step has its endpoints:
// a step with both endpoints on the path counts toward on_path (S); any step
// touching a tree region counts toward that region's in_tree slot (D_i).
// visits[i] counts arrivals at region i's root by a path move (plus the
// start itself), the embedded walk's local time at that site.
struct decomp_stats {
  mc_config cfg;
  u64 start = 0, target = 0;
  u64 truncated = 0;
  std::vector<std::string> region_names;         // by graph region index
  std::vector<u64> tau;                          // per replicate
  std::vector<u64> on_path;                      // S
  std::vector<std::vector<u64>> in_tree;         // [replicate][region] D_i
  std::vector<std::vector<u64>> visits;          // [replicate][region] L_i
  u64 in_tree_total(size_t rep) const;           // D = sum_i D_i
};
decomp_stats sample_hitting_time(const chain_operator& c, u64 start, u64 target,
                                 const mc_config& cfg, unsigned threads = 1);

// Three-phase coupling with a stationary partner: (1) X and Y run
// independently until X first reaches path position 0; (2) still independent
// until a collision, or until both sit in the origin tree at equal depth;
// (3) depth-mirrored moves (shared hold/up/down category, own child choice)
// until both reach the root.  Any collision, in any phase, coalesces the
// pair for good.  Marks are clamped to tau when coalescence preempts them.
struct coupling_stats {
  mc_config cfg;
  u64 x_start = 0;
  u64 truncated = 0;
  std::vector<u64> tau;            // coupling time per replicate
  std::vector<u64> t_hit_origin;   // end of phase 1
  std::vector<u64> t_level_match;  // end of phase 2
  double tail_at(u64 t) const;     // empirical P(tau > t)
};
coupling_stats simulate_coupling(const chain_operator& c, u64 x_start,
                                 const mc_config& cfg, unsigned threads = 1);

// Independent lazy walks on a toy graph until collision (y0 = -1 draws the
// partner from pi); the degenerate form of the coupling used as its oracle.
struct toy_coupling_stats {
  u64 truncated = 0;
  std::vector<u64> tau;
  double tail_at(u64 t) const;
};
toy_coupling_stats couple_until_collision(const small_graph& g, double laziness,
                                          int x0, int y0, const mc_config& cfg);

// Hitting times on a toy graph at any laziness; the small-scale oracle for
// the family sampler and for non-lazy spot checks.
struct toy_hitting_samples {
  u64 truncated = 0;
  std::vector<u64> tau;
};
toy_hitting_samples sample_hitting_toy(const small_graph& g, double laziness,
                                       int start, int target, const mc_config& cfg);

// Excursion lengths from the root of a complete binary tree under the given
// conventions (lazy holds before the committed entry count toward the
// length); cross-checked against the linear-solve moments.
struct excursion_samples {
  mc_config cfg;
  excursion_conventions conv;
  u64 truncated = 0;
  std::vector<u64> length;
};
excursion_samples sample_excursions(int n, excursion_conventions conv,
                                    const mc_config& cfg, unsigned threads = 1);

// Chi-square goodness of fit.  p_value is the upper tail at the observed
// statistic; df = bins - 1 - df_reduction.
struct chi_square_result {
  double statistic = 0;
  int df = 0;
  double p_value = 0;
  u64 n = 0;
  size_t bins = 0;
};
// samples on {1, 2, ...} against Geometric(p); trailing values pool into a
// tail bin so every expected count is >= 5
chi_square_result chi_square_geometric(const std::vector<u64>& samples, double p);
chi_square_result chi_square_counts(const std::vector<u64>& observed,
                                    const std::vector<double>& probs,
                                    int df_reduction = 0);

}  // namespace treewalk
