// montecarlo.cpp — replicated walk simulation with counter-based streams.
#include "treewalk/montecarlo.hpp"

#include "treewalk/rng.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace treewalk {

namespace {

// Runs body(r) for r in [0, replicates); any schedule gives identical
// results because every replicate writes only its own slots.
template <class F>
void run_replicated(u64 replicates, unsigned threads, F&& body) {
  threads = std::min<u64>(std::max(1u, threads), std::max<u64>(1, replicates));
  if (threads <= 1) {
    for (u64 r = 0; r < replicates; ++r) body(r);
    return;
  }
  std::atomic<u64> next{0};
  constexpr u64 chunk = 16;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (;;) {
        u64 lo = next.fetch_add(chunk);
        if (lo >= replicates) return;
        u64 hi = std::min(replicates, lo + chunk);
        for (u64 r = lo; r < hi; ++r) body(r);
      }
    });
  for (auto& t : pool) t.join();
}

// one lazy step on the family graph; a drawn self-loop end stays put
inline u64 lazy_step(const tree_graph& g, u64 x, rng_stream& rng) {
  if (rng.below(2) == 0) return x;
  u64 nbr[4];
  int cnt = g.neighbor_states(x, nbr);
  u64 e = rng.below((u64)g.degree(x));
  return e < (u64)cnt ? nbr[e] : x;
}

}  // namespace

moment_summary summarize(const std::vector<double>& xs) {
  moment_summary s;
  s.n = xs.size();
  if (xs.empty()) return s;
  double sum = 0, comp = 0;
  s.min = s.max = xs[0];
  for (double x : xs) {
    double y = x - comp, t = sum + y;
    comp = (t - sum) - y;
    sum = t;
    s.min = std::min(s.min, x);
    s.max = std::max(s.max, x);
  }
  s.mean = sum / s.n;
  double m2 = 0, m4 = 0, c2 = 0, c4 = 0;
  for (double x : xs) {
    double d = x - s.mean, d2 = d * d;
    double y = d2 - c2, t = m2 + y;
    c2 = (t - m2) - y;
    m2 = t;
    y = d2 * d2 - c4;
    t = m4 + y;
    c4 = (t - m4) - y;
    m4 = t;
  }
  if (s.n > 1) {
    s.var = m2 / (s.n - 1);
    s.se_mean = std::sqrt(s.var / s.n);
    double m2n = m2 / s.n, m4n = m4 / s.n;
    double v = m4n - m2n * m2n * double(s.n - 3) / double(s.n - 1);
    s.se_var = std::sqrt(std::max(0.0, v / s.n));
  }
  return s;
}

moment_summary summarize_counts(const std::vector<u64>& xs) {
  std::vector<double> d(xs.begin(), xs.end());
  return summarize(d);
}

u64 decomp_stats::in_tree_total(size_t rep) const {
  u64 d = 0;
  for (u64 v : in_tree[rep]) d += v;
  return d;
}

decomp_stats sample_hitting_time(const chain_operator& c, u64 start, u64 target,
                                 const mc_config& cfg, unsigned threads) {
  const tree_graph& g = c.graph;
  if (start >= g.n_vertices || target >= g.n_vertices)
    throw mc_error("start or target out of range");
  if (c.laziness != 0.5) throw mc_error("sampler draws lazy (1/2) steps only");
  size_t R = g.regions.size();

  decomp_stats out;
  out.cfg = cfg;
  out.start = start;
  out.target = target;
  for (const region_info& r : g.regions) out.region_names.push_back(r.name);
  out.tau.resize(cfg.replicates);
  out.on_path.resize(cfg.replicates);
  out.in_tree.assign(cfg.replicates, std::vector<u64>(R, 0));
  out.visits.assign(cfg.replicates, std::vector<u64>(R, 0));
  std::vector<char> trunc(cfg.replicates, 0);

  run_replicated(cfg.replicates, threads, [&](u64 rep) {
    rng_stream rng(cfg.seed, rep);
    u64 x = start, t = 0, s = 0;
    std::vector<u64>& di = out.in_tree[rep];
    std::vector<u64>& li = out.visits[rep];
    if (x <= g.nk) {
      int r0 = g.region_rooted_at(x);
      if (r0 >= 1) ++li[r0];  // the start is itself an arrival
    }
    while (x != target && t < cfg.max_steps) {
      u64 nx = lazy_step(g, x, rng);
      int rx = g.region_of_state(x), rn = g.region_of_state(nx);
      if (rx < 0 && rn < 0) {
        ++s;
        if (nx != x) {
          int arr = g.region_rooted_at(nx);
          if (arr >= 1) ++li[arr];
        }
      } else {
        ++di[rn >= 0 ? rn : rx];
      }
      ++t;
      x = nx;
    }
    if (x != target) trunc[rep] = 1;
    out.tau[rep] = t;
    out.on_path[rep] = s;
  });
  for (char f : trunc) out.truncated += f;
  return out;
}

double coupling_stats::tail_at(u64 t) const {
  if (tau.empty()) return 0;
  u64 over = 0;
  for (u64 v : tau) over += v > t;
  return (double)over / tau.size();
}

coupling_stats simulate_coupling(const chain_operator& c, u64 x_start,
                                 const mc_config& cfg, unsigned threads) {
  const tree_graph& g = c.graph;
  if (g.spec.mode != tree_mode::perfect || g.spec.leaf_self_loops)
    throw mc_error("coupling needs perfect mode without self-loops");
  if (c.laziness != 0.5) throw mc_error("coupling draws lazy (1/2) steps only");
  if (x_start >= g.n_vertices) throw mc_error("start out of range");
  u64 m0 = g.regions[0].actual;

  // degree prefix for stationary sampling of the partner
  std::vector<u64> pref(g.n_vertices + 1, 0);
  for (u64 x = 0; x < g.n_vertices; ++x) pref[x + 1] = pref[x] + g.degree(x);
  if (pref.back() != g.degree_total) throw mc_error("internal: degree prefix mismatch");

  coupling_stats out;
  out.cfg = cfg;
  out.x_start = x_start;
  out.tau.resize(cfg.replicates);
  out.t_hit_origin.resize(cfg.replicates);
  out.t_level_match.resize(cfg.replicates);
  std::vector<char> trunc(cfg.replicates, 0);

  auto in_origin = [&](u64 s) { return s == 0 || g.region_of_state(s) == 0; };
  auto origin_depth = [&](u64 s) { return s == 0 ? 0 : g.depth_in_region(s); };
  auto origin_heap = [&](u64 s) {
    return s == 0 ? u64(1) : s - g.regions[0].base_state + 2;
  };
  auto origin_state = [&](u64 heap) {
    return heap == 1 ? u64(0) : g.regions[0].base_state + heap - 2;
  };

  run_replicated(cfg.replicates, threads, [&](u64 rep) {
    rng_stream rng(cfg.seed, rep);
    u64 r = rng.below(g.degree_total);
    u64 Y = (u64)(std::upper_bound(pref.begin(), pref.end(), r) - pref.begin()) - 1;
    u64 X = x_start, t = 0;
    bool coal = X == Y, hit0 = coal && X == 0, matched = false;
    u64 mark_hit0 = 0, mark_match = 0;
    int phase = 1;
    while (!coal && t < cfg.max_steps) {
      if (phase <= 2) {
        X = lazy_step(g, X, rng);
        Y = lazy_step(g, Y, rng);
      } else {
        // both inside the origin tree at equal depth >= 1
        if (rng.below(2) == 1) {
          u64 hx = origin_heap(X), hy = origin_heap(Y);
          bool leaf = 2 * hx > m0;
          u64 e = rng.below(leaf ? u64(1) : u64(3));
          if (e == 0) {
            hx /= 2;
            hy /= 2;
          } else {
            hx = 2 * hx + (e - 1);
            hy = 2 * hy + rng.below(2);
          }
          X = origin_state(hx);
          Y = origin_state(hy);
        }
      }
      ++t;
      if (X == Y) {
        coal = true;
        break;
      }
      if (phase == 1 && X == 0) {
        phase = 2;
        hit0 = true;
        mark_hit0 = t;
      }
      if (phase == 2 && in_origin(X) && in_origin(Y) &&
          origin_depth(X) == origin_depth(Y)) {
        phase = 3;
        matched = true;
        mark_match = t;
      }
    }
    if (!coal) trunc[rep] = 1;
    out.tau[rep] = t;
    out.t_hit_origin[rep] = hit0 ? mark_hit0 : t;
    out.t_level_match[rep] = matched ? mark_match : t;
  });
  for (char f : trunc) out.truncated += f;
  return out;
}

double toy_coupling_stats::tail_at(u64 t) const {
  if (tau.empty()) return 0;
  u64 over = 0;
  for (u64 v : tau) over += v > t;
  return (double)over / tau.size();
}

toy_coupling_stats couple_until_collision(const small_graph& g, double laziness,
                                          int x0, int y0, const mc_config& cfg) {
  std::vector<u64> pref(g.n + 1, 0);
  for (int v = 0; v < g.n; ++v) pref[v + 1] = pref[v] + g.degree(v);

  auto step = [&](int x, rng_stream& rng) {
    if (rng.uniform() < laziness) return x;
    u64 e = rng.below((u64)g.degree(x));
    return e < g.adj[x].size() ? g.adj[x][e] : x;
  };

  toy_coupling_stats out;
  out.tau.resize(cfg.replicates);
  for (u64 rep = 0; rep < cfg.replicates; ++rep) {
    rng_stream rng(cfg.seed, rep);
    int Y = y0;
    if (y0 < 0) {
      u64 r = rng.below(pref.back());
      Y = (int)(std::upper_bound(pref.begin(), pref.end(), r) - pref.begin()) - 1;
    }
    int X = x0;
    u64 t = 0;
    while (X != Y && t < cfg.max_steps) {
      X = step(X, rng);
      Y = step(Y, rng);
      ++t;
    }
    if (X != Y) ++out.truncated;
    out.tau[rep] = t;
  }
  return out;
}

toy_hitting_samples sample_hitting_toy(const small_graph& g, double laziness,
                                       int start, int target, const mc_config& cfg) {
  toy_hitting_samples out;
  out.tau.resize(cfg.replicates);
  for (u64 rep = 0; rep < cfg.replicates; ++rep) {
    rng_stream rng(cfg.seed, rep);
    int x = start;
    u64 t = 0;
    while (x != target && t < cfg.max_steps) {
      if (laziness == 0 || rng.uniform() >= laziness) {
        u64 e = rng.below((u64)g.degree(x));
        if (e < g.adj[x].size()) x = g.adj[x][e];  // a self-loop end stays put
      }
      ++t;
    }
    if (x != target) ++out.truncated;
    out.tau[rep] = t;
  }
  return out;
}

excursion_samples sample_excursions(int n, excursion_conventions conv,
                                    const mc_config& cfg, unsigned threads) {
  if (n < 3) throw mc_error("excursions need a tree with at least 3 vertices");
  small_graph g = small_graph::complete_tree(n, conv.self_loops);

  excursion_samples out;
  out.cfg = cfg;
  out.conv = conv;
  out.length.resize(cfg.replicates);
  std::vector<char> trunc(cfg.replicates, 0);

  run_replicated(cfg.replicates, threads, [&](u64 rep) {
    rng_stream rng(cfg.seed, rep);
    u64 len = 0;
    if (conv.lazy)
      while (rng.below(2) == 0) ++len;  // holds before the committed entry
    ++len;
    int x = 1 + (int)rng.below(2);
    while (x != 0 && len < cfg.max_steps) {
      if (conv.lazy && rng.below(2) == 0) {
        ++len;
        continue;
      }
      u64 e = rng.below((u64)g.degree(x));
      x = e < g.adj[x].size() ? g.adj[x][e] : x;
      ++len;
    }
    if (x != 0) trunc[rep] = 1;
    out.length[rep] = len;
  });
  for (char f : trunc) out.truncated += f;
  return out;
}

chi_square_result chi_square_geometric(const std::vector<u64>& samples, double p) {
  if (samples.empty() || p <= 0 || p >= 1) throw mc_error("bad chi-square input");
  double n = (double)samples.size();
  // per-value bins while the expected count stays >= 5, then one tail bin
  std::vector<double> expected;
  u64 v = 1;
  double tail = 1.0;  // P(X >= v)
  while (n * tail * p >= 5 && n * tail * (1 - p) >= 5) {
    expected.push_back(n * tail * p);
    tail *= 1 - p;
    ++v;
  }
  expected.push_back(n * tail);
  size_t bins = expected.size();
  if (bins < 2) throw mc_error("too few samples for a chi-square bin layout");

  std::vector<u64> observed(bins, 0);
  for (u64 s : samples) {
    if (s < 1) throw mc_error("geometric samples start at 1");
    size_t b = s - 1 < bins - 1 ? (size_t)(s - 1) : bins - 1;
    ++observed[b];
  }
  double stat = 0;
  for (size_t b = 0; b < bins; ++b) {
    double d = observed[b] - expected[b];
    stat += d * d / expected[b];
  }
  chi_square_result r;
  r.statistic = stat;
  r.df = (int)bins - 1;
  r.n = samples.size();
  r.bins = bins;
  boost::math::chi_squared_distribution<double> dist(r.df);
  r.p_value = boost::math::cdf(boost::math::complement(dist, stat));
  return r;
}

chi_square_result chi_square_counts(const std::vector<u64>& observed,
                                    const std::vector<double>& probs,
                                    int df_reduction) {
  if (observed.size() != probs.size() || observed.size() < 2)
    throw mc_error("bad chi-square input");
  u64 n = 0;
  for (u64 o : observed) n += o;
  if (n == 0) throw mc_error("no observations");
  double stat = 0;
  for (size_t i = 0; i < observed.size(); ++i) {
    if (probs[i] <= 0) {
      if (observed[i] > 0) throw mc_error("observation in a zero-probability cell");
      continue;
    }
    double e = n * probs[i];
    double d = observed[i] - e;
    stat += d * d / e;
  }
  chi_square_result r;
  r.statistic = stat;
  r.df = (int)observed.size() - 1 - df_reduction;
  if (r.df < 1) throw mc_error("non-positive degrees of freedom");
  r.n = n;
  r.bins = observed.size();
  boost::math::chi_squared_distribution<double> dist(r.df);
  r.p_value = boost::math::cdf(boost::math::complement(dist, stat));
  return r;
}

}  // namespace treewalk
