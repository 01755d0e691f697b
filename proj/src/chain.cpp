// chain.cpp — walk operator, distribution evolution, TV, Dirichlet forms.
#include "treewalk/chain.hpp"

#include <cmath>

namespace treewalk {

namespace {

// compensated (Kahan) accumulator; TV differences near cutoff need ~1e-6
// resolution out of ~1e7-term sums
struct kahan {
  double s = 0, c = 0;
  void add(double x) {
    double y = x - c;
    double t = s + y;
    c = (t - s) - y;
    s = t;
  }
};

}  // namespace

double prob_vector::total() const {
  kahan k;
  for (double x : m) k.add(x);
  return k.s;
}

chain_operator make_walk(const family_spec& spec, double laziness) {
  if (laziness < 0 || laziness >= 1) throw chain_error("laziness must be in [0,1)");
  return chain_operator{build_family_tree(spec), laziness};
}

double chain_operator::transition(u64 x, u64 y) const {
  double deg = graph.degree(x);
  double p = 0;
  if (x == y) {
    p += laziness;
    if (graph.has_self_loop(x)) p += (1 - laziness) * 2 / deg;
    return p;
  }
  u64 nbr[4];
  int n = graph.neighbor_states(x, nbr);
  for (int i = 0; i < n; ++i)
    if (nbr[i] == y) return (1 - laziness) / deg;
  return 0;
}

prob_vector chain_operator::stationary() const {
  if (states() > dense_limit) throw chain_error("state space too large for a dense vector");
  prob_vector pi;
  pi.m.resize(states());
  double total = (double)graph.degree_total;
  for (u64 x = 0; x < states(); ++x) pi.m[x] = graph.degree(x) / total;
  return pi;
}

prob_vector chain_operator::point_mass(u64 state) const {
  if (states() > dense_limit) throw chain_error("state space too large for a dense vector");
  if (state >= states()) throw address_error("state out of range");
  prob_vector mu;
  mu.m.assign(states(), 0.0);
  mu.m[state] = 1.0;
  return mu;
}

prob_vector chain_operator::step_distribution(const prob_vector& mu, u64 t,
                                             step_stats* stats) const {
  if (mu.size() != states()) throw chain_error("distribution has the wrong dimension");
  u64 n = states();
  std::vector<double> invdeg(n);
  for (u64 x = 0; x < n; ++x) invdeg[x] = 1.0 / graph.degree(x);

  prob_vector cur = mu, next;
  next.m.resize(n);
  double lam = laziness, move = 1 - laziness;
  for (u64 s = 0; s < t; ++s) {
    for (u64 y = 0; y < n; ++y) {
      double acc = cur.m[y] * lam;
      if (graph.has_self_loop(y)) acc += cur.m[y] * move * 2 * invdeg[y];
      u64 nbr[4];
      int cnt = graph.neighbor_states(y, nbr);
      for (int i = 0; i < cnt; ++i) acc += cur.m[nbr[i]] * move * invdeg[nbr[i]];
      next.m[y] = acc;
    }
    cur.m.swap(next.m);
    if ((s + 1) % 10000 == 0) {
      double mass = cur.total();
      if (stats) {
        stats->max_drift = std::max(stats->max_drift, std::abs(mass - 1));
        ++stats->renormalizations;
      }
      for (double& x : cur.m) x /= mass;
    }
  }
  if (stats) stats->steps += t;
  return cur;
}

Eigen::MatrixXd chain_operator::dense_matrix() const {
  if (states() > 100000) throw chain_error("state space too large to materialize");
  u64 n = states();
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
  for (u64 x = 0; x < n; ++x) {
    double deg = graph.degree(x);
    P(x, x) = laziness + (graph.has_self_loop(x) ? (1 - laziness) * 2 / deg : 0.0);
    u64 nbr[4];
    int cnt = graph.neighbor_states(x, nbr);
    for (int i = 0; i < cnt; ++i) P(x, nbr[i]) += (1 - laziness) / deg;
  }
  return P;
}

double tv_distance(const prob_vector& a, const prob_vector& b) {
  if (a.size() != b.size()) throw chain_error("TV distance needs matching state spaces");
  kahan k;
  for (size_t i = 0; i < a.size(); ++i) k.add(std::abs(a.m[i] - b.m[i]));
  return 0.5 * k.s;
}

double dirichlet_form(const chain_operator& c, const std::vector<double>& f,
                      const std::vector<double>& g) {
  if (f.size() != c.states() || g.size() != c.states())
    throw chain_error("test function has the wrong dimension");
  // sum over undirected edges of pi(x)P(x,y)(f(x)-f(y))(g(x)-g(y)); self-loops
  // contribute nothing.  pi(x)P(x,y) = (1-laziness)/degree_total per edge.
  double w = (1 - c.laziness) / (double)c.graph.degree_total;
  kahan k;
  for (u64 x = 0; x < c.states(); ++x) {
    u64 nbr[4];
    int cnt = c.graph.neighbor_states(x, nbr);
    for (int i = 0; i < cnt; ++i) {
      u64 y = nbr[i];
      if (y > x) k.add(w * (f[x] - f[y]) * (g[x] - g[y]));
    }
  }
  return k.s;
}

double variance_under_pi(const chain_operator& c, const std::vector<double>& f) {
  if (f.size() != c.states()) throw chain_error("test function has the wrong dimension");
  double total = (double)c.graph.degree_total;
  kahan mean, sq;
  for (u64 x = 0; x < c.states(); ++x) {
    double pi = c.graph.degree(x) / total;
    mean.add(pi * f[x]);
    sq.add(pi * f[x] * f[x]);
  }
  return sq.s - mean.s * mean.s;
}

// ---- small graphs ----

small_graph small_graph::path(int len) {
  small_graph g;
  g.n = len + 1;
  g.adj.resize(g.n);
  g.loop.assign(g.n, 0);
  for (int v = 0; v < len; ++v) {
    g.adj[v].push_back(v + 1);
    g.adj[v + 1].push_back(v);
  }
  return g;
}

small_graph small_graph::single_edge() { return path(1); }

small_graph small_graph::complete_tree(int m, bool self_loops) {
  small_graph g;
  g.n = m;
  g.adj.resize(m);
  g.loop.assign(m, 0);
  for (int v = 1; v < m; ++v) {  // heap order: parent of v is (v-1)/2
    g.adj[v].push_back((v - 1) / 2);
    g.adj[(v - 1) / 2].push_back(v);
  }
  if (self_loops)
    for (int v = 0; v < m; ++v)
      if (2 * v + 1 >= m && v > 0) g.loop[v] = 1;
  return g;
}

dense_chain make_chain(const small_graph& g, double laziness) {
  dense_chain c;
  c.P = Eigen::MatrixXd::Zero(g.n, g.n);
  c.pi = Eigen::VectorXd::Zero(g.n);
  double degsum = 0;
  for (int v = 0; v < g.n; ++v) degsum += g.degree(v);
  for (int v = 0; v < g.n; ++v) {
    double deg = g.degree(v);
    c.pi(v) = deg / degsum;
    c.P(v, v) = laziness + (g.loop[v] ? (1 - laziness) * 2 / deg : 0.0);
    for (int w : g.adj[v]) c.P(v, w) += (1 - laziness) / deg;
  }
  return c;
}

dense_chain materialize(const chain_operator& c) {
  dense_chain d;
  d.P = c.dense_matrix();
  d.pi = Eigen::VectorXd(c.states());
  double total = (double)c.graph.degree_total;
  for (u64 x = 0; x < c.states(); ++x) d.pi(x) = c.graph.degree(x) / total;
  return d;
}

void dense_chain::check_reversible(double tol) const {
  for (int x = 0; x < P.rows(); ++x)
    for (int y = 0; y < P.cols(); ++y)
      if (std::abs(pi(x) * P(x, y) - pi(y) * P(y, x)) > tol)
        throw chain_error("chain is not reversible");
}

}  // namespace treewalk
