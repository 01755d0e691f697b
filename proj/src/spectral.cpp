// spectral.cpp — eigenvalue gaps, Cheeger ratios, Poincaré constants.
#include "treewalk/spectral.hpp"

#include "treewalk/eig.hpp"
#include "treewalk/hitting.hpp"
#include "treewalk/rng.hpp"

#include <cmath>
#include <unordered_map>

namespace treewalk {

namespace {

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& P, const Eigen::VectorXd& pi) {
  Eigen::VectorXd r = pi.cwiseSqrt();
  Eigen::MatrixXd S = r.asDiagonal() * P * r.cwiseInverse().asDiagonal();
  return 0.5 * (S + S.transpose());
}

spectral_report report_from_values(const Eigen::VectorXd& v, std::string method) {
  if (v.size() < 2) throw spectral_error("need at least two states for a gap");
  spectral_report r;
  r.lambda_2 = v(1);
  r.lambda_star = std::max(std::abs(v(1)), std::abs(v(v.size() - 1)));
  r.t_rel = 1.0 / (1.0 - r.lambda_star);
  r.method = std::move(method);
  return r;
}

}  // namespace

spectral_report relaxation_dense(const dense_chain& c) {
  return report_from_values(sym_eigenvalues(symmetrize(c.P, c.pi)), "dense");
}

spectral_report relaxation_quotient(const quotient_chain& q) {
  return report_from_values(sym_eigenvalues(symmetrize(q.T, q.pi)), "quotient");
}

spectral_report relaxation_power(const chain_operator& c, double increment_tol,
                                 u64 max_iter) {
  const tree_graph& g = c.graph;
  u64 n = g.n_vertices;
  if (n > c.dense_limit) throw spectral_error("state space too large for power iteration");
  double move = 1 - c.laziness;

  // flatten adjacency once; weights are the symmetrized off-diagonals
  std::vector<u64> offset(n + 1, 0);
  std::vector<double> invsq(n), diag(n);
  for (u64 x = 0; x < n; ++x) {
    u64 nbr[4];
    offset[x + 1] = offset[x] + g.neighbor_states(x, nbr);
    invsq[x] = 1.0 / std::sqrt((double)g.degree(x));
    diag[x] = c.laziness + (g.has_self_loop(x) ? move * 2 / g.degree(x) : 0.0);
  }
  std::vector<u32> col(offset[n]);
  std::vector<double> w(offset[n]);
  for (u64 x = 0; x < n; ++x) {
    u64 nbr[4];
    int cnt = g.neighbor_states(x, nbr);
    for (int i = 0; i < cnt; ++i) {
      col[offset[x] + i] = (u32)nbr[i];
      w[offset[x] + i] = move * invsq[x] * invsq[nbr[i]];
    }
  }

  std::vector<double> v1(n);  // top eigenvector, sqrt(pi), unit 2-norm
  for (u64 x = 0; x < n; ++x)
    v1[x] = std::sqrt((double)g.degree(x) / (double)g.degree_total);

  std::vector<double> x(n), y(n);
  rng_stream rng(0x5eedbeef);
  for (u64 i = 0; i < n; ++i) x[i] = rng.symmetric();
  auto project_normalize = [&](std::vector<double>& z) {
    double dot = 0;
    for (u64 i = 0; i < n; ++i) dot += v1[i] * z[i];
    double nrm = 0;
    for (u64 i = 0; i < n; ++i) {
      z[i] -= dot * v1[i];
      nrm += z[i] * z[i];
    }
    nrm = std::sqrt(nrm);
    if (nrm == 0) throw spectral_error("iterate collapsed onto the top eigenvector");
    for (u64 i = 0; i < n; ++i) z[i] /= nrm;
    return nrm;
  };
  project_normalize(x);

  double mu = 2, prev = 2;
  u64 it = 0;
  for (; it < max_iter; ++it) {
    for (u64 i = 0; i < n; ++i) {
      double acc = diag[i] * x[i];
      for (u64 e = offset[i]; e < offset[i + 1]; ++e) acc += w[e] * x[col[e]];
      y[i] = acc;
    }
    prev = mu;
    mu = 0;
    for (u64 i = 0; i < n; ++i) mu += x[i] * y[i];
    x.swap(y);
    project_normalize(x);
    if (it >= 10 && std::abs(mu - prev) < increment_tol) break;
  }

  // residual ||S x - mu x|| on the final iterate
  double res = 0;
  for (u64 i = 0; i < n; ++i) {
    double acc = diag[i] * x[i];
    for (u64 e = offset[i]; e < offset[i + 1]; ++e) acc += w[e] * x[col[e]];
    y[i] = acc;
  }
  double dot = 0;
  for (u64 i = 0; i < n; ++i) dot += v1[i] * y[i];
  for (u64 i = 0; i < n; ++i) {
    double d = y[i] - dot * v1[i] - mu * x[i];
    res += d * d;
  }
  res = std::sqrt(res);
  if (it == max_iter)
    throw spectral_error("power iteration did not converge; final residual " +
                         std::to_string(res));
  spectral_report r;
  r.lambda_2 = mu;
  r.lambda_star = std::abs(mu);
  r.t_rel = 1.0 / (1.0 - r.lambda_star);
  r.method = "power-iteration";
  r.iterations = it + 1;
  r.residual = res;
  return r;
}

double bottleneck_ratio(const dense_chain& c, const std::vector<char>& in_set) {
  int n = (int)c.pi.size();
  if ((int)in_set.size() != n) throw spectral_error("set mask size mismatch");
  double pis = 0;
  for (int i = 0; i < n; ++i)
    if (in_set[i]) pis += c.pi(i);
  if (pis <= 0) throw spectral_error("empty set");
  if (pis > 0.5 + 1e-12)
    throw spectral_error("set holds more than half the stationary mass; pass the complement");
  double q = 0;
  for (int i = 0; i < n; ++i)
    if (in_set[i])
      for (int j = 0; j < n; ++j)
        if (!in_set[j]) q += c.pi(i) * c.P(i, j);
  return q / pis;
}

cut_report origin_cut(const tree_graph& g, double laziness) {
  u64 m0 = g.regions[0].actual;
  u64 loops0 = g.spec.leaf_self_loops && m0 >= 2 ? m0 - m0 / 2 : 0;
  cut_report r;
  r.pi_block = double(2 * (m0 - 1) + 2 * loops0 + 1) / (double)g.degree_total;
  r.pi_side = std::min(r.pi_block, 1 - r.pi_block);
  r.cut_edges = 1;
  r.phi = (1 - laziness) / (double)g.degree_total / r.pi_side;
  r.lower_bound = 1.0 / (2 * r.phi);
  return r;
}

line_poincare_report poincare_line_check(u64 n, u64 trials, u64 seed) {
  if (n < 1) throw spectral_error("segment length must be at least 1");
  line_poincare_report rep;
  rep.n = n;
  rep.trials = trials;

  // quadratic form of sum (f(l)-f(l-1))^2 with f(0) = 0: tridiagonal, free
  // right end
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (u64 i = 0; i < n; ++i) {
    A(i, i) = i + 1 < n ? 2 : 1;
    if (i + 1 < n) A(i, i + 1) = A(i + 1, i) = -1;
  }
  sym_eig e = sym_eigensolve(A, true);
  double mu_min = e.values(n - 1);
  rep.exact_sup = 1.0 / mu_min;
  rep.sup_ratio = rep.exact_sup / ((double)n * (double)n);
  double closed = 4 * std::sin(M_PI / (2.0 * (2 * n + 1))) * std::sin(M_PI / (2.0 * (2 * n + 1)));
  rep.closed_form_gap = std::abs(mu_min - closed);

  auto ratio_of = [&](const std::vector<double>& f) {
    double lhs = 0, rhs = 0, prev = 0;
    for (u64 j = 0; j < n; ++j) {
      lhs += f[j] * f[j];
      rhs += (f[j] - prev) * (f[j] - prev);
      prev = f[j];
    }
    return rhs == 0 ? 0.0 : lhs / ((double)n * (double)n * rhs);
  };

  std::vector<double> f(n);
  for (u64 j = 0; j < n; ++j) f[j] = e.vectors(j, n - 1);  // exact maximizer
  rep.max_ratio = ratio_of(f);

  rng_stream rng(seed);
  for (u64 t = 0; t < trials; ++t) {
    for (u64 j = 0; j < n; ++j) f[j] = rng.symmetric();
    rep.max_ratio = std::max(rep.max_ratio, ratio_of(f));
  }
  rep.all_pass = rep.max_ratio <= 1 + 1e-12;
  return rep;
}

double grounded_rayleigh(const dense_chain& c, int grounded, const std::vector<double>& g) {
  if (g[grounded] != 0)
    throw spectral_error("test function must vanish at the grounded vertex");
  int n = (int)c.pi.size();
  Eigen::Map<const Eigen::VectorXd> f(g.data(), n);
  double norm2 = c.pi.dot(f.cwiseAbs2());
  Eigen::VectorXd pf = c.P * f;
  double energy = (c.pi.array() * f.array() * (f - pf).array()).sum();
  return energy == 0 ? 0.0 : norm2 / energy;
}

namespace {

// smallest eigenvalue of I - S restricted to everything but `grounded`
double grounded_mu_min(const dense_chain& c, int grounded) {
  int n = (int)c.pi.size();
  Eigen::MatrixXd S = symmetrize(c.P, c.pi);
  Eigen::MatrixXd A(n - 1, n - 1);
  for (int i = 0, a = 0; i < n; ++i) {
    if (i == grounded) continue;
    for (int j = 0, b = 0; j < n; ++j) {
      if (j == grounded) continue;
      A(a, b) = (i == j ? 1.0 : 0.0) - S(i, j);
      ++b;
    }
    ++a;
  }
  Eigen::VectorXd v = sym_eigenvalues(A);
  return v(v.size() - 1);
}

}  // namespace

tree_poincare_report poincare_tree_check(const std::vector<u64>& m_list) {
  tree_poincare_report rep;
  double lo = 0, hi = 0;
  for (u64 m : m_list) {
    if (m < 2) throw spectral_error("tree must have at least 2 vertices");
    dense_chain c = make_chain(small_graph::complete_tree((int)m, false), 0.0);
    tree_poincare_entry row;
    row.m = m;
    row.sup = 1.0 / grounded_mu_min(c, 0);
    row.sup_over_m = row.sup / (double)m;
    if (rep.rows.empty() || row.sup_over_m < lo) lo = row.sup_over_m;
    if (rep.rows.empty() || row.sup_over_m > hi) hi = row.sup_over_m;
    rep.rows.push_back(row);
  }
  rep.spread = lo > 0 ? hi / lo : 0;
  rep.bounded = rep.spread > 0 && rep.spread <= 16;
  return rep;
}

complement_poincare_report complement_poincare_check(const family_spec& spec,
                                                     u64 dense_limit) {
  tree_graph g = build_family_tree(spec);
  complement_poincare_report rep;
  u64 count = g.nk;
  for (size_t r = 1; r < g.regions.size(); ++r) count += g.regions[r].actual - 1;
  rep.states = count;

  if (count <= dense_limit) {
    // dense grounded eigensolve over the complement states
    std::vector<u64> states;
    states.reserve(count);
    for (u64 p = 1; p <= g.nk; ++p) states.push_back(p);
    for (size_t r = 1; r < g.regions.size(); ++r)
      for (u64 i = 0; i + 1 < g.regions[r].actual; ++i)
        states.push_back(g.regions[r].base_state + i);
    std::unordered_map<u64, int> idx;
    for (size_t i = 0; i < states.size(); ++i) idx[states[i]] = (int)i;

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(count, count);
    for (size_t i = 0; i < states.size(); ++i) {
      u64 x = states[i];
      A((int)i, (int)i) =
          1.0 - (g.has_self_loop(x) ? 2.0 / g.degree(x) : 0.0);
      u64 nbr[4];
      int cnt = g.neighbor_states(x, nbr);
      for (int e = 0; e < cnt; ++e) {
        auto it = idx.find(nbr[e]);
        if (it != idx.end())
          A((int)i, it->second) = -1.0 / std::sqrt((double)g.degree(x) * g.degree(nbr[e]));
      }
    }
    Eigen::VectorXd v = sym_eigenvalues(A);
    rep.mu_min = v(v.size() - 1);
    rep.method = "dense";
  } else {
    // inverse iteration through the tree-structured solver (plain walk)
    family_system sys(g, 0.0);
    family_system::vec v = sys.make_vec(), w = sys.make_vec(), av = sys.make_vec();
    rng_stream rng(0x705eed);
    for (u64 p = 1; p <= g.nk; ++p) v.path[p] = rng.symmetric();
    for (auto& seg : v.tree)
      for (double& x : seg) x = rng.symmetric();
    double nrm = sys.norm_pi(v);
    for (u64 p = 1; p <= g.nk; ++p) v.path[p] /= nrm;
    for (auto& seg : v.tree)
      for (double& x : seg) x /= nrm;

    double mu = 1, prev = 2;
    u64 it = 0;
    for (; it < 10'000; ++it) {
      sys.solve(v, w);
      double wn = sys.norm_pi(w);
      for (u64 p = 1; p <= g.nk; ++p) v.path[p] = w.path[p] / wn;
      for (size_t s = 0; s < v.tree.size(); ++s)
        for (size_t i = 0; i < v.tree[s].size(); ++i)
          v.tree[s][i] = w.tree[s][i] / wn;
      sys.apply(v, av);
      prev = mu;
      mu = sys.dot_pi(v, av);
      if (it >= 5 && std::abs(mu - prev) <= 1e-13 * std::max(std::abs(mu), 1e-300)) break;
    }
    for (u64 p = 1; p <= g.nk; ++p) av.path[p] -= mu * v.path[p];
    for (size_t s = 0; s < av.tree.size(); ++s)
      for (size_t i = 0; i < av.tree[s].size(); ++i)
        av.tree[s][i] -= mu * v.tree[s][i];
    rep.mu_min = mu;
    rep.residual = sys.norm_pi(av);
    rep.iterations = it + 1;
    rep.method = "inverse-iteration";
  }
  rep.sup = 1.0 / rep.mu_min;
  rep.sup_over_n = rep.sup / (double)g.N;
  return rep;
}

variational_report variational_gap_check(const dense_chain& c) {
  int n = (int)c.pi.size();
  if (n < 2) throw spectral_error("need at least two states");
  Eigen::MatrixXd S = symmetrize(c.P, c.pi);
  sym_eig e = sym_eigensolve(S, true);
  variational_report rep;
  rep.t_rel = 1.0 / (1.0 - e.values(1));
  Eigen::VectorXd f = e.vectors.col(1).cwiseQuotient(c.pi.cwiseSqrt());
  double mean = c.pi.dot(f);
  double var = c.pi.dot(f.cwiseAbs2()) - mean * mean;
  Eigen::VectorXd pf = c.P * f;
  double energy = (c.pi.array() * f.array() * (f - pf).array()).sum();
  rep.rayleigh_sup = var / energy;
  rep.rel_err = std::abs(rep.t_rel - rep.rayleigh_sup) / rep.t_rel;
  return rep;
}

}  // namespace treewalk
