// hitting.cpp — tree-structured elimination, dense oracle, excursions,
// local-time law.
#include "treewalk/hitting.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace treewalk {

namespace {

// degree of heap vertex i in a complete tree on m vertices (root excluded
// from callers; self-loops add 2 at childless vertices)
inline int heap_degree(u64 i, u64 m, bool loops) {
  int c = (2 * i <= m ? 1 : 0) + (2 * i + 1 <= m ? 1 : 0);
  return 1 + c + (c == 0 && loops ? 2 : 0);
}

}  // namespace

family_system::family_system(const tree_graph& g, double laziness)
    : g_(&g), laziness_(laziness) {
  if (laziness < 0 || laziness >= 1)
    throw solve_error("laziness must be in [0,1)");
  bool loops = g.spec.leaf_self_loops;
  double move = 1 - laziness;
  for (size_t ri = 1; ri < g.regions.size(); ++ri)
    if (g.regions[ri].actual >= 2) region_ids_.push_back((int)ri);

  unknowns_ = g.nk;
  inv_denom_.resize(region_ids_.size());
  for (size_t s = 0; s < region_ids_.size(); ++s) {
    u64 m = g.regions[region_ids_[s]].actual;
    unknowns_ += m - 1;
    std::vector<double>& inv = inv_denom_[s];
    inv.resize(m - 1);  // heap 2..m at slot heap-2
    for (u64 i = m; i >= 2; --i) {
      int deg = heap_degree(i, m, loops);
      double diag = 1 - laziness - (loops && 2 * i > m ? move * 2 / deg : 0);
      double denom = diag;
      for (u64 ch = 2 * i; ch <= std::min(m, 2 * i + 1); ++ch)
        denom -= (move / deg) * (move / heap_degree(ch, m, loops)) * inv[ch - 2];
      inv[i - 2] = 1.0 / denom;
    }
  }

  // fold each region's two root subtrees into the path diagonal, then
  // eliminate the path from nk toward 0
  path_inv_denom_.assign(g.nk + 1, 0.0);
  std::vector<double> folded(g.nk + 1, 1 - laziness);  // diag after tree fold
  for (size_t s = 0; s < region_ids_.size(); ++s) {
    const region_info& r = g.regions[region_ids_[s]];
    u64 p = r.root_pos;
    int degp = g.degree(p);
    for (u64 ch = 2; ch <= std::min<u64>(r.actual, 3); ++ch)
      folded[p] -= (move / degp) * (move / heap_degree(ch, r.actual, loops)) *
                   inv_denom_[s][ch - 2];
  }
  for (u64 p = g.nk; p >= 1; --p) {
    double denom = folded[p];
    if (p < g.nk)
      denom -= (move / g.degree(p)) * (move / g.degree(p + 1)) * path_inv_denom_[p + 1];
    path_inv_denom_[p] = 1.0 / denom;
  }
}

family_system::vec family_system::make_vec(double fill) const {
  vec v;
  v.path.assign(g_->nk + 1, fill);
  v.path[0] = 0;
  for (int ri : region_ids_)
    v.tree.emplace_back(g_->regions[ri].actual - 1, fill);
  return v;
}

void family_system::solve(const vec& rhs, vec& out) const {
  const tree_graph& g = *g_;
  bool loops = g.spec.leaf_self_loops;
  double move = 1 - laziness_;

  // upward: out.tree holds the elimination constants c_i
  for (size_t s = 0; s < region_ids_.size(); ++s) {
    u64 m = g.regions[region_ids_[s]].actual;
    const std::vector<double>& inv = inv_denom_[s];
    const std::vector<double>& b = rhs.tree[s];
    std::vector<double>& c = out.tree[s];
    for (u64 i = m; i >= 2; --i) {
      int deg = heap_degree(i, m, loops);
      double acc = b[i - 2];
      for (u64 ch = 2 * i; ch <= std::min(m, 2 * i + 1); ++ch)
        acc += (move / deg) * c[ch - 2];
      c[i - 2] = acc * inv[i - 2];
    }
  }

  // path sweep toward 0, picking up the folded tree constants
  std::vector<double> cpath(g.nk + 1, 0.0);
  for (u64 p = g.nk; p >= 1; --p) {
    double acc = rhs.path[p];
    int ri = g.region_rooted_at(p);
    if (ri > 0 && g.regions[ri].actual >= 2) {
      size_t s = 0;
      while (region_ids_[s] != ri) ++s;
      u64 m = g.regions[ri].actual;
      for (u64 ch = 2; ch <= std::min<u64>(m, 3); ++ch)
        acc += (move / g.degree(p)) * out.tree[s][ch - 2];
    }
    if (p < g.nk) acc += (move / g.degree(p)) * cpath[p + 1];
    cpath[p] = acc * path_inv_denom_[p];
  }

  // back-substitute: path left to right (ground at 0), then down the trees
  out.path[0] = 0;
  for (u64 p = 1; p <= g.nk; ++p) {
    double bp = p > 1 ? (move / g.degree(p)) * path_inv_denom_[p] : 0.0;
    out.path[p] = cpath[p] + bp * (p > 1 ? out.path[p - 1] : 0.0);
  }
  for (size_t s = 0; s < region_ids_.size(); ++s) {
    const region_info& r = g.regions[region_ids_[s]];
    u64 m = r.actual;
    std::vector<double>& h = out.tree[s];  // currently the constants c_i
    for (u64 i = 2; i <= m; ++i) {
      int deg = heap_degree(i, m, loops);
      double parent = i / 2 == 1 ? out.path[r.root_pos] : h[i / 2 - 2];
      h[i - 2] += (move / deg) * inv_denom_[s][i - 2] * parent;
    }
  }
}

void family_system::apply(const vec& x, vec& out) const {
  const tree_graph& g = *g_;
  bool loops = g.spec.leaf_self_loops;
  double move = 1 - laziness_;
  for (u64 p = 1; p <= g.nk; ++p) {
    int deg = g.degree(p);
    double acc = (1 - laziness_) * x.path[p];
    if (p > 1) acc -= (move / deg) * x.path[p - 1];
    if (p < g.nk) acc -= (move / deg) * x.path[p + 1];
    int ri = g.region_rooted_at(p);
    if (ri > 0 && g.regions[ri].actual >= 2) {
      size_t s = 0;
      while (region_ids_[s] != ri) ++s;
      for (u64 ch = 2; ch <= std::min<u64>(g.regions[ri].actual, 3); ++ch)
        acc -= (move / deg) * x.tree[s][ch - 2];
    }
    out.path[p] = acc;
  }
  for (size_t s = 0; s < region_ids_.size(); ++s) {
    const region_info& r = g.regions[region_ids_[s]];
    u64 m = r.actual;
    for (u64 i = 2; i <= m; ++i) {
      int deg = heap_degree(i, m, loops);
      bool leaf_loop = loops && 2 * i > m;
      double acc = (1 - laziness_ - (leaf_loop ? move * 2 / deg : 0)) * x.tree[s][i - 2];
      double parent = i / 2 == 1 ? x.path[r.root_pos] : x.tree[s][i / 2 - 2];
      acc -= (move / deg) * parent;
      for (u64 ch = 2 * i; ch <= std::min(m, 2 * i + 1); ++ch)
        acc -= (move / deg) * x.tree[s][ch - 2];
      out.tree[s][i - 2] = acc;
    }
  }
}

double family_system::max_residual(const vec& x, const vec& rhs) const {
  vec r = make_vec();
  apply(x, r);
  double worst = 0;
  for (u64 p = 1; p <= g_->nk; ++p)
    worst = std::max(worst, std::abs(r.path[p] - rhs.path[p]));
  for (size_t s = 0; s < r.tree.size(); ++s)
    for (size_t i = 0; i < r.tree[s].size(); ++i)
      worst = std::max(worst, std::abs(r.tree[s][i] - rhs.tree[s][i]));
  return worst;
}

double family_system::dot_pi(const vec& a, const vec& b) const {
  const tree_graph& g = *g_;
  double total = (double)g.degree_total;
  double s1 = 0, comp = 0;
  auto add = [&](double x) {
    double y = x - comp;
    double t = s1 + y;
    comp = (t - s1) - y;
    s1 = t;
  };
  for (u64 p = 1; p <= g.nk; ++p) add(g.degree(p) / total * a.path[p] * b.path[p]);
  bool loops = g.spec.leaf_self_loops;
  for (size_t s = 0; s < region_ids_.size(); ++s) {
    u64 m = g.regions[region_ids_[s]].actual;
    for (u64 i = 2; i <= m; ++i)
      add(heap_degree(i, m, loops) / total * a.tree[s][i - 2] * b.tree[s][i - 2]);
  }
  return s1;
}

double family_system::norm_pi(const vec& a) const { return std::sqrt(dot_pi(a, a)); }

namespace {

// residuals are reported relative to the solution scale: the elimination is
// exact, so the only error left is cancellation at the level eps * |x|
double vec_scale(const family_system::vec& x) {
  double s = 1;
  for (double v : x.path) s = std::max(s, std::abs(v));
  for (const auto& seg : x.tree)
    for (double v : seg) s = std::max(s, std::abs(v));
  return s;
}

}  // namespace

family_hitting hitting_from_path(const tree_graph& g, double laziness) {
  family_system sys(g, laziness);
  family_system::vec ones = sys.make_vec(1.0);
  family_system::vec h = sys.make_vec();
  sys.solve(ones, h);

  family_hitting out;
  out.mean_residual = sys.max_residual(h, ones) / vec_scale(h);

  family_system::vec rhs2 = sys.make_vec();
  for (u64 p = 1; p <= g.nk; ++p) rhs2.path[p] = 2 * h.path[p] - 1;
  for (size_t s = 0; s < rhs2.tree.size(); ++s)
    for (size_t i = 0; i < rhs2.tree[s].size(); ++i)
      rhs2.tree[s][i] = 2 * h.tree[s][i] - 1;
  family_system::vec u = sys.make_vec();
  sys.solve(rhs2, u);
  out.second_residual = sys.max_residual(u, rhs2) / vec_scale(u);

  out.mean = h.path;
  out.second = u.path;
  out.mean[0] = out.second[0] = 0;
  return out;
}

hitting_table hitting_solve_dense(const dense_chain& c, const std::vector<int>& target) {
  int n = (int)c.pi.size();
  if (target.empty()) throw solve_error("target set is empty");
  std::vector<char> in_target(n, 0);
  for (int t : target) in_target[t] = 1;
  std::vector<int> free_idx;
  for (int x = 0; x < n; ++x)
    if (!in_target[x]) free_idx.push_back(x);
  int f = (int)free_idx.size();

  Eigen::MatrixXd M(f, f);
  for (int a = 0; a < f; ++a)
    for (int b = 0; b < f; ++b)
      M(a, b) = (a == b ? 1.0 : 0.0) - c.P(free_idx[a], free_idx[b]);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);

  Eigen::VectorXd hf = lu.solve(Eigen::VectorXd::Ones(f));
  if ((M * hf - Eigen::VectorXd::Ones(f)).cwiseAbs().maxCoeff() >
      1e-8 * std::max(1.0, hf.cwiseAbs().maxCoeff()))
    throw solve_error("hitting solve did not converge (unreachable target?)");
  Eigen::VectorXd uf = lu.solve(2 * hf - Eigen::VectorXd::Ones(f));

  hitting_table t;
  t.mean.assign(n, 0.0);
  t.second.assign(n, 0.0);
  for (int a = 0; a < f; ++a) {
    t.mean[free_idx[a]] = hf(a);
    t.second[free_idx[a]] = uf(a);
  }
  return t;
}

transfer_report transfer_identities(double mean_lazy, double var_lazy,
                                    double mean_plain, double var_plain) {
  transfer_report r;
  r.mean_lazy = mean_lazy;
  r.var_lazy = var_lazy;
  r.mean_plain = mean_plain;
  r.var_plain = var_plain;
  double mean_pred = 2 * mean_plain;
  double var_pred = 4 * var_plain + 2 * mean_plain;
  r.mean_rel_err = mean_pred == 0 ? std::abs(mean_lazy)
                                  : std::abs(mean_lazy - mean_pred) / mean_pred;
  r.var_rel_err = var_pred == 0 ? std::abs(var_lazy)
                                : std::abs(var_lazy - var_pred) / var_pred;
  return r;
}

excursion_report excursion_moments(int n, excursion_conventions conv) {
  if (n < 3) throw solve_error("excursions need a tree with at least 3 vertices");
  double laziness = conv.lazy ? 0.5 : 0.0;
  dense_chain c = make_chain(small_graph::complete_tree(n, conv.self_loops), laziness);
  hitting_table tab = hitting_solve_dense(c, {0});

  // T = F + H: F = steps until the committed move (geometric, {1,2,...}),
  // H = hitting time of the root from a uniform root child; independent.
  // Conditioning on entering the tree makes the root's outside degree
  // irrelevant, so root_in_situ is recorded but changes nothing.
  double eh = (tab.mean[1] + tab.mean[2]) / 2;
  double eh2 = (tab.second[1] + tab.second[2]) / 2;
  double p = 1 - laziness;
  double ef = 1 / p;
  double ef2 = (2 - p) / (p * p);

  excursion_report r;
  r.n = n;
  r.conv = conv;
  r.mean = ef + eh;
  r.second = ef2 + 2 * ef * eh + eh2;
  r.loop_identity_value = (3.0 * n - 1) / 2;
  r.matches_loop_identity =
      std::abs(r.mean - r.loop_identity_value) <= 1e-12 * r.loop_identity_value;
  return r;
}

namespace {

// tridiagonal solve of diag(dm)+off(lo,up); overwrites and returns x
std::vector<double> tridiag_solve(std::vector<double> dm, std::vector<double> lo,
                                  std::vector<double> up, std::vector<double> rhs) {
  size_t n = dm.size();
  for (size_t i = 1; i < n; ++i) {
    double w = lo[i] / dm[i - 1];
    dm[i] -= w * up[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  std::vector<double> x(n);
  x[n - 1] = rhs[n - 1] / dm[n - 1];
  for (size_t i = n - 1; i-- > 0;) x[i] = (rhs[i] - up[i] * x[i + 1]) / dm[i];
  return x;
}

}  // namespace

local_time_report local_time_law(int n, int i) {
  if (i < 1 || i > n) throw solve_error("site must lie in [1, n]");
  // ruin probabilities b_j = P_j(reach 0 before i), unknowns j = 1..i-1
  double left = 1.0;  // b_{i-1}; for i = 1 the left neighbor is 0 itself
  if (i > 1) {
    int f = i - 1;
    std::vector<double> dm(f, 1.0), lo(f, -0.5), up(f, -0.5), rhs(f, 0.0);
    rhs[0] = 0.5;  // boundary b_0 = 1
    std::vector<double> b = tridiag_solve(dm, lo, up, rhs);
    left = b[f - 1];
  }
  // right of i the walk cannot reach 0 without stepping on i; solve anyway
  double right = 0.0;
  if (i < n) {
    int f = n - i;  // unknowns j = i+1..n, absorbing at i, half-hold at n
    std::vector<double> dm(f, 1.0), lo(f, -0.5), up(f, -0.5), rhs(f, 0.0);
    dm[f - 1] = 0.5;  // hold at n: b_n = b_{n-1}/... (1 - 1/2) b_n = 1/2 b_{n-1}
    std::vector<double> b = tridiag_solve(dm, lo, up, rhs);
    right = b[0];
  }

  local_time_report r;
  r.n = n;
  r.i = i;
  r.escape_exact = 0.5 * left + (i < n ? 0.5 * right : 0.0);
  r.escape_closed = 1.0 / (2.0 * i);
  r.mean = 1.0 / r.escape_exact;
  double qe = r.escape_exact, qc = r.escape_closed;
  double te = qe, tc = qc;  // pmf at l = 1, then recurse
  for (int l = 1; l < 100000; ++l) {
    r.max_pmf_err = std::max(r.max_pmf_err, std::abs(te - tc));
    te *= (1 - qe);
    tc *= (1 - qc);
    if (tc < 1e-18 && te < 1e-18) break;
  }
  return r;
}

}  // namespace treewalk
