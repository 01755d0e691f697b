// mixing.cpp — eigen-expansion distances, mixing times, cutoff reports.
#include "treewalk/mixing.hpp"

#include "treewalk/eig.hpp"

#include <algorithm>
#include <cmath>

namespace treewalk {

namespace {

constexpr u64 kMaxT = u64(1) << 62;

// lambda^t for huge integer t (t <= 2^62 < 2^53 never holds; go through logs)
double power(double lambda, u64 t) {
  if (t == 0) return 1.0;
  if (lambda == 0) return 0.0;
  double mag = std::exp((double)t * std::log(std::abs(lambda)));
  return lambda < 0 && (t & 1) ? -mag : mag;
}

}  // namespace

spectral_decomposition spectral_decompose(const Eigen::MatrixXd& P,
                                          const Eigen::VectorXd& pi) {
  int n = (int)pi.size();
  if (P.rows() != n || P.cols() != n) throw mixing_error("dimension mismatch");
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y)
      if (std::abs(pi(x) * P(x, y) - pi(y) * P(y, x)) > 1e-12)
        throw mixing_error("chain is not reversible; refusing to decompose");

  spectral_decomposition d;
  d.pi = pi;
  d.sqrt_pi = pi.cwiseSqrt();
  Eigen::MatrixXd S(n, n);
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y)
      S(x, y) = d.sqrt_pi(x) * P(x, y) / d.sqrt_pi(y);
  S = ((S + S.transpose()) / 2).eval();  // kill the last rounding asymmetry
  sym_eig e = sym_eigensolve(S, true);
  d.eigenvalues = e.values;
  d.U = e.vectors;
  return d;
}

spectral_decomposition spectral_decompose(const dense_chain& c) {
  return spectral_decompose(c.P, c.pi);
}

spectral_decomposition spectral_decompose(const quotient_chain& q) {
  return spectral_decompose(q.T, q.pi);
}

double reconstruction_error(const spectral_decomposition& d, const Eigen::MatrixXd& P) {
  int n = d.n();
  Eigen::MatrixXd S(n, n);
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y)
      S(x, y) = d.sqrt_pi(x) * P(x, y) / d.sqrt_pi(y);
  Eigen::MatrixXd R = d.U * d.eigenvalues.asDiagonal() * d.U.transpose() - S;
  return R.cwiseAbs().maxCoeff();
}

double tv_at(const spectral_decomposition& d, int start, u64 t) {
  int n = d.n();
  if (start < 0 || start >= n) throw mixing_error("start index out of range");
  // P^t(s,y) - pi(y) = sqrt(pi_y/pi_s) * sum_{i>=2} lambda_i^t U(s,i) U(y,i)
  Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
  for (int i = 1; i < n; ++i)
    a(i) = power(d.eigenvalues(i), t) * d.U(start, i) / d.sqrt_pi(start);
  Eigen::VectorXd e = d.U * a;
  double s = 0, comp = 0;  // compensated: cutoff detection wants ~1e-8 here
  for (int y = 0; y < n; ++y) {
    double x = std::abs(e(y)) * d.sqrt_pi(y) - comp;
    double tnew = s + x;
    comp = (tnew - s) - x;
    s = tnew;
  }
  return std::min(1.0, 0.5 * s);
}

mixing_profile distance_profile(const spectral_decomposition& d, int start,
                                const std::vector<u64>& t_grid, std::string name) {
  if (t_grid.empty()) throw mixing_error("empty t grid");
  mixing_profile p;
  p.start_name = std::move(name);
  for (u64 t : t_grid) p.samples.emplace_back(t, tv_at(d, start, t));
  return p;
}

u64 mixing_time_of(const std::function<double(u64)>& d, double eps) {
  if (!(eps > 0 && eps < 1)) throw mixing_error("eps must be in (0,1)");
  if (d(0) <= eps) return 0;
  u64 lo = 0, hi = 1;  // invariant: d(lo) > eps
  while (d(hi) > eps) {
    lo = hi;
    if (hi > kMaxT / 2) throw mixing_error("mixing time exceeds the supported range");
    hi *= 2;
  }
  while (hi - lo > 1) {
    u64 mid = lo + (hi - lo) / 2;
    (d(mid) <= eps ? hi : lo) = mid;
  }
  return hi;
}

family_analyzer::family_analyzer(const family_spec& spec, double laziness)
    : graph_(build_family_tree(spec)), laziness_(laziness) {
  auto path_q = level_quotient(graph_, laziness_, start_spec::path(graph_.nk));
  path_dec_ = std::make_shared<spectral_decomposition>(spectral_decompose(path_q));

  // same state order as canonical_starts(): endpoint, then per region root+leaf
  for (u64 s : graph_.canonical_starts()) {
    start_entry e;
    e.state = s;
    e.name = graph_.describe(s);
    if (graph_.region_of_state(s) < 0) {
      e.dec = path_dec_;
      e.index = (int)s;  // path classes are numbered by position
    } else {
      int region = graph_.region_of_state(s);
      auto q = level_quotient(graph_, laziness_, start_spec::leaf(region));
      e.dec = std::make_shared<spectral_decomposition>(spectral_decompose(q));
      e.index = (int)q.start_class;
    }
    starts_.push_back(std::move(e));
  }
}

double family_analyzer::d_start(size_t i, u64 t) const {
  return tv_at(*starts_[i].dec, starts_[i].index, t);
}

double family_analyzer::d_max(u64 t) const {
  auto it = dmax_memo_.find(t);
  if (it != dmax_memo_.end()) return it->second.first;
  double best = -1;
  size_t arg = 0;
  for (size_t i = 0; i < starts_.size(); ++i) {
    double v = d_start(i, t);
    if (v > best) {
      best = v;
      arg = i;
    }
  }
  dmax_memo_[t] = {best, arg};
  return best;
}

size_t family_analyzer::worst_start(u64 t) const {
  d_max(t);
  return dmax_memo_.at(t).second;
}

u64 family_analyzer::mixing_time(double eps) const {
  return mixing_time_of([this](u64 t) { return d_max(t); }, eps);
}

u64 cutoff_row::tmix_at(double eps) const {
  for (const auto& e : tmix)
    if (std::abs(e.eps - eps) < 1e-12) return e.tmix;
  throw mixing_error("eps not in the computed grid");
}

double cutoff_row::ratio(double eps) const {
  return (double)tmix_at(eps) / (double)tmix_at(1 - eps);
}

double cutoff_row::window(double eps) const {
  return (double)tmix_at(eps) - (double)tmix_at(1 - eps);
}

std::vector<double> default_eps_grid() {
  return {0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99};
}

std::vector<cutoff_row> cutoff_report(const std::vector<family_spec>& specs,
                                      const std::vector<double>& eps_grid,
                                      double laziness) {
  std::vector<cutoff_row> rows;
  for (const family_spec& s : specs) {
    family_analyzer a(s, laziness);
    cutoff_row r;
    r.k = s.k;
    r.N = a.graph().N;
    r.nk = a.graph().nk;
    std::vector<double> grid = eps_grid;
    std::sort(grid.begin(), grid.end());
    for (double eps : grid) r.tmix.push_back({eps, a.mixing_time(eps)});
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace treewalk
