// The lazy walk operator: stationarity, stepping, TV distance, Dirichlet
// forms, with dense matrix powering as the oracle at small scale.
#include "treewalk/chain.hpp"
#include "treewalk/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace treewalk;

namespace {

family_spec small_spec(int k = 2, int alpha = 2) {
  family_spec s;
  s.k = k;
  s.alpha_num = alpha;
  return s;
}

double linf(const prob_vector& a, const prob_vector& b) {
  double m = 0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("stationary mass is degree-proportional and laziness-independent") {
  dense_chain edge = make_chain(small_graph::single_edge(), 0.5);
  CHECK(edge.pi(0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(edge.pi(1) == doctest::Approx(0.5).epsilon(1e-15));

  dense_chain p3 = make_chain(small_graph::path(2), 0.5);
  CHECK(p3.pi(0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(p3.pi(1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(p3.pi(2) == doctest::Approx(0.25).epsilon(1e-15));

  chain_operator lazy = make_walk(small_spec(), 0.5);
  chain_operator plain = make_walk(small_spec(), 0.0);
  prob_vector pi_l = lazy.stationary();
  prob_vector pi_p = plain.stationary();
  CHECK(linf(pi_l, pi_p) == 0);
  CHECK(std::abs(pi_l.total() - 1.0) <= 1e-12);
}

TEST_CASE("the origin tree holds at least three quarters of the stationary mass") {
  family_spec s;
  s.k = 2;  // canonical: alpha 3
  chain_operator c = make_walk(s, 0.5);
  prob_vector pi = c.stationary();
  double block = pi[0];  // the origin root is path position 0
  for (u64 x = 0; x < c.states(); ++x)
    if (c.graph.region_of_state(x) == 0) block += pi[x];
  CHECK(block >= 0.75);
  // exact value from degree sums: (2*(4095-1)+1+2) / 10772
  CHECK(block == doctest::Approx(8189.0 / 10772.0).epsilon(1e-11));
}

TEST_CASE("rows are stochastic and the chain is reversible") {
  chain_operator c = make_walk(small_spec(), 0.5);
  Eigen::MatrixXd P = c.dense_matrix();
  for (int i = 0; i < P.rows(); ++i)
    CHECK(std::abs(P.row(i).sum() - 1.0) <= 1e-14);
  materialize(c).check_reversible(1e-14);

  // detailed balance on sampled edges of a graph too big to materialize
  family_spec big;
  big.k = 3;
  chain_operator bc = make_walk(big, 0.5);
  const tree_graph& g = bc.graph;
  rng_stream rng(99);
  for (int i = 0; i < 5000; ++i) {
    u64 x = rng.below(g.n_vertices);
    u64 nb[4];
    int d = g.neighbor_states(x, nb);
    for (int j = 0; j < d; ++j) {
      double fwd = (double)g.degree(x) * bc.transition(x, nb[j]);
      double bwd = (double)g.degree(nb[j]) * bc.transition(nb[j], x);
      CHECK(std::abs(fwd - bwd) <= 1e-15);
    }
  }
}

TEST_CASE("stepping: identity at t=0, one lazy step mixes a single edge") {
  chain_operator c = make_walk(small_spec(1), 0.5);
  prob_vector mu = c.point_mass(3);
  prob_vector same = c.step_distribution(mu, 0);
  CHECK(linf(mu, same) == 0);

  dense_chain edge = make_chain(small_graph::single_edge(), 0.5);
  // (P+I)/2 of a flip chain sends a point mass straight to uniform
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Unit(2, 0) * edge.P;
  CHECK(row(0) == doctest::Approx(0.5).epsilon(1e-16));
  CHECK(row(1) == doctest::Approx(0.5).epsilon(1e-16));
}

TEST_CASE("implicit stepping matches dense matrix powers") {
  chain_operator c = make_walk(small_spec(), 0.5);
  Eigen::MatrixXd P = c.dense_matrix();
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Unit((int)c.states(), (int)c.graph.nk);
  for (int t = 0; t < 100; ++t) row = row * P;
  prob_vector mine = c.step_distribution(c.point_mass(c.graph.nk), 100);
  double err = 0;
  for (u64 i = 0; i < c.states(); ++i) err = std::max(err, std::abs(mine[i] - row((int)i)));
  CHECK(err <= 1e-12);
}

TEST_CASE("one lazy step is the half-and-half mixture of holding and moving") {
  chain_operator lazy = make_walk(small_spec(), 0.5);
  chain_operator plain = make_walk(small_spec(), 0.0);
  prob_vector mu = lazy.point_mass(lazy.graph.nk);
  prob_vector a = lazy.step_distribution(mu, 1);
  prob_vector b = plain.step_distribution(mu, 1);
  for (u64 i = 0; i < a.size(); ++i)
    CHECK(std::abs(a[i] - (0.5 * mu[i] + 0.5 * b[i])) <= 1e-14);
}

TEST_CASE("long runs conserve mass with logged renormalization") {
  family_spec s = small_spec(1, 3);
  chain_operator c = make_walk(s, 0.5);
  step_stats stats;
  prob_vector mu = c.step_distribution(c.point_mass(c.graph.nk), 1'000'000, &stats);
  CHECK(stats.steps == 1'000'000);
  CHECK(stats.max_drift <= 1e-10);
  CHECK(std::abs(mu.total() - 1.0) <= 1e-12);
  CHECK(stats.renormalizations == 100);
}

TEST_CASE("stationarity is an exact fixed point of the step") {
  family_spec s;
  s.k = 2;
  chain_operator c = make_walk(s, 0.5);
  prob_vector pi = c.stationary();
  prob_vector pi1 = c.step_distribution(pi, 1);
  CHECK(linf(pi, pi1) <= 1e-15);
}

TEST_CASE("TV distance: coincidence, disjointness, direct sums, and symmetry") {
  prob_vector a{{0.75, 0.25}}, b{{0.25, 0.75}};
  CHECK(tv_distance(a, a) == 0);
  CHECK(tv_distance(a, b) == doctest::Approx(0.5).epsilon(1e-16));
  CHECK(tv_distance(b, a) == doctest::Approx(0.5).epsilon(1e-16));
  prob_vector c{{1.0, 0.0}}, d{{0.0, 1.0}};
  CHECK(tv_distance(c, d) == doctest::Approx(1.0).epsilon(1e-16));
  prob_vector e{{0.5, 0.5, 0.0}};
  CHECK_THROWS_AS((void)tv_distance(a, e), chain_error);

  // triangle inequality on random triples
  rng_stream rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    prob_vector x{{0, 0, 0}}, y{{0, 0, 0}}, z{{0, 0, 0}};
    double sx = 0, sy = 0, sz = 0;
    for (int i = 0; i < 3; ++i) {
      sx += x[i] = rng.uniform();
      sy += y[i] = rng.uniform();
      sz += z[i] = rng.uniform();
    }
    for (int i = 0; i < 3; ++i) {
      x[i] /= sx;
      y[i] /= sy;
      z[i] /= sz;
    }
    CHECK(tv_distance(x, z) <= tv_distance(x, y) + tv_distance(y, z) + 1e-15);
  }
}

TEST_CASE("distance from a lazy point mass to stationarity never increases") {
  chain_operator c = make_walk(small_spec(), 0.5);
  prob_vector pi = c.stationary();
  prob_vector mu = c.point_mass(c.graph.nk);
  double prev = tv_distance(mu, pi);
  for (int t = 0; t < 60; ++t) {
    mu = c.step_distribution(mu, 1);
    double cur = tv_distance(mu, pi);
    CHECK(cur <= prev + 1e-12);
    prev = cur;
  }
}

TEST_CASE("Dirichlet form: constants, a single edge, and the laziness factor") {
  chain_operator c = make_walk(small_spec(1), 0.5);
  std::vector<double> ones(c.states(), 3.0);
  CHECK(dirichlet_form(c, ones, ones) == 0);
  CHECK(variance_under_pi(c, ones) == 0);

  // indicator of one endpoint of the edge, non-lazy flip chain:
  // pi(0) P(0,1) (f0-f1)^2 = 1/2 * 1 * 1... with laziness 0 => P(0,1)=1 => 1/2?
  // the flip chain moves with probability 1, so E(f,f) = 1/2; at laziness 1/2
  // the energy halves to 1/4
  small_graph edge = small_graph::single_edge();
  dense_chain plain = make_chain(edge, 0.0);
  dense_chain lazy = make_chain(edge, 0.5);
  auto energy = [](const dense_chain& dc, const std::vector<double>& f) {
    double e = 0;
    for (int x = 0; x < dc.P.rows(); ++x)
      for (int y = 0; y < dc.P.cols(); ++y)
        e += 0.5 * dc.pi(x) * dc.P(x, y) * (f[x] - f[y]) * (f[x] - f[y]);
    return e;
  };
  std::vector<double> ind{1.0, 0.0};
  CHECK(energy(plain, ind) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(energy(lazy, ind) == doctest::Approx(0.25).epsilon(1e-15));

  // family operator agrees with direct summation and halves with laziness
  chain_operator cp = make_walk(small_spec(1), 0.0);
  rng_stream rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> f(c.states());
    for (double& v : f) v = rng.symmetric();
    double el = dirichlet_form(c, f, f);
    double ep = dirichlet_form(cp, f, f);
    CHECK(el >= 0);
    CHECK(el == doctest::Approx(ep / 2).epsilon(1e-12));
  }
}

TEST_CASE("Dirichlet form is bilinear and symmetric") {
  chain_operator c = make_walk(small_spec(1), 0.5);
  rng_stream rng(23);
  std::vector<double> f(c.states()), g(c.states()), h(c.states());
  for (u64 i = 0; i < c.states(); ++i) {
    f[i] = rng.symmetric();
    g[i] = rng.symmetric();
    h[i] = rng.symmetric();
  }
  CHECK(dirichlet_form(c, f, g) == doctest::Approx(dirichlet_form(c, g, f)).epsilon(1e-13));
  std::vector<double> fps(c.states());
  for (u64 i = 0; i < c.states(); ++i) fps[i] = f[i] + 2.5 * h[i];
  double lhs = dirichlet_form(c, fps, g);
  double rhs = dirichlet_form(c, f, g) + 2.5 * dirichlet_form(c, h, g);
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("variance under pi matches direct summation and ignores constants") {
  chain_operator c = make_walk(small_spec(1), 0.5);
  prob_vector pi = c.stationary();
  rng_stream rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> f(c.states()), shifted(c.states());
    for (u64 i = 0; i < c.states(); ++i) {
      f[i] = rng.symmetric();
      shifted[i] = f[i] + 7.0;
    }
    double mean = 0, second = 0;
    for (u64 i = 0; i < c.states(); ++i) {
      mean += pi[i] * f[i];
      second += pi[i] * f[i] * f[i];
    }
    double direct = second - mean * mean;
    CHECK(variance_under_pi(c, f) == doctest::Approx(direct).epsilon(1e-12));
    CHECK(variance_under_pi(c, shifted) == doctest::Approx(direct).epsilon(1e-9));
  }

  // Bernoulli(1/2) indicator on the single edge
  dense_chain edge = make_chain(small_graph::single_edge(), 0.5);
  double v = edge.pi(0) * 1 - edge.pi(0) * edge.pi(0);
  CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("dense materialization is refused beyond the configured budget") {
  family_spec s;
  s.k = 3;
  chain_operator c = make_walk(s, 0.5);
  CHECK(c.states() > c.dense_limit / 2000);  // sanity: this family is huge
  CHECK_THROWS_AS((void)c.dense_matrix(), chain_error);
}
