// Relaxation times, bottleneck ratios, and the three Poincaré inequalities.
// Dense solves anchor the quotient and power-iteration routes; closed forms
// anchor the dense solves.
#include "treewalk/chain.hpp"
#include "treewalk/eig.hpp"
#include "treewalk/hitting.hpp"
#include "treewalk/lumping.hpp"
#include "treewalk/rng.hpp"
#include "treewalk/spectral.hpp"

#include <doctest.h>

#include <cmath>

using namespace treewalk;

namespace {

family_spec spec_of(int k, int alpha) {
  family_spec s;
  s.k = k;
  s.alpha_num = alpha;
  return s;
}

}  // namespace

TEST_CASE("closed-form relaxation times of tiny lazy chains") {
  // lazy two-state flip: eigenvalues 1 and 0, so t_rel = 1
  spectral_report edge = relaxation_dense(make_chain(small_graph::single_edge(), 0.5));
  CHECK(edge.lambda_2 == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(edge.lambda_star == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(edge.t_rel == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(edge.method == "dense");

  // lazy 3-path: spectrum 1, 1/2, 0, so t_rel = 2
  spectral_report p3 = relaxation_dense(make_chain(small_graph::path(2), 0.5));
  CHECK(p3.lambda_2 == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(p3.t_rel == doctest::Approx(2.0).epsilon(1e-12));

  // non-lazy flip alternates forever: lambda_star = 1 blows t_rel up
  spectral_report flip = relaxation_dense(make_chain(small_graph::single_edge(), 0.0));
  CHECK(flip.lambda_2 == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(flip.lambda_star == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("dense, quotient, and power routes agree on a full family") {
  family_spec s = spec_of(2, 2);
  chain_operator c = make_walk(s, 0.5);
  spectral_report dense = relaxation_dense(materialize(c));
  quotient_chain q = level_quotient(c.graph, 0.5, start_spec::path(c.graph.nk));
  spectral_report agg = relaxation_quotient(q);
  CHECK(agg.method == "quotient");
  CHECK(std::abs(agg.lambda_2 - dense.lambda_2) <= 1e-12);
  CHECK(agg.t_rel == doctest::Approx(dense.t_rel).epsilon(1e-8));

  spectral_report pow = relaxation_power(c, 1e-13);
  CHECK(pow.method == "power-iteration");
  CHECK(pow.iterations > 0);
  CHECK(std::abs(pow.lambda_star - dense.lambda_star) <= 1e-9);
  CHECK(pow.t_rel == doctest::Approx(dense.t_rel).epsilon(1e-6));

  // starved of iterations the power route must refuse, not return junk
  CHECK_THROWS_AS((void)relaxation_power(c, 1e-13, 3), spectral_error);
}

TEST_CASE("canonical family: frozen second eigenvalue and relaxation time") {
  family_spec s;
  s.k = 2;
  quotient_chain q =
      level_quotient(build_family_tree(s), 0.5, start_spec::path(16));
  spectral_report rep = relaxation_quotient(q);
  CHECK(rep.lambda_2 == doctest::Approx(0.9999597612968852).epsilon(1e-12));
  CHECK(rep.t_rel == doctest::Approx(24851.695571501095).epsilon(1e-8));
  double N = 4096;
  CHECK(rep.t_rel / N == doctest::Approx(6.06730848913601).epsilon(1e-8));
}

TEST_CASE("bottleneck ratio: closed forms and input validation") {
  // flip chain: pi = (1/2, 1/2) and Phi = pi(0) P(0,1) / pi({0}) = P(0,1),
  // which is the move probability 1 - laziness
  dense_chain edge = make_chain(small_graph::single_edge(), 0.5);
  std::vector<char> left = {1, 0};
  CHECK(bottleneck_ratio(edge, left) == doctest::Approx(0.5).epsilon(1e-14));
  dense_chain flip = make_chain(small_graph::single_edge(), 0.0);
  CHECK(bottleneck_ratio(flip, left) == doctest::Approx(1.0).epsilon(1e-14));

  std::vector<char> none = {0, 0}, all = {1, 1}, heavy = {0, 1, 1};
  CHECK_THROWS_AS((void)bottleneck_ratio(edge, none), spectral_error);
  CHECK_THROWS_AS((void)bottleneck_ratio(edge, all), spectral_error);
  dense_chain p3 = make_chain(small_graph::path(2), 0.5);
  CHECK_THROWS_AS((void)bottleneck_ratio(p3, heavy), spectral_error);  // pi = 3/4
  std::vector<char> wrong_size = {1};
  CHECK_THROWS_AS((void)bottleneck_ratio(edge, wrong_size), spectral_error);
}

TEST_CASE("the origin cut: one edge, closed form, dense cross-check") {
  family_spec s;
  s.k = 2;
  tree_graph g = build_family_tree(s);
  cut_report cut = origin_cut(g, 0.5);
  CHECK(cut.cut_edges == 1);
  CHECK(cut.pi_block == doctest::Approx(8189.0 / 10772.0).epsilon(1e-14));
  CHECK(cut.pi_side == doctest::Approx(2583.0 / 10772.0).epsilon(1e-14));
  // crossing flow 0.5/degree_total over the complement's mass
  CHECK(cut.phi == doctest::Approx(0.5 / 2583.0).epsilon(1e-12));
  CHECK(cut.lower_bound == doctest::Approx(2583.0).epsilon(1e-12));

  // same cut through the generic dense ratio on an affordable family
  family_spec s2 = spec_of(2, 2);
  tree_graph g2 = build_family_tree(s2);
  dense_chain dc = materialize(make_walk(s2, 0.5));
  std::vector<char> in_set(g2.n_vertices, 0);
  for (u64 x = 0; x < g2.n_vertices; ++x)
    if (x != 0 && g2.region_of_state(x) != 0) in_set[x] = 1;  // complement side
  cut_report cut2 = origin_cut(g2, 0.5);
  CHECK(bottleneck_ratio(dc, in_set) == doctest::Approx(cut2.phi).epsilon(1e-12));

  // the Cheeger lower bound really is below the relaxation time
  quotient_chain q = level_quotient(g, 0.5, start_spec::path(16));
  CHECK(relaxation_quotient(q).t_rel >= cut.lower_bound);
}

TEST_CASE("segment inequality: exact best constant and random functions") {
  line_poincare_report rep = poincare_line_check(64, 1000, 12345);
  CHECK(rep.n == 64);
  CHECK(rep.trials == 1000);
  CHECK(rep.all_pass);
  CHECK(rep.max_ratio <= 1.0);
  CHECK(rep.closed_form_gap <= 1e-12);
  // best constant ~ (2(2n+1)/pi)^2 / 4 ~ 0.4 n^2: inside [n^2/16, n^2]
  CHECK(rep.sup_ratio > 1.0 / 16);
  CHECK(rep.sup_ratio <= 1.0);
  double closed = 1.0 / (4 * std::pow(std::sin(M_PI / (2 * (2 * 64.0 + 1))), 2));
  CHECK(rep.exact_sup == doctest::Approx(closed).epsilon(1e-10));

  // the maximizer achieves the sup, so max_ratio must reach sup/n^2
  CHECK(rep.max_ratio == doctest::Approx(rep.sup_ratio).epsilon(1e-10));
}

TEST_CASE("grounded Rayleigh quotients respect the tree best constant") {
  std::vector<u64> sizes = {7, 15, 31, 63};
  tree_poincare_report rep = poincare_tree_check(sizes);
  REQUIRE(rep.rows.size() == sizes.size());
  CHECK(rep.bounded);
  CHECK(rep.spread <= 16);
  for (const tree_poincare_entry& row : rep.rows) {
    CHECK(row.sup_over_m == doctest::Approx(row.sup / row.m).epsilon(1e-14));
    CHECK(row.sup > 0);
  }
  // frozen anchor for the largest tree in the list
  CHECK(rep.rows.back().sup == doctest::Approx(104.409).epsilon(1e-4));

  // no random grounded function may beat the sup
  dense_chain tree = make_chain(small_graph::complete_tree(63, false), 0.0);
  rng_stream rng(777);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> g(63);
    for (double& v : g) v = rng.symmetric();
    g[0] = 0;
    double ratio = grounded_rayleigh(tree, 0, g);
    CHECK(ratio <= rep.rows.back().sup * (1 + 1e-10));
  }
  std::vector<double> not_grounded(63, 1.0);
  CHECK_THROWS_AS((void)grounded_rayleigh(tree, 0, not_grounded), spectral_error);
}

TEST_CASE("complement inequality: dense route, frozen constant") {
  family_spec s;
  s.k = 2;
  complement_poincare_report rep = complement_poincare_check(s);
  CHECK(rep.method == "dense");
  CHECK(rep.states == 1292);  // path 16 + two tree interiors
  CHECK(rep.sup_over_n == doctest::Approx(3.34344646).epsilon(1e-8));
  CHECK(rep.sup == doctest::Approx(13694.7566).epsilon(1e-8));
  CHECK(rep.sup * rep.mu_min == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.sup_over_n > 1.0 / 64);
  CHECK(rep.sup_over_n < 64);
}

TEST_CASE("complement inequality: inverse iteration matches the dense route") {
  family_spec s = spec_of(2, 2);
  complement_poincare_report dense = complement_poincare_check(s);
  REQUIRE(dense.method == "dense");
  complement_poincare_report iter = complement_poincare_check(s, 0);
  CHECK(iter.method == "inverse-iteration");
  CHECK(iter.iterations > 0);
  CHECK(iter.mu_min == doctest::Approx(dense.mu_min).epsilon(1e-9));
  CHECK(iter.sup == doctest::Approx(dense.sup).epsilon(1e-9));
  CHECK(iter.residual <= 1e-8);

  // random functions vanishing on the excluded block stay below the sup
  tree_graph g = build_family_tree(s);
  family_system sys(g, 0.0);
  rng_stream rng(31);
  for (int trial = 0; trial < 1000; ++trial) {
    family_system::vec h = sys.make_vec();
    for (size_t i = 1; i < h.path.size(); ++i) h.path[i] = rng.symmetric();
    for (auto& seg : h.tree)
      for (double& x : seg) x = rng.symmetric();
    family_system::vec Ah = sys.make_vec();
    sys.apply(h, Ah);
    double ratio = sys.dot_pi(h, h) / sys.dot_pi(h, Ah);
    CHECK(ratio <= dense.sup * (1 + 1e-8));
  }
}

TEST_CASE("variational identity: t_rel equals the Rayleigh sup at the maximizer") {
  variational_report p3 = variational_gap_check(make_chain(small_graph::path(2), 0.5));
  CHECK(p3.t_rel == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(p3.rel_err <= 1e-10);

  family_spec s = spec_of(2, 2);
  variational_report fam = variational_gap_check(materialize(make_walk(s, 0.5)));
  CHECK(fam.rel_err <= 1e-8);
  CHECK(fam.rayleigh_sup == doctest::Approx(fam.t_rel).epsilon(1e-8));

  // no function can exceed the sup: Var_pi(f) <= t_rel * E(f,f)
  chain_operator c = make_walk(s, 0.5);
  rng_stream rng(55);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> f(c.states());
    for (double& v : f) v = rng.symmetric();
    double var = variance_under_pi(c, f);
    double energy = dirichlet_form(c, f, f);
    CHECK(var <= fam.t_rel * energy * (1 + 1e-8));
  }
}

TEST_CASE("relaxation scales linearly with the family's base size") {
  // alpha = 2 shrinks N to 256; t_rel/N stays in the same narrow band
  family_spec s2 = spec_of(2, 2);
  spectral_report rep = relaxation_dense(materialize(make_walk(s2, 0.5)));
  double over_n = rep.t_rel / 256.0;
  CHECK(rep.lambda_2 == doctest::Approx(0.9993945081465222).epsilon(1e-12));
  CHECK(over_n == doctest::Approx(6.451).epsilon(1e-3));
  CHECK(over_n > 1.0 / 64);
  CHECK(over_n < 64);
}

TEST_CASE("eigen backends agree when both are built in") {
  chain_operator c = make_walk(spec_of(2, 2), 0.5);
  Eigen::MatrixXd P = materialize(c).P;
  Eigen::MatrixXd S(P.rows(), P.cols());
  prob_vector pi = c.stationary();
  for (int i = 0; i < P.rows(); ++i)
    for (int j = 0; j < P.cols(); ++j)
      S(i, j) = std::sqrt(pi[i] / pi[j]) * P(i, j);
  S = 0.5 * (S + S.transpose());  // clean round-off asymmetry

  set_eig_backend(1);
  sym_eig a = sym_eigensolve(S);
  set_eig_backend(0);
  bool have_lapack = true;
  sym_eig b;
  try {
    set_eig_backend(2);
    b = sym_eigensolve(S);
  } catch (const std::exception&) {
    have_lapack = false;
  }
  set_eig_backend(0);
  if (have_lapack) {
    REQUIRE(a.values.size() == b.values.size());
    for (int i = 0; i < a.values.size(); ++i)
      CHECK(std::abs(a.values(i) - b.values(i)) <= 1e-10);
  }
  // descending order either way
  for (int i = 1; i < a.values.size(); ++i) CHECK(a.values(i) <= a.values(i - 1) + 1e-14);
}
