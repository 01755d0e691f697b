// Hitting-time moments.  The segment-structured elimination is checked
// against dense LU solves, gambler's-ruin closed forms, and an independent
// absorption-enumeration oracle; excursion and local-time laws are checked
// against exact formulas.
#include "treewalk/chain.hpp"
#include "treewalk/hitting.hpp"
#include "treewalk/rng.hpp"

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

// fill every slot of a segment vector with draws from rng
void randomize(family_system::vec& v, rng_stream& rng) {
  for (size_t i = 1; i < v.path.size(); ++i) v.path[i] = rng.symmetric();
  for (auto& seg : v.tree)
    for (double& x : seg) x = rng.symmetric();
}

double max_abs_diff(const family_system::vec& a, const family_system::vec& b) {
  double m = 0;
  for (size_t i = 1; i < a.path.size(); ++i)
    m = std::max(m, std::abs(a.path[i] - b.path[i]));
  for (size_t s = 0; s < a.tree.size(); ++s)
    for (size_t i = 0; i < a.tree[s].size(); ++i)
      m = std::max(m, std::abs(a.tree[s][i] - b.tree[s][i]));
  return m;
}

}  // namespace

TEST_CASE("solve and apply are inverse to each other") {
  for (double laziness : {0.0, 0.5}) {
    tree_graph g = build_family_tree(spec_of(2, 2));
    family_system sys(g, laziness);
    // unknowns: everything except path 0 and the origin tree's interior
    CHECK(sys.unknowns() == g.n_vertices - 1 - (g.regions[0].actual - 1));

    rng_stream rng(42);
    family_system::vec rhs = sys.make_vec(), x = sys.make_vec(), back = sys.make_vec();
    for (int trial = 0; trial < 5; ++trial) {
      randomize(rhs, rng);
      sys.solve(rhs, x);
      sys.apply(x, back);
      CHECK(max_abs_diff(back, rhs) <= 1e-10);
      CHECK(sys.max_residual(x, rhs) <= 1e-10);
    }
  }
}

TEST_CASE("stationary weights over the unknowns sum to the complement mass") {
  family_spec s;
  s.k = 2;  // canonical: origin block holds 8189/10772 of the mass
  tree_graph g = build_family_tree(s);
  family_system sys(g, 0.5);
  family_system::vec ones = sys.make_vec(1.0);
  ones.path[0] = 0;  // slot 0 is not an unknown
  CHECK(sys.dot_pi(ones, ones) == doctest::Approx(2583.0 / 10772.0).epsilon(1e-12));
  CHECK(sys.norm_pi(ones) ==
        doctest::Approx(std::sqrt(2583.0 / 10772.0)).epsilon(1e-12));
}

TEST_CASE("family moments agree with a dense LU oracle") {
  family_spec s = spec_of(2, 2);  // 347 states: dense is cheap
  for (double laziness : {0.0, 0.5}) {
    family_hitting fam = hitting_from_path(build_family_tree(s), laziness);
    dense_chain dc = materialize(make_walk(s, laziness));
    hitting_table tab = hitting_solve_dense(dc, {0});
    REQUIRE(fam.mean.size() == (size_t)build_family_tree(s).nk + 1);
    for (size_t pos = 0; pos < fam.mean.size(); ++pos) {
      CHECK(fam.mean[pos] == doctest::Approx(tab.mean[pos]).epsilon(1e-10));
      CHECK(fam.second[pos] == doctest::Approx(tab.second[pos]).epsilon(1e-10));
    }
    CHECK(fam.mean_residual <= 1e-12);
    CHECK(fam.second_residual <= 1e-12);
  }
}

TEST_CASE("gambler's ruin on a path: mean i(2n-i), lazy doubling") {
  for (int n : {1, 2, 8, 32}) {
    dense_chain plain = make_chain(small_graph::path(n), 0.0);
    dense_chain lazy = make_chain(small_graph::path(n), 0.5);
    hitting_table tp = hitting_solve_dense(plain, {0});
    hitting_table tl = hitting_solve_dense(lazy, {0});
    for (int i = 0; i <= n; ++i) {
      double closed = (double)i * (2.0 * n - i);
      CHECK(tp.mean[i] == doctest::Approx(closed).epsilon(1e-11));
      CHECK(tl.mean[i] == doctest::Approx(2 * closed).epsilon(1e-11));
      if (i > 0) {
        transfer_report tr = transfer_identities(tl.mean[i], tl.variance(i),
                                                 tp.mean[i], tp.variance(i));
        CHECK(tr.mean_rel_err <= 1e-11);
        CHECK(tr.var_rel_err <= 1e-9);
      }
    }
  }
}

TEST_CASE("an absorption enumeration reproduces the dense variance") {
  // lazy walk on {0,1,2}; kill at 0 and enumerate P(tau > t) directly
  dense_chain c = make_chain(small_graph::path(2), 0.5);
  hitting_table tab = hitting_solve_dense(c, {0});

  Eigen::Matrix2d Q;  // substochastic restriction to {1,2}
  Q << 0.5, 0.25, 0.5, 0.5;
  Eigen::RowVector2d row(0.0, 1.0);  // start at 2
  double e = 0, e2 = 0;
  for (u64 t = 0; t < 4000; ++t) {
    double tail = row.sum();  // P(tau > t)
    e += tail;
    e2 += (2.0 * t + 1.0) * tail;
    row = row * Q;
  }
  CHECK(row.sum() <= 1e-100);  // the truncated remainder is negligible
  CHECK(tab.mean[2] == doctest::Approx(e).epsilon(1e-12));
  CHECK(tab.second[2] == doctest::Approx(e2).epsilon(1e-12));
  CHECK(tab.mean[2] == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(tab.variance(2) == doctest::Approx(e2 - e * e).epsilon(1e-10));
}

TEST_CASE("transfer identities hold between independent lazy and plain solves") {
  tree_graph g = build_family_tree(spec_of(2, 3));
  family_hitting lazy = hitting_from_path(g, 0.5);
  family_hitting plain = hitting_from_path(g, 0.0);
  for (u64 pos = 1; pos <= g.nk; ++pos) {
    transfer_report tr =
        transfer_identities(lazy.mean[pos], lazy.variance(pos), plain.mean[pos],
                            plain.variance(pos));
    CHECK(tr.mean_rel_err <= 1e-12);
    CHECK(tr.var_rel_err <= 1e-12);
    CHECK(tr.mean_lazy == lazy.mean[pos]);
    CHECK(tr.var_plain == plain.variance(pos));
  }
  // a corrupted pair is flagged, not silently accepted
  transfer_report bad = transfer_identities(21.0, 90.0, 10.0, 20.0);
  CHECK(bad.mean_rel_err == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(bad.var_rel_err == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("canonical family: frozen endpoint moments") {
  family_spec s;
  s.k = 2;
  family_hitting plain = hitting_from_path(build_family_tree(s), 0.5);
  CHECK(plain.mean.back() == doctest::Approx(33120.0).epsilon(1e-10));
  CHECK(plain.variance(16) == doctest::Approx(844357600.0).epsilon(1e-9));

  s.leaf_self_loops = true;
  family_hitting loops = hitting_from_path(build_family_tree(s), 0.5);
  CHECK(loops.mean.back() == doctest::Approx(49504.0).epsilon(1e-10));
  CHECK(loops.variance(16) == doctest::Approx(1894948832.0).epsilon(1e-9));

  // leaf holding lengthens the journey but not its nature
  CHECK(loops.mean.back() > plain.mean.back());
}

TEST_CASE("means increase strictly with the starting position") {
  tree_graph g = build_family_tree(spec_of(2, 3));
  family_hitting fam = hitting_from_path(g, 0.5);
  CHECK(fam.mean[0] == 0);
  CHECK(fam.second[0] == 0);
  for (u64 pos = 1; pos <= g.nk; ++pos) {
    CHECK(fam.mean[pos] > fam.mean[pos - 1]);
    CHECK(fam.second[pos] > fam.second[pos - 1]);
    CHECK(fam.variance(pos) > 0);
  }
}

TEST_CASE("excursion law: all four convention combinations in closed form") {
  for (int n : {7, 15, 31}) {
    excursion_conventions conv;
    excursion_report plain = excursion_moments(n, conv);
    CHECK(plain.mean == doctest::Approx(n - 1.0).epsilon(1e-12));
    CHECK_FALSE(plain.matches_loop_identity);

    conv.self_loops = true;
    excursion_report withloops = excursion_moments(n, conv);
    CHECK(withloops.mean == doctest::Approx((3.0 * n - 1) / 2).epsilon(1e-12));
    CHECK(withloops.matches_loop_identity);
    CHECK(withloops.loop_identity_value == doctest::Approx((3.0 * n - 1) / 2));

    conv.lazy = true;
    excursion_report lazyloops = excursion_moments(n, conv);
    CHECK(lazyloops.mean == doctest::Approx(3.0 * n - 1).epsilon(1e-12));
    CHECK_FALSE(lazyloops.matches_loop_identity);

    conv.self_loops = false;
    excursion_report lazy = excursion_moments(n, conv);
    CHECK(lazy.mean == doctest::Approx(2.0 * (n - 1)).epsilon(1e-12));
    CHECK_FALSE(lazy.matches_loop_identity);

    // laziness doubles the mean and maps the second moment as 4 E[T^2] + 2 E[T]
    CHECK(lazy.second ==
          doctest::Approx(4 * plain.second + 2 * plain.mean).epsilon(1e-12));
    CHECK(lazyloops.second ==
          doctest::Approx(4 * withloops.second + 2 * withloops.mean).epsilon(1e-12));

    // the root's outside edges do not change the law given entry
    conv.lazy = false;
    conv.self_loops = true;
    conv.root_in_situ = true;
    excursion_report situ = excursion_moments(n, conv);
    CHECK(situ.mean == doctest::Approx(withloops.mean).epsilon(1e-14));
    CHECK(situ.second == doctest::Approx(withloops.second).epsilon(1e-14));
    CHECK(situ.conv.root_in_situ);
  }
}

TEST_CASE("excursion second moments on the smallest tree are exact") {
  excursion_conventions conv;
  excursion_report plain = excursion_moments(3, conv);
  CHECK(plain.mean == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(plain.second == doctest::Approx(4.0).epsilon(1e-14));  // T == 2 surely

  conv.lazy = true;
  excursion_report lazy = excursion_moments(3, conv);
  CHECK(lazy.mean == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(lazy.second == doctest::Approx(20.0).epsilon(1e-13));

  conv.lazy = false;
  conv.self_loops = true;
  excursion_report loops = excursion_moments(3, conv);
  CHECK(loops.mean == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(loops.second == doctest::Approx(22.0).epsilon(1e-13));
}

TEST_CASE("excursions need at least a root and two children") {
  CHECK_THROWS_AS((void)excursion_moments(2, {}), solve_error);
  CHECK_THROWS_AS((void)excursion_moments(0, {}), solve_error);
  CHECK_THROWS_AS((void)excursion_moments(-5, {}), solve_error);
}

TEST_CASE("site local time is geometric with escape probability 1/(2i)") {
  local_time_report r11 = local_time_law(1, 1);
  CHECK(r11.escape_exact == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(r11.mean == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(r11.max_pmf_err <= 1e-15);

  for (int n : {4, 16}) {
    for (int i = 1; i <= n; i *= 2) {
      CAPTURE(n);
      CAPTURE(i);
      local_time_report r = local_time_law(n, i);
      CHECK(r.escape_closed == doctest::Approx(1.0 / (2 * i)).epsilon(1e-16));
      CHECK(std::abs(r.escape_exact - r.escape_closed) <= 1e-12);
      CHECK(r.max_pmf_err <= 1e-10);
      CHECK(r.mean == doctest::Approx(2.0 * i).epsilon(1e-10));
    }
  }

  CHECK_THROWS_AS((void)local_time_law(4, 0), solve_error);
  CHECK_THROWS_AS((void)local_time_law(4, 5), solve_error);
}

TEST_CASE("exact-size trees solve just as well as perfect ones") {
  family_spec s = spec_of(2, 2);
  s.mode = tree_mode::exact_size;
  family_hitting fam = hitting_from_path(build_family_tree(s), 0.5);
  dense_chain dc = materialize(make_walk(s, 0.5));
  hitting_table tab = hitting_solve_dense(dc, {0});
  for (size_t pos = 0; pos < fam.mean.size(); ++pos)
    CHECK(fam.mean[pos] == doctest::Approx(tab.mean[pos]).epsilon(1e-10));
}
