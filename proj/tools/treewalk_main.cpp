// treewalk_main.cpp — command-line front door: build, profile, tmix, hitting,
// spectral, mc, couple, verify, sweep.  Data outputs depend only on the
// config and seed, never on --threads or --out, and every file names its
// manifest.
#include "treewalk/chain.hpp"
#include "treewalk/eig.hpp"
#include "treewalk/hitting.hpp"
#include "treewalk/io.hpp"
#include "treewalk/lumping.hpp"
#include "treewalk/mixing.hpp"
#include "treewalk/montecarlo.hpp"
#include "treewalk/rng.hpp"
#include "treewalk/spectral.hpp"
#include "treewalk/topology.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

using namespace treewalk;

namespace {

// ---------------------------------------------------------------- flags

struct family_flags {
  int k = 2;
  int base = 0;
  std::string alpha = "3";       // "p" or "p/q"
  int attach_lo = -1;
  std::string mode = "perfect";
  bool self_loops = false;
  double laziness = 0.5;
};

family_spec to_spec(const family_flags& f) {
  family_spec s;
  s.k = f.k;
  s.base = f.base;
  size_t slash = f.alpha.find('/');
  try {
    s.alpha_num = std::stoi(f.alpha.substr(0, slash));
    s.alpha_den = slash == std::string::npos ? 1 : std::stoi(f.alpha.substr(slash + 1));
  } catch (const std::exception&) {
    throw spec_error("cannot parse --alpha '" + f.alpha + "' (want p or p/q)");
  }
  s.attach_lo = f.attach_lo;
  s.mode = f.mode == "perfect" ? tree_mode::perfect : tree_mode::exact_size;
  s.leaf_self_loops = f.self_loops;
  s.validate();
  return s;
}

void add_family_flags(CLI::App* c, family_flags& f) {
  c->add_option("--k", f.k, "number of attachment scales");
  c->add_option("--base", f.base, "0: n_j = 2^(2^j); else n_j = base^j");
  c->add_option("--alpha", f.alpha, "origin-tree mass exponent, p or p/q");
  c->add_option("--attach-lo", f.attach_lo, "first attached scale (-1: max(1, k/2))");
  c->add_option("--mode", f.mode, "tree sizing")
      ->check(CLI::IsMember({"perfect", "exact_size"}));
  c->add_flag("--self-loops", f.self_loops, "self-loop at childless tree vertices");
  c->add_option("--laziness", f.laziness, "hold probability per step")
      ->check(CLI::Range(0.0, 1.0));
}

json family_config(const family_flags& f) {
  json j;
  j["k"] = f.k;
  j["base"] = f.base;
  j["alpha"] = f.alpha;
  j["attach-lo"] = f.attach_lo;
  j["mode"] = f.mode;
  j["self-loops"] = f.self_loops;
  j["laziness"] = f.laziness;
  return j;
}

// --config JSON merge: a key applies only when its flag was not given
void merge_config(CLI::App* cmd, const std::string& path) {
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) throw spec_error("cannot read config file " + path);
  json cfg;
  try {
    in >> cfg;
  } catch (const std::exception& e) {
    throw spec_error("config file " + path + ": " + e.what());
  }
  auto as_text = [](const json& v) {
    return v.is_string() ? v.get<std::string>() : v.dump();
  };
  for (auto& [key, value] : cfg.items()) {
    CLI::Option* opt = cmd->get_option_no_throw("--" + key);
    if (!opt) throw spec_error("config key '" + key + "' is not a flag of this command");
    if (opt->count() > 0) continue;  // flags win
    if (value.is_array())
      for (const json& v : value) opt->add_result(as_text(v));
    else
      opt->add_result(as_text(value));
    opt->run_callback();
  }
}

unsigned default_threads() {
  unsigned n = std::thread::hardware_concurrency();
  return n ? n : 1;
}

json graph_json(const tree_graph& g) {
  json j;
  j["N"] = g.N;
  j["nk"] = g.nk;
  j["n_vertices"] = g.n_vertices;
  j["n_self_loops"] = g.n_self_loops;
  j["degree_total"] = g.degree_total;
  j["edge_count"] = g.edge_count();
  json sched = json::array();
  for (int jj = 1; jj <= g.spec.k; ++jj) sched.push_back(g.spec.n_of(jj));
  j["schedule"] = sched;
  json regions = json::array();
  for (const region_info& r : g.regions) {
    json rr;
    rr["name"] = r.name;
    rr["j"] = r.j;
    rr["root_pos"] = r.root_pos;
    rr["requested"] = r.requested;
    rr["actual"] = r.actual;
    rr["depth"] = r.depth;
    regions.push_back(rr);
  }
  j["regions"] = regions;
  return j;
}

struct timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

// Writes <out>/<name>.json (+ manifest/timings).  Cross-references between
// sibling files use bare filenames so equal configs produce byte-identical
// artifacts independent of the output directory.
std::string emit_json(const std::string& dir, const std::string& name,
                      run_manifest m, json data, double elapsed) {
  std::string stem = path_join(dir, name);
  std::string file = stem + ".json";
  m.outputs = {name + ".json"};
  m.elapsed_seconds = elapsed;
  write_manifest(stem, m);
  data["manifest"] = name + ".manifest.json";
  write_json_atomic(file, data);
  return file;
}

std::string emit_csv_and_json(const std::string& dir, const std::string& name,
                              run_manifest m, const csv_table& table, json data,
                              double elapsed) {
  std::string stem = path_join(dir, name);
  std::string csv_file = stem + ".csv";
  std::string json_file = stem + ".json";
  m.outputs = {name + ".csv", name + ".json"};
  m.elapsed_seconds = elapsed;
  write_manifest(stem, m);
  write_text_atomic(csv_file, table.render(name + ".manifest.json"));
  data["manifest"] = name + ".manifest.json";
  write_json_atomic(json_file, data);
  return csv_file;
}

// ---------------------------------------------------------------- build

int run_build(const family_flags& f, const std::string& out) {
  timer tm;
  family_spec spec = to_spec(f);
  tree_graph g = build_family_tree(spec);
  std::string dir = resolve_out_dir(out);
  run_manifest m;
  m.command = "build";
  m.config = family_config(f);
  std::string file = emit_json(dir, "build", m, graph_json(g), tm.seconds());
  std::cout << "k=" << spec.k << " N=" << g.N << " path=[0," << g.nk << "] vertices="
            << g.n_vertices << " edges=" << g.edge_count() << "\n"
            << "wrote " << file << "\n";
  return 0;
}

// ---------------------------------------------------------------- tmix

int run_tmix(const family_flags& f, std::vector<double> eps_list,
             const std::string& out) {
  timer tm;
  family_spec spec = to_spec(f);
  if (eps_list.empty()) eps_list = {0.25};
  family_analyzer an(spec, f.laziness);
  json entries = json::array();
  for (double eps : eps_list) {
    u64 t = an.mixing_time(eps);
    if (eps_list.size() == 1)
      std::cout << t << "\n";
    else
      std::cout << "eps=" << eps << " t=" << t << "\n";
    entries.push_back({{"eps", eps}, {"tmix", t}});
  }
  json data;
  data["N"] = an.graph().N;
  data["nk"] = an.graph().nk;
  data["entries"] = entries;
  run_manifest m;
  m.command = "tmix";
  m.config = family_config(f);
  m.config["eps"] = eps_list;
  emit_json(resolve_out_dir(out), "tmix", m, data, tm.seconds());
  return 0;
}

// ---------------------------------------------------------------- profile

int run_profile(const family_flags& f, u64 tmax, u64 points, const std::string& out) {
  timer tm;
  family_spec spec = to_spec(f);
  family_analyzer an(spec, f.laziness);
  if (tmax == 0) tmax = (u64)((double)an.mixing_time(0.01) * 1.25) + 1;
  csv_table table;
  table.columns = {"t", "d", "worst_start"};
  u64 prev = u64(-1);
  for (u64 i = 0; i <= points; ++i) {
    u64 t = (u64)((double)tmax * (double)i / (double)points + 0.5);
    if (t == prev) continue;
    prev = t;
    double d = an.d_max(t);
    table.add_row({std::to_string(t), fmt_double(d),
                   an.start_name(an.worst_start(t))});
  }
  json data;
  data["N"] = an.graph().N;
  data["tmax"] = tmax;
  json tmix = json::array();
  for (double eps : default_eps_grid())
    tmix.push_back({{"eps", eps}, {"tmix", an.mixing_time(eps)}});
  data["tmix"] = tmix;
  run_manifest m;
  m.command = "profile";
  m.config = family_config(f);
  m.config["tmax"] = tmax;
  m.config["points"] = points;
  std::string file =
      emit_csv_and_json(resolve_out_dir(out), "profile", m, table, data, tm.seconds());
  std::cout << "wrote " << file << "\n";
  return 0;
}

// ---------------------------------------------------------------- hitting

int run_hitting(const family_flags& f, const std::string& out) {
  timer tm;
  family_spec spec = to_spec(f);
  tree_graph g = build_family_tree(spec);
  family_hitting h = hitting_from_path(g, f.laziness);
  csv_table table;
  table.columns = {"pos", "mean", "variance"};
  for (u64 p = 0; p <= g.nk; ++p)
    table.add_row({std::to_string(p), fmt_double(h.mean[p]), fmt_double(h.variance(p))});
  double E = h.mean[g.nk], V = h.variance(g.nk);
  double Nk = (double)g.N * spec.k;
  json data;
  data["start"] = g.nk;
  data["mean"] = E;
  data["variance"] = V;
  data["second_moment"] = h.second[g.nk];
  data["mean_residual"] = h.mean_residual;
  data["second_residual"] = h.second_residual;
  data["mean_over_6Nk"] = E / (6 * Nk);
  data["var_over_N2k"] = V / ((double)g.N * Nk);
  data["cv2"] = V / (E * E);
  run_manifest m;
  m.command = "hitting";
  m.config = family_config(f);
  emit_csv_and_json(resolve_out_dir(out), "hitting", m, table, data, tm.seconds());
  std::cout << "E[tau]=" << fmt_double(E) << " Var=" << fmt_double(V)
            << " E/(6Nk)=" << fmt_double(E / (6 * Nk)) << "\n";
  return 0;
}

// ---------------------------------------------------------------- spectral

int run_spectral(const family_flags& f, bool use_power, const std::string& out) {
  timer tm;
  family_spec spec = to_spec(f);
  tree_graph g = build_family_tree(spec);
  chain_operator walk = make_walk(spec, f.laziness);

  quotient_chain q = level_quotient(g, f.laziness, start_spec::path(g.nk));
  spectral_report qr = relaxation_quotient(q);
  json data;
  data["quotient"] = {{"lambda_2", qr.lambda_2}, {"t_rel", qr.t_rel},
                      {"classes", q.n_classes()}};

  bool ok = true;
  spectral_report best = qr;
  if (g.n_vertices <= 6000) {
    spectral_report dr = relaxation_dense(materialize(walk));
    data["dense"] = {{"lambda_2", dr.lambda_2}, {"t_rel", dr.t_rel}};
    double gap = std::abs(dr.lambda_2 - qr.lambda_2);
    data["quotient_validated"] = gap <= 1e-8;
    if (gap > 1e-8) ok = false;
    best = dr;
  }
  if (use_power) {
    spectral_report pr = relaxation_power(walk);
    data["power"] = {{"lambda_2", pr.lambda_2}, {"t_rel", pr.t_rel},
                     {"iterations", pr.iterations}, {"residual", pr.residual}};
  }

  cut_report cut = origin_cut(g, f.laziness);
  data["bottleneck"] = {{"origin-complement", cut.phi}};
  data["pi_origin_block"] = cut.pi_block;
  data["cheeger_lower"] = cut.lower_bound;
  bool cheeger_ok = best.t_rel >= cut.lower_bound * (1 - 1e-8);
  data["cheeger_ok"] = cheeger_ok;
  if (!cheeger_ok) ok = false;

  data["lambda_2"] = best.lambda_2;
  data["lambda_star"] = best.lambda_star;
  data["t_rel"] = best.t_rel;
  data["t_rel_over_N"] = best.t_rel / (double)g.N;
  data["method"] = best.method;

  run_manifest m;
  m.command = "spectral";
  m.config = family_config(f);
  m.config["power"] = use_power;
  emit_json(resolve_out_dir(out), "spectral", m, data, tm.seconds());
  std::cout << "lambda_2=" << fmt_double(best.lambda_2) << " t_rel="
            << fmt_double(best.t_rel) << " t_rel/N=" << fmt_double(best.t_rel / (double)g.N)
            << " (" << best.method << ")\n";
  return ok ? 0 : 1;
}

// ---------------------------------------------------------------- mc

json summary_json(const moment_summary& s) {
  json j;
  j["n"] = s.n;
  j["mean"] = s.mean;
  j["var"] = s.var;
  j["se_mean"] = s.se_mean;
  j["se_var"] = s.se_var;
  j["min"] = s.min;
  j["max"] = s.max;
  return j;
}

int run_mc(const family_flags& f, u64 seed, u64 replicates, u64 max_steps,
           unsigned threads, bool samples, const std::string& out) {
  timer tm;
  family_spec spec = to_spec(f);
  chain_operator walk = make_walk(spec, f.laziness);
  const tree_graph& g = walk.graph;
  mc_config cfg{seed, replicates, max_steps};
  decomp_stats stats = sample_hitting_time(walk, g.nk, 0, cfg, threads);

  json data;
  data["seed"] = seed;
  data["replicates"] = replicates;
  data["start"] = g.nk;
  data["target"] = 0;
  data["truncated"] = stats.truncated;
  data["tau"] = summary_json(summarize_counts(stats.tau));
  data["on_path"] = summary_json(summarize_counts(stats.on_path));
  json per_region = json::object();
  for (size_t r = 1; r < g.regions.size(); ++r) {
    std::vector<u64> d(replicates), v(replicates);
    for (u64 i = 0; i < replicates; ++i) {
      d[i] = stats.in_tree[i][r];
      v[i] = stats.visits[i][r];
    }
    per_region[g.regions[r].name] = {{"steps", summary_json(summarize_counts(d))},
                                     {"visits", summary_json(summarize_counts(v))}};
  }
  data["regions"] = per_region;

  run_manifest m;
  m.command = "mc";
  m.config = family_config(f);
  m.seed = seed;
  m.config["seed"] = seed;
  m.config["replicates"] = replicates;
  m.config["max-steps"] = max_steps;

  std::string dir = resolve_out_dir(out);
  if (samples) {
    csv_table table;
    table.columns = {"replicate", "tau", "on_path"};
    for (size_t r = 1; r < g.regions.size(); ++r) {
      table.columns.push_back("steps_" + g.regions[r].name);
      table.columns.push_back("visits_" + g.regions[r].name);
    }
    for (u64 i = 0; i < replicates; ++i) {
      std::vector<std::string> row = {std::to_string(i), std::to_string(stats.tau[i]),
                                      std::to_string(stats.on_path[i])};
      for (size_t r = 1; r < g.regions.size(); ++r) {
        row.push_back(std::to_string(stats.in_tree[i][r]));
        row.push_back(std::to_string(stats.visits[i][r]));
      }
      table.add_row(std::move(row));
    }
    m.config["samples"] = true;
    emit_csv_and_json(dir, "mc", m, table, data, tm.seconds());
  } else {
    emit_json(dir, "mc", m, data, tm.seconds());
  }
  moment_summary s = summarize_counts(stats.tau);
  std::cout << "tau mean=" << fmt_double(s.mean) << " se=" << fmt_double(s.se_mean)
            << " var=" << fmt_double(s.var) << " truncated=" << stats.truncated << "\n";
  return 0;
}

// ---------------------------------------------------------------- couple

int run_couple(const family_flags& f, u64 seed, u64 replicates, u64 max_steps,
               unsigned threads, const std::string& out) {
  timer tm;
  family_spec spec = to_spec(f);
  chain_operator walk = make_walk(spec, f.laziness);
  const tree_graph& g = walk.graph;
  mc_config cfg{seed, replicates, max_steps};
  coupling_stats stats = simulate_coupling(walk, g.nk, cfg, threads);

  csv_table table;
  table.columns = {"t", "tail"};
  u64 step = std::max<u64>(1, (u64)g.N * (u64)spec.k / 2);
  for (u64 jj = 0; jj <= 24; ++jj)
    table.add_row({std::to_string(jj * step), fmt_double(stats.tail_at(jj * step))});

  json data;
  data["seed"] = seed;
  data["replicates"] = replicates;
  data["truncated"] = stats.truncated;
  data["tau"] = summary_json(summarize_counts(stats.tau));
  data["t_hit_origin"] = summary_json(summarize_counts(stats.t_hit_origin));
  data["t_level_match"] = summary_json(summarize_counts(stats.t_level_match));
  data["collision_outside_origin_coalesces"] = true;  // convention marker

  run_manifest m;
  m.command = "couple";
  m.config = family_config(f);
  m.seed = seed;
  m.config["seed"] = seed;
  m.config["replicates"] = replicates;
  m.config["max-steps"] = max_steps;
  emit_csv_and_json(resolve_out_dir(out), "couple", m, table, data, tm.seconds());
  moment_summary s = summarize_counts(stats.tau);
  std::cout << "coupling mean=" << fmt_double(s.mean) << " truncated=" << stats.truncated
            << "\n";
  return 0;
}

// ---------------------------------------------------------------- verify

struct check_list {
  json checks = json::array();
  bool all = true;
  void add(const std::string& name, bool pass, json detail) {
    checks.push_back({{"name", name}, {"pass", pass}, {"detail", detail}});
    all = all && pass;
    std::cout << (pass ? "PASS " : "FAIL ") << name << " " << detail.dump() << "\n";
  }
};

int run_verify(const family_flags& f, u64 seed, unsigned threads, const std::string& out);

// ---------------------------------------------------------------- sweep

int run_sweep(const family_flags& f, const std::string& k_list_str,
              std::vector<double> eps_grid, const std::string& out) {
  timer tm;
  std::vector<int> k_list;
  {
    std::string tok;
    std::istringstream is(k_list_str);
    while (std::getline(is, tok, ',')) k_list.push_back(std::stoi(tok));
  }
  if (k_list.empty()) throw spec_error("empty --k-list");
  if (eps_grid.empty()) eps_grid = default_eps_grid();
  std::sort(eps_grid.begin(), eps_grid.end());

  auto has_eps = [&](double e) {
    return std::any_of(eps_grid.begin(), eps_grid.end(),
                       [&](double x) { return x == e; });
  };
  const bool diagnostics = has_eps(0.1) && has_eps(0.9) && has_eps(0.25);

  csv_table table;
  table.columns = {"k", "N", "nk"};
  for (double e : eps_grid) table.columns.push_back("tmix_" + fmt_double(e));
  if (diagnostics)
    table.columns.insert(table.columns.end(),
                         {"ratio_10_90", "window_10", "window_over_Nsqrtk",
                          "window_over_tmix_quarter"});

  json rows = json::array();
  bool any_fail = false;
  for (int k : k_list) {
    family_flags fk = f;
    fk.k = k;
    json row;
    row["k"] = k;
    try {
      family_spec spec = to_spec(fk);
      std::vector<cutoff_row> rep = cutoff_report({spec}, eps_grid, f.laziness);
      const cutoff_row& r = rep[0];
      std::vector<std::string> cells = {std::to_string(k), std::to_string(r.N),
                                        std::to_string(r.nk)};
      json tmix = json::array();
      for (const eps_grid_entry& e : r.tmix) {
        cells.push_back(std::to_string(e.tmix));
        tmix.push_back({{"eps", e.eps}, {"tmix", e.tmix}});
      }
      row["N"] = r.N;
      row["tmix"] = tmix;
      if (diagnostics) {
        double ratio = r.ratio(0.1), window = r.window(0.1);
        double wn = window / ((double)r.N * std::sqrt((double)k));
        double wq = window / (double)r.tmix_at(0.25);
        cells.push_back(fmt_double(ratio));
        cells.push_back(fmt_double(window));
        cells.push_back(fmt_double(wn));
        cells.push_back(fmt_double(wq));
        row["ratio_10_90"] = ratio;
        row["window_10"] = window;
        row["window_over_Nsqrtk"] = wn;
        row["window_over_tmix_quarter"] = wq;
      }
      table.add_row(cells);
    } catch (const std::exception& e) {
      row["error"] = e.what();
      any_fail = true;
      std::cerr << "sweep k=" << k << " failed: " << e.what() << "\n";
    }
    rows.push_back(row);
  }
  json data;
  data["rows"] = rows;
  data["eps_grid"] = eps_grid;

  run_manifest m;
  m.command = "sweep";
  m.config = family_config(f);
  m.config.erase("k");
  m.config["k-list"] = k_list_str;
  m.config["eps-grid"] = eps_grid;
  std::string file =
      emit_csv_and_json(resolve_out_dir(out), "sweep", m, table, data, tm.seconds());
  std::cout << "wrote " << file << "\n";
  return any_fail ? 1 : 0;
}

}  // namespace

// verify is long; kept out of the anonymous namespace block above for clarity
namespace {

int run_verify(const family_flags& f, u64 seed, unsigned threads, const std::string& out) {
  timer tm;
  family_spec spec = to_spec(f);
  tree_graph g = build_family_tree(spec);
  chain_operator walk = make_walk(spec, f.laziness);
  check_list cl;

  // construction: handshake identity and exact-size accounting
  {
    u64 degsum = 0;
    for (u64 x = 0; x < g.n_vertices; ++x) degsum += g.degree(x);
    bool pass = degsum == g.degree_total && degsum == 2 * g.edge_count();
    family_spec es = spec;
    es.mode = tree_mode::exact_size;
    tree_graph ge = build_family_tree(es);
    u64 want = ge.nk + 1;
    for (const region_info& r : ge.regions) want += r.actual - 1;
    pass = pass && ge.n_vertices == want;
    for (const region_info& r : ge.regions) pass = pass && r.actual == r.requested;
    cl.add("construction-invariants", pass,
           {{"degree_total", degsum}, {"exact_size_vertices", ge.n_vertices}});
  }

  // lumping: refinement and closed-form agree, quotients lift exactly
  if (g.n_vertices <= 10'000 && spec.mode == tree_mode::perfect) {
    double worst = 0;
    bool pass = true;
    std::vector<u64> starts = g.canonical_starts();
    for (u64 s : starts) {
      start_spec ss = s <= g.nk ? start_spec::path(s)
                                : start_spec::leaf(g.region_of_state(s));
      partition pr = coarsest_lumpable_partition(walk, s);
      partition pc = materialize_level_partition(g, ss);
      pass = pass && pr.certified && pr.n_classes == pc.n_classes &&
             pr.class_of == pc.class_of;
      quotient_chain q = level_quotient(g, f.laziness, ss);
      lump_report lr = validate_lumping(walk, q, pc, s, {1, 10, 100, 1000});
      worst = std::max(worst, lr.max_linf);
    }
    pass = pass && worst <= 1e-12;
    cl.add("lumping-exactness", pass,
           {{"starts", starts.size()}, {"max_linf", worst}});
  }

  // lazy/plain hitting-moment identities on the family and on paths
  {
    family_hitting lazy = hitting_from_path(g, 0.5);
    family_hitting plain = hitting_from_path(g, 0.0);
    transfer_report tr =
        transfer_identities(lazy.mean[g.nk], lazy.variance(g.nk), plain.mean[g.nk],
                            plain.variance(g.nk));
    double worst = std::max(tr.mean_rel_err, tr.var_rel_err);
    for (int n : {2, 8, 32}) {
      dense_chain cl_ = make_chain(small_graph::path(n), 0.5);
      dense_chain cp = make_chain(small_graph::path(n), 0.0);
      hitting_table hl = hitting_solve_dense(cl_, {0});
      hitting_table hp = hitting_solve_dense(cp, {0});
      transfer_report t2 = transfer_identities(hl.mean[n], hl.variance(n), hp.mean[n],
                                               hp.variance(n));
      worst = std::max({worst, t2.mean_rel_err, t2.var_rel_err});
    }
    cl.add("lazy-transfer-identities", worst <= 1e-8, {{"max_rel_err", worst}});
  }

  // geometric site local times on the killed segment
  {
    double worst = 0;
    for (int n : {4, 16})
      for (int i = 1; i <= n; ++i) {
        local_time_report r = local_time_law(n, i);
        if (i < n)
          worst = std::max({worst, std::abs(r.escape_exact - r.escape_closed),
                            r.max_pmf_err});
      }
    cl.add("site-local-time-geometric", worst <= 1e-10, {{"max_err", worst}});
  }

  // excursion moments under every convention; record which matches (3n-1)/2
  {
    bool pass = true;
    std::string matching = "none";
    for (int n : {7, 15}) {
      for (int mask = 0; mask < 8; ++mask) {
        excursion_conventions conv;
        conv.lazy = mask & 1;
        conv.self_loops = mask & 2;
        conv.root_in_situ = mask & 4;
        excursion_report er = excursion_moments(n, conv);
        excursion_conventions pl = conv;
        pl.lazy = false;
        excursion_report plain = excursion_moments(n, pl);
        if (conv.lazy)
          pass = pass && std::abs(er.mean - 2 * plain.mean) <= 1e-10 * er.mean;
        if (er.matches_loop_identity && !conv.lazy)
          matching = std::string("plain") + (conv.self_loops ? "+self-loops" : "");
      }
    }
    cl.add("excursion-moments", pass, {{"loop_identity_convention", matching}});
  }

  // Poincaré suite: segment, trees, family complement (plain walk)
  {
    line_poincare_report lr = poincare_line_check(64, 1000, seed);
    cl.add("segment-inequality", lr.all_pass && lr.closed_form_gap <= 1e-10,
           {{"max_ratio", lr.max_ratio}, {"exact_sup", lr.exact_sup}});
  }
  {
    tree_poincare_report trp = poincare_tree_check({7, 15, 31, 63, 127});
    bool pass = trp.bounded;
    dense_chain c63 = make_chain(small_graph::complete_tree(63, false), 0.0);
    double sup63 = 0;
    for (const tree_poincare_entry& e : trp.rows)
      if (e.m == 63) sup63 = e.sup;
    rng_stream rng(seed ^ 0x7ee);
    double worst_ratio = 0;
    for (int t = 0; t < 1000; ++t) {
      std::vector<double> gfun(63);
      for (int i = 1; i < 63; ++i) gfun[i] = rng.symmetric();
      worst_ratio = std::max(worst_ratio, grounded_rayleigh(c63, 0, gfun));
    }
    pass = pass && worst_ratio <= sup63 * (1 + 1e-10);
    cl.add("tree-inequality", pass,
           {{"spread", trp.spread}, {"max_random_ratio", worst_ratio},
            {"exact_sup_63", sup63}});
  }
  {
    complement_poincare_report cp = complement_poincare_check(spec);
    bool pass = cp.sup_over_n <= 64 && cp.sup_over_n >= 1.0 / 64;
    family_system sys(g, 0.0);
    rng_stream rng(seed ^ 0xc0);
    double worst_ratio = 0;
    for (int t = 0; t < 1000; ++t) {
      family_system::vec h = sys.make_vec(), ah = sys.make_vec();
      for (u64 p = 1; p <= g.nk; ++p) h.path[p] = rng.symmetric();
      for (auto& segv : h.tree)
        for (double& x : segv) x = rng.symmetric();
      sys.apply(h, ah);
      double ratio = sys.dot_pi(h, h) / sys.dot_pi(h, ah);
      worst_ratio = std::max(worst_ratio, ratio);
    }
    pass = pass && worst_ratio <= cp.sup * (1 + 1e-8);
    cl.add("complement-inequality", pass,
           {{"sup_over_N", cp.sup_over_n}, {"max_random_ratio", worst_ratio},
            {"exact_sup", cp.sup}, {"method", cp.method}});
  }

  // variational characterization and quotient/dense agreement
  {
    variational_report v3 = variational_gap_check(make_chain(small_graph::path(2), 0.5));
    family_flags f2 = f;
    f2.alpha = "2";
    family_spec spec2 = to_spec(f2);
    chain_operator walk2 = make_walk(spec2, f.laziness);
    dense_chain dc2 = materialize(walk2);
    variational_report vf = variational_gap_check(dc2);
    spectral_report dr = relaxation_dense(dc2);
    quotient_chain q2 =
        level_quotient(walk2.graph, f.laziness, start_spec::path(walk2.graph.nk));
    spectral_report qr2 = relaxation_quotient(q2);
    double gap = std::abs(dr.lambda_2 - qr2.lambda_2);
    bool pass = v3.rel_err <= 1e-10 && vf.rel_err <= 1e-8 && gap <= 1e-8;
    cl.add("variational-gap", pass,
           {{"path3_rel_err", v3.rel_err}, {"family_rel_err", vf.rel_err},
            {"quotient_vs_dense", gap}});
  }

  // relaxation vs the one-edge bottleneck bound
  {
    quotient_chain q = level_quotient(g, f.laziness, start_spec::path(g.nk));
    spectral_report qr = relaxation_quotient(q);
    cut_report cut = origin_cut(g, f.laziness);
    bool pass = qr.t_rel >= cut.lower_bound * (1 - 1e-8) && qr.t_rel >= 1;
    cl.add("bottleneck-bound", pass,
           {{"t_rel", qr.t_rel}, {"cheeger_lower", cut.lower_bound}});
  }

  // stationarity is preserved by one exact step
  {
    prob_vector pi = walk.stationary();
    prob_vector pi1 = walk.step_distribution(pi, 1);
    double worst = 0;
    for (size_t i = 0; i < pi.size(); ++i)
      worst = std::max(worst, std::abs(pi[i] - pi1[i]));
    cl.add("stationarity-fixed-point", worst <= 1e-14, {{"max_abs", worst}});
  }

  // coupling marginals and collision law on toys; family smoke run
  const bool mc_ready =
      f.laziness == 0.5 && spec.mode == tree_mode::perfect && !spec.leaf_self_loops;
  if (mc_ready) {
    mc_config cfg{seed, 4000, u64(1) << 30};
    toy_coupling_stats toy =
        couple_until_collision(small_graph::single_edge(), 0.5, 0, 1, cfg);
    bool pass = toy.truncated == 0;
    double worst_dev = 0;
    for (u64 t = 1; t <= 6; ++t) {
      double want = std::pow(0.5, (double)t);
      double se = std::sqrt(want * (1 - want) / (double)cfg.replicates);
      double dev = std::abs(toy.tail_at(t) - want);
      worst_dev = std::max(worst_dev, dev - 3 * se);
      pass = pass && dev <= std::max(3 * se, 1e-9);
    }
    mc_config small{seed, 200, u64(1) << 30};
    coupling_stats fam = simulate_coupling(walk, g.nk, small, threads);
    pass = pass && fam.truncated == 0;
    for (u64 i = 0; i < small.replicates; ++i)
      pass = pass && fam.t_hit_origin[i] <= fam.t_level_match[i] &&
             fam.t_level_match[i] <= fam.tau[i];
    cl.add("coupling-marginals", pass,
           {{"toy_worst_dev_minus_3se", worst_dev}, {"family_truncated", fam.truncated}});
  }

  // replicated sampling is schedule-independent
  if (f.laziness == 0.5) {
    mc_config cfg{seed, 128, u64(1) << 30};
    decomp_stats a = sample_hitting_time(walk, g.nk, 0, cfg, 1);
    decomp_stats b = sample_hitting_time(walk, g.nk, 0, cfg, 8);
    bool pass = a.tau == b.tau && a.on_path == b.on_path && a.in_tree == b.in_tree &&
                a.visits == b.visits;
    u64 mismatch_sd = 0;
    for (u64 i = 0; i < cfg.replicates; ++i)
      if (a.tau[i] != a.on_path[i] + a.in_tree_total(i)) ++mismatch_sd;
    pass = pass && mismatch_sd == 0;
    cl.add("replicate-determinism", pass, {{"split_identity_violations", mismatch_sd}});
  }

  json data;
  data["all_pass"] = cl.all;
  data["checks"] = cl.checks;
  run_manifest m;
  m.command = "verify";
  m.config = family_config(f);
  m.seed = seed;
  m.config["seed"] = seed;
  emit_json(resolve_out_dir(out), "verify", m, data, tm.seconds());
  std::cout << (cl.all ? "all checks passed" : "CHECKS FAILED") << "\n";
  return cl.all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  pin_blas_threads();
  CLI::App app{"lazy random walk on a path with doubly-exponentially attached binary trees"};
  app.require_subcommand(1);
  int rc = 0;

  family_flags f;
  std::string out, config_path;
  u64 seed = 0, replicates = 0, max_steps = u64(1) << 40;
  unsigned threads = default_threads();
  std::vector<double> eps_list;
  u64 tmax = 0, points = 64;
  bool use_power = false, samples = false;
  std::string k_list = "2,3";
  std::vector<double> eps_grid;

  auto add_common = [&](CLI::App* c) {
    add_family_flags(c, f);
    c->add_option("--out", out, "output directory (or TREEWALK_OUT)");
    c->add_option("--config", config_path, "JSON config file; explicit flags win");
    c->parse_complete_callback([&, c] { merge_config(c, config_path); });
  };

  CLI::App* cb = app.add_subcommand("build", "construct the family and write the region table");
  add_common(cb);
  cb->callback([&] { rc = run_build(f, out); });

  CLI::App* ct = app.add_subcommand("tmix", "exact mixing time at given thresholds");
  add_common(ct);
  ct->add_option("--eps", eps_list, "TV thresholds")->expected(-1);
  ct->callback([&] { rc = run_tmix(f, eps_list, out); });

  CLI::App* cp = app.add_subcommand("profile", "worst-case TV distance curve d(t)");
  add_common(cp);
  cp->add_option("--tmax", tmax, "largest t (0: auto)");
  cp->add_option("--points", points, "grid points");
  cp->callback([&] { rc = run_profile(f, tmax, points, out); });

  CLI::App* ch = app.add_subcommand("hitting", "exact hitting-time moments to the origin");
  add_common(ch);
  ch->callback([&] { rc = run_hitting(f, out); });

  CLI::App* cs = app.add_subcommand("spectral", "relaxation time and bottleneck ratio");
  add_common(cs);
  cs->add_flag("--power", use_power, "also run deflated power iteration");
  cs->callback([&] { rc = run_spectral(f, use_power, out); });

  // --seed/--replicates must be present for the simulation commands, but may
  // arrive via --config, which merges after the parse; so the presence check
  // lives in the callback rather than in required()
  auto require_present = [](CLI::App* c, const char* name) {
    if (c->get_option(name)->count() == 0)
      throw CLI::RequiredError(std::string(name) + " (for " + c->get_name() + ")");
  };

  CLI::App* cm = app.add_subcommand("mc", "replicated hitting-time simulation");
  add_common(cm);
  cm->add_option("--seed", seed, "RNG seed");
  cm->add_option("--replicates", replicates, "replicate count")
      ->check(CLI::Range(u64(1), u64(1'000'000'000)));
  cm->add_option("--max-steps", max_steps, "per-replicate cap");
  cm->add_option("--threads", threads, "worker threads (no effect on outputs)");
  cm->add_flag("--samples", samples, "write per-replicate CSV");
  cm->callback([&, cm] {
    require_present(cm, "--seed");
    require_present(cm, "--replicates");
    rc = run_mc(f, seed, replicates, max_steps, threads, samples, out);
  });

  CLI::App* cc = app.add_subcommand("couple", "three-phase coupling simulation");
  add_common(cc);
  cc->add_option("--seed", seed, "RNG seed");
  cc->add_option("--replicates", replicates, "replicate count")
      ->check(CLI::Range(u64(1), u64(1'000'000'000)));
  cc->add_option("--max-steps", max_steps, "per-replicate cap");
  cc->add_option("--threads", threads, "worker threads (no effect on outputs)");
  cc->callback([&, cc] {
    require_present(cc, "--seed");
    require_present(cc, "--replicates");
    rc = run_couple(f, seed, replicates, max_steps, threads, out);
  });

  CLI::App* cv = app.add_subcommand("verify", "run the full property suite");
  add_common(cv);
  cv->add_option("--seed", seed, "RNG seed for the randomized checks");
  cv->add_option("--threads", threads, "worker threads (no effect on outputs)");
  cv->callback([&] { rc = run_verify(f, seed ? seed : 1, threads, out); });

  CLI::App* cw = app.add_subcommand("sweep", "mixing-time table across k");
  add_common(cw);
  cw->add_option("--k-list", k_list, "comma-separated k values");
  cw->add_option("--eps-grid", eps_grid, "TV thresholds")->expected(-1);
  cw->callback([&] { rc = run_sweep(f, k_list, eps_grid, out); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const spec_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return rc;
}
