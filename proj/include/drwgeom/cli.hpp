#pragma once

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "drwgeom/experiment.hpp"
#include "drwgeom/io.hpp"
#include "drwgeom/report.hpp"
#include "drwgeom/selfcheck.hpp"

namespace drwgeom {

namespace cli_detail {

inline Eigen::VectorXd parse_theta(const std::string& text, int expected_dim) {
  std::vector<double> vals;
  std::string token;
  std::istringstream ss(text);
  while (std::getline(ss, token, ',')) {
    if (!token.empty()) vals.push_back(std::stod(token));
  }
  if (vals.empty()) throw ParseError("empty --theta");
  if (static_cast<int>(vals.size()) == 1 && expected_dim > 1)
    vals.assign(expected_dim, vals[0]);  // scalar broadcast
  if (static_cast<int>(vals.size()) != expected_dim)
    throw DimensionMismatch("--theta has " + std::to_string(vals.size()) +
                            " entries, graph expects " + std::to_string(expected_dim));
  Eigen::VectorXd theta(expected_dim);
  for (int a = 0; a < expected_dim; ++a) theta(a) = vals[a];
  return theta;
}

inline int parse_horizon(const std::string& text, const WeightedKernel& kernel,
                         const LabeledGraph& graph) {
  if (text == "exact") return kExactHorizon;
  if (text == "auto") return auto_horizon(kernel, graph);
  const int L = std::stoi(text);
  if (L < 1) throw ParseError("--L must be 'exact', 'auto', or a positive integer");
  return L;
}

}  // namespace cli_detail

inline int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"information-geometric sensitivity analysis of labeled random walks"};
  app.require_subcommand(1);
  bool json_errors = false;
  app.add_flag("--json", json_errors, "machine-readable errors on stderr");

  // ---- analyze ----
  auto* analyze = app.add_subcommand("analyze", "hitting-law statistics per transient node");
  std::string an_graph, an_labels, an_theta = "0";
  int an_class = -1, an_pmf_head = 10;
  bool an_json = false;
  analyze->add_option("graph", an_graph, "graph file (.json or edge list)")->required();
  analyze->add_option("--labels", an_labels, "labels file for edge-list input");
  analyze->add_option("--theta", an_theta, "comma-separated parameter vector");
  analyze->add_option("--class", an_class, "restrict to one class id");
  analyze->add_option("--pmf-head", an_pmf_head, "number of pmf entries to print");
  analyze->add_flag("--json-out", an_json, "emit JSON instead of text");

  // ---- sensitivity ----
  auto* sens = app.add_subcommand("sensitivity", "per-node sensitivity report");
  std::string se_graph, se_labels, se_theta = "0", se_L = "exact", se_form = "visits";
  std::string se_csv, se_json;
  double se_rank_tol = kDefaultRankTol;
  bool se_fisher = false;
  sens->add_option("graph", se_graph)->required();
  sens->add_option("--labels", se_labels);
  sens->add_option("--theta", se_theta);
  sens->add_option("--L", se_L, "horizon: exact, auto, or a positive integer");
  sens->add_option("--rank-tol", se_rank_tol);
  sens->add_option("--form", se_form, "betweenness form: visits or powersum");
  sens->add_flag("--fisher-diagnostic", se_fisher, "closed vs series Fisher distance");
  sens->add_option("--csv", se_csv, "write report CSV here (default stdout)");
  sens->add_option("--json-out", se_json, "write diagnostics JSON here");

  // ---- reproduce ----
  auto* rep = app.add_subcommand("reproduce", "synthetic sensitivity tables");
  std::string rp_topology = "all", rp_out = "reproduce.csv", rp_L = "exact";
  ExperimentConfig rp_cfg;
  rep->add_option("--topology", rp_topology, "line, star, sbm, or all");
  rep->add_option("--seed", rp_cfg.rng_seed)->required();
  rep->add_option("--realizations", rp_cfg.realizations);
  rep->add_option("--n", rp_cfg.n);
  rep->add_option("--p", rp_cfg.p);
  rep->add_option("--theta-min", rp_cfg.theta_min);
  rep->add_option("--theta-max", rp_cfg.theta_max);
  rep->add_option("--p-in", rp_cfg.sbm_p_in);
  rep->add_option("--p-out", rp_cfg.sbm_p_out);
  rep->add_option("--block", rp_cfg.sbm_block);
  rep->add_option("--rank-tol", rp_cfg.rank_tol);
  rep->add_option("--threads", rp_cfg.threads);
  rep->add_option("--L", rp_L, "horizon: exact or a positive integer");
  rep->add_option("--out", rp_out, "output CSV path");

  // ---- check ----
  auto* chk = app.add_subcommand("check", "oracle cross-validation suite");
  bool chk_fast = false;
  chk->add_flag("--fast", chk_fast, "smaller corpus and sample counts");

  // ---- rewire ----
  auto* rew = app.add_subcommand("rewire", "rank edges by zeta(q) * base weight");
  std::string rw_graph, rw_labels, rw_theta = "0";
  int rw_budget = 5;
  rew->add_option("graph", rw_graph)->required();
  rew->add_option("--labels", rw_labels);
  rew->add_option("--theta", rw_theta);
  rew->add_option("--budget", rw_budget, "number of candidates to emit");

  std::vector<const char*> argv;
  argv.push_back("drwgeom");
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*analyze) {
      const LabeledGraph graph = load_graph(an_graph, an_labels);
      const Eigen::VectorXd theta =
          cli_detail::parse_theta(an_theta, graph.feature_dim());
      const WeightedKernel kernel = build_kernel_with_derivatives(graph, theta);
      std::vector<int> classes =
          an_class > 0 ? std::vector<int>{an_class} : graph.class_ids();
      nlohmann::json out_json = nlohmann::json::array();
      for (int y : classes) {
        const ClassDecomposition dec = decompose_for_class(kernel, graph, y);
        const HittingLaw law(dec);
        if (!an_json)
          std::printf("class %d (transient block %d x %d, spectral radius <= %.6f)\n", y,
                      dec.size(), dec.size(), dec.spectral_radius_bound);
        for (int q : dec.transient) {
          const HittingMoments mom = hitting_moments(law, q);
          const Eigen::VectorXd head = hitting_pmf_prefix(law, q, an_pmf_head);
          if (an_json) {
            nlohmann::json row;
            row["class"] = y;
            row["node"] = q + 1;
            row["mu"] = mom.mean;
            row["var"] = mom.variance;
            row["pmf"] =
                std::vector<double>(head.data(), head.data() + head.size());
            out_json.push_back(std::move(row));
          } else {
            std::printf("  node %2d  mu=%10.4f  var=%10.4f  pmf:", q + 1, mom.mean,
                        mom.variance);
            for (int t = 0; t < head.size(); ++t) std::printf(" %.4f", head(t));
            std::printf("\n");
          }
        }
      }
      if (an_json) std::printf("%s\n", out_json.dump(2).c_str());
      return 0;
    }

    if (*sens) {
      const LabeledGraph graph = load_graph(se_graph, se_labels);
      const Eigen::VectorXd theta =
          cli_detail::parse_theta(se_theta, graph.feature_dim());
      const WeightedKernel kernel = build_kernel_with_derivatives(graph, theta);
      ZetaOptions opts;
      opts.horizon = cli_detail::parse_horizon(se_L, kernel, graph);
      opts.rank_tol = se_rank_tol;
      opts.fisher_diagnostic = se_fisher;
      if (se_form == "powersum")
        opts.form = BetweennessForm::PowerSum;
      else if (se_form != "visits")
        throw ParseError("--form must be visits or powersum");
      const SensitivityReport report = zeta(graph, theta, opts);
      const std::string csv = report_csv(report);
      if (se_csv.empty())
        std::fputs(csv.c_str(), stdout);
      else
        write_file(se_csv, csv);
      if (!se_json.empty()) write_file(se_json, report_json(report).dump(2) + "\n");
      if (report.all_zero)
        std::fprintf(stderr, "note: zeta vanished everywhere; normalization undefined\n");
      return 0;
    }

    if (*rep) {
      std::vector<Topology> topologies;
      if (rp_topology == "all")
        topologies = {Topology::Line, Topology::Star, Topology::Sbm};
      else
        topologies = {topology_from_string(rp_topology)};
      rp_cfg.horizon = rp_L == "exact" ? kExactHorizon : std::stoi(rp_L);
      std::vector<TopologySummary> rows;
      for (Topology t : topologies) {
        ExperimentConfig cfg = rp_cfg;
        cfg.topology = t;
        rows.push_back(reproduce_topology(cfg));
      }
      write_file(rp_out, summary_csv(rows));
      std::fputs(summary_table(rows).c_str(), stdout);
      std::printf("wrote %s\n", rp_out.c_str());
      return 0;
    }

    if (*chk) {
      const std::vector<CheckResult> results = run_selfcheck(chk_fast);
      int failures = 0;
      for (const CheckResult& r : results) {
        std::printf("%s %-36s %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(),
                    r.detail.c_str());
        if (!r.passed) ++failures;
      }
      std::printf("%zu checks, %d failed\n", results.size(), failures);
      return failures == 0 ? 0 : 1;
    }

    if (*rew) {
      const LabeledGraph graph = load_graph(rw_graph, rw_labels);
      const Eigen::VectorXd theta =
          cli_detail::parse_theta(rw_theta, graph.feature_dim());
      const SensitivityReport report = zeta(graph, theta);
      struct Candidate {
        int q, k;
        double w0, score;
      };
      std::vector<Candidate> cands;
      for (const Edge& e : graph.edges()) {
        for (auto [q, k] : {std::pair{e.u, e.v}, std::pair{e.v, e.u}}) {
          if (graph.is_labeled(q)) continue;
          cands.push_back({q, k, e.base_weight,
                           report.zeta(report.node_row(q)) * e.base_weight});
        }
      }
      std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
        if (a.score != b.score) return a.score > b.score;
        return std::pair(a.q, a.k) < std::pair(b.q, b.k);
      });
      std::printf("q,k,w0,delta\n");
      for (int i = 0; i < std::min<int>(rw_budget, static_cast<int>(cands.size())); ++i)
        std::printf("%d,%d,%.9g,%.9g\n", cands[i].q + 1, cands[i].k + 1, cands[i].w0,
                    cands[i].score);
      return 0;
    }
  } catch (const Error& e) {
    if (json_errors) {
      nlohmann::json j;
      j["error"] = e.code();
      j["message"] = e.what();
      std::fprintf(stderr, "%s\n", j.dump().c_str());
    } else {
      std::fprintf(stderr, "error [%s]: %s\n", e.code().c_str(), e.what());
    }
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

}  // namespace drwgeom
