#pragma once

#include <cstdio>
#include <string>

#include <json.hpp>

#include "drwgeom/score.hpp"

namespace drwgeom {

// One row per (node, class): node-level columns repeat across class rows.
inline std::string report_csv(const SensitivityReport& rep) {
  std::string out =
      "node,class,betweenness,grad_norm,zeta,zeta_normalized,predicted_class\n";
  char buf[256];
  for (std::size_t i = 0; i < rep.nodes.size(); ++i) {
    for (std::size_t c = 0; c < rep.classes.size(); ++c) {
      const double zn = rep.all_zero ? 0.0 : rep.zeta_normalized(static_cast<int>(i));
      std::snprintf(buf, sizeof buf, "%d,%d,%.9g,%.9g,%.9g,%.9g,%d\n",
                    rep.nodes[i] + 1, rep.classes[c],
                    rep.betweenness(static_cast<int>(i), static_cast<int>(c)),
                    rep.grad_norm(static_cast<int>(i), static_cast<int>(c)),
                    rep.zeta(static_cast<int>(i)), zn, rep.predicted_class[i]);
      out += buf;
    }
  }
  return out;
}

inline nlohmann::json report_json(const SensitivityReport& rep) {
  nlohmann::json j;
  j["horizon"] = rep.horizon == kExactHorizon ? nlohmann::json("exact")
                                              : nlohmann::json(rep.horizon);
  j["theta"] = std::vector<double>(rep.theta.data(), rep.theta.data() + rep.theta.size());
  j["all_zero"] = rep.all_zero;
  j["classes"] = rep.classes;
  j["nodes"] = nlohmann::json::array();
  for (std::size_t i = 0; i < rep.nodes.size(); ++i) {
    nlohmann::json node;
    node["id"] = rep.nodes[i] + 1;
    node["zeta"] = rep.zeta(static_cast<int>(i));
    if (!rep.all_zero) node["zeta_normalized"] = rep.zeta_normalized(static_cast<int>(i));
    node["delta_max"] = rep.delta_max(static_cast<int>(i));
    node["predicted_class"] = rep.predicted_class[i];
    nlohmann::json per;
    for (std::size_t c = 0; c < rep.classes.size(); ++c) {
      nlohmann::json row;
      row["betweenness"] = rep.betweenness(static_cast<int>(i), static_cast<int>(c));
      row["grad_norm"] = rep.grad_norm(static_cast<int>(i), static_cast<int>(c));
      per[std::to_string(rep.classes[c])] = std::move(row);
    }
    node["per_class"] = std::move(per);
    j["nodes"].push_back(std::move(node));
  }
  j["charts"] = nlohmann::json::array();
  for (const ClassDiagnostics& d : rep.diagnostics) {
    nlohmann::json c;
    c["class"] = d.class_id;
    c["rank"] = d.rank;
    c["rank_tol"] = d.rank_tol;
    c["metric_gap"] = d.metric_gap;
    c["degenerate"] = d.degenerate;
    nlohmann::json zm = nlohmann::json::array();
    for (int v : d.zero_mass_nodes) zm.push_back(v + 1);
    c["zero_mass_nodes"] = std::move(zm);
    if (d.fisher_distance >= 0.0) c["fisher_closed_vs_series"] = d.fisher_distance;
    j["charts"].push_back(std::move(c));
  }
  return j;
}

}  // namespace drwgeom
