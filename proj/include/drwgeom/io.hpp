#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "drwgeom/errors.hpp"
#include "drwgeom/graph.hpp"

namespace drwgeom {

// Graph JSON schema (node ids 1-based on disk, 0-based in memory):
//   {"n": 4, "p": 1,
//    "edges": [{"u": 1, "v": 2, "w0": 1.0, "phi": [0.3]}, ...],
//    "labels": {"1": 1, "4": 2}}
inline LabeledGraph graph_from_json(const nlohmann::json& j) {
  try {
    const int n = j.at("n").get<int>();
    const int p = j.at("p").get<int>();
    std::vector<Edge> edges;
    for (const auto& je : j.at("edges")) {
      Edge e;
      e.u = je.at("u").get<int>() - 1;
      e.v = je.at("v").get<int>() - 1;
      e.base_weight = je.at("w0").get<double>();
      const auto& phi = je.at("phi");
      e.feature.resize(static_cast<int>(phi.size()));
      for (std::size_t a = 0; a < phi.size(); ++a)
        e.feature(static_cast<int>(a)) = phi[a].get<double>();
      edges.push_back(std::move(e));
    }
    std::map<int, int> labels;
    if (j.contains("labels"))
      for (const auto& [key, val] : j.at("labels").items())
        labels[std::stoi(key) - 1] = val.get<int>();
    return build_graph(n, p, std::move(edges), std::move(labels));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad graph json: ") + e.what());
  }
}

inline nlohmann::json graph_to_json(const LabeledGraph& g) {
  nlohmann::json j;
  j["n"] = g.node_count();
  j["p"] = g.feature_dim();
  j["edges"] = nlohmann::json::array();
  for (const Edge& e : g.edges()) {
    nlohmann::json je;
    je["u"] = e.u + 1;
    je["v"] = e.v + 1;
    je["w0"] = e.base_weight;
    je["phi"] = std::vector<double>(e.feature.data(), e.feature.data() + e.feature.size());
    j["edges"].push_back(std::move(je));
  }
  j["labels"] = nlohmann::json::object();
  for (const auto& [node, cls] : g.labels()) j["labels"][std::to_string(node + 1)] = cls;
  return j;
}

// Whitespace edge list, one edge per line: u v w0 phi_1 ... phi_p
// with a companion labels file of `node class` lines.
inline LabeledGraph graph_from_edge_list(const std::string& edge_text,
                                         const std::string& label_text) {
  std::vector<Edge> edges;
  int n = 0;
  int p = -1;
  std::istringstream es(edge_text);
  std::string line;
  while (std::getline(es, line)) {
    std::istringstream ls(line);
    std::vector<double> vals;
    double x;
    while (ls >> x) vals.push_back(x);
    if (vals.empty()) continue;
    if (vals.size() < 3) throw ParseError("edge line needs at least 'u v w0'");
    Edge e;
    e.u = static_cast<int>(vals[0]) - 1;
    e.v = static_cast<int>(vals[1]) - 1;
    e.base_weight = vals[2];
    const int pe = static_cast<int>(vals.size()) - 3;
    if (p < 0) p = pe;
    if (pe != p) throw FeatureDimMismatch("edge lines disagree on feature length");
    e.feature.resize(p);
    for (int a = 0; a < p; ++a) e.feature(a) = vals[3 + a];
    n = std::max({n, e.u + 1, e.v + 1});
    edges.push_back(std::move(e));
  }
  if (p <= 0) throw ParseError("edge list has no feature columns");
  std::map<int, int> labels;
  std::istringstream lsream(label_text);
  while (std::getline(lsream, line)) {
    std::istringstream ls(line);
    int node, cls;
    if (ls >> node >> cls) labels[node - 1] = cls;
  }
  return build_graph(n, p, std::move(edges), std::move(labels));
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write '" + path + "'");
  out << content;
}

// Loads .json directly; anything else is treated as an edge list and needs
// a labels file.
inline LabeledGraph load_graph(const std::string& path, const std::string& labels_path = "") {
  const std::string text = read_file(path);
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json")
    return graph_from_json(nlohmann::json::parse(text));
  if (labels_path.empty()) throw ParseError("edge-list input needs --labels <file>");
  return graph_from_edge_list(text, read_file(labels_path));
}

}  // namespace drwgeom
