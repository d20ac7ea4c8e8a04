#include "radopf/network.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace radopf {

namespace {

using nlohmann::json;

// Labels that look like integers sort numerically ("2" before "10"), so
// interned ids follow the usual bus numbering of published test feeders.
bool label_less(const std::string& a, const std::string& b) {
  long long ia = 0, ib = 0;
  auto ra = std::from_chars(a.data(), a.data() + a.size(), ia);
  auto rb = std::from_chars(b.data(), b.data() + b.size(), ib);
  const bool na = ra.ec == std::errc() && ra.ptr == a.data() + a.size();
  const bool nb = rb.ec == std::errc() && rb.ptr == b.data() + b.size();
  if (na && nb) return ia < ib;
  if (na != nb) return na;  // numeric labels first, deterministically
  return a < b;
}

std::string branch_name(const std::string& child, const std::string& parent) {
  return "branch " + child + "->" + parent;
}

}  // namespace

Network Network::from_data(const NetworkData& data) {
  if (!(data.v0 > 0.0)) {
    throw ValidationError("root", "v0 must be positive");
  }

  // Collect declared labels and find the implicit root: the unique branch
  // endpoint without a NodeLimits entry.
  std::map<std::string, int> declared;  // label -> index into data.nodes
  for (size_t k = 0; k < data.nodes.size(); ++k) {
    auto [it, fresh] = declared.emplace(data.nodes[k].label, k);
    if (!fresh) {
      throw ValidationError("node " + data.nodes[k].label,
                            "duplicate node declaration");
    }
  }

  std::map<std::string, const NetworkData::BranchSpec*> parent_branch;
  std::string root_label;
  bool root_found = false;
  for (const auto& br : data.branches) {
    if (br.child == br.parent) {
      throw ValidationError(branch_name(br.child, br.parent),
                            "branch child equals parent");
    }
    if (!declared.count(br.child)) {
      throw ValidationError(branch_name(br.child, br.parent),
                            "branch child is not a declared node");
    }
    if (!parent_branch.emplace(br.child, &br).second) {
      throw ValidationError("node " + br.child,
                            "node has more than one parent branch");
    }
    if (!declared.count(br.parent)) {
      if (root_found && br.parent != root_label) {
        throw ValidationError(branch_name(br.child, br.parent),
                              "second undeclared endpoint '" + br.parent +
                                  "'; root candidate was '" + root_label +
                                  "'");
      }
      root_label = br.parent;
      root_found = true;
    }
  }
  if (!root_found) {
    throw ValidationError("network",
                          "no root found: every branch endpoint carries "
                          "node limits, expected exactly one bare endpoint");
  }
  if (data.branches.size() != data.nodes.size()) {
    throw ValidationError(
        "network", "expected one branch per non-root node, got " +
                       std::to_string(data.branches.size()) + " branches for " +
                       std::to_string(data.nodes.size()) + " nodes");
  }
  for (const auto& node : data.nodes) {
    if (!parent_branch.count(node.label)) {
      throw ValidationError("node " + node.label,
                            "node has no parent branch (disconnected or "
                            "intended as a second root)");
    }
  }

  // Per-element scalar checks, reported with original labels.
  for (const auto& br : data.branches) {
    const std::string name = branch_name(br.child, br.parent);
    if (!(br.r > 0.0)) {
      throw ValidationError(name, "branch resistance must be positive");
    }
    if (!(br.x > 0.0)) {
      throw ValidationError(name, "branch reactance must be positive");
    }
    if (!(br.l_max > 0.0)) {
      throw ValidationError(name, "current limit l_max must be positive");
    }
  }
  for (const auto& node : data.nodes) {
    const NodeLimits& lm = node.limits;
    const std::string name = "node " + node.label;
    if (!(lm.v_min > 0.0)) {
      throw ValidationError(name, "v_min must be positive");
    }
    if (!(lm.v_min < data.v0)) {
      throw ValidationError(name, "v_min must be below v0");
    }
    if (!(lm.v_max > data.v0)) {
      throw ValidationError(name, "v_max must be above v0");
    }
    if (lm.p_min > lm.p_max) {
      throw ValidationError(name, "p_min exceeds p_max");
    }
    if (lm.q_min > lm.q_max) {
      throw ValidationError(name, "q_min exceeds q_max");
    }
  }

  // Adjacency over labels, children sorted for a stable BFS numbering.
  std::map<std::string, std::vector<const NetworkData::BranchSpec*>> kids;
  for (const auto& br : data.branches) kids[br.parent].push_back(&br);
  for (auto& [label, list] : kids) {
    std::sort(list.begin(), list.end(),
              [](const auto* a, const auto* b) {
                return label_less(a->child, b->child);
              });
  }

  Network net;
  net.v0_ = data.v0;
  const int n = static_cast<int>(data.nodes.size());
  net.labels_.reserve(n + 1);
  net.labels_.push_back(root_label);
  net.limits_.resize(n);
  net.branches_.resize(n);
  net.children_.assign(n + 1, {});
  net.depths_.assign(n + 1, 0);

  std::map<std::string, NodeId> interned;
  interned[root_label] = 0;
  std::vector<std::string> frontier{root_label};
  NodeId next_id = 1;
  while (!frontier.empty()) {
    std::vector<std::string> next;
    for (const auto& parent_label : frontier) {
      const NodeId pid = interned[parent_label];
      auto it = kids.find(parent_label);
      if (it == kids.end()) continue;
      for (const auto* br : it->second) {
        const NodeId cid = next_id++;
        interned[br->child] = cid;
        net.labels_.push_back(br->child);
        net.limits_[cid - 1] = data.nodes[declared[br->child]].limits;
        net.branches_[cid - 1] =
            Branch{cid, pid, br->r, br->x, br->l_max};
        net.children_[pid].push_back(cid);
        net.depths_[cid] = net.depths_[pid] + 1;
        next.push_back(br->child);
      }
    }
    frontier = std::move(next);
  }

  if (next_id != n + 1) {
    // Some nodes were never reached from the root: their parent pointers
    // form a cycle or hang off one. Name one of them.
    for (const auto& node : data.nodes) {
      if (!interned.count(node.label)) {
        throw ValidationError("node " + node.label,
                              "node is not reachable from the root "
                              "(cycle or disconnected component)");
      }
    }
  }

  net.depth_order_.resize(n);
  for (int e = 0; e < n; ++e) net.depth_order_[e] = e;
  std::stable_sort(net.depth_order_.begin(), net.depth_order_.end(),
                   [&](int a, int b) {
                     return net.depths_[a + 1] < net.depths_[b + 1];
                   });
  return net;
}

void Network::check_node(NodeId i, bool allow_root) const {
  const NodeId lo = allow_root ? 0 : 1;
  if (i < lo || i > node_count()) {
    throw std::out_of_range("unknown node id " + std::to_string(i));
  }
}

const std::string& Network::label(NodeId i) const {
  check_node(i, true);
  return labels_[i];
}

NodeId Network::node_id(const std::string& label) const {
  for (size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == label) return static_cast<NodeId>(i);
  }
  throw std::out_of_range("unknown node label '" + label + "'");
}

const NodeLimits& Network::limits(NodeId i) const {
  check_node(i, false);
  return limits_[i - 1];
}

const Branch& Network::branch_of(NodeId i) const {
  check_node(i, false);
  return branches_[i - 1];
}

const std::vector<NodeId>& Network::children(NodeId i) const {
  check_node(i, true);
  return children_[i];
}

std::vector<Branch> Network::path_to_root(NodeId i) const {
  check_node(i, false);
  std::vector<Branch> path;
  path.reserve(depths_[i]);
  NodeId cur = i;
  while (cur != 0) {
    path.push_back(branch_of(cur));
    cur = path.back().parent;
  }
  return path;
}

int Network::depth(NodeId i) const {
  check_node(i, true);
  return depths_[i];
}

Network Network::with_limits(const std::vector<NodeLimits>& limits_by_node) const {
  if (limits_by_node.size() != limits_.size()) {
    throw std::invalid_argument("with_limits: size mismatch");
  }
  NetworkData data;
  data.v0 = v0_;
  for (int i = 1; i <= node_count(); ++i) {
    data.nodes.push_back({labels_[i], limits_by_node[i - 1]});
  }
  for (const Branch& br : branches_) {
    data.branches.push_back({labels_[br.child], labels_[br.parent], br.r,
                             br.x, br.l_max});
  }
  return from_data(data);
}

Network Network::with_branches(const std::vector<Branch>& branches_by_child) const {
  if (branches_by_child.size() != branches_.size()) {
    throw std::invalid_argument("with_branches: size mismatch");
  }
  NetworkData data;
  data.v0 = v0_;
  for (int i = 1; i <= node_count(); ++i) {
    data.nodes.push_back({labels_[i], limits_[i - 1]});
  }
  for (const Branch& br : branches_by_child) {
    data.branches.push_back({labels_[br.child], labels_[br.parent], br.r,
                             br.x, br.l_max});
  }
  return from_data(data);
}

namespace {

std::string id_to_string(const json& j, const char* field) {
  const json& v = j.at(field);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw ParseError(std::string("field '") + field +
                   "' must be a string or integer id");
}

double num_field(const json& j, const char* field) {
  const json& v = j.at(field);
  if (!v.is_number()) {
    throw ParseError(std::string("field '") + field + "' must be a number");
  }
  return v.get<double>();
}

NetworkData data_from_json(const json& j) {
  NetworkData data;
  try {
    data.v0 = num_field(j, "v0");
    for (const json& node : j.at("nodes")) {
      NetworkData::Node spec;
      spec.label = id_to_string(node, "id");
      spec.limits.v_min = num_field(node, "v_min");
      spec.limits.v_max = num_field(node, "v_max");
      spec.limits.p_min = num_field(node, "p_min");
      spec.limits.p_max = num_field(node, "p_max");
      spec.limits.q_min = num_field(node, "q_min");
      spec.limits.q_max = num_field(node, "q_max");
      data.nodes.push_back(std::move(spec));
    }
    for (const json& br : j.at("branches")) {
      NetworkData::BranchSpec spec;
      spec.child = id_to_string(br, "child");
      spec.parent = id_to_string(br, "parent");
      spec.r = num_field(br, "r");
      spec.x = num_field(br, "x");
      spec.l_max = num_field(br, "l_max");
      data.branches.push_back(std::move(spec));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad network JSON: ") + e.what());
  }
  return data;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  for (auto& f : out) {
    while (!f.empty() && std::isspace(static_cast<unsigned char>(f.front())))
      f.erase(f.begin());
    while (!f.empty() && std::isspace(static_cast<unsigned char>(f.back())))
      f.pop_back();
  }
  return out;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw ParseError("missing CSV column '" + name + "'");
    }
    return static_cast<int>(it - header.begin());
  }
};

double parse_number(const std::string& s, const std::string& context) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("bad number '" + s + "' in " + context);
  }
}

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = split_csv_line(line);
    if (table.header.empty()) {
      table.header = std::move(fields);
    } else {
      if (fields.size() != table.header.size()) {
        throw ParseError("CSV row has " + std::to_string(fields.size()) +
                         " fields, header has " +
                         std::to_string(table.header.size()));
      }
      table.rows.push_back(std::move(fields));
    }
  }
  if (table.header.empty()) throw ParseError("empty CSV input");
  return table;
}

Network network_from_tables(const CsvTable& nodes, const CsvTable& branches) {
  NetworkData data;
  const int c_id = nodes.column("id");
  const int c_vmin = nodes.column("v_min");
  const int c_vmax = nodes.column("v_max");
  const int c_pmin = nodes.column("p_min");
  const int c_pmax = nodes.column("p_max");
  const int c_qmin = nodes.column("q_min");
  const int c_qmax = nodes.column("q_max");
  const int c_v0 = nodes.column("v0");

  bool v0_seen = false;
  for (const auto& row : nodes.rows) {
    if (!row[c_v0].empty()) {
      data.v0 = parse_number(row[c_v0], "nodes.csv v0");
      v0_seen = true;
    }
    NetworkData::Node spec;
    spec.label = row[c_id];
    const std::string ctx = "nodes.csv row for id " + spec.label;
    spec.limits.v_min = parse_number(row[c_vmin], ctx);
    spec.limits.v_max = parse_number(row[c_vmax], ctx);
    spec.limits.p_min = parse_number(row[c_pmin], ctx);
    spec.limits.p_max = parse_number(row[c_pmax], ctx);
    spec.limits.q_min = parse_number(row[c_qmin], ctx);
    spec.limits.q_max = parse_number(row[c_qmax], ctx);
    data.nodes.push_back(std::move(spec));
  }
  if (!v0_seen) {
    throw ParseError("nodes.csv must set v0 in at least one row");
  }

  const int c_child = branches.column("child");
  const int c_parent = branches.column("parent");
  const int c_r = branches.column("r");
  const int c_x = branches.column("x");
  const int c_lmax = branches.column("l_max");
  for (const auto& row : branches.rows) {
    NetworkData::BranchSpec spec;
    spec.child = row[c_child];
    spec.parent = row[c_parent];
    const std::string ctx = "branches.csv row " + spec.child + "->" + spec.parent;
    spec.r = parse_number(row[c_r], ctx);
    spec.x = parse_number(row[c_x], ctx);
    spec.l_max = parse_number(row[c_lmax], ctx);
    data.branches.push_back(std::move(spec));
  }
  return Network::from_data(data);
}

}  // namespace

Network parse_network(std::istream& source, NetworkFormat format) {
  if (format == NetworkFormat::json) {
    json j;
    try {
      source >> j;
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad network JSON: ") + e.what());
    }
    return Network::from_data(data_from_json(j));
  }

  // csv_pair: nodes.csv followed by branches.csv in one stream. The
  // branches header (its first column is "child") marks the boundary.
  std::string line;
  std::ostringstream nodes_part, branches_part;
  bool in_branches = false;
  while (std::getline(source, line)) {
    if (!in_branches) {
      auto fields = split_csv_line(line);
      if (!fields.empty() && fields[0] == "child") in_branches = true;
    }
    (in_branches ? branches_part : nodes_part) << line << '\n';
  }
  if (!in_branches) {
    throw ParseError("csv-pair input has no branches header line");
  }
  std::istringstream nodes_in(nodes_part.str());
  std::istringstream branches_in(branches_part.str());
  return parse_network_csv_pair(nodes_in, branches_in);
}

Network parse_network_csv_pair(std::istream& nodes_csv,
                               std::istream& branches_csv) {
  return network_from_tables(read_csv(nodes_csv), read_csv(branches_csv));
}

Network load_network_file(const std::string& path) {
  namespace fs = std::filesystem;
  if (fs::is_directory(path)) {
    std::ifstream nodes(fs::path(path) / "nodes.csv");
    std::ifstream branches(fs::path(path) / "branches.csv");
    if (!nodes || !branches) {
      throw ParseError("directory '" + path +
                       "' must contain nodes.csv and branches.csv");
    }
    return parse_network_csv_pair(nodes, branches);
  }
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return parse_network(in, NetworkFormat::json);
}

std::string Network::to_json_string(int indent) const {
  json nodes = json::array();
  for (NodeId i = 1; i <= node_count(); ++i) {
    const NodeLimits& lm = limits(i);
    nodes.push_back({{"id", labels_[i]},
                     {"v_min", lm.v_min},
                     {"v_max", lm.v_max},
                     {"p_min", lm.p_min},
                     {"p_max", lm.p_max},
                     {"q_min", lm.q_min},
                     {"q_max", lm.q_max}});
  }
  json branches = json::array();
  for (const Branch& br : branches_) {
    branches.push_back({{"child", labels_[br.child]},
                        {"parent", labels_[br.parent]},
                        {"r", br.r},
                        {"x", br.x},
                        {"l_max", br.l_max}});
  }
  json j{{"v0", v0_}, {"nodes", nodes}, {"branches", branches}};
  return j.dump(indent);
}

}  // namespace radopf
