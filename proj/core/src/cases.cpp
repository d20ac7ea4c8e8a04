#include "radopf/cases.hpp"

#include <cmath>
#include <random>
#include <string>

namespace radopf {

namespace {

// Uniform double in [0,1) from the raw generator output; kept hand-rolled
// so streams are identical across standard library implementations.
double u01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * u01(rng);
}

struct Bw33Row {
  int from, to;
  double r_ohm, x_ohm;
  double p_kw, q_kvar;  // load at `to`
};

// Baran-Wu 33-bus feeder: branch impedances in ohms, peak loads in
// kW/kvar at the receiving bus.
constexpr Bw33Row kBw33[] = {
    {1, 2, 0.0922, 0.0470, 100, 60},   {2, 3, 0.4930, 0.2511, 90, 40},
    {3, 4, 0.3660, 0.1864, 120, 80},   {4, 5, 0.3811, 0.1941, 60, 30},
    {5, 6, 0.8190, 0.7070, 60, 20},    {6, 7, 0.1872, 0.6188, 200, 100},
    {7, 8, 0.7114, 0.2351, 200, 100},  {8, 9, 1.0300, 0.7400, 60, 20},
    {9, 10, 1.0440, 0.7400, 60, 20},   {10, 11, 0.1966, 0.0650, 45, 30},
    {11, 12, 0.3744, 0.1238, 60, 35},  {12, 13, 1.4680, 1.1550, 60, 35},
    {13, 14, 0.5416, 0.7129, 120, 80}, {14, 15, 0.5910, 0.5260, 60, 10},
    {15, 16, 0.7463, 0.5450, 60, 20},  {16, 17, 1.2890, 1.7210, 60, 20},
    {17, 18, 0.7320, 0.5740, 90, 40},  {2, 19, 0.1640, 0.1565, 90, 40},
    {19, 20, 1.5042, 1.3554, 90, 40},  {20, 21, 0.4095, 0.4784, 90, 40},
    {21, 22, 0.7089, 0.9373, 90, 40},  {3, 23, 0.4512, 0.3083, 90, 50},
    {23, 24, 0.8980, 0.7091, 420, 200},{24, 25, 0.8960, 0.7011, 420, 200},
    {6, 26, 0.2030, 0.1034, 60, 25},   {26, 27, 0.2842, 0.1447, 60, 25},
    {27, 28, 1.0590, 0.9337, 60, 20},  {28, 29, 0.8042, 0.7006, 120, 70},
    {29, 30, 0.5075, 0.2585, 200, 600},{30, 31, 0.9744, 0.9630, 150, 70},
    {31, 32, 0.3105, 0.3619, 210, 100},{32, 33, 0.3410, 0.5302, 60, 40},
};

}  // namespace

Network ieee33_network() {
  const double s_base_kw = 10000.0;           // 10 MVA
  const double v_base_kv = 12.66;
  const double z_base = v_base_kv * v_base_kv * 1000.0 / s_base_kw;  // ohm

  NetworkData data;
  data.v0 = 1.0;
  for (const Bw33Row& row : kBw33) {
    NetworkData::Node node;
    node.label = std::to_string(row.to);
    node.limits.v_min = 0.81;
    node.limits.v_max = 1.21;
    node.limits.p_min = node.limits.p_max = -row.p_kw / s_base_kw;
    node.limits.q_min = node.limits.q_max = -row.q_kvar / s_base_kw;
    data.nodes.push_back(node);

    NetworkData::BranchSpec br;
    br.child = std::to_string(row.to);
    br.parent = std::to_string(row.from);
    br.r = row.r_ohm / z_base;
    br.x = row.x_ohm / z_base;
    br.l_max = 2.0;
    data.branches.push_back(br);
  }
  return Network::from_data(data);
}

Network synthetic56_network(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int n = 55;  // non-root nodes; 56 buses total

  NetworkData data;
  data.v0 = 1.0;

  // Twenty-node trunk, then laterals of 2-6 nodes hung off trunk buses.
  std::vector<int> parent(n + 1, 0);
  int next = 1;
  for (int t = 1; t <= 20 && next <= n; ++t) {
    parent[next] = next - 1;  // 0 is the substation
    ++next;
  }
  int hook = 2;
  while (next <= n) {
    int len = 2 + static_cast<int>(u01(rng) * 5.0);
    int attach = hook;
    hook = (hook + 3) % 20 + 1;
    for (int k = 0; k < len && next <= n; ++k) {
      parent[next] = attach;
      attach = next;
      ++next;
    }
  }

  for (int i = 1; i <= n; ++i) {
    NetworkData::Node node;
    node.label = std::to_string(i);
    node.limits.v_min = 0.81;
    node.limits.v_max = 1.21;
    const double p_load = uniform(rng, 0.002, 0.012);
    const double q_load = p_load * uniform(rng, 0.2, 0.6);
    node.limits.p_min = node.limits.p_max = -p_load;
    node.limits.q_min = node.limits.q_max = -q_load;
    data.nodes.push_back(node);

    NetworkData::BranchSpec br;
    br.child = std::to_string(i);
    br.parent = std::to_string(parent[i]);
    br.r = uniform(rng, 0.002, 0.012);
    br.x = br.r * uniform(rng, 0.4, 2.2);
    br.l_max = uniform(rng, 1.0, 3.0);
    data.branches.push_back(br);
  }
  return Network::from_data(data);
}

Network random_radial_network(std::uint64_t seed, int n_nodes,
                              const RandomNetworkParams& params) {
  if (n_nodes < 1) throw std::invalid_argument("need at least one node");
  std::mt19937_64 rng(seed);

  NetworkData data;
  data.v0 = 1.0;
  for (int i = 1; i <= n_nodes; ++i) {
    NetworkData::Node node;
    node.label = std::to_string(i);
    node.limits.v_min = uniform(rng, 0.81, 0.92);
    node.limits.v_max = uniform(rng, 1.08, 1.21);
    const double load = uniform(rng, 0.0, params.load_max);
    const bool has_gen = u01(rng) < params.gen_fraction;
    node.limits.p_min = -load;
    node.limits.p_max = has_gen ? uniform(rng, 0.0, params.load_max)
                                : -load * uniform(rng, 0.2, 0.9);
    const double q_load = load * uniform(rng, 0.0, 0.8);
    node.limits.q_min = -q_load;
    node.limits.q_max = has_gen ? uniform(rng, 0.0, 0.5 * params.load_max)
                                : -q_load * uniform(rng, 0.2, 0.9);
    data.nodes.push_back(node);

    NetworkData::BranchSpec br;
    br.child = std::to_string(i);
    // Parent drawn among already placed nodes, so the result is a tree.
    br.parent = std::to_string(
        i == 1 ? 0 : static_cast<int>(u01(rng) * static_cast<double>(i)));
    br.r = uniform(rng, params.r_min, params.r_max);
    br.x = uniform(rng, params.x_min, params.x_max);
    br.l_max = uniform(rng, params.l_max_min, params.l_max_max);
    data.branches.push_back(br);
  }
  return Network::from_data(data);
}

}  // namespace radopf
