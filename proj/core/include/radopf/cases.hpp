#pragma once

#include <cstdint>

#include "radopf/network.hpp"

namespace radopf {

/// IEEE 33-bus radial test feeder (12.66 kV), converted to per-unit on a
/// 10 MVA base. Buses carry their published peak loads as fixed injections
/// (p_min = p_max = -load), voltage band 0.9..1.1 magnitude (squared:
/// 0.81..1.21), v0 = 1. Branch current limits are a uniform generous
/// 2 p.u. squared; the published data carries none.
Network ieee33_network();

/// Seeded synthetic 56-bus radial network: a long trunk with laterals and
/// mixed load sizes. This is a stand-in of matching size and style for a
/// real utility feeder whose data is not public; it is NOT that feeder.
Network synthetic56_network(std::uint64_t seed = 56);

struct RandomNetworkParams {
  double r_min = 0.001, r_max = 0.05;
  double x_min = 0.001, x_max = 0.05;
  double l_max_min = 0.5, l_max_max = 3.0;
  double load_max = 0.05;    ///< per-node maximum consumption, p.u.
  double gen_fraction = 0.3; ///< fraction of nodes with generation headroom
};

/// Seeded random rooted tree with n_nodes non-root nodes and plausible
/// per-unit parameters. Used by the randomized test suites.
Network random_radial_network(std::uint64_t seed, int n_nodes,
                              const RandomNetworkParams& params = {});

}  // namespace radopf
