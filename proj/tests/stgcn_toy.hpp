// SPDX-License-Identifier: Apache-2.0
// Small ST-GCN fixtures: a three-node graph and random batches over it.
#pragma once

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "shadowgrid/graph.hpp"
#include "shadowgrid/models/stgcn.hpp"
#include "shadowgrid/numerics/ops.hpp"
#include "support.hpp"

namespace shadowgrid::testing {

inline DependencyGraph toy_graph(Index nodes, std::vector<DependencyEdge> edges) {
  std::vector<GraphNode> n;
  for (Index i = 0; i < nodes; ++i) n.push_back(GraphNode{std::string(1, char('a' + i)), GeoPoint{33.77, -84.39}, 10.0});
  return DependencyGraph(std::move(n), std::move(edges));
}

/// Three nodes: a <-> b, b -> c.
inline DependencyGraph three_node_graph() { return toy_graph(3, {{0, 1, 20.0}, {1, 0, 20.0}, {1, 2, 30.0}}); }

inline StgcnBatch random_batch(const DependencyGraph& g, Index windows, Index window, Index features, bool attributes,
                               std::mt19937_64& rng) {
  StgcnBatch b;
  b.windows = windows;
  b.x = random_tensor({windows * g.node_count(), window, features}, rng);
  const Index cols = 2 * features + (attributes ? EdgeAttributes::kCount : 0);
  b.edge_input = random_tensor({std::max<Index>(1, windows * window * g.edge_count()), cols}, rng);
  return b;
}

inline StgcnConfig toy_config() {
  StgcnConfig c;
  c.channels = 4;
  c.edge_hidden = 4;
  return c;
}

inline void randomize(numerics::ParameterSet& params, std::mt19937_64& rng, double scale = 0.5) {
  for (std::size_t k = 0; k < params.size(); ++k) {
    params[k].value = random_tensor(params[k].value.shape(), rng, -scale, scale);
  }
}

/// Worst relative gradient error of the MSE loss of a randomized network
/// over `seeds` seeds on the three-node graph with 12 input hours.
inline double stgcn_gradient_error(std::uint64_t seeds) {
  const auto g = three_node_graph();
  const Index f = 3;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= seeds; ++seed) {
    std::mt19937_64 rng(seed);
    StgcnNetwork net(toy_config(), f, g, seed);
    randomize(net.parameters(), rng);
    const auto batch = random_batch(g, 2, 12, f, true, rng);
    const numerics::Tensor y = random_tensor({2 * 3, 1}, rng);
    auto loss = [&] {
      numerics::Tape t;
      return numerics::mse(net.forward(t, batch), t.constant(y)).item();
    };
    net.parameters().zero_grad();
    numerics::Tape tape;
    tape.backward(numerics::mse(net.forward(tape, batch), tape.constant(y)));
    worst = std::max(worst, worst_parameter_error(net.parameters(), loss));
  }
  return worst;
}

}  // namespace shadowgrid::testing
