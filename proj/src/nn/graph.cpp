#include <algorithm>
#include <functional>
#include <queue>

#include "stacksense/error.hpp"
#include "stacksense/nn.hpp"

namespace stacksense {

namespace {

std::string describe_cycle(const std::vector<std::size_t>& cycle) {
  std::string s = "directed cycle:";
  for (auto v : cycle) s += " " + std::to_string(v);
  if (!cycle.empty()) s += " " + std::to_string(cycle.front());
  return s;
}

}  // namespace

CycleDetected::CycleDetected(std::vector<std::size_t> cycle)
    : Error(describe_cycle(cycle)), cycle_(std::move(cycle)) {}

namespace nn {

std::vector<std::size_t> validate_feedforward(const NetGraph& graph) {
  const std::size_t n = graph.node_count;
  std::vector<std::vector<std::size_t>> succ(n), pred(n);
  std::vector<std::size_t> indegree(n, 0);
  for (auto [i, j] : graph.edges) {
    if (i >= n || j >= n)
      throw InvalidArgument("edge (" + std::to_string(i) + "," + std::to_string(j) +
                            ") outside node range " + std::to_string(n));
    succ[i].push_back(j);
    pred[j].push_back(i);
    ++indegree[j];
  }

  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t v = 0; v < n; ++v)
    if (indegree[v] == 0) ready.push(v);

  std::vector<std::size_t> order;
  order.reserve(n);
  while (!ready.empty()) {
    const auto v = ready.top();
    ready.pop();
    order.push_back(v);
    for (auto w : succ[v])
      if (--indegree[w] == 0) ready.push(w);
  }
  if (order.size() == n) return order;

  // Every unplaced node still has an unplaced predecessor, so walking
  // predecessors from any of them must revisit a node.
  std::size_t start = 0;
  while (indegree[start] == 0) ++start;
  std::vector<std::size_t> seen_at(n, SIZE_MAX);
  std::vector<std::size_t> walk;
  std::size_t v = start;
  while (seen_at[v] == SIZE_MAX) {
    seen_at[v] = walk.size();
    walk.push_back(v);
    for (auto p : pred[v]) {
      if (indegree[p] > 0) {
        v = p;
        break;
      }
    }
  }
  std::vector<std::size_t> cycle(walk.begin() + static_cast<std::ptrdiff_t>(seen_at[v]), walk.end());
  std::reverse(cycle.begin(), cycle.end());
  throw CycleDetected(std::move(cycle));
}

}  // namespace nn
}  // namespace stacksense
