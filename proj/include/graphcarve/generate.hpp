#pragma once

#include "graphcarve/cloud.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace graphcarve {

struct Stack {
  double site = 0.0;    // position along the first base axis (other base coordinates 0)
  double height = 0.5;  // top of the stack above the graph
  int count = 1;        // points at height * k / count, k = 1..count
};

struct GenerateParams {
  std::string kind = "lipschitz_graph";
  int d = 2;
  int n = 1;
  /// Samples per base axis for the graph kinds.
  std::size_t count = 1000;
  double t_min = 0.0;
  double t_max = 1.0;
  double lipschitz = 0.3;
  int pieces = 8;
  /// four_corner_cantor depth.
  int depth = 6;
  std::vector<Stack> stacks;
  /// Every point gets weight 1 instead of the arclength weight.
  bool unit_weights = false;
  /// union_of_graphs: number of sheets and their vertical spacing.
  int graphs = 2;
  double offset = 0.5;
  /// hrycak_like: number of dyadic levels.
  int levels = 6;
  std::uint64_t seed = 1;
};

/// Kinds: lipschitz_graph, four_corner_cantor, outlier_stacks, union_of_graphs, hrycak_like.
/// hrycak_like is a crude multiscale zigzag, not a faithful reconstruction of any example.
WeightedCloud generate(const GenerateParams& p);

}  // namespace graphcarve
