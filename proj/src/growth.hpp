// Copyright 2026 The pifdecode Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "pifdecode/decoder.hpp"

namespace pifdecode::detail {

/// Directed connection between two nodes of a growing pose.
struct GrowthLink {
  int source = 0;
  int target = 0;
  EdgeQuery query;
};

/// Nodes are keypoint slots; a spatio-temporal pose uses two blocks of them.
struct GrowthGraph {
  explicit GrowthGraph(int nodes) : outgoing(static_cast<std::size_t>(nodes)) {}

  void add(const GrowthLink& link) {
    outgoing[static_cast<std::size_t>(link.source)].push_back(static_cast<int>(links.size()));
    links.push_back(link);
  }

  std::vector<GrowthLink> links;
  std::vector<std::vector<int>> outgoing;
};

/// Adds both directions of every skeleton edge (dense ones only when
/// `dense`), with keypoint k mapped to node `offset + k`.
void add_spatial_links(GrowthGraph& graph, const Skeleton& skeleton, const AssociationIndex& caf, const HrMap* hr,
                       bool dense, int offset);

/// Greedy growth from the detected nodes. A node, once detected, is final.
void grow(std::vector<Keypoint>& nodes, const GrowthGraph& graph, const DecoderConfig& config);

}  // namespace pifdecode::detail
