#pragma once

#include "tlas/network/deeponet.hpp"
#include "tlas/network/network.hpp"

#include <vector>

namespace tlas {

/// Sorted global parameter indices of a subnetwork; realizes R_s and R_s^T.
struct IndexMap {
  std::vector<Index> indices;

  Index size() const { return static_cast<Index>(indices.size()); }
  bool empty() const { return indices.empty(); }
  /// One flag per global coordinate, set on the listed indices.
  std::vector<char> mask(Index n) const;
  static IndexMap all(Index n);
  static IndexMap from_layers(const ParamLayout& layout, const std::vector<Index>& layers);
};

/// Layer-wise overlapping decomposition. Layer indices are 0-based positions
/// in the layout; stacked networks (DeepONet branch and trunk) are split
/// independently and never overlap each other.
struct Decomposition {
  Index subdomains = 0;
  Index overlap = 0;
  Index parameter_count = 0;
  std::vector<std::vector<Index>> base_layers;
  std::vector<std::vector<Index>> overlap_layers;
  std::vector<Index> coarse_layers;
  /// Stacked-network index of every subdomain.
  std::vector<Index> segment_of;
  /// Number of subdomains assigned to each stacked network.
  std::vector<Index> segment_subdomains;
  std::vector<IndexMap> maps;
  IndexMap coarse;

  /// Number of overlapping subdomains owning each coordinate.
  Vector multiplicity() const;
};

Decomposition decompose(const ParamLayout& layout, Index subdomains, Index overlap);
Decomposition decompose(const NetworkSpec& spec, Index subdomains, Index overlap);
/// With a POD trunk only the branch carries parameters and is decomposed.
Decomposition decompose(const DonSpec& spec, Index subdomains, Index overlap);

Vector restrict_to(const Vector& theta, const IndexMap& map);
/// Writes `local` into the listed coordinates of `theta`, leaving the rest.
void prolong_scatter(const Vector& local, const IndexMap& map, Vector& theta);
/// Full-length vector equal to `local` on the map and zero elsewhere.
Vector prolong_add(const Vector& local, const IndexMap& map, Index n);

}  // namespace tlas
