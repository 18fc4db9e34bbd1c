#include "tlas/decomposition/decomposition.hpp"

#include <algorithm>
#include <string>

namespace tlas {

std::vector<char> IndexMap::mask(Index n) const {
  std::vector<char> m(static_cast<std::size_t>(n), 0);
  for (Index i : indices) m[static_cast<std::size_t>(i)] = 1;
  return m;
}

IndexMap IndexMap::all(Index n) {
  IndexMap map;
  map.indices.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) map.indices[static_cast<std::size_t>(i)] = i;
  return map;
}

IndexMap IndexMap::from_layers(const ParamLayout& layout, const std::vector<Index>& layers) {
  std::vector<Index> sorted = layers;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  IndexMap map;
  for (Index h : sorted) {
    const auto& L = layout.layer(h);
    for (Index i = L.begin; i < L.end; ++i) map.indices.push_back(i);
  }
  return map;
}

Vector Decomposition::multiplicity() const {
  Vector m = Vector::Zero(parameter_count);
  for (const auto& map : maps) {
    for (Index i : map.indices) m[i] += 1.0;
  }
  return m;
}

namespace {

// Subdomain counts per stacked network: proportional to layer counts by
// largest remainder, at least one each, ties to the earlier network.
std::vector<Index> allocate(const std::vector<Index>& layers, Index subdomains) {
  const Index total = [&] {
    Index t = 0;
    for (Index l : layers) t += l;
    return t;
  }();
  const std::size_t k = layers.size();
  std::vector<Index> count(k, 1);
  Index left = subdomains - static_cast<Index>(k);
  while (left > 0) {
    // give the next subdomain to the network furthest below its share
    std::size_t best = k;
    double best_gap = 0.0;
    for (std::size_t s = 0; s < k; ++s) {
      if (count[s] >= layers[s]) continue;
      const double share = static_cast<double>(subdomains) * static_cast<double>(layers[s]) / static_cast<double>(total);
      const double gap = share - static_cast<double>(count[s]);
      if (best == k || gap > best_gap) {
        best = s;
        best_gap = gap;
      }
    }
    if (best == k) break;
    ++count[best];
    --left;
  }
  return count;
}

}  // namespace

Decomposition decompose(const ParamLayout& layout, Index subdomains, Index overlap) {
  const Index layers = layout.layer_count();
  if (subdomains < 1) throw Error("number of subdomains must be at least 1");
  if (subdomains > layers) {
    throw Error("number of subdomains (" + std::to_string(subdomains) + ") exceeds the number of layers (" +
                std::to_string(layers) + ")");
  }
  if (overlap < 0) throw Error("overlap must be non-negative");

  // Stacked networks are split independently unless there are fewer
  // subdomains than networks, in which case the stack is treated as one.
  std::vector<Index> seg_layers = layout.segments();
  if (static_cast<Index>(seg_layers.size()) > subdomains) seg_layers = {layers};
  const std::vector<Index> counts = allocate(seg_layers, subdomains);

  Decomposition d;
  d.subdomains = subdomains;
  d.overlap = overlap;
  d.parameter_count = layout.size();
  d.segment_subdomains = counts;

  Index first_layer = 0;
  for (std::size_t seg = 0; seg < seg_layers.size(); ++seg) {
    const Index nl = seg_layers[seg];
    const Index ns = counts[seg];
    const Index base = nl / ns;
    const Index extra = nl % ns;
    const std::size_t seg_begin = d.base_layers.size();
    Index next = first_layer;
    for (Index s = 0; s < ns; ++s) {
      const Index size = base + (s < extra ? 1 : 0);
      std::vector<Index> block;
      for (Index h = 0; h < size; ++h) block.push_back(next + h);
      next += size;
      d.base_layers.push_back(std::move(block));
      d.segment_of.push_back(static_cast<Index>(seg));
    }
    const Index smallest = base;
    if (overlap > 0 && overlap >= smallest) {
      throw Error("overlap " + std::to_string(overlap) + " must be smaller than the smallest subdomain (" +
                  std::to_string(smallest) + " layers)");
    }
    for (std::size_t s = seg_begin; s < d.base_layers.size(); ++s) {
      std::vector<Index> set = d.base_layers[s];
      if (s > seg_begin) {
        const auto& prev = d.base_layers[s - 1];
        const Index take = std::min<Index>(overlap, static_cast<Index>(prev.size()));
        set.insert(set.begin(), prev.end() - take, prev.end());
      }
      if (s + 1 < d.base_layers.size()) {
        const auto& nxt = d.base_layers[s + 1];
        const Index take = std::min<Index>(overlap, static_cast<Index>(nxt.size()));
        set.insert(set.end(), nxt.begin(), nxt.begin() + take);
      }
      d.overlap_layers.push_back(std::move(set));
    }
    first_layer = next;
  }

  for (const auto& base : d.base_layers) d.coarse_layers.push_back(base.front());
  for (const auto& set : d.overlap_layers) d.maps.push_back(IndexMap::from_layers(layout, set));
  d.coarse = IndexMap::from_layers(layout, d.coarse_layers);
  return d;
}

Decomposition decompose(const NetworkSpec& spec, Index subdomains, Index overlap) {
  return decompose(ParamLayout(spec), subdomains, overlap);
}

Decomposition decompose(const DonSpec& spec, Index subdomains, Index overlap) {
  return decompose(spec.layout(), subdomains, overlap);
}

Vector restrict_to(const Vector& theta, const IndexMap& map) {
  Vector out(map.size());
  for (Index k = 0; k < map.size(); ++k) {
    const Index i = map.indices[static_cast<std::size_t>(k)];
    if (i < 0 || i >= theta.size()) throw Error("index map does not fit the parameter vector");
    out[k] = theta[i];
  }
  return out;
}

void prolong_scatter(const Vector& local, const IndexMap& map, Vector& theta) {
  if (local.size() != map.size()) throw Error("local vector length differs from the index map");
  for (Index k = 0; k < map.size(); ++k) {
    const Index i = map.indices[static_cast<std::size_t>(k)];
    if (i < 0 || i >= theta.size()) throw Error("index map does not fit the parameter vector");
    theta[i] = local[k];
  }
}

Vector prolong_add(const Vector& local, const IndexMap& map, Index n) {
  Vector out = Vector::Zero(n);
  prolong_scatter(local, map, out);
  return out;
}

}  // namespace tlas
