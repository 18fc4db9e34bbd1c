#include "doctest.h"

#include "tlas/decomposition/decomposition.hpp"

#include <random>

using namespace tlas;

namespace {

NetworkSpec six_layers() { return NetworkSpec::mlp({2, 4, 4, 4, 4, 4, 1}); }

std::vector<Index> v(std::initializer_list<Index> xs) { return std::vector<Index>(xs); }

}  // namespace

TEST_CASE("six layers, three subdomains, overlap one") {
  const auto d = decompose(six_layers(), 3, 1);
  REQUIRE(d.base_layers.size() == 3);
  CHECK(d.base_layers[0] == v({0, 1}));
  CHECK(d.base_layers[1] == v({2, 3}));
  CHECK(d.base_layers[2] == v({4, 5}));
  CHECK(d.overlap_layers[0] == v({0, 1, 2}));
  CHECK(d.overlap_layers[1] == v({1, 2, 3, 4}));
  CHECK(d.overlap_layers[2] == v({3, 4, 5}));
  CHECK(d.coarse_layers == v({0, 2, 4}));
}

TEST_CASE("coarse set without overlap") {
  const auto d = decompose(six_layers(), 3, 0);
  CHECK(d.coarse_layers == v({0, 2, 4}));
  const ParamLayout layout(six_layers());
  CHECK(d.coarse.indices == IndexMap::from_layers(layout, {0, 2, 4}).indices);
}

TEST_CASE("single subdomain covers everything") {
  const ParamLayout layout(six_layers());
  const auto d = decompose(layout, 1, 0);
  CHECK(d.base_layers[0] == v({0, 1, 2, 3, 4, 5}));
  CHECK(d.coarse_layers == v({0}));
  CHECK(d.maps[0].indices == IndexMap::all(layout.size()).indices);
}

TEST_CASE("front-loaded balancing") {
  const auto d = decompose(NetworkSpec::mlp({1, 3, 3, 3, 3, 3, 3, 1}), 3, 0);
  CHECK(d.base_layers[0] == v({0, 1, 2}));
  CHECK(d.base_layers[1] == v({3, 4}));
  CHECK(d.base_layers[2] == v({5, 6}));
}

TEST_CASE("invalid decompositions are rejected") {
  CHECK_THROWS_AS(decompose(six_layers(), 7, 0), Error);
  CHECK_THROWS_AS(decompose(six_layers(), 0, 0), Error);
  CHECK_THROWS_AS(decompose(six_layers(), 3, 2), Error);
  CHECK_THROWS_AS(decompose(six_layers(), 3, -1), Error);
}

TEST_CASE("overlap multiplicity") {
  const ParamLayout layout(six_layers());
  const auto d = decompose(layout, 3, 1);
  const Vector m = d.multiplicity();
  for (Index h = 0; h < 6; ++h) {
    const double expected = (h >= 1 && h <= 4) ? 2.0 : 1.0;
    const auto& L = layout.layer(h);
    for (Index i = L.begin; i < L.end; ++i) CHECK(m[i] == expected);
  }
}

TEST_CASE("restriction and prolongation") {
  Vector theta(4);
  theta << 10, 20, 30, 40;
  IndexMap map{{1, 3}};
  const Vector r = restrict_to(theta, map);
  CHECK(r.size() == 2);
  CHECK(r[0] == 20);
  CHECK(r[1] == 40);
  CHECK(restrict_to(theta, IndexMap{}).size() == 0);
  CHECK((restrict_to(theta, IndexMap::all(4)).array() == theta.array()).all());

  Vector target = Vector::Constant(4, -1.0);
  prolong_scatter(r, map, target);
  CHECK(target[0] == -1.0);
  CHECK(target[1] == 20);
  CHECK(target[3] == 40);
  const Vector d = prolong_add(r, map, 4);
  CHECK(d[0] == 0.0);
  CHECK(d[2] == 0.0);
  CHECK(d[3] == 40);
  CHECK_THROWS_AS(prolong_scatter(theta, map, target), Error);
}

TEST_CASE("operator algebra on random networks") {
  std::mt19937_64 rng(1);
  for (Index layers = 4; layers <= 12; ++layers) {
    std::vector<Index> widths{2};
    std::uniform_int_distribution<Index> width(1, 5);
    for (Index h = 0; h < layers; ++h) widths.push_back(width(rng));
    const ParamLayout layout(NetworkSpec::mlp(widths, Activation::Tanh, true));
    const Index n = layout.size();
    std::normal_distribution<double> normal;
    Vector theta(n);
    for (Index i = 0; i < n; ++i) theta[i] = normal(rng);
    for (Index nsd = 1; nsd <= 4; ++nsd) {
      for (Index delta = 0; delta <= 2; ++delta) {
        if (delta > 0 && delta >= layers / nsd) continue;
        const auto d = decompose(layout, nsd, delta);
        CHECK(d.coarse_layers.size() == static_cast<std::size_t>(nsd));

        // every layer in exactly one base set
        std::vector<int> owners(static_cast<std::size_t>(layers), 0);
        for (const auto& b : d.base_layers) {
          for (Index h : b) ++owners[static_cast<std::size_t>(h)];
        }
        for (int o : owners) CHECK(o == 1);

        Vector sum = Vector::Zero(n);
        for (Index s = 0; s < nsd; ++s) {
          const auto& map = d.maps[static_cast<std::size_t>(s)];
          for (std::size_t k = 1; k < map.indices.size(); ++k) CHECK(map.indices[k - 1] < map.indices[k]);
          const Vector local = restrict_to(theta, map);
          CHECK((restrict_to(prolong_add(local, map, n), map).array() == local.array()).all());
          sum += prolong_add(local, map, n);
          if (delta < 2 && delta + 1 < layers / nsd) {
            const auto wider = decompose(layout, nsd, delta + 1);
            const auto& big = wider.maps[static_cast<std::size_t>(s)].indices;
            for (Index i : map.indices) CHECK(std::binary_search(big.begin(), big.end(), i));
          }
        }
        if (delta == 0) CHECK((sum.array() == theta.array()).all());
        const Vector m = d.multiplicity();
        CHECK((sum.array() == (m.array() * theta.array())).all());
        for (Index i : d.coarse.indices) CHECK(m[i] >= 1.0);
      }
    }
  }
}

TEST_CASE("DeepONet branch and trunk are split independently") {
  DonSpec spec;
  spec.branch = NetworkSpec::mlp({8, 6, 6, 6, 4});
  spec.trunk = NetworkSpec::mlp({2, 6, 4});
  spec.latent = 4;
  const auto two = decompose(spec, 2, 0);
  CHECK(two.base_layers[0] == v({0, 1, 2, 3}));
  CHECK(two.base_layers[1] == v({4, 5}));
  CHECK(two.segment_subdomains == v({1, 1}));

  const auto three = decompose(spec, 3, 1);
  CHECK(three.segment_subdomains == v({2, 1}));
  CHECK(three.overlap_layers[0] == v({0, 1, 2}));
  CHECK(three.overlap_layers[1] == v({1, 2, 3}));
  CHECK(three.overlap_layers[2] == v({4, 5}));
}

TEST_CASE("POD trunk decomposes only the branch") {
  auto pod = std::make_shared<PodBasis>();
  pod->basis = Matrix::Identity(5, 3);
  pod->mean = Vector::Zero(5);
  pod->points = Matrix::Zero(5, 1);
  DonSpec spec;
  spec.branch = NetworkSpec::mlp({8, 6, 6, 3});
  spec.pod = pod;
  spec.latent = 3;
  const auto d = decompose(spec, 3, 0);
  CHECK(d.parameter_count == spec.layout().size());
  CHECK(d.coarse_layers == v({0, 1, 2}));
}
