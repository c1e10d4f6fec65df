#pragma once

// Synthetic corpora shared by unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "hmill/datanode.hpp"
#include "hmill/graph.hpp"
#include "hmill/rng.hpp"

namespace synth {

inline double uniform01(hmill::Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct MilSet {
  std::vector<hmill::DataNode> bags;  // one observation each
  std::vector<int> labels;
};

/// Bags of 2..10 points drawn uniformly from the square of side 1.6 centred
/// at (0.5, 0.5); positive iff some point lies within 0.3 of the centre. The
/// side is chosen so that roughly half of the bags are positive.
inline MilSet disc_mil(std::size_t n, std::uint64_t seed) {
  hmill::Rng rng = hmill::make_rng(seed, "disc-mil");
  MilSet out;
  for (std::size_t b = 0; b < n; ++b) {
    const std::size_t k = 2 + static_cast<std::size_t>(hmill::uniform_index(rng, 9));
    hmill::Matrix x(2, k);
    bool pos = false;
    for (std::size_t i = 0; i < k; ++i) {
      x(0, i) = 0.5 + 1.6 * (uniform01(rng) - 0.5);
      x(1, i) = 0.5 + 1.6 * (uniform01(rng) - 0.5);
      const double dx = x(0, i) - 0.5;
      const double dy = x(1, i) - 0.5;
      pos = pos || dx * dx + dy * dy < 0.09;
    }
    out.bags.push_back(hmill::DataNode::bag(hmill::DataNode::array(std::move(x)),
                                            hmill::BagIndices::from_lengths(std::vector<std::size_t>{k})));
    out.labels.push_back(pos ? 1 : 0);
  }
  return out;
}

struct PlantedGraph {
  std::vector<std::string> rel_names;
  std::vector<std::vector<std::pair<std::string, std::string>>> edges;  // per relation
  hmill::Blacklist blacklist;
};

inline std::string domain(std::size_t i) {
  std::string s = std::to_string(i);
  return "d" + std::string(4 - std::min<std::size_t>(4, s.size()), '0') + s;
}

struct PlantedSpec {
  std::size_t domains = 2000;
  std::size_t campaigns = 3;
  std::size_t campaign_size = 30;
  std::size_t infra = 6;           // dedicated right vertices per campaign and relation
  double join = 0.3;               // chance a campaign domain uses one of them
  std::size_t infra_benign = 10;   // benign domains sharing each infrastructure vertex
  std::size_t infected = 200;      // clients visiting one campaign domain and a few benign ones
  std::size_t infected_benign = 2;
};

/// Two relations (binaries, clients) over `domains` domains. Background right
/// vertices touch 1..4 random domains. Campaign domains share sparse
/// dedicated infrastructure that also serves a few benign domains; infected
/// clients link single campaign domains to random benign ones.
inline PlantedGraph planted_cliques(const PlantedSpec& spec, std::uint64_t seed) {
  hmill::Rng rng = hmill::make_rng(seed, "planted");
  PlantedGraph g;
  g.rel_names = {"binaries", "clients"};
  g.edges.resize(2);
  const std::size_t n = spec.domains;
  auto pick = [&](std::size_t m) { return static_cast<std::size_t>(hmill::uniform_index(rng, m)); };

  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  hmill::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::vector<std::size_t>> campaigns(spec.campaigns);
  for (std::size_t c = 0; c < spec.campaigns; ++c) {
    const auto first = perm.begin() + static_cast<std::ptrdiff_t>(c * spec.campaign_size);
    campaigns[c].assign(first, first + static_cast<std::ptrdiff_t>(spec.campaign_size));
    for (auto d : campaigns[c]) g.blacklist.add("campaign" + std::to_string(c), domain(d));
  }

  for (std::size_t r = 0; r < 2; ++r) {
    const std::string prefix = r == 0 ? "b" : "c";
    const std::size_t right = n / 2;
    for (std::size_t d = 0; d < n; ++d) g.edges[r].emplace_back(domain(d), prefix + std::to_string(pick(right)));
    for (std::size_t b = 0; b < right; ++b) {
      const std::size_t deg = 1 + pick(4);
      for (std::size_t t = 0; t < deg; ++t) g.edges[r].emplace_back(domain(pick(n)), prefix + std::to_string(b));
    }
    for (std::size_t c = 0; c < spec.campaigns; ++c) {
      for (std::size_t h = 0; h < spec.infra; ++h) {
        const std::string id = prefix + "m" + std::to_string(c) + "_" + std::to_string(h);
        for (auto d : campaigns[c]) {
          if (uniform01(rng) < spec.join) g.edges[r].emplace_back(domain(d), id);
        }
        for (std::size_t t = 0; t < spec.infra_benign; ++t) g.edges[r].emplace_back(domain(pick(n)), id);
      }
    }
    if (r == 1) {
      for (std::size_t h = 0; h < spec.infected; ++h) {
        const std::string id = "ci" + std::to_string(h);
        const auto& camp = campaigns[h % spec.campaigns];
        g.edges[r].emplace_back(domain(camp[pick(camp.size())]), id);
        for (std::size_t t = 0; t < spec.infected_benign; ++t) g.edges[r].emplace_back(domain(pick(n)), id);
      }
    }
  }
  return g;
}

}  // namespace synth
