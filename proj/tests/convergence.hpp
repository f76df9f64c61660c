// Randomized multi-replica editing with causal delivery. Each op carries
// the per-source delivery counts its author had seen, and a receiver only
// takes the head of a source's queue once it has caught up on those.
#pragma once

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "policypad/doc/replica.hpp"

namespace ppad::testing {

struct TrialResult {
  bool converged = false;
  std::size_t ops = 0;
  std::size_t final_length = 0;
};

inline doc::DocNode random_node(std::mt19937_64& rng) {
  switch (rng() % 8) {
    case 0: return doc::DocNode::widget("sc-000" + std::to_string(1 + rng() % 5), rng() % 2 == 0);
    case 1: return doc::DocNode::heading(1 + static_cast<int>(rng() % 3));
    case 2: return doc::DocNode::list_item();
    case 3: return rng() % 2 ? doc::DocNode::drafting_open() : doc::DocNode::drafting_close();
    default: return doc::DocNode::text_run(std::string(1, static_cast<char>('a' + rng() % 26)));
  }
}

inline TrialResult run_convergence_trial(std::uint64_t seed, std::size_t replicas, std::size_t steps) {
  std::mt19937_64 rng(seed);
  struct Sent {
    doc::DocOp op;
    std::vector<std::size_t> deps;
  };
  std::vector<doc::Replica> sites;
  for (std::size_t i = 0; i < replicas; ++i) sites.emplace_back("r" + std::to_string(i));
  std::vector<std::vector<Sent>> log(replicas);  // ops authored by each site
  // delivered[r][s]: how many of s's ops r has applied (own ops count as delivered)
  std::vector<std::vector<std::size_t>> delivered(replicas, std::vector<std::size_t>(replicas, 0));

  auto author = [&](std::size_t r, std::vector<doc::DocOp> ops) {
    for (auto& op : ops) {
      log[r].push_back({std::move(op), delivered[r]});
      delivered[r][r] = log[r].size();
    }
  };

  auto try_deliver = [&](std::size_t r, std::size_t s) {
    if (s == r || delivered[r][s] >= log[s].size()) return false;
    const auto& next = log[s][delivered[r][s]];
    for (std::size_t t = 0; t < replicas; ++t) {
      if (t != s && delivered[r][t] < next.deps[t]) return false;
    }
    sites[r].receive(next.op);
    ++delivered[r][s];
    return true;
  };

  for (std::size_t step = 0; step < steps; ++step) {
    const auto r = rng() % replicas;
    auto& site = sites[r];
    const auto size = site.size();
    const auto roll = rng() % 10;
    if (roll < 4 || size == 0) {
      author(r, {site.insert(rng() % (size + 1), random_node(rng))});
    } else if (roll < 6) {
      std::string word;
      for (auto n = 2 + rng() % 5; n > 0; --n) word.push_back(static_cast<char>('a' + rng() % 26));
      author(r, site.insert_text(rng() % (size + 1), word));
    } else if (roll < 8) {
      author(r, {site.erase(rng() % size)});
    } else if (roll < 9) {
      author(r, {site.set_payload(rng() % size, random_node(rng))});
    } else {
      // Deliver a burst so replicas interleave views of each other.
      for (int k = 0; k < 4; ++k) try_deliver(rng() % replicas, rng() % replicas);
    }
    if (rng() % 3 == 0) try_deliver(rng() % replicas, rng() % replicas);
  }

  // Quiesce: random causal delivery until every site has every op.
  for (bool progress = true; progress;) {
    progress = false;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t r = 0; r < replicas; ++r) {
      for (std::size_t s = 0; s < replicas; ++s) pairs.emplace_back(r, s);
    }
    std::shuffle(pairs.begin(), pairs.end(), rng);
    for (auto [r, s] : pairs) progress = try_deliver(r, s) || progress;
  }

  TrialResult result;
  for (const auto& l : log) result.ops += l.size();
  const auto reference = sites[0].materialize();
  result.final_length = reference.size();
  result.converged = true;
  for (std::size_t r = 1; r < replicas; ++r) {
    if (sites[r].materialize() != reference || !(sites[r].state() == sites[0].state())) result.converged = false;
  }
  return result;
}

}  // namespace ppad::testing
