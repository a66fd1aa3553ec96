#pragma once

// Monte-Carlo simulation of a PWN under a scheduler: repeated token-game
// walks from the initial marking, with the transition inside the chosen
// conflict set drawn by normalized weight. Runs are seeded per index, so the
// result is reproducible and independent of execution order.

#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "pwn/errors.hpp"
#include "pwn/mdp.hpp"
#include "pwn/net.hpp"
#include "pwn/rational.hpp"

namespace pwn {

struct simulation_options {
  std::uint64_t runs = 10'000;
  std::uint64_t seed = 0;
  std::uint64_t step_bound = 1'000'000;
  std::size_t prefix_depth = 4;  // empirical language tracked up to this length
};

struct simulation_result {
  std::uint64_t runs = 0;
  rational mean;      // exact sample mean of the total reward
  rational variance;  // unbiased sample variance
  // count per observed firing-sequence prefix (length <= prefix_depth)
  std::map<std::vector<transition_id>, std::uint64_t> prefix_counts;

  double empirical_probability(const std::vector<transition_id>& prefix) const {
    auto it = prefix_counts.find(prefix);
    return it == prefix_counts.end() ? 0.0 : static_cast<double>(it->second) / runs;
  }
};

/// Runs `opt.runs` independent trajectories to the final marking. Throws
/// step_bound_exceeded when a trajectory deadlocks or outlives the step
/// bound, which signals an unsound net.
inline simulation_result simulate(const workflow_net& net, const scheduler& sched,
                                  simulation_options opt = {}) {
  simulation_result result;
  result.runs = opt.runs;
  rational sum = 0, sum_sq = 0;
  const marking final_m = net.final_marking();

  for (std::uint64_t run = 0; run < opt.runs; ++run) {
    std::seed_seq sseq{opt.seed, run};
    std::mt19937_64 rng(sseq);
    auto u01 = [&rng]() { return (rng() >> 11) * (1.0 / 9007199254740992.0); };

    marking m = net.initial_marking();
    rational total = 0;
    std::vector<transition_id> prefix;
    std::vector<transition_id> history;
    std::uint64_t steps = 0;
    while (!(m == final_m)) {
      std::vector<transition_id> en = enabled(net, m);
      if (en.empty())
        throw step_bound_exceeded("deadlock reached while simulating (unsound net?)");
      if (++steps > opt.step_bound)
        throw step_bound_exceeded("trajectory exceeded " + std::to_string(opt.step_bound) +
                                  " steps (unsound net?)");
      auto sets = detail::conflict_partition(net, m, en);
      std::size_t pick;
      if (sets.size() == 1)
        pick = 0;
      else if (sched.choose_with_history)
        pick = sched.choose_with_history(net, history, m, sets);
      else
        pick = sched.choose(net, m, sets);
      const auto& conflict = sets.at(pick);
      rational total_w = 0;
      for (transition_id t : conflict) total_w += net.weight(t);
      double u = u01();
      transition_id chosen = conflict.back();
      double acc = 0;
      for (transition_id t : conflict) {
        acc += rational(net.weight(t) / total_w).get_d();
        if (u < acc) {
          chosen = t;
          break;
        }
      }
      m = fire(net, m, chosen);
      total += net.reward(chosen);
      history.push_back(chosen);
      if (prefix.size() < opt.prefix_depth) {
        prefix.push_back(chosen);
        ++result.prefix_counts[prefix];
      }
    }
    sum += total;
    sum_sq += total * total;
  }
  if (opt.runs > 0) result.mean = sum / static_cast<long>(opt.runs);
  if (opt.runs > 1) {
    long n = static_cast<long>(opt.runs);
    result.variance = (sum_sq - sum * sum / n) / (n - 1);
  }
  return result;
}

}  // namespace pwn
