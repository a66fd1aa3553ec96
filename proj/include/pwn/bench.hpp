#pragma once

// Academic benchmark family and the scaling harness.
//
// The generated net forks into n parallel branches; branch i runs one step
// that succeeds with probability p_i (reward 0) or fails with probability
// 1 - p_i (reward r_i), then all branches synchronize. The closed-form
// expected reward is fork_reward + join_reward + sum_i (1 - p_i) * r_i, while
// the explicit state space grows with the number of branch interleavings.

#include <chrono>
#include <cstdint>
#include <iomanip>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pwn/errors.hpp"
#include "pwn/mdp.hpp"
#include "pwn/net.hpp"
#include "pwn/rational.hpp"
#include "pwn/reduction.hpp"
#include "pwn/simulate.hpp"

namespace pwn {

struct bench_spec {
  std::size_t process_count = 1;
  std::vector<rational> success_probability;  // p_i, one per process, 0 < p_i < 1
  std::vector<rational> failure_reward;       // r_i >= 0
  rational fork_reward = 0;
  rational join_reward = 0;

  friend bool operator==(const bench_spec& a, const bench_spec& b) {
    return a.process_count == b.process_count &&
           a.success_probability == b.success_probability &&
           a.failure_reward == b.failure_reward && a.fork_reward == b.fork_reward &&
           a.join_reward == b.join_reward;
  }

  static bench_spec uniform(std::size_t n, rational p, rational r) {
    bench_spec s;
    s.process_count = n;
    p.canonicalize();
    r.canonicalize();
    s.success_probability.assign(n, std::move(p));
    s.failure_reward.assign(n, std::move(r));
    return s;
  }

  /// Random parameters: p_i uniform over {1/10, ..., 9/10}, r_i over {0..10}.
  static bench_spec random(std::size_t n, std::uint64_t seed) {
    bench_spec s;
    s.process_count = n;
    std::mt19937_64 rng(seed);
    for (std::size_t k = 0; k < n; ++k) {
      rational p(static_cast<long>(1 + rng() % 9), 10);
      p.canonicalize();
      s.success_probability.push_back(std::move(p));
      s.failure_reward.emplace_back(static_cast<long>(rng() % 11));
    }
    return s;
  }
};

inline void check_spec(const bench_spec& s) {
  if (s.process_count < 1) throw error("bench spec: need at least one process");
  if (s.success_probability.size() != s.process_count ||
      s.failure_reward.size() != s.process_count)
    throw error("bench spec: need one (p, r) pair per process");
  for (const rational& p : s.success_probability)
    if (p <= 0 || p >= 1) throw error("bench spec: probabilities must lie strictly in (0,1)");
  for (const rational& r : s.failure_reward)
    if (r < 0) throw error("bench spec: rewards must be non-negative");
}

/// One fork transition into n branch places, a success/failure cluster per
/// branch, one join transition collecting all branches.
inline workflow_net generate_parallel_bench(const bench_spec& spec) {
  check_spec(spec);
  workflow_net net;
  place_id i = net.add_place("i");
  place_id o = net.add_place("o");
  net.set_initial(i);
  net.set_final(o);
  std::vector<place_id> branches, joins;
  for (std::size_t k = 0; k < spec.process_count; ++k) {
    branches.push_back(net.add_place("b" + std::to_string(k)));
    joins.push_back(net.add_place("q" + std::to_string(k)));
  }
  net.add_transition("fork", {i}, branches, 1, spec.fork_reward);
  for (std::size_t k = 0; k < spec.process_count; ++k) {
    const rational& p = spec.success_probability[k];
    rational q = 1 - p;
    net.add_transition("ok" + std::to_string(k), {branches[k]}, {joins[k]}, p, 0);
    net.add_transition("fail" + std::to_string(k), {branches[k]}, {joins[k]}, std::move(q),
                       spec.failure_reward[k]);
  }
  net.add_transition("join", joins, {o}, 1, spec.join_reward);
  return net;
}

inline rational bench_closed_form(const bench_spec& spec) {
  check_spec(spec);
  rational total = spec.fork_reward + spec.join_reward;
  for (std::size_t k = 0; k < spec.process_count; ++k)
    total += (1 - spec.success_probability[k]) * spec.failure_reward[k];
  return total;
}

/// Parses "n=5,p=1/2,r=2" (single values replicated) or per-process lists
/// "p=4/5;2/3". `random` with `seed=k` draws the parameters instead.
/// Optional keys: fork=<p/q>, join=<p/q>.
inline bench_spec parse_bench_spec(std::string_view text) {
  std::size_t n = 0;
  std::optional<std::vector<rational>> ps, rs;
  bool randomized = false;
  std::uint64_t seed = 0;
  rational fork = 0, join = 0;

  auto split = [](std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
      std::size_t next = s.find(sep, pos);
      if (next == std::string_view::npos) next = s.size();
      out.emplace_back(s.substr(pos, next - pos));
      pos = next + 1;
    }
    return out;
  };
  auto rationals = [&](const std::string& v) {
    std::vector<rational> out;
    for (const std::string& piece : split(v, ';')) out.push_back(parse_rational(piece));
    return out;
  };

  for (const std::string& entry : split(text, ',')) {
    if (entry.empty()) continue;
    if (entry == "random") {
      randomized = true;
      continue;
    }
    std::size_t eq = entry.find('=');
    if (eq == std::string::npos) throw error("bench spec: expected key=value, got `" + entry + "`");
    std::string key = entry.substr(0, eq), value = entry.substr(eq + 1);
    try {
      if (key == "n")
        n = std::stoull(value);
      else if (key == "p")
        ps = rationals(value);
      else if (key == "r")
        rs = rationals(value);
      else if (key == "seed")
        seed = std::stoull(value);
      else if (key == "fork")
        fork = parse_rational(value);
      else if (key == "join")
        join = parse_rational(value);
      else
        throw error("bench spec: unknown key `" + key + "`");
    } catch (const std::invalid_argument&) {
      throw error("bench spec: bad value `" + value + "` for key `" + key + "`");
    }
  }
  if (n == 0) throw error("bench spec: n is required and must be >= 1");
  bench_spec spec;
  if (randomized) {
    spec = bench_spec::random(n, seed);
  } else {
    if (!ps || !rs) throw error("bench spec: p and r are required unless `random` is given");
    if (ps->size() == 1) ps->assign(n, ps->front());
    if (rs->size() == 1) rs->assign(n, rs->front());
    spec.process_count = n;
    spec.success_probability = *ps;
    spec.failure_reward = *rs;
  }
  spec.fork_reward = fork;
  spec.join_reward = join;
  check_spec(spec);
  return spec;
}

// --- scaling ladder ---------------------------------------------------------

struct bench_options {
  std::size_t max_n = 500;
  std::size_t repeat = 1;
  std::uint64_t seed = 0;
  std::size_t state_cap = 1'000'000;
  double timeout_seconds = 60.0;
  std::uint64_t simulate_runs = 2'000;
};

struct bench_row {
  std::size_t n = 0;
  std::string engine;
  std::string expected_reward;  // lowest-terms rational, "inf", or "" on failure
  double wall_ms = 0.0;
  std::optional<std::size_t> states;
  std::string status;  // ok | state_cap_exceeded | timeout | step_bound_exceeded | error
};

inline std::vector<std::size_t> bench_ladder(std::size_t max_n) {
  std::vector<std::size_t> ns;
  for (std::size_t n = 1; n < max_n; n *= 2) ns.push_back(n);
  ns.push_back(max_n);
  if (ns.size() >= 2 && ns[ns.size() - 2] == max_n) ns.pop_back();
  return ns;
}

/// Times each engine on each ladder point. An engine that hits its cap or the
/// soft timeout is recorded and skipped for larger n; the ladder never aborts.
inline std::vector<bench_row> run_bench(const bench_options& opt) {
  std::vector<bench_row> rows;
  bool chain_alive = true, minmax_alive = true, simulate_alive = true;

  auto timed = [&](auto&& fn) {
    auto start = std::chrono::steady_clock::now();
    fn();
    auto stop = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(stop - start).count();
  };

  for (std::size_t n : bench_ladder(opt.max_n)) {
    bench_spec spec = bench_spec::random(n, opt.seed + n);
    workflow_net net = generate_parallel_bench(spec);

    auto run_engine = [&](const std::string& engine, bool& alive, auto&& compute) {
      if (!alive) return;
      bench_row row;
      row.n = n;
      row.engine = engine;
      std::vector<double> times;
      for (std::size_t rep = 0; rep < std::max<std::size_t>(1, opt.repeat); ++rep) {
        try {
          times.push_back(timed([&] { compute(row); }));
          row.status = "ok";
        } catch (const state_cap_exceeded&) {
          row.status = "state_cap_exceeded";
        } catch (const step_bound_exceeded&) {
          row.status = "step_bound_exceeded";
        } catch (const error&) {
          row.status = "error";
        }
        if (row.status != "ok") {
          alive = false;
          break;
        }
        if (times.back() > opt.timeout_seconds * 1000.0) {
          row.status = "timeout";
          alive = false;
          break;
        }
      }
      if (!times.empty()) {
        std::sort(times.begin(), times.end());
        row.wall_ms = times[times.size() / 2];
      }
      rows.push_back(std::move(row));
    };

    bool reduce_alive = true;  // reduce runs at every ladder point
    run_engine("reduce", reduce_alive, [&](bench_row& row) {
      extended_rational v = expected_reward(net);
      row.expected_reward = v.str();
    });
    run_engine("oracle-chain", chain_alive, [&](bench_row& row) {
      mdp_model model = build_mdp(net, {.state_cap = opt.state_cap});
      row.states = model.state_count();
      row.expected_reward = expected_reward_under(model, net, min_id_scheduler()).value.str();
    });
    run_engine("oracle-minmax", minmax_alive, [&](bench_row& row) {
      mdp_model model = build_mdp(net, {.state_cap = opt.state_cap});
      row.states = model.state_count();
      minmax_result mm = expected_reward_minmax(model);
      if (!(mm.min_value == mm.max_value)) throw error("min/max disagree on a benchmark net");
      row.expected_reward = mm.min_value.str();
    });
    run_engine("simulate", simulate_alive, [&](bench_row& row) {
      simulation_result sim =
          simulate(net, min_id_scheduler(), {.runs = opt.simulate_runs, .seed = opt.seed});
      row.expected_reward = to_string(sim.mean);
    });
  }
  return rows;
}

/// Header: n,engine,expected_reward,wall_ms,states,status
inline void write_csv(const std::vector<bench_row>& rows, std::ostream& out) {
  out << "n,engine,expected_reward,wall_ms,states,status\n";
  for (const bench_row& row : rows) {
    out << row.n << ',' << row.engine << ',' << row.expected_reward << ',' << std::fixed
        << std::setprecision(3) << row.wall_ms << ',';
    if (row.states) out << *row.states;
    out << ',' << row.status << "\n";
  }
}

}  // namespace pwn
