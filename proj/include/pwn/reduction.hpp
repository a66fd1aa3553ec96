#pragma once

// Reward-preserving reduction of free-choice probabilistic workflow nets.
//
// Three rules rewrite the net while keeping its expected reward:
//   merge     — fuse two transitions with identical pre- and postsets; the
//               weight is the sum, the reward the weighted average.
//   iteration — drop a self-loop transition t (t's firing leaves the marking
//               unchanged); each cluster-mate t' absorbs the geometric-series
//               reward w(t)/(1-w(t)) * r(t) and its weight is renormalized.
//   shortcut  — compose a transition t with a cluster c it unconditionally
//               enables: one fresh transition per member t' of c with weight
//               w(t)*w(t') and reward r(t)+r(t'); c is dropped entirely once
//               its places lose their last producer.
//
// `reduce` applies them to a fixpoint under a deterministic strategy and
// decides soundness: a sound net collapses to a single transition i -> o
// whose reward is the expected reward of the original net.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pwn/errors.hpp"
#include "pwn/net.hpp"
#include "pwn/rational.hpp"

namespace pwn {

enum class rule_kind { merge, iteration, shortcut };

inline const char* to_string(rule_kind k) {
  switch (k) {
    case rule_kind::merge:
      return "merge";
    case rule_kind::iteration:
      return "iteration";
    default:
      return "shortcut";
  }
}

/// One rule application: the transitions consumed and the labels produced
/// (fresh transitions, or relabeled survivors for the iteration rule).
struct rule_instance {
  rule_kind kind;
  std::vector<std::string> actors;
  std::vector<std::pair<std::string, label>> produced;
};

struct reduction_trace {
  workflow_net initial_net;  // normalized input; replay starts here
  workflow_net final_net;
  std::vector<rule_instance> steps;
};

struct reduction_outcome {
  enum class kind { sound, unsound, inconclusive };
  kind verdict;
  rational expected;  // meaningful iff verdict == sound
  reduction_trace trace;
  std::uint64_t merge_count = 0;
  std::uint64_t iteration_count = 0;
  std::uint64_t shortcut_count = 0;
};

namespace detail {

enum class merge_reward_formula { weighted_average, weighted_sum };

inline rule_instance merge_in_place(workflow_net& net, transition_id t1, transition_id t2,
                                    merge_reward_formula formula = merge_reward_formula::weighted_average) {
  if (!net.alive(t1) || !net.alive(t2) || t1 == t2)
    throw guard_violated("merge needs two distinct transitions");
  if (net.pre(t1) != net.pre(t2) || net.post(t1) != net.post(t2))
    throw guard_violated("merge needs identical pre- and postsets");
  rational w = net.weight(t1) + net.weight(t2);
  rational r = net.weight(t1) * net.reward(t1) + net.weight(t2) * net.reward(t2);
  if (formula == merge_reward_formula::weighted_average) r /= w;
  rule_instance inst{rule_kind::merge, {net.name(t1), net.name(t2)}, {}};
  std::string fresh = net.fresh_transition_name(net.name(t1));
  std::vector<place_id> pre = net.pre(t1), post = net.post(t1);
  net.remove_transition(t1);
  net.remove_transition(t2);
  net.add_transition(fresh, pre, post, w, r);
  inst.produced.emplace_back(fresh, label{std::move(w), std::move(r)});
  return inst;
}

inline rule_instance iteration_in_place(workflow_net& net, transition_id t) {
  if (!net.alive(t)) throw guard_violated("iteration needs a live transition");
  if (net.pre(t) != net.post(t))
    throw guard_violated("iteration needs a self-loop transition (post = pre)");
  cluster c = cluster_of(net, t);
  rational w = net.weight(t);
  if (w == 1)
    throw divergent_loop("self-loop " + net.name(t) + " has weight 1 and can never be exited");
  if (w > 1) throw guard_violated("iteration needs a normalized weight");
  if (c.transitions.size() < 2)
    throw guard_violated("iteration needs another transition in the cluster");
  rational keep = 1 - w;
  rational carried = w / keep * net.reward(t);
  rule_instance inst{rule_kind::iteration, {net.name(t)}, {}};
  for (transition_id u : c.transitions) {
    if (u == t) continue;
    rational nw = net.weight(u) / keep;
    rational nr = net.reward(u) + carried;
    net.set_weight(u, nw);
    net.set_reward(u, nr);
    inst.produced.emplace_back(net.name(u), label{std::move(nw), std::move(nr)});
  }
  net.remove_transition(t);
  return inst;
}

inline rule_instance shortcut_in_place(workflow_net& net, transition_id t, const cluster& c) {
  if (!net.alive(t)) throw guard_violated("shortcut needs a live transition");
  if (c.transitions.empty()) throw guard_violated("shortcut needs a non-empty cluster");
  for (transition_id u : c.transitions)
    if (u == t) throw guard_violated("shortcut cluster must differ from the transition's own");
  const auto& post_t = net.post(t);
  bool unconditionally_enables = false;
  for (transition_id u : c.transitions) {
    if (std::includes(post_t.begin(), post_t.end(), net.pre(u).begin(), net.pre(u).end())) {
      unconditionally_enables = true;
      break;
    }
  }
  if (!unconditionally_enables)
    throw guard_violated(net.name(t) + " does not unconditionally enable the cluster");

  rule_instance inst{rule_kind::shortcut, {net.name(t)}, {}};
  for (transition_id u : c.transitions) inst.actors.push_back(net.name(u));

  std::vector<place_id> pre_copy = net.pre(t), post_copy = net.post(t);
  rational w_t = net.weight(t), r_t = net.reward(t);
  net.remove_transition(t);
  for (transition_id u : c.transitions) {
    std::vector<place_id> out;
    std::set_difference(post_copy.begin(), post_copy.end(), net.pre(u).begin(), net.pre(u).end(),
                        std::back_inserter(out));
    std::vector<place_id> post_u;
    std::set_union(out.begin(), out.end(), net.post(u).begin(), net.post(u).end(),
                   std::back_inserter(post_u));
    rational w = w_t * net.weight(u);
    rational r = r_t + net.reward(u);
    std::string fresh = net.fresh_transition_name(net.name(u));
    net.add_transition(fresh, pre_copy, post_u, w, r);
    inst.produced.emplace_back(fresh, label{std::move(w), std::move(r)});
  }
  bool orphaned = true;
  for (place_id p : c.places)
    if (!net.producers(p).empty()) {
      orphaned = false;
      break;
    }
  if (orphaned) {
    for (transition_id u : c.transitions) net.remove_transition(u);
    for (place_id p : c.places)
      if (net.producers(p).empty() && net.consumers(p).empty()) net.remove_place(p);
  }
  return inst;
}

struct located_rule {
  rule_kind kind;
  transition_id first;
  transition_id second;  // merge partner
  cluster target;        // shortcut cluster
};

/// Deterministic strategy: merge before iteration before shortcut; actors by
/// smallest id; shortcut (t, c) pairs in id order. Candidate clusters for a
/// shortcut are found through the output places of t, which covers every
/// applicable pair because a cluster enabled by t has a member whose preset
/// lies inside t's postset.
inline std::optional<located_rule> locate_applicable(const workflow_net& net) {
  // merge
  {
    std::map<std::pair<std::vector<place_id>, std::vector<place_id>>, std::vector<transition_id>>
        groups;
    for (transition_id t : net.transitions()) groups[{net.pre(t), net.post(t)}].push_back(t);
    std::optional<std::pair<transition_id, transition_id>> best;
    for (const auto& [key, members] : groups) {
      if (members.size() < 2) continue;
      std::pair<transition_id, transition_id> cand{members[0], members[1]};
      if (!best || cand < *best) best = cand;
    }
    if (best) return located_rule{rule_kind::merge, best->first, best->second, {}};
  }
  // iteration
  for (transition_id t : net.transitions()) {
    if (net.pre(t) != net.post(t)) continue;
    cluster c = cluster_of(net, t);
    if (c.transitions.size() >= 2) return located_rule{rule_kind::iteration, t, {}, {}};
  }
  // shortcut
  for (transition_id t : net.transitions()) {
    std::vector<cluster> candidates;
    for (place_id p : net.post(t)) {
      const auto& cons = net.consumers(p);
      if (cons.empty()) continue;
      cluster c = cluster_of(net, cons[0]);
      bool seen = false;
      for (const auto& prev : candidates)
        if (prev.transitions[0] == c.transitions[0]) {
          seen = true;
          break;
        }
      if (!seen) candidates.push_back(std::move(c));
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const cluster& a, const cluster& b) { return a.transitions[0] < b.transitions[0]; });
    for (const cluster& c : candidates) {
      bool own = false;
      for (transition_id u : c.transitions)
        if (u == t) {
          own = true;
          break;
        }
      if (own) continue;
      const auto& post_t = net.post(t);
      for (transition_id u : c.transitions) {
        if (std::includes(post_t.begin(), post_t.end(), net.pre(u).begin(), net.pre(u).end()))
          return located_rule{rule_kind::shortcut, t, {}, c};
      }
    }
  }
  return std::nullopt;
}

inline rule_instance apply_located(workflow_net& net, const located_rule& loc) {
  switch (loc.kind) {
    case rule_kind::merge:
      return merge_in_place(net, loc.first, loc.second);
    case rule_kind::iteration:
      return iteration_in_place(net, loc.first);
    default:
      return shortcut_in_place(net, loc.first, loc.target);
  }
}

/// Sound outcome shape: exactly one transition i -> o with weight 1 and no
/// other places left.
inline std::optional<rational> atomic_reward(const workflow_net& net) {
  if (net.transition_count() != 1 || net.place_count() != 2) return std::nullopt;
  transition_id t = net.transitions()[0];
  if (net.pre(t) != std::vector<place_id>{net.initial_place()}) return std::nullopt;
  if (net.post(t) != std::vector<place_id>{net.final_place()}) return std::nullopt;
  if (net.weight(t) != 1) return std::nullopt;
  return net.reward(t);
}

inline std::uint64_t default_budget(const workflow_net& net) {
  unsigned __int128 c = clusters(net).size();
  unsigned __int128 t = net.transition_count();
  unsigned __int128 c4 = c * c * c * c;
  unsigned __int128 b = 2 * (c4 * t + c4 + c * c * t) + 64;
  const unsigned __int128 cap = ~std::uint64_t{0};
  return static_cast<std::uint64_t>(b > cap ? cap : b);
}

}  // namespace detail

// --- public rule application -------------------------------------------------

/// Merge rule on a copy of the net. Throws guard_violated unless t1 != t2 with
/// equal pre- and postsets.
inline workflow_net apply_merge(const workflow_net& net, transition_id t1, transition_id t2) {
  workflow_net out = net;
  detail::merge_in_place(out, t1, t2);
  return out;
}

/// Iteration rule on a copy. Throws guard_violated unless post = pre and the
/// cluster has another member; divergent_loop when w(t) = 1.
inline workflow_net apply_iteration(const workflow_net& net, transition_id t) {
  workflow_net out = net;
  detail::iteration_in_place(out, t);
  return out;
}

/// Shortcut rule on a copy. Throws guard_violated unless t unconditionally
/// enables c and c differs from t's own cluster.
inline workflow_net apply_shortcut(const workflow_net& net, transition_id t, const cluster& c) {
  workflow_net out = net;
  detail::shortcut_in_place(out, t, c);
  return out;
}

/// The rule instance the reduction strategy would apply next, if any.
inline std::optional<rule_instance> find_applicable(const workflow_net& net) {
  auto loc = detail::locate_applicable(net);
  if (!loc) return std::nullopt;
  workflow_net scratch = net;
  return detail::apply_located(scratch, *loc);
}

struct reduce_options {
  std::uint64_t budget = 0;  // 0: derived from the completeness bound
};

/// Reduces to a fixpoint. Requires a structurally valid free-choice net; the
/// input is normalized first. Verdicts: sound (net collapsed to one atomic
/// transition carrying the expected reward), unsound (irreducible otherwise),
/// inconclusive (budget exhausted).
inline reduction_outcome reduce(const workflow_net& input, reduce_options opt = {}) {
  auto violations = validate_structure(input);
  if (!violations.empty())
    throw invalid_structure(violations.front().rule + ": " + violations.front().element);
  if (!is_free_choice(input)) throw not_free_choice("reduce requires a free-choice net");

  reduction_outcome out;
  workflow_net net = normalize_weights(input);
  out.trace.initial_net = net;
  const std::uint64_t budget = opt.budget ? opt.budget : detail::default_budget(net);
  std::uint64_t used = 0;
  for (;;) {
    if (auto reward = detail::atomic_reward(net)) {
      out.verdict = reduction_outcome::kind::sound;
      out.expected = *reward;
      break;
    }
    auto loc = detail::locate_applicable(net);
    if (!loc) {
      out.verdict = reduction_outcome::kind::unsound;
      break;
    }
    if (used == budget) {
      out.verdict = reduction_outcome::kind::inconclusive;
      break;
    }
    rule_instance inst = detail::apply_located(net, *loc);
    switch (inst.kind) {
      case rule_kind::merge:
        ++out.merge_count;
        break;
      case rule_kind::iteration:
        ++out.iteration_count;
        break;
      case rule_kind::shortcut:
        ++out.shortcut_count;
        break;
    }
    out.trace.steps.push_back(std::move(inst));
    ++used;
  }
  out.trace.final_net = net;
  return out;
}

/// Expected reward by reduction: the atomic reward when sound, +infinity when
/// unsound. Throws reduction_inconclusive if the budget ran out.
inline extended_rational expected_reward(const workflow_net& net, reduce_options opt = {}) {
  reduction_outcome out = reduce(net, opt);
  switch (out.verdict) {
    case reduction_outcome::kind::sound:
      return extended_rational(out.expected);
    case reduction_outcome::kind::unsound:
      return extended_rational::infinity();
    default:
      throw reduction_inconclusive("rule budget exhausted before reaching a verdict");
  }
}

// --- trace replay and export ---------------------------------------------------

/// Re-applies the logged steps to the trace's initial net. The result must
/// reproduce final_net label-for-label (checked by callers/tests).
inline workflow_net replay(const reduction_trace& trace) {
  workflow_net net = trace.initial_net;
  for (const rule_instance& inst : trace.steps) {
    auto t_of = [&](const std::string& name) {
      auto t = net.find_transition(name);
      if (!t) throw error("replay: unknown transition " + name);
      return *t;
    };
    switch (inst.kind) {
      case rule_kind::merge:
        detail::merge_in_place(net, t_of(inst.actors[0]), t_of(inst.actors[1]));
        break;
      case rule_kind::iteration:
        detail::iteration_in_place(net, t_of(inst.actors[0]));
        break;
      case rule_kind::shortcut:
        detail::shortcut_in_place(net, t_of(inst.actors[0]), cluster_of(net, t_of(inst.actors[1])));
        break;
    }
  }
  return net;
}

/// One line per rule instance: kind, actors, produced labels as `p/q`.
inline std::string render_trace(const reduction_trace& trace) {
  std::ostringstream out;
  for (const rule_instance& inst : trace.steps) {
    out << to_string(inst.kind);
    if (inst.kind == rule_kind::shortcut) {
      out << " " << inst.actors[0] << " {";
      for (std::size_t k = 1; k < inst.actors.size(); ++k)
        out << (k > 1 ? "," : "") << inst.actors[k];
      out << "}";
    } else {
      for (const auto& a : inst.actors) out << " " << a;
    }
    out << " =>";
    for (const auto& [name, lab] : inst.produced)
      out << " " << name << " (" << to_string(lab.weight) << ", " << to_string(lab.reward) << ")";
    out << "\n";
  }
  return out.str();
}

}  // namespace pwn
