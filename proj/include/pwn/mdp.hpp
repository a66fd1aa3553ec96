#pragma once

// Explicit-state semantics of a probabilistic workflow net.
//
// The state space is (markings x last-fired-transition) plus distinguished
// initial and final states I, O. A state (M, t) carries reward r(t); its
// outgoing distributions depend only on M: one distribution per conflict set
// enabled at M, obtained by normalizing the weights inside the set. States at
// the final marking step to O with probability 1, O loops on itself, and a
// deadlocked non-final state loops on itself (which is what makes the
// expected reward of an unsound net infinite).
//
// Distributions are stored once per marking and shared by all states that
// carry that marking.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "pwn/errors.hpp"
#include "pwn/net.hpp"
#include "pwn/rational.hpp"

namespace pwn {

struct build_options {
  std::size_t state_cap = 1'000'000;
};

struct mdp_state {
  enum class kind : std::uint8_t { initial, final, pair };
  kind k = kind::pair;
  std::uint32_t marking_ref = 0;  // valid for initial/pair states
  transition_id last;             // valid for pair states
};

/// One nondeterministic alternative: the conflict set it came from and the
/// resulting distribution over successor states. Probabilities sum to 1.
struct mdp_choice {
  std::vector<transition_id> conflict;
  std::vector<std::pair<std::uint32_t, rational>> support;
};

class mdp_model {
 public:
  std::size_t state_count() const { return states_.size(); }
  std::uint32_t initial_state() const { return 0; }
  std::optional<std::uint32_t> final_state() const { return final_; }

  const mdp_state& state(std::uint32_t q) const { return states_[q].meta; }
  const rational& state_reward(std::uint32_t q) const { return reward_[q]; }

  const std::vector<mdp_choice>& steps(std::uint32_t q) const {
    const state_rec& st = states_[q];
    return st.own.empty() ? markings_[st.meta.marking_ref].choices : st.own;
  }

  const marking& marking_of(std::uint32_t q) const {
    return markings_[states_[q].meta.marking_ref].m;
  }

  std::optional<std::uint32_t> find_pair_state(const marking& m, transition_id t) const {
    auto mi = marking_index_.find(m);
    if (mi == marking_index_.end()) return std::nullopt;
    auto it = state_index_.find(state_key(mi->second, t));
    if (it == state_index_.end()) return std::nullopt;
    return it->second;
  }

  /// Enabled conflict sets at a state's marking (empty for O / final marking /
  /// deadlocks), ascending by smallest member.
  std::vector<std::vector<transition_id>> conflict_sets_at(std::uint32_t q) const {
    std::vector<std::vector<transition_id>> out;
    for (const mdp_choice& c : steps(q))
      if (!c.conflict.empty()) out.push_back(c.conflict);
    return out;
  }

 private:
  struct state_rec {
    mdp_state meta;
    std::vector<mdp_choice> own;  // synthesized single choice (O, final, deadlock)
  };
  struct marking_rec {
    marking m;
    bool final = false;
    bool deadlock = false;
    std::vector<mdp_choice> choices;
  };

  static std::uint64_t state_key(std::uint32_t marking_ref, transition_id t) {
    return (static_cast<std::uint64_t>(marking_ref) << 32) | (t.index + 1ull);
  }

  std::vector<state_rec> states_;
  std::vector<rational> reward_;
  std::vector<marking_rec> markings_;
  std::unordered_map<marking, std::uint32_t, marking_hash> marking_index_;
  std::unordered_map<std::uint64_t, std::uint32_t> state_index_;
  std::optional<std::uint32_t> final_;

  friend mdp_model build_mdp(const workflow_net&, build_options);
};

namespace detail {

/// Partitions the enabled transitions into conflict sets (components of the
/// shared-input-place graph) and verifies each component is a clique, i.e.
/// the conflict relation is an equivalence on this marking.
inline std::vector<std::vector<transition_id>> conflict_partition(const workflow_net& net,
                                                                  const marking&,
                                                                  const std::vector<transition_id>& en) {
  const std::size_t n = en.size();
  std::vector<std::uint32_t> comp(n);
  for (std::uint32_t k = 0; k < n; ++k) comp[k] = k;
  std::function<std::uint32_t(std::uint32_t)> find = [&](std::uint32_t x) {
    while (comp[x] != x) x = comp[x] = comp[comp[x]];
    return x;
  };
  auto share_input = [&](std::size_t a, std::size_t b) {
    const auto& pa = net.pre(en[a]);
    const auto& pb = net.pre(en[b]);
    std::size_t i = 0, j = 0;
    while (i < pa.size() && j < pb.size()) {
      if (pa[i] == pb[j]) return true;
      (pa[i] < pb[j]) ? ++i : ++j;
    }
    return false;
  };
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      if (share_input(a, b)) {
        std::uint32_t ra = find(static_cast<std::uint32_t>(a)), rb = find(static_cast<std::uint32_t>(b));
        if (ra != rb) comp[std::max(ra, rb)] = std::min(ra, rb);
      }
  std::vector<std::vector<transition_id>> sets;
  std::unordered_map<std::uint32_t, std::size_t> root_to_set;
  for (std::size_t k = 0; k < n; ++k) {
    std::uint32_t r = find(static_cast<std::uint32_t>(k));
    auto it = root_to_set.find(r);
    if (it == root_to_set.end()) {
      root_to_set.emplace(r, sets.size());
      sets.push_back({en[k]});
    } else {
      sets[it->second].push_back(en[k]);
    }
  }
  // transitivity check: every component must be a clique
  for (const auto& s : sets) {
    for (std::size_t a = 0; a < s.size(); ++a)
      for (std::size_t b = a + 1; b < s.size(); ++b) {
        auto ia = std::find(en.begin(), en.end(), s[a]) - en.begin();
        auto ib = std::find(en.begin(), en.end(), s[b]) - en.begin();
        if (!share_input(static_cast<std::size_t>(ia), static_cast<std::size_t>(ib)))
          throw confusion_detected("conflict relation not an equivalence: " + net.name(s[a]) +
                                   " and " + net.name(s[b]) + " are independent but share a "
                                   "conflict with a third transition");
      }
  }
  return sets;
}

}  // namespace detail

/// Builds the MDP of a net, exploring every state reachable from I. Throws
/// state_cap_exceeded, unsafe_net on a 1-safeness violation, and
/// confusion_detected when some explored marking has a non-equivalence
/// conflict relation.
inline mdp_model build_mdp(const workflow_net& net, build_options opt = {}) {
  mdp_model model;
  const marking final_marking = net.final_marking();

  auto intern_marking = [&](const marking& m) -> std::uint32_t {
    auto it = model.marking_index_.find(m);
    if (it != model.marking_index_.end()) return it->second;
    std::uint32_t idx = static_cast<std::uint32_t>(model.markings_.size());
    model.markings_.push_back({m, m == final_marking, false, {}});
    model.marking_index_.emplace(m, idx);
    return idx;
  };
  auto add_state = [&](mdp_state meta, rational rew) -> std::uint32_t {
    if (model.states_.size() >= opt.state_cap)
      throw state_cap_exceeded("MDP exceeds state cap of " + std::to_string(opt.state_cap));
    model.states_.push_back({meta, {}});
    model.reward_.push_back(std::move(rew));
    return static_cast<std::uint32_t>(model.states_.size() - 1);
  };

  std::uint32_t m0 = intern_marking(net.initial_marking());
  add_state({mdp_state::kind::initial, m0, {}}, 0);

  std::deque<std::uint32_t> todo{m0};
  std::vector<bool> expanded;
  auto ensure_expanded_flag = [&](std::uint32_t mi) {
    if (expanded.size() <= mi) expanded.resize(mi + 1, false);
  };
  ensure_expanded_flag(m0);

  while (!todo.empty()) {
    std::uint32_t mi = todo.front();
    todo.pop_front();
    if (expanded[mi]) continue;
    expanded[mi] = true;
    if (model.markings_[mi].final) continue;  // handled by the synthesized step to O
    marking m = model.markings_[mi].m;
    std::vector<transition_id> en = enabled(net, m);
    if (en.empty()) {
      model.markings_[mi].deadlock = true;
      continue;
    }
    auto sets = detail::conflict_partition(net, m, en);
    std::vector<mdp_choice> choices;
    for (auto& conflict : sets) {
      rational total = 0;
      for (transition_id t : conflict) total += net.weight(t);
      mdp_choice ch;
      ch.conflict = conflict;
      for (transition_id t : conflict) {
        marking next;
        try {
          next = fire(net, m, t);
        } catch (const unsafe_firing& e) {
          throw unsafe_net(e.what());
        }
        std::uint32_t ni = intern_marking(next);
        ensure_expanded_flag(ni);
        if (!expanded[ni]) todo.push_back(ni);
        auto key = mdp_model::state_key(ni, t);
        auto it = model.state_index_.find(key);
        std::uint32_t q;
        if (it == model.state_index_.end()) {
          q = add_state({mdp_state::kind::pair, ni, t}, net.reward(t));
          model.state_index_.emplace(key, q);
        } else {
          q = it->second;
        }
        rational p = net.weight(t) / total;
        ch.support.emplace_back(q, std::move(p));
      }
      choices.push_back(std::move(ch));
    }
    model.markings_[mi].choices = std::move(choices);
  }

  // synthesize O and the single-choice steps for final/deadlock states
  auto ensure_final = [&]() -> std::uint32_t {
    if (!model.final_) {
      std::uint32_t o = add_state({mdp_state::kind::final, 0, {}}, 0);
      model.final_ = o;
      model.states_[o].own = {mdp_choice{{}, {{o, rational(1)}}}};
    }
    return *model.final_;
  };
  for (std::uint32_t q = 0; q < model.states_.size(); ++q) {
    const mdp_state& meta = model.states_[q].meta;
    if (meta.k == mdp_state::kind::final) continue;
    const auto& mrec = model.markings_[meta.marking_ref];
    if (mrec.final)
      model.states_[q].own = {mdp_choice{{}, {{ensure_final(), rational(1)}}}};
    else if (mrec.deadlock)
      model.states_[q].own = {mdp_choice{{}, {{q, rational(1)}}}};
  }
  return model;
}

// --- schedulers ---------------------------------------------------------------

/// Picks one of the conflict sets enabled at a marking (passed ascending by
/// smallest member). `choose` is the memoryless fast path keyed by the
/// marking; `choose_with_history` additionally sees the firing sequence so
/// far and takes precedence where the caller can supply a history (only
/// simulation can). Chain analysis requires the memoryless path.
struct scheduler {
  std::string name;
  std::function<std::size_t(const workflow_net&, const marking&,
                            const std::vector<std::vector<transition_id>>&)>
      choose;
  std::function<std::size_t(const workflow_net&, const std::vector<transition_id>& history,
                            const marking&, const std::vector<std::vector<transition_id>>&)>
      choose_with_history;
};

inline scheduler min_id_scheduler() {
  scheduler s;
  s.name = "min-id";
  s.choose = [](const workflow_net&, const marking&,
                const std::vector<std::vector<transition_id>>&) -> std::size_t { return 0; };
  return s;
}

inline scheduler max_id_scheduler() {
  scheduler s;
  s.name = "max-id";
  s.choose = [](const workflow_net&, const marking&,
                const std::vector<std::vector<transition_id>>& sets) { return sets.size() - 1; };
  return s;
}

// --- exact chain solving -------------------------------------------------------

namespace detail {

/// Chain induced by one choice per state.
using policy_vec = std::vector<std::uint32_t>;

inline std::vector<bool> forward_reachable(const mdp_model& model, const policy_vec& pol) {
  std::vector<bool> seen(model.state_count(), false);
  std::vector<std::uint32_t> stack{model.initial_state()};
  seen[model.initial_state()] = true;
  while (!stack.empty()) {
    std::uint32_t q = stack.back();
    stack.pop_back();
    for (const auto& [target, p] : model.steps(q)[pol[q]].support)
      if (!seen[target]) {
        seen[target] = true;
        stack.push_back(target);
      }
  }
  return seen;
}

/// Solves E[q] = rew(q) + sum over the chain successors, E[O] = 0, for the
/// given domain (every domain state must reach O inside the domain). The
/// system is decomposed into SCCs, each solved exactly by Gaussian
/// elimination; SCCs larger than exact_scc_limit fall back to a float sweep
/// and clear the exact flag.
struct chain_values {
  std::vector<rational> value;  // by state id; meaningful on the domain
  bool exact = true;
};

inline chain_values solve_chain(const mdp_model& model, const policy_vec& pol,
                                const std::vector<std::uint32_t>& domain,
                                std::size_t exact_scc_limit = 2000) {
  chain_values out;
  out.value.assign(model.state_count(), rational(0));
  if (domain.empty()) return out;

  std::vector<std::uint32_t> local(model.state_count(), UINT32_MAX);
  for (std::uint32_t k = 0; k < domain.size(); ++k) local[domain[k]] = k;
  const std::uint32_t n = static_cast<std::uint32_t>(domain.size());
  const std::uint32_t o = model.final_state() ? *model.final_state() : UINT32_MAX;

  // Tarjan SCC over the induced chain restricted to the domain; components
  // are emitted sinks-first, so successor values are known when a component
  // is solved.
  std::vector<std::uint32_t> idx(n, UINT32_MAX), low(n, 0);
  std::vector<bool> on_stack(n, false), solved(n, false);
  std::vector<std::uint32_t> stack;
  std::uint32_t counter = 0;

  auto successors = [&](std::uint32_t k) -> const std::vector<std::pair<std::uint32_t, rational>>& {
    return model.steps(domain[k])[pol[domain[k]]].support;
  };

  auto solve_scc = [&](const std::vector<std::uint32_t>& comp) {
    // component of local indices
    if (comp.size() == 1 && domain[comp[0]] == o) {
      out.value[o] = 0;
      return;
    }
    std::vector<std::uint32_t> pos(n, UINT32_MAX);
    for (std::uint32_t k = 0; k < comp.size(); ++k) pos[comp[k]] = k;
    const std::size_t m = comp.size();
    if (comp.size() == 1) {
      // E = rew + p_self*E + const  =>  E = (rew + const) / (1 - p_self)
      std::uint32_t q = domain[comp[0]];
      rational c = model.state_reward(q);
      rational p_self = 0;
      for (const auto& [target, p] : successors(comp[0])) {
        if (target == q)
          p_self += p;
        else
          c += p * out.value[target];
      }
      if (p_self == 1) throw error("internal: chain state cannot reach the final state");
      rational denom = 1 - p_self;
      out.value[q] = c / denom;
      return;
    }
    if (m > exact_scc_limit) {
      // float fallback: Gauss-Seidel sweeps on the component
      out.exact = false;
      std::vector<double> v(m, 0.0);
      for (std::size_t iter = 0; iter < 200000; ++iter) {
        double delta = 0;
        for (std::size_t k = 0; k < m; ++k) {
          std::uint32_t q = domain[comp[k]];
          double acc = model.state_reward(q).get_d();
          double p_self = 0;
          for (const auto& [target, p] : successors(comp[k])) {
            if (target == q) {
              p_self += p.get_d();
              continue;
            }
            std::uint32_t lt = local[target];
            if (lt != UINT32_MAX && pos[lt] != UINT32_MAX)
              acc += p.get_d() * v[pos[lt]];  // same component
            else
              acc += p.get_d() * out.value[target].get_d();  // solved earlier
          }
          double nv = acc / (1.0 - p_self);
          delta = std::max(delta, std::abs(nv - v[k]));
          v[k] = nv;
        }
        if (delta < 1e-13) break;
      }
      for (std::size_t k = 0; k < m; ++k) {
        out.value[domain[comp[k]]] = rational(v[k]);
      }
      return;
    }
    // exact dense elimination on (I - P) x = b
    std::vector<std::vector<rational>> a(m, std::vector<rational>(m, rational(0)));
    std::vector<rational> b(m, rational(0));
    for (std::size_t k = 0; k < m; ++k) {
      std::uint32_t q = domain[comp[k]];
      a[k][k] = 1;
      b[k] = model.state_reward(q);
      for (const auto& [target, p] : successors(comp[k])) {
        std::uint32_t lt = local[target];
        if (lt != UINT32_MAX && pos[lt] != UINT32_MAX)
          a[k][pos[lt]] -= p;
        else
          b[k] += p * out.value[target];
      }
    }
    for (std::size_t col = 0; col < m; ++col) {
      std::size_t piv = col;
      while (piv < m && a[piv][col] == 0) ++piv;
      if (piv == m) throw error("internal: singular chain system");
      std::swap(a[piv], a[col]);
      std::swap(b[piv], b[col]);
      for (std::size_t row = 0; row < m; ++row) {
        if (row == col || a[row][col] == 0) continue;
        rational f = a[row][col] / a[col][col];
        for (std::size_t j = col; j < m; ++j) a[row][j] -= f * a[col][j];
        b[row] -= f * b[col];
      }
    }
    for (std::size_t k = 0; k < m; ++k) out.value[domain[comp[k]]] = b[k] / a[k][k];
  };

  // iterative Tarjan
  struct frame {
    std::uint32_t v;
    std::size_t edge = 0;
  };
  for (std::uint32_t root = 0; root < n; ++root) {
    if (idx[root] != UINT32_MAX) continue;
    std::vector<frame> call{{root}};
    while (!call.empty()) {
      frame& f = call.back();
      std::uint32_t v = f.v;
      if (f.edge == 0) {
        idx[v] = low[v] = counter++;
        stack.push_back(v);
        on_stack[v] = true;
      }
      bool descended = false;
      const auto& succ = successors(v);
      while (f.edge < succ.size()) {
        std::uint32_t t = local[succ[f.edge].first];
        ++f.edge;
        if (t == UINT32_MAX) continue;  // outside domain (cannot happen for proper policies)
        if (idx[t] == UINT32_MAX) {
          call.push_back({t});
          descended = true;
          break;
        }
        if (on_stack[t]) low[v] = std::min(low[v], idx[t]);
      }
      if (descended) continue;
      if (low[v] == idx[v]) {
        std::vector<std::uint32_t> comp;
        for (;;) {
          std::uint32_t w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp.push_back(w);
          if (w == v) break;
        }
        solve_scc(comp);
      }
      std::uint32_t done = v;
      call.pop_back();
      if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[done]);
    }
  }
  return out;
}

}  // namespace detail

// --- expected reward under a fixed scheduler -----------------------------------

struct solve_result {
  extended_rational value;
  bool exact = true;
};

/// Induces the Markov chain of a memoryless scheduler on a prebuilt model and
/// solves it exactly. Returns +infinity when the final state is missed with
/// positive probability.
inline solve_result expected_reward_under(const mdp_model& model, const workflow_net& net,
                                          const scheduler& sched) {
  detail::policy_vec pol(model.state_count(), 0);
  for (std::uint32_t q = 0; q < model.state_count(); ++q) {
    const auto& steps = model.steps(q);
    if (steps.size() > 1) {
      auto sets = model.conflict_sets_at(q);
      std::size_t k = sched.choose(net, model.marking_of(q), sets);
      if (k >= steps.size()) throw error("scheduler chose an invalid conflict set");
      pol[q] = static_cast<std::uint32_t>(k);
    }
  }
  std::vector<bool> reach = detail::forward_reachable(model, pol);
  // every reachable state must reach O inside the chain
  std::optional<std::uint32_t> o = model.final_state();
  if (!o) return {extended_rational::infinity(), true};
  std::vector<bool> to_o(model.state_count(), false);
  {
    // backward search over chain edges
    std::vector<std::vector<std::uint32_t>> preds(model.state_count());
    for (std::uint32_t q = 0; q < model.state_count(); ++q)
      if (reach[q])
        for (const auto& [target, p] : model.steps(q)[pol[q]].support) preds[target].push_back(q);
    std::vector<std::uint32_t> stack{*o};
    to_o[*o] = true;
    while (!stack.empty()) {
      std::uint32_t q = stack.back();
      stack.pop_back();
      for (std::uint32_t p : preds[q])
        if (!to_o[p]) {
          to_o[p] = true;
          stack.push_back(p);
        }
    }
  }
  std::vector<std::uint32_t> domain;
  for (std::uint32_t q = 0; q < model.state_count(); ++q) {
    if (!reach[q]) continue;
    if (!to_o[q]) return {extended_rational::infinity(), true};
    domain.push_back(q);
  }
  detail::chain_values vals = detail::solve_chain(model, pol, domain);
  return {extended_rational(vals.value[model.initial_state()]), vals.exact};
}

inline solve_result expected_reward_under(const workflow_net& net, const scheduler& sched,
                                          build_options opt = {}) {
  mdp_model model = build_mdp(net, opt);
  return expected_reward_under(model, net, sched);
}

// --- min/max over all schedulers ------------------------------------------------

namespace detail {

/// States from which some scheduler reaches `target` with probability 1
/// (standard nu-mu fixpoint), plus a memoryless witness choice per state.
inline std::pair<std::vector<bool>, policy_vec> almost_sure_reach_exists(const mdp_model& model,
                                                                         std::uint32_t target) {
  const std::size_t n = model.state_count();
  std::vector<bool> Z(n, true);
  policy_vec witness(n, 0);
  for (;;) {
    std::vector<bool> R(n, false);
    R[target] = true;
    bool grew = true;
    while (grew) {
      grew = false;
      for (std::uint32_t q = 0; q < n; ++q) {
        if (R[q] || !Z[q]) continue;
        const auto& steps = model.steps(q);
        for (std::uint32_t c = 0; c < steps.size(); ++c) {
          bool stays = true, hits = false;
          for (const auto& [t, p] : steps[c].support) {
            if (!Z[t]) stays = false;
            if (R[t]) hits = true;
          }
          if (stays && hits) {
            R[q] = true;
            witness[q] = c;
            grew = true;
            break;
          }
        }
      }
    }
    if (R == Z) return {Z, witness};
    Z = std::move(R);
  }
}

/// Maximal end components; each returned component is a set of states closed
/// under at least one choice per state and strongly connected through those
/// choices.
inline std::vector<std::vector<std::uint32_t>> maximal_end_components(const mdp_model& model) {
  std::vector<std::vector<std::uint32_t>> result;
  std::vector<std::vector<std::uint32_t>> work;
  {
    std::vector<std::uint32_t> all(model.state_count());
    for (std::uint32_t q = 0; q < all.size(); ++q) all[q] = q;
    work.push_back(std::move(all));
  }
  while (!work.empty()) {
    std::vector<std::uint32_t> cand = std::move(work.back());
    work.pop_back();
    std::vector<bool> in(model.state_count(), false);
    for (std::uint32_t q : cand) in[q] = true;
    // drop states with no choice staying inside the candidate
    bool removed = true;
    while (removed) {
      removed = false;
      std::vector<std::uint32_t> keep;
      for (std::uint32_t q : cand) {
        bool ok = false;
        for (const auto& ch : model.steps(q)) {
          bool stays = true;
          for (const auto& [t, p] : ch.support)
            if (!in[t]) {
              stays = false;
              break;
            }
          if (stays) {
            ok = true;
            break;
          }
        }
        if (ok) {
          keep.push_back(q);
        } else {
          in[q] = false;
          removed = true;
        }
      }
      cand = std::move(keep);
    }
    if (cand.empty()) continue;
    // SCCs of the inside-staying choice graph
    std::unordered_map<std::uint32_t, std::uint32_t> local;
    for (std::uint32_t k = 0; k < cand.size(); ++k) local.emplace(cand[k], k);
    std::vector<std::vector<std::uint32_t>> adj(cand.size());
    for (std::uint32_t k = 0; k < cand.size(); ++k) {
      for (const auto& ch : model.steps(cand[k])) {
        bool stays = true;
        for (const auto& [t, p] : ch.support)
          if (!in[t]) {
            stays = false;
            break;
          }
        if (!stays) continue;
        for (const auto& [t, p] : ch.support) adj[k].push_back(local[t]);
      }
    }
    // simple iterative Tarjan on the candidate subgraph
    std::vector<std::uint32_t> idx(cand.size(), UINT32_MAX), low(cand.size(), 0);
    std::vector<bool> on_stack(cand.size(), false);
    std::vector<std::uint32_t> stck;
    std::vector<std::vector<std::uint32_t>> sccs;
    std::uint32_t counter = 0;
    struct frame {
      std::uint32_t v;
      std::size_t e = 0;
    };
    for (std::uint32_t root = 0; root < cand.size(); ++root) {
      if (idx[root] != UINT32_MAX) continue;
      std::vector<frame> call{{root}};
      while (!call.empty()) {
        frame& f = call.back();
        std::uint32_t v = f.v;
        if (f.e == 0) {
          idx[v] = low[v] = counter++;
          stck.push_back(v);
          on_stack[v] = true;
        }
        bool descended = false;
        while (f.e < adj[v].size()) {
          std::uint32_t t = adj[v][f.e];
          ++f.e;
          if (idx[t] == UINT32_MAX) {
            call.push_back({t});
            descended = true;
            break;
          }
          if (on_stack[t]) low[v] = std::min(low[v], idx[t]);
        }
        if (descended) continue;
        if (low[v] == idx[v]) {
          std::vector<std::uint32_t> comp;
          for (;;) {
            std::uint32_t w = stck.back();
            stck.pop_back();
            on_stack[w] = false;
            comp.push_back(w);
            if (w == v) break;
          }
          sccs.push_back(std::move(comp));
        }
        std::uint32_t done = v;
        call.pop_back();
        if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[done]);
      }
    }
    if (sccs.size() == 1 && sccs[0].size() == cand.size()) {
      // candidate is one SCC with all states keeping an inside choice: an EC,
      // except trivial single states without a self-staying cycle
      if (cand.size() > 1) {
        result.push_back(cand);
      } else {
        // singleton: need a choice that stays (i.e. self-loop); already ensured
        result.push_back(cand);
      }
      continue;
    }
    for (auto& scc : sccs) {
      if (scc.size() == cand.size()) continue;
      std::vector<std::uint32_t> sub;
      for (std::uint32_t k : scc) sub.push_back(cand[k]);
      if (sub.size() >= 1) work.push_back(std::move(sub));
    }
  }
  return result;
}

}  // namespace detail

struct minmax_result {
  extended_rational min_value;
  extended_rational max_value;
  bool exact = true;
};

/// Min and max expected total reward to reach O over all schedulers, by exact
/// policy iteration over memoryless policies (optimal for this class). The
/// value is infinite when O is missed with positive probability under the
/// optimizing policy.
inline minmax_result expected_reward_minmax(const mdp_model& model) {
  minmax_result out;
  const std::uint32_t I = model.initial_state();
  std::optional<std::uint32_t> O = model.final_state();
  if (!O) {
    out.min_value = extended_rational::infinity();
    out.max_value = extended_rational::infinity();
    return out;
  }

  // ---- min: restrict to states that can almost-surely reach O
  {
    auto [S1, witness] = detail::almost_sure_reach_exists(model, *O);
    if (!S1[I]) {
      out.min_value = extended_rational::infinity();
    } else {
      std::vector<std::uint32_t> domain;
      for (std::uint32_t q = 0; q < model.state_count(); ++q)
        if (S1[q]) domain.push_back(q);
      detail::policy_vec pol = witness;
      for (;;) {
        detail::chain_values vals = detail::solve_chain(model, pol, domain);
        out.exact = out.exact && vals.exact;
        bool improved = false;
        for (std::uint32_t q : domain) {
          const auto& steps = model.steps(q);
          if (steps.size() <= 1) continue;
          auto successor_sum = [&](std::uint32_t c) -> std::optional<rational> {
            rational acc = 0;
            for (const auto& [t, p] : steps[c].support) {
              if (!S1[t]) return std::nullopt;  // leaving S1 risks missing O
              acc += p * vals.value[t];
            }
            return acc;
          };
          auto current = successor_sum(pol[q]);
          for (std::uint32_t c = 0; c < steps.size(); ++c) {
            if (c == pol[q]) continue;
            auto cand = successor_sum(c);
            if (cand && (!current || *cand < *current)) {
              current = cand;
              pol[q] = c;
              improved = true;
            }
          }
        }
        if (!improved) {
          out.min_value = extended_rational(vals.value[I]);
          break;
        }
      }
    }
  }

  // ---- max: infinite iff an end component avoiding O is reachable
  {
    std::vector<bool> reachable(model.state_count(), false);
    std::vector<std::uint32_t> stack{I};
    reachable[I] = true;
    while (!stack.empty()) {
      std::uint32_t q = stack.back();
      stack.pop_back();
      for (const auto& ch : model.steps(q))
        for (const auto& [t, p] : ch.support)
          if (!reachable[t]) {
            reachable[t] = true;
            stack.push_back(t);
          }
    }
    bool infinite = false;
    for (const auto& ec : detail::maximal_end_components(model)) {
      bool contains_o = std::find(ec.begin(), ec.end(), *O) != ec.end();
      if (contains_o) continue;
      for (std::uint32_t q : ec)
        if (reachable[q]) {
          infinite = true;
          break;
        }
      if (infinite) break;
    }
    if (infinite) {
      out.max_value = extended_rational::infinity();
    } else {
      std::vector<std::uint32_t> domain;
      for (std::uint32_t q = 0; q < model.state_count(); ++q)
        if (reachable[q]) domain.push_back(q);
      detail::policy_vec pol(model.state_count(), 0);
      for (;;) {
        detail::chain_values vals = detail::solve_chain(model, pol, domain);
        out.exact = out.exact && vals.exact;
        bool improved = false;
        for (std::uint32_t q : domain) {
          const auto& steps = model.steps(q);
          if (steps.size() <= 1) continue;
          auto successor_sum = [&](std::uint32_t c) {
            rational acc = 0;
            for (const auto& [t, p] : steps[c].support) acc += p * vals.value[t];
            return acc;
          };
          rational current = successor_sum(pol[q]);
          for (std::uint32_t c = 0; c < steps.size(); ++c) {
            if (c == pol[q]) continue;
            rational cand = successor_sum(c);
            if (cand > current) {
              current = cand;
              pol[q] = c;
              improved = true;
            }
          }
        }
        if (!improved) {
          out.max_value = extended_rational(vals.value[I]);
          break;
        }
      }
    }
  }
  return out;
}

inline minmax_result expected_reward_minmax(const workflow_net& net, build_options opt = {}) {
  mdp_model model = build_mdp(net, opt);
  return expected_reward_minmax(model);
}

// --- explicit soundness check ---------------------------------------------------

/// True iff the final marking is reachable from every reachable marking and
/// every transition is enabled somewhere. Explores the marking graph directly.
inline bool check_soundness_explicit(const workflow_net& net, build_options opt = {}) {
  std::unordered_map<marking, std::uint32_t, marking_hash> index;
  std::vector<marking> ms;
  std::vector<std::vector<std::uint32_t>> succ;
  std::vector<bool> covered(net.transition_slots(), false);
  auto intern = [&](const marking& m) {
    auto it = index.find(m);
    if (it != index.end()) return it->second;
    if (ms.size() >= opt.state_cap)
      throw state_cap_exceeded("marking graph exceeds cap of " + std::to_string(opt.state_cap));
    std::uint32_t idx = static_cast<std::uint32_t>(ms.size());
    index.emplace(m, idx);
    ms.push_back(m);
    succ.emplace_back();
    return idx;
  };
  std::uint32_t start = intern(net.initial_marking());
  for (std::uint32_t k = start; k < ms.size(); ++k) {
    marking m = ms[k];
    for (transition_id t : enabled(net, m)) {
      covered[t.index] = true;
      marking next;
      try {
        next = fire(net, m, t);
      } catch (const unsafe_firing& e) {
        throw unsafe_net(e.what());
      }
      std::uint32_t ni = intern(next);  // may grow succ
      succ[k].push_back(ni);
    }
  }
  auto it = index.find(net.final_marking());
  if (it == index.end()) return false;
  std::vector<std::vector<std::uint32_t>> preds(ms.size());
  for (std::uint32_t k = 0; k < ms.size(); ++k)
    for (std::uint32_t s : succ[k]) preds[s].push_back(k);
  std::vector<bool> to_final(ms.size(), false);
  std::vector<std::uint32_t> stack{it->second};
  to_final[it->second] = true;
  while (!stack.empty()) {
    std::uint32_t k = stack.back();
    stack.pop_back();
    for (std::uint32_t p : preds[k])
      if (!to_final[p]) {
        to_final[p] = true;
        stack.push_back(p);
      }
  }
  for (std::uint32_t k = 0; k < ms.size(); ++k)
    if (!to_final[k]) return false;
  for (transition_id t : net.transitions())
    if (!covered[t.index]) return false;
  return true;
}

// --- Mazurkiewicz swaps ----------------------------------------------------------

enum class swap_verdict { valid, swap_not_firable, marking_mismatch, reward_mismatch };

/// Swaps the independent transitions at positions index and index+1 of a
/// firing sequence and verifies the swapped sequence fires to the same marking
/// with the same total reward. Throws not_firable when the sequence is not a
/// firing sequence or the index is out of bounds, not_independent when the two
/// transitions share an input place.
inline swap_verdict mazurkiewicz_swap_check(const workflow_net& net,
                                            const std::vector<transition_id>& seq,
                                            std::size_t index) {
  if (index + 1 >= seq.size())
    throw not_firable("swap index " + std::to_string(index) + " out of bounds for sequence of length " +
                      std::to_string(seq.size()));
  auto run = [&](const std::vector<transition_id>& s, bool throwing) -> std::optional<marking> {
    marking m = net.initial_marking();
    for (transition_id t : s) {
      if (!is_enabled(net, m, t)) {
        if (throwing) throw not_firable("sequence is not a firing sequence at " + net.name(t));
        return std::nullopt;
      }
      m = fire(net, m, t);
    }
    return m;
  };
  marking original = *run(seq, true);
  const auto& a = net.pre(seq[index]);
  const auto& b = net.pre(seq[index + 1]);
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j])
      throw not_independent("transitions " + net.name(seq[index]) + " and " +
                            net.name(seq[index + 1]) + " share an input place");
    (a[i] < b[j]) ? ++i : ++j;
  }
  std::vector<transition_id> swapped = seq;
  std::swap(swapped[index], swapped[index + 1]);
  auto swapped_final = run(swapped, false);
  if (!swapped_final) return swap_verdict::swap_not_firable;
  if (!(*swapped_final == original)) return swap_verdict::marking_mismatch;
  rational ra = 0, rb = 0;
  for (transition_id t : seq) ra += net.reward(t);
  for (transition_id t : swapped) rb += net.reward(t);
  if (ra != rb) return swap_verdict::reward_mismatch;
  return swap_verdict::valid;
}

// --- path / sequence correspondence ----------------------------------------------

/// Encodes a firing sequence as the corresponding MDP path (state ids,
/// starting at I). Throws not_firable if the sequence is not firable.
inline std::vector<std::uint32_t> path_of_sequence(const mdp_model& model, const workflow_net& net,
                                                   const std::vector<transition_id>& seq) {
  std::vector<std::uint32_t> path{model.initial_state()};
  marking m = net.initial_marking();
  for (transition_id t : seq) {
    if (!is_enabled(net, m, t)) throw not_firable("not firable at " + net.name(t));
    m = fire(net, m, t);
    auto q = model.find_pair_state(m, t);
    if (!q) throw not_firable("no MDP state for firing " + net.name(t));
    path.push_back(*q);
  }
  return path;
}

/// Decodes a path back into its firing sequence (the last components).
inline std::vector<transition_id> sequence_of_path(const mdp_model& model,
                                                   const std::vector<std::uint32_t>& path) {
  std::vector<transition_id> seq;
  for (std::size_t k = 1; k < path.size(); ++k) {
    const mdp_state& st = model.state(path[k]);
    if (st.k != mdp_state::kind::pair) break;  // reached O
    seq.push_back(st.last);
  }
  return seq;
}

// --- model dump -------------------------------------------------------------------

/// Writes `state_id | marking | last | reward` per state and
/// `state_id -> choice_k : target:prob,...` per distribution.
inline void dump_mdp(const mdp_model& model, const workflow_net& net, std::ostream& out) {
  auto marking_str = [&](std::uint32_t q) {
    const mdp_state& st = model.state(q);
    if (st.k == mdp_state::kind::final) return std::string("O");
    std::string s = "{";
    bool first = true;
    for (place_id p : model.marking_of(q).places()) {
      if (!first) s += ",";
      s += net.name(p);
      first = false;
    }
    return s + "}";
  };
  for (std::uint32_t q = 0; q < model.state_count(); ++q) {
    const mdp_state& st = model.state(q);
    std::string last = st.k == mdp_state::kind::pair ? net.name(st.last) : "-";
    std::string mark = st.k == mdp_state::kind::initial ? "I" : marking_str(q);
    out << q << " | " << mark << " | " << last << " | " << to_string(model.state_reward(q)) << "\n";
  }
  for (std::uint32_t q = 0; q < model.state_count(); ++q) {
    const auto& steps = model.steps(q);
    for (std::size_t c = 0; c < steps.size(); ++c) {
      out << q << " -> choice_" << c << " :";
      bool first = true;
      for (const auto& [t, p] : steps[c].support) {
        out << (first ? " " : ", ") << t << ":" << to_string(p);
        first = false;
      }
      out << "\n";
    }
  }
}

}  // namespace pwn
