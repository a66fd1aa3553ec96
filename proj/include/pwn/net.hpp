#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pwn/errors.hpp"
#include "pwn/rational.hpp"

namespace pwn {

struct place_id {
  std::uint32_t index = std::numeric_limits<std::uint32_t>::max();
  friend auto operator<=>(place_id, place_id) = default;
};

struct transition_id {
  std::uint32_t index = std::numeric_limits<std::uint32_t>::max();
  friend auto operator<=>(transition_id, transition_id) = default;
};

/// Weight/reward pair attached to a transition.
struct label {
  rational weight;
  rational reward;
  friend bool operator==(const label& a, const label& b) {
    return a.weight == b.weight && a.reward == b.reward;
  }
};

/// Set of marked places under the 1-safe convention. Backed by a bitset over
/// the net's place slots, so equality/ordering/hashing are cheap during state
/// exploration.
class marking {
 public:
  marking() = default;
  explicit marking(std::size_t place_slots) : bits_((place_slots + 63) / 64, 0) {}

  bool contains(place_id p) const {
    return (bits_[p.index >> 6] >> (p.index & 63)) & 1;
  }
  void add(place_id p) { bits_[p.index >> 6] |= std::uint64_t{1} << (p.index & 63); }
  void remove(place_id p) { bits_[p.index >> 6] &= ~(std::uint64_t{1} << (p.index & 63)); }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto b : bits_) n += static_cast<std::size_t>(__builtin_popcountll(b));
    return n;
  }

  /// Marked places in ascending id order.
  std::vector<place_id> places() const {
    std::vector<place_id> out;
    for (std::size_t w = 0; w < bits_.size(); ++w) {
      std::uint64_t b = bits_[w];
      while (b) {
        unsigned bit = static_cast<unsigned>(__builtin_ctzll(b));
        out.push_back(place_id{static_cast<std::uint32_t>(w * 64 + bit)});
        b &= b - 1;
      }
    }
    return out;
  }

  friend bool operator==(const marking& a, const marking& b) { return a.bits_ == b.bits_; }
  friend bool operator<(const marking& a, const marking& b) { return a.bits_ < b.bits_; }

  std::size_t hash() const {
    std::size_t h = 0xcbf29ce484222325ull;
    for (auto b : bits_) {
      h ^= b;
      h *= 0x100000001b3ull;
    }
    return h;
  }

 private:
  std::vector<std::uint64_t> bits_;
};

struct marking_hash {
  std::size_t operator()(const marking& m) const { return m.hash(); }
};

/// A probabilistic workflow net: places and transitions connected by arcs,
/// with distinguished initial/final places and exact rational weight/reward
/// labels on transitions.
///
/// Values are cheap to copy and safe to share between threads once built.
/// Element ids are slot indices; removal tombstones the slot so surviving ids
/// stay stable. Names are retained for I/O and for fresh-name generation.
class workflow_net {
 public:
  // --- construction -------------------------------------------------------

  place_id add_place(const std::string& name) {
    if (place_index_.count(name)) throw error("duplicate place: " + name);
    place_id p{static_cast<std::uint32_t>(place_names_.size())};
    place_names_.push_back(name);
    place_alive_.push_back(true);
    producers_.emplace_back();
    consumers_.emplace_back();
    place_index_.emplace(name, p.index);
    return p;
  }

  transition_id add_transition(const std::string& name, rational weight = 1, rational reward = 0) {
    if (transition_index_.count(name)) throw error("duplicate transition: " + name);
    transition_id t{static_cast<std::uint32_t>(transition_names_.size())};
    transition_names_.push_back(name);
    transition_alive_.push_back(true);
    pre_.emplace_back();
    post_.emplace_back();
    weight.canonicalize();  // gmp constructors do not reduce p/q themselves
    reward.canonicalize();
    weight_.push_back(std::move(weight));
    reward_.push_back(std::move(reward));
    transition_index_.emplace(name, t.index);
    return t;
  }

  transition_id add_transition(const std::string& name, const std::vector<place_id>& pre,
                               const std::vector<place_id>& post, rational weight, rational reward) {
    transition_id t = add_transition(name, std::move(weight), std::move(reward));
    for (place_id p : pre) add_arc(p, t);
    for (place_id p : post) add_arc(t, p);
    return t;
  }

  void add_arc(place_id p, transition_id t) {
    check_alive(p);
    check_alive(t);
    insert_sorted(pre_[t.index], p, "duplicate arc");
    insert_sorted(consumers_[p.index], t, "duplicate arc");
  }

  void add_arc(transition_id t, place_id p) {
    check_alive(p);
    check_alive(t);
    insert_sorted(post_[t.index], p, "duplicate arc");
    insert_sorted(producers_[p.index], t, "duplicate arc");
  }

  void set_initial(place_id p) {
    check_alive(p);
    initial_ = p;
  }
  void set_final(place_id p) {
    check_alive(p);
    final_ = p;
  }

  void set_weight(transition_id t, rational w) {
    check_alive(t);
    w.canonicalize();
    weight_[t.index] = std::move(w);
  }
  void set_reward(transition_id t, rational r) {
    check_alive(t);
    r.canonicalize();
    reward_[t.index] = std::move(r);
  }

  void remove_transition(transition_id t) {
    check_alive(t);
    for (place_id p : pre_[t.index]) erase_value(consumers_[p.index], t);
    for (place_id p : post_[t.index]) erase_value(producers_[p.index], t);
    pre_[t.index].clear();
    post_[t.index].clear();
    transition_alive_[t.index] = false;
  }

  /// The place must have no remaining arcs.
  void remove_place(place_id p) {
    check_alive(p);
    if (!producers_[p.index].empty() || !consumers_[p.index].empty())
      throw error("removing place with arcs: " + place_names_[p.index]);
    place_alive_[p.index] = false;
  }

  // --- queries -------------------------------------------------------------

  std::size_t place_slots() const { return place_names_.size(); }
  std::size_t transition_slots() const { return transition_names_.size(); }

  bool alive(place_id p) const { return p.index < place_alive_.size() && place_alive_[p.index]; }
  bool alive(transition_id t) const {
    return t.index < transition_alive_.size() && transition_alive_[t.index];
  }

  std::vector<place_id> places() const {
    std::vector<place_id> out;
    for (std::uint32_t k = 0; k < place_alive_.size(); ++k)
      if (place_alive_[k]) out.push_back(place_id{k});
    return out;
  }
  std::vector<transition_id> transitions() const {
    std::vector<transition_id> out;
    for (std::uint32_t k = 0; k < transition_alive_.size(); ++k)
      if (transition_alive_[k]) out.push_back(transition_id{k});
    return out;
  }
  std::size_t place_count() const {
    return static_cast<std::size_t>(std::count(place_alive_.begin(), place_alive_.end(), true));
  }
  std::size_t transition_count() const {
    return static_cast<std::size_t>(
        std::count(transition_alive_.begin(), transition_alive_.end(), true));
  }

  const std::string& name(place_id p) const { return place_names_[p.index]; }
  const std::string& name(transition_id t) const { return transition_names_[t.index]; }

  std::optional<place_id> find_place(std::string_view name) const {
    auto it = place_index_.find(std::string(name));
    if (it == place_index_.end() || !place_alive_[it->second]) return std::nullopt;
    return place_id{it->second};
  }
  std::optional<transition_id> find_transition(std::string_view name) const {
    auto it = transition_index_.find(std::string(name));
    if (it == transition_index_.end() || !transition_alive_[it->second]) return std::nullopt;
    return transition_id{it->second};
  }

  place_id initial_place() const { return initial_; }
  place_id final_place() const { return final_; }

  const std::vector<place_id>& pre(transition_id t) const { return pre_[t.index]; }
  const std::vector<place_id>& post(transition_id t) const { return post_[t.index]; }
  const std::vector<transition_id>& producers(place_id p) const { return producers_[p.index]; }
  const std::vector<transition_id>& consumers(place_id p) const { return consumers_[p.index]; }

  const rational& weight(transition_id t) const { return weight_[t.index]; }
  const rational& reward(transition_id t) const { return reward_[t.index]; }
  label label_of(transition_id t) const { return label{weight_[t.index], reward_[t.index]}; }

  marking empty_marking() const { return marking(place_slots()); }
  marking initial_marking() const {
    marking m(place_slots());
    m.add(initial_);
    return m;
  }
  marking final_marking() const {
    marking m(place_slots());
    m.add(final_);
    return m;
  }

  /// Smallest `base#k` (k >= 1) never used in this net. Tombstoned names stay
  /// reserved, so names produced over one reduction run never collide.
  std::string fresh_transition_name(const std::string& base) const {
    std::string stem = base.substr(0, base.find('#'));
    for (std::uint32_t k = 1;; ++k) {
      std::string candidate = stem + "#" + std::to_string(k);
      if (!transition_index_.count(candidate)) return candidate;
    }
  }

 private:
  template <class T>
  static void insert_sorted(std::vector<T>& v, T x, const char* dup_msg) {
    auto it = std::lower_bound(v.begin(), v.end(), x);
    if (it != v.end() && *it == x) throw error(dup_msg);
    v.insert(it, x);
  }
  template <class T>
  static void erase_value(std::vector<T>& v, T x) {
    auto it = std::lower_bound(v.begin(), v.end(), x);
    if (it != v.end() && *it == x) v.erase(it);
  }
  void check_alive(place_id p) const {
    if (!alive(p)) throw error("dead or unknown place id");
  }
  void check_alive(transition_id t) const {
    if (!alive(t)) throw error("dead or unknown transition id");
  }

  std::vector<std::string> place_names_;
  std::vector<std::string> transition_names_;
  std::vector<bool> place_alive_;
  std::vector<bool> transition_alive_;
  std::vector<std::vector<place_id>> pre_, post_;            // per transition, sorted
  std::vector<std::vector<transition_id>> producers_, consumers_;  // per place, sorted
  std::vector<rational> weight_, reward_;
  std::unordered_map<std::string, std::uint32_t> place_index_;
  std::unordered_map<std::string, std::uint32_t> transition_index_;
  place_id initial_;
  place_id final_;
};

// --- structural validation --------------------------------------------------

/// One broken well-formedness rule, naming the offending element.
struct violation {
  std::string rule;
  std::string element;
};

namespace detail {

/// Strong connectivity of (P u T, F u {(o,i)}) via forward+backward reach.
inline bool strongly_connected_with_return_arc(const workflow_net& net) {
  if (!net.alive(net.initial_place()) || !net.alive(net.final_place())) return false;
  const std::size_t np = net.place_slots(), nt = net.transition_slots();
  // node numbering: places then transitions
  auto reach = [&](bool forward) {
    std::vector<bool> seen(np + nt, false);
    std::vector<std::size_t> stack{net.initial_place().index};
    seen[net.initial_place().index] = true;
    while (!stack.empty()) {
      std::size_t v = stack.back();
      stack.pop_back();
      auto visit = [&](std::size_t w) {
        if (!seen[w]) {
          seen[w] = true;
          stack.push_back(w);
        }
      };
      if (v < np) {
        place_id p{static_cast<std::uint32_t>(v)};
        for (transition_id t : forward ? net.consumers(p) : net.producers(p)) visit(np + t.index);
        if (forward && p == net.final_place()) visit(net.initial_place().index);
      } else {
        transition_id t{static_cast<std::uint32_t>(v - np)};
        for (place_id p : forward ? net.post(t) : net.pre(t)) visit(p.index);
      }
      if (!forward && v == net.initial_place().index) visit(net.final_place().index);
    }
    for (place_id p : net.places())
      if (!seen[p.index]) return false;
    for (transition_id t : net.transitions())
      if (!seen[np + t.index]) return false;
    return true;
  };
  return reach(true) && reach(false);
}

}  // namespace detail

/// Checks every WorkflowNet well-formedness rule; an empty result means the
/// net is structurally valid. Violations are data, not failures.
inline std::vector<violation> validate_structure(const workflow_net& net) {
  std::vector<violation> out;
  if (!net.alive(net.initial_place())) {
    out.push_back({"initial place missing", "i"});
    return out;
  }
  if (!net.alive(net.final_place())) {
    out.push_back({"final place missing", "o"});
    return out;
  }
  if (!net.producers(net.initial_place()).empty())
    out.push_back({"initial place has incoming arc", net.name(net.initial_place())});
  if (!net.consumers(net.final_place()).empty())
    out.push_back({"final place has outgoing arc", net.name(net.final_place())});
  for (transition_id t : net.transitions()) {
    if (net.pre(t).empty()) out.push_back({"transition has no input place", net.name(t)});
    if (net.post(t).empty()) out.push_back({"transition has no output place", net.name(t)});
    if (net.weight(t) <= 0) out.push_back({"weight not positive", net.name(t)});
    if (net.reward(t) < 0) out.push_back({"reward negative", net.name(t)});
  }
  if (!detail::strongly_connected_with_return_arc(net))
    out.push_back({"not strongly connected after adding (o,i)", net.name(net.initial_place())});
  return out;
}

// --- token game ---------------------------------------------------------------

inline bool is_enabled(const workflow_net& net, const marking& m, transition_id t) {
  for (place_id p : net.pre(t))
    if (!m.contains(p)) return false;
  return true;
}

/// Transitions enabled at m, ascending.
inline std::vector<transition_id> enabled(const workflow_net& net, const marking& m) {
  std::vector<transition_id> out;
  for (transition_id t : net.transitions())
    if (is_enabled(net, m, t)) out.push_back(t);
  return out;
}

/// Fires t at m under set semantics. Throws not_enabled, or unsafe_firing when
/// the firing would place a second token on some output place.
inline marking fire(const workflow_net& net, const marking& m, transition_id t) {
  if (!is_enabled(net, m, t))
    throw not_enabled("transition not enabled: " + net.name(t));
  marking next = m;
  for (place_id p : net.pre(t)) next.remove(p);
  for (place_id p : net.post(t)) {
    if (next.contains(p))
      throw unsafe_firing("firing " + net.name(t) + " puts a second token on " + net.name(p));
    next.add(p);
  }
  return next;
}

// --- clusters and free choice ----------------------------------------------

/// Maximal set of transitions connected through shared input places, together
/// with the union of their input places.
struct cluster {
  std::vector<transition_id> transitions;  // ascending
  std::vector<place_id> places;            // ascending
};

/// Partition of T into clusters, ordered by smallest member id.
inline std::vector<cluster> clusters(const workflow_net& net) {
  const std::size_t nt = net.transition_slots();
  std::vector<std::uint32_t> parent(nt);
  for (std::uint32_t k = 0; k < nt; ++k) parent[k] = k;
  std::function<std::uint32_t(std::uint32_t)> find = [&](std::uint32_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (place_id p : net.places()) {
    const auto& cons = net.consumers(p);
    for (std::size_t k = 1; k < cons.size(); ++k) {
      std::uint32_t a = find(cons[0].index), b = find(cons[k].index);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  }
  std::map<std::uint32_t, cluster> by_root;
  for (transition_id t : net.transitions()) by_root[find(t.index)].transitions.push_back(t);
  std::vector<cluster> out;
  for (auto& [root, c] : by_root) {
    std::vector<place_id> ps;
    for (transition_id t : c.transitions)
      ps.insert(ps.end(), net.pre(t).begin(), net.pre(t).end());
    std::sort(ps.begin(), ps.end());
    ps.erase(std::unique(ps.begin(), ps.end()), ps.end());
    c.places = std::move(ps);
    out.push_back(std::move(c));
  }
  return out;
}

/// The cluster [t].
inline cluster cluster_of(const workflow_net& net, transition_id t) {
  // local closure over shared input places; avoids partitioning the whole net
  std::vector<transition_id> members{t};
  std::vector<bool> seen_t(net.transition_slots(), false);
  std::vector<bool> seen_p(net.place_slots(), false);
  seen_t[t.index] = true;
  std::vector<transition_id> stack{t};
  while (!stack.empty()) {
    transition_id u = stack.back();
    stack.pop_back();
    for (place_id p : net.pre(u)) {
      if (seen_p[p.index]) continue;
      seen_p[p.index] = true;
      for (transition_id v : net.consumers(p)) {
        if (!seen_t[v.index]) {
          seen_t[v.index] = true;
          members.push_back(v);
          stack.push_back(v);
        }
      }
    }
  }
  std::sort(members.begin(), members.end());
  cluster c;
  c.transitions = std::move(members);
  std::vector<place_id> ps;
  for (transition_id u : c.transitions) ps.insert(ps.end(), net.pre(u).begin(), net.pre(u).end());
  std::sort(ps.begin(), ps.end());
  ps.erase(std::unique(ps.begin(), ps.end()), ps.end());
  c.places = std::move(ps);
  return c;
}

/// True iff every two places have disjoint or identical postsets. Equivalent
/// formulation used here: transitions sharing an input place have identical
/// presets.
inline bool is_free_choice(const workflow_net& net) {
  for (place_id p : net.places()) {
    const auto& cons = net.consumers(p);
    for (std::size_t k = 1; k < cons.size(); ++k)
      if (net.pre(cons[k]) != net.pre(cons[0])) return false;
  }
  return true;
}

/// Enabled transitions in conflict with t at m (sharing an input place with t).
inline std::vector<transition_id> conflict_set(const workflow_net& net, const marking& m,
                                               transition_id t) {
  if (!is_enabled(net, m, t)) throw not_enabled("transition not enabled: " + net.name(t));
  std::vector<transition_id> out;
  for (transition_id u : enabled(net, m)) {
    const auto& a = net.pre(t);
    const auto& b = net.pre(u);
    bool overlap = false;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
      if (a[i] == b[j]) {
        overlap = true;
        break;
      }
      (a[i] < b[j]) ? ++i : ++j;
    }
    if (overlap) out.push_back(u);
  }
  return out;
}

/// Returns a copy with each cluster's weights scaled to sum to exactly 1.
/// Rewards are untouched. Requires a free-choice net.
inline workflow_net normalize_weights(const workflow_net& net) {
  if (!is_free_choice(net)) throw not_free_choice("normalize_weights requires a free-choice net");
  workflow_net out = net;
  for (const cluster& c : clusters(net)) {
    rational sum = 0;
    for (transition_id t : c.transitions) sum += net.weight(t);
    if (sum == 0) continue;  // all-zero weights are a structural violation; leave as-is
    for (transition_id t : c.transitions) {
      rational w = net.weight(t) / sum;
      out.set_weight(t, std::move(w));
    }
  }
  return out;
}

// --- structural equality -----------------------------------------------------

/// Name-based graph equality: same places, transitions, arcs, initial/final
/// places and identical labels. Slot numbering is irrelevant.
inline bool structurally_equal(const workflow_net& a, const workflow_net& b) {
  auto names_p = [](const workflow_net& n) {
    std::vector<std::string> v;
    for (place_id p : n.places()) v.push_back(n.name(p));
    std::sort(v.begin(), v.end());
    return v;
  };
  if (names_p(a) != names_p(b)) return false;
  if (a.name(a.initial_place()) != b.name(b.initial_place())) return false;
  if (a.name(a.final_place()) != b.name(b.final_place())) return false;
  for (transition_id ta : a.transitions()) {
    auto tb = b.find_transition(a.name(ta));
    if (!tb) return false;
    if (a.weight(ta) != b.weight(*tb) || a.reward(ta) != b.reward(*tb)) return false;
    auto arcs = [](const workflow_net& n, const std::vector<place_id>& side) {
      std::vector<std::string> v;
      for (place_id p : side) v.push_back(n.name(p));
      std::sort(v.begin(), v.end());
      return v;
    };
    if (arcs(a, a.pre(ta)) != arcs(b, b.pre(*tb))) return false;
    if (arcs(a, a.post(ta)) != arcs(b, b.post(*tb))) return false;
  }
  return a.transition_count() == b.transition_count();
}

}  // namespace pwn
