#pragma once

// Hand-built nets used across the test suites.

#include <string>
#include <vector>

#include "pwn/net.hpp"
#include "pwn/rational.hpp"

namespace pwn::testing {

// Running example: two alternatives from i, the right one a two-branch
// parallel section with a repeatable sync step. Weights 2/5, 3/5 on the
// initial choice and 1/2, 1/2 on the repeat/exit choice; every reward 1.
inline workflow_net running_example() {
  workflow_net n;
  place_id i = n.add_place("i");
  place_id p1 = n.add_place("p1");
  place_id p2 = n.add_place("p2");
  place_id p3 = n.add_place("p3");
  place_id p4 = n.add_place("p4");
  place_id p5 = n.add_place("p5");
  place_id o = n.add_place("o");
  n.set_initial(i);
  n.set_final(o);
  n.add_transition("t1", {i}, {p1}, rational(2, 5), 1);
  n.add_transition("t2", {i}, {p2, p3}, rational(3, 5), 1);
  n.add_transition("t3", {p2}, {p4}, 1, 1);
  n.add_transition("t4", {p3}, {p5}, 1, 1);
  n.add_transition("t5", {p4, p5}, {p2, p3}, rational(1, 2), 1);
  n.add_transition("t6", {p1}, {o}, 1, 1);
  n.add_transition("t7", {p4, p5}, {o}, rational(1, 2), 1);
  return n;
}

// A confused net: after t1 fires, t3 conflicts with both t2 and t4 while
// t2 and t4 are independent.
inline workflow_net confused_example() {
  workflow_net n;
  place_id i = n.add_place("i");
  place_id p1 = n.add_place("p1");
  place_id p2 = n.add_place("p2");
  place_id p3 = n.add_place("p3");
  place_id p4 = n.add_place("p4");
  place_id o = n.add_place("o");
  n.set_initial(i);
  n.set_final(o);
  n.add_transition("t1", {i}, {p1, p2}, 1, 1);
  n.add_transition("t2", {p1}, {p3}, 1, 1);
  n.add_transition("t3", {p1, p2}, {p3, p4}, 1, 1);
  n.add_transition("t4", {p2}, {p4}, 1, 1);
  n.add_transition("t5", {p3, p4}, {o}, 1, 1);
  return n;
}

// Confusion-free but not free-choice: p3's and p4's postsets overlap without
// being equal.
inline workflow_net non_free_choice_example() {
  workflow_net n;
  place_id i = n.add_place("i");
  place_id p1 = n.add_place("p1");
  place_id p2 = n.add_place("p2");
  place_id p3 = n.add_place("p3");
  place_id p4 = n.add_place("p4");
  place_id o = n.add_place("o");
  n.set_initial(i);
  n.set_final(o);
  n.add_transition("t1", {i}, {p1, p2}, 1, 1);
  n.add_transition("t2", {i}, {p1, p3}, 1, 1);
  n.add_transition("t4", {p1}, {p4}, 1, 1);
  n.add_transition("t5", {p2, p4}, {o}, 1, 1);
  n.add_transition("t6", {p3, p4}, {o}, 1, 1);
  return n;
}

// Unsound but confusion-free: t3 can never be enabled, yet the only maximal
// sequence t1 t2 terminates, so the expected reward is finite (1 + 1 = 2).
inline workflow_net dead_transition_example() {
  workflow_net n;
  place_id i = n.add_place("i");
  place_id p1 = n.add_place("p1");
  place_id o = n.add_place("o");
  n.set_initial(i);
  n.set_final(o);
  n.add_transition("t1", {i}, {p1}, 1, 1);
  n.add_transition("t2", {p1}, {o}, 1, 1);
  n.add_transition("t3", {i, p1}, {o}, 1, 2);
  return n;
}

// Structurally valid, free-choice, 1-safe, but unsound: two parallel branches
// each make a free choice, and the joins only accept matching choices, so
// mismatched picks deadlock at {a1, b2} or {a2, b1}.
inline workflow_net mismatched_join_example() {
  workflow_net n;
  place_id i = n.add_place("i");
  place_id a = n.add_place("a");
  place_id b = n.add_place("b");
  place_id a1 = n.add_place("a1");
  place_id a2 = n.add_place("a2");
  place_id b1 = n.add_place("b1");
  place_id b2 = n.add_place("b2");
  place_id o = n.add_place("o");
  n.set_initial(i);
  n.set_final(o);
  n.add_transition("fork", {i}, {a, b}, 1, 1);
  n.add_transition("ta1", {a}, {a1}, rational(1, 2), 1);
  n.add_transition("ta2", {a}, {a2}, rational(1, 2), 1);
  n.add_transition("tb1", {b}, {b1}, rational(1, 2), 1);
  n.add_transition("tb2", {b}, {b2}, rational(1, 2), 1);
  n.add_transition("j1", {a1, b1}, {o}, 1, 1);
  n.add_transition("j2", {a2, b2}, {o}, 1, 1);
  return n;
}

// i --t--> o with the given label.
inline workflow_net single_transition(rational weight = 1, rational reward = 0) {
  workflow_net n;
  place_id i = n.add_place("i");
  place_id o = n.add_place("o");
  n.set_initial(i);
  n.set_final(o);
  n.add_transition("t", {i}, {o}, std::move(weight), std::move(reward));
  return n;
}

inline transition_id tid(const workflow_net& n, const std::string& name) {
  auto t = n.find_transition(name);
  if (!t) throw error("fixture: no transition " + name);
  return *t;
}

inline place_id pid(const workflow_net& n, const std::string& name) {
  auto p = n.find_place(name);
  if (!p) throw error("fixture: no place " + name);
  return *p;
}

inline marking mk(const workflow_net& n, const std::vector<std::string>& names) {
  marking m = n.empty_marking();
  for (const auto& s : names) m.add(pid(n, s));
  return m;
}

inline std::vector<std::string> names_of(const workflow_net& n,
                                         const std::vector<transition_id>& ts) {
  std::vector<std::string> out;
  for (auto t : ts) out.push_back(n.name(t));
  return out;
}

inline std::vector<std::string> names_of(const workflow_net& n, const std::vector<place_id>& ps) {
  std::vector<std::string> out;
  for (auto p : ps) out.push_back(n.name(p));
  return out;
}

}  // namespace pwn::testing
