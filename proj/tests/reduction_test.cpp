#include "pwn/reduction.hpp"

#include <gtest/gtest.h>

#include "pwn/mdp.hpp"
#include "support/fixtures.hpp"

using namespace pwn;
using namespace pwn::testing;

namespace {

// i --ta--> o and i --tb--> o with the given labels (plus an optional third
// alternative), ready for merging.
workflow_net merge_fixture(label a, label b, std::optional<label> c = std::nullopt) {
  workflow_net n;
  place_id i = n.add_place("i");
  place_id o = n.add_place("o");
  n.set_initial(i);
  n.set_final(o);
  n.add_transition("ta", {i}, {o}, a.weight, a.reward);
  n.add_transition("tb", {i}, {o}, b.weight, b.reward);
  if (c) n.add_transition("tc", {i}, {o}, c->weight, c->reward);
  return n;
}

// i --t_in--> m; cluster at m: t_loop: m->m (w_loop), t_exit: m->o.
workflow_net loop_fixture(label loop, label exit) {
  workflow_net n;
  place_id i = n.add_place("i");
  place_id m = n.add_place("m");
  place_id o = n.add_place("o");
  n.set_initial(i);
  n.set_final(o);
  n.add_transition("t_in", {i}, {m}, 1, 0);
  n.add_transition("t_loop", {m}, {m}, loop.weight, loop.reward);
  n.add_transition("t_exit", {m}, {o}, exit.weight, exit.reward);
  return n;
}

}  // namespace

TEST(apply_merge, weighted_average_of_rewards) {
  workflow_net n = merge_fixture({rational(2, 5), 2}, {rational(3, 5), 7});
  workflow_net m = apply_merge(n, tid(n, "ta"), tid(n, "tb"));
  ASSERT_EQ(m.transition_count(), 1u);
  transition_id t = m.transitions()[0];
  EXPECT_EQ(m.name(t), "ta#1");
  EXPECT_EQ(m.weight(t), 1);
  EXPECT_EQ(m.reward(t), 5);
}

TEST(apply_merge, symmetric_alternatives_keep_their_reward) {
  rational c(13, 4);
  workflow_net n = merge_fixture({rational(1, 2), c}, {rational(1, 2), c});
  workflow_net m = apply_merge(n, tid(n, "ta"), tid(n, "tb"));
  transition_id t = m.transitions()[0];
  EXPECT_EQ(m.weight(t), 1);
  EXPECT_EQ(m.reward(t), c);
}

TEST(apply_merge, partial_cluster_merge_divides_by_pair_weight) {
  // cluster has a third transition, so the pair weight is 1/2, not 1
  workflow_net n = merge_fixture({rational(1, 4), 4}, {rational(1, 4), 8}, label{rational(1, 2), 1});
  workflow_net m = apply_merge(n, tid(n, "ta"), tid(n, "tb"));
  auto t = m.find_transition("ta#1");
  ASSERT_TRUE(t);
  EXPECT_EQ(m.weight(*t), rational(1, 2));
  EXPECT_EQ(m.reward(*t), 6);
  // the undivided formula would claim 3 instead
  workflow_net raw = merge_fixture({rational(1, 4), 4}, {rational(1, 4), 8}, label{rational(1, 2), 1});
  workflow_net bad = raw;
  detail::merge_in_place(bad, tid(raw, "ta"), tid(raw, "tb"),
                         detail::merge_reward_formula::weighted_sum);
  EXPECT_EQ(bad.reward(*bad.find_transition("ta#1")), 3);
}

TEST(apply_merge, guard_rejects_distinct_footprints) {
  workflow_net n = running_example();
  EXPECT_THROW(apply_merge(n, tid(n, "t1"), tid(n, "t2")), guard_violated);
  EXPECT_THROW(apply_merge(n, tid(n, "t1"), tid(n, "t1")), guard_violated);
}

TEST(apply_iteration, folds_geometric_series_into_exit) {
  workflow_net n = loop_fixture({rational(1, 2), 3}, {rational(1, 2), 1});
  workflow_net m = apply_iteration(n, tid(n, "t_loop"));
  transition_id exit = tid(m, "t_exit");
  EXPECT_EQ(m.weight(exit), 1);
  EXPECT_EQ(m.reward(exit), 4);
  EXPECT_FALSE(m.find_transition("t_loop"));
}

TEST(apply_iteration, zero_reward_loop_adds_nothing) {
  rational r(5, 3);
  workflow_net n = loop_fixture({rational(9, 10), 0}, {rational(1, 10), r});
  workflow_net m = apply_iteration(n, tid(n, "t_loop"));
  EXPECT_EQ(m.reward(tid(m, "t_exit")), r);
  EXPECT_EQ(m.weight(tid(m, "t_exit")), 1);
}

TEST(apply_iteration, two_thirds_loop_example) {
  workflow_net n = loop_fixture({rational(2, 3), 3}, {rational(1, 3), 1});
  workflow_net m = apply_iteration(n, tid(n, "t_loop"));
  EXPECT_EQ(m.reward(tid(m, "t_exit")), 7);

  // independent series oracle: (1-w) * sum_i w^i * i * r approaches the
  // carried reward w/(1-w) * r = 6
  rational w(2, 3), r(3), partial(0), pow(1);
  for (int i = 0; i <= 400; ++i) {
    partial += (1 - w) * pow * i * r;
    pow *= w;
  }
  rational delta = rational(6) - partial;
  EXPECT_GT(delta, 0);
  EXPECT_LT(delta, rational(1, 1000000000000000000));

  // and the explicit chain agrees with the reduced label
  auto direct = expected_reward_under(n, min_id_scheduler());
  ASSERT_TRUE(direct.value.is_finite());
  EXPECT_EQ(direct.value.value(), 7);
}

TEST(apply_iteration, divergent_loop_and_guards) {
  workflow_net n = loop_fixture({1, 2}, {rational(1, 2), 1});
  // make the loop a singleton cluster: its own place, no exit alternative
  workflow_net solo;
  place_id i = solo.add_place("i");
  place_id m = solo.add_place("m");
  place_id o = solo.add_place("o");
  solo.set_initial(i);
  solo.set_final(o);
  solo.add_transition("t_in", {i}, {m}, 1, 0);
  transition_id loop = solo.add_transition("t_loop", {m}, {m}, 1, 2);
  EXPECT_THROW(apply_iteration(solo, loop), divergent_loop);
  EXPECT_THROW(apply_iteration(n, tid(n, "t_exit")), guard_violated);  // not a self-loop
}

TEST(apply_shortcut, first_worked_step) {
  workflow_net n = running_example();
  workflow_net m = apply_shortcut(n, tid(n, "t1"), cluster_of(n, tid(n, "t6")));
  auto fresh = m.find_transition("t6#1");
  ASSERT_TRUE(fresh);
  EXPECT_EQ(names_of(m, m.pre(*fresh)), (std::vector<std::string>{"i"}));
  EXPECT_EQ(names_of(m, m.post(*fresh)), (std::vector<std::string>{"o"}));
  EXPECT_EQ(m.weight(*fresh), rational(2, 5));
  EXPECT_EQ(m.reward(*fresh), 2);
  // t1, p1 and t6 are gone
  EXPECT_FALSE(m.find_transition("t1"));
  EXPECT_FALSE(m.find_transition("t6"));
  EXPECT_FALSE(m.find_place("p1"));
}

TEST(apply_shortcut, worked_reduction_reaches_golden_labels) {
  workflow_net net = running_example();
  net = apply_shortcut(net, tid(net, "t1"), cluster_of(net, tid(net, "t6")));

  // fold the sync step into a self-loop: t5 over [t3], then over [t4]
  net = apply_shortcut(net, tid(net, "t5"), cluster_of(net, tid(net, "t3")));
  ASSERT_TRUE(net.find_transition("t3#1"));
  net = apply_shortcut(net, tid(net, "t3#1"), cluster_of(net, tid(net, "t4")));
  transition_id self_loop = tid(net, "t4#1");
  EXPECT_EQ(net.pre(self_loop), net.post(self_loop));
  EXPECT_EQ(net.weight(self_loop), rational(1, 2));
  EXPECT_EQ(net.reward(self_loop), 3);

  // iteration rewrites the exit to (1, 4)
  net = apply_iteration(net, self_loop);
  EXPECT_EQ(net.weight(tid(net, "t7")), 1);
  EXPECT_EQ(net.reward(tid(net, "t7")), 4);

  // shortcut t2 through [t3] and [t4] produces (3/5, 3)
  net = apply_shortcut(net, tid(net, "t2"), cluster_of(net, tid(net, "t3")));
  net = apply_shortcut(net, tid(net, "t3#2"), cluster_of(net, tid(net, "t4")));
  transition_id t10 = tid(net, "t4#2");
  EXPECT_EQ(net.weight(t10), rational(3, 5));
  EXPECT_EQ(net.reward(t10), 3);
  EXPECT_EQ(names_of(net, net.post(t10)), (std::vector<std::string>{"p4", "p5"}));

  // finish: shortcut through [t7], then merge to the atomic (1, 5)
  net = apply_shortcut(net, t10, cluster_of(net, tid(net, "t7")));
  transition_id left = tid(net, "t6#1");
  transition_id right = tid(net, "t7#1");
  net = apply_merge(net, left, right);
  ASSERT_EQ(net.transition_count(), 1u);
  transition_id last = net.transitions()[0];
  EXPECT_EQ(net.weight(last), 1);
  EXPECT_EQ(net.reward(last), 5);
  EXPECT_EQ(net.place_count(), 2u);
}

TEST(apply_shortcut, zero_labels_compose_to_zero) {
  workflow_net n;
  place_id i = n.add_place("i");
  place_id p = n.add_place("p");
  place_id o = n.add_place("o");
  n.set_initial(i);
  n.set_final(o);
  n.add_transition("t", {i}, {p}, 1, 0);
  n.add_transition("u", {p}, {o}, 1, 0);
  workflow_net m = apply_shortcut(n, tid(n, "t"), cluster_of(n, tid(n, "u")));
  auto fresh = m.find_transition("u#1");
  ASSERT_TRUE(fresh);
  EXPECT_EQ(m.weight(*fresh), 1);
  EXPECT_EQ(m.reward(*fresh), 0);
}

TEST(apply_shortcut, guard_rejects_own_cluster_and_conditional_enabling) {
  workflow_net n = running_example();
  EXPECT_THROW(apply_shortcut(n, tid(n, "t5"), cluster_of(n, tid(n, "t7"))), guard_violated);
  // t3 alone does not enable [t5,t7]
  EXPECT_THROW(apply_shortcut(n, tid(n, "t3"), cluster_of(n, tid(n, "t5"))), guard_violated);
}

TEST(find_applicable, strategy_order_on_the_running_example) {
  workflow_net n = running_example();
  auto inst = find_applicable(n);
  ASSERT_TRUE(inst);
  EXPECT_EQ(inst->kind, rule_kind::shortcut);
  EXPECT_EQ(inst->actors, (std::vector<std::string>{"t1", "t6"}));
  ASSERT_EQ(inst->produced.size(), 1u);
  EXPECT_EQ(inst->produced[0].first, "t6#1");
  EXPECT_EQ(inst->produced[0].second, (label{rational(2, 5), rational(2)}));
}

TEST(find_applicable, fully_reduced_net_has_nothing) {
  EXPECT_FALSE(find_applicable(single_transition(1, 3)));
}

TEST(find_applicable, iteration_preferred_over_shortcut) {
  workflow_net n = loop_fixture({rational(1, 2), 3}, {rational(1, 2), 1});
  auto inst = find_applicable(n);
  ASSERT_TRUE(inst);
  EXPECT_EQ(inst->kind, rule_kind::iteration);
  EXPECT_EQ(inst->actors, (std::vector<std::string>{"t_loop"}));
}

TEST(reduce, running_example_is_sound_with_reward_five) {
  reduction_outcome out = reduce(running_example());
  ASSERT_EQ(out.verdict, reduction_outcome::kind::sound);
  EXPECT_EQ(out.expected, 5);
  EXPECT_EQ(out.merge_count, 1u);
  EXPECT_EQ(out.iteration_count, 1u);
  EXPECT_EQ(out.shortcut_count, 6u);
}

TEST(reduce, single_transition_is_already_atomic) {
  rational c(11, 7);
  reduction_outcome out = reduce(single_transition(3, c));  // weight normalizes to 1
  ASSERT_EQ(out.verdict, reduction_outcome::kind::sound);
  EXPECT_EQ(out.expected, c);
  EXPECT_TRUE(out.trace.steps.empty());
}

TEST(reduce, mismatched_join_is_unsound) {
  reduction_outcome out = reduce(mismatched_join_example());
  EXPECT_EQ(out.verdict, reduction_outcome::kind::unsound);
  // cross-check against the explicit oracle
  EXPECT_FALSE(check_soundness_explicit(mismatched_join_example()));
}

TEST(reduce, rejects_invalid_structure) {
  // cut t7 off from o and give it a fresh sink instead: the sink breaks
  // strong connectivity, so the net no longer validates
  workflow_net n = running_example();
  transition_id t7 = tid(n, "t7");
  place_id p4 = pid(n, "p4"), p5 = pid(n, "p5");
  rational w = n.weight(t7), r = n.reward(t7);
  n.remove_transition(t7);
  place_id sink = n.add_place("sink");
  n.add_transition("t7b", {p4, p5}, {sink}, w, r);
  EXPECT_FALSE(validate_structure(n).empty());
  EXPECT_THROW(reduce(n), invalid_structure);
}

TEST(reduce, rejects_non_free_choice) {
  EXPECT_THROW(reduce(non_free_choice_example()), not_free_choice);
  EXPECT_THROW(reduce(dead_transition_example()), not_free_choice);
}

TEST(reduce, budget_exhaustion_is_inconclusive) {
  reduction_outcome out = reduce(running_example(), {.budget = 2});
  EXPECT_EQ(out.verdict, reduction_outcome::kind::inconclusive);
  EXPECT_THROW(expected_reward(running_example(), {.budget = 2}), reduction_inconclusive);
}

TEST(expected_reward, running_example_and_scaling) {
  EXPECT_EQ(expected_reward(running_example()), extended_rational(rational(5)));
  workflow_net doubled = running_example();
  for (transition_id t : doubled.transitions()) {
    rational r = doubled.reward(t) * 2;
    doubled.set_reward(t, r);
  }
  EXPECT_EQ(expected_reward(doubled), extended_rational(rational(10)));
  EXPECT_EQ(expected_reward(mismatched_join_example()), extended_rational::infinity());
}

TEST(reduce, cluster_weights_stay_normalized_after_every_step) {
  reduction_outcome out = reduce(running_example());
  workflow_net net = out.trace.initial_net;
  auto check_sums = [&](const workflow_net& n) {
    for (const cluster& c : clusters(n)) {
      rational sum = 0;
      for (transition_id t : c.transitions) sum += n.weight(t);
      EXPECT_EQ(sum, 1);
    }
  };
  check_sums(net);
  for (const rule_instance& inst : out.trace.steps) {
    auto t_of = [&](const std::string& s) { return *net.find_transition(s); };
    switch (inst.kind) {
      case rule_kind::merge:
        detail::merge_in_place(net, t_of(inst.actors[0]), t_of(inst.actors[1]));
        break;
      case rule_kind::iteration:
        detail::iteration_in_place(net, t_of(inst.actors[0]));
        break;
      case rule_kind::shortcut:
        detail::shortcut_in_place(net, t_of(inst.actors[0]),
                                  cluster_of(net, t_of(inst.actors[1])));
        break;
    }
    check_sums(net);
  }
  EXPECT_TRUE(structurally_equal(net, out.trace.final_net));
}

TEST(trace, replay_reproduces_final_net) {
  reduction_outcome out = reduce(running_example());
  workflow_net replayed = replay(out.trace);
  EXPECT_TRUE(structurally_equal(replayed, out.trace.final_net));
}

TEST(trace, render_is_line_oriented) {
  reduction_outcome out = reduce(running_example());
  std::string text = render_trace(out.trace);
  EXPECT_EQ(static_cast<std::uint64_t>(std::count(text.begin(), text.end(), '\n')),
            out.merge_count + out.iteration_count + out.shortcut_count);
  EXPECT_NE(text.find("shortcut t1 {t6} => t6#1 (2/5, 2)"), std::string::npos);
}
