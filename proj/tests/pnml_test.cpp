#include "pwn/pnml.hpp"

#include <gtest/gtest.h>

#include "pwn/mdp.hpp"
#include "pwn/reduction.hpp"
#include "support/fixtures.hpp"

using namespace pwn;
using namespace pwn::testing;

namespace {

// running-example structure, no probabilistic annotations
std::string plain_pnml() {
  std::string places, transitions, arcs;
  for (const char* p : {"i", "p1", "p2", "p3", "p4", "p5", "o"})
    places += "    <place id=\"" + std::string(p) + "\"/>\n";
  for (const char* t : {"t1", "t2", "t3", "t4", "t5", "t6", "t7"})
    transitions += "    <transition id=\"" + std::string(t) + "\"/>\n";
  int k = 0;
  for (auto [s, d] : std::initializer_list<std::pair<const char*, const char*>>{
           {"i", "t1"},  {"t1", "p1"}, {"i", "t2"},  {"t2", "p2"}, {"t2", "p3"}, {"p2", "t3"},
           {"t3", "p4"}, {"p3", "t4"}, {"t4", "p5"}, {"p4", "t5"}, {"p5", "t5"}, {"t5", "p2"},
           {"t5", "p3"}, {"p1", "t6"}, {"t6", "o"},  {"p4", "t7"}, {"p5", "t7"}, {"t7", "o"}})
    arcs += "    <arc id=\"a" + std::to_string(k++) + "\" source=\"" + s + "\" target=\"" + d +
            "\"/>\n";
  return "<?xml version=\"1.0\"?>\n<pnml>\n  <net id=\"n1\">\n   <page id=\"pg1\">\n" + places +
         transitions + arcs + "   </page>\n  </net>\n</pnml>\n";
}

}  // namespace

TEST(import_pnml, plain_structure_gets_uniform_weights_and_reward_one) {
  workflow_net n = import_pnml(plain_pnml());
  EXPECT_EQ(n.place_count(), 7u);
  EXPECT_EQ(n.transition_count(), 7u);
  EXPECT_EQ(n.name(n.initial_place()), "i");
  EXPECT_EQ(n.name(n.final_place()), "o");
  // two-member clusters get 1/2 each, singletons 1; every reward is 1
  EXPECT_EQ(n.weight(tid(n, "t1")), rational(1, 2));
  EXPECT_EQ(n.weight(tid(n, "t2")), rational(1, 2));
  EXPECT_EQ(n.weight(tid(n, "t5")), rational(1, 2));
  EXPECT_EQ(n.weight(tid(n, "t7")), rational(1, 2));
  EXPECT_EQ(n.weight(tid(n, "t3")), 1);
  for (transition_id t : n.transitions()) EXPECT_EQ(n.reward(t), 1);
  EXPECT_TRUE(validate_structure(n).empty());
  // the uniform-weight variant is still sound with a finite expected reward
  auto out = reduce(n);
  EXPECT_EQ(out.verdict, reduction_outcome::kind::sound);
  EXPECT_EQ(out.expected, expected_reward_under(n, min_id_scheduler()).value.value());
}

TEST(import_pnml, weight_annotation_is_honored) {
  std::string doc = plain_pnml();
  std::string anno =
      "<transition id=\"t1\"><toolspecific tool=\"pwn\" version=\"1\">"
      "<weight>2/5</weight><reward>3</reward></toolspecific></transition>";
  doc.replace(doc.find("<transition id=\"t1\"/>"), std::string("<transition id=\"t1\"/>").size(),
              anno);
  workflow_net n = import_pnml(doc);
  EXPECT_EQ(n.weight(tid(n, "t1")), rational(2, 5));
  EXPECT_EQ(n.reward(tid(n, "t1")), 3);
  // annotated cluster left verbatim: t2 keeps its default weight 1
  EXPECT_EQ(n.weight(tid(n, "t2")), 1);
  // unannotated clusters are still normalized
  EXPECT_EQ(n.weight(tid(n, "t5")), rational(1, 2));
}

TEST(import_pnml, initial_marking_declaration_wins) {
  std::string doc = plain_pnml();
  doc.replace(doc.find("<place id=\"i\"/>"), std::string("<place id=\"i\"/>").size(),
              "<place id=\"i\"><initialMarking><text>1</text></initialMarking></place>");
  workflow_net n = import_pnml(doc);
  EXPECT_EQ(n.name(n.initial_place()), "i");
}

TEST(import_pnml, arc_multiplicity_is_unsupported) {
  std::string doc = plain_pnml();
  doc.replace(doc.find("<arc id=\"a0\" source=\"i\" target=\"t1\"/>"),
              std::string("<arc id=\"a0\" source=\"i\" target=\"t1\"/>").size(),
              "<arc id=\"a0\" source=\"i\" target=\"t1\">"
              "<inscription><text>2</text></inscription></arc>");
  EXPECT_THROW(import_pnml(doc), unsupported_feature);
}

TEST(import_pnml, multiple_nets_or_pages_rejected) {
  std::string two_nets = "<pnml><net id=\"a\"/><net id=\"b\"/></pnml>";
  EXPECT_THROW(import_pnml(two_nets), unsupported_feature);
  std::string two_pages = "<pnml><net id=\"a\"><page id=\"p\"/><page id=\"q\"/></net></pnml>";
  EXPECT_THROW(import_pnml(two_pages), unsupported_feature);
}

TEST(import_pnml, structural_problems_are_diagnosed) {
  EXPECT_THROW(import_pnml("not xml at all <"), xml_error);
  EXPECT_THROW(import_pnml("<foo/>"), xml_error);
  // no unique sink: two places with empty postset
  std::string doc =
      "<pnml><net id=\"n\">"
      "<place id=\"i\"/><place id=\"o1\"/><place id=\"o2\"/>"
      "<transition id=\"t\"/>"
      "<arc id=\"a\" source=\"i\" target=\"t\"/>"
      "<arc id=\"b\" source=\"t\" target=\"o1\"/>"
      "</net></pnml>";
  EXPECT_THROW(import_pnml(doc), semantic_error);
  // valid shape but disconnected: o2 unreachable -> structural diagnosis
  std::string dangling =
      "<pnml><net id=\"n\">"
      "<place id=\"i\"/><place id=\"o1\"/>"
      "<transition id=\"t\"/><transition id=\"u\"/>"
      "<arc id=\"a\" source=\"i\" target=\"t\"/>"
      "<arc id=\"b\" source=\"t\" target=\"o1\"/>"
      "<arc id=\"c\" source=\"o1\" target=\"u\"/>"
      "</net></pnml>";
  EXPECT_THROW(import_pnml(dangling), semantic_error);
}
