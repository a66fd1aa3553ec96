#pragma once

// Minimal PNML import: one net, at most one page, plain place/transition/arc
// structure. Weights default to 1 and are then distributed uniformly inside
// each cluster; rewards default to 1. Both can be overridden per transition
// with a toolspecific annotation:
//
//   <transition id="t1">
//     <toolspecific tool="pwn" version="1">
//       <weight>2/5</weight>
//       <reward>3/2</reward>
//     </toolspecific>
//   </transition>
//
// The initial/final places are taken from <initialMarking> when present,
// otherwise auto-detected as the unique source/sink place.

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pwn/errors.hpp"
#include "pwn/net.hpp"
#include "pwn/rational.hpp"

namespace pwn {

namespace detail {

inline std::string trimmed(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace detail

inline workflow_net import_pnml(std::string_view xml_text) {
  namespace pt = boost::property_tree;
  pt::ptree doc;
  try {
    std::istringstream in{std::string(xml_text)};
    pt::read_xml(in, doc);
  } catch (const pt::xml_parser_error& e) {
    throw xml_error(std::string("malformed XML: ") + e.what());
  }
  auto pnml = doc.get_child_optional("pnml");
  if (!pnml) throw xml_error("missing <pnml> root element");

  const pt::ptree* net_node = nullptr;
  for (const auto& [key, child] : *pnml) {
    if (key != "net") continue;
    if (net_node) throw unsupported_feature("multiple <net> elements");
    net_node = &child;
  }
  if (!net_node) throw xml_error("no <net> element");

  const pt::ptree* elements = net_node;
  for (const auto& [key, child] : *net_node) {
    if (key != "page") continue;
    if (elements != net_node) throw unsupported_feature("multiple <page> elements");
    elements = &child;
  }

  struct place_decl {
    std::string id;
    bool marked = false;
  };
  struct transition_decl {
    std::string id;
    std::optional<rational> weight, reward;
  };
  struct arc_decl {
    std::string source, target;
  };
  std::vector<place_decl> places;
  std::vector<transition_decl> transitions;
  std::vector<arc_decl> arcs;

  auto id_of = [](const pt::ptree& node, const char* what) {
    auto id = node.get_optional<std::string>("<xmlattr>.id");
    if (!id || id->empty()) throw xml_error(std::string(what) + " element without id");
    return *id;
  };
  auto rational_of = [](const std::string& text, const std::string& where) {
    try {
      return parse_rational(detail::trimmed(text));
    } catch (const std::invalid_argument&) {
      throw semantic_error("bad rational `" + text + "` in " + where);
    }
  };

  for (const auto& [key, child] : *elements) {
    if (key == "place") {
      place_decl p{id_of(child, "place")};
      if (auto text = child.get_optional<std::string>("initialMarking.text")) {
        std::string t = detail::trimmed(*text);
        if (t == "1")
          p.marked = true;
        else if (t != "0" && !t.empty())
          throw unsupported_feature("initial marking with more than one token on " + p.id);
      }
      places.push_back(std::move(p));
    } else if (key == "transition") {
      transition_decl t;
      t.id = id_of(child, "transition");
      for (const auto& [tkey, tchild] : child) {
        if (tkey != "toolspecific") continue;
        if (auto w = tchild.get_optional<std::string>("weight"))
          t.weight = rational_of(*w, "weight of " + t.id);
        if (auto r = tchild.get_optional<std::string>("reward"))
          t.reward = rational_of(*r, "reward of " + t.id);
      }
      if (t.weight && *t.weight <= 0)
        throw semantic_error("weight of " + t.id + " must be positive");
      if (t.reward && *t.reward < 0)
        throw semantic_error("reward of " + t.id + " must be non-negative");
      transitions.push_back(std::move(t));
    } else if (key == "arc") {
      id_of(child, "arc");
      auto src = child.get_optional<std::string>("<xmlattr>.source");
      auto dst = child.get_optional<std::string>("<xmlattr>.target");
      if (!src || !dst) throw xml_error("arc without source/target");
      if (auto text = child.get_optional<std::string>("inscription.text")) {
        std::string t = detail::trimmed(*text);
        if (!t.empty() && t != "1")
          throw unsupported_feature("arc multiplicity " + t + " (only 1-safe nets supported)");
      }
      arcs.push_back({*src, *dst});
    }
  }

  workflow_net net;
  for (const auto& p : places) net.add_place(p.id);
  for (const auto& t : transitions)
    net.add_transition(t.id, t.weight.value_or(rational(1)), t.reward.value_or(rational(1)));
  for (const auto& a : arcs) {
    auto sp = net.find_place(a.source);
    auto st = net.find_transition(a.source);
    auto tp = net.find_place(a.target);
    auto tt = net.find_transition(a.target);
    try {
      if (sp && tt)
        net.add_arc(*sp, *tt);
      else if (st && tp)
        net.add_arc(*st, *tp);
      else
        throw semantic_error("arc " + a.source + " -> " + a.target +
                             " does not connect a place and a transition");
    } catch (const semantic_error&) {
      throw;
    } catch (const error&) {
      throw semantic_error("duplicate arc " + a.source + " -> " + a.target);
    }
  }

  // initial place: declared marking, else the unique source place
  std::optional<place_id> initial;
  for (const auto& p : places) {
    if (!p.marked) continue;
    if (initial) throw semantic_error("more than one initially marked place");
    initial = net.find_place(p.id);
  }
  if (!initial) {
    for (place_id p : net.places()) {
      if (!net.producers(p).empty()) continue;
      if (initial) throw semantic_error("no unique source place (candidates include " +
                                        net.name(*initial) + " and " + net.name(p) + ")");
      initial = p;
    }
    if (!initial) throw semantic_error("no source place");
  }
  std::optional<place_id> final;
  for (place_id p : net.places()) {
    if (!net.consumers(p).empty()) continue;
    if (final) throw semantic_error("no unique sink place (candidates include " +
                                    net.name(*final) + " and " + net.name(p) + ")");
    final = p;
  }
  if (!final) throw semantic_error("no sink place");
  net.set_initial(*initial);
  net.set_final(*final);

  // distribute probability uniformly inside clusters that carry no explicit
  // weight annotation; annotated clusters are honored verbatim
  std::set<std::string> annotated;
  for (const auto& t : transitions)
    if (t.weight) annotated.insert(t.id);
  for (const cluster& c : clusters(net)) {
    bool has_annotation = false;
    for (transition_id t : c.transitions) has_annotation |= annotated.count(net.name(t)) > 0;
    if (has_annotation) continue;
    rational sum = 0;
    for (transition_id t : c.transitions) sum += net.weight(t);
    for (transition_id t : c.transitions) {
      rational w = net.weight(t) / sum;
      net.set_weight(t, std::move(w));
    }
  }

  auto violations = validate_structure(net);
  if (!violations.empty())
    throw semantic_error("imported net is not a valid workflow net: " + violations.front().rule +
                         " (" + violations.front().element + ")");
  return net;
}

}  // namespace pwn
