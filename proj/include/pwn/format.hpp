#pragma once

// Line-oriented native text format for workflow nets.
//
//   # comment (a token starting with '#' opens a comment)
//   place <id>
//   initial <id>
//   final <id>
//   transition <id> [weight <p/q>] [reward <p/q>]
//   arc <from> <to>
//
// Ids match [A-Za-z_][A-Za-z0-9_]*; a '#' is additionally allowed after the
// first character so that reduction-generated names like "t4#2" re-parse.
// Rationals are "p/q" or "n". Declarations must precede use. Weight defaults
// to 1, reward to 0.

#include <algorithm>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pwn/errors.hpp"
#include "pwn/net.hpp"
#include "pwn/rational.hpp"

namespace pwn {

namespace detail {

struct token {
  std::string text;
  std::size_t column;  // 1-based
};

inline std::vector<token> tokenize_line(std::string_view line) {
  std::vector<token> out;
  std::size_t k = 0;
  while (k < line.size()) {
    if (line[k] == ' ' || line[k] == '\t' || line[k] == '\r') {
      ++k;
      continue;
    }
    if (line[k] == '#') break;  // comment to end of line
    std::size_t start = k;
    while (k < line.size() && line[k] != ' ' && line[k] != '\t' && line[k] != '\r') ++k;
    out.push_back({std::string(line.substr(start, k - start)), start + 1});
  }
  return out;
}

inline bool valid_id(std::string_view s) {
  if (s.empty()) return false;
  auto head = [](char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_';
  };
  auto tail = [&](char c) { return head(c) || (c >= '0' && c <= '9') || c == '#'; };
  if (!head(s[0])) return false;
  return std::all_of(s.begin() + 1, s.end(), tail);
}

}  // namespace detail

/// Parses the native format. Throws syntax_error with line/column for lexical
/// problems and semantic_error for undeclared/duplicate ids or a missing
/// initial/final declaration.
inline workflow_net parse_native(std::string_view text) {
  using detail::token;
  workflow_net net;
  bool saw_anything = false, saw_initial = false, saw_final = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos
                                                                           : eol - pos);
    pos = (eol == std::string_view::npos) ? text.size() + 1 : eol + 1;
    ++line_no;
    std::vector<token> toks = detail::tokenize_line(line);
    if (toks.empty()) continue;
    saw_anything = true;

    auto want = [&](std::size_t n, const char* what) {
      if (toks.size() != n)
        throw syntax_error(std::string("expected `") + what + "`", line_no, toks[0].column);
    };
    auto id_at = [&](std::size_t k) -> const std::string& {
      if (!detail::valid_id(toks[k].text))
        throw syntax_error("malformed identifier `" + toks[k].text + "`", line_no, toks[k].column);
      return toks[k].text;
    };
    auto rational_at = [&](std::size_t k) {
      try {
        return parse_rational(toks[k].text);
      } catch (const std::invalid_argument&) {
        throw syntax_error("malformed rational `" + toks[k].text + "`", line_no, toks[k].column);
      }
    };
    auto place_at = [&](std::size_t k) {
      auto p = net.find_place(id_at(k));
      if (!p) throw semantic_error("undeclared place `" + toks[k].text + "` on line " +
                                   std::to_string(line_no));
      return *p;
    };

    const std::string& kw = toks[0].text;
    if (kw == "place") {
      want(2, "place <id>");
      if (net.find_place(id_at(1)) || net.find_transition(toks[1].text))
        throw semantic_error("duplicate id `" + toks[1].text + "` on line " + std::to_string(line_no));
      net.add_place(toks[1].text);
    } else if (kw == "initial") {
      want(2, "initial <id>");
      if (saw_initial)
        throw semantic_error("second initial declaration on line " + std::to_string(line_no));
      net.set_initial(place_at(1));
      saw_initial = true;
    } else if (kw == "final") {
      want(2, "final <id>");
      if (saw_final)
        throw semantic_error("second final declaration on line " + std::to_string(line_no));
      net.set_final(place_at(1));
      saw_final = true;
    } else if (kw == "transition") {
      if (toks.size() != 2 && toks.size() != 4 && toks.size() != 6)
        throw syntax_error("expected `transition <id> [weight <p/q>] [reward <p/q>]`", line_no,
                           toks[0].column);
      if (net.find_transition(id_at(1)) || net.find_place(toks[1].text))
        throw semantic_error("duplicate id `" + toks[1].text + "` on line " + std::to_string(line_no));
      rational w = 1, r = 0;
      std::size_t k = 2;
      if (k < toks.size() && toks[k].text == "weight") {
        w = rational_at(k + 1);
        k += 2;
      }
      if (k < toks.size() && toks[k].text == "reward") {
        r = rational_at(k + 1);
        k += 2;
      }
      if (k != toks.size())
        throw syntax_error("unexpected token `" + toks[k].text + "`", line_no, toks[k].column);
      if (w <= 0)
        throw semantic_error("weight must be positive on line " + std::to_string(line_no));
      if (r < 0)
        throw semantic_error("reward must be non-negative on line " + std::to_string(line_no));
      net.add_transition(toks[1].text, w, r);
    } else if (kw == "arc") {
      want(3, "arc <from> <to>");
      auto fp = net.find_place(id_at(1));
      auto ft = net.find_transition(toks[1].text);
      auto tp = net.find_place(id_at(2));
      auto tt = net.find_transition(toks[2].text);
      try {
        if (fp && tt)
          net.add_arc(*fp, *tt);
        else if (ft && tp)
          net.add_arc(*ft, *tp);
        else if ((fp && tp) || (ft && tt))
          throw semantic_error("arc must connect a place and a transition, line " +
                               std::to_string(line_no));
        else
          throw semantic_error("arc references undeclared id on line " + std::to_string(line_no));
      } catch (const semantic_error&) {
        throw;
      } catch (const error&) {
        throw semantic_error("duplicate arc on line " + std::to_string(line_no));
      }
    } else {
      throw syntax_error("unknown declaration `" + kw + "`", line_no, toks[0].column);
    }
  }
  if (!saw_anything) throw syntax_error("empty document", 1, 1);
  if (!saw_initial) throw semantic_error("missing initial declaration");
  if (!saw_final) throw semantic_error("missing final declaration");
  return net;
}

/// Canonical rendering: declarations sorted by name, labels always explicit,
/// rationals in lowest terms. parse_native(render_native(n)) is structurally
/// equal to n.
inline std::string render_native(const workflow_net& net) {
  std::ostringstream out;
  std::vector<std::string> names;
  for (place_id p : net.places()) names.push_back(net.name(p));
  std::sort(names.begin(), names.end());
  for (const auto& s : names) out << "place " << s << "\n";
  out << "initial " << net.name(net.initial_place()) << "\n";
  out << "final " << net.name(net.final_place()) << "\n";
  names.clear();
  for (transition_id t : net.transitions()) names.push_back(net.name(t));
  std::sort(names.begin(), names.end());
  for (const auto& s : names) {
    transition_id t = *net.find_transition(s);
    out << "transition " << s << " weight " << to_string(net.weight(t)) << " reward "
        << to_string(net.reward(t)) << "\n";
  }
  std::vector<std::pair<std::string, std::string>> arcs;
  for (transition_id t : net.transitions()) {
    for (place_id p : net.pre(t)) arcs.emplace_back(net.name(p), net.name(t));
    for (place_id p : net.post(t)) arcs.emplace_back(net.name(t), net.name(p));
  }
  std::sort(arcs.begin(), arcs.end());
  for (const auto& [from, to] : arcs) out << "arc " << from << " " << to << "\n";
  return out.str();
}

}  // namespace pwn
