#pragma once

// Machine-readable analysis output: one JSON object per analyzed net.

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

#include "pwn/rational.hpp"

namespace pwn {

struct oracle_fields {
  std::size_t states = 0;
  bool sound = false;
  bool confusion_free = true;
  std::string expected_min;  // rational string or "inf"
  std::string expected_max;
  std::vector<std::pair<std::string, std::string>> per_scheduler;
  bool exact = true;
};

struct analysis_result {
  std::string net;
  std::string verdict;  // sound | unsound | not_free_choice | inconclusive
  std::optional<rational> expected_reward;  // present iff verdict == sound
  std::uint64_t merge_count = 0;
  std::uint64_t iteration_count = 0;
  std::uint64_t shortcut_count = 0;
  std::optional<oracle_fields> oracle;
  std::optional<bool> agrees;  // reduce vs oracle, when both ran
  double reduce_ms = 0.0;
  double oracle_ms = 0.0;
};

inline nlohmann::json to_json(const analysis_result& r) {
  nlohmann::json j;
  j["net"] = r.net;
  j["verdict"] = r.verdict;
  if (r.expected_reward) j["expected_reward"] = to_string(*r.expected_reward);
  j["rule_counts"] = {{"merge", r.merge_count},
                      {"iteration", r.iteration_count},
                      {"shortcut", r.shortcut_count}};
  if (r.oracle) {
    nlohmann::json o;
    o["states"] = r.oracle->states;
    o["sound"] = r.oracle->sound;
    o["confusion_free"] = r.oracle->confusion_free;
    if (!r.oracle->expected_min.empty()) o["expected_min"] = r.oracle->expected_min;
    if (!r.oracle->expected_max.empty()) o["expected_max"] = r.oracle->expected_max;
    for (const auto& [name, value] : r.oracle->per_scheduler) o["scheduler"][name] = value;
    o["exact"] = r.oracle->exact;
    j["oracle"] = std::move(o);
  }
  if (r.agrees) j["agrees"] = *r.agrees;
  j["timings"] = {{"reduce_ms", r.reduce_ms}, {"oracle_ms", r.oracle_ms}};
  return j;
}

}  // namespace pwn
