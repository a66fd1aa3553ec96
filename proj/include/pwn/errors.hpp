#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pwn {

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// token game
struct not_enabled : error {
  using error::error;
};
struct unsafe_firing : error {
  using error::error;
};

// structural guards
struct not_free_choice : error {
  using error::error;
};
struct invalid_structure : error {
  using error::error;
};

// reduction rules
struct guard_violated : error {
  using error::error;
};
struct divergent_loop : error {
  using error::error;
};
struct reduction_inconclusive : error {
  using error::error;
};

// explicit-state oracle
struct state_cap_exceeded : error {
  using error::error;
};
struct unsafe_net : error {
  using error::error;
};
struct confusion_detected : error {
  using error::error;
};
struct step_bound_exceeded : error {
  using error::error;
};
struct not_independent : error {
  using error::error;
};
struct not_firable : error {
  using error::error;
};

// formats
struct syntax_error : error {
  syntax_error(const std::string& what, std::size_t line, std::size_t column)
      : error(what + " (line " + std::to_string(line) + ", column " + std::to_string(column) + ")"),
        line(line),
        column(column) {}
  std::size_t line;
  std::size_t column;
};
struct semantic_error : error {
  using error::error;
};
struct xml_error : error {
  using error::error;
};
struct unsupported_feature : error {
  using error::error;
};

}  // namespace pwn
