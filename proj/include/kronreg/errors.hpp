#pragma once

#include <stdexcept>
#include <string>

namespace kronreg {

struct dimension_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct capacity_error : std::length_error {
  using std::length_error::length_error;
};

struct singular_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct rank_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct domain_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct degenerate_input_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace kronreg
