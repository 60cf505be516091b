#pragma once

#include <stdexcept>
#include <string>

namespace corrlab {

// Base class for everything thrown by the library.
struct corrlab_error : std::runtime_error {
  explicit corrlab_error(const std::string& what) : std::runtime_error(what) {}
};

// Bad user input: malformed config, invalid construction arguments,
// unparseable files.  CLI maps this to exit code 2.
struct config_error : corrlab_error {
  explicit config_error(const std::string& what) : corrlab_error(what) {}
};

// A numeric routine failed to deliver its contract (non-convergent root
// solve, ill-conditioned interpolation, decider disagreement).  Exit code 3.
struct numeric_error : corrlab_error {
  explicit numeric_error(const std::string& what) : corrlab_error(what) {}
};

// A guarded resource bound (tree size, matrix size, degree cap) would be
// exceeded.  Exit code 4.
struct cap_exceeded : corrlab_error {
  explicit cap_exceeded(const std::string& what) : corrlab_error(what) {}
};

}  // namespace corrlab
