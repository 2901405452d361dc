#ifndef TMSIM_ERRORS_HPP
#define TMSIM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace tmsim {

// Invalid configuration (bad rate, bad queue index, malformed spec value).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Attempt to schedule an event in the simulated past.
struct CausalityError : std::runtime_error {
  explicit CausalityError(const std::string& what) : std::runtime_error(what) {}
};

// Packet for which the switch has no flow-table entry; a setup bug, fail fast.
struct RoutingError : std::runtime_error {
  explicit RoutingError(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace tmsim

#endif
