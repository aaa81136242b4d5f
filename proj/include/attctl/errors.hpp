#pragma once

#include <stdexcept>
#include <string>

namespace attctl {

/// |q_e4| left the permissible set (barrier breached or initial state invalid).
class UnwindingError : public std::runtime_error {
 public:
  UnwindingError(const std::string& what, double time, double qe4)
      : std::runtime_error(what), time_(time), qe4_(qe4) {}
  double time() const { return time_; }
  double qe4() const { return qe4_; }

 private:
  double time_;
  double qe4_;
};

/// A NaN or Inf appeared in the closed-loop state or its derivative.
class NonFiniteError : public std::runtime_error {
 public:
  NonFiniteError(const std::string& what, double time) : std::runtime_error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

/// Malformed or inconsistent scenario / command-line configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace attctl
