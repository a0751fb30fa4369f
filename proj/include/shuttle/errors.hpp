#pragma once

#include <stdexcept>
#include <string>

namespace shuttle {

class ShuttleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No local potential minimum inside the search bracket.
class NoWellFound : public ShuttleError {
 public:
  using ShuttleError::ShuttleError;
};

/// Position/curvature constraint matrix is rank deficient.
class SingularConstraints : public ShuttleError {
 public:
  SingularConstraints(const std::string& what, double position)
      : ShuttleError(what), position_(position) {}
  double position() const noexcept { return position_; }

 private:
  double position_;
};

class InfeasibleSpec : public ShuttleError {
 public:
  using ShuttleError::ShuttleError;
};

/// The ion left the electrode span during integration.
class IonLost : public ShuttleError {
 public:
  IonLost(const std::string& what, double time) : ShuttleError(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

class DegenerateGrid : public ShuttleError {
 public:
  using ShuttleError::ShuttleError;
};

/// Red/blue ratio outside the range where sideband thermometry is defined.
class InvalidRatio : public ShuttleError {
 public:
  using ShuttleError::ShuttleError;
};

class ConfigError : public ShuttleError {
 public:
  using ShuttleError::ShuttleError;
};

class IoError : public ShuttleError {
 public:
  using ShuttleError::ShuttleError;
};

}  // namespace shuttle
