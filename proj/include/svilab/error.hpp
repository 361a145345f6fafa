#pragma once

#include <stdexcept>
#include <string>

namespace svi {

// Base of every failure raised by the library. Callers that only need a
// message can catch this; tests and the runner dispatch on the subclasses.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Active gradients (or a Jacobian) lost row rank: LICQ fails.
class RankDeficient : public Error {
 public:
  using Error::Error;
};

class SingularOnTangent : public Error {
 public:
  using Error::Error;
};

class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& what, double residual)
      : Error(what + " (final residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class OutOfChart : public Error {
 public:
  using Error::Error;
};

class MissingMeanMap : public Error {
 public:
  using Error::Error;
};

class Diverged : public Error {
 public:
  Diverged(const std::string& what, long step) : Error(what), step_(step) {}
  long step() const noexcept { return step_; }

 private:
  long step_;
};

class Infeasible : public Error {
 public:
  using Error::Error;
};

class DegenerateVariance : public Error {
 public:
  using Error::Error;
};

class InsufficientSurvivors : public Error {
 public:
  InsufficientSurvivors(const std::string& what, int survivors)
      : Error(what), survivors_(survivors) {}
  int survivors() const noexcept { return survivors_; }

 private:
  int survivors_;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& key, const std::string& what)
      : Error("config key '" + key + "': " + what), key_(key) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace svi
