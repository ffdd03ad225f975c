// Exception hierarchy shared by all mpnehari modules.
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mpnehari {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---- exprlang ---------------------------------------------------------------

class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t position, std::string expected, const std::string& source)
      : Error("syntax error at position " + std::to_string(position) + ": expected " + expected +
              " in \"" + source + "\""),
        position_(position),
        expected_(std::move(expected)) {}

  std::size_t position() const noexcept { return position_; }
  const std::string& expected() const noexcept { return expected_; }

 private:
  std::size_t position_;
  std::string expected_;
};

class UnknownIdentifier : public Error {
 public:
  explicit UnknownIdentifier(std::string name)
      : Error("unknown identifier '" + name + "'"), name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

enum class EvalErrorKind { DivisionByZero, InvalidPow, NonFinite, DimensionMismatch };

class EvalError : public Error {
 public:
  EvalError(EvalErrorKind kind, std::vector<double> point, const std::string& what)
      : Error(what), kind_(kind), point_(std::move(point)) {}
  EvalErrorKind kind() const noexcept { return kind_; }
  const std::vector<double>& point() const noexcept { return point_; }

 private:
  EvalErrorKind kind_;
  std::vector<double> point_;
};

// ---- grid / spaces ----------------------------------------------------------

class EmptyDomain : public Error {
 public:
  EmptyDomain() : Error("domain predicate leaves no interior grid node") {}
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class DimensionUnsupported : public Error {
 public:
  using Error::Error;
};

// ---- nehari / solver --------------------------------------------------------

class ZeroDirection : public Error {
 public:
  ZeroDirection() : Error("fibering direction vanishes on every interior node") {}
};

class NotOnManifold : public Error {
 public:
  NotOnManifold(double residual, double tolerance)
      : Error("field is not on the Nehari manifold: |<J'(u),u>| = " + std::to_string(residual) +
              " > " + std::to_string(tolerance)),
        residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class BranchVanished : public Error {
 public:
  using Error::Error;
};

class DistinctnessFailure : public Error {
 public:
  using Error::Error;
};

// ---- configuration ----------------------------------------------------------

class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace mpnehari
