#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace fairdyn {

/// Base class of every error the library raises on its own behalf.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A scenario document that is malformed or violates a constraint.
class ScenarioError : public Error {
 public:
  ScenarioError(std::string field, const std::string& what)
      : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Numerical failure: no root, no bracket, no convergence.
class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace fairdyn
