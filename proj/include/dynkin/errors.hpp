#pragma once

#include <stdexcept>
#include <string>

namespace dynkin {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid lattice, driver, game or scenario parameters.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Operation applied outside its domain (e.g. children of a terminal node).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Mismatched argument sizes or violated operation preconditions.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

// Brute-force enumeration refused because the rule count exceeds the cap.
class BudgetError : public Error {
 public:
  BudgetError(const std::string& what, double count) : Error(what), count_(count) {}
  double count() const { return count_; }

 private:
  double count_;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace dynkin
