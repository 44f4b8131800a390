#pragma once

#include <stdexcept>
#include <string>

namespace wigner {

// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MissingMoment : public Error {
 public:
  explicit MissingMoment(int j)
      : Error("moment v" + std::to_string(2 * j) + " is not defined by the ensemble"), index(j) {}
  int index;
};

class OrderMismatch : public Error {
 public:
  using Error::Error;
};

class DegreeTooLarge : public Error {
 public:
  DegreeTooLarge(int degree, int cap)
      : Error("total degree " + std::to_string(degree) + " exceeds enumeration cap " +
              std::to_string(cap)),
        degree(degree),
        cap(cap) {}
  int degree;
  int cap;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class MomentOrderViolation : public Error {
 public:
  using Error::Error;
};

class DegenerateVariance : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

// Two independent routes to the same quantity disagreed.
class InconsistentRoutes : public Error {
 public:
  using Error::Error;
};

}  // namespace wigner
