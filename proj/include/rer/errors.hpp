#pragma once

#include <stdexcept>
#include <string>

namespace rer {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller violated a documented precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Exhaustive enumeration was asked for an instance above its size cap.
/// Callers should fall back to the closed-form path.
class EnumerationRefused : public Error {
 public:
  using Error::Error;
};

class InvalidSequence : public Error {
 public:
  using Error::Error;
};

class ConstructionError : public Error {
 public:
  using Error::Error;
};

class NonErgodic : public Error {
 public:
  using Error::Error;
};

/// E_mu[phi phi^T] is singular, so no finite coverage constant exists.
class KappaUndefined : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace rer
