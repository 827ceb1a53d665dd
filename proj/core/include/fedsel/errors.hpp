#pragma once

#include <stdexcept>
#include <string>

namespace fedsel {

/// Base class for all errors raised by the simulator.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration file is malformed, has unknown keys, or violates an invariant.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// data module
class BadMagic : public Error {
 public:
  using Error::Error;
};
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};
class Truncated : public Error {
 public:
  using Error::Error;
};
class LabelOutOfRange : public Error {
 public:
  using Error::Error;
};
class TooFewSamples : public Error {
 public:
  using Error::Error;
};
class InfeasibleAssignment : public Error {
 public:
  using Error::Error;
};

// model module
class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

// selection module
class KTooLarge : public Error {
 public:
  using Error::Error;
};

// federation module
class SpecMismatch : public Error {
 public:
  using Error::Error;
};

// metrics module
class AllZero : public Error {
 public:
  using Error::Error;
};
class SingleClass : public Error {
 public:
  using Error::Error;
};

// experiment module
class EmptyGroup : public Error {
 public:
  using Error::Error;
};

}  // namespace fedsel
