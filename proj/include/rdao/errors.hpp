#pragma once

#include <stdexcept>
#include <string>

namespace rdao {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A coordinate or index outside its admissible range.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Array dimensions that do not agree with each other.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// The uncertainty polyhedron contains no probability vector.
class InfeasibleSetError : public Error {
 public:
  using Error::Error;
};

/// Invalid or mutually incompatible configuration values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed on-disk data (bad manifest, inconsistent dimensions).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// On-disk data whose checksum or length does not match its manifest.
class CorruptionError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

/// An operation called on an object in the wrong state (e.g. unsolved model).
class StateError : public Error {
 public:
  using Error::Error;
};

/// A model with no feasible point where one was required.
class ModelInfeasibleError : public Error {
 public:
  using Error::Error;
};

}  // namespace rdao
