#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace forest {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class IoFailure : public Error {
public:
  using Error::Error;
};

class MalformedHeader : public Error {
public:
  using Error::Error;
};

/// A coordinate was NaN or infinite. Carries the index of the first offender.
class NonFiniteCoordinate : public Error {
public:
  NonFiniteCoordinate(std::size_t index, const std::string& what)
      : Error(what), index(index) {}
  std::size_t index;
};

class UnknownLabelCode : public Error {
public:
  UnknownLabelCode(int code, const std::string& what) : Error(what), code(code) {}
  int code;
};

class TimestampOutOfRange : public Error {
public:
  using Error::Error;
};

class EmptyCloud : public Error {
public:
  using Error::Error;
};

class NoGroundPoints : public Error {
public:
  using Error::Error;
};

class DegenerateCluster : public Error {
public:
  using Error::Error;
};

class DegenerateGeometry : public Error {
public:
  using Error::Error;
};

class BothEmpty : public Error {
public:
  using Error::Error;
};

class EmptyGroundTruth : public Error {
public:
  using Error::Error;
};

class PlacementFailure : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

}  // namespace forest
