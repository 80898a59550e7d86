#pragma once

#include <stdexcept>
#include <string>

namespace navlab {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PlacementInfeasible : Error {
  using Error::Error;
};

struct NoValidPair : Error {
  using Error::Error;
};

struct NoPath : Error {
  using Error::Error;
};

struct ShapeMismatch : Error {
  using Error::Error;
};

struct MissingCell : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace navlab
