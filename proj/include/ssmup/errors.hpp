#pragma once

#include <stdexcept>
#include <string>

namespace ssmup {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidParams : Error {
  using Error::Error;
};
struct ParamMismatch : Error {
  using Error::Error;
};
struct LengthMismatch : Error {
  using Error::Error;
};
struct ShapeMismatch : Error {
  using Error::Error;
};
struct NonUnivariate : Error {
  using Error::Error;
};
struct NonFiniteTarget : Error {
  using Error::Error;
};
struct UnnormalizedWeights : Error {
  using Error::Error;
};
struct AllZeroWeights : Error {
  using Error::Error;
};

// Thrown when every particle weight is -inf at one filter step.
struct ParticleCollapse : Error {
  int time;
  explicit ParticleCollapse(int t)
      : Error("particle collapse at time step " + std::to_string(t)), time(t) {}
};

struct IndexOutOfRange : Error {
  using Error::Error;
};
struct VersionMismatch : Error {
  using Error::Error;
};
struct CorruptArchive : Error {
  using Error::Error;
};
struct BothCollapsed : Error {
  using Error::Error;
};
struct NonBinary : Error {
  using Error::Error;
};
struct ZeroVariance : Error {
  using Error::Error;
};
struct TooFewDraws : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};

}  // namespace ssmup
