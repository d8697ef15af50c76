#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace stevmfe {

using Scalar = double;

/// Spatial dimensions supported by the structured mesh (time is handled
/// separately and is always present).
inline constexpr int kMaxDim = 2;

/// Unit conversion applied inside Darcy-row coefficients for field-unit
/// models (psi, ft, day, cP, mD): velocity [ft/day] = kDarcy * K[mD]/mu[cP] * grad p [psi/ft].
inline constexpr Scalar kDarcyUnit = 1.127e-3;

/// Stock-tank barrel in cubic feet.
inline constexpr Scalar kStbToCubicFt = 5.614583;

/// Relative tolerance used for exact-geometry checks (partition sums,
/// grid-line alignment).
inline constexpr Scalar kGeomRelTol = 1e-12;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MeshError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AssemblyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverError : std::runtime_error {
  struct Detail {
    int slab = -1;
    int iterations = 0;
  };
  SolverError(const std::string& what, Detail d) : std::runtime_error(what), detail(d) {}
  Detail detail;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Coord = std::array<Scalar, kMaxDim>;
using IndexVec = std::array<int, kMaxDim>;

}  // namespace stevmfe
