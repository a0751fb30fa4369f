#pragma once

#include <numbers>

// Physical constants (CODATA 2018) and unit helpers. Everything inside the
// library is SI; configuration files carry unit-suffixed keys.
namespace shuttle {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline constexpr double kHbar = 1.054571817e-34;          // J s
inline constexpr double kElementaryCharge = 1.602176634e-19; // C
inline constexpr double kAtomicMassUnit = 1.66053906660e-27; // kg
inline constexpr double kCalcium40Mass = 39.962590863 * kAtomicMassUnit;

namespace units {
inline constexpr double um = 1e-6;
inline constexpr double nm = 1e-9;
inline constexpr double us = 1e-6;
inline constexpr double ns = 1e-9;
inline constexpr double MHz = 1e6;
inline constexpr double kHz = 1e3;
}  // namespace units

}  // namespace shuttle
