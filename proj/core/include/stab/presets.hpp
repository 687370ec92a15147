#pragma once

#include "stab/poly.hpp"

namespace stab {

// ============================================================================
// Canonical example losses used throughout the experiments and the CLI.
// Preset names are part of the config-file interface; keep them stable.
// ============================================================================

// x^2/2 + x^4/4: convex quartic well with hardening tail.
[[nodiscard]] PolyLoss preset_f_plus();

// x^2/2 - x^4/4: quartic well with softening tail (local min at 0, barriers
// at +-1).
[[nodiscard]] PolyLoss preset_f_minus();

// (a/2) x^2: scaled quadratic.
[[nodiscard]] PolyLoss preset_f_a(double a);

// x1^2/2 + x2^2/10 + beta x1^2 x2 + x1^4/10: two-dimensional quartic whose
// cubic coupling strength beta steers the step-size-limit behavior.
[[nodiscard]] PolyLoss preset_l_beta(double beta);

}  // namespace stab
