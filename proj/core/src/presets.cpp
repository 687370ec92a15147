#include "stab/presets.hpp"

namespace stab {

PolyLoss preset_f_plus() {
  return PolyLoss(1, {{{2}, 0.5}, {{4}, 0.25}});
}

PolyLoss preset_f_minus() {
  return PolyLoss(1, {{{2}, 0.5}, {{4}, -0.25}});
}

PolyLoss preset_f_a(double a) {
  return PolyLoss(1, {{{2}, a / 2.0}});
}

PolyLoss preset_l_beta(double beta) {
  return PolyLoss(2, {{{2, 0}, 0.5}, {{0, 2}, 0.1}, {{2, 1}, beta}, {{4, 0}, 0.1}});
}

}  // namespace stab
