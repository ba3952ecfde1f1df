#pragma once

#include <cmath>
#include <initializer_list>
#include <utility>
#include <vector>

#include "tiersim/rl_policy.hpp"
#include "tiersim/storage_model.hpp"

namespace fixtures {

using namespace tiersim;

struct Placed {
  double temperature;
  Units size;
  TierIndex tier;
};

inline Hierarchy make(std::vector<TierSpec> tiers, std::initializer_list<Placed> files) {
  Hierarchy h(std::move(tiers));
  for (const auto& f : files) h.add_file(f.size, f.temperature, f.tier, 0);
  return h;
}

inline FileId id(std::uint32_t v) { return FileId{v}; }

// Reference evaluation of the FRB cost straight from the definitions:
// logistic memberships, product weights, weighted average of p.
inline double reference_cost(const StateVector& raw_state, const MembershipParams& m, const RuleVector& p) {
  double num = 0.0;
  double den = 0.0;
  for (int rule = 0; rule < 8; ++rule) {
    double w = 1.0;
    for (int dim = 0; dim < 3; ++dim) {
      const double x = raw_state[dim] / m.scale[dim];
      const double large = 1.0 / (1.0 + m.a[dim] * std::exp(-m.b[dim] * x));
      const bool is_large = ((rule >> (2 - dim)) & 1) == 0;
      w *= is_large ? large : 1.0 - large;
    }
    num += p[rule] * w;
    den += w;
  }
  return num / den;
}

}  // namespace fixtures
