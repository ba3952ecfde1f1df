#pragma once

// Fuzzy rule-based cost approximation trained online by TD(lambda).
//
// Each tier owns an FrbAgent. The agent maps the tier's state (s1, s2, s3)
// through logistic Small/Large memberships onto 8 rules; the cost estimate
// is the membership-weighted average of the rule outputs p^i, i.e. a linear
// model over the normalized weights phi^i. Rules are enumerated with the
// first state dimension as the most significant bit, Large before Small:
// LLL, LLS, LSL, LSS, SLL, SLS, SSL, SSS.

#include <array>
#include <cstddef>
#include <optional>
#include <span>

#include "tiersim/storage_model.hpp"

namespace tiersim {

inline constexpr std::size_t kStateDims = 3;
inline constexpr std::size_t kRuleCount = 8;

using StateVector = std::array<double, kStateDims>;
using RuleVector = std::array<double, kRuleCount>;

inline StateVector state_vector(const TierState& s) { return {s.s1, s.s2, s.s3}; }

// True when rule `rule` uses the Large category in dimension `dim`.
constexpr bool rule_is_large(std::size_t rule, std::size_t dim) {
  return ((rule >> (kStateDims - 1 - dim)) & 1U) == 0;
}

struct MembershipParams {
  std::array<double, kStateDims> a{};
  std::array<double, kStateDims> b{};
  std::array<double, kStateDims> scale{};  // raw component / scale = normalized input

  // a = e^4, b = 8: the logistic crosses 0.5 at normalized input 0.5.
  static MembershipParams defaults(double scale_s2 = 1.0, double scale_s3 = 1.0);
  void validate() const;
};

double membership_large(double x, double a, double b);
inline double membership_small(double x, double a, double b) { return 1.0 - membership_large(x, a, b); }

StateVector normalize(const StateVector& raw_state, const MembershipParams& m);

// Unnormalized rule weights w^i for a normalized state.
RuleVector rule_weights(const StateVector& x, const MembershipParams& m);
// phi^i = w^i / sum(w).
RuleVector basis(const StateVector& x, const MembershipParams& m);

struct TdHyper {
  double lambda = 0.6;  // trace decay
  double beta = 0.1;    // continuous-time discount rate
  double alpha = 0.1;   // learning rate

  void validate() const;
};

class FrbAgent {
 public:
  FrbAgent() = default;
  FrbAgent(MembershipParams membership, TdHyper hyper, double initial_p = 0.0);

  // Cost estimate at a raw (unnormalized) state.
  double value(const StateVector& raw_state) const;

  // One TD(lambda) step for the transition s_n -> s_next after spending
  // `tau` time units in s_n and incurring `reward` (a cost). Traces are
  // decayed and accumulated first; the TD error uses the parameters from
  // before this update. Throws std::invalid_argument on non-finite input,
  // leaving the agent untouched.
  void td_update(double reward, const StateVector& s_n, const StateVector& s_next, double tau);

  const RuleVector& params() const { return p_; }
  const RuleVector& traces() const { return z_; }
  void set_params(const RuleVector& p) { p_ = p; }
  const MembershipParams& membership() const { return membership_; }
  const TdHyper& hyper() const { return hyper_; }
  const std::optional<StateVector>& last_state() const { return last_state_; }
  double last_cost() const { return last_cost_; }
  std::size_t updates() const { return updates_; }

 private:
  MembershipParams membership_ = MembershipParams::defaults();
  TdHyper hyper_;
  RuleVector p_{};
  RuleVector z_{};
  std::optional<StateVector> last_state_;
  double last_cost_ = 0.0;
  std::size_t updates_ = 0;
};

inline double cost_value(const FrbAgent& agent, const StateVector& raw_state) {
  return agent.value(raw_state);
}

struct CostSignalInputs {
  std::span<const double> responses;      // r_i
  std::span<const double> arrival_times;  // t_{n,i}
  double state_entry_time = 0.0;          // t_n
  double duration = 1.0;                  // tau_n
};

// Discounted mean response (1/X) sum r_i exp(-beta (t_{n,i} - t_n)); 0 when
// no request was observed.
double compute_cost_signal(const CostSignalInputs& in, double beta);

// Migration criterion for moving `file` from tier i to the next faster tier
// j = i + 1:
//   C_j(s~_j) s~1_j + C_i(s~_i) s~1_i < C_j(s_j) s1_j + C_i(s_i) s1_i
// where s~ is the tier state with the file hypothetically moved (s1 and s2
// recomputed, s3 held at its current value). Also requires that tier j can
// make room by evicting strictly colder residents. `pending_i/j` are the
// tiers' current queuing times. Throws std::invalid_argument if the file is
// in the fastest tier or the tiers are not adjacent.
bool decide_upgrade(FileId file, TierIndex tier_i, TierIndex tier_j, const FrbAgent& agent_i,
                    const FrbAgent& agent_j, const Hierarchy& hierarchy, double pending_i,
                    double pending_j);

}  // namespace tiersim
