#include "tiersim/rl_policy.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace tiersim {

namespace {

bool finite(const StateVector& s) {
  for (double v : s)
    if (!std::isfinite(v)) return false;
  return true;
}

double dot(const RuleVector& a, const RuleVector& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < kRuleCount; ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace

MembershipParams MembershipParams::defaults(double scale_s2, double scale_s3) {
  MembershipParams m;
  m.a.fill(std::exp(4.0));
  m.b.fill(8.0);
  m.scale = {1.0, scale_s2, scale_s3};
  return m;
}

void MembershipParams::validate() const {
  for (std::size_t j = 0; j < kStateDims; ++j) {
    if (!(a[j] > 0.0 && std::isfinite(a[j])) || !(b[j] > 0.0 && std::isfinite(b[j])) ||
        !(scale[j] > 0.0 && std::isfinite(scale[j])))
      throw std::invalid_argument("membership parameters of dimension " + std::to_string(j + 1) +
                                  " must be positive and finite");
  }
}

double membership_large(double x, double a, double b) {
  // 1 / (1 + a e^{-bx}) written with a single exponential.
  return 1.0 / (1.0 + std::exp(std::log(a) - b * x));
}

StateVector normalize(const StateVector& raw_state, const MembershipParams& m) {
  StateVector x;
  for (std::size_t j = 0; j < kStateDims; ++j) x[j] = raw_state[j] / m.scale[j];
  return x;
}

RuleVector rule_weights(const StateVector& x, const MembershipParams& m) {
  std::array<double, kStateDims> large;
  for (std::size_t j = 0; j < kStateDims; ++j) large[j] = membership_large(x[j], m.a[j], m.b[j]);
  RuleVector w;
  for (std::size_t i = 0; i < kRuleCount; ++i) {
    double prod = 1.0;
    for (std::size_t j = 0; j < kStateDims; ++j) prod *= rule_is_large(i, j) ? large[j] : 1.0 - large[j];
    w[i] = prod;
  }
  return w;
}

RuleVector basis(const StateVector& x, const MembershipParams& m) {
  RuleVector w = rule_weights(x, m);
  double total = 0.0;
  for (double v : w) total += v;
  for (double& v : w) v /= total;
  return w;
}

void TdHyper::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("td: lambda must lie in [0, 1]");
  if (!(beta > 0.0 && std::isfinite(beta))) throw std::invalid_argument("td: beta must be positive");
  if (!(alpha > 0.0 && std::isfinite(alpha))) throw std::invalid_argument("td: alpha must be positive");
}

FrbAgent::FrbAgent(MembershipParams membership, TdHyper hyper, double initial_p)
    : membership_(membership), hyper_(hyper) {
  membership_.validate();
  hyper_.validate();
  if (!std::isfinite(initial_p)) throw std::invalid_argument("initial rule output must be finite");
  p_.fill(initial_p);
}

double FrbAgent::value(const StateVector& raw_state) const {
  return dot(p_, basis(normalize(raw_state, membership_), membership_));
}

void FrbAgent::td_update(double reward, const StateVector& s_n, const StateVector& s_next, double tau) {
  if (!std::isfinite(reward) || !finite(s_n) || !finite(s_next) || !std::isfinite(tau))
    throw std::invalid_argument("td_update: non-finite input");
  if (!(tau > 0.0)) throw std::invalid_argument("td_update: tau must be positive");

  const RuleVector phi = basis(normalize(s_n, membership_), membership_);
  const RuleVector phi_next = basis(normalize(s_next, membership_), membership_);
  const double gamma = std::exp(-hyper_.beta * tau);
  const double td_error = reward + gamma * dot(p_, phi_next) - dot(p_, phi);

  RuleVector z = z_;
  RuleVector p = p_;
  for (std::size_t i = 0; i < kRuleCount; ++i) {
    z[i] = hyper_.lambda * gamma * z[i] + phi[i];
    p[i] += hyper_.alpha * td_error * z[i];
    if (!std::isfinite(p[i])) throw std::invalid_argument("td_update: parameters diverged");
  }
  z_ = z;
  p_ = p;
  last_state_ = s_next;
  last_cost_ = dot(p_, phi_next);
  ++updates_;
}

double compute_cost_signal(const CostSignalInputs& in, double beta) {
  if (in.responses.size() != in.arrival_times.size())
    throw std::invalid_argument("cost signal: responses and arrival times differ in length");
  if (in.responses.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < in.responses.size(); ++i)
    acc += in.responses[i] * std::exp(-beta * (in.arrival_times[i] - in.state_entry_time));
  return acc / static_cast<double>(in.responses.size());
}

bool decide_upgrade(FileId file, TierIndex tier_i, TierIndex tier_j, const FrbAgent& agent_i,
                    const FrbAgent& agent_j, const Hierarchy& hierarchy, double pending_i,
                    double pending_j) {
  const auto& f = hierarchy.file(file);
  if (f.tier >= hierarchy.fastest()) throw std::invalid_argument("decide_upgrade: file is already in the fastest tier");
  if (f.tier != tier_i) throw std::invalid_argument("decide_upgrade: file is not in the source tier");
  if (tier_j != tier_i + 1) throw std::invalid_argument("decide_upgrade: destination must be the next faster tier");

  const TierState now_i = hierarchy.compute_tier_state(tier_i, pending_i);
  const TierState now_j = hierarchy.compute_tier_state(tier_j, pending_j);
  const HypotheticalState up_i = hierarchy.hypothetical_state(tier_i, nullptr, file);
  const HypotheticalState up_j = hierarchy.hypothetical_state(tier_j, &f, std::nullopt);

  const double c_up_i = agent_i.value({up_i.s1, up_i.s2, pending_i});
  const double c_up_j = agent_j.value({up_j.s1, up_j.s2, pending_j});
  const double c_not_i = agent_i.value(state_vector(now_i));
  const double c_not_j = agent_j.value(state_vector(now_j));

  const double after = c_up_i * up_i.s1 + c_up_j * up_j.s1;
  const double before = c_not_i * now_i.s1 + c_not_j * now_j.s1;
  if (!(after < before)) return false;
  return hierarchy.upgrade_plan(file).has_value();
}

}  // namespace tiersim
