#include "ssnm/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ssnm/errors.hpp"

namespace ssnm {

std::string_view to_string(Regime regime) {
  return regime == Regime::ill ? "ill" : "well";
}

namespace {

void check_inputs(std::size_t n, double L, double mu) {
  if (n == 0) throw ConfigError("schedule needs n >= 1");
  if (!(L > 0.0) || !std::isfinite(L))
    throw ConfigError("schedule needs a positive finite L");
  if (!(mu > 0.0) || !std::isfinite(mu))
    throw ConfigError("schedule needs a positive finite mu");
}

}  // namespace

bool satisfies_step_constraint(double L, double eta, double tau) {
  return L * tau <= 1.0 / eta - L * tau / (1.0 - tau);
}

std::vector<std::string> schedule_violations(const Schedule& s) {
  std::vector<std::string> out;
  if (!(s.eta > 0.0) || !std::isfinite(s.eta)) out.push_back("eta must be positive");
  if (!(s.tau > 0.0 && s.tau < 0.5)) {
    std::ostringstream os;
    os << "tau = " << s.tau << " outside (0, 1/2)";
    out.push_back(os.str());
  }
  if (s.tau < 1.0 && !satisfies_step_constraint(s.L, s.eta, s.tau)) {
    std::ostringstream os;
    os << "L tau <= 1/eta - L tau/(1 - tau) violated (eta = " << s.eta
       << ", tau = " << s.tau << ")";
    out.push_back(os.str());
  }
  return out;
}

Schedule make_schedule(std::size_t n, double L, double mu) {
  check_inputs(n, L, mu);
  const double nd = static_cast<double>(n);
  Schedule s;
  s.n = n;
  s.L = L;
  s.mu = mu;
  s.kappa = L / mu;
  if (nd / s.kappa <= 0.75) {
    s.regime = Regime::ill;
    s.eta = std::sqrt(1.0 / (3.0 * mu * nd * L));
  } else {
    s.regime = Regime::well;
    s.eta = 1.0 / (2.0 * mu * nd);
  }
  s.tau = nd * s.eta * mu / (1.0 + s.eta * mu);
  if (auto v = schedule_violations(s); !v.empty())
    throw ConfigError("schedule invariant violated: " + v.front());
  return s;
}

Schedule manual_schedule(std::size_t n, double L, double mu, double eta,
                         double tau, std::vector<std::string>* warnings) {
  check_inputs(n, L, mu);
  if (!(eta > 0.0)) throw ConfigError("manual eta must be positive");
  if (!(tau >= 0.0 && tau <= 1.0))
    throw ConfigError("manual tau must lie in [0, 1]");
  Schedule s;
  s.n = n;
  s.L = L;
  s.mu = mu;
  s.kappa = L / mu;
  s.regime = static_cast<double>(n) / s.kappa <= 0.75 ? Regime::ill : Regime::well;
  s.eta = eta;
  s.tau = tau;
  s.manual = true;
  if (warnings) {
    for (auto& v : schedule_violations(s)) warnings->push_back(std::move(v));
  }
  return s;
}

double saga_step_size(std::size_t n, double L, double mu) {
  check_inputs(n, L, mu);
  return 1.0 / (2.0 * (mu * static_cast<double>(n) + L));
}

MigParameters mig_parameters(std::size_t n, double L, double mu) {
  check_inputs(n, L, mu);
  MigParameters p;
  p.m = 2 * n;
  p.theta = std::min(std::sqrt(static_cast<double>(p.m) / (3.0 * L / mu)), 0.5);
  p.eta = 1.0 / (3.0 * p.theta * L);
  return p;
}

}  // namespace ssnm
