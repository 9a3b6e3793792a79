#ifndef SSNM_SCHEDULE_HPP
#define SSNM_SCHEDULE_HPP

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace ssnm {

enum class Regime { ill, well };

std::string_view to_string(Regime regime);

// Step size and momentum weight for SSNM.
//
//   n / kappa <= 3/4 (ill):  eta = sqrt(1 / (3 mu n L))
//   n / kappa >  3/4 (well): eta = 1 / (2 mu n)
//   tau = n eta mu / (1 + eta mu)
//
// Both choices give 0 < tau < 1/2 and L tau <= 1/eta - L tau / (1 - tau).
struct Schedule {
  double eta = 0.0;
  double tau = 0.0;
  Regime regime = Regime::ill;
  double kappa = 0.0;
  std::size_t n = 0;
  double L = 0.0;
  double mu = 0.0;
  bool manual = false;

  // Per-iteration contraction factor (1 + eta mu)^-1 of the Lyapunov function.
  double contraction() const { return 1.0 / (1.0 + eta * mu); }
};

Schedule make_schedule(std::size_t n, double L, double mu);

// Manual eta/tau (tuning mode). Violations of the schedule invariants are
// reported through `warnings` instead of throwing.
Schedule manual_schedule(std::size_t n, double L, double mu, double eta,
                         double tau, std::vector<std::string>* warnings = nullptr);

// Human readable list of violated invariants; empty when the schedule is valid.
std::vector<std::string> schedule_violations(const Schedule& s);

bool satisfies_step_constraint(double L, double eta, double tau);

// SAGA baseline step 1 / (2 (mu n + L)).
double saga_step_size(std::size_t n, double L, double mu);

struct MigParameters {
  std::size_t m = 0;   // inner loop length
  double theta = 0.0;  // momentum weight toward the snapshot
  double eta = 0.0;
};

// m = 2n, theta = sqrt(m / (3 kappa)) capped at 1/2, eta = 1 / (3 theta L).
MigParameters mig_parameters(std::size_t n, double L, double mu);

}  // namespace ssnm

#endif
