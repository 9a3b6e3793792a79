#ifndef SSNM_VERIFY_HPP
#define SSNM_VERIFY_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ssnm/model.hpp"
#include "ssnm/schedule.hpp"
#include "ssnm/solvers.hpp"
#include "ssnm/tables.hpp"

namespace ssnm {

// One checked inequality LHS <= RHS. pass iff margin >= -atol(RHS).
struct VerificationReport {
  std::string name;
  std::size_t n = 0;
  std::size_t d = 0;
  std::uint64_t seed = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
  bool pass = false;
  std::size_t trials = 1;
  std::vector<std::pair<std::string, double>> details;
};

// 1e-10 * (1 + |rhs|)
double verification_atol(double rhs);

VerificationReport make_report(std::string name, double lhs, double rhs);

// Folds several trials into one report that keeps the worst margin.
VerificationReport worst_of(std::string name,
                            const std::vector<VerificationReport>& trials);

// Single-line JSON record: name, instance, lhs, rhs, margin, pass, trials,
// details.
std::string to_json_line(const VerificationReport& report);

inline constexpr std::size_t kMaxEnumerationN = 500;
inline constexpr std::size_t kMaxPairEnumerationN = 200;

// Variance of the SSNM estimator over the coupled table y_i = tau x + (1 -
// tau) phi_i, by enumerating every sample i_k:
//
//   variance  = (1/n) sum_i || grad~(i) - (1/n) sum_j grad f_j(y_j) ||^2
//   gap       = (1/n) sum_i || grad f_i(y_i) - grad f_i(phi_i) ||^2
//   bregman   = 2L [ (1/n) sum_i (f_i(phi_i) - f_i(y_i))
//                    - (1/n) sum_i <grad f_i(y_i), phi_i - y_i> ]
//
// The bound is variance <= gap <= bregman. bregman_full_f is the same
// quantity with the averaged f(y_i) in place of f_i(y_i).
struct VarianceBoundTerms {
  double variance = 0.0;
  double gap = 0.0;
  double bregman = 0.0;
  double bregman_full_f = 0.0;
};

VarianceBoundTerms variance_bound_terms(const Problem& problem,
                                        const PointsTable& table,
                                        const Vector& x_k, double tau);

VerificationReport check_variance_bound(const Problem& problem,
                                        const PointsTable& table,
                                        const Vector& x_k, double tau);

// For x+ = prox(x_k, grad, eta) and any u:
//   <grad, x+ - u> <= -||x+ - x_k||^2/(2 eta) + ||x_k - u||^2/(2 eta)
//                     - (1 + eta mu)/(2 eta) ||x+ - u||^2 + h(u) - h(x+)
VerificationReport check_prox_lemma(const Regularizer& reg, const Vector& x_k,
                                    const Vector& grad, double eta,
                                    const Vector& u);

// || (1/n) sum_i grad~(i) - (1/n) sum_i grad f_i(y_i) || <= atol.
VerificationReport check_unbiasedness(const Problem& problem,
                                      const PointsTable& table,
                                      const Vector& x_k, double tau);

// Exact expectations over all n^2 equally likely (i_k, I_k) pairs of
// D = (1/n) sum_i F_i(phi_i) - F* and P = ||x - x*||^2.
struct ContractionTerms {
  double d_now = 0.0;
  double p_now = 0.0;
  double d_next = 0.0;  // E[D_{k+1}]
  double p_next = 0.0;  // E[P_{k+1}]
};

ContractionTerms contraction_terms(const Problem& problem,
                                   const Schedule& schedule, const Vector& x_k,
                                   const PointsTable& table,
                                   const Vector& x_star, double f_star);

// (1/tau) E[D+] + (1 + eta mu)/(2 eta n) E[P+]
//   <= (1 - tau/n)/tau D + 1/(2 eta n) P
VerificationReport check_contraction(const Problem& problem,
                                     const Schedule& schedule,
                                     const Vector& x_k,
                                     const PointsTable& table,
                                     const Vector& x_star, double f_star);

// Mean over n_seeds SSNM runs (seeds config.seed, config.seed + 1, ...) of
// ||x_{K+1} - x*||^2, K = config.epochs * n, against
//   (1 + eta mu)^-K ((2/mu)(F(x1) - F*) + ||x1 - x*||^2)
// plus three standard errors of the mean.
VerificationReport check_theorem_bound(const Problem& problem,
                                       const SolverConfig& config,
                                       std::size_t n_seeds,
                                       const Reference& reference);

// Default instances driven by the CLI.
std::vector<VerificationReport> lemma_suite(std::uint64_t seed = 1);
std::vector<VerificationReport> contraction_suite(std::uint64_t seed = 1);
std::vector<VerificationReport> theorem_suite(std::size_t n_seeds,
                                              std::uint64_t seed = 1);

}  // namespace ssnm

#endif
