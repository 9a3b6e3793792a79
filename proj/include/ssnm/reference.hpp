#ifndef SSNM_REFERENCE_HPP
#define SSNM_REFERENCE_HPP

#include <cstddef>
#include <optional>

#include "ssnm/errors.hpp"
#include "ssnm/model.hpp"

namespace ssnm {

struct ReferenceOptions {
  std::size_t max_iterations = 200000;
  // Squared loss with lambda1 = 0 is solved through the normal equations.
  bool allow_closed_form = true;
  // Without l1 and for d <= kMaxNewtonDim, damped Newton on the dense
  // Hessian is used instead of the first-order method.
  bool allow_newton = true;
  std::optional<Vector> x0;
};

struct ReferenceSolution {
  Vector x;
  double value = 0.0;
  double gradient_mapping_norm = 0.0;
  std::size_t iterations = 0;
  bool closed_form = false;
  bool newton = false;
};

inline constexpr std::size_t kMaxNewtonDim = 2000;

class ReferenceError : public Error {
 public:
  ReferenceError(const std::string& what, ReferenceSolution best)
      : Error(what), best_(std::move(best)) {}
  const ReferenceSolution& best() const { return best_; }

 private:
  ReferenceSolution best_;
};

// || L (x - prox(x - grad f(x) / L)) || with step 1/L, zero exactly at the
// minimizer of F.
double gradient_mapping_norm(const Problem& problem, const Vector& x);

// Deterministic high-accuracy solve of min F. Accelerated proximal gradient
// with constant step 1/L, strongly convex momentum and gradient-based
// restart, stopped once the gradient mapping norm is <= tol. Throws
// ReferenceError (carrying the best iterate) if the iteration cap is hit.
ReferenceSolution reference_solve(const Problem& problem, double tol,
                                  const ReferenceOptions& options = {});

// (A^T A / n + lambda2 I)^-1 A^T b / n for the squared loss without l1.
Vector ridge_closed_form(const Problem& problem);

}  // namespace ssnm

#endif
