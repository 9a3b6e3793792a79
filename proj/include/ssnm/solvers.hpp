#ifndef SSNM_SOLVERS_HPP
#define SSNM_SOLVERS_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ssnm/model.hpp"
#include "ssnm/sampler.hpp"
#include "ssnm/schedule.hpp"
#include "ssnm/tables.hpp"

namespace ssnm {

enum class Algorithm { ssnm, ssnm_i, saga, mig };

std::string_view to_string(Algorithm algorithm);
Algorithm parse_algorithm(std::string_view name);

// Known solution used to report suboptimality and distance in traces.
struct Reference {
  Vector x;
  double value = 0.0;
};

struct SolverConfig {
  Algorithm algorithm = Algorithm::ssnm;
  std::uint64_t seed = 1;
  // SSNM and SAGA: n iterations per epoch. MiG: one outer loop of m = 2n
  // inner iterations per epoch.
  std::size_t epochs = 1;
  std::size_t eval_every = 1;
  // Tuning mode. For SSNM both must be set; SAGA and MiG only read eta.
  std::optional<double> eta;
  std::optional<double> tau;
  // Defaults to the zero vector.
  std::optional<Vector> x1;
  // Abort once F(x) > divergence_factor * F(x1).
  double divergence_factor = 1e3;
};

struct TracePoint {
  std::size_t epoch = 0;
  double objective = 0.0;
  std::optional<double> subopt;
  std::optional<double> dist_sq;
  std::uint64_t ifo = 0;
  std::uint64_t po = 0;
  double seconds = 0.0;
};

struct RunTrace {
  Algorithm algorithm = Algorithm::ssnm;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  double eta = 0.0;
  // tau for SSNM, theta for MiG, 0 for SAGA.
  double momentum = 0.0;
  std::vector<TracePoint> points;
  Vector final_x;
  std::uint64_t ifo = 0;
  std::uint64_t po = 0;
  std::vector<std::string> warnings;
};

// ---------------------------------------------------------------- SSNM

// Iterate plus SAGA memory. IFO calls are the table's plus one per step for
// the gradient at the coupled point; PO calls are one per step.
struct SsnmState {
  Vector x;
  PointsTable table;
  std::uint64_t estimator_ifo = 0;
  std::uint64_t po_calls = 0;

  static SsnmState init(const Problem& problem, const Vector& x1);
  std::uint64_t ifo_calls() const { return table.ifo_calls() + estimator_ifo; }
};

// grad~ = grad f_i(y_i) - g_i + avg with y_i = tau x + (1 - tau) phi_i.
// Costs one IFO call, which is not counted here.
Vector ssnm_estimator(const SsnmState& state, const Problem& problem,
                      double tau, std::size_t i);

// One iteration with the draws given explicitly: gradient sample i_k, table
// slot I_k.
void ssnm_step(SsnmState& state, const Problem& problem,
               const Schedule& schedule, std::size_t sample_index,
               std::size_t update_index);

// One iteration drawing i_k then I_k from the sampler, in that order. With
// reuse_sample (the SSNM-i variant) a single draw serves as both.
void ssnm_step(SsnmState& state, const Problem& problem,
               const Schedule& schedule, IndexSampler& sampler,
               bool reuse_sample = false);

// Schedule for a config: the two-case formula, or the manual override.
Schedule resolve_schedule(const Problem& problem, const SolverConfig& config,
                          std::vector<std::string>* warnings = nullptr);

RunTrace ssnm_run(const Problem& problem, const SolverConfig& config,
                  const Reference* reference = nullptr);
RunTrace saga_run(const Problem& problem, const SolverConfig& config,
                  const Reference* reference = nullptr);
RunTrace mig_run(const Problem& problem, const SolverConfig& config,
                 const Reference* reference = nullptr);

// Dispatches on config.algorithm.
RunTrace run_solver(const Problem& problem, const SolverConfig& config,
                    const Reference* reference = nullptr);

// First epoch at which subopt <= tol, if any.
std::optional<std::size_t> epochs_to_tolerance(const RunTrace& trace, double tol);

}  // namespace ssnm

#endif
