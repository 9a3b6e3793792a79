#include "ssnm/solvers.hpp"

#include <chrono>
#include <cmath>
#include <sstream>
#include <utility>

#include "ssnm/errors.hpp"

namespace ssnm {

std::string_view to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::ssnm:
      return "ssnm";
    case Algorithm::ssnm_i:
      return "ssnm-i";
    case Algorithm::saga:
      return "saga";
    case Algorithm::mig:
      return "mig";
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "ssnm") return Algorithm::ssnm;
  if (name == "ssnm-i" || name == "ssnm_i") return Algorithm::ssnm_i;
  if (name == "saga") return Algorithm::saga;
  if (name == "mig") return Algorithm::mig;
  throw ConfigError("unknown algorithm '" + std::string(name) + "'");
}

namespace {

Vector initial_point(const Problem& problem, const SolverConfig& config) {
  if (!config.x1) return Vector::Zero(static_cast<Eigen::Index>(problem.d()));
  if (static_cast<std::size_t>(config.x1->size()) != problem.d())
    throw ConfigError("initial point has wrong dimension");
  return *config.x1;
}

void check_config(const SolverConfig& config) {
  if (config.eval_every == 0) throw ConfigError("eval_every must be >= 1");
  if (!(config.divergence_factor > 1.0))
    throw ConfigError("divergence factor must exceed 1");
}

// Appends trace points and enforces the divergence guard. Objective
// evaluations made here are not counted as oracle calls.
class Tracer {
 public:
  Tracer(const Problem& problem, const SolverConfig& config,
         const Reference* reference, RunTrace& trace)
      : problem_(problem),
        config_(config),
        reference_(reference),
        trace_(trace),
        start_(std::chrono::steady_clock::now()) {
    if (reference_ &&
        static_cast<std::size_t>(reference_->x.size()) != problem.d())
      throw ConfigError("reference point has wrong dimension");
  }

  bool due(std::size_t epoch) const {
    return epoch % config_.eval_every == 0 || epoch == config_.epochs;
  }

  void record(std::size_t epoch, const Vector& x, std::uint64_t ifo,
              std::uint64_t po, std::size_t iteration) {
    TracePoint p;
    p.epoch = epoch;
    p.objective = full_objective(problem_, x);
    p.ifo = ifo;
    p.po = po;
    if (reference_) {
      p.subopt = p.objective - reference_->value;
      p.dist_sq = (x - reference_->x).squaredNorm();
    }
    p.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                              start_)
                    .count();
    if (trace_.points.empty()) initial_ = p.objective;
    if (!std::isfinite(p.objective)) {
      std::ostringstream os;
      os << to_string(config_.algorithm) << ": non-finite objective at epoch "
         << epoch << " (iteration " << iteration << ")";
      throw DivergenceError(os.str(), iteration);
    }
    if (initial_ > 0.0 && p.objective > config_.divergence_factor * initial_) {
      std::ostringstream os;
      os << to_string(config_.algorithm) << ": objective " << p.objective
         << " exceeds " << config_.divergence_factor << " x F(x1) = " << initial_
         << " at epoch " << epoch << "; check eta/tau";
      throw DivergenceError(os.str(), iteration);
    }
    trace_.points.push_back(p);
  }

 private:
  const Problem& problem_;
  const SolverConfig& config_;
  const Reference* reference_;
  RunTrace& trace_;
  std::chrono::steady_clock::time_point start_;
  double initial_ = 0.0;
};

RunTrace make_trace(const Problem& problem, const SolverConfig& config) {
  RunTrace trace;
  trace.algorithm = config.algorithm;
  trace.seed = config.seed;
  trace.n = problem.n();
  return trace;
}

}  // namespace

SsnmState SsnmState::init(const Problem& problem, const Vector& x1) {
  SsnmState state;
  state.table = PointsTable::init(problem, x1);
  state.x = x1;
  return state;
}

Vector ssnm_estimator(const SsnmState& state, const Problem& problem,
                      double tau, std::size_t i) {
  const Vector y = tau * state.x + (1.0 - tau) * state.table.point(i);
  Vector est = state.table.average() - state.table.gradient(i);
  problem.data().add_row(i, component_gradient_weight(problem, i, y), est);
  return est;
}

void ssnm_step(SsnmState& state, const Problem& problem,
               const Schedule& schedule, std::size_t sample_index,
               std::size_t update_index) {
  const double tau = schedule.tau;
  const Vector est = ssnm_estimator(state, problem, tau, sample_index);
  ++state.estimator_ifo;

  prox_into(problem.regularizer(), state.x, est, schedule.eta, state.x);
  ++state.po_calls;

  const Vector phi_new =
      tau * state.x + (1.0 - tau) * state.table.point(update_index);
  state.table.update_entry(problem, update_index, phi_new);
}

void ssnm_step(SsnmState& state, const Problem& problem,
               const Schedule& schedule, IndexSampler& sampler,
               bool reuse_sample) {
  const std::size_t n = problem.n();
  const std::size_t i = sampler(n);
  const std::size_t slot = reuse_sample ? i : sampler(n);
  ssnm_step(state, problem, schedule, i, slot);
}

Schedule resolve_schedule(const Problem& problem, const SolverConfig& config,
                          std::vector<std::string>* warnings) {
  if (config.eta || config.tau) {
    if (!config.eta || !config.tau)
      throw ConfigError("manual SSNM schedule needs both eta and tau");
    return manual_schedule(problem.n(), problem.L(), problem.mu(), *config.eta,
                           *config.tau, warnings);
  }
  return make_schedule(problem.n(), problem.L(), problem.mu());
}

RunTrace ssnm_run(const Problem& problem, const SolverConfig& config,
                  const Reference* reference) {
  check_config(config);
  if (config.algorithm != Algorithm::ssnm &&
      config.algorithm != Algorithm::ssnm_i)
    throw ConfigError("ssnm_run called with a non-SSNM algorithm");
  RunTrace trace = make_trace(problem, config);
  const Schedule schedule = resolve_schedule(problem, config, &trace.warnings);
  trace.eta = schedule.eta;
  trace.momentum = schedule.tau;

  const bool reuse = config.algorithm == Algorithm::ssnm_i;
  IndexSampler sampler(config.seed);
  SsnmState state = SsnmState::init(problem, initial_point(problem, config));
  Tracer tracer(problem, config, reference, trace);
  tracer.record(0, state.x, state.ifo_calls(), state.po_calls, 0);

  const std::size_t n = problem.n();
  std::size_t iteration = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t k = 0; k < n; ++k, ++iteration)
      ssnm_step(state, problem, schedule, sampler, reuse);
    if (tracer.due(epoch))
      tracer.record(epoch, state.x, state.ifo_calls(), state.po_calls, iteration);
  }
  trace.ifo = state.ifo_calls();
  trace.po = state.po_calls;
  trace.final_x = std::move(state.x);
  return trace;
}

RunTrace saga_run(const Problem& problem, const SolverConfig& config,
                  const Reference* reference) {
  check_config(config);
  RunTrace trace = make_trace(problem, config);
  const double eta = config.eta ? *config.eta
                                : saga_step_size(problem.n(), problem.L(), problem.mu());
  if (!(eta > 0.0)) throw ConfigError("SAGA step size must be positive");
  trace.eta = eta;

  IndexSampler sampler(config.seed);
  Vector x = initial_point(problem, config);
  PointsTable table = PointsTable::init(problem, x);
  std::uint64_t fresh_ifo = 0;
  std::uint64_t po = 0;
  Tracer tracer(problem, config, reference, trace);
  tracer.record(0, x, table.ifo_calls(), po, 0);

  const std::size_t n = problem.n();
  const Dataset& data = problem.data();
  Vector est(x.size());
  std::size_t iteration = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t k = 0; k < n; ++k, ++iteration) {
      const std::size_t i = sampler(n);
      const double w = component_gradient_weight(problem, i, x);
      ++fresh_ifo;
      est = table.average() - table.gradient(i);
      data.add_row(i, w, est);
      // phi_i <- x_k, reusing the gradient just computed.
      table.store_entry(problem, i, x, w);
      prox_into(problem.regularizer(), x, est, eta, x);
      ++po;
    }
    if (tracer.due(epoch))
      tracer.record(epoch, x, table.ifo_calls() + fresh_ifo, po, iteration);
  }
  trace.ifo = table.ifo_calls() + fresh_ifo;
  trace.po = po;
  trace.final_x = std::move(x);
  return trace;
}

RunTrace mig_run(const Problem& problem, const SolverConfig& config,
                 const Reference* reference) {
  check_config(config);
  RunTrace trace = make_trace(problem, config);
  MigParameters params = mig_parameters(problem.n(), problem.L(), problem.mu());
  if (config.eta) params.eta = *config.eta;
  if (!(params.eta > 0.0)) throw ConfigError("MiG step size must be positive");
  trace.eta = params.eta;
  trace.momentum = params.theta;

  const double theta = params.theta;
  const double growth = 1.0 + params.eta * problem.mu();
  const std::size_t n = problem.n();
  const Dataset& data = problem.data();

  IndexSampler sampler(config.seed);
  Vector x = initial_point(problem, config);
  Vector snapshot = x;
  std::uint64_t ifo = 0;
  std::uint64_t po = 0;
  Tracer tracer(problem, config, reference, trace);
  tracer.record(0, snapshot, ifo, po, 0);

  Vector y(x.size());
  Vector est(x.size());
  Vector weighted(x.size());
  std::size_t iteration = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const Vector full = smooth_gradient(problem, snapshot);
    ifo += n;
    weighted.setZero();
    double weight = 1.0;
    double weight_sum = 0.0;
    for (std::size_t j = 0; j < params.m; ++j, ++iteration) {
      y = theta * x + (1.0 - theta) * snapshot;
      const std::size_t i = sampler(n);
      const double w_y = component_gradient_weight(problem, i, y);
      const double w_s = component_gradient_weight(problem, i, snapshot);
      ifo += 2;
      est = full;
      data.add_row(i, w_y - w_s, est);
      prox_into(problem.regularizer(), x, est, params.eta, x);
      ++po;
      // Weights (1 + eta mu)^j on x_{j+1}, rescaled to stay finite.
      weighted += weight * x;
      weight_sum += weight;
      weight *= growth;
      if (weight > 1e100) {
        weighted *= 1e-100;
        weight_sum *= 1e-100;
        weight *= 1e-100;
      }
    }
    // Weighted mean of y_{j+1} = theta x_{j+1} + (1 - theta) snapshot.
    snapshot = theta * (weighted / weight_sum) + (1.0 - theta) * snapshot;
    if (tracer.due(epoch)) tracer.record(epoch, snapshot, ifo, po, iteration);
  }
  trace.ifo = ifo;
  trace.po = po;
  trace.final_x = std::move(snapshot);
  return trace;
}

RunTrace run_solver(const Problem& problem, const SolverConfig& config,
                    const Reference* reference) {
  switch (config.algorithm) {
    case Algorithm::ssnm:
    case Algorithm::ssnm_i:
      return ssnm_run(problem, config, reference);
    case Algorithm::saga:
      return saga_run(problem, config, reference);
    case Algorithm::mig:
      return mig_run(problem, config, reference);
  }
  throw ConfigError("unknown algorithm");
}

std::optional<std::size_t> epochs_to_tolerance(const RunTrace& trace, double tol) {
  for (const auto& p : trace.points)
    if (p.subopt && *p.subopt <= tol) return p.epoch;
  return std::nullopt;
}

}  // namespace ssnm
