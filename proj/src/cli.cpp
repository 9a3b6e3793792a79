#include "ssnm/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "ssnm/data.hpp"
#include "ssnm/errors.hpp"
#include "ssnm/model.hpp"
#include "ssnm/reference.hpp"
#include "ssnm/sampler.hpp"
#include "ssnm/schedule.hpp"
#include "ssnm/solvers.hpp"
#include "ssnm/trace_io.hpp"
#include "ssnm/verify.hpp"

namespace ssnm::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// Everything needed to rebuild a problem instance.
struct ProblemOptions {
  std::string data_path;
  std::string synthetic;
  std::optional<std::string> loss;
  std::optional<double> lambda2;
  double lambda1 = 0.0;
  bool normalize = true;
  bool scale_columns = false;
  std::optional<double> positive_label;
  std::size_t dim = 0;
};

struct RunOptions {
  ProblemOptions problem;
  std::string algorithm = "ssnm";
  std::size_t epochs = 10;
  std::uint64_t seed = 1;
  std::size_t eval_every = 1;
  std::optional<double> eta;
  std::optional<double> tau;
  std::string reference_path;
  bool compute_reference = false;
  double reference_tol = 1e-12;
  bool wall_time = false;
};

template <typename T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> optional_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

json to_json(const ProblemOptions& p) {
  json j;
  j["data"] = p.data_path;
  j["synthetic"] = p.synthetic;
  j["loss"] = optional_json(p.loss);
  j["lambda1"] = p.lambda1;
  j["lambda2"] = optional_json(p.lambda2);
  j["normalize_rows"] = p.normalize;
  j["scale_columns"] = p.scale_columns;
  j["positive_label"] = optional_json(p.positive_label);
  j["dim"] = p.dim;
  return j;
}

ProblemOptions problem_from_json(const json& j) {
  ProblemOptions p;
  p.data_path = j.at("data").get<std::string>();
  p.synthetic = j.at("synthetic").get<std::string>();
  p.loss = optional_from<std::string>(j, "loss");
  p.lambda1 = j.at("lambda1").get<double>();
  p.lambda2 = optional_from<double>(j, "lambda2");
  p.normalize = j.at("normalize_rows").get<bool>();
  p.scale_columns = j.at("scale_columns").get<bool>();
  p.positive_label = optional_from<double>(j, "positive_label");
  p.dim = j.at("dim").get<std::size_t>();
  return p;
}

json to_json(const RunOptions& r) {
  json j;
  j["algorithm"] = r.algorithm;
  j["problem"] = to_json(r.problem);
  j["epochs"] = r.epochs;
  j["seed"] = r.seed;
  j["eval_every"] = r.eval_every;
  j["eta"] = optional_json(r.eta);
  j["tau"] = optional_json(r.tau);
  j["reference"] = r.reference_path;
  j["compute_reference"] = r.compute_reference;
  j["reference_tol"] = r.reference_tol;
  j["wall_time"] = r.wall_time;
  return j;
}

RunOptions run_from_json(const json& j) {
  RunOptions r;
  r.algorithm = j.at("algorithm").get<std::string>();
  r.problem = problem_from_json(j.at("problem"));
  r.epochs = j.at("epochs").get<std::size_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.eval_every = j.at("eval_every").get<std::size_t>();
  r.eta = optional_from<double>(j, "eta");
  r.tau = optional_from<double>(j, "tau");
  r.reference_path = j.at("reference").get<std::string>();
  r.compute_reference = j.at("compute_reference").get<bool>();
  r.reference_tol = j.at("reference_tol").get<double>();
  r.wall_time = j.at("wall_time").get<bool>();
  return r;
}

struct LoadedProblem {
  std::unique_ptr<Problem> problem;
  std::optional<SyntheticSpec> spec;
  std::size_t dropped_rows = 0;
};

LoadedProblem build_problem(ProblemOptions& opts, std::ostream& err) {
  if (opts.data_path.empty() == opts.synthetic.empty())
    throw ConfigError("give exactly one of --data or --synthetic");
  LoadedProblem out;
  std::shared_ptr<const Dataset> data;
  LossKind loss = opts.loss ? parse_loss(*opts.loss) : LossKind::logistic;
  double lambda2 = 0.0;
  if (!opts.synthetic.empty()) {
    SyntheticSpec spec = parse_synthetic_spec(opts.synthetic);
    if (opts.loss) spec.loss = loss;
    loss = spec.loss;
    SyntheticProblem sp = generate_synthetic(spec);
    lambda2 = opts.lambda2 ? *opts.lambda2 : sp.lambda2;
    data = std::make_shared<const Dataset>(std::move(sp.data));
    out.spec = spec;
  } else {
    if (!opts.lambda2) throw ConfigError("--lambda2 is required with --data");
    lambda2 = *opts.lambda2;
    // Manifests must not depend on the working directory.
    opts.data_path = fs::absolute(opts.data_path).lexically_normal().string();
    LoadOptions load;
    load.positive_label = opts.positive_label;
    load.min_dim = opts.dim;
    Dataset raw = load_libsvm(opts.data_path, load);
    if (opts.scale_columns) {
      raw = scale_columns(raw);
    } else if (opts.normalize) {
      raw = normalize_rows(raw, &out.dropped_rows);
      if (out.dropped_rows > 0)
        err << "warning: dropped " << out.dropped_rows << " all-zero rows\n";
    }
    data = std::make_shared<const Dataset>(std::move(raw));
  }
  out.problem = std::make_unique<Problem>(data, loss, Regularizer{opts.lambda1, lambda2});
  return out;
}

void add_problem_flags(CLI::App& cmd, ProblemOptions& p) {
  cmd.add_option("--data", p.data_path, "LIBSVM file");
  cmd.add_option("--synthetic", p.synthetic,
                 "synthetic spec, e.g. n=200,d=20,kappa=1e4,loss=squared,seed=7");
  cmd.add_option("--loss", p.loss, "logistic | squared");
  cmd.add_option("--lambda1", p.lambda1, "l1 coefficient")->check(CLI::NonNegativeNumber);
  cmd.add_option("--lambda2", p.lambda2, "l2 coefficient (mu)");
  cmd.add_flag("!--no-normalize", p.normalize, "keep rows as loaded");
  cmd.add_flag("--scale-columns", p.scale_columns,
               "scale columns to unit RMS instead of normalizing rows");
  cmd.add_option("--positive-label", p.positive_label,
                 "raw label mapped to +1, all others to -1");
  cmd.add_option("--dim", p.dim, "pad the feature dimension up to this value");
}

Reference resolve_reference(const RunOptions& opts, const Problem& problem,
                            std::ostream& err) {
  if (!opts.reference_path.empty()) {
    Reference ref = read_reference(opts.reference_path);
    if (static_cast<std::size_t>(ref.x.size()) != problem.d())
      throw DataError("reference dimension does not match the problem");
    return ref;
  }
  try {
    const ReferenceSolution sol = reference_solve(problem, opts.reference_tol);
    return Reference{sol.x, sol.value};
  } catch (const ReferenceError& e) {
    err << "warning: " << e.what() << "; using the best iterate\n";
    return Reference{e.best().x, e.best().value};
  }
}

SolverConfig solver_config(const RunOptions& opts) {
  SolverConfig c;
  c.algorithm = parse_algorithm(opts.algorithm);
  c.seed = opts.seed;
  c.epochs = opts.epochs;
  c.eval_every = opts.eval_every;
  c.eta = opts.eta;
  c.tau = opts.tau;
  return c;
}

json derived_json(const Problem& problem, const RunTrace& trace,
                  const SolverConfig& config) {
  json j;
  j["n"] = problem.n();
  j["d"] = problem.d();
  j["L"] = problem.L();
  j["mu"] = problem.mu();
  j["kappa"] = problem.kappa();
  j["eta"] = trace.eta;
  if (config.algorithm == Algorithm::ssnm || config.algorithm == Algorithm::ssnm_i) {
    j["tau"] = trace.momentum;
    j["regime"] = std::string(to_string(
        static_cast<double>(problem.n()) / problem.kappa() <= 0.75 ? Regime::ill
                                                                   : Regime::well));
  } else if (config.algorithm == Algorithm::mig) {
    j["theta"] = trace.momentum;
    j["inner_loop"] = 2 * problem.n();
  }
  j["ifo"] = trace.ifo;
  j["po"] = trace.po;
  return j;
}

std::string render_trace(const RunTrace& trace, bool wall_time) {
  std::ostringstream os;
  write_trace_csv(os, trace, wall_time);
  return os.str();
}

std::string render_vector(const Vector& x) {
  std::ostringstream os;
  write_vector(os, x);
  return os.str();
}

unsigned thread_budget(std::size_t cells) {
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SSNM_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) threads = static_cast<unsigned>(v);
    } catch (const std::exception&) {
      throw ConfigError("SSNM_THREADS must be a positive integer");
    }
  }
  return static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(cells, 1)));
}

// ------------------------------------------------------------------ run

int cmd_run(RunOptions opts, const std::string& manifest_path, const std::string& out_dir,
            std::ostream& out, std::ostream& err) {
  if (!manifest_path.empty()) {
    std::ifstream in(manifest_path);
    if (!in) throw DataError("cannot open manifest '" + manifest_path + "'");
    json m;
    try {
      m = json::parse(in);
      opts = run_from_json(m.at("config"));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("manifest '" + manifest_path + "': " + e.what());
    }
  }
  if (out_dir.empty()) throw ConfigError("--out is required");

  LoadedProblem loaded = build_problem(opts.problem, err);
  const Problem& problem = *loaded.problem;
  const SolverConfig config = solver_config(opts);

  std::optional<Reference> reference;
  if (opts.compute_reference || !opts.reference_path.empty())
    reference = resolve_reference(opts, problem, err);

  RunTrace trace = run_solver(problem, config, reference ? &*reference : nullptr);
  for (const auto& w : trace.warnings) err << "warning: " << w << '\n';

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  write_file_atomic(dir / "trace.csv", render_trace(trace, opts.wall_time));
  write_file_atomic(dir / "final_iterate.txt", render_vector(trace.final_x));
  if (reference && opts.compute_reference) write_reference(dir / "reference.json", *reference);

  json manifest;
  manifest["schema_version"] = 1;
  manifest["implementation"] = {{"name", "ssnm"}, {"version", kVersion}};
  manifest["rng"] = std::string(IndexSampler::algorithm_id);
  manifest["csv_schema"] = std::string(kTraceCsvSchema);
  manifest["config"] = to_json(opts);
  manifest["derived"] = derived_json(problem, trace, config);
  if (loaded.spec) manifest["derived"]["synthetic_spec"] = format_synthetic_spec(*loaded.spec);
  if (reference) manifest["derived"]["reference_value"] = reference->value;
  manifest["outputs"] = {{"trace", "trace.csv"}, {"final_iterate", "final_iterate.txt"}};
  if (reference && opts.compute_reference) manifest["outputs"]["reference"] = "reference.json";
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");

  const TracePoint& last = trace.points.back();
  out << to_string(config.algorithm) << ": epoch " << last.epoch << " objective "
      << format_double(last.objective);
  if (last.subopt) out << " subopt " << format_double(*last.subopt);
  out << '\n';
  return kOk;
}

// -------------------------------------------------------------- compare

struct CompareOptions {
  RunOptions base;
  std::vector<std::string> algorithms;
  std::size_t num_seeds = 5;
  double tol = 1e-9;
};

std::optional<double> median_of(std::vector<double> values) {
  if (values.empty()) return std::nullopt;
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  const double med = values.size() % 2 == 1 ? values[m] : 0.5 * (values[m - 1] + values[m]);
  if (!std::isfinite(med)) return std::nullopt;
  return med;
}

int cmd_compare(CompareOptions opts, const std::string& out_dir, std::ostream& out,
                std::ostream& err) {
  if (out_dir.empty()) throw ConfigError("--out is required");
  if (opts.algorithms.empty()) throw ConfigError("--algos needs at least one algorithm");
  if (opts.num_seeds == 0) throw ConfigError("--seeds must be >= 1");
  for (const auto& a : opts.algorithms) parse_algorithm(a);

  LoadedProblem loaded = build_problem(opts.base.problem, err);
  const Problem& problem = *loaded.problem;
  RunOptions ref_opts = opts.base;
  if (ref_opts.reference_path.empty()) ref_opts.compute_reference = true;
  const Reference reference = resolve_reference(ref_opts, problem, err);

  struct Cell {
    std::size_t algo_index;
    std::uint64_t seed;
    RunTrace trace;
    std::exception_ptr error;
  };
  std::vector<Cell> cells;
  for (std::size_t a = 0; a < opts.algorithms.size(); ++a)
    for (std::size_t s = 0; s < opts.num_seeds; ++s)
      cells.push_back(Cell{a, opts.base.seed + s, {}, nullptr});

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t c = next++; c < cells.size(); c = next++) {
      Cell& cell = cells[c];
      try {
        RunOptions run = opts.base;
        run.algorithm = opts.algorithms[cell.algo_index];
        run.seed = cell.seed;
        cell.trace = run_solver(problem, solver_config(run), &reference);
        const fs::path cell_dir = dir / (std::to_string(cell.algo_index) + "-" +
                                         run.algorithm) /
                                  ("seed-" + std::to_string(cell.seed));
        fs::create_directories(cell_dir);
        write_file_atomic(cell_dir / "trace.csv", render_trace(cell.trace, run.wall_time));
      } catch (...) {
        cell.error = std::current_exception();
      }
    }
  };
  const unsigned threads = thread_budget(cells.size());
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& cell : cells)
    if (cell.error) std::rethrow_exception(cell.error);

  json summary;
  summary["tol"] = opts.tol;
  summary["reference_value"] = reference.value;
  summary["rng"] = std::string(IndexSampler::algorithm_id);
  summary["config"] = to_json(opts.base);
  json algos = json::array();
  for (std::size_t a = 0; a < opts.algorithms.size(); ++a) {
    json entry;
    entry["index"] = a;
    entry["algorithm"] = opts.algorithms[a];
    std::vector<double> epochs;
    std::vector<double> passes;
    json per_seed = json::array();
    for (const auto& cell : cells) {
      if (cell.algo_index != a) continue;
      json s;
      s["seed"] = cell.seed;
      const auto e = epochs_to_tolerance(cell.trace, opts.tol);
      double pass = std::numeric_limits<double>::infinity();
      if (e) {
        for (const auto& p : cell.trace.points)
          if (p.epoch == *e) pass = static_cast<double>(p.ifo) / static_cast<double>(problem.n());
      }
      s["epochs_to_tol"] = e ? json(*e) : json(nullptr);
      s["passes_to_tol"] = e ? json(pass) : json(nullptr);
      s["final_subopt"] = *cell.trace.points.back().subopt;
      epochs.push_back(e ? static_cast<double>(*e) : std::numeric_limits<double>::infinity());
      passes.push_back(pass);
      per_seed.push_back(s);
    }
    entry["median_epochs_to_tol"] = optional_json(median_of(epochs));
    entry["median_passes_to_tol"] = optional_json(median_of(passes));
    entry["per_seed"] = per_seed;
    algos.push_back(entry);
    out << opts.algorithms[a] << ": median epochs to " << format_double(opts.tol) << " = "
        << (median_of(epochs) ? format_double(*median_of(epochs)) : "not reached") << '\n';
  }
  summary["algorithms"] = algos;
  write_file_atomic(dir / "summary.json", summary.dump(2) + "\n");
  return kOk;
}

// --------------------------------------------------------------- verify

int cmd_verify(const std::string& suite, std::size_t seeds, std::uint64_t seed,
               std::ostream& out) {
  const bool all = suite == "all";
  if (!all && suite != "lemmas" && suite != "contraction" && suite != "theorem")
    throw ConfigError("--suite must be one of lemmas, contraction, theorem, all");
  std::vector<VerificationReport> reports;
  auto append = [&](std::vector<VerificationReport> more) {
    for (auto& r : more) {
      out << to_json_line(r) << '\n';
      reports.push_back(std::move(r));
    }
  };
  if (all || suite == "lemmas") append(lemma_suite(seed));
  if (all || suite == "contraction") append(contraction_suite(seed));
  if (all || suite == "theorem") append(theorem_suite(seeds, seed));
  const bool ok = std::all_of(reports.begin(), reports.end(),
                              [](const auto& r) { return r.pass; });
  return ok ? kOk : kVerificationFailure;
}

// ------------------------------------------------------------- gen-data

int cmd_gen_data(const SyntheticSpec& spec, const std::string& path, std::ostream& out) {
  if (path.empty()) throw ConfigError("--out is required");
  const SyntheticProblem sp = generate_synthetic(spec);
  std::ostringstream os;
  write_libsvm(os, sp.data);
  const fs::path file(path);
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  write_file_atomic(file, os.str());

  json m;
  m["spec"] = format_synthetic_spec(spec);
  m["n"] = spec.n;
  m["d"] = spec.d;
  m["loss"] = std::string(to_string(spec.loss));
  m["target_kappa"] = spec.target_kappa;
  m["lambda2"] = sp.lambda2;
  m["achieved_kappa"] = sp.achieved_kappa;
  fs::path manifest = file;
  manifest += ".json";
  write_file_atomic(manifest, m.dump(2) + "\n");
  out << "achieved kappa " << format_double(sp.achieved_kappa) << " (target "
      << format_double(spec.target_kappa) << "), lambda2 " << format_double(sp.lambda2)
      << '\n';
  return kOk;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"SSNM, SAGA and MiG solvers with a verification suite", "ssnm"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  RunOptions run_opts;
  std::string run_manifest;
  std::string run_out;
  auto* run_cmd = app.add_subcommand("run", "run one solver and write a trace");
  run_cmd->add_option("--algo", run_opts.algorithm, "ssnm | ssnm-i | saga | mig");
  add_problem_flags(*run_cmd, run_opts.problem);
  run_cmd->add_option("--epochs", run_opts.epochs, "passes over the data");
  run_cmd->add_option("--seed", run_opts.seed, "RNG seed");
  run_cmd->add_option("--eval-every", run_opts.eval_every, "epochs between trace rows")
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("--eta", run_opts.eta, "manual step size");
  run_cmd->add_option("--tau", run_opts.tau, "manual momentum weight (SSNM)");
  run_cmd->add_option("--out", run_out, "output directory");
  run_cmd->add_option("--reference", run_opts.reference_path, "reference.json with x* and F*");
  run_cmd->add_flag("--compute-reference", run_opts.compute_reference,
                    "solve for x* first and report suboptimality");
  run_cmd->add_option("--reference-tol", run_opts.reference_tol,
                      "gradient mapping tolerance of the reference solve");
  run_cmd->add_flag("--wall-time", run_opts.wall_time,
                    "fill the seconds column (makes trace.csv non-reproducible)");
  run_cmd->add_option("--manifest", run_manifest, "re-run the config of a manifest.json");

  CompareOptions cmp_opts;
  std::string cmp_algos = "ssnm,saga";
  std::string cmp_out;
  auto* cmp_cmd = app.add_subcommand("compare", "run several solvers over common seeds");
  cmp_cmd->add_option("--algos", cmp_algos, "comma separated algorithms");
  add_problem_flags(*cmp_cmd, cmp_opts.base.problem);
  cmp_cmd->add_option("--epochs", cmp_opts.base.epochs, "passes over the data");
  cmp_cmd->add_option("--seed", cmp_opts.base.seed, "first seed");
  cmp_cmd->add_option("--seeds", cmp_opts.num_seeds, "number of seeds");
  cmp_cmd->add_option("--eval-every", cmp_opts.base.eval_every)->check(CLI::PositiveNumber);
  cmp_cmd->add_option("--tol", cmp_opts.tol, "suboptimality for epochs-to-tolerance");
  cmp_cmd->add_option("--reference", cmp_opts.base.reference_path);
  cmp_cmd->add_option("--reference-tol", cmp_opts.base.reference_tol);
  cmp_cmd->add_option("--out", cmp_out, "output directory");

  std::string suite = "all";
  std::size_t verify_seeds = 100;
  std::uint64_t verify_seed = 1;
  auto* ver_cmd = app.add_subcommand("verify", "numerically check the convergence theory");
  ver_cmd->add_option("--suite", suite, "lemmas | contraction | theorem | all");
  ver_cmd->add_option("--seeds", verify_seeds, "runs per theorem check")
      ->check(CLI::Range(2, 100000));
  ver_cmd->add_option("--seed", verify_seed, "instance seed");

  SyntheticSpec gen_spec;
  std::string gen_loss = "logistic";
  std::string gen_out;
  auto* gen_cmd = app.add_subcommand("gen-data", "write a synthetic LIBSVM dataset");
  gen_cmd->add_option("--n", gen_spec.n)->required();
  gen_cmd->add_option("--d", gen_spec.d)->required();
  gen_cmd->add_option("--kappa", gen_spec.target_kappa)->required();
  gen_cmd->add_option("--seed", gen_spec.seed);
  gen_cmd->add_option("--loss", gen_loss);
  gen_cmd->add_option("--noise", gen_spec.noise);
  gen_cmd->add_option("--decay", gen_spec.decay);
  gen_cmd->add_option("--out", gen_out, "output file")->required();

  std::vector<const char*> argv;
  argv.push_back("ssnm");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run_cmd) return cmd_run(run_opts, run_manifest, run_out, out, err);
    if (*cmp_cmd) {
      cmp_opts.algorithms = split_list(cmp_algos);
      return cmd_compare(cmp_opts, cmp_out, out, err);
    }
    if (*ver_cmd) return cmd_verify(suite, verify_seeds, verify_seed, out);
    if (*gen_cmd) {
      gen_spec.loss = parse_loss(gen_loss);
      return cmd_gen_data(gen_spec, gen_out, out);
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const DivergenceError& e) {
    err << "diverged: " << e.what() << '\n';
    return kDivergence;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsage;
}

int main_entry(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace ssnm::cli
