#pragma once

// Command-line front end.
//
// Exit codes:
//   0  success (including a winning attack)
//   1  unexpected failure
//   2  usage error
//   3  parse or validation error in an input document
//   4  enumeration cap exceeded
//   5  infeasible program or no winning attack
//   6  verification failure

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "salience/control.hpp"
#include "salience/gadgets.hpp"
#include "salience/io.hpp"
#include "salience/oracles.hpp"
#include "salience/stochastic.hpp"

namespace salience {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitUsage = 2,
  kExitInput = 3,
  kExitCap = 4,
  kExitNoWin = 5,
  kExitVerify = 6,
};

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEnumerationCapExceeded: return kExitCap;
    case ErrorCode::kIterationLimit: return kExitFailure;
    default: return kExitInput;
  }
}

namespace cli_detail {

inline std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string constraint_label(const AttackConstraint& c) {
  if (const auto* nb = std::get_if<NormBudget>(&c)) {
    return "budget(p=" + format_double(nb->p_norm) + ";B=" + format_double(nb->budget) + ")";
  }
  return "interval";
}

inline void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kInvalidArgument, "cannot write " + path);
  f << text;
}

inline std::string solution_csv(const Json& sol) {
  std::string x;
  for (const auto& v : sol.at("x")) x += (x.empty() ? "" : ";") + format_double(v.get<double>());
  const Json& slack = sol.at("constraint_slack");
  std::ostringstream s;
  s << "kind,verdict,objective,votes_for_c1,winner,norm_used,constraint_slack,x\n"
    << sol.at("kind").get<std::string>() << ',' << sol.at("verdict").get<std::string>() << ','
    << format_double(sol.at("objective").get<double>()) << ',' << sol.at("votes_for_c1").get<int>() << ','
    << sol.at("winner").get<int>() << ',' << format_double(sol.at("norm_used").get<double>()) << ','
    << (slack.is_string() ? slack.get<std::string>() : format_double(slack.get<double>())) << ',' << x << '\n';
  return s.str();
}

inline AttackSolution solve(const InstanceDocument& d, SolutionKind kind, double eps, const ControlOptions& options) {
  switch (kind) {
    case SolutionKind::kMaxSupport: return max_support(d.instance, d.constraint, eps, options);
    case SolutionKind::kMajority: return majority_control(d.instance, d.constraint, eps, options);
    case SolutionKind::kStochastic: {
      if (!d.stochastic || !std::holds_alternative<LinearModel>(*d.stochastic)) {
        throw Error(ErrorCode::kSchema, "stochastic needs an instance with a linear \"stochastic\" model");
      }
      return stochastic_linear_max(d.instance, std::get<LinearModel>(*d.stochastic), d.constraint, eps);
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown solution kind");
}

inline TcmsInstance random_tcms(int np, int ellp, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Matrix v(np, ellp);
  for (int j = 0; j < np; ++j)
    for (int k = 0; k < ellp; ++k) v(j, k) = static_cast<double>(rng() & 1U);
  return {v};
}

inline Max2SatFormula random_formula(int vars, int clauses, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Max2SatFormula phi;
  phi.num_variables = vars;
  for (int c = 0; c < clauses; ++c) {
    const int a = static_cast<int>(rng() % static_cast<std::uint64_t>(vars));
    int b = static_cast<int>(rng() % static_cast<std::uint64_t>(vars - 1));
    if (b >= a) ++b;
    phi.clauses.push_back({{a, (rng() & 1U) != 0U}, {b, (rng() & 1U) != 0U}});
  }
  return phi;
}

inline std::string clause_text(const Clause& c) {
  auto lit = [](const Literal& l) { return std::string(l.negated ? "~b" : "b") + std::to_string(l.variable + 1); };
  return lit(c.first) + "|" + lit(c.second);
}

struct RandomSpec {
  int count = 0;
  int voters = 5;
  int issues = 3;
  int candidates = 2;
  bool binary = false;
  std::string budget;  // "p:B"; empty means the full interval box
};

inline std::vector<InstanceDocument> random_documents(const RandomSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  AttackConstraint constraint = IntervalBox::full(spec.issues);
  if (!spec.budget.empty()) {
    const auto colon = spec.budget.find(':');
    if (colon == std::string::npos) throw Error(ErrorCode::kInvalidArgument, "--budget expects P:B");
    auto num = [](const std::string& s) { return s == "inf" ? kInfinity : std::stod(s); };
    constraint = NormBudget{num(spec.budget.substr(0, colon)), num(spec.budget.substr(colon + 1))};
  }
  std::vector<InstanceDocument> out;
  for (int t = 0; t < spec.count; ++t) {
    Matrix c(spec.candidates, spec.issues), v(spec.voters, spec.issues);
    for (auto* mat : {&c, &v})
      for (Eigen::Index r = 0; r < mat->rows(); ++r)
        for (int k = 0; k < spec.issues; ++k) (*mat)(r, k) = spec.binary ? static_cast<double>(rng() & 1U) : u(rng);
    Vector w(spec.issues);
    for (int k = 0; k < spec.issues; ++k) w[k] = u(rng) + 1e-3;
    w /= w.sum();
    out.push_back({ElectionInstance(c, v, w, 2.0), constraint, std::nullopt, "random-" + std::to_string(t), {}});
  }
  return out;
}

}  // namespace cli_detail

/// Runs the command line. Output goes to `out` unless --output names a file;
/// diagnostics go to `err`.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  using namespace cli_detail;
  CLI::App app{"Attacks on issue weights in spatial plurality elections"};
  app.require_subcommand(1);

  std::string instance_path, output_path, format = "json";
  double epsilon = kDefaultEps;
  int parallel = 1;
  std::uint64_t seed = 1;
  std::uint64_t cap = kDefaultEnumerationCap;
  auto common = [&](CLI::App* sub, bool needs_instance) {
    auto* opt = sub->add_option("--instance", instance_path, "Instance document (JSON)");
    if (needs_instance) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--output", output_path, "Write the result here instead of stdout");
    sub->add_option("--format", format, "Result format")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--epsilon", epsilon, "Approximation slack for p outside {1, 2, inf}")->check(CLI::PositiveNumber);
    sub->add_option("--parallel", parallel, "Worker threads")->check(CLI::Range(1, 1024));
    sub->add_option("--seed", seed, "Random seed");
    sub->add_option("--cap", cap, "Enumeration cap");
  };

  struct SolveCommand {
    CLI::App* app;
    SolutionKind kind;
  };
  std::vector<SolveCommand> solvers = {
      {app.add_subcommand("max-support", "Largest set of voters that can be made to vote for candidate 0"),
       SolutionKind::kMaxSupport},
      {app.add_subcommand("majority", "Make candidate 0 a plurality winner"), SolutionKind::kMajority},
      {app.add_subcommand("stochastic", "Maximize expected votes under the instance's linear model"),
       SolutionKind::kStochastic},
  };
  for (auto& s : solvers) common(s.app, true);

  auto* gadget = app.add_subcommand("gadget", "Generate a reduction instance");
  gadget->require_subcommand(1);
  int nprime = 1, ellprime = 1, variables = 3, clauses = 10, beta1 = -1, beta2 = -1;
  double alpha = -1.0;
  bool balance_beta = false;
  std::vector<std::pair<CLI::App*, std::string>> tcms_gadgets;
  for (const char* name : {"tcwms", "tcwp", "theta-l"}) {
    auto* g = gadget->add_subcommand(name, std::string("Build the ") + name + " gadget from a random TCMS instance");
    g->add_option("--nprime", nprime, "Voters in the TCMS instance")->check(CLI::PositiveNumber);
    g->add_option("--ellprime", ellprime, "Issues in the TCMS instance")->check(CLI::PositiveNumber);
    common(g, false);
    tcms_gadgets.emplace_back(g, name);
  }
  auto* g2sat = gadget->add_subcommand("max2sat", "Build the sigmoid gadget from a random Max-2SAT formula");
  g2sat->add_option("--variables", variables, "Boolean variables")->check(CLI::Range(2, 20));
  g2sat->add_option("--clauses", clauses, "Clauses")->check(CLI::PositiveNumber);
  g2sat->add_option("--alpha", alpha, "Sigmoid sharpness (default: number of clauses)");
  g2sat->add_option("--beta1", beta1, "First variable block factor (default: number of clauses)");
  g2sat->add_option("--beta2", beta2, "Second variable block factor (default: number of clauses)");
  g2sat->add_flag("--balance-beta", balance_beta, "Derive beta2 from beta1 so both extremes score equally");
  common(g2sat, false);

  auto* oracle = app.add_subcommand("oracle", "Brute-force baselines");
  oracle->require_subcommand(1);
  double resolution = 1.0 / 64;
  std::string objective_name = "max-support";
  auto* grid = oracle->add_subcommand("grid", "Scan the simplex grid");
  grid->add_option("--resolution", resolution, "Grid step")->check(CLI::Range(1e-6, 1.0));
  auto* structured = oracle->add_subcommand("structured", "Scan normalized 0/1 weight patterns");
  for (auto* o : {grid, structured}) {
    o->add_option("--objective", objective_name, "Objective")
        ->check(CLI::IsMember({"max-support", "majority", "expected"}));
    common(o, true);
  }
  auto* pgd = oracle->add_subcommand("pgd", "Projected gradient ascent on the linear model");
  common(pgd, true);

  auto* verify = app.add_subcommand("verify", "Re-certify a solution file against its instance");
  std::string solution_path;
  verify->add_option("solution", solution_path, "Solution file")->required()->check(CLI::ExistingFile);
  common(verify, true);

  auto* bench = app.add_subcommand("bench", "Solve instances and emit CSV rows");
  std::vector<std::string> bench_instances;
  std::string bench_mode = "max-support";
  RandomSpec spec;
  bench->add_option("instances", bench_instances, "Instance documents");
  bench->add_option("--mode", bench_mode, "Solver")->check(CLI::IsMember({"max-support", "majority", "stochastic"}));
  bench->add_option("--random", spec.count, "Also solve this many random instances")->check(CLI::NonNegativeNumber);
  bench->add_option("--voters", spec.voters, "Random instances: voters")->check(CLI::PositiveNumber);
  bench->add_option("--issues", spec.issues, "Random instances: issues")->check(CLI::PositiveNumber);
  bench->add_option("--candidates", spec.candidates, "Random instances: candidates")->check(CLI::Range(2, 64));
  bench->add_flag("--binary", spec.binary, "Random instances: binary positions");
  bench->add_option("--budget", spec.budget, "Random instances: norm budget P:B (default: interval [0,1])");
  common(bench, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  ControlOptions options;
  options.threads = parallel;
  options.enumeration_cap = cap;

  try {
    for (const auto& s : solvers) {
      if (!s.app->parsed()) continue;
      const InstanceDocument d = load_instance(instance_path);
      const AttackSolution sol = solve(d, s.kind, epsilon, options);
      const Json doc = solution_to_json(d, s.kind, sol);
      emit(format == "csv" ? solution_csv(doc) : doc.dump(2) + "\n", output_path, out);
      return sol.verdict == Verdict::kNoWin ? kExitNoWin : kExitOk;
    }

    for (const auto& [g, name] : tcms_gadgets) {
      if (!g->parsed()) continue;
      const TcmsInstance t = random_tcms(nprime, ellprime, seed);
      GadgetInstance built = name == "tcwms" ? build_tcwms_gadget(t)
                             : name == "tcwp" ? build_tcwp_gadget(t)
                                              : build_theta_l_gadget(t);
      InstanceDocument d{std::move(built.instance), IntervalBox::full(0), std::nullopt,
                         name + "-n" + std::to_string(nprime) + "-l" + std::to_string(ellprime) + "-s" +
                             std::to_string(seed),
                         std::move(built.labels)};
      d.constraint = IntervalBox::full(d.instance.num_issues());
      emit(serialize_instance(d), output_path, out);
      return kExitOk;
    }
    if (g2sat->parsed()) {
      const Max2SatFormula phi = random_formula(variables, clauses, seed);
      const int b1 = beta1 >= 0 ? beta1 : clauses;
      int b2 = beta2 >= 0 ? beta2 : clauses;
      const double a = alpha > 0.0 ? alpha : clauses;
      if (balance_beta) b2 = static_cast<int>(std::lround(balanced_beta2(b1, a)));
      Max2SatGadget built = build_max2sat_gadget(phi, b1, b2, a);
      for (std::size_t j = 0; j < phi.clauses.size(); ++j) {
        built.labels[built.labels.size() - phi.clauses.size() + j] += ":" + clause_text(phi.clauses[j]);
      }
      InstanceDocument d{std::move(built.instance), IntervalBox::full(variables + 1), StochasticModel{built.model},
                         "max2sat-v" + std::to_string(variables) + "-c" + std::to_string(clauses) + "-s" +
                             std::to_string(seed),
                         std::move(built.labels)};
      emit(serialize_instance(d), output_path, out);
      return kExitOk;
    }

    if (grid->parsed() || structured->parsed()) {
      const InstanceDocument d = load_instance(instance_path);
      Objective objective = MaxSupportObjective{};
      if (objective_name == "majority") objective = MajorityObjective{};
      if (objective_name == "expected") {
        if (!d.stochastic) throw Error(ErrorCode::kSchema, "objective \"expected\" needs a \"stochastic\" model");
        objective = ExpectedVotesObjective{*d.stochastic};
      }
      StructuredSearchOptions so;
      so.constraint = d.constraint;
      const OracleResult r = grid->parsed() ? grid_search(d.instance, d.constraint, objective, resolution, cap)
                                            : structured_weight_search(d.instance, objective, so);
      Json doc;
      doc["oracle"] = grid->parsed() ? "grid" : "structured";
      doc["objective"] = objective_name;
      doc["found"] = r.found;
      doc["value"] = r.found ? Json(r.value) : Json(nullptr);
      doc["w_prime"] = r.found ? io_detail::to_json(r.w_prime) : Json(nullptr);
      doc["x"] = r.found ? io_detail::to_json(r.x) : Json(nullptr);
      doc["points"] = r.points;
      emit(doc.dump(2) + "\n", output_path, out);
      return r.found ? kExitOk : kExitNoWin;
    }
    if (pgd->parsed()) {
      const InstanceDocument d = load_instance(instance_path);
      if (!d.stochastic || !std::holds_alternative<LinearModel>(*d.stochastic)) {
        throw Error(ErrorCode::kSchema, "pgd needs a linear \"stochastic\" model");
      }
      if (!std::holds_alternative<NormBudget>(d.constraint)) {
        throw Error(ErrorCode::kSchema, "pgd needs a budget constraint");
      }
      const PgdResult r =
          projected_gradient_oracle(d.instance, std::get<LinearModel>(*d.stochastic), std::get<NormBudget>(d.constraint));
      Json doc;
      doc["oracle"] = "pgd";
      doc["value"] = r.value;
      doc["x"] = io_detail::to_json(r.x);
      doc["converged"] = r.converged;
      doc["iterations"] = r.iterations;
      doc["gradient_mapping_norm"] = r.gradient_mapping_norm;
      emit(doc.dump(2) + "\n", output_path, out);
      if (!r.converged) err << "warning: projected gradient did not converge\n";
      return kExitOk;
    }

    if (verify->parsed()) {
      const InstanceDocument d = load_instance(instance_path);
      Json sol;
      try {
        sol = Json::parse(read_file(solution_path));
      } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::kParse, solution_path + ": " + e.what());
      }
      const VerifyReport r = verify_solution(d, sol);
      for (const auto& p : r.problems) err << "verify: " << p << '\n';
      out << (r.ok ? "ok\n" : "mismatch\n");
      return r.ok ? kExitOk : kExitVerify;
    }

    if (bench->parsed()) {
      const SolutionKind kind = bench_mode == "majority"     ? SolutionKind::kMajority
                                : bench_mode == "stochastic" ? SolutionKind::kStochastic
                                                             : SolutionKind::kMaxSupport;
      std::vector<InstanceDocument> docs;
      for (const auto& path : bench_instances) {
        docs.push_back(load_instance(path));
        if (docs.back().id.empty()) docs.back().id = path;
      }
      for (auto& d : random_documents(spec, seed)) {
        if (kind == SolutionKind::kStochastic) d.stochastic = default_linear_model(PreferenceTensor(d.instance));
        docs.push_back(std::move(d));
      }
      std::ostringstream csv;
      csv << "instance,n,ell,m,p,constraint,objective,wall_ms\n";
      for (const auto& d : docs) {
        const auto start = std::chrono::steady_clock::now();
        const AttackSolution sol = solve(d, kind, epsilon, options);
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        char wall[32];
        std::snprintf(wall, sizeof wall, "%.3f", ms);
        csv << d.id << ',' << d.instance.num_voters() << ',' << d.instance.num_issues() << ','
            << d.instance.num_candidates() << ',' << format_double(d.instance.p()) << ','
            << constraint_label(d.constraint) << ',' << format_double(claimed_objective(kind, sol)) << ',' << wall
            << '\n';
      }
      emit(csv.str(), output_path, out);
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace salience
