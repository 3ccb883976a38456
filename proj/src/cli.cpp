#include "msod/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "msod/bench.hpp"
#include "msod/designs.hpp"
#include "msod/errors.hpp"
#include "msod/inference.hpp"
#include "msod/io.hpp"
#include "msod/optimizer.hpp"
#include "msod/rerand.hpp"
#include "msod/risk.hpp"

namespace msod::cli {

namespace {

struct Options {
  std::string covariates;
  std::string config;
  std::string method;
  std::optional<double> alpha;
  std::optional<int> t_count;
  double c = 1.0;
  std::uint64_t seed = 0;
  std::string out;
  std::optional<std::int64_t> draws;
  std::optional<int> n;
  int b = 3;
  std::string design;
  std::string assignment;
  std::string outcomes;
  std::string w;
  std::string statistic = "abs_mean_diff";
  std::string sidecar;
};

void emit(const Options& opt, const std::string& text, std::ostream& out) {
  if (opt.out.empty() || opt.out == "-") {
    out << text;
    return;
  }
  std::ofstream file(opt.out, std::ios::binary);
  if (!file) throw ValidationError("cannot write '" + opt.out + "'");
  file << text;
  if (!file) throw ValidationError("failed writing '" + opt.out + "'");
}

std::vector<int> parse_sign_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
    if (item == "1" || item == "+1") {
      out.push_back(1);
    } else if (item == "-1") {
      out.push_back(-1);
    } else {
      throw ValidationError("--w expects a comma-separated list of +1/-1, got '" + item + "'");
    }
  }
  return out;
}

std::optional<CovariateMatrix> maybe_covariates(const Options& opt) {
  if (opt.covariates.empty()) return std::nullopt;
  return read_covariates_csv(opt.covariates);
}

// A config may hold the kernel directly or under "kernel".
KernelSpec kernel_from_config(const Options& opt) {
  if (opt.config.empty()) return {};
  const Json j = read_json_file(opt.config);
  const std::string base = parent_dir(opt.config);
  if (j.is_object() && j.contains("kernel")) return kernel_from_json(j.at("kernel"), base);
  return kernel_from_json(j, base);
}

GramMatrix make_gram(const KernelSpec& spec, const std::optional<CovariateMatrix>& x, int n) {
  if (x) {
    if (x->n() != n) throw ValidationError("covariate rows do not match n");
    return build_gram(*x, spec);
  }
  if (spec.kind == KernelKind::cr_reference) return cr_reference_gram(n, spec.ridge);
  if (spec.kind == KernelKind::singleton) {
    if (!spec.mu0) throw ValidationError("singleton kernel requires mu0");
    if (spec.mu0->size() != n) throw ValidationError("mu0 length does not match n");
    return singleton_gram(*spec.mu0, spec.ridge);
  }
  throw ValidationError("kernel '" + to_string(spec.kind) + "' needs --covariates");
}

int cmd_design(const Options& opt, std::ostream& out) {
  DesignRequest request;
  std::string base;
  if (!opt.config.empty()) {
    base = parent_dir(opt.config);
    request = design_request_from_json(read_json_file(opt.config), base);
  }
  if (!opt.method.empty()) request.method = opt.method;
  if (opt.alpha) request.alpha = *opt.alpha;
  if (opt.t_count) request.t_count = *opt.t_count;
  if (!opt.w.empty()) request.w0 = parse_sign_list(opt.w);
  if (request.method == "icmsod" && !(request.alpha > 0.0 && request.alpha <= 1.0)) {
    throw ValidationError("alpha must lie in (0, 1]");
  }
  if (request.method == "icmsod" && request.t_count &&
      request.alpha * *request.t_count < 1.0 - 1e-12) {
    // Checked before touching covariates so the message is the constraint itself.
    std::ostringstream msg;
    msg << "T = " << *request.t_count << " with alpha = " << request.alpha
        << "; the inference constraint needs T >= 1/alpha = " << 1.0 / request.alpha;
    throw InfeasibleError(msg.str());
  }

  std::optional<CovariateMatrix> x = maybe_covariates(opt);
  Design design = [&] {
    if (!x) {
      if (request.method == "cr") {
        if (!opt.n) throw ValidationError("design --method cr needs --n or --covariates");
        return design_cr(*opt.n);
      }
      if (request.method == "single") {
        if (!request.w0) throw ValidationError("design --method single needs --w");
        return design_single(Assignment(*request.w0));
      }
      throw ValidationError("method '" + request.method + "' needs --covariates");
    }
    if (opt.n && *opt.n != x->n()) throw ValidationError("--n does not match the covariates");
    return build_design(request, *x);
  }();
  emit(opt, dump_json(design_to_json(design)), out);
  return 0;
}

int cmd_evaluate(const Options& opt, std::ostream& out) {
  if (opt.design.empty()) throw ValidationError("evaluate needs --design");
  const Design design = design_from_json(read_json_file(opt.design));
  const GramMatrix gram = make_gram(kernel_from_config(opt), maybe_covariates(opt), design.n());
  emit(opt, dump_json(risk_to_json(minimax_risk(design, gram, opt.c))), out);
  return 0;
}

int cmd_assign(const Options& opt, std::ostream& out) {
  if (opt.design.empty()) throw ValidationError("assign needs --design");
  const Design design = design_from_json(read_json_file(opt.design));
  emit(opt, dump_json(assignment_to_json(sample_assignment(design, opt.seed))), out);
  return 0;
}

int cmd_test(const Options& opt, std::ostream& out) {
  if (opt.design.empty() || opt.assignment.empty() || opt.outcomes.empty()) {
    throw ValidationError("test needs --design, --assignment and --outcomes");
  }
  const Design design = design_from_json(read_json_file(opt.design));
  const Assignment w = assignment_from_json(read_json_file(opt.assignment));
  const Eigen::VectorXd y = read_column_csv(opt.outcomes, "y_obs");
  const TestStatisticKind kind = statistic_kind_from_string(opt.statistic);
  const bool exact = !opt.draws || *opt.draws == 0;
  if (exact && !design.is_explicit()) {
    throw ValidationError("exact p-values need an enumerated design; pass --draws");
  }
  const TestResult result = exact ? p_value_exact(design, w, y, kind)
                                  : p_value_mc(design, w, y, kind, *opt.draws, opt.seed);
  emit(opt, dump_json(test_result_to_json(result)), out);
  return 0;
}

int cmd_simulate(const Options& opt, std::ostream& out) {
  if (opt.config.empty()) throw ValidationError("simulate needs --config");
  const std::string raw = read_text_file(opt.config);
  Json j;
  try {
    j = Json::parse(raw);
  } catch (const Json::parse_error& e) {
    throw ValidationError("'" + opt.config + "' is not valid JSON: " + e.what());
  }
  SimConfig config = sim_config_from_json(j, parent_dir(opt.config));
  if (opt.draws) config.replications = *opt.draws;
  if (opt.seed != 0) config.seed = opt.seed;
  const SimReport report = run_simulation(config);
  std::ostringstream csv;
  write_sim_report_csv(csv, report);
  emit(opt, csv.str(), out);

  std::string sidecar = opt.sidecar;
  if (sidecar.empty() && !opt.out.empty() && opt.out != "-") sidecar = opt.out + ".json";
  if (!sidecar.empty()) {
    std::string inputs = raw;
    if (config.covariates.kind == CovariateSource::Kind::csv) {
      inputs += read_text_file(config.covariates.path);
    }
    Json meta{{"config", j},
              {"config_path", opt.config},
              {"replications", config.replications},
              {"seed", config.seed},
              {"input_sha1", git_blob_sha1(inputs)},
              {"report_sha1", git_blob_sha1(csv.str())}};
    std::ofstream file(sidecar, std::ios::binary);
    if (!file) throw ValidationError("cannot write '" + sidecar + "'");
    file << dump_json(meta);
  }
  return 0;
}

int cmd_example1(const Options& opt, std::ostream& out) {
  std::ostringstream csv;
  write_covariates_csv(csv, example1_covariates(opt.b));
  emit(opt, csv.str(), out);
  return 0;
}

int cmd_gram(const Options& opt, std::ostream& out) {
  const std::optional<CovariateMatrix> x = maybe_covariates(opt);
  const KernelSpec spec = kernel_from_config(opt);
  int n = 0;
  if (x) {
    n = x->n();
  } else if (opt.n) {
    n = *opt.n;
  } else if (spec.mu0) {
    n = static_cast<int>(spec.mu0->size());
  } else {
    throw ValidationError("gram needs --covariates (or --n for cr_reference)");
  }
  std::ostringstream csv;
  write_matrix_csv(csv, make_gram(spec, x, n).matrix().dense());
  emit(opt, csv.str(), out);
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Minimax experimental designs: build, evaluate, sample and test.", "msod"};
  app.require_subcommand(1);
  Options opt;

  auto add_out = [&](CLI::App* sub) { sub->add_option("--out", opt.out, "Output path (default stdout)"); };
  auto add_covariates = [&](CLI::App* sub) {
    sub->add_option("--covariates", opt.covariates, "Covariate CSV with header")->check(CLI::ExistingFile);
  };
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "JSON config")->check(CLI::ExistingFile);
  };

  CLI::App* design = app.add_subcommand("design", "Build a design and write design JSON");
  add_covariates(design);
  add_config(design);
  design->add_option("--method", opt.method, "cr | single | psod | msod-exact | icmsod | rerand")
      ->check(CLI::IsMember({"cr", "single", "psod", "msod-exact", "icmsod", "rerand"}));
  design->add_option("--alpha", opt.alpha, "Test level for icmsod");
  design->add_option("--t", opt.t_count, "Candidate pairs for icmsod");
  design->add_option("--n", opt.n, "Units (cr without covariates)");
  design->add_option("--w", opt.w, "Assignment for single, e.g. 1,-1,-1,1");
  add_out(design);

  CLI::App* evaluate = app.add_subcommand("evaluate", "Minimax risk of a design");
  evaluate->add_option("--design", opt.design, "Design JSON")->check(CLI::ExistingFile);
  add_covariates(evaluate);
  add_config(evaluate);
  evaluate->add_option("--c", opt.c, "Budget C (default 1)");
  add_out(evaluate);

  CLI::App* assign = app.add_subcommand("assign", "Draw an assignment from a design");
  assign->add_option("--design", opt.design, "Design JSON")->check(CLI::ExistingFile);
  assign->add_option("--seed", opt.seed, "Seed (default 0)");
  add_out(assign);

  CLI::App* test = app.add_subcommand("test", "Randomization test of the sharp null");
  test->add_option("--design", opt.design, "Design JSON")->check(CLI::ExistingFile);
  test->add_option("--assignment", opt.assignment, "Assignment JSON")->check(CLI::ExistingFile);
  test->add_option("--outcomes", opt.outcomes, "CSV with column y_obs")->check(CLI::ExistingFile);
  test->add_option("--statistic", opt.statistic, "abs_mean_diff | abs_t_pooled | abs_t_welch");
  test->add_option("--draws", opt.draws, "Monte Carlo draws (0 or absent: exact)");
  test->add_option("--seed", opt.seed, "Seed for Monte Carlo draws");
  add_out(test);

  CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo comparison of designs");
  add_config(simulate);
  simulate->add_option("--draws", opt.draws, "Override the number of replications");
  simulate->add_option("--seed", opt.seed, "Override the config seed");
  simulate->add_option("--sidecar", opt.sidecar, "JSON sidecar path (default <out>.json)");
  add_out(simulate);

  CLI::App* example1 = app.add_subcommand("example1", "Write the Example 1 covariates");
  example1->add_option("--b", opt.b, "n = 2^b units (2..10)");
  add_out(example1);

  CLI::App* gram = app.add_subcommand("gram", "Write a Gram matrix as CSV");
  add_covariates(gram);
  add_config(gram);
  gram->add_option("--n", opt.n, "Units (cr_reference without covariates)");
  add_out(gram);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << app.help();
    return 2;
  }

  try {
    if (design->parsed()) return cmd_design(opt, out);
    if (evaluate->parsed()) return cmd_evaluate(opt, out);
    if (assign->parsed()) return cmd_assign(opt, out);
    if (test->parsed()) return cmd_test(opt, out);
    if (simulate->parsed()) return cmd_simulate(opt, out);
    if (example1->parsed()) return cmd_example1(opt, out);
    if (gram->parsed()) return cmd_gram(opt, out);
  } catch (const InfeasibleError& e) {
    err << "infeasible: " << e.what() << "\n";
    return 3;
  } catch (const ConvergenceError& e) {
    err << "no convergence: " << e.what() << "\n";
    return 4;
  } catch (const ValidationError& e) {
    err << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  err << app.help();
  return 2;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace msod::cli
