// bayesens_cli: run prequential experiments, tabulate results, run the
// Monte Carlo checks.
//
//   bayesens_cli run --config configs/heart.cfg --out results/heart
//   bayesens_cli report --in results/heart --format md
//   bayesens_cli verify --check variance --T 10000 --reps 500

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "bayesens/bayesens.hpp"

namespace fs = std::filesystem;
using namespace bayesens;

namespace {

struct RunArgs {
  std::string config;
  std::vector<std::string> methods;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out;
  std::vector<std::string> overrides;
};

int cmd_run(const RunArgs& a) {
  auto c = load_config(a.config);
  for (const auto& kv : a.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    set_config_value(c, std::string(detail::trim(std::string_view(kv).substr(0, eq))),
                     detail::trim(std::string_view(kv).substr(eq + 1)));
  }
  if (!a.methods.empty()) {
    std::string joined;
    for (const auto& m : a.methods) joined += (joined.empty() ? "" : ",") + m;
    set_config_value(c, "methods", joined);
  }
  if (a.trials) c.trials = a.trials;
  if (a.seed_given) c.seed = a.seed;
  c.validate();

  const auto summary = run_experiment(c);
  if (!a.out.empty()) write_outputs(a.out, {summary});
  std::cout << format_report(std::vector{summary}, ReportFormat::md);
  if (!summary.complete()) {
    std::cerr << "partial results: " << summary.failures.size() << " of " << c.trials << " trials failed\n";
    for (const auto& f : summary.failures) std::cerr << "  " << f << '\n';
    return 2;
  }
  return 0;
}

int cmd_report(const std::string& in, const std::string& format) {
  const auto path = fs::path(in) / "trials.csv";
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open '" + path.string() + "'");
  std::cout << format_report(read_trial_rows(is), format == "md" ? ReportFormat::md : ReportFormat::csv);
  return 0;
}

struct VerifyArgs {
  std::string check;
  std::string distribution = "exponential";
  double a = 2.0;
  double b = 4.0;
  double theta = 0.1;
  std::vector<std::size_t> T{10000};
  std::size_t reps = 500;
  std::size_t samples = 200000;
  std::size_t seeds = 10;
  std::uint64_t seed = 1;
  double t0 = 50.0;
  std::vector<double> multipliers{0.25, 0.5, 1.0, 2.0, 4.0};
  std::vector<double> p{1.5, 2.0, 4.0};
  std::string config;
  std::string out;
  std::size_t threads = 0;
};

SyntheticStream make_stream(const VerifyArgs& v, std::uint64_t seed, std::size_t length) {
  if (v.distribution == "exponential") return SyntheticStream::exponential(v.a, seed, length);
  if (v.distribution == "bernoulli") return SyntheticStream::bernoulli(v.a, seed, length);
  if (v.distribution == "uniform") return SyntheticStream::uniform(v.a, v.b, seed, length);
  throw ConfigError("unknown distribution '" + v.distribution + "'");
}

void variance_csv(std::ostream& os, const VerifyArgs& v) {
  const std::size_t T = v.T.front();
  const auto s = make_stream(v, v.seed, T);
  os << "estimator,gamma_tilde,T,replications,empirical,predicted,half_width,slow_regime\n";
  auto row = [&](const VarianceReport& r, double gt) {
    os << r.estimator << ',' << gt << ',' << T << ',' << r.replications << ',' << r.empirical << ','
       << r.predicted << ',' << r.half_width << ',' << (r.slow_regime ? 1 : 0) << '\n';
  };
  row(mc_variance(s, EstimatorSpec::bayes(), v.theta, T, v.reps, v.threads), 0.0);
  const double opt = optimal_gamma_tilde(s);
  for (double mult : v.multipliers) {
    const double gt = mult * opt;
    if (slow_regime(s, gt)) {
      os << "sgd," << gt << ',' << T << ",0,,,,1\n";
      continue;
    }
    row(mc_variance(s, EstimatorSpec::sgd(gt, v.t0), v.theta, T, v.reps, v.threads), gt);
  }
}

void bound_csv(std::ostream& os, const VerifyArgs& v) {
  if (v.config.empty()) throw ConfigError("--check bound needs --config");
  const auto c = load_config(v.config);
  c.validate();
  const auto ds = load_dataset(c.dataset, c.display_name());
  const auto kind = c.loss_for(Method::bayes_basic);
  // moments: empirical means over the evaluation split stand in for population means
  os << "dataset,trial,p,error,bound,margin,learners_used,learners_excluded,moments\n";
  for (std::size_t t = 0; t < c.trials; ++t) {
    const auto sp = split(ds, {c.train_fraction, c.seed, c.trials}, t);
    const auto setup = make_trial_setup(c, sp.train, ds.dimension, t);
    for (double p : v.p) {
      const auto r = check_bound(sp.eval, setup.pool, kind, p, c.binary_outputs);
      os << c.display_name() << ',' << t << ',' << p << ',' << r.error << ',' << r.bound << ',' << r.margin() << ','
         << r.learners_used << ',' << r.learners_excluded << ",plug-in\n";
      if (r.learners_excluded)
        std::cerr << "warning: trial " << t << ": " << r.learners_excluded << " learners with zero mean loss excluded\n";
    }
  }
}

void normality_csv(std::ostream& os, const VerifyArgs& v) {
  os << "seed,T,samples,ks,mean,variance\n";
  for (std::size_t k = 0; k < v.seeds; ++k)
    for (std::size_t T : v.T) {
      const auto r = check_normality(make_stream(v, v.seed + k, T), T, v.samples, v.theta);
      os << v.seed + k << ',' << T << ',' << r.samples << ',' << r.ks << ',' << r.mean << ',' << r.variance << '\n';
    }
}

void gap_csv(std::ostream& os, const VerifyArgs& v) {
  const auto h = draw_history(make_stream(v, v.seed, v.T.front()));
  os << "t,gap,gap_sqrt_t\n";
  for (const auto& g : check_gap(h, {}, v.theta)) os << g.t << ',' << g.gap << ',' << g.scaled << '\n';
}

int cmd_verify(const VerifyArgs& v) {
  std::ofstream file;
  if (!v.out.empty()) {
    file.open(v.out);
    if (!file) throw ConfigError("cannot write '" + v.out + "'");
  }
  std::ostream& os = v.out.empty() ? std::cout : file;
  os.precision(10);
  if (v.check == "variance") variance_csv(os, v);
  else if (v.check == "bound") bound_csv(os, v);
  else if (v.check == "normality") normality_csv(os, v);
  else gap_csv(os, v);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian online classifier-ensemble weights"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "run a prequential experiment");
  run_cmd->add_option("--config", run.config, "key = value configuration file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--method", run.methods, "methods to compare (overrides the config)");
  run_cmd->add_option("--trials", run.trials, "number of trials");
  auto* seed_opt = run_cmd->add_option("--seed", run.seed, "master seed");
  run_cmd->add_option("--out", run.out, "directory for CSV results");
  run_cmd->add_option("--set", run.overrides, "extra key=value overrides");

  std::string report_in, report_format = "md";
  auto* report_cmd = app.add_subcommand("report", "tabulate mean error per dataset and method");
  report_cmd->add_option("--in", report_in, "directory written by run --out")->required();
  report_cmd->add_option("--format", report_format)->check(CLI::IsMember({"csv", "md"}));

  VerifyArgs ver;
  auto* verify_cmd = app.add_subcommand("verify", "Monte Carlo checks, CSV on stdout");
  verify_cmd->add_option("--check", ver.check)->required()->check(CLI::IsMember({"variance", "bound", "normality", "gap"}));
  verify_cmd->add_option("--distribution", ver.distribution)->check(CLI::IsMember({"exponential", "bernoulli", "uniform"}));
  verify_cmd->add_option("--a", ver.a, "exponential mean, bernoulli probability, or uniform lower end");
  verify_cmd->add_option("--b", ver.b, "uniform upper end");
  verify_cmd->add_option("--theta", ver.theta);
  verify_cmd->add_option("--T", ver.T, "stream length(s)");
  verify_cmd->add_option("--reps", ver.reps, "Monte Carlo replications");
  verify_cmd->add_option("--samples", ver.samples, "posterior draws for normality");
  verify_cmd->add_option("--seeds", ver.seeds, "number of seeds for normality");
  verify_cmd->add_option("--seed", ver.seed);
  verify_cmd->add_option("--t0", ver.t0, "SGD step offset");
  verify_cmd->add_option("--multipliers", ver.multipliers, "SGD gamma_tilde as multiples of the optimum");
  verify_cmd->add_option("--p", ver.p, "bound exponents, each > 1");
  verify_cmd->add_option("--config", ver.config, "experiment config for --check bound");
  verify_cmd->add_option("--out", ver.out, "CSV file (default stdout)");
  verify_cmd->add_option("--threads", ver.threads);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run_cmd) {
      run.seed_given = seed_opt->count() > 0;
      return cmd_run(run);
    }
    if (*report_cmd) return cmd_report(report_in, report_format);
    return cmd_verify(ver);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
