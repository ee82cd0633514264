#pragma once

// Command-line front end. run_cli is kept separate from main so the tests
// can drive it with in-memory streams.
//
// Exit codes: 0 success, 1 coverage check failed, 2 usage or input error,
// 3 domain error.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "splitkl/splitkl.hpp"

namespace splitkl::cli {

using Json = nlohmann::ordered_json;

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kUsage = 2, kDomain = 3 };

/// Usage problem detected after parsing (bad file, bad list syntax).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline Json number(double x) {
  if (!std::isfinite(x)) return nullptr;
  return round12(x);
}

inline Json numbers(const std::vector<double>& xs) {
  Json arr = Json::array();
  for (double x : xs) arr.push_back(number(x));
  return arr;
}

inline Json report_json(const BoundReport& r) {
  Json params = Json::object();
  for (const auto& [k, v] : r.params) params[k] = number(v);
  return Json{{"name", r.name}, {"value", number(r.value)}, {"delta", number(r.delta)}, {"params", params}};
}

inline std::vector<double> parse_list(const std::string& text, std::size_t expected, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(splitkl::detail::parse_real(item, 0));
    } catch (const ParseError&) {
      throw UsageError(what + ": '" + item + "' is not a number");
    }
  }
  if (out.size() != expected) {
    throw UsageError(what + " expects " + std::to_string(expected) + " comma-separated values");
  }
  return out;
}

inline std::vector<std::string> parse_names(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(splitkl::detail::trim(item));
  return out;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  return in;
}

// Writes `text` to `path`, or to `out` when the path is empty or "-".
inline void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot write " + path);
  f << text;
  if (!f) throw UsageError("failed writing " + path);
}

struct BoundArgs {
  std::string bound = "all";
  double delta = 0.05;
  std::string input;
};

inline int cmd_bound(const BoundArgs& a, std::ostream& out) {
  std::ifstream in = open_input(a.input);
  const SampleFile sf = read_sample_file(in);
  const EmpiricalSummary s = EmpiricalSummary::from_samples(sf.values, sf.lo, sf.hi);
  std::vector<BoundReport> reports;
  auto want = [&](const char* name) { return a.bound == "all" || a.bound == name; };
  if (want("kl")) reports.push_back({"kl", kl_upper_bound(s.mean, s.n, a.delta, s.lo, s.hi), a.delta, {}});
  if (want("eb")) reports.push_back({"eb", empirical_bernstein_bound(s, a.delta), a.delta, {}});
  if (want("ub")) reports.push_back(unexpected_bernstein_grid_bound(s, a.delta));
  if (want("skl")) {
    const SplitSummary ss = split_decompose(sf.values, sf.mu, sf.lo, sf.hi);
    reports.push_back({"skl", split_kl_bound(ss, a.delta), a.delta, {{"mu", sf.mu}}});
  }
  Json doc{{"n", s.n}, {"lo", number(sf.lo)}, {"hi", number(sf.hi)}, {"mu", number(sf.mu)},
           {"mean", number(s.mean)}, {"reports", Json::array()}};
  for (const auto& r : reports) doc["reports"].push_back(report_json(r));
  out << doc.dump(2) << '\n';
  return kOk;
}

struct SimulateArgs {
  std::string mode;
  std::size_t n = 100;
  double delta = 0.05;
  std::size_t repeats = 100;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::string out_path;
};

inline int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  std::vector<SweepRow> rows;
  if (a.mode == "symmetric") {
    rows = sweep_ternary(TernaryMode::symmetric, a.n, a.delta, a.repeats, a.seed, a.threads);
  } else if (a.mode == "skew_high") {
    rows = sweep_ternary(TernaryMode::skew_high, a.n, a.delta, a.repeats, a.seed, a.threads);
  } else if (a.mode == "skew_low") {
    rows = sweep_ternary(TernaryMode::skew_low, a.n, a.delta, a.repeats, a.seed, a.threads);
  } else if (a.mode == "constant_mean") {
    rows = sweep_beta(BetaMode::constant_mean, a.n, a.delta, a.repeats, a.seed, a.threads);
  } else if (a.mode == "spectrum") {
    rows = sweep_beta(BetaMode::spectrum, a.n, a.delta, a.repeats, a.seed, a.threads);
  } else {
    throw UsageError("unknown mode " + a.mode);
  }
  std::ostringstream csv;
  write_sweep_csv(csv, rows);
  emit(a.out_path, csv.str(), out);
  return kOk;
}

struct CoverageArgs {
  std::string ternary;
  std::string beta;
  std::uint64_t trials = 10000;
  std::size_t n = 100;
  double delta = 0.05;
  std::optional<double> ceiling_delta;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::string out_path;
};

inline int cmd_coverage(const CoverageArgs& a, std::ostream& out) {
  if (a.ternary.empty() == a.beta.empty()) throw UsageError("give exactly one of --ternary or --beta");
  if (a.trials < 100) throw UsageError("--trials must be at least 100");
  CoverageResult res;
  Json dist;
  if (!a.ternary.empty()) {
    const auto p = parse_list(a.ternary, 3, "--ternary");
    const TernarySpec spec{p[0], p[1], p[2]};
    res = coverage_experiment(spec, a.n, a.delta, a.trials, a.seed, a.threads);
    dist = Json{{"family", "ternary"}, {"p_minus1", number(p[0])}, {"p_0", number(p[1])}, {"p_1", number(p[2])}};
  } else {
    const auto p = parse_list(a.beta, 2, "--beta");
    const BetaSpec spec{p[0], p[1]};
    res = coverage_experiment(spec, a.n, a.delta, a.trials, a.seed, a.threads);
    dist = Json{{"family", "beta"}, {"alpha", number(p[0])}, {"beta", number(p[1])}};
  }
  const double check_delta = a.ceiling_delta.value_or(a.delta);
  splitkl::detail::require_confidence(check_delta);
  const double ceiling = coverage_ceiling(check_delta, res.trials);
  bool pass = true;
  Json bounds = Json::array();
  for (std::size_t b = 0; b < res.bounds.size(); ++b) {
    const bool ok = res.frequency(b) <= ceiling;
    pass = pass && ok;
    bounds.push_back(Json{{"name", res.bounds[b]},
                          {"violations", res.violations[b]},
                          {"frequency", number(res.frequency(b))},
                          {"pass", ok}});
  }
  Json doc{{"distribution", dist},   {"true_mean", number(res.true_mean)}, {"n", res.n},
           {"delta", number(a.delta)}, {"trials", res.trials},            {"seed", a.seed},
           {"ceiling_delta", number(check_delta)}, {"ceiling", number(ceiling)}, {"bounds", bounds},
           {"pass", pass}};
  emit(a.out_path, doc.dump(2) + "\n", out);
  return pass ? kOk : kCheckFailed;
}

struct MvArgs {
  std::string synthetic;
  std::string losses;
  std::string bounds = "tnd,cctnd,ccpbb,ccpbub,ccpbskl";
  std::optional<double> alpha;
  double delta = 0.05;
  std::string eval;
  std::string emit_losses;
  std::string emit_eval;
  std::size_t hypotheses = 7;
  std::size_t examples = 2000;
  double bagging = 0.8;
  std::size_t eval_examples = 10000;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::string out_path;
};

inline int cmd_mv(const MvArgs& a, std::ostream& out) {
  if (a.synthetic.empty() == a.losses.empty()) throw UsageError("give exactly one of --synthetic or --losses");
  const std::vector<std::string> names = parse_names(a.bounds);
  for (const auto& name : names) {
    const auto& known = mv_bound_names();
    if (std::find(known.begin(), known.end(), name) == known.end()) throw UsageError("unknown bound " + name);
  }

  PredictionLossMatrix plm;
  std::optional<EvalMatrix> eval;
  std::optional<ErrorModel> model;
  Json source;
  if (!a.synthetic.empty()) {
    const auto& profiles = noise_profiles();
    if (std::find(profiles.begin(), profiles.end(), a.synthetic) == profiles.end()) {
      throw UsageError("unknown profile " + a.synthetic);
    }
    SyntheticEnsemble ens = synth_ensemble(a.hypotheses, a.examples, a.synthetic, a.bagging, a.seed, a.eval_examples);
    plm = std::move(ens.train);
    model = std::move(ens.model);
    if (a.eval_examples > 0) eval = std::move(ens.eval);
    source = Json{{"synthetic", a.synthetic}, {"seed", a.seed}, {"bagging", number(a.bagging)}};
  } else {
    std::ifstream in = open_input(a.losses);
    plm = read_loss_csv(in);
    source = Json{{"losses", a.losses}};
  }
  if (!a.eval.empty()) {
    std::ifstream in = open_input(a.eval);
    eval = read_eval_csv(in);
    if (eval->hypotheses() != plm.hypotheses()) throw UsageError("evaluation CSV has a different number of hypotheses");
  }
  if (!a.emit_losses.empty()) {
    std::ostringstream csv;
    write_loss_csv(csv, plm);
    emit(a.emit_losses, csv.str(), out);
  }
  if (!a.emit_eval.empty() && eval) {
    std::ostringstream csv;
    write_eval_csv(csv, *eval);
    emit(a.emit_eval, csv.str(), out);
  }

  const TandemStats ts = compute_tandem_stats(plm);
  MvOptions opt;
  opt.delta = a.delta;
  opt.threads = a.threads;
  if (a.alpha) {
    require_alpha(*a.alpha);
    opt.alpha_grid = {*a.alpha};
  }
  const std::vector<double> pi(ts.hypotheses(), 1.0 / static_cast<double>(ts.hypotheses()));

  Json results = Json::array();
  for (const auto& name : names) {
    const MvResult r = optimize_bound(name, ts, pi, opt);
    Json entry{{"name", r.name}, {"value", number(r.value)}, {"rho", numbers(r.weights.rho)}};
    entry["alpha"] = number(r.params.alpha);
    entry["lambda"] = number(r.params.lambda);
    entry["gamma"] = number(r.params.gamma);
    if (name == "cctnd") entry["gamma_upper"] = number(r.params.gamma_upper);
    entry["iterations"] = r.iterations;
    entry["prior_value"] = number(r.prior_value);
    if (eval) entry["mv_risk"] = number(mv_risk(*eval, r.weights.rho));
    if (model) entry["true_mv_risk"] = number(true_mv_risk(*model, r.weights.rho));
    results.push_back(entry);
  }
  Json doc{{"source", source},
           {"hypotheses", ts.hypotheses()},
           {"examples", plm.examples()},
           {"n", ts.n},
           {"m", ts.m},
           {"delta", number(a.delta)},
           {"single_loss", numbers(ts.single_loss)}};
  if (eval) doc["eval_examples"] = eval->examples();
  doc["bounds"] = results;
  emit(a.out_path, doc.dump(2) + "\n", out);
  return kOk;
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Concentration, PAC-Bayes and majority-vote bounds", "splitkl"};
  app.require_subcommand(1);

  detail::BoundArgs bound_args;
  auto* bound = app.add_subcommand("bound", "bounds on the mean of a sample file");
  bound->add_option("--bound", bound_args.bound, "kl, eb, ub, skl or all")
      ->check(CLI::IsMember({"kl", "eb", "ub", "skl", "all"}));
  bound->add_option("--delta", bound_args.delta, "confidence parameter");
  bound->add_option("input", bound_args.input, "sample file")->required();

  detail::SimulateArgs sim_args;
  auto* sim = app.add_subcommand("simulate", "gap sweep over a distribution family, CSV output");
  sim->add_option("--mode", sim_args.mode, "symmetric, skew_high, skew_low, constant_mean or spectrum")
      ->required()
      ->check(CLI::IsMember({"symmetric", "skew_high", "skew_low", "constant_mean", "spectrum"}));
  sim->add_option("--n", sim_args.n, "sample size");
  sim->add_option("--delta", sim_args.delta, "confidence parameter");
  sim->add_option("--repeats", sim_args.repeats, "samples per grid point");
  sim->add_option("--seed", sim_args.seed, "master seed");
  sim->add_option("--threads", sim_args.threads, "worker threads");
  sim->add_option("--out", sim_args.out_path, "output file (default stdout)");

  detail::CoverageArgs cov_args;
  auto* cov = app.add_subcommand("coverage", "Monte Carlo violation frequencies, JSON output");
  cov->add_option("--ternary", cov_args.ternary, "p_minus1,p_0,p_1");
  cov->add_option("--beta", cov_args.beta, "alpha,beta");
  cov->add_option("--trials", cov_args.trials, "number of samples (>= 100)");
  cov->add_option("--n", cov_args.n, "sample size");
  cov->add_option("--delta", cov_args.delta, "confidence parameter of the bounds");
  cov->add_option("--ceiling-delta", cov_args.ceiling_delta, "delta used for the pass ceiling (default --delta)");
  cov->add_option("--seed", cov_args.seed, "master seed");
  cov->add_option("--threads", cov_args.threads, "worker threads");
  cov->add_option("--out", cov_args.out_path, "output file (default stdout)");

  detail::MvArgs mv_args;
  auto* mv = app.add_subcommand("mv", "optimize majority-vote bounds, JSON output");
  mv->add_option("--synthetic", mv_args.synthetic, "identical, independent or correlated");
  mv->add_option("--losses", mv_args.losses, "loss CSV hypothesis_id,example_id,loss,oob");
  mv->add_option("--bounds", mv_args.bounds, "comma-separated subset of tnd,cctnd,ccpbb,ccpbub,ccpbskl");
  mv->add_option("--alpha", mv_args.alpha, "fix alpha instead of searching the grid");
  mv->add_option("--delta", mv_args.delta, "confidence parameter");
  mv->add_option("--eval", mv_args.eval, "evaluation CSV hypothesis_id,example_id,prediction,label");
  mv->add_option("--emit-losses", mv_args.emit_losses, "write the loss CSV that was used");
  mv->add_option("--emit-eval", mv_args.emit_eval, "write the evaluation CSV that was used");
  mv->add_option("--hypotheses", mv_args.hypotheses, "synthetic: number of hypotheses");
  mv->add_option("--examples", mv_args.examples, "synthetic: number of training examples");
  mv->add_option("--bagging", mv_args.bagging, "synthetic: bootstrap size as a fraction of examples");
  mv->add_option("--eval-examples", mv_args.eval_examples, "synthetic: number of evaluation examples");
  mv->add_option("--seed", mv_args.seed, "synthetic: seed");
  mv->add_option("--threads", mv_args.threads, "worker threads for the alpha grid");
  mv->add_option("--out", mv_args.out_path, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (*bound) return detail::cmd_bound(bound_args, out);
    if (*sim) return detail::cmd_simulate(sim_args, out);
    if (*cov) return detail::cmd_coverage(cov_args, out);
    if (*mv) return detail::cmd_mv(mv_args, out);
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const EmptyOverlapError& e) {
    err << "domain error: " << e.what() << " (pair " << e.first() << "," << e.second() << ")\n";
    return kDomain;
  } catch (const std::domain_error& e) {
    err << "domain error: " << e.what() << '\n';
    return kDomain;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

}  // namespace splitkl::cli
