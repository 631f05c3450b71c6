#include <charconv>
#include <cmath>
#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "privsbm/errors.hpp"
#include "privsbm/experiments.hpp"
#include "privsbm/graph.hpp"
#include "privsbm/mechanisms.hpp"
#include "privsbm/rng.hpp"
#include "privsbm/thresholds.hpp"

namespace {

using namespace privsbm;

std::string format_double(double value) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

// Every randomized subcommand reports the seed it actually used, so any run
// can be replayed even when --seed was omitted.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& seed) {
  if (seed.has_value()) return *seed;
  std::random_device device;
  const std::uint64_t drawn =
      (static_cast<std::uint64_t>(device()) << 32) ^ device();
  std::cerr << "--seed not given; using seed " << drawn << "\n";
  return drawn;
}

void print_labeling(const Labeling& sigma) {
  for (int i = 0; i < sigma.n(); ++i) {
    if (i > 0) std::cout << ' ';
    std::cout << sigma.labels[i];
  }
  std::cout << '\n';
}

struct MechanismFlags {
  std::string handle;
  int r = 2;
  double epsilon = 1.0;
  double delta = 0.0;
  std::optional<double> p;
  std::optional<double> q;
  std::optional<double> a;
  std::optional<double> b;
  std::string stability_mode = "gap";
  int cap = 0;
};

void add_mechanism_flags(CLI::App* sub, MechanismFlags* flags,
                         bool handle_required) {
  auto* handle = sub->add_option("--mechanism", flags->handle,
                                 "mechanism handle (mle, sdp, spectral, "
                                 "stability-mle, stability-sdp, bayesian, "
                                 "exponential, rr-sdp, rr-spectral)");
  if (handle_required) handle->required();
  sub->add_option("--r", flags->r, "number of communities");
  sub->add_option("--epsilon", flags->epsilon, "privacy budget epsilon");
  sub->add_option("--delta", flags->delta, "privacy budget delta");
  sub->add_option("--p", flags->p, "intra-community edge probability");
  sub->add_option("--q", flags->q, "inter-community edge probability");
  sub->add_option("--a", flags->a, "intra-community rate constant");
  sub->add_option("--b", flags->b, "inter-community rate constant");
  sub->add_option("--stability-mode", flags->stability_mode,
                  "stability statistic: exact or gap")
      ->check(CLI::IsMember({"exact", "gap"}));
  sub->add_option("--cap", flags->cap, "exact stability search cap");
}

MechanismSpec build_spec(const MechanismFlags& flags, int n) {
  MechanismSpec spec;
  spec.handle = flags.handle;
  spec.r = flags.r;
  spec.budget.epsilon = flags.epsilon;
  spec.budget.delta = flags.delta;
  if (flags.p.has_value() && flags.q.has_value()) {
    spec.probs = {*flags.p, *flags.q};
  } else if (flags.a.has_value() && flags.b.has_value()) {
    spec.probs = dense_probs({n, flags.r, *flags.a, *flags.b});
  }
  spec.mode = flags.stability_mode == "exact" ? StabilityMode::kExactCapped
                                              : StabilityMode::kGapLowerBound;
  spec.cap = flags.cap;
  return spec;
}

int run_generate(int n, int r, const std::optional<double>& a,
                 const std::optional<double>& b, const std::optional<double>& p,
                 const std::optional<double>& q,
                 const std::optional<std::uint64_t>& seed,
                 const std::string& out) {
  EdgeProbs probs;
  if (p.has_value() && q.has_value()) {
    probs = {*p, *q};
  } else if (a.has_value() && b.has_value()) {
    probs = dense_probs({n, r, *a, *b});
  } else {
    std::cerr << "generate needs either --a and --b or --p and --q\n";
    return 1;
  }
  Rng rng(resolve_seed(seed));
  const Labeling truth = random_balanced_labeling(n, r, rng);
  const Graph g = sample_sbm(truth, probs, rng);
  write_edge_list_file(g, out + ".edges");
  write_labels_file(truth, out + ".labels");
  std::cout << "wrote " << out << ".edges (" << g.n() << " vertices, "
            << g.edge_count() << " edges) and " << out << ".labels\n";
  return 0;
}

int run_detect(const std::string& edges_path, const std::string& labels_path,
               const std::string& estimator, int r) {
  const Graph g = load_edge_list_file(edges_path);
  MechanismSpec spec;
  spec.handle = estimator;
  spec.r = r;
  const MechanismOutput output = run_mechanism(spec, g, 0);
  print_labeling(*output.labeling);
  if (!labels_path.empty()) {
    const Labeling truth = load_labels_file(labels_path, g.n());
    std::cout << "agreement " << format_double(agreement(*output.labeling, truth))
              << '\n';
  }
  return 0;
}

int run_mechanism_command(const std::string& edges_path,
                          const MechanismFlags& flags,
                          const std::optional<std::uint64_t>& seed) {
  const Graph g = load_edge_list_file(edges_path);
  const MechanismSpec spec = build_spec(flags, g.n());
  const MechanismOutput output =
      run_mechanism(spec, g, resolve_seed(seed));
  if (output.is_bottom()) {
    std::cout << "bottom\n";
  } else {
    print_labeling(*output.labeling);
  }
  return 0;
}

int run_audit(const MechanismFlags& flags, int n) {
  const MechanismSpec spec = build_spec(flags, n);
  const AuditReport report = dp_audit(spec, n);
  std::cout << "graphs " << report.graphs << '\n'
            << "pairs checked " << report.pairs_checked << '\n'
            << "violations " << report.violations.size() << '\n'
            << "max ratio " << format_double(report.max_ratio) << " (bound e^eps = "
            << format_double(std::exp(spec.budget.epsilon)) << ")\n";
  if (!report.violations.empty()) {
    const AuditViolation& worst = report.violations.front();
    std::cout << "first violation: output '" << worst.output << "' on graphs "
              << worst.graph_bits << " -> " << worst.neighbor_bits << " ("
              << format_double(worst.lhs) << " > " << format_double(worst.rhs)
              << ")\n";
  }
  return 0;
}

int run_thresholds(int r, const std::vector<double>& epsilons, double a,
                   double b) {
  const std::vector<std::string> mechanisms = {
      "non-private", "mle-stability", "sdp-stability",
      "bayesian",    "exponential",   "rr-sdp"};
  std::cout << "mechanism,epsilon,required,attained,satisfied,status\n";
  for (const std::string& mechanism : mechanisms) {
    for (double epsilon : epsilons) {
      ThresholdQuery query;
      query.mechanism = mechanism;
      query.r = r;
      query.a = a;
      query.b = b;
      query.epsilon = epsilon;
      std::cout << mechanism << ',' << format_double(epsilon) << ',';
      try {
        const ThresholdReport report = threshold_gap(query);
        std::cout << format_double(report.required) << ','
                  << format_double(report.attained) << ','
                  << (report.satisfied ? 1 : 0) << ",ok\n";
      } catch (const EpsilonBelowFloorError&) {
        std::cout << ",,,below-floor\n";
      } catch (const UnsupportedCombinationError&) {
        std::cout << ",,,unsupported\n";
      }
    }
  }
  return 0;
}

int run_experiment_command(const std::string& config_path,
                           const std::string& out_override,
                           const std::optional<std::uint64_t>& seed,
                           const std::string& format) {
  ExperimentConfig config = parse_config_file(config_path);
  if (!out_override.empty()) config.out = out_override;
  if (seed.has_value()) config.seed = *seed;
  const std::vector<TrialRecord> records = run_experiment(config);
  emit_csv_file(records, config.out + ".csv");
  std::cout << "wrote " << config.out << ".csv (" << records.size()
            << " records)\n";
  if (format == "svg") {
    emit_svg_file(records, config.axis, config.out + ".svg");
    std::cout << "wrote " << config.out << ".svg\n";
  }
  return 0;
}

int run_plot(const std::string& csv_path, const std::string& out,
             const std::string& axis, const std::string& format) {
  const std::vector<TrialRecord> records = parse_csv_file(csv_path);
  if (format == "csv") {
    emit_csv_file(records, out);
  } else {
    emit_svg_file(records, axis, out);
  }
  std::cout << "wrote " << out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"differentially private community detection on stochastic "
               "block models"};
  app.require_subcommand(1);

  auto* generate = app.add_subcommand(
      "generate", "sample a balanced SBM graph and its truth labels");
  int gen_n = 0;
  int gen_r = 2;
  std::optional<double> gen_a, gen_b, gen_p, gen_q;
  std::optional<std::uint64_t> gen_seed;
  std::string gen_out = "sbm";
  generate->add_option("--n", gen_n, "number of vertices")->required();
  generate->add_option("--r", gen_r, "number of communities");
  generate->add_option("--a", gen_a, "intra-community rate constant");
  generate->add_option("--b", gen_b, "inter-community rate constant");
  generate->add_option("--p", gen_p, "intra-community edge probability");
  generate->add_option("--q", gen_q, "inter-community edge probability");
  generate->add_option("--seed", gen_seed, "master seed");
  generate->add_option("--out", gen_out, "output path prefix");

  auto* detect = app.add_subcommand(
      "detect", "run a non-private estimator on an edge list");
  std::string detect_edges, detect_labels;
  std::string detect_estimator = "spectral";
  int detect_r = 2;
  detect->add_option("edges", detect_edges, "edge list file")->required();
  detect->add_option("labels", detect_labels,
                     "truth labels file for agreement scoring");
  detect->add_option("--estimator", detect_estimator,
                     "estimator: mle, sdp or spectral")
      ->check(CLI::IsMember({"mle", "sdp", "spectral"}));
  detect->add_option("--r", detect_r, "number of communities");

  auto* mechanism = app.add_subcommand(
      "mechanism", "run a differentially private mechanism on an edge list");
  std::string mech_edges;
  MechanismFlags mech_flags;
  std::optional<std::uint64_t> mech_seed;
  mechanism->add_option("edges", mech_edges, "edge list file")->required();
  add_mechanism_flags(mechanism, &mech_flags, true);
  mechanism->add_option("--seed", mech_seed, "master seed");

  auto* audit = app.add_subcommand(
      "audit", "exhaustively audit a mechanism's privacy claim at small n");
  MechanismFlags audit_flags;
  int audit_n = 4;
  add_mechanism_flags(audit, &audit_flags, true);
  audit->add_option("--n", audit_n, "number of vertices (2..5)")->required();

  auto* thresholds = app.add_subcommand(
      "thresholds", "print the recovery-threshold table as CSV");
  int thr_r = 2;
  std::vector<double> thr_eps = {1.0};
  double thr_a = 0.0;
  double thr_b = 0.0;
  thresholds->add_option("--r", thr_r, "number of communities");
  thresholds
      ->add_option("--epsilon", thr_eps, "privacy budget grid (repeatable)")
      ->delimiter(',');
  thresholds->add_option("--a", thr_a, "intra-community rate constant")
      ->required();
  thresholds->add_option("--b", thr_b, "inter-community rate constant")
      ->required();

  auto* experiment = app.add_subcommand(
      "experiment", "run a config-driven sweep and write results");
  std::string exp_config;
  std::string exp_out;
  std::optional<std::uint64_t> exp_seed;
  std::string exp_format = "csv";
  experiment->add_option("--config", exp_config, "experiment config file")
      ->required();
  experiment->add_option("--out", exp_out, "output path prefix override");
  experiment->add_option("--seed", exp_seed, "master seed override");
  experiment->add_option("--format", exp_format,
                         "csv, or svg to also write a plot")
      ->check(CLI::IsMember({"csv", "svg"}));

  auto* plot = app.add_subcommand("plot", "render a results CSV");
  std::string plot_csv;
  std::string plot_out = "results.svg";
  std::string plot_axis = "linear";
  std::string plot_format = "svg";
  plot->add_option("csv", plot_csv, "results CSV file")->required();
  plot->add_option("--out", plot_out, "output file");
  plot->add_option("--axis", plot_axis, "x axis: linear or log")
      ->check(CLI::IsMember({"linear", "log"}));
  plot->add_option("--format", plot_format, "svg or csv")
      ->check(CLI::IsMember({"csv", "svg"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (generate->parsed()) {
      return run_generate(gen_n, gen_r, gen_a, gen_b, gen_p, gen_q, gen_seed,
                          gen_out);
    }
    if (detect->parsed()) {
      return run_detect(detect_edges, detect_labels, detect_estimator,
                        detect_r);
    }
    if (mechanism->parsed()) {
      return run_mechanism_command(mech_edges, mech_flags, mech_seed);
    }
    if (audit->parsed()) return run_audit(audit_flags, audit_n);
    if (thresholds->parsed()) {
      return run_thresholds(thr_r, thr_eps, thr_a, thr_b);
    }
    if (experiment->parsed()) {
      return run_experiment_command(exp_config, exp_out, exp_seed, exp_format);
    }
    if (plot->parsed()) {
      return run_plot(plot_csv, plot_out, plot_axis, plot_format);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
