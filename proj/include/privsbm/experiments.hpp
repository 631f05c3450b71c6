#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "privsbm/mechanisms.hpp"

namespace privsbm {

// One sweep: vary a, epsilon or n over a grid, run `trials` independent
// instances per (mechanism, grid value), score recovery against the planted
// truth.  Parsed from a flat key = value file; unknown keys are errors.
struct ExperimentConfig {
  std::string sweep = "epsilon";     // a | epsilon | n
  std::vector<double> grid;
  int n = 100;
  int r = 2;
  double a = 3.5;
  double b = 0.1;
  double epsilon = 1.0;
  double delta = 0.0;                // 0: defaults to 1/n at run time
  std::vector<std::string> mechanisms;
  int trials = 20;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string stability_mode = "gap";  // exact | gap
  int cap = 0;
  SolverConfig solver;
  std::string axis = "linear";       // x axis for plots: linear | log
  std::string out = "results";
};

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig parse_config_file(const std::string& path);

struct TrialRecord {
  std::string mechanism;
  std::string sweep_name;
  double sweep_value = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;
  double agreement = 0.0;
  bool exact = false;
  bool bottom = false;
  double wall_ms = 0.0;  // measured; excluded from the replayable CSV
  bool failed = false;   // mechanism threw; never aborts the sweep

  bool operator==(const TrialRecord& other) const = default;
};

// Runs the whole sweep.  Each trial draws its own substream from
// (config.seed, manifest index), so the record set is identical for any
// worker count; workers only change wall time.  A trial samples a fresh
// truth and graph, runs the mechanism, and scores agreement.  Bottom
// outputs are scored against a uniform random balanced labeling (an error
// unless it matches by luck).
std::vector<TrialRecord> run_experiment(const ExperimentConfig& config);

struct ErrorRate {
  double rate = 0.0;  // fraction of trials with exact = false
  double ci95 = 0.0;  // Wilson 95% half-width
  double lo = 0.0;
  double hi = 0.0;
  int trials = 0;
};

// Aggregates records for one mechanism at one sweep value.
ErrorRate error_rate(const std::vector<TrialRecord>& records,
                     const std::string& mechanism, double sweep_value);

// Wilson score interval for k failures out of m.
ErrorRate wilson_interval(int failures, int trials);

// CSV with exactly these columns:
//   mechanism,sweep_name,sweep_value,trial,seed,agreement,exact,bottom,wall_ms
// Values are formatted deterministically and wall_ms is written as 0, so a
// replayed sweep emits byte-identical files regardless of worker count.
void emit_csv(const std::vector<TrialRecord>& records, std::ostream& out);
void emit_csv_file(const std::vector<TrialRecord>& records, const std::string& path);
std::vector<TrialRecord> parse_csv(std::istream& in);
std::vector<TrialRecord> parse_csv_file(const std::string& path);

// Standalone SVG error-rate plot: one polyline per mechanism over the sweep
// grid, linear or log x axis, with axis labels and a legend.
void emit_svg(const std::vector<TrialRecord>& records, const std::string& axis,
              std::ostream& out);
void emit_svg_file(const std::vector<TrialRecord>& records,
                   const std::string& axis, const std::string& path);

// Edge list ingestion: one "u v" pair per line, '#' starts a comment, blank
// lines ignored, duplicate edges collapse, vertex count is 1 + max id.
// Throws ParseError (with line number), SelfLoopError, IoError.
Graph load_edge_list(std::istream& in);
Graph load_edge_list_file(const std::string& path);

// Companion labels file: one integer label per line, same comment rules,
// line count must equal the vertex count (LabelCountMismatchError).
Labeling load_labels(std::istream& in, int n);
Labeling load_labels_file(const std::string& path, int n);

void write_edge_list_file(const Graph& g, const std::string& path);
void write_labels_file(const Labeling& sigma, const std::string& path);

}  // namespace privsbm
