#include "privsbm/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "privsbm/errors.hpp"
#include "privsbm/graph.hpp"
#include "privsbm/rng.hpp"

namespace privsbm {

namespace {

constexpr char kCsvHeader[] =
    "mechanism,sweep_name,sweep_value,trial,seed,agreement,exact,bottom,"
    "wall_ms";

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string::npos) {
      parts.push_back(s.substr(start));
      return parts;
    }
    parts.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string line_tag(int line) { return "line " + std::to_string(line); }

double parse_double(const std::string& raw, int line) {
  const std::string s = trim(raw);
  double value = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError(line_tag(line) + ": expected a number, got '" + s + "'");
  }
  return value;
}

long long parse_integer(const std::string& raw, int line) {
  const std::string s = trim(raw);
  long long value = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError(line_tag(line) + ": expected an integer, got '" + s +
                     "'");
  }
  return value;
}

std::uint64_t parse_u64(const std::string& raw, int line) {
  const std::string s = trim(raw);
  std::uint64_t value = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError(line_tag(line) + ": expected an unsigned integer, got '" +
                     s + "'");
  }
  return value;
}

// Shortest decimal form that parses back to the same double, so emitted
// files are replay-stable across platforms.
std::string format_double(double value) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

void validate_config(const ExperimentConfig& config) {
  if (config.sweep != "a" && config.sweep != "epsilon" &&
      config.sweep != "n") {
    throw DomainError("experiment sweep must be one of a, epsilon, n");
  }
  if (config.axis != "linear" && config.axis != "log") {
    throw DomainError("plot axis must be linear or log");
  }
  if (config.stability_mode != "exact" && config.stability_mode != "gap") {
    throw DomainError("stability_mode must be exact or gap");
  }
  if (config.grid.empty()) throw DomainError("experiment grid is empty");
  for (std::size_t i = 1; i < config.grid.size(); ++i) {
    if (!(config.grid[i] > config.grid[i - 1])) {
      throw DomainError("experiment grid must be strictly increasing");
    }
  }
  if (config.trials < 1) throw DomainError("experiment needs trials >= 1");
  if (config.workers < 1) throw DomainError("experiment needs workers >= 1");
  if (config.r < 2) throw DomainError("experiment needs r >= 2");
  if (config.sweep != "n" && (config.n < 2 || config.n % config.r != 0)) {
    throw DomainError("experiment needs n >= 2 divisible by r");
  }
  if (config.sweep == "n") {
    for (double v : config.grid) {
      const double rounded = std::nearbyint(v);
      if (v != rounded || rounded < 2.0 ||
          static_cast<long long>(rounded) % config.r != 0) {
        throw DomainError("n sweep grid values must be integers divisible by r");
      }
    }
  }
  if (config.sweep == "epsilon") {
    if (config.grid.front() <= 0.0) {
      throw DomainError("epsilon sweep grid values must be positive");
    }
  } else if (!(config.epsilon > 0.0)) {
    throw DomainError("experiment needs epsilon > 0");
  }
  if (config.b < 0.0) throw DomainError("experiment needs b >= 0");
  const double a_low = config.sweep == "a" ? config.grid.front() : config.a;
  if (a_low < config.b) throw DomainError("experiment needs a >= b");
  if (config.delta < 0.0 || config.delta > 1.0) {
    throw DomainError("experiment delta must lie in [0, 1]");
  }
  if (config.mechanisms.empty()) {
    throw DomainError("experiment needs at least one mechanism");
  }
  for (const std::string& handle : config.mechanisms) {
    if (!is_known_mechanism(handle)) {
      throw DomainError("unknown mechanism: " + handle);
    }
  }
}

std::vector<double> parse_grid(const std::string& raw, int line) {
  std::vector<double> grid;
  for (const std::string& piece : split(raw, ',')) {
    const std::string token = trim(piece);
    if (token.empty()) continue;
    grid.push_back(parse_double(token, line));
  }
  return grid;
}

std::vector<std::string> parse_name_list(const std::string& raw) {
  std::vector<std::string> names;
  for (const std::string& piece : split(raw, ',')) {
    const std::string token = trim(piece);
    if (!token.empty()) names.push_back(token);
  }
  return names;
}

TrialRecord run_trial(const ExperimentConfig& config, std::size_t index) {
  const std::size_t per_point =
      config.mechanisms.size() * static_cast<std::size_t>(config.trials);
  const std::size_t point = index / per_point;
  const std::size_t rem = index % per_point;
  const std::size_t mech = rem / static_cast<std::size_t>(config.trials);

  TrialRecord record;
  record.mechanism = config.mechanisms[mech];
  record.sweep_name = config.sweep;
  record.sweep_value = config.grid[point];
  record.trial = static_cast<int>(rem % static_cast<std::size_t>(config.trials));
  record.seed = Rng::substream_seed(config.seed, index);

  SbmParams params{config.n, config.r, config.a, config.b};
  double epsilon = config.epsilon;
  if (config.sweep == "a") {
    params.a = record.sweep_value;
  } else if (config.sweep == "epsilon") {
    epsilon = record.sweep_value;
  } else {
    params.n = static_cast<int>(std::nearbyint(record.sweep_value));
  }

  try {
    Rng rng = Rng::substream(config.seed, index);
    const EdgeProbs probs = dense_probs(params);
    const Labeling truth = random_balanced_labeling(params.n, params.r, rng);
    const Graph g = sample_sbm(truth, probs, rng);
    const std::uint64_t mechanism_seed = rng.next_u64();

    MechanismSpec spec;
    spec.handle = record.mechanism;
    spec.r = params.r;
    spec.budget.epsilon = epsilon;
    spec.budget.delta =
        config.delta == 0.0 ? 1.0 / params.n : config.delta;
    spec.probs = probs;
    spec.mode = config.stability_mode == "exact" ? StabilityMode::kExactCapped
                                                 : StabilityMode::kGapLowerBound;
    spec.cap = config.cap;
    spec.solver = config.solver;

    const auto start = std::chrono::steady_clock::now();
    const MechanismOutput output = run_mechanism(spec, g, mechanism_seed);
    const auto stop = std::chrono::steady_clock::now();
    record.wall_ms =
        std::chrono::duration<double, std::milli>(stop - start).count();

    Labeling scored;
    if (output.is_bottom()) {
      record.bottom = true;
      scored = random_balanced_labeling(params.n, params.r, rng);
    } else {
      scored = *output.labeling;
    }
    record.agreement = agreement(scored, truth);
    record.exact = record.agreement == 1.0;
  } catch (const std::exception&) {
    record.failed = true;
    record.agreement = 0.0;
    record.exact = false;
    record.bottom = false;
  }
  return record;
}

double axis_position(double value, const std::string& axis) {
  if (axis == "log") {
    if (!(value > 0.0)) {
      throw DomainError("log axis needs positive sweep values");
    }
    return std::log(value);
  }
  return value;
}

}  // namespace

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig config;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(line_tag(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ParseError(line_tag(line_no) + ": missing key");
    }

    if (key == "sweep") {
      config.sweep = value;
    } else if (key == "grid") {
      config.grid = parse_grid(value, line_no);
    } else if (key == "n") {
      config.n = static_cast<int>(parse_integer(value, line_no));
    } else if (key == "r") {
      config.r = static_cast<int>(parse_integer(value, line_no));
    } else if (key == "a") {
      config.a = parse_double(value, line_no);
    } else if (key == "b") {
      config.b = parse_double(value, line_no);
    } else if (key == "epsilon") {
      config.epsilon = parse_double(value, line_no);
    } else if (key == "delta") {
      config.delta = parse_double(value, line_no);
    } else if (key == "mechanisms") {
      config.mechanisms = parse_name_list(value);
    } else if (key == "trials") {
      config.trials = static_cast<int>(parse_integer(value, line_no));
    } else if (key == "seed") {
      config.seed = parse_u64(value, line_no);
    } else if (key == "workers") {
      config.workers = static_cast<int>(parse_integer(value, line_no));
    } else if (key == "stability_mode") {
      config.stability_mode = value;
    } else if (key == "cap") {
      config.cap = static_cast<int>(parse_integer(value, line_no));
    } else if (key == "solver_tolerance") {
      config.solver.tolerance = parse_double(value, line_no);
    } else if (key == "solver_max_iterations") {
      config.solver.max_iterations =
          static_cast<int>(parse_integer(value, line_no));
    } else if (key == "solver_penalty") {
      config.solver.penalty = parse_double(value, line_no);
    } else if (key == "axis") {
      config.axis = value;
    } else if (key == "out") {
      config.out = value;
    } else {
      throw ParseError(line_tag(line_no) + ": unknown key '" + key + "'");
    }
  }
  validate_config(config);
  return config;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  return parse_config(in);
}

std::vector<TrialRecord> run_experiment(const ExperimentConfig& config) {
  validate_config(config);
  const std::size_t total = config.grid.size() * config.mechanisms.size() *
                            static_cast<std::size_t>(config.trials);
  std::vector<TrialRecord> records(total);

  const int workers =
      static_cast<int>(std::min<std::size_t>(config.workers, total));
  if (workers <= 1) {
    for (std::size_t k = 0; k < total; ++k) records[k] = run_trial(config, k);
    return records;
  }

  std::atomic<std::size_t> next{0};
  auto consume = [&] {
    while (true) {
      const std::size_t k = next.fetch_add(1);
      if (k >= total) return;
      records[k] = run_trial(config, k);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(consume);
  for (std::thread& t : pool) t.join();
  return records;
}

ErrorRate wilson_interval(int failures, int trials) {
  if (trials < 1) throw OutOfRangeError("wilson interval needs trials >= 1");
  if (failures < 0 || failures > trials) {
    throw OutOfRangeError("wilson interval needs 0 <= failures <= trials");
  }
  const double z = 1.959963984540054;
  const double m = trials;
  const double phat = failures / m;
  const double denom = 1.0 + z * z / m;
  const double center = (phat + z * z / (2.0 * m)) / denom;
  const double half =
      (z / denom) * std::sqrt(phat * (1.0 - phat) / m + z * z / (4.0 * m * m));
  ErrorRate rate;
  rate.rate = phat;
  rate.ci95 = half;
  rate.lo = center - half;
  rate.hi = center + half;
  rate.trials = trials;
  return rate;
}

ErrorRate error_rate(const std::vector<TrialRecord>& records,
                     const std::string& mechanism, double sweep_value) {
  int failures = 0;
  int total = 0;
  for (const TrialRecord& record : records) {
    if (record.mechanism != mechanism || record.sweep_value != sweep_value) {
      continue;
    }
    ++total;
    if (!record.exact) ++failures;
  }
  if (total == 0) {
    throw EmptySelectionError("no records for mechanism " + mechanism +
                              " at sweep value " + format_double(sweep_value));
  }
  return wilson_interval(failures, total);
}

void emit_csv(const std::vector<TrialRecord>& records, std::ostream& out) {
  out << kCsvHeader << '\n';
  for (const TrialRecord& record : records) {
    out << record.mechanism << ',' << record.sweep_name << ','
        << format_double(record.sweep_value) << ',' << record.trial << ','
        << record.seed << ',' << format_double(record.agreement) << ','
        << (record.exact ? 1 : 0) << ',' << (record.bottom ? 1 : 0) << ",0\n";
  }
  if (!out) throw IoError("failed to write csv stream");
}

void emit_csv_file(const std::vector<TrialRecord>& records,
                   const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open csv file for writing: " + path);
  emit_csv(records, out);
}

std::vector<TrialRecord> parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != kCsvHeader) {
    throw ParseError("line 1: expected csv header '" +
                     std::string(kCsvHeader) + "'");
  }
  std::vector<TrialRecord> records;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split(trim(line), ',');
    if (fields.size() != 9) {
      throw ParseError(line_tag(line_no) + ": expected 9 fields, got " +
                       std::to_string(fields.size()));
    }
    TrialRecord record;
    record.mechanism = fields[0];
    record.sweep_name = fields[1];
    record.sweep_value = parse_double(fields[2], line_no);
    record.trial = static_cast<int>(parse_integer(fields[3], line_no));
    record.seed = parse_u64(fields[4], line_no);
    record.agreement = parse_double(fields[5], line_no);
    for (int flag = 6; flag <= 7; ++flag) {
      if (fields[flag] != "0" && fields[flag] != "1") {
        throw ParseError(line_tag(line_no) + ": flags must be 0 or 1");
      }
    }
    record.exact = fields[6] == "1";
    record.bottom = fields[7] == "1";
    record.wall_ms = parse_double(fields[8], line_no);
    records.push_back(record);
  }
  return records;
}

std::vector<TrialRecord> parse_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open csv file: " + path);
  return parse_csv(in);
}

void emit_svg(const std::vector<TrialRecord>& records, const std::string& axis,
              std::ostream& out) {
  if (axis != "linear" && axis != "log") {
    throw DomainError("plot axis must be linear or log");
  }

  std::vector<std::string> mechanisms;
  std::set<double> value_set;
  for (const TrialRecord& record : records) {
    if (std::find(mechanisms.begin(), mechanisms.end(), record.mechanism) ==
        mechanisms.end()) {
      mechanisms.push_back(record.mechanism);
    }
    value_set.insert(record.sweep_value);
  }
  const std::vector<double> values(value_set.begin(), value_set.end());

  const double left = 70.0;
  const double right = 460.0;
  const double top = 30.0;
  const double bottom = 360.0;
  const double width = 640.0;
  const double height = 420.0;

  double pos_min = 0.0;
  double pos_max = 1.0;
  if (!values.empty()) {
    pos_min = axis_position(values.front(), axis);
    pos_max = axis_position(values.back(), axis);
  }
  auto x_of = [&](double value) {
    if (pos_max == pos_min) return (left + right) / 2.0;
    const double t = (axis_position(value, axis) - pos_min) /
                     (pos_max - pos_min);
    return left + t * (right - left);
  };
  auto y_of = [&](double rate) { return bottom - rate * (bottom - top); };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\""
      << format_double(width) << "\" height=\"" << format_double(height)
      << "\" viewBox=\"0 0 " << format_double(width) << ' '
      << format_double(height) << "\">\n";
  out << "  <rect x=\"0\" y=\"0\" width=\"" << format_double(width)
      << "\" height=\"" << format_double(height) << "\" fill=\"white\"/>\n";
  out << "  <line x1=\"" << format_double(left) << "\" y1=\""
      << format_double(bottom) << "\" x2=\"" << format_double(right)
      << "\" y2=\"" << format_double(bottom)
      << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  out << "  <line x1=\"" << format_double(left) << "\" y1=\""
      << format_double(top) << "\" x2=\"" << format_double(left) << "\" y2=\""
      << format_double(bottom)
      << "\" stroke=\"black\" stroke-width=\"1\"/>\n";

  for (int tick = 0; tick <= 4; ++tick) {
    const double rate = tick / 4.0;
    const double y = y_of(rate);
    out << "  <line x1=\"" << format_double(left - 4.0) << "\" y1=\""
        << format_double(y) << "\" x2=\"" << format_double(left) << "\" y2=\""
        << format_double(y) << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    out << "  <text x=\"" << format_double(left - 8.0) << "\" y=\""
        << format_double(y + 4.0)
        << "\" text-anchor=\"end\" font-size=\"12\">" << format_double(rate)
        << "</text>\n";
  }
  for (double value : values) {
    const double x = x_of(value);
    out << "  <line x1=\"" << format_double(x) << "\" y1=\""
        << format_double(bottom) << "\" x2=\"" << format_double(x)
        << "\" y2=\"" << format_double(bottom + 4.0)
        << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    out << "  <text x=\"" << format_double(x) << "\" y=\""
        << format_double(bottom + 18.0)
        << "\" text-anchor=\"middle\" font-size=\"12\">"
        << format_double(value) << "</text>\n";
  }

  const std::string x_label =
      records.empty() ? std::string("sweep value")
                      : records.front().sweep_name +
                            (axis == "log" ? " (log scale)" : "");
  out << "  <text x=\"" << format_double((left + right) / 2.0) << "\" y=\""
      << format_double(bottom + 40.0)
      << "\" text-anchor=\"middle\" font-size=\"14\">" << x_label
      << "</text>\n";
  out << "  <text x=\"18\" y=\"" << format_double((top + bottom) / 2.0)
      << "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 18 "
      << format_double((top + bottom) / 2.0) << ")\">error rate</text>\n";

  const std::vector<std::string> palette = {"#1f77b4", "#d62728", "#2ca02c",
                                            "#9467bd", "#ff7f0e", "#8c564b",
                                            "#17becf", "#7f7f7f", "#bcbd22"};
  for (std::size_t m = 0; m < mechanisms.size(); ++m) {
    const std::string& color = palette[m % palette.size()];
    out << "  <polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"2\" points=\"";
    bool first = true;
    for (double value : values) {
      const bool present = std::any_of(
          records.begin(), records.end(), [&](const TrialRecord& record) {
            return record.mechanism == mechanisms[m] &&
                   record.sweep_value == value;
          });
      if (!present) continue;
      const ErrorRate rate = error_rate(records, mechanisms[m], value);
      if (!first) out << ' ';
      out << format_double(x_of(value)) << ',' << format_double(y_of(rate.rate));
      first = false;
    }
    out << "\"/>\n";

    const double legend_y = top + 18.0 * static_cast<double>(m);
    out << "  <line x1=\"" << format_double(right + 16.0) << "\" y1=\""
        << format_double(legend_y) << "\" x2=\"" << format_double(right + 40.0)
        << "\" y2=\"" << format_double(legend_y) << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    out << "  <text x=\"" << format_double(right + 46.0) << "\" y=\""
        << format_double(legend_y + 4.0) << "\" font-size=\"12\">"
        << mechanisms[m] << "</text>\n";
  }
  out << "</svg>\n";
  if (!out) throw IoError("failed to write svg stream");
}

void emit_svg_file(const std::vector<TrialRecord>& records,
                   const std::string& axis, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open svg file for writing: " + path);
  emit_svg(records, axis, out);
}

Graph load_edge_list(std::istream& in) {
  std::string line;
  int line_no = 0;
  std::vector<std::pair<int, int>> pairs;
  int max_id = -1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    std::istringstream row(line);
    long long u = 0;
    long long v = 0;
    std::string extra;
    if (!(row >> u >> v) || (row >> extra)) {
      throw ParseError(line_tag(line_no) + ": expected two vertex ids");
    }
    if (u < 0 || v < 0) {
      throw ParseError(line_tag(line_no) + ": vertex ids must be >= 0");
    }
    if (u == v) {
      throw SelfLoopError(line_tag(line_no) + ": self loop at vertex " +
                          std::to_string(u));
    }
    pairs.emplace_back(static_cast<int>(u), static_cast<int>(v));
    max_id = std::max(max_id, static_cast<int>(std::max(u, v)));
  }
  if (pairs.empty()) throw ParseError("edge list contains no edges");
  Graph g(max_id + 1);
  for (const auto& [u, v] : pairs) g.set_edge(u, v, true);
  return g;
}

Graph load_edge_list_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open edge list file: " + path);
  return load_edge_list(in);
}

Labeling load_labels(std::istream& in, int n) {
  std::string line;
  int line_no = 0;
  std::vector<int> labels;
  int max_label = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const long long label = parse_integer(line, line_no);
    if (label < 0) {
      throw ParseError(line_tag(line_no) + ": labels must be >= 0");
    }
    labels.push_back(static_cast<int>(label));
    max_label = std::max(max_label, static_cast<int>(label));
  }
  if (static_cast<int>(labels.size()) != n) {
    throw LabelCountMismatchError(
        "labels file has " + std::to_string(labels.size()) +
        " entries for a graph with " + std::to_string(n) + " vertices");
  }
  Labeling sigma;
  sigma.labels = std::move(labels);
  sigma.r = max_label + 1;
  return sigma;
}

Labeling load_labels_file(const std::string& path, int n) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open labels file: " + path);
  return load_labels(in, n);
}

void write_edge_list_file(const Graph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open edge list file for writing: " + path);
  for (const auto& [u, v] : g.edges()) {
    out << u << ' ' << v << '\n';
  }
  if (!out) throw IoError("failed to write edge list file: " + path);
}

void write_labels_file(const Labeling& sigma, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open labels file for writing: " + path);
  for (int label : sigma.labels) out << label << '\n';
  if (!out) throw IoError("failed to write labels file: " + path);
}

}  // namespace privsbm
