#include "sinrlab/experiment.hpp"

#include "sinrlab/analysis.hpp"
#include "sinrlab/parallel.hpp"
#include "sinrlab/sim.hpp"

#include "json.hpp"

#include <Eigen/Core>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace sinrlab {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

const std::set<std::string> kParamKeys{"lambda", "r", "alpha", "theta_db", "xi", "p_tx_dbm", "sigma2_dbm"};
const std::set<std::string> kSimKeys{"slots", "warmup", "realizations", "seed", "side", "wrap",
                                     "min_attempts", "activity_bins", "save_runs"};
const std::set<std::string> kAxes{"theta_db", "xi", "lambda", "r"};

// ---------------------------------------------------------------------------
// Configuration

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

template <class T>
T get_or(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

std::vector<double> axis_values(const json& axis) {
  if (axis.contains("values")) return axis.at("values").get<std::vector<double>>();
  const bool log = axis.contains("logspace");
  if (!log && !axis.contains("linspace"))
    throw ConfigError("sweep axis needs 'values', 'logspace' or 'linspace'");
  const json& spec = axis.at(log ? "logspace" : "linspace");
  const double from = spec.at("from").get<double>();
  const double to = spec.at("to").get<double>();
  const int count = spec.at("count").get<int>();
  if (count < 1) throw ConfigError("sweep count must be positive");
  if (log && !(from > 0.0 && to > 0.0)) throw ConfigError("logspace bounds must be positive");
  std::vector<double> out;
  for (int i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    out.push_back(log ? std::exp(std::log(from) + t * (std::log(to) - std::log(from)))
                      : from + t * (to - from));
  }
  return out;
}

void set_path(json& root, const std::string& key, const json& value) {
  std::vector<std::string> parts;
  std::stringstream ss(key);
  for (std::string p; std::getline(ss, p, '.');) {
    if (p.empty()) throw ConfigError("malformed override key '" + key + "'");
    parts.push_back(p);
  }
  if (parts.size() == 1) {
    if (kParamKeys.count(parts[0])) parts.insert(parts.begin(), "params");
    else if (kSimKeys.count(parts[0])) parts.insert(parts.begin(), "simulation");
  }
  json* node = &root;
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    json& next = (*node)[parts[i]];
    if (next.is_null()) next = json::object();
    if (!next.is_object()) throw ConfigError("override '" + key + "' descends into a non-object");
    node = &next;
  }
  (*node)[parts.back()] = value;
}

void apply_override(json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override must look like key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  set_path(root, key, value);
}

SystemParams params_at(const RawParams& raw) {
  try {
    return build_params(raw);
  } catch (const ParamError& e) {
    throw ConfigError(std::string("invalid parameters: ") + e.what());
  }
}

void set_axis(RawParams& raw, const std::string& axis, double v) {
  if (axis == "theta_db") raw.theta_db = v;
  else if (axis == "xi") raw.xi = v;
  else if (axis == "lambda") raw.lambda = v;
  else if (axis == "r") raw.r = v;
  else throw ConfigError("unknown sweep axis '" + axis + "'");
}

struct SweepPoint {
  RawParams raw;
  std::vector<double> coords;
};

std::vector<SweepPoint> expand(const ExperimentConfig& c) {
  std::vector<SweepPoint> points{{c.params, {}}};
  for (const auto& axis : c.sweep) {
    std::vector<SweepPoint> next;
    for (const auto& p : points)
      for (double v : axis.values) {
        SweepPoint q = p;
        set_axis(q.raw, axis.name, v);
        q.coords.push_back(v);
        next.push_back(std::move(q));
      }
    points = std::move(next);
  }
  return points;
}

// ---------------------------------------------------------------------------
// Result table

using Cell = std::optional<double>;

struct Row {
  std::map<std::string, Cell> cells;
  bool converged = true;
  void set(const std::string& k, Cell v) { cells[k] = v; }
};

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::ofstream open_out(const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw IoError("cannot open " + file.string() + " for writing");
  out.exceptions(std::ios::badbit | std::ios::failbit);
  return out;
}

void write_table(const std::filesystem::path& file, const std::vector<std::string>& columns,
                 const std::vector<Row>& rows) {
  try {
    auto out = open_out(file);
    for (const auto& c : columns) out << c << ',';
    out << "converged\n";
    for (const auto& r : rows) {
      for (const auto& c : columns) {
        const auto it = r.cells.find(c);
        if (it != r.cells.end() && it->second) out << format_number(*it->second);
        out << ',';
      }
      out << (r.converged ? "true" : "false") << '\n';
    }
  } catch (const std::ios::failure& e) {
    throw IoError("write failed for " + file.string() + ": " + e.what());
  }
}

void write_curve(const std::filesystem::path& file, const std::vector<std::string>& header,
                 const std::vector<std::vector<Cell>>& columns) {
  try {
    auto out = open_out(file);
    for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
    out << '\n';
    const std::size_t n = columns.empty() ? 0 : columns.front().size();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < columns.size(); ++j) {
        if (j) out << ',';
        if (columns[j][i]) out << format_number(*columns[j][i]);
      }
      out << '\n';
    }
  } catch (const std::ios::failure& e) {
    throw IoError("write failed for " + file.string() + ": " + e.what());
  }
}

std::vector<Cell> cells_of(const Eigen::ArrayXd& a) {
  return std::vector<Cell>(a.data(), a.data() + a.size());
}

std::string point_tag(std::size_t k) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03zu", k);
  return buf;
}

// ---------------------------------------------------------------------------
// Row builders

void analytic_columns(Row& row, const SystemParams& p) {
  const auto exact = success_probability_exact(p);
  const auto lb = success_probability_simplified(p);
  row.set("exact_p_s", exact.p_s);
  row.set("exact_iterations", exact.report.iterations);
  row.set("lb_p_s", lb.p_s);
  try {
    row.set("cf_p_s", success_probability_closed_form(p));
  } catch (const RegimeError&) {
    row.set("cf_p_s", std::nullopt);
  }
  row.set("dom_p_s", bound_success_probability(p, Regime::dominant));
  row.set("fav_p_s", bound_success_probability(p, Regime::favorable));
  row.converged = row.converged && exact.converged() && lb.converged();
}

struct MetaOutcome {
  std::optional<MetaCurve> curve;
  int iterations = 0;
  bool converged = false;
};

MetaOutcome analytic_meta(const SystemParams& p, int grid_size) {
  MetaOptions opts;
  opts.grid_size = grid_size;
  try {
    MetaResult r = meta_distribution(p, opts);
    return {std::move(r.curve), r.iterations, true};
  } catch (const MetaConvergenceError& e) {
    return {e.last(), opts.max_iter, false};
  }
}

void meta_columns(Row& row, const MetaOutcome& m) {
  row.set("exact_meta_iterations", m.iterations);
  row.set("exact_meta_mean", m.curve->mean());
  row.set("exact_variance", variance_of_success(*m.curve));
  row.set("exact_likely_rate_95", likely_rate_95(*m.curve));
  row.set("exact_F_0.90", (*m.curve)(0.9));
  row.converged = row.converged && m.converged;
}

struct SimOutcome {
  Ensemble ensemble;
  double p_s = 0.0;
  double stderr_ = 0.0;
};

SimOutcome simulate_point(const ExperimentConfig& c, const SystemParams& p) {
  SimOptions opts;
  opts.track_coactivity = c.activity_bins > 0;
  SimOutcome o{simulate_ensemble(p, c.region, c.realizations, c.slots, c.warmup, c.seed, c.jobs, opts)};
  o.p_s = pooled_success(o.ensemble.runs);
  if (o.ensemble.runs.size() > 1) {
    Eigen::ArrayXd per(static_cast<Eigen::Index>(o.ensemble.runs.size()));
    for (std::size_t k = 0; k < o.ensemble.runs.size(); ++k)
      per(static_cast<Eigen::Index>(k)) = pooled_success({o.ensemble.runs[k]});
    const double var = (per - per.mean()).square().sum() / static_cast<double>(per.size() - 1);
    o.stderr_ = std::sqrt(var / static_cast<double>(per.size()));
  }
  return o;
}

void sim_columns(Row& row, const SimOutcome& s, const SystemParams& p) {
  const auto& runs = s.ensemble.runs;
  double links = 0.0, active = 0.0, unstable = 0.0;
  bool conserved = true;
  for (const auto& r : runs) {
    links += static_cast<double>(r.links());
    for (long a : r.active_slots) active += static_cast<double>(a) / static_cast<double>(r.measured_slots());
    unstable += unstable_fraction(r, p) * static_cast<double>(r.links());
    conserved = conserved && r.conserves_packets();
  }
  row.set("sim_p_s", s.p_s);
  row.set("sim_p_s_stderr", s.stderr_);
  row.set("sim_p_s_attempt_weighted", attempt_weighted_success(runs));
  row.set("sim_activity", active / links);
  row.set("sim_unstable_fraction", unstable / links);
  row.set("sim_links", links);
  row.set("sim_conserved", conserved ? 1.0 : 0.0);
}

void write_runs(const std::filesystem::path& dir, const std::string& tag, const Ensemble& e) {
  ensure_dir(dir);
  for (std::size_t k = 0; k < e.runs.size(); ++k) {
    const auto file = dir / ("point_" + tag + "_run_" + point_tag(k) + ".json");
    try {
      auto out = open_out(file);
      out << to_json(e.runs[k]) << '\n';
    } catch (const std::ios::failure& ex) {
      throw IoError("write failed for " + file.string() + ": " + ex.what());
    }
  }
}

std::vector<std::string> columns_for(ExperimentKind kind, const ExperimentConfig& c) {
  std::vector<std::string> cols;
  for (const auto& a : c.sweep) cols.push_back(a.name);
  for (const char* k : {"theta_db", "xi", "lambda", "r"})
    if (std::find(cols.begin(), cols.end(), k) == cols.end()) cols.push_back(k);
  const std::vector<std::string> analytic{"exact_p_s", "exact_iterations", "lb_p_s", "cf_p_s", "dom_p_s",
                                          "fav_p_s"};
  const std::vector<std::string> sim{"sim_p_s", "sim_p_s_stderr", "sim_p_s_attempt_weighted", "sim_activity",
                                     "sim_unstable_fraction", "sim_links", "sim_conserved"};
  const std::vector<std::string> meta{"exact_meta_iterations", "exact_meta_mean", "exact_variance",
                                      "exact_likely_rate_95", "exact_F_0.90"};
  auto add = [&](const std::vector<std::string>& v) { cols.insert(cols.end(), v.begin(), v.end()); };
  switch (kind) {
    case ExperimentKind::solve:
      add(analytic);
      break;
    case ExperimentKind::sweep:
      add(analytic);
      add({"exact_throughput_density", "lb_throughput_density"});
      if (c.sweep_meta) add(meta);
      break;
    case ExperimentKind::simulate:
      add(sim);
      break;
    case ExperimentKind::compare:
      add(sim);
      add(analytic);
      add({"gap_exact", "gap_lb", "gap_dom", "gap_fav"});
      break;
    case ExperimentKind::meta:
      add(meta);
      if (c.meta_beta) add({"beta_mu", "beta_b", "beta_ks"});
      if (c.meta_simulate) add({"sim_meta_mean", "sim_meta_links", "sim_meta_excluded", "sim_ks"});
      break;
    case ExperimentKind::stability:
      add({"epsilon", "dom_xi_sufficient", "fav_xi_necessary", "dom_feasible", "fav_feasible"});
      break;
  }
  return cols;
}

Row base_row(const ExperimentConfig& c, const SweepPoint& pt) {
  Row row;
  for (std::size_t a = 0; a < c.sweep.size(); ++a) row.set(c.sweep[a].name, pt.coords[a]);
  row.set("theta_db", pt.raw.theta_db);
  row.set("xi", pt.raw.xi);
  row.set("lambda", pt.raw.lambda);
  row.set("r", pt.raw.r);
  return row;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::solve: return "solve";
    case ExperimentKind::simulate: return "simulate";
    case ExperimentKind::meta: return "meta";
    case ExperimentKind::stability: return "stability";
    case ExperimentKind::sweep: return "sweep";
    case ExperimentKind::compare: return "compare";
  }
  return "?";
}

ExperimentKind parse_kind(const std::string& name) {
  for (auto k : {ExperimentKind::solve, ExperimentKind::simulate, ExperimentKind::meta,
                 ExperimentKind::stability, ExperimentKind::sweep, ExperimentKind::compare})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown experiment kind '" + name + "'");
}

std::string ExperimentConfig::to_json() const {
  json j;
  j["kind"] = to_string(kind);
  j["params"] = {{"lambda", params.lambda},     {"r", params.r},   {"alpha", params.alpha},
                 {"theta_db", params.theta_db}, {"xi", params.xi}, {"p_tx_dbm", params.p_tx_dbm},
                 {"sigma2_dbm", params.sigma2_dbm}};
  j["sweep"] = json::array();
  for (const auto& a : sweep) j["sweep"].push_back({{"axis", a.name}, {"values", a.values}});
  j["simulation"] = {{"slots", slots},       {"warmup", warmup},
                     {"realizations", realizations}, {"seed", seed},
                     {"side", region.side},  {"wrap", region.wrap},
                     {"min_attempts", min_attempts}, {"activity_bins", activity_bins},
                     {"save_runs", save_runs}};
  j["meta"] = {{"grid_size", grid_size}, {"simulate", meta_simulate}, {"beta", meta_beta}};
  j["stability"] = {{"epsilons", epsilons}};
  j["sweep_meta"] = sweep_meta;
  j["out"] = out.string();
  j["jobs"] = jobs;
  return j.dump(2);
}

ExperimentConfig parse_config(const std::string& json_text, const std::vector<std::string>& overrides) {
  json root = json::parse(json_text, nullptr, false);
  if (root.is_discarded()) throw ConfigError("configuration is not valid JSON");
  if (root.is_null()) root = json::object();
  if (!root.is_object()) throw ConfigError("configuration must be a JSON object");
  for (const auto& o : overrides) apply_override(root, o);
  reject_unknown(root, {"kind", "preset", "params", "sweep", "simulation", "meta", "stability", "sweep_meta",
                        "out", "jobs"},
                 "configuration");

  ExperimentConfig c;
  try {
    if (root.contains("kind")) c.kind = parse_kind(root.at("kind").get<std::string>());
    const std::string preset = get_or<std::string>(root, "preset", "reference");
    if (preset != "reference") throw ConfigError("unknown preset '" + preset + "'");

    const json params = root.value("params", json::object());
    reject_unknown(params, kParamKeys, "params");
    c.params.lambda = get_or(params, "lambda", c.params.lambda);
    c.params.r = get_or(params, "r", c.params.r);
    c.params.alpha = get_or(params, "alpha", c.params.alpha);
    c.params.theta_db = get_or(params, "theta_db", c.params.theta_db);
    c.params.xi = get_or(params, "xi", c.params.xi);
    c.params.p_tx_dbm = get_or(params, "p_tx_dbm", c.params.p_tx_dbm);
    c.params.sigma2_dbm = get_or(params, "sigma2_dbm", c.params.sigma2_dbm);

    if (root.contains("sweep")) {
      json axes = root.at("sweep");
      if (axes.is_object()) axes = json::array({axes});
      for (const auto& a : axes) {
        reject_unknown(a, {"axis", "values", "logspace", "linspace"}, "sweep");
        SweepAxis axis{a.at("axis").get<std::string>(), axis_values(a)};
        if (!kAxes.count(axis.name)) throw ConfigError("sweep axis must be one of theta_db, xi, lambda, r");
        if (axis.values.empty()) throw ConfigError("sweep axis '" + axis.name + "' has no values");
        for (double v : axis.values)
          if (!std::isfinite(v)) throw ConfigError("sweep values must be finite");
        c.sweep.push_back(std::move(axis));
      }
    }

    const json sim = root.value("simulation", json::object());
    reject_unknown(sim, kSimKeys, "simulation");
    c.slots = get_or(sim, "slots", c.slots);
    c.warmup = get_or(sim, "warmup", c.warmup);
    c.realizations = get_or(sim, "realizations", c.realizations);
    c.seed = get_or(sim, "seed", c.seed);
    c.region.side = get_or(sim, "side", c.region.side);
    c.region.wrap = get_or(sim, "wrap", c.region.wrap);
    c.min_attempts = get_or(sim, "min_attempts", c.min_attempts);
    c.activity_bins = get_or(sim, "activity_bins", c.activity_bins);
    c.save_runs = get_or(sim, "save_runs", c.save_runs);

    const json meta = root.value("meta", json::object());
    reject_unknown(meta, {"grid_size", "simulate", "beta"}, "meta");
    c.grid_size = get_or(meta, "grid_size", c.grid_size);
    c.meta_simulate = get_or(meta, "simulate", c.meta_simulate);
    c.meta_beta = get_or(meta, "beta", c.meta_beta);

    const json stab = root.value("stability", json::object());
    reject_unknown(stab, {"epsilons"}, "stability");
    c.epsilons = get_or(stab, "epsilons", c.epsilons);

    c.sweep_meta = get_or(root, "sweep_meta", c.sweep_meta);
    c.out = get_or<std::string>(root, "out", c.out.string());
    c.jobs = get_or(root, "jobs", c.jobs);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed configuration: ") + e.what());
  }

  if (!(c.slots > c.warmup && c.warmup >= 0)) throw ConfigError("need slots > warmup >= 0");
  if (c.realizations < 1) throw ConfigError("realizations must be at least 1");
  if (c.grid_size < 51) throw ConfigError("meta.grid_size must be at least 51");
  if (c.min_attempts < 1) throw ConfigError("simulation.min_attempts must be positive");
  if (c.activity_bins < 0) throw ConfigError("simulation.activity_bins must be non-negative");
  if (c.jobs < 1) throw ConfigError("jobs must be at least 1");
  for (double e : c.epsilons)
    if (!(e >= 0.0 && e <= 1.0)) throw ConfigError("stability epsilons must lie in [0, 1]");
  try {
    c.region = Region::make(c.region.side, c.region.wrap);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  for (const auto& pt : expand(c)) params_at(pt.raw);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& file, const std::vector<std::string>& overrides) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read configuration " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), overrides);
}

ExperimentOutcome run_experiment(const ExperimentConfig& c) {
  const auto start = std::chrono::steady_clock::now();
  ensure_dir(c.out);
  const std::vector<SweepPoint> points = expand(c);
  const std::vector<std::string> columns = columns_for(c.kind, c);
  ExperimentOutcome outcome;
  std::vector<Row> rows;
  const auto curves = c.out / "curves";

  switch (c.kind) {
    case ExperimentKind::solve:
    case ExperimentKind::sweep: {
      rows.resize(points.size());
      parallel_for(points.size(), c.jobs, [&](std::size_t k) {
        const SystemParams p = params_at(points[k].raw);
        Row row = base_row(c, points[k]);
        analytic_columns(row, p);
        if (c.kind == ExperimentKind::sweep) {
          row.set("exact_throughput_density", throughput_density(p, *row.cells["exact_p_s"]));
          row.set("lb_throughput_density", throughput_density(p, *row.cells["lb_p_s"]));
          if (c.sweep_meta) meta_columns(row, analytic_meta(p, c.grid_size));
        }
        rows[k] = std::move(row);
      });
      break;
    }
    case ExperimentKind::stability: {
      const std::size_t ne = c.epsilons.size();
      std::vector<Row> flat(points.size() * ne);
      parallel_for(flat.size(), c.jobs, [&](std::size_t idx) {
        const std::size_t k = idx / ne;
        const double eps = c.epsilons[idx % ne];
        const SystemParams p = params_at(points[k].raw);
        const StabilityResult s = stability_region(p, eps);
        Row row = base_row(c, points[k]);
        row.set("xi", std::nullopt);  // the critical rates replace the arrival rate
        row.set("epsilon", eps);
        row.set("dom_xi_sufficient", s.xi_sufficient);
        row.set("fav_xi_necessary", s.xi_necessary);
        row.set("dom_feasible", s.sufficient_feasible ? 1.0 : 0.0);
        row.set("fav_feasible", s.necessary_feasible ? 1.0 : 0.0);
        flat[idx] = std::move(row);
      });
      rows = std::move(flat);
      break;
    }
    case ExperimentKind::simulate:
    case ExperimentKind::compare: {
      rows.resize(points.size());
      if (c.kind == ExperimentKind::compare)
        parallel_for(points.size(), c.jobs, [&](std::size_t k) {
          rows[k] = base_row(c, points[k]);
          analytic_columns(rows[k], params_at(points[k].raw));
        });
      for (std::size_t k = 0; k < points.size(); ++k) {
        const SystemParams p = params_at(points[k].raw);
        if (c.kind == ExperimentKind::simulate) rows[k] = base_row(c, points[k]);
        Row& row = rows[k];
        const SimOutcome s = simulate_point(c, p);
        sim_columns(row, s, p);
        if (c.kind == ExperimentKind::compare)
          for (const char* src : {"exact", "lb", "dom", "fav"}) {
            const Cell a = row.cells[std::string(src) + "_p_s"];
            row.set(std::string("gap_") + src, a ? Cell(std::abs(s.p_s - *a)) : std::nullopt);
          }
        if (c.activity_bins > 0) {
          ensure_dir(curves);
          const double max_d = 5.0 / std::sqrt(p.lambda());
          const auto bins = activity_vs_distance(s.ensemble.runs, s.ensemble.topologies, c.activity_bins,
                                                 max_d, DistanceReference::transmitter, true);
          const double ps = success_probability_exact(p).p_s;
          std::vector<Cell> d, act, n, model;
          for (const auto& b : bins) {
            d.emplace_back(b.distance);
            act.emplace_back(b.activity);
            n.emplace_back(b.samples);
            model.emplace_back(conditional_active_prob(b.distance, ps, p));
          }
          const auto file = curves / ("activity_" + point_tag(k) + ".csv");
          write_curve(file, {"distance", "sim_activity", "sim_samples", "exact_activity"}, {d, act, n, model});
          outcome.files.push_back(file);
        }
        if (c.save_runs) write_runs(c.out / "runs", point_tag(k), s.ensemble);
      }
      break;
    }
    case ExperimentKind::meta: {
      rows.resize(points.size());
      std::vector<MetaOutcome> analytic(points.size());
      std::vector<std::optional<BetaFit>> beta(points.size());
      parallel_for(points.size(), c.jobs, [&](std::size_t k) {
        const SystemParams p = params_at(points[k].raw);
        analytic[k] = analytic_meta(p, c.grid_size);
        if (c.meta_beta) beta[k] = meta_distribution_beta(p);
      });
      const Eigen::ArrayXd grid = uniform_grid(c.grid_size);
      ensure_dir(curves);
      for (std::size_t k = 0; k < points.size(); ++k) {
        const SystemParams p = params_at(points[k].raw);
        Row row = base_row(c, points[k]);
        meta_columns(row, analytic[k]);
        std::vector<std::string> header{"u", "F_analytic"};
        std::vector<std::vector<Cell>> cols{cells_of(grid), cells_of(analytic[k].curve->cdf())};
        if (beta[k]) {
          const MetaCurve bc = beta[k]->point_mass ? MetaCurve::step(grid, beta[k]->m1) : beta[k]->to_curve(grid);
          row.set("beta_mu", beta[k]->mu);
          row.set("beta_b", beta[k]->point_mass ? Cell() : Cell(beta[k]->beta));
          row.set("beta_ks", bc.kolmogorov_distance(*analytic[k].curve));
          row.converged = row.converged && beta[k]->converged;
          header.push_back("F_beta");
          cols.push_back(cells_of(bc.cdf()));
        }
        if (c.meta_simulate) {
          const SimOutcome s = simulate_point(c, p);
          const EmpiricalMeta em = empirical_meta(s.ensemble.runs, grid, c.min_attempts);
          row.set("sim_meta_mean", em.curve.mean());
          row.set("sim_meta_links", static_cast<double>(em.links_used));
          row.set("sim_meta_excluded", static_cast<double>(em.links_excluded));
          row.set("sim_ks", em.curve.kolmogorov_distance(*analytic[k].curve));
          header.push_back("F_sim");
          cols.push_back(cells_of(em.curve.cdf()));
          if (c.save_runs) write_runs(c.out / "runs", point_tag(k), s.ensemble);
        }
        const auto file = curves / ("meta_" + point_tag(k) + ".csv");
        write_curve(file, header, cols);
        outcome.files.push_back(file);
        rows[k] = std::move(row);
      }
      break;
    }
  }

  for (const auto& r : rows) outcome.converged = outcome.converged && r.converged;
  outcome.rows = rows.size();
  const auto results = c.out / "results.csv";
  write_table(results, columns, rows);
  outcome.files.insert(outcome.files.begin(), results);
  outcome.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  json manifest;
  manifest["tool"] = "sinrlab";
  manifest["version"] = kVersion;
  manifest["kind"] = to_string(c.kind);
  manifest["config"] = json::parse(c.to_json());
  json seeds = {{"master", c.seed}, {"realizations", json::array()}};
  if (c.kind == ExperimentKind::simulate || c.kind == ExperimentKind::compare ||
      (c.kind == ExperimentKind::meta && c.meta_simulate))
    for (int k = 0; k < c.realizations; ++k) {
      const RealizationSeeds s = realization_seeds(c.seed, static_cast<std::size_t>(k));
      seeds["realizations"].push_back({{"index", k}, {"topology", s.topology}, {"dynamics", s.dynamics}});
    }
  manifest["seeds"] = seeds;
  manifest["points"] = points.size();
  manifest["rows"] = rows.size();
  manifest["converged"] = outcome.converged;
  manifest["wall_time_seconds"] = outcome.wall_seconds;
  manifest["versions"] = {{"sinrlab", kVersion},
                          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                        "." + std::to_string(EIGEN_MINOR_VERSION)},
                          {"compiler", __VERSION__}};
  json files = json::array();
  for (const auto& f : outcome.files) files.push_back(std::filesystem::relative(f, c.out).string());
  manifest["files"] = files;
  const auto mfile = c.out / "manifest.json";
  try {
    auto out = open_out(mfile);
    out << manifest.dump(2) << '\n';
  } catch (const std::ios::failure& e) {
    throw IoError("write failed for " + mfile.string() + ": " + e.what());
  }
  outcome.files.push_back(mfile);
  return outcome;
}

}  // namespace sinrlab
