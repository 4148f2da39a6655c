#include "ehsim/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"

#include "ehsim/bounds.hpp"
#include "ehsim/errors.hpp"
#include "ehsim/numerics.hpp"
#include "ehsim/serialize.hpp"
#include "ehsim/verify.hpp"
#include "ehsim/version.hpp"

namespace ehsim::cli {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (const char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') {
    throw ConfigError("cannot parse number '" + s + "' in " + what);
  }
  return v;
}

std::vector<double> parse_double_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  for (const auto& tok : split(s, '|')) out.push_back(parse_double(tok, what));
  return out;
}

std::string iso8601_now_utc() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ordered_json manifest_json(const std::string& command, const ordered_json& config,
                           const std::vector<std::string>& outputs) {
  ordered_json m;
  m["schema_version"] = 1;
  m["kind"] = "run_manifest";
  m["tool"] = "ehsim";
  m["version"] = kVersion;
  m["command"] = command;
  m["created_utc"] = iso8601_now_utc();
  m["config"] = config;
  m["outputs"] = outputs;
  return m;
}

// Indented "key: value" rendering of a JSON document for terminal use.
void print_human(const ordered_json& j, std::ostream& os, int indent = 0) {
  const std::string pad(indent, ' ');
  for (const auto& [key, value] : j.items()) {
    if (value.is_object()) {
      os << pad << key << ":\n";
      print_human(value, os, indent + 2);
    } else if (value.is_array()) {
      os << pad << key << ": " << value.dump() << "\n";
    } else {
      os << pad << key << ": "
         << (value.is_string() ? value.get<std::string>() : value.dump()) << "\n";
    }
  }
}

}  // namespace

std::string format_g12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

model::ArrivalModel parse_arrival_spec(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) {
    throw ConfigError("arrival spec '" + spec + "' must look like kind:params");
  }
  const std::string kind = spec.substr(0, colon);
  const std::string rest = spec.substr(colon + 1);
  if (kind == "bernoulli") {
    double p = std::numeric_limits<double>::quiet_NaN();
    double e = std::numeric_limits<double>::quiet_NaN();
    for (const auto& item : split(rest, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("bernoulli spec expects p=..,e=.. but got '" + item + "'");
      }
      const std::string key = item.substr(0, eq);
      const double val = parse_double(item.substr(eq + 1), "arrival spec");
      if (key == "p") p = val;
      else if (key == "e") e = val;
      else throw ConfigError("unknown bernoulli parameter '" + key + "'");
    }
    if (std::isnan(p) || std::isnan(e)) {
      throw ConfigError("bernoulli spec requires both p= and e=");
    }
    return model::ArrivalModel::bernoulli(p, e);
  }
  if (kind == "uniform") {
    const auto parts = split(rest, ',');
    if (parts.size() != 2) throw ConfigError("uniform spec expects lo,hi");
    return model::ArrivalModel::uniform(parse_double(parts[0], "uniform lo"),
                                        parse_double(parts[1], "uniform hi"));
  }
  if (kind == "discrete") {
    std::vector<double> values, probs;
    for (const auto& item : split(rest, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("discrete spec expects values=..|..,probs=..|..");
      }
      const std::string key = item.substr(0, eq);
      if (key == "values") values = parse_double_list(item.substr(eq + 1), "discrete values");
      else if (key == "probs") probs = parse_double_list(item.substr(eq + 1), "discrete probs");
      else throw ConfigError("unknown discrete parameter '" + key + "'");
    }
    return model::ArrivalModel::discrete(std::move(values), std::move(probs));
  }
  throw ConfigError("unknown arrival kind '" + kind +
                    "' (expected bernoulli, uniform, or discrete)");
}

ordered_json bounds_json(const BoundsOptions& opt) {
  ordered_json j;
  j["schema_version"] = 1;
  if (opt.mode == "tx_rx") {
    if (!(opt.p >= 0.0 && opt.p <= 1.0) || !(opt.q >= 0.0 && opt.q <= 1.0)) {
      throw ConfigError("bounds: p and q must be in [0, 1]");
    }
    j["kind"] = "rx_bounds_report";
    j["p"] = opt.p;
    j["q"] = opt.q;
    if (std::min(opt.p, opt.q) > 0.0) {
      const auto ub = bounds::unit_battery_rx_upper_bound(opt.p, opt.q);
      j["gamma_star"] = ub.gamma_star;
      j["t_ub_rx_bits"] = ub.t_ub;
      j["t_lb_rx_bits"] = bounds::ctp_lower_bound_guarantee(ub.t_ub);
    } else {
      j["t_ub_rx_bits"] = 0.0;
      j["t_lb_rx_bits"] = 0.0;
    }
    if (!opt.arrivals.empty()) {
      const auto arr = parse_arrival_spec(opt.arrivals);
      ordered_json g;
      g["arrivals"] = arr.describe();
      g["rx_upper_general_bits"] = bounds::rx_upper_bound_general(arr, opt.q);
      if (arr.kind() == model::ArrivalModel::Kind::bernoulli) {
        const double p_arr = arr.bernoulli_p();
        if (p_arr > 0.0 && p_arr < 1.0) {
          const double b =
              std::isnan(opt.b_max) ? arr.bernoulli_energy() : opt.b_max;
          const double b_eff = std::min(arr.bernoulli_energy(), b);
          g["rx_simple_lower_bits"] =
              bounds::rx_simple_lower_bound(p_arr, opt.q, b_eff);
        }
      }
      j["general"] = g;
    }
    return j;
  }
  if (opt.mode != "tx_only") {
    throw ConfigError("bounds: mode must be tx_only or tx_rx");
  }
  if (opt.arrivals.empty()) {
    throw ConfigError("bounds: --arrivals is required in tx_only mode");
  }
  const auto arr = parse_arrival_spec(opt.arrivals);
  const double b_max = std::isnan(opt.b_max) ? arr.max_value() : opt.b_max;
  if (!(b_max > 0.0)) throw ConfigError("bounds: b_max must be positive");
  j["kind"] = "bounds_report";
  j["arrivals"] = arr.describe();
  j["b_max"] = b_max;
  const bool exact_p_path =
      arr.kind() == model::ArrivalModel::Kind::bernoulli &&
      arr.bernoulli_p() > 0.0 && arr.bernoulli_p() < 1.0;
  if (exact_p_path) {
    const auto r = bounds::bernoulli_bounds_report(arr.bernoulli_p(),
                                                   arr.bernoulli_energy(), b_max);
    j["t_ub_bits"] = r.t_ub;
    j["t_lb_bits"] = r.t_lb;
    j["gap_bound_bits"] = r.gap_bound;
    j["k"] = r.k;
    j["branch"] = r.branch;
    if (arr.median() > 0.0) {
      j["general_gap_bound_bits"] = bounds::general_gap_bound(arr);
    }
  } else {
    const auto r = bounds::general_bounds_report(arr, b_max);
    j["t_ub_bits"] = r.t_ub;
    j["t_lb_bits"] = r.t_lb;
    j["gap_bound_bits"] = r.gap_bound;
    j["delta"] = arr.median();
  }
  const auto bracket = bounds::capacity_bracket(arr, opt.c_input);
  ordered_json cb;
  cb["lower_bits"] = bracket.lower;
  cb["upper_bits"] = bracket.upper;
  cb["c_input_bits"] = bracket.c_input;
  cb["note"] =
      "lower edge omits the coding constant unless c_input is supplied; "
      "optimistic at c_input=0";
  j["capacity_bracket"] = cb;
  return j;
}

ordered_json solve_k_json(double p) {
  const double k = bounds::solve_gap_constant(p);
  ordered_json j;
  j["schema_version"] = 1;
  j["kind"] = "gap_constant";
  j["p"] = p;
  j["k"] = k;
  j["gap_bound_bits"] = bounds::bernoulli_gap_bound(p);
  j["residual"] = bounds::gap_constant_residual(p, k);
  return j;
}

sim::SimConfig make_sim_config(const SimulateOptions& opt) {
  sim::SimConfig cfg;
  cfg.n_slots = opt.slots;
  cfg.n_replications = opt.reps;
  cfg.seed = opt.seed;
  if (opt.warmup >= 0) cfg.warmup_slots = static_cast<std::uint64_t>(opt.warmup);

  if (opt.mode == "tx_only") cfg.mode = sim::Mode::tx_only;
  else if (opt.mode == "tx_rx") cfg.mode = sim::Mode::tx_rx;
  else throw ConfigError("simulate: mode must be tx_only or tx_rx");

  if (opt.prefactor == "half") cfg.prefactor = sim::Prefactor::half;
  else if (opt.prefactor == "one") cfg.prefactor = sim::Prefactor::one;
  else if (opt.prefactor != "auto") {
    throw ConfigError("simulate: prefactor must be auto, half, or one");
  }

  if (cfg.mode == sim::Mode::tx_rx) {
    if (opt.rx_policy == "ctp") cfg.rx_policy = sim::RxPolicyKind::ctp;
    else if (opt.rx_policy == "simple") cfg.rx_policy = sim::RxPolicyKind::simple;
    else throw ConfigError("simulate: rx-policy must be ctp or simple");
    cfg.p = opt.p;
    cfg.q = opt.q;
    if (cfg.rx_policy == sim::RxPolicyKind::ctp) {
      if (!std::isnan(opt.ctp_coin)) {
        if (!(opt.ctp_coin >= 0.0 && opt.ctp_coin <= 1.0)) {
          throw ConfigError("simulate: ctp-coin must be in [0, 1]");
        }
        cfg.ctp_coin = opt.ctp_coin;
      }
      if (opt.ctp_gate == "latch_once") cfg.ctp_gate = policies::CtpGateMode::latch_once;
      else if (opt.ctp_gate == "relatch_after_tx") {
        cfg.ctp_gate = policies::CtpGateMode::relatch_after_tx;
      } else {
        throw ConfigError("simulate: ctp-gate must be latch_once or relatch_after_tx");
      }
      cfg.force_gate_open = opt.force_gate_open;
      if (opt.want_trace) cfg.trace_slots = cfg.n_slots;
      return cfg;
    }
  }

  cfg.arrivals = parse_arrival_spec(opt.arrivals);
  cfg.b_max = std::isnan(opt.b_max) ? std::max(1.0, cfg.arrivals.max_value())
                                    : opt.b_max;
  std::string pol = opt.policy;
  if (pol.empty()) {
    const bool exact_p =
        cfg.arrivals.kind() == model::ArrivalModel::Kind::bernoulli &&
        cfg.arrivals.bernoulli_p() > 0.0 && cfg.arrivals.bernoulli_p() < 1.0;
    pol = exact_p ? "cfp" : "cfp_quantized";
  }
  if (pol == "cfp") cfg.tx_policy = sim::TxPolicyKind::cfp;
  else if (pol == "cfp_quantized") cfg.tx_policy = sim::TxPolicyKind::cfp_quantized;
  else if (pol == "greedy") cfg.tx_policy = sim::TxPolicyKind::greedy;
  else throw ConfigError("simulate: policy must be cfp, cfp_quantized, or greedy");
  if (cfg.mode == sim::Mode::tx_rx) {
    cfg.rx_on_cost = opt.rx_on_cost;
    cfg.rx_b_max = std::isnan(opt.rx_b_max) ? opt.rx_on_cost : opt.rx_b_max;
  }
  if (opt.want_trace) cfg.trace_slots = cfg.n_slots;
  return cfg;
}

ordered_json simulate_flag_config(const SimulateOptions& opt,
                                  const sim::SimConfig& cfg) {
  ordered_json c;
  c["mode"] = opt.mode;
  const bool ctp = cfg.mode == sim::Mode::tx_rx &&
                   cfg.rx_policy == sim::RxPolicyKind::ctp;
  if (ctp) {
    c["rx-policy"] = "ctp";
    c["p"] = cfg.p;
    c["q"] = cfg.q;
    c["ctp-coin"] = cfg.ctp_coin.value_or(cfg.q);
    c["ctp-gate"] = cfg.ctp_gate == policies::CtpGateMode::latch_once
                        ? "latch_once"
                        : "relatch_after_tx";
    if (cfg.force_gate_open) c["force-gate-open"] = true;
  } else {
    c["arrivals"] = cfg.arrivals.describe();
    switch (cfg.tx_policy) {
      case sim::TxPolicyKind::cfp: c["policy"] = "cfp"; break;
      case sim::TxPolicyKind::cfp_quantized: c["policy"] = "cfp_quantized"; break;
      case sim::TxPolicyKind::greedy: c["policy"] = "greedy"; break;
    }
    c["b-max"] = cfg.b_max;
    if (cfg.mode == sim::Mode::tx_rx) {
      c["rx-policy"] = "simple";
      c["q"] = cfg.q;
      c["rx-on-cost"] = cfg.rx_on_cost;
      c["rx-b-max"] = cfg.rx_b_max;
    }
  }
  c["prefactor"] =
      sim::resolved_prefactor(cfg) == sim::Prefactor::half ? "half" : "one";
  c["slots"] = cfg.n_slots;
  c["reps"] = cfg.n_replications;
  c["seed"] = cfg.seed;
  c["warmup"] = sim::resolved_warmup(cfg);
  return c;
}

namespace {

std::string csv_sanitize(std::string s) {
  for (auto& ch : s) {
    if (ch == ',' || ch == '\n') ch = ';';
  }
  return s;
}

// RFC 4180 quoting for cells that carry commas (arrival spec strings do).
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

struct SweepRow {
  std::string arrivals;
  double p = std::numeric_limits<double>::quiet_NaN();
  double b_max = 0.0;
  std::string policy;
  double t_ub = std::numeric_limits<double>::quiet_NaN();
  double t_lb = std::numeric_limits<double>::quiet_NaN();
  double sim_mean = std::numeric_limits<double>::quiet_NaN();
  double sim_stderr = std::numeric_limits<double>::quiet_NaN();
  double gap_bound = std::numeric_limits<double>::quiet_NaN();
  std::string error;
};

void append_row(const SweepRow& r, std::string& csv, ordered_json& rows) {
  const auto cell = [](double v) { return std::isnan(v) ? "" : format_g12(v); };
  csv += csv_field(r.arrivals) + "," + cell(r.p) + ",," + cell(r.b_max) + "," +
         r.policy + "," + cell(r.t_ub) + "," + cell(r.t_lb) + "," +
         cell(r.sim_mean) + "," + cell(r.sim_stderr) + "," + cell(r.gap_bound) +
         "," + csv_sanitize(r.error) + "\n";
  ordered_json j;
  j["arrivals"] = r.arrivals;
  if (!std::isnan(r.p)) j["p"] = r.p; else j["p"] = nullptr;
  j["q"] = nullptr;
  j["b_max"] = r.b_max;
  j["policy"] = r.policy;
  const auto put = [&j](const char* key, double v) {
    if (std::isnan(v)) j[key] = nullptr; else j[key] = v;
  };
  put("t_ub", r.t_ub);
  put("t_lb_analytic", r.t_lb);
  put("t_sim_mean", r.sim_mean);
  put("t_sim_stderr", r.sim_stderr);
  put("gap_bound", r.gap_bound);
  if (r.error.empty()) j["error"] = nullptr; else j["error"] = r.error;
  rows.push_back(j);
}

}  // namespace

SweepResult run_sweep(const SweepOptions& opt) {
  for (const auto& kind : opt.kinds) {
    if (kind != "bernoulli" && kind != "uniform") {
      throw ConfigError("sweep: kinds must be bernoulli and/or uniform");
    }
  }
  for (const double b : opt.b_grid) {
    if (!(b > 0.0)) throw ConfigError("sweep: battery sizes must be positive");
  }
  SweepResult out;
  out.csv =
      "arrivals,p,q,b_max,policy,t_ub,t_lb_analytic,t_sim_mean,t_sim_stderr,"
      "gap_bound,error\n";
  out.rows = ordered_json::array();

  const auto simulate_row = [&](const model::ArrivalModel& arr,
                                sim::TxPolicyKind pol, double b,
                                SweepRow& row) {
    sim::SimConfig cfg;
    cfg.mode = sim::Mode::tx_only;
    cfg.tx_policy = pol;
    cfg.arrivals = arr;
    cfg.b_max = b;
    cfg.n_slots = opt.slots;
    cfg.n_replications = opt.reps;
    cfg.seed = opt.seed;
    const auto est = sim::run(cfg);
    row.sim_mean = est.mean;
    row.sim_stderr = est.std_err;
  };

  for (const auto& kind : opt.kinds) {
    for (const double b : opt.b_grid) {
      if (kind == "bernoulli") {
        for (const double p : opt.p_grid) {
          SweepRow row;
          row.p = p;
          row.b_max = b;
          row.policy = "cfp";
          try {
            const auto arr = model::ArrivalModel::bernoulli(p, b);
            row.arrivals = arr.describe();
            row.t_ub = bounds::transmitter_upper_bound(arr);
            row.t_lb = bounds::cfp_lower_bound_bernoulli(p, b);
            row.gap_bound = bounds::bernoulli_gap_bound(p);
            simulate_row(arr, sim::TxPolicyKind::cfp, b, row);
          } catch (const std::exception& e) {
            if (row.arrivals.empty()) {
              row.arrivals = "bernoulli:p=" + format_g12(p) + ",e=" + format_g12(b);
            }
            row.error = e.what();
          }
          append_row(row, out.csv, out.rows);
        }
      } else {
        SweepRow row;
        row.b_max = b;
        row.policy = "cfp_quantized";
        try {
          const auto arr = model::ArrivalModel::uniform(0.0, b);
          row.arrivals = arr.describe();
          const auto rep = bounds::general_bounds_report(arr, b);
          row.t_ub = rep.t_ub;
          row.t_lb = rep.t_lb;
          row.gap_bound = rep.gap_bound;
          simulate_row(arr, sim::TxPolicyKind::cfp_quantized, b, row);
        } catch (const std::exception& e) {
          if (row.arrivals.empty()) {
            row.arrivals = "uniform:0," + format_g12(b);
          }
          row.error = e.what();
        }
        append_row(row, out.csv, out.rows);
      }
    }
  }
  return out;
}

std::string trace_csv(const std::vector<sim::SlotRecord>& records) {
  std::string out = "slot,h,spend,battery_tx,battery_rx,rate\n";
  for (const auto& r : records) {
    out += std::to_string(r.slot) + "," + format_g12(r.h) + "," +
           format_g12(r.spend) + "," + format_g12(r.battery_tx) + "," +
           (std::isnan(r.battery_rx) ? "" : format_g12(r.battery_rx)) + "," +
           format_g12(r.rate) + "\n";
  }
  return out;
}

std::string resolve_out_path(const std::string& path) {
  const std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  const char* dir = std::getenv("EHSIM_OUT_DIR");
  if (dir != nullptr && *dir != '\0') {
    return (std::filesystem::path(dir) / p).string();
  }
  return path;
}

void write_text_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ConfigError("cannot open '" + path + "' for writing");
  f << content;
  if (!f) throw ConfigError("failed while writing '" + path + "'");
}

namespace {

// Writes the machine document (and optional extra outputs) plus a manifest
// describing how to reproduce them.
void deliver(const std::string& command, const std::string& machine_doc,
             const std::string& human_doc, bool as_json,
             const std::string& out_path, const ordered_json& config,
             const std::vector<std::pair<std::string, std::string>>& extra_files) {
  std::vector<std::string> outputs;
  std::string manifest_path;
  if (!out_path.empty()) {
    const std::string resolved = resolve_out_path(out_path);
    write_text_file(resolved, machine_doc);
    outputs.push_back(resolved);
  }
  for (const auto& [path, content] : extra_files) {
    const std::string resolved = resolve_out_path(path);
    write_text_file(resolved, content);
    outputs.push_back(resolved);
  }
  if (!outputs.empty()) {
    manifest_path = outputs.front() + ".manifest.json";
    write_text_file(manifest_path,
                    manifest_json(command, config, outputs).dump(2) + "\n");
  }
  if (as_json) {
    std::cout << machine_doc;
  } else {
    std::cout << human_doc;
  }
  if (!manifest_path.empty()) {
    std::cerr << "wrote " << outputs.size() << " file(s); manifest: "
              << manifest_path << "\n";
  }
}

ordered_json bounds_flag_config(const BoundsOptions& o) {
  ordered_json c;
  c["mode"] = o.mode;
  if (!o.arrivals.empty()) c["arrivals"] = o.arrivals;
  if (o.mode == "tx_rx") {
    c["p"] = o.p;
    c["q"] = o.q;
  }
  if (!std::isnan(o.b_max)) c["b-max"] = o.b_max;
  c["c-input"] = o.c_input;
  return c;
}

}  // namespace

// ---- config files -----------------------------------------------------
//
// CLI11 2.4 does not process set_config() attached to subcommands, so the
// --config flag is handled here: the file's key=value pairs are injected as
// --key=value tokens right after the subcommand name, skipping any key the
// user already gave explicitly. Explicit flags therefore always win.

namespace {

std::string trim_ws(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct ConfigPair {
  std::string key;
  std::string value;
};

std::vector<ConfigPair> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::vector<ConfigPair> pairs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim_ws(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[' && t.back() == ']') continue;  // section headers: decorative
    const auto eq = t.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("config: expected key=value at " + path + ":" +
                        std::to_string(lineno));
    }
    std::string key = trim_ws(t.substr(0, eq));
    std::string value = trim_ws(t.substr(eq + 1));
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    if (key.empty()) {
      throw ConfigError("config: empty key at " + path + ":" +
                        std::to_string(lineno));
    }
    if (key == "config") {
      throw ConfigError("config: files cannot nest --config");
    }
    if (value.size() >= 2 && ((value.front() == '"' && value.back() == '"') ||
                              (value.front() == '\'' && value.back() == '\''))) {
      value = value.substr(1, value.size() - 2);
    }
    pairs.push_back({key, value});
  }
  return pairs;
}

// argv (without the program name) -> argv with config-file pairs expanded.
std::vector<std::string> expand_config_args(std::vector<std::string> args) {
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) break;  // let CLI11 report the missing value
      config_path = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(std::string("--config=").size());
    }
  }
  if (config_path.empty()) return args;
  if (args.empty() || args[0].rfind('-', 0) == 0) return args;  // no subcommand

  std::set<std::string> explicit_keys;
  for (const auto& a : args) {
    if (a.rfind("--", 0) != 0 || a.size() <= 2) continue;
    const auto eq = a.find('=');
    explicit_keys.insert(a.substr(2, eq == std::string::npos ? std::string::npos
                                                             : eq - 2));
  }

  std::vector<std::string> injected;
  for (const auto& [key, value] : read_config_file(config_path)) {
    if (explicit_keys.count(key)) continue;
    injected.push_back("--" + key + "=" + value);
  }
  args.insert(args.begin() + 1, injected.begin(), injected.end());
  return args;
}

}  // namespace

int run_main(int argc, const char* const* argv) {
  CLI::App app{"slotted-time Monte Carlo simulator and analytic bounds engine "
               "for an energy-harvesting fading link"};
  app.require_subcommand(1);

  bool as_json = false;
  std::string out_path;
  std::string trace_path;
  std::string config_path;

  BoundsOptions bopt;
  SimulateOptions sopt;
  SweepOptions wopt;
  double solvek_p = 0.5;
  verify::Options vopt;

  const auto add_io = [&](CLI::App* sc) {
    sc->add_flag("--json", as_json, "print the machine-readable JSON document");
    sc->add_option("--out", out_path,
                   "write the machine document here (a .manifest.json is "
                   "written alongside; relative paths resolve under "
                   "$EHSIM_OUT_DIR)");
    sc->add_option("--config", config_path,
                   "read defaults from a key=value file (explicit flags win)");
  };

  auto* sb = app.add_subcommand(
      "bounds", "analytic ceilings, achievable schedule rates, and gap bounds");
  sb->add_option("--arrivals", bopt.arrivals,
                 "arrival spec, e.g. bernoulli:p=0.5,e=10 | uniform:0,10 | "
                 "discrete:values=1|2,probs=0.5|0.5");
  sb->add_option("--mode", bopt.mode, "tx_only | tx_rx")->capture_default_str();
  sb->add_option("--p", bopt.p, "transmitter harvest rate (tx_rx)")
      ->capture_default_str();
  sb->add_option("--q", bopt.q, "receiver harvest rate (tx_rx)")
      ->capture_default_str();
  sb->add_option("--b-max", bopt.b_max,
                 "battery capacity (default: sup of the arrival support)");
  sb->add_option("--c-input", bopt.c_input,
                 "coding constant for the capacity bracket's lower edge")
      ->capture_default_str();
  add_io(sb);

  auto* sk = app.add_subcommand("solve-k",
                                "solve the gap fixed-point constant k(p)");
  sk->add_option("--p", solvek_p, "arrival rate p in (0, 1)")->required();
  add_io(sk);

  auto* ss = app.add_subcommand("simulate", "Monte Carlo throughput estimate");
  ss->add_option("--arrivals", sopt.arrivals, "arrival spec (see bounds)")
      ->capture_default_str();
  ss->add_option("--mode", sopt.mode, "tx_only | tx_rx")->capture_default_str();
  ss->add_option("--policy", sopt.policy,
                 "cfp | cfp_quantized | greedy (default: cfp for bernoulli "
                 "arrivals, else cfp_quantized)");
  ss->add_option("--rx-policy", sopt.rx_policy, "ctp | simple (tx_rx)")
      ->capture_default_str();
  ss->add_option("--p", sopt.p, "transmitter harvest rate (tx_rx ctp)")
      ->capture_default_str();
  ss->add_option("--q", sopt.q, "receiver harvest rate (tx_rx)")
      ->capture_default_str();
  ss->add_option("--b-max", sopt.b_max,
                 "battery capacity (default: sup of the arrival support)");
  ss->add_option("--rx-on-cost", sopt.rx_on_cost,
                 "energy the receiver spends per listening slot")
      ->capture_default_str();
  ss->add_option("--rx-b-max", sopt.rx_b_max,
                 "receiver battery capacity (default: rx-on-cost)");
  ss->add_option("--prefactor", sopt.prefactor, "auto | half | one")
      ->capture_default_str();
  ss->add_option("--slots", sopt.slots, "slots per replication")
      ->capture_default_str();
  ss->add_option("--reps", sopt.reps, "independent replications")
      ->capture_default_str();
  ss->add_option("--seed", sopt.seed, "base RNG seed")->capture_default_str();
  ss->add_option("--warmup", sopt.warmup,
                 "warmup slots excluded from statistics (-1: slots/100)")
      ->capture_default_str();
  ss->add_option("--ctp-gate", sopt.ctp_gate, "latch_once | relatch_after_tx")
      ->capture_default_str();
  ss->add_option("--ctp-coin", sopt.ctp_coin,
                 "gate coin probability (default: q)");
  ss->add_flag("--force-gate-open", sopt.force_gate_open,
               "start with the threshold gate already open");
  ss->add_option("--trace", trace_path,
                 "write a per-slot CSV (slot,h,spend,battery_tx,battery_rx,"
                 "rate) of replication 0");
  add_io(ss);

  auto* sw = app.add_subcommand(
      "sweep", "bounds and simulation over a parameter grid (CSV)");
  sw->add_option("--kinds", wopt.kinds, "arrival kinds: bernoulli, uniform")
      ->delimiter(',')
      ->capture_default_str();
  sw->add_option("--p-grid", wopt.p_grid, "comma-separated p values")
      ->delimiter(',')
      ->capture_default_str();
  sw->add_option("--b-grid", wopt.b_grid, "comma-separated battery sizes")
      ->delimiter(',')
      ->capture_default_str();
  sw->add_option("--slots", wopt.slots, "slots per replication")
      ->capture_default_str();
  sw->add_option("--reps", wopt.reps, "independent replications")
      ->capture_default_str();
  sw->add_option("--seed", wopt.seed, "base RNG seed")->capture_default_str();
  add_io(sw);

  auto* sv = app.add_subcommand("verify", "run the acceptance suite");
  sv->add_option("--seed", vopt.seed, "base RNG seed for all suite runs")
      ->capture_default_str();
  sv->add_option("--slots", vopt.slots, "slots per simulation run")
      ->capture_default_str();
  sv->add_option("--reps", vopt.reps, "replications per simulation run")
      ->capture_default_str();
  add_io(sv);

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_config_args(std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    app.exit(e);
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (sb->parsed()) {
      const ordered_json j = bounds_json(bopt);
      std::ostringstream human;
      print_human(j, human);
      deliver("bounds", j.dump(2) + "\n", human.str(), as_json, out_path,
              bounds_flag_config(bopt), {});
      return 0;
    }
    if (sk->parsed()) {
      const ordered_json j = solve_k_json(solvek_p);
      std::ostringstream human;
      print_human(j, human);
      ordered_json cfg;
      cfg["p"] = solvek_p;
      deliver("solve-k", j.dump(2) + "\n", human.str(), as_json, out_path, cfg, {});
      return 0;
    }
    if (ss->parsed()) {
      sopt.want_trace = !trace_path.empty();
      const sim::SimConfig cfg = make_sim_config(sopt);
      const auto est = sim::run(cfg);
      const std::string doc = serialize::estimate_json(cfg, est);
      std::ostringstream human;
      human << "throughput: " << format_g12(est.mean) << " +- "
            << format_g12(est.std_err) << " bits/slot\n"
            << "measured slots: " << est.n_effective << " ("
            << cfg.n_replications << " reps x " << cfg.n_slots
            << " slots, warmup " << sim::resolved_warmup(cfg) << ")\n"
            << "epochs: " << est.extras.epoch_count;
      if (std::isfinite(est.extras.mean_inter_epoch_time)) {
        human << " (mean gap " << format_g12(est.extras.mean_inter_epoch_time)
              << " slots)";
      }
      human << "\n";
      std::vector<std::pair<std::string, std::string>> extra;
      if (!trace_path.empty()) {
        extra.emplace_back(trace_path, trace_csv(est.trace));
      }
      deliver("simulate", doc, human.str(), as_json, out_path,
              simulate_flag_config(sopt, cfg), extra);
      return 0;
    }
    if (sw->parsed()) {
      const SweepResult res = run_sweep(wopt);
      ordered_json j;
      j["schema_version"] = 1;
      j["kind"] = "sweep";
      j["rows"] = res.rows;
      const std::string machine = as_json ? j.dump(2) + "\n" : res.csv;
      deliver("sweep", machine, res.csv, as_json, out_path,
              ordered_json{{"kinds", wopt.kinds},
                           {"p-grid", wopt.p_grid},
                           {"b-grid", wopt.b_grid},
                           {"slots", wopt.slots},
                           {"reps", wopt.reps},
                           {"seed", wopt.seed}},
              {});
      return 0;
    }
    if (sv->parsed()) {
      const verify::Report report = verify::run_acceptance(vopt);
      std::ostream& lines = as_json ? std::cerr : std::cout;
      for (const auto& c : report.criteria) {
        lines << verify::format_criterion_line(c) << "\n";
      }
      lines << (report.all_pass ? "ACCEPTANCE: all criteria passed"
                                : "ACCEPTANCE: FAILURES present")
            << " (total simulated slots: " << report.total_slots << ")\n";
      const std::string doc = serialize::acceptance_report_json(report);
      if (as_json) std::cout << doc;
      if (!out_path.empty()) {
        const std::string resolved = resolve_out_path(out_path);
        write_text_file(resolved, doc);
        ordered_json cfg;
        cfg["seed"] = vopt.seed;
        cfg["slots"] = vopt.slots;
        cfg["reps"] = vopt.reps;
        write_text_file(resolved + ".manifest.json",
                        manifest_json("verify", cfg, {resolved}).dump(2) + "\n");
      }
      return report.all_pass ? 0 : 1;
    }
    return 0;
  } catch (const UnsupportedRegime& e) {
    std::cerr << "error (unsupported regime): " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace ehsim::cli
