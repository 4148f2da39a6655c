#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "ehsim/bounds.hpp"
#include "ehsim/cli.hpp"
#include "ehsim/errors.hpp"
#include "ehsim/serialize.hpp"
#include "ehsim/sim.hpp"

using namespace ehsim;

namespace {

// Minimal RFC 4180 field splitter for checking sweep rows.
std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

TEST_CASE("CSV number formatting is stable") {
  CHECK(cli::format_g12(0.5) == "0.5");
  CHECK(cli::format_g12(1.0 / 3.0) == "0.333333333333");
  CHECK(cli::format_g12(1.72971580931864863) == "1.72971580932");
  CHECK(cli::format_g12(1e-7) == "1e-07");
  CHECK(cli::format_g12(0.0) == "0");
}

TEST_CASE("arrival spec parsing") {
  const auto b = cli::parse_arrival_spec("bernoulli:p=0.5,e=10");
  CHECK(b.describe() == "bernoulli:p=0.5,e=10");
  const auto u = cli::parse_arrival_spec("uniform:0,10");
  CHECK(u.describe() == "uniform:0,10");
  const auto d =
      cli::parse_arrival_spec("discrete:values=1|2,probs=0.5|0.5");
  CHECK(d.describe() == "discrete:values=1|2,probs=0.5|0.5");
  CHECK(d.mean() == doctest::Approx(1.5));

  CHECK_THROWS_AS((void)cli::parse_arrival_spec("bernoulli:p=0.5"), ConfigError);
  CHECK_THROWS_AS((void)cli::parse_arrival_spec("uniform:5"), ConfigError);
  CHECK_THROWS_AS((void)cli::parse_arrival_spec("gamma:2,3"), ConfigError);
  CHECK_THROWS_AS((void)cli::parse_arrival_spec(""), ConfigError);
  CHECK_THROWS_AS((void)cli::parse_arrival_spec("bernoulli:p=x,e=1"), ConfigError);
}

TEST_CASE("bounds document: exact-p path") {
  cli::BoundsOptions opt;
  opt.arrivals = "bernoulli:p=0.5,e=10";
  const auto doc = cli::bounds_json(opt);
  CHECK(doc.at("kind") == "bounds_report");
  CHECK(doc.at("t_ub_bits").get<double>() ==
        doctest::Approx(1.72971580931864863).epsilon(1e-12));
  CHECK(doc.at("t_lb_bits").get<double>() ==
        doctest::Approx(0.81687763723063982).epsilon(1e-10));
  CHECK(doc.at("k").get<double>() ==
        doctest::Approx(6.053437703349067).epsilon(1e-8));
  CHECK(doc.at("branch") == "b_max_gt_k");
  CHECK(doc.at("gap_bound_bits").get<double>() ==
        doctest::Approx(1.4091632846977835).epsilon(1e-8));
  CHECK(doc.contains("capacity_bracket"));
  const auto& br = doc.at("capacity_bracket");
  CHECK(br.at("upper_bits").get<double>() ==
        doc.at("t_ub_bits").get<double>());
}

TEST_CASE("bounds document: general path") {
  cli::BoundsOptions opt;
  opt.arrivals = "uniform:0,10";
  const auto doc = cli::bounds_json(opt);
  CHECK(doc.at("kind") == "bounds_report");
  CHECK(doc.at("delta").get<double>() == 5.0);
  CHECK(doc.at("t_ub_bits").get<double>() ==
        doctest::Approx(1.59806474933630938).epsilon(1e-12));
  const double gap = doc.at("t_ub_bits").get<double>() -
                     doc.at("t_lb_bits").get<double>();
  CHECK(gap <= 1.78);
}

TEST_CASE("bounds document: two-sided path") {
  cli::BoundsOptions opt;
  opt.mode = "tx_rx";
  opt.p = 0.5;
  opt.q = 0.5;
  const auto doc = cli::bounds_json(opt);
  CHECK(doc.at("kind") == "rx_bounds_report");
  CHECK(doc.at("gamma_star").get<double>() ==
        doctest::Approx(0.69314718055994531).epsilon(1e-14));
  CHECK(doc.at("t_ub_rx_bits").get<double>() ==
        doctest::Approx(0.33776346666774511).epsilon(1e-12));
  CHECK(doc.at("t_lb_rx_bits").get<double>() ==
        doctest::Approx(0.5 * 0.33776346666774511).epsilon(1e-12));
}

TEST_CASE("gap-constant document") {
  const auto doc = cli::solve_k_json(0.5);
  CHECK(doc.at("p").get<double>() == 0.5);
  CHECK(doc.at("k").get<double>() ==
        doctest::Approx(6.053437703349067).epsilon(1e-8));
  CHECK(doc.at("gap_bound_bits").get<double>() ==
        doctest::Approx(1.4091632846977835).epsilon(1e-8));
  CHECK(std::fabs(doc.at("residual").get<double>()) < 1e-9);
}

TEST_CASE("simulate option resolution") {
  cli::SimulateOptions opt;
  opt.arrivals = "bernoulli:p=0.5,e=10";
  const auto cfg = cli::make_sim_config(opt);
  CHECK(cfg.tx_policy == sim::TxPolicyKind::cfp);  // exact-p default
  CHECK(cfg.b_max == 10.0);                        // sup of support
  CHECK(cfg.mode == sim::Mode::tx_only);
  CHECK(sim::resolved_warmup(cfg) == cfg.n_slots / 100);

  cli::SimulateOptions uo;
  uo.arrivals = "uniform:0,10";
  const auto ucfg = cli::make_sim_config(uo);
  CHECK(ucfg.tx_policy == sim::TxPolicyKind::cfp_quantized);
  CHECK(ucfg.b_max == 10.0);

  cli::SimulateOptions co;
  co.mode = "tx_rx";
  co.rx_policy = "ctp";
  const auto ccfg = cli::make_sim_config(co);
  CHECK(ccfg.mode == sim::Mode::tx_rx);
  CHECK(sim::resolved_prefactor(ccfg) == sim::Prefactor::one);

  cli::SimulateOptions bad;
  bad.policy = "warp";
  CHECK_THROWS_AS((void)cli::make_sim_config(bad), ConfigError);
  cli::SimulateOptions bad2;
  bad2.prefactor = "third";
  CHECK_THROWS_AS((void)cli::make_sim_config(bad2), ConfigError);
}

TEST_CASE("flag snapshot reproduces the run configuration") {
  cli::SimulateOptions opt;
  opt.arrivals = "bernoulli:p=0.5,e=10";
  opt.slots = 5000;
  opt.reps = 2;
  opt.seed = 99;
  const auto cfg = cli::make_sim_config(opt);
  const auto snap = cli::simulate_flag_config(opt, cfg);
  CHECK(snap.at("arrivals") == "bernoulli:p=0.5,e=10");
  CHECK(snap.at("policy") == "cfp");
  CHECK(snap.at("slots").get<std::uint64_t>() == 5000);
  CHECK(snap.at("warmup").get<std::uint64_t>() == 50);  // resolved, not -1
  CHECK(snap.at("prefactor") == "half");
  CHECK(snap.at("seed").get<std::uint64_t>() == 99);
}

TEST_CASE("sweep emits the documented CSV") {
  cli::SweepOptions opt;
  opt.kinds = {"bernoulli", "uniform"};
  opt.p_grid = {0.3, 0.5};
  opt.b_grid = {1.0, 10.0};
  opt.slots = 4000;
  opt.reps = 2;
  opt.seed = 7;
  const auto res = cli::run_sweep(opt);
  std::istringstream lines(res.csv);
  std::string header;
  std::getline(lines, header);
  CHECK(header ==
        "arrivals,p,q,b_max,policy,t_ub,t_lb_analytic,t_sim_mean,t_sim_stderr,"
        "gap_bound,error");
  std::size_t rows = 0;
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    ++rows;
    const auto fields = split_csv_row(line);
    CHECK(fields.size() == 11);
    CHECK(fields[10] == "");  // healthy rows have an empty error cell
  }
  // bernoulli: 2 b x 2 p; uniform: 2 b.
  CHECK(rows == 6);
  CHECK(res.rows.size() == 6);

  // Deterministic: same options, same bytes.
  const auto res2 = cli::run_sweep(opt);
  CHECK(res2.csv == res.csv);

  cli::SweepOptions bad;
  bad.kinds = {"cauchy"};
  CHECK_THROWS_AS((void)cli::run_sweep(bad), ConfigError);
}

TEST_CASE("sweep rows carry errors instead of aborting") {
  cli::SweepOptions opt;
  opt.kinds = {"uniform"};
  opt.b_grid = {10.0};
  opt.slots = 0;  // forces a per-row failure
  opt.reps = 2;
  const auto res = cli::run_sweep(opt);
  std::istringstream lines(res.csv);
  std::string header, row;
  std::getline(lines, header);
  REQUIRE(std::getline(lines, row));
  const auto fields = split_csv_row(row);
  CHECK(fields.size() == 11);
  CHECK(fields[10] != "");  // error cell is populated
}

TEST_CASE("trace CSV layout") {
  std::vector<sim::SlotRecord> recs(2);
  recs[0].slot = 0;
  recs[0].h = 1.25;
  recs[0].spend = 5.0;
  recs[0].battery_tx = 10.0;
  recs[0].rate = 1.4;
  recs[1].slot = 1;
  recs[1].h = 0.5;
  recs[1].spend = 0.0;
  recs[1].battery_tx = 5.0;
  recs[1].battery_rx = 1.0;
  recs[1].rate = 0.0;
  const auto csv = cli::trace_csv(recs);
  std::istringstream lines(csv);
  std::string header, r0, r1;
  std::getline(lines, header);
  std::getline(lines, r0);
  std::getline(lines, r1);
  CHECK(header == "slot,h,spend,battery_tx,battery_rx,rate");
  CHECK(r0 == "0,1.25,5,10,,1.4");  // NaN battery_rx prints as empty
  CHECK(r1 == "1,0.5,0,5,1,0");
}

TEST_CASE("relative outputs land under EHSIM_OUT_DIR") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "ehsim_cli_test_out";
  fs::remove_all(dir);
  ::setenv("EHSIM_OUT_DIR", dir.string().c_str(), 1);
  CHECK(cli::resolve_out_path("x/report.json") ==
        (dir / "x/report.json").string());
  CHECK(cli::resolve_out_path("/abs/report.json") == "/abs/report.json");
  cli::write_text_file(cli::resolve_out_path("x/report.json"), "hello\n");
  std::ifstream in(dir / "x/report.json");
  std::string body((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  CHECK(body == "hello\n");
  ::unsetenv("EHSIM_OUT_DIR");
  CHECK(cli::resolve_out_path("x/report.json") == "x/report.json");
  fs::remove_all(dir);
}

TEST_CASE("estimate document schema and stability") {
  sim::SimConfig cfg;
  cfg.n_slots = 20000;
  cfg.n_replications = 3;
  cfg.seed = 5;
  cfg.arrivals = model::ArrivalModel::bernoulli(0.5, 10.0);
  cfg.b_max = 10.0;
  const auto est = sim::run(cfg);
  const std::string text = serialize::estimate_json(cfg, est);
  const auto doc = cli::ordered_json::parse(text);
  CHECK(doc.at("schema_version").get<int>() == 1);
  CHECK(doc.at("kind") == "throughput_estimate");
  CHECK(doc.at("config").at("arrivals") == "bernoulli:p=0.5,e=10");
  CHECK(doc.at("config").at("slots").get<std::uint64_t>() == 20000);
  CHECK(doc.contains("mean_bits_per_slot"));
  CHECK(doc.contains("std_err"));
  CHECK(doc.contains("n_effective"));
  CHECK(doc.contains("extras"));
  CHECK_FALSE(doc.contains("created_utc"));  // estimates carry no timestamps

  // Byte-identical across fresh runs of the same config.
  const auto est2 = sim::run(cfg);
  CHECK(text == serialize::estimate_json(cfg, est2));
}
