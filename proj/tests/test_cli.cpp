#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "mt2st/errors.hpp"
#include "mt2st/experiment.hpp"

using namespace mt2st;
namespace fs = std::filesystem;

namespace {

fs::path test_root() {
  static const fs::path root =
      fs::temp_directory_path() /
      ("mt2st_cli_test_" + std::to_string(static_cast<unsigned>(::getpid())));
  fs::create_directories(root);
  return root;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

int run_cli(const std::string& args, const fs::path& capture,
            const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + MT2ST_CLI_BIN +
                          " " + args + " > " + capture.string() + " 2>&1";
  return std::system(cmd.c_str());
}

const char* kConfigTemplate = R"({
  "output_dir": "%OUT%",
  "seeds": [1, 2],
  "suite": {
    "input_dim": 6,
    "samples": 120,
    "validation_fraction": 0.2,
    "primary": {"kind": "classification", "output_dim": 4, "relatedness": 1.0},
    "auxiliaries": [
      {"kind": "classification", "output_dim": 4, "relatedness": 0.9},
      {"kind": "regression", "output_dim": 3, "relatedness": 0.9}
    ]
  },
  "model": {"encoder_dims": [5], "activation": "tanh"},
  "train": {"learning_rate": 0.1, "total_steps": 40, "batch_size": 16},
  "strategies": [
    {"name": "stl", "type": "none_stl"},
    {"name": "switch0", "type": "switch", "t_switch": 0},
    {"name": "mt2st_d", "type": "diminish", "eta": 0.05},
    {"name": "mt2st_s", "type": "switch", "t_switch": 20}
  ]
})";

std::string config_with_output(const std::string& out_dir) {
  std::string text = kConfigTemplate;
  const std::string token = "%OUT%";
  text.replace(text.find(token), token.size(), out_dir);
  return text;
}

struct CsvRow {
  std::map<std::string, std::string> fields;
};

std::vector<CsvRow> parse_report_csv(const std::string& text) {
  std::istringstream in(text);
  std::string schema_line, header_line, line;
  REQUIRE(std::getline(in, schema_line));
  REQUIRE(std::getline(in, header_line));
  std::vector<std::string> columns;
  {
    std::istringstream h(header_line);
    std::string col;
    while (std::getline(h, col, ',')) columns.push_back(col);
  }
  std::vector<CsvRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    CsvRow row;
    std::istringstream r(line);
    std::string cell;
    std::size_t i = 0;
    while (std::getline(r, cell, ',')) row.fields[columns.at(i++)] = cell;
    // A trailing empty field is dropped by getline; restore it.
    while (i < columns.size()) row.fields[columns.at(i++)] = "";
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("validate accepts a good config and reports the grid") {
  const fs::path root = test_root();
  const fs::path config = root / "good.json";
  write_file(config, config_with_output((root / "unused").string()));
  const fs::path log = root / "validate.log";
  CHECK(run_cli("validate " + config.string(), log) == 0);
  CHECK(read_file(log).find("config ok: 4 strategies x 2 seeds") !=
        std::string::npos);
}

TEST_CASE("validate rejects a bad config with a field-level message") {
  const fs::path root = test_root();
  std::string text = config_with_output((root / "unused").string());
  const std::string needle = "\"learning_rate\": 0.1";
  text.replace(text.find(needle), needle.size(), "\"learning_rate\": 0.0");
  const fs::path config = root / "bad.json";
  write_file(config, text);
  const fs::path log = root / "validate_bad.log";
  CHECK(run_cli("validate " + config.string(), log) != 0);
  CHECK(read_file(log).find("train.learning_rate") != std::string::npos);
}

TEST_CASE("run produces a schema-stamped, internally consistent report") {
  const fs::path root = test_root();
  const fs::path config = root / "exp.json";
  const fs::path out1 = root / "out1";
  write_file(config, config_with_output(out1.string()));

  const fs::path log = root / "run1.log";
  REQUIRE(run_cli("run " + config.string(), log) == 0);

  const std::string csv_text = read_file(out1 / "report.csv");
  // First comment line embeds the versioned schema; the header must match.
  std::istringstream lines(csv_text);
  std::string schema_line, header_line;
  std::getline(lines, schema_line);
  std::getline(lines, header_line);
  CHECK(schema_line == "# " + std::string(kReportSchemaVersion) + " " +
                           std::string(kReportCsvHeader));
  CHECK(header_line == std::string(kReportCsvHeader));

  const std::vector<CsvRow> rows = parse_report_csv(csv_text);
  REQUIRE(rows.size() == 8);  // 4 strategies x 2 seeds

  std::map<std::string, std::map<std::string, CsvRow>> by_strategy_seed;
  for (const CsvRow& row : rows)
    by_strategy_seed[row.fields.at("strategy")][row.fields.at("seed")] = row;

  // STL baseline rows have compression exactly 0.
  for (const auto& [seed, row] : by_strategy_seed.at("stl"))
    CHECK(row.fields.at("compression_rate_pct") == "0");

  // switch at 0 is STL: identical metric columns per seed.
  for (const std::string seed : {"1", "2"}) {
    const CsvRow& stl = by_strategy_seed.at("stl").at(seed);
    const CsvRow& sw0 = by_strategy_seed.at("switch0").at(seed);
    for (const char* col :
         {"final_primary_loss", "final_primary_accuracy", "convergence_epoch",
          "flops_expected", "flops_realized", "compression_rate_pct"})
      CHECK(stl.fields.at(col) == sw0.fields.at(col));
  }

  // Every compression rate recomputes from the FLOPs columns.
  for (const CsvRow& row : rows) {
    const double realized = std::stod(row.fields.at("flops_realized"));
    const double baseline = std::stod(by_strategy_seed.at("stl")
                                          .at(row.fields.at("seed"))
                                          .fields.at("flops_realized"));
    const double reported = std::stod(row.fields.at("compression_rate_pct"));
    CHECK(std::fabs(reported - compression_rate(realized, baseline)) <= 1e-9);
  }

  // The switch strategy must be cheaper than running full MTL would be; its
  // realized FLOPs sit strictly between the STL rows' and the MTL bound.
  for (const std::string seed : {"1", "2"}) {
    const double stl_flops = std::stod(
        by_strategy_seed.at("stl").at(seed).fields.at("flops_realized"));
    const double sw_flops = std::stod(
        by_strategy_seed.at("mt2st_s").at(seed).fields.at("flops_realized"));
    CHECK(sw_flops > stl_flops);
    CHECK(std::stod(by_strategy_seed.at("mt2st_s").at(seed).fields.at(
              "compression_rate_pct")) < 0.0);
  }
}

TEST_CASE("rerunning the same config is byte-identical (env override)") {
  const fs::path root = test_root();
  const fs::path config = root / "exp.json";  // written by the previous case
  const fs::path out1 = root / "out1";
  const fs::path out2 = root / "out2";
  REQUIRE(fs::exists(config));
  REQUIRE(fs::exists(out1 / "report.csv"));

  const fs::path log = root / "run2.log";
  REQUIRE(run_cli("run " + config.string(), log,
                  "MT2ST_OUTPUT_DIR=" + out2.string()) == 0);
  CHECK(read_file(out1 / "report.csv") == read_file(out2 / "report.csv"));
  CHECK(read_file(out1 / "summary.json") == read_file(out2 / "summary.json"));
  CHECK(read_file(out1 / "runs" / "mt2st_d" / "seed_1" / "run.json") ==
        read_file(out2 / "runs" / "mt2st_d" / "seed_1" / "run.json"));
}

TEST_CASE("series extracts plot-ready columns from a stored run") {
  const fs::path root = test_root();
  const fs::path run_dir = root / "out1" / "runs" / "mt2st_d" / "seed_1";
  REQUIRE(fs::exists(run_dir / "steps.txt"));

  const fs::path gamma_out = root / "gamma.txt";
  REQUIRE(run_cli("series " + run_dir.string() + " --kind gamma -o " +
                      gamma_out.string(),
                  root / "series.log") == 0);
  std::ifstream gamma(gamma_out);
  std::string header;
  std::getline(gamma, header);
  CHECK(header == "# step gamma_1 gamma_2");
  double prev1 = 1e99, prev2 = 1e99;
  std::size_t rows = 0;
  std::size_t step;
  double g1, g2;
  while (gamma >> step >> g1 >> g2) {
    CHECK(g1 < prev1);  // diminish weights decay strictly
    CHECK(g2 < prev2);
    prev1 = g1;
    prev2 = g2;
    ++rows;
  }
  CHECK(rows == 40);

  const fs::path loss_out = root / "loss.txt";
  REQUIRE(run_cli("series " + run_dir.string() + " --kind loss -o " +
                      loss_out.string(),
                  root / "series.log") == 0);
  std::ifstream loss(loss_out);
  rows = 0;
  std::string line;
  std::getline(loss, line);  // header
  while (std::getline(loss, line)) ++rows;
  CHECK(rows == 40);

  // Unknown series names are a usage error.
  CHECK(run_cli("series " + run_dir.string() + " --kind norm",
                root / "series_bad.log") != 0);
}

TEST_CASE("gamma series of a switch run is the indicator step function") {
  const fs::path root = test_root();
  const fs::path run_dir = root / "out1" / "runs" / "mt2st_s" / "seed_1";
  const fs::path gamma_out = root / "gamma_switch.txt";
  REQUIRE(run_cli("series " + run_dir.string() + " --kind gamma -o " +
                      gamma_out.string(),
                  root / "series.log") == 0);
  std::ifstream gamma(gamma_out);
  std::string header;
  std::getline(gamma, header);
  std::size_t step;
  double g1, g2;
  while (gamma >> step >> g1 >> g2) {
    CHECK(g1 == (step < 20 ? 1.0 : 0.0));
    CHECK(g2 == (step < 20 ? 1.0 : 0.0));
  }
}

TEST_CASE("run fails cleanly on an unreadable config") {
  const fs::path root = test_root();
  CHECK(run_cli("run " + (root / "missing.json").string(),
                root / "missing.log") != 0);
}

TEST_CASE("config parsing round-trips and validates semantics (library)") {
  const std::string text = config_with_output("somewhere");
  ExperimentConfig config = parse_experiment_config(text);
  CHECK(config.seeds == std::vector<std::uint64_t>{1, 2});
  CHECK(config.strategies.size() == 4);
  CHECK(config.suite.auxiliaries.size() == 2);
  CHECK(config.model.input_dim == 6);
  CHECK_NOTHROW(validate_config(config));

  // Duplicate strategy names are rejected.
  ExperimentConfig dup = config;
  dup.strategies[1].name = "stl";
  CHECK_THROWS_AS(validate_config(dup), ConfigError);

  // A diminish schedule sized for the wrong K is rejected with its path.
  ExperimentConfig wrong = config;
  std::get<DiminishSchedule>(wrong.strategies[2].schedule).per_task.pop_back();
  try {
    validate_config(wrong);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("strategies[2]") != std::string::npos);
  }

  CHECK_THROWS_AS(parse_experiment_config("{ not json"), ConfigError);
}

}  // TEST_SUITE
