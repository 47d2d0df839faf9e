#include "mt2st/experiment.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "mt2st/cost_model.hpp"
#include "mt2st/errors.hpp"
#include "mt2st/serialize.hpp"

namespace mt2st {

namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw ConfigError(path + ": " + message);
}

const json& require_key(const json& obj, const char* key,
                        const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) fail(path + "." + key, "missing required field");
  return *it;
}

double as_double(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  return v.get<double>();
}

std::size_t as_count(const json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::size_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0)
    return static_cast<std::size_t>(v.get<long long>());
  fail(path, "expected a nonnegative integer");
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) fail(path, "expected a string");
  return v.get<std::string>();
}

double get_double(const json& obj, const char* key, const std::string& path,
                  double fallback) {
  if (!obj.is_object() || !obj.contains(key)) return fallback;
  return as_double(obj[key], path + "." + key);
}

std::size_t get_count(const json& obj, const char* key,
                      const std::string& path, std::size_t fallback) {
  if (!obj.is_object() || !obj.contains(key)) return fallback;
  return as_count(obj[key], path + "." + key);
}

std::vector<double> broadcast_doubles(const json& v, std::size_t count,
                                      const std::string& path) {
  if (v.is_number()) return std::vector<double>(count, v.get<double>());
  if (v.is_array()) {
    if (v.size() != count)
      fail(path, "expected " + std::to_string(count) + " entries, got " +
                     std::to_string(v.size()));
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i)
      out.push_back(as_double(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
  }
  fail(path, "expected a number or an array of numbers");
}

TaskKind parse_kind(const std::string& kind, const std::string& path) {
  if (kind == "classification") return TaskKind::Classification;
  if (kind == "regression") return TaskKind::Regression;
  if (kind == "denoising") return TaskKind::Denoising;
  fail(path, "unknown task kind '" + kind + "'");
}

TaskSpec parse_task_spec(const json& v, const std::string& path) {
  TaskSpec spec;
  spec.kind = parse_kind(as_string(require_key(v, "kind", path), path + ".kind"),
                         path + ".kind");
  spec.output_dim = as_count(require_key(v, "output_dim", path),
                             path + ".output_dim");
  spec.relatedness = get_double(v, "relatedness", path, 1.0);
  spec.samples = get_count(v, "samples", path, 0);
  if (v.contains("denoise")) {
    const json& d = v["denoise"];
    DenoiseSchedule schedule;
    schedule.steps = as_count(require_key(d, "steps", path + ".denoise"),
                              path + ".denoise.steps");
    schedule.sigma2_min = as_double(require_key(d, "sigma2_min", path + ".denoise"),
                                    path + ".denoise.sigma2_min");
    schedule.sigma2_max = as_double(require_key(d, "sigma2_max", path + ".denoise"),
                                    path + ".denoise.sigma2_max");
    spec.denoise = schedule;
  }
  return spec;
}

StrategyConfig parse_strategy(const json& v, std::size_t aux_count,
                              const std::string& path) {
  const std::string type =
      as_string(require_key(v, "type", path), path + ".type");
  StrategyConfig strategy;
  strategy.name = v.contains("name")
                      ? as_string(v["name"], path + ".name")
                      : type;
  if (type == "none_stl") {
    strategy.schedule = NoneStlSchedule{};
  } else if (type == "fixed_mtl") {
    FixedMtlSchedule s;
    s.gammas = v.contains("gammas")
                   ? broadcast_doubles(v["gammas"], aux_count, path + ".gammas")
                   : std::vector<double>(aux_count, 1.0);
    strategy.schedule = s;
  } else if (type == "switch") {
    SwitchSchedule s;
    s.params.t_switch =
        as_count(require_key(v, "t_switch", path), path + ".t_switch");
    strategy.schedule = s;
  } else if (type == "diminish") {
    const std::vector<double> gamma0 =
        v.contains("gamma0")
            ? broadcast_doubles(v["gamma0"], aux_count, path + ".gamma0")
            : std::vector<double>(aux_count, 1.0);
    const std::vector<double> eta = broadcast_doubles(
        require_key(v, "eta", path), aux_count, path + ".eta");
    const std::vector<double> nu =
        v.contains("nu") ? broadcast_doubles(v["nu"], aux_count, path + ".nu")
                         : std::vector<double>(aux_count, 1.0);
    DiminishSchedule s;
    for (std::size_t k = 0; k < aux_count; ++k)
      s.per_task.push_back(DiminishParams{gamma0[k], eta[k], nu[k]});
    strategy.schedule = s;
  } else if (type == "grad_norm" || type == "fisher" || type == "variance") {
    AdaptiveParams p;
    p.lambda_budget = get_double(v, "lambda", path, 1.0);
    p.epsilon = get_double(v, "epsilon", path, 1e-8);
    if (type == "grad_norm")
      strategy.schedule = GradNormSchedule{p};
    else if (type == "fisher")
      strategy.schedule = FisherSchedule{p};
    else
      strategy.schedule = VarianceSchedule{p};
  } else {
    fail(path + ".type", "unknown strategy type '" + type + "'");
  }
  return strategy;
}

json task_spec_to_json(const TaskSpec& spec) {
  json v;
  v["kind"] = spec.kind == TaskKind::Classification
                  ? "classification"
                  : (spec.kind == TaskKind::Regression ? "regression"
                                                       : "denoising");
  v["output_dim"] = spec.output_dim;
  v["relatedness"] = spec.relatedness;
  if (spec.samples > 0) v["samples"] = spec.samples;
  if (spec.denoise) {
    v["denoise"] = {{"steps", spec.denoise->steps},
                    {"sigma2_min", spec.denoise->sigma2_min},
                    {"sigma2_max", spec.denoise->sigma2_max}};
  }
  return v;
}

json schedule_to_json(const TaskWeightSchedule& schedule) {
  json v;
  v["type"] = schedule_kind_name(schedule);
  if (const auto* s = std::get_if<DiminishSchedule>(&schedule)) {
    json gamma0 = json::array(), eta = json::array(), nu = json::array();
    for (const DiminishParams& p : s->per_task) {
      gamma0.push_back(p.gamma0);
      eta.push_back(p.eta);
      nu.push_back(p.nu);
    }
    v["gamma0"] = gamma0;
    v["eta"] = eta;
    v["nu"] = nu;
  } else if (const auto* s = std::get_if<SwitchSchedule>(&schedule)) {
    v["t_switch"] = s->params.t_switch;
  } else if (const auto* s = std::get_if<FixedMtlSchedule>(&schedule)) {
    v["gammas"] = s->gammas;
  } else if (const auto* s = std::get_if<GradNormSchedule>(&schedule)) {
    v["lambda"] = s->params.lambda_budget;
    v["epsilon"] = s->params.epsilon;
  } else if (const auto* s = std::get_if<FisherSchedule>(&schedule)) {
    v["lambda"] = s->params.lambda_budget;
    v["epsilon"] = s->params.epsilon;
  } else if (const auto* s = std::get_if<VarianceSchedule>(&schedule)) {
    v["lambda"] = s->params.lambda_budget;
    v["epsilon"] = s->params.epsilon;
  }
  return v;
}

json config_to_json(const ExperimentConfig& config) {
  json v;
  v["output_dir"] = config.output_dir;
  v["seeds"] = config.seeds;
  json suite;
  suite["input_dim"] = config.suite.input_dim;
  suite["samples"] = config.suite.samples;
  suite["validation_fraction"] = config.suite.validation_fraction;
  suite["label_flip_prob"] = config.suite.label_flip_prob;
  suite["regression_noise_std"] = config.suite.regression_noise_std;
  suite["primary"] = task_spec_to_json(config.suite.primary);
  json aux = json::array();
  for (const TaskSpec& spec : config.suite.auxiliaries)
    aux.push_back(task_spec_to_json(spec));
  suite["auxiliaries"] = aux;
  v["suite"] = suite;
  json model;
  model["encoder_dims"] = config.model.encoder_dims;
  model["activation"] =
      config.model.activation == Activation::Tanh ? "tanh" : "identity";
  v["model"] = model;
  v["train"] = {{"learning_rate", config.train.learning_rate},
                {"total_steps", config.train.total_steps},
                {"batch_size", config.train.batch_size}};
  v["feedback"] = {{"enabled", config.feedback.enabled},
                   {"window", config.feedback.window},
                   {"min_relative_improvement",
                    config.feedback.min_relative_improvement}};
  json strategies = json::array();
  for (const StrategyConfig& s : config.strategies) {
    json entry = schedule_to_json(s.schedule);
    entry["name"] = s.name;
    strategies.push_back(entry);
  }
  v["strategies"] = strategies;
  return v;
}

bool valid_name(const std::string& name) {
  if (name.empty()) return false;
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

std::string optional_double_field(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

std::string optional_count_field(const std::optional<std::size_t>& v) {
  return v ? std::to_string(*v) : std::string();
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: not valid JSON: ") + e.what());
  }
  if (!root.is_object()) fail("config", "top level must be an object");

  ExperimentConfig config;
  const json& suite = require_key(root, "suite", "config");
  config.suite.input_dim =
      as_count(require_key(suite, "input_dim", "suite"), "suite.input_dim");
  config.suite.samples = get_count(suite, "samples", "suite", 256);
  config.suite.validation_fraction =
      get_double(suite, "validation_fraction", "suite", 0.2);
  config.suite.label_flip_prob =
      get_double(suite, "label_flip_prob", "suite", 0.05);
  config.suite.regression_noise_std =
      get_double(suite, "regression_noise_std", "suite", 0.1);
  config.suite.primary =
      parse_task_spec(require_key(suite, "primary", "suite"), "suite.primary");
  if (suite.contains("auxiliaries")) {
    const json& aux = suite["auxiliaries"];
    if (!aux.is_array()) fail("suite.auxiliaries", "expected an array");
    for (std::size_t k = 0; k < aux.size(); ++k)
      config.suite.auxiliaries.push_back(parse_task_spec(
          aux[k], "suite.auxiliaries[" + std::to_string(k) + "]"));
  }

  const json& model = require_key(root, "model", "config");
  if (model.contains("encoder_dims")) {
    const json& dims = model["encoder_dims"];
    if (!dims.is_array()) fail("model.encoder_dims", "expected an array");
    for (std::size_t l = 0; l < dims.size(); ++l)
      config.model.encoder_dims.push_back(as_count(
          dims[l], "model.encoder_dims[" + std::to_string(l) + "]"));
  }
  if (model.contains("activation")) {
    const std::string act = as_string(model["activation"], "model.activation");
    if (act == "tanh")
      config.model.activation = Activation::Tanh;
    else if (act == "identity")
      config.model.activation = Activation::Identity;
    else
      fail("model.activation", "expected 'tanh' or 'identity'");
  }
  config.model.input_dim = config.suite.input_dim;

  const json& train = require_key(root, "train", "config");
  config.train.learning_rate = as_double(
      require_key(train, "learning_rate", "train"), "train.learning_rate");
  config.train.total_steps = as_count(
      require_key(train, "total_steps", "train"), "train.total_steps");
  config.train.batch_size = as_count(
      require_key(train, "batch_size", "train"), "train.batch_size");

  if (root.contains("feedback")) {
    const json& fb = root["feedback"];
    config.feedback.enabled = fb.contains("enabled") && fb["enabled"].is_boolean()
                                  ? fb["enabled"].get<bool>()
                                  : false;
    config.feedback.window = get_count(fb, "window", "feedback", 50);
    config.feedback.min_relative_improvement =
        get_double(fb, "min_relative_improvement", "feedback", 1e-3);
  }

  const json& seeds = require_key(root, "seeds", "config");
  if (!seeds.is_array()) fail("seeds", "expected an array");
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const std::string path = "seeds[" + std::to_string(i) + "]";
    if (!seeds[i].is_number_integer() && !seeds[i].is_number_unsigned())
      fail(path, "expected an integer");
    config.seeds.push_back(seeds[i].get<std::uint64_t>());
  }

  const json& strategies = require_key(root, "strategies", "config");
  if (!strategies.is_array()) fail("strategies", "expected an array");
  for (std::size_t i = 0; i < strategies.size(); ++i)
    config.strategies.push_back(
        parse_strategy(strategies[i], config.suite.auxiliaries.size(),
                       "strategies[" + std::to_string(i) + "]"));

  if (root.contains("output_dir"))
    config.output_dir = as_string(root["output_dir"], "output_dir");
  return config;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file " + file.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_experiment_config(buffer.str());
}

void validate_config(const ExperimentConfig& config) {
  validate_suite_config(config.suite);
  for (std::size_t l = 0; l < config.model.encoder_dims.size(); ++l)
    if (config.model.encoder_dims[l] < 1)
      fail("model.encoder_dims[" + std::to_string(l) + "]", "must be >= 1");
  if (config.model.input_dim != config.suite.input_dim)
    fail("model", "input_dim must match suite.input_dim");
  if (!(config.train.learning_rate > 0.0))
    fail("train.learning_rate", "must be > 0");
  if (config.train.total_steps < 1) fail("train.total_steps", "must be >= 1");
  if (config.train.batch_size < 1) fail("train.batch_size", "must be >= 1");
  if (config.feedback.enabled && config.feedback.window < 2)
    fail("feedback.window", "must be >= 2 when feedback is enabled");
  if (!(config.feedback.min_relative_improvement >= 0.0))
    fail("feedback.min_relative_improvement", "must be >= 0");
  if (config.seeds.empty()) fail("seeds", "need at least one seed");
  {
    std::set<std::uint64_t> unique(config.seeds.begin(), config.seeds.end());
    if (unique.size() != config.seeds.size())
      fail("seeds", "seeds must be unique");
  }
  if (config.strategies.empty())
    fail("strategies", "need at least one strategy");
  std::set<std::string> names;
  for (std::size_t i = 0; i < config.strategies.size(); ++i) {
    const std::string path = "strategies[" + std::to_string(i) + "]";
    const StrategyConfig& s = config.strategies[i];
    if (!valid_name(s.name))
      fail(path + ".name",
           "must be nonempty and use only [A-Za-z0-9_-]");
    if (!names.insert(s.name).second)
      fail(path + ".name", "duplicate strategy name '" + s.name + "'");
    try {
      validate_schedule(s.schedule, config.suite.auxiliaries.size());
    } catch (const ConfigError& e) {
      fail(path, e.what());
    }
    if (std::holds_alternative<VarianceSchedule>(s.schedule)) {
      for (std::size_t k = 0; k < config.suite.auxiliaries.size(); ++k)
        if (!config.suite.auxiliaries[k].denoise)
          fail(path, "variance strategy requires a denoise schedule on "
                     "suite.auxiliaries[" +
                         std::to_string(k) + "]");
    }
  }
  if (config.output_dir.empty()) fail("output_dir", "must be nonempty");
}

ComparisonReport run_experiment(const ExperimentConfig& config,
                                const std::filesystem::path& output_dir) {
  namespace fs = std::filesystem;
  validate_config(config);

  std::vector<TaskSuite> suites;
  for (std::uint64_t seed : config.seeds) {
    SuiteConfig sc = config.suite;
    sc.seed = seed;
    suites.push_back(generate_suite(sc));
  }

  ModelConfig model = config.model;
  model.input_dim = config.suite.input_dim;
  std::vector<std::size_t> head_dims;
  for (std::size_t k = 0; k < suites[0].task_count(); ++k)
    head_dims.push_back(suites[0].task(k).spec.output_dim);
  const CostModel cost =
      measure_costs(init_model_params(model, head_dims, config.seeds[0]),
                    suites[0], config.train.batch_size);

  struct Cell {
    std::size_t strategy;
    std::size_t seed_index;
  };
  std::vector<Cell> cells;
  for (std::size_t s = 0; s < config.strategies.size(); ++s)
    for (std::size_t j = 0; j < config.seeds.size(); ++j)
      cells.push_back(Cell{s, j});

  std::vector<RunResult> results(cells.size());
  std::vector<std::string> errors(cells.size());
  std::atomic<std::size_t> next{0};
  const std::size_t workers = std::min<std::size_t>(
      cells.size(),
      std::max<std::size_t>(1, std::thread::hardware_concurrency()));
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= cells.size()) return;
        const Cell& cell = cells[i];
        TrainConfig tc = config.train;
        tc.seed = config.seeds[cell.seed_index];
        try {
          results[i] = train(suites[cell.seed_index], model,
                             config.strategies[cell.strategy].schedule, tc,
                             config.feedback, cost);
        } catch (const std::exception& e) {
          errors[i] = e.what();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!errors[i].empty()) {
      throw Error("cell " + config.strategies[cells[i].strategy].name +
                  "/seed=" + std::to_string(config.seeds[cells[i].seed_index]) +
                  ": " + errors[i]);
    }
  }

  // Same-seed STL baseline: first none_stl strategy, if any.
  std::optional<std::size_t> stl_index;
  for (std::size_t s = 0; s < config.strategies.size(); ++s) {
    if (std::holds_alternative<NoneStlSchedule>(
            config.strategies[s].schedule)) {
      stl_index = s;
      break;
    }
  }

  ComparisonReport report;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const Cell& cell = cells[i];
    const RunResult& run = results[i];
    CellSummary summary;
    summary.strategy = config.strategies[cell.strategy].name;
    summary.seed = config.seeds[cell.seed_index];
    summary.final_primary_loss = run.validation_metrics[0].loss;
    summary.final_primary_accuracy = run.validation_metrics[0].accuracy;
    summary.convergence_epoch = run.convergence_epoch;
    summary.switch_step = run.switch_step_effective;
    summary.flops_expected = run.records.back().flops_expected;
    summary.flops_realized = run.records.back().flops_realized;
    if (stl_index) {
      const std::size_t baseline_cell =
          *stl_index * config.seeds.size() + cell.seed_index;
      summary.compression_rate_pct = compression_rate(
          summary.flops_realized,
          results[baseline_cell].records.back().flops_realized);
    }
    report.cells.push_back(std::move(summary));
  }

  for (std::size_t s = 0; s < config.strategies.size(); ++s) {
    StrategyAggregate agg;
    agg.strategy = config.strategies[s].name;
    const std::size_t n = config.seeds.size();
    double sum_loss = 0.0, sum_flops = 0.0, sum_epoch = 0.0;
    double sum_acc = 0.0, sum_comp = 0.0;
    std::size_t acc_count = 0, comp_count = 0, epoch_count = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const CellSummary& c = report.cells[s * n + j];
      sum_loss += c.final_primary_loss;
      sum_flops += c.flops_realized;
      if (c.final_primary_accuracy) {
        sum_acc += *c.final_primary_accuracy;
        ++acc_count;
      }
      if (c.compression_rate_pct) {
        sum_comp += *c.compression_rate_pct;
        ++comp_count;
      }
      if (c.convergence_epoch) {
        sum_epoch += static_cast<double>(*c.convergence_epoch);
        ++epoch_count;
      }
    }
    agg.mean_final_loss = sum_loss / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double d =
          report.cells[s * n + j].final_primary_loss - agg.mean_final_loss;
      ss += d * d;
    }
    agg.stddev_final_loss =
        n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    if (acc_count == n)
      agg.mean_accuracy = sum_acc / static_cast<double>(n);
    agg.mean_flops_realized = sum_flops / static_cast<double>(n);
    if (comp_count == n)
      agg.mean_compression_pct = sum_comp / static_cast<double>(n);
    agg.mean_convergence_epoch =
        epoch_count > 0 ? sum_epoch / static_cast<double>(epoch_count) : 0.0;
    report.aggregates.push_back(std::move(agg));
  }

  // Artifacts: per-run stream + summary, then the top-level report files.
  fs::create_directories(output_dir);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const CellSummary& summary = report.cells[i];
    const fs::path run_dir = output_dir / "runs" / summary.strategy /
                             ("seed_" + std::to_string(summary.seed));
    fs::create_directories(run_dir);
    {
      std::ofstream steps(run_dir / "steps.txt");
      write_step_stream(steps, results[i]);
    }
    json run;
    run["schema"] = "mt2st-run-v1";
    run["strategy"] = summary.strategy;
    run["seed"] = summary.seed;
    run["steps"] = results[i].records.size();
    json validation = json::array();
    for (std::size_t k = 0; k < results[i].validation_metrics.size(); ++k) {
      const TaskMetrics& m = results[i].validation_metrics[k];
      json entry;
      entry["task"] = k;
      entry["loss"] = m.loss;
      if (m.accuracy) entry["accuracy"] = *m.accuracy;
      validation.push_back(entry);
    }
    run["validation"] = validation;
    if (summary.convergence_epoch)
      run["convergence_epoch"] = *summary.convergence_epoch;
    if (summary.switch_step) run["switch_step"] = *summary.switch_step;
    run["flops"] = {{"expected", summary.flops_expected},
                    {"realized", summary.flops_realized}};
    if (summary.compression_rate_pct)
      run["compression_rate_pct"] = *summary.compression_rate_pct;
    std::ofstream run_json(run_dir / "run.json");
    run_json << run.dump(2) << '\n';
  }

  {
    std::ofstream csv(output_dir / "report.csv");
    write_report_csv(csv, report);
  }
  {
    std::ofstream summary(output_dir / "summary.json");
    summary << report_summary_json(config, report);
  }
  return report;
}

void write_report_csv(std::ostream& out, const ComparisonReport& report) {
  out << "# " << kReportSchemaVersion << ' ' << kReportCsvHeader << '\n';
  out << kReportCsvHeader << '\n';
  for (const CellSummary& c : report.cells) {
    out << c.strategy << ',' << c.seed << ','
        << format_double(c.final_primary_loss) << ','
        << optional_double_field(c.final_primary_accuracy) << ','
        << optional_count_field(c.convergence_epoch) << ','
        << optional_count_field(c.switch_step) << ','
        << format_double(c.flops_expected) << ','
        << format_double(c.flops_realized) << ','
        << optional_double_field(c.compression_rate_pct) << '\n';
  }
}

std::string report_summary_json(const ExperimentConfig& config,
                                const ComparisonReport& report) {
  json root;
  root["schema"] = "mt2st-summary-v1";
  root["config"] = config_to_json(config);
  json cells = json::array();
  for (const CellSummary& c : report.cells) {
    json cell;
    cell["strategy"] = c.strategy;
    cell["seed"] = c.seed;
    cell["final_primary_loss"] = c.final_primary_loss;
    if (c.final_primary_accuracy)
      cell["final_primary_accuracy"] = *c.final_primary_accuracy;
    if (c.convergence_epoch) cell["convergence_epoch"] = *c.convergence_epoch;
    if (c.switch_step) cell["switch_step"] = *c.switch_step;
    cell["flops_expected"] = c.flops_expected;
    cell["flops_realized"] = c.flops_realized;
    if (c.compression_rate_pct)
      cell["compression_rate_pct"] = *c.compression_rate_pct;
    cells.push_back(cell);
  }
  root["cells"] = cells;
  json aggregates = json::array();
  for (const StrategyAggregate& a : report.aggregates) {
    json agg;
    agg["strategy"] = a.strategy;
    agg["final_primary_loss"] = {{"mean", a.mean_final_loss},
                                 {"stddev", a.stddev_final_loss}};
    if (a.mean_accuracy) agg["mean_accuracy"] = *a.mean_accuracy;
    agg["mean_flops_realized"] = a.mean_flops_realized;
    if (a.mean_compression_pct)
      agg["mean_compression_pct"] = *a.mean_compression_pct;
    agg["mean_convergence_epoch"] = a.mean_convergence_epoch;
    aggregates.push_back(agg);
  }
  root["aggregates"] = aggregates;
  return root.dump(2) + "\n";
}

}  // namespace mt2st
