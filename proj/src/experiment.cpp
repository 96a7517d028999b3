#include "bitkernel/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <thread>

#include "bitkernel/detail/format.hpp"
#include "bitkernel/errors.hpp"
#include "bitkernel/kernel.hpp"
#include "bitkernel/report.hpp"

namespace bitkernel::experiment {
namespace {

using detail::format_double;
using nlohmann::json;
using nlohmann::ordered_json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const std::set<std::string, std::less<>>& known_keys() {
  static const std::set<std::string, std::less<>> keys = {
      "command", "target",        "expression",    "n",              "n_test",
      "widths",  "kappa",         "eta",           "cap_eta",        "steps",  "seeds",
      "mode",    "split",         "probe_stride",  "kernel_probes",  "decomposition",
      "sigma",   "workers",       "grid",          "output_dir"};
  return keys;
}

std::size_t get_size(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_number_unsigned()) return v.get<std::size_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0) return v.get<std::size_t>();
  throw ConfigError(key, "expected a non-negative integer");
}

double get_double(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number()) throw ConfigError(key, "expected a number");
  return v.get<double>();
}

bool get_bool(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_boolean()) throw ConfigError(key, "expected true or false");
  return v.get<bool>();
}

std::string get_string(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_string()) throw ConfigError(key, "expected a string");
  return v.get<std::string>();
}

template <typename T>
std::vector<T> get_list(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_array()) throw ConfigError(key, "expected a list of non-negative integers");
  std::vector<T> out;
  for (const auto& e : v) {
    const bool ok = e.is_number_unsigned() || (e.is_number_integer() && e.get<long long>() >= 0);
    if (!ok) throw ConfigError(key, "expected a list of non-negative integers");
    out.push_back(e.get<T>());
  }
  return out;
}

std::string csv_row_end(bool failed) { return failed ? ",1\n" : ",0\n"; }

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

std::string run_name(std::size_t width, std::uint64_t seed) {
  return "run_w" + std::to_string(width) + "_s" + std::to_string(seed) + ".csv";
}

data::TargetFunction target_function(const ExperimentConfig& cfg) {
  if (cfg.target == "custom_1d") {
    return data::TargetFunction::custom(cfg.expression.empty() ? kSpikyPreset
                                                               : cfg.expression);
  }
  return data::TargetFunction::by_name(cfg.target);
}

std::vector<double> spaced(double lo, double hi, std::size_t count) {
  std::vector<double> out(count);
  for (std::size_t k = 0; k < count; ++k) {
    out[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(count - 1);
  }
  return out;
}

data::Dataset lifted_dataset(const std::vector<double>& xs, const data::Expression& expr) {
  data::Dataset ds;
  ds.x = Matrix(xs.size(), 3);
  ds.y.resize(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto row = lift_1d(xs[i]);
    std::copy(row.begin(), row.end(), ds.x.row(i).begin());
    ds.y[i] = expr(xs[i]);
  }
  ds.meta.target = "custom_1d";
  ds.meta.expression = expr.source();
  ds.meta.n = xs.size();
  ds.meta.d = 3;
  return ds;
}

void write_runs(const std::vector<CellResult>& cells, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& c : cells) {
    if (!c.trajectory) continue;
    report::emit_report(report::run_records(*c.trajectory), report::Format::csv,
                        dir / run_name(c.width, c.seed));
  }
}

ordered_json cell_meta(const CellResult& c) {
  ordered_json j;
  j["width"] = c.width;
  j["seed"] = c.seed;
  j["network_seed"] = network_seed(c.seed, c.width);
  j["eta"] = c.eta;
  j["failed"] = c.failed;
  if (c.failed) j["error"] = c.error;
  return j;
}

}  // namespace

const char* to_string(Command c) noexcept {
  switch (c) {
    case Command::train: return "train";
    case Command::sweep_width: return "sweep-width";
    case Command::similarity: return "similarity";
    case Command::kernel_probe: return "kernel-probe";
    case Command::generate_data: return "generate-data";
    case Command::compare_1d: return "compare-1d";
  }
  return "?";
}

Command parse_command(std::string_view text) {
  for (Command c : {Command::train, Command::sweep_width, Command::similarity,
                    Command::kernel_probe, Command::generate_data, Command::compare_1d}) {
    if (text == to_string(c)) return c;
  }
  throw ConfigError("command", "unknown command '" + std::string(text) + "'");
}

ExperimentConfig parse_config(const json& source) {
  if (!source.is_object()) throw ConfigError("<root>", "configuration must be a JSON object");
  for (const auto& [key, value] : source.items()) {
    if (!known_keys().contains(key)) throw ConfigError(key, "unknown key");
  }

  ExperimentConfig cfg;
  if (source.contains("command")) cfg.command = parse_command(get_string(source, "command"));
  if (source.contains("target")) cfg.target = get_string(source, "target");
  if (source.contains("expression")) cfg.expression = get_string(source, "expression");
  if (source.contains("n")) cfg.n = get_size(source, "n");
  if (source.contains("n_test")) cfg.n_test = get_size(source, "n_test");
  if (source.contains("widths")) cfg.widths = get_list<std::size_t>(source, "widths");
  if (source.contains("kappa")) cfg.kappa = get_double(source, "kappa");
  if (source.contains("eta")) {
    const auto& v = source.at("eta");
    if (v.is_null() || (v.is_string() && v.get<std::string>() == "auto")) {
      cfg.eta.reset();
    } else {
      cfg.eta = get_double(source, "eta");
    }
  }
  if (source.contains("cap_eta")) cfg.cap_eta = get_bool(source, "cap_eta");
  if (source.contains("steps")) cfg.steps = get_size(source, "steps");
  if (source.contains("seeds")) cfg.seeds = get_list<std::uint64_t>(source, "seeds");
  if (source.contains("mode")) {
    try {
      cfg.mode = data::parse_sample_mode(get_string(source, "mode"));
    } catch (const InvalidInputError& e) {
      throw ConfigError("mode", e.what());
    }
  }
  if (source.contains("split")) {
    try {
      cfg.split = data::parse_split_mode(get_string(source, "split"));
    } catch (const InvalidInputError& e) {
      throw ConfigError("split", e.what());
    }
  }
  if (source.contains("probe_stride")) cfg.probe_stride = get_size(source, "probe_stride");
  if (source.contains("kernel_probes")) cfg.kernel_probes = get_bool(source, "kernel_probes");
  if (source.contains("decomposition")) cfg.decomposition = get_bool(source, "decomposition");
  if (source.contains("sigma")) cfg.sigma = get_double(source, "sigma");
  if (source.contains("workers")) cfg.workers = get_size(source, "workers");
  if (source.contains("grid")) cfg.grid = get_size(source, "grid");
  if (source.contains("output_dir")) cfg.output_dir = get_string(source, "output_dir");
  validate(cfg);
  return cfg;
}

ExperimentConfig parse_config_text(std::string_view json_text) {
  json source;
  try {
    source = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(source);
}

void apply_overrides(json& source, const std::vector<std::string>& assignments) {
  if (source.is_null()) source = json::object();
  for (const auto& a : assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError(a, "override must have the form key=value");
    }
    const std::string key = a.substr(0, eq);
    const std::string text = a.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    source[key] = std::move(value);
  }
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.target != "custom_1d") {
    try {
      (void)data::TargetFunction::by_name(cfg.target);
    } catch (const InvalidInputError& e) {
      throw ConfigError("target", e.what());
    }
  }
  if (cfg.target == "custom_1d" || cfg.command == Command::compare_1d) {
    try {
      (void)data::Expression::parse(cfg.expression.empty() ? kSpikyPreset : cfg.expression);
    } catch (const ParseError& e) {
      throw ConfigError("expression", e.what());
    }
  }
  if (cfg.n < 1) throw ConfigError("n", "must be at least 1");
  if (cfg.n_test < 1) throw ConfigError("n_test", "must be at least 1");
  if (cfg.split == data::SplitMode::holdout && cfg.n_test >= cfg.n) {
    throw ConfigError("n_test", "holdout split needs n_test < n");
  }
  if (cfg.widths.empty()) throw ConfigError("widths", "must list at least one width");
  for (std::size_t w : cfg.widths) {
    if (w < 1) throw ConfigError("widths", "widths must be positive");
  }
  if (!(cfg.kappa > 0.0 && cfg.kappa <= 1.0)) {
    throw ConfigError("kappa", "must lie in (0, 1], got " + format_double(cfg.kappa));
  }
  if (cfg.eta && !(*cfg.eta >= 0.0 && std::isfinite(*cfg.eta))) {
    throw ConfigError("eta", "must be finite and non-negative");
  }
  if (cfg.steps < 1) throw ConfigError("steps", "must be at least 1");
  if (cfg.seeds.empty()) throw ConfigError("seeds", "must list at least one seed");
  if (!(cfg.sigma > 0.0 && std::isfinite(cfg.sigma))) {
    throw ConfigError("sigma", "must be positive and finite");
  }
  if (cfg.workers < 1) throw ConfigError("workers", "must be at least 1");
  if (cfg.command == Command::compare_1d) {
    if (cfg.n < 2) throw ConfigError("n", "compare-1d needs at least 2 training points");
    if (cfg.grid < 2) throw ConfigError("grid", "must be at least 2");
  }
}

ordered_json to_json(const ExperimentConfig& cfg) {
  ordered_json j;
  j["command"] = to_string(cfg.command);
  j["target"] = cfg.target;
  j["expression"] = cfg.expression;
  j["n"] = cfg.n;
  j["n_test"] = cfg.n_test;
  j["widths"] = cfg.widths;
  j["kappa"] = cfg.kappa;
  j["eta"] = cfg.eta ? ordered_json(*cfg.eta) : ordered_json("auto");
  j["cap_eta"] = cfg.cap_eta;
  j["steps"] = cfg.steps;
  j["seeds"] = cfg.seeds;
  j["mode"] = data::to_string(cfg.mode);
  j["split"] = data::to_string(cfg.split);
  j["probe_stride"] = cfg.probe_stride;
  j["kernel_probes"] = cfg.kernel_probes;
  j["decomposition"] = cfg.decomposition;
  j["sigma"] = cfg.sigma;
  j["workers"] = cfg.workers;
  j["grid"] = cfg.grid;
  j["output_dir"] = cfg.output_dir;
  return j;
}

PreparedData prepare_data(const ExperimentConfig& cfg, std::uint64_t seed) {
  const auto fn = target_function(cfg);
  auto ds = data::generate_dataset(fn, cfg.n, seed, cfg.mode);
  auto [train, test] = data::split(ds, cfg.n_test, seed, cfg.split);
  return {std::move(train), std::move(test)};
}

train::Hyperparams hyperparams(const ExperimentConfig& cfg, std::uint64_t seed,
                               std::size_t width) {
  train::Hyperparams hp;
  hp.eta = cfg.eta;
  hp.cap_eta = cfg.cap_eta;
  hp.steps = cfg.steps;
  hp.kappa = cfg.kappa;
  hp.seed = network_seed(seed, width);
  hp.sigma = cfg.sigma;
  return hp;
}

train::Diagnostics diagnostics(const ExperimentConfig& cfg) {
  train::Diagnostics diag;
  diag.kernel_probes = cfg.kernel_probes;
  diag.probe_stride = cfg.probe_stride;
  diag.decomposition = cfg.decomposition;
  return diag;
}

CellResult run_cell(const ExperimentConfig& cfg, const PreparedData& data, std::size_t width,
                    std::uint64_t seed) {
  CellResult out;
  out.width = width;
  out.seed = seed;
  out.param_count = data.train.dim() * width + width;
  try {
    auto traj = train::train_twin(data.train, data.test, width,
                                  hyperparams(cfg, seed, width), diagnostics(cfg));
    out.eta = traj.eta;
    out.min_loss_1bit = traj.min_loss_1bit();
    out.min_loss_fp = traj.min_loss_fp();
    out.trajectory = std::move(traj);
  } catch (const DivergenceError& e) {
    out.failed = true;
    out.error = e.what();
    out.min_loss_1bit = kNaN;
    out.min_loss_fp = kNaN;
    out.eta = kNaN;
  }
  return out;
}

std::vector<CellResult> run_sweep(const ExperimentConfig& cfg) {
  validate(cfg);
  std::vector<std::size_t> widths = cfg.widths;
  std::vector<std::uint64_t> seeds = cfg.seeds;
  std::sort(widths.begin(), widths.end());
  widths.erase(std::unique(widths.begin(), widths.end()), widths.end());
  std::sort(seeds.begin(), seeds.end());
  seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());

  std::vector<PreparedData> datasets;
  datasets.reserve(seeds.size());
  for (std::uint64_t s : seeds) datasets.push_back(prepare_data(cfg, s));

  struct Job {
    std::size_t width;
    std::size_t seed_index;
  };
  std::vector<Job> jobs;
  for (std::size_t w : widths) {
    for (std::size_t k = 0; k < seeds.size(); ++k) jobs.push_back({w, k});
  }

  std::vector<CellResult> results(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      try {
        const auto& job = jobs[j];
        results[j] = run_cell(cfg, datasets[job.seed_index], job.width, seeds[job.seed_index]);
      } catch (...) {
        errors[j] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min(cfg.workers, jobs.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

double median(std::vector<double> values) {
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  const std::size_t h = values.size() / 2;
  return values.size() % 2 ? values[h] : 0.5 * (values[h - 1] + values[h]);
}

std::vector<WidthSummary> summarize(const std::vector<CellResult>& cells) {
  std::vector<WidthSummary> out;
  for (std::size_t k = 0; k < cells.size();) {
    WidthSummary s;
    s.width = cells[k].width;
    std::vector<double> l1;
    std::vector<double> lf;
    for (; k < cells.size() && cells[k].width == s.width; ++k) {
      ++s.cells;
      if (cells[k].failed) {
        ++s.failed;
        continue;
      }
      l1.push_back(cells[k].min_loss_1bit);
      lf.push_back(cells[k].min_loss_fp);
    }
    s.median_min_loss_1bit = median(std::move(l1));
    s.median_min_loss_fp = median(std::move(lf));
    out.push_back(s);
  }
  return out;
}

std::vector<double> lift_1d(double x) {
  const double s = x / std::numbers::pi;
  return {s, s * s, 1.0};
}

Compare1dResult compare_1d(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto expr =
      data::Expression::parse(cfg.expression.empty() ? kSpikyPreset : cfg.expression);
  constexpr double pi = std::numbers::pi;
  const std::uint64_t seed = cfg.seeds.front();
  const std::size_t width = cfg.widths.front();

  const auto train_x = spaced(-pi, pi, cfg.n);
  std::vector<double> test_x(cfg.n_test);
  std::mt19937_64 gen(mix_seed(seed, kSaltTestSet));
  std::uniform_real_distribution<double> uni(-pi, pi);
  for (double& v : test_x) v = uni(gen);
  const auto grid_x = spaced(-pi, pi, cfg.grid);

  const auto train = lifted_dataset(train_x, expr);
  const auto test = lifted_dataset(test_x, expr);
  const auto traj =
      train::train_twin(train, test, width, hyperparams(cfg, seed, width), diagnostics(cfg));

  Compare1dResult out;
  out.eta = traj.eta;
  out.grid_rows = grid_x.size();
  out.train_loss_1bit = traj.records.back().loss_1bit;
  out.train_loss_fp = traj.records.back().loss_fp;
  std::vector<double> xs = grid_x;
  xs.insert(xs.end(), test_x.begin(), test_x.end());
  const auto eval = lifted_dataset(xs, expr);
  const net::InputBatch batch(eval.x);
  out.x = xs;
  out.y_true = eval.y;
  out.y_1bit = net::batch_forward(batch, traj.final_1bit, net::ForwardMode::one_bit);
  out.y_fp = net::batch_forward(batch, traj.final_fp, net::ForwardMode::full_precision);
  for (std::size_t i = out.grid_rows; i < xs.size(); ++i) {
    out.max_test_gap = std::max(out.max_test_gap, std::abs(out.y_1bit[i] - out.y_fp[i]));
  }
  return out;
}

void run_command(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  validate(cfg);
  const auto started = std::chrono::steady_clock::now();
  std::filesystem::create_directories(out_dir);
  ordered_json meta;
  meta["version"] = kVersion;
  meta["config"] = to_json(cfg);

  switch (cfg.command) {
    case Command::train: {
      const std::uint64_t seed = cfg.seeds.front();
      const std::size_t width = cfg.widths.front();
      const auto prepared = prepare_data(cfg, seed);
      const auto traj = train::train_twin(prepared.train, prepared.test, width,
                                          hyperparams(cfg, seed, width), diagnostics(cfg));
      const auto records = report::run_records(traj);
      report::emit_report(records, report::Format::csv, out_dir / "run.csv");
      report::emit_report(records, report::Format::json, out_dir / "run.json");
      if (cfg.decomposition) report::emit_decomposition(traj, out_dir / "decomposition.csv");
      ordered_json run;
      run["width"] = width;
      run["seed"] = seed;
      run["network_seed"] = network_seed(seed, width);
      run["eta"] = traj.eta;
      run["final_loss_1bit"] = traj.records.back().loss_1bit;
      run["final_loss_fp"] = traj.records.back().loss_fp;
      meta["runs"] = ordered_json::array({run});
      break;
    }
    case Command::sweep_width: {
      const auto cells = run_sweep(cfg);
      auto out = open_out(out_dir / "sweep.csv");
      out << "width,seed,min_loss_1bit,min_loss_fp,param_count,failed\n";
      for (const auto& c : cells) {
        out << c.width << ',' << c.seed << ',' << format_double(c.min_loss_1bit) << ','
            << format_double(c.min_loss_fp) << ',' << c.param_count << csv_row_end(c.failed);
      }
      auto summary = open_out(out_dir / "sweep_summary.csv");
      summary << "width,cells,failed,median_min_loss_1bit,median_min_loss_fp\n";
      for (const auto& s : summarize(cells)) {
        summary << s.width << ',' << s.cells << ',' << s.failed << ','
                << format_double(s.median_min_loss_1bit) << ','
                << format_double(s.median_min_loss_fp) << '\n';
      }
      write_runs(cells, out_dir / "runs");
      meta["runs"] = ordered_json::array();
      for (const auto& c : cells) meta["runs"].push_back(cell_meta(c));
      break;
    }
    case Command::similarity: {
      const auto cells = run_sweep(cfg);
      auto out = open_out(out_dir / "similarity.csv");
      out << "width,seed,kappa,max_train_diff_init,max_test_diff_init,max_train_diff_final,"
             "max_test_diff_final,failed\n";
      for (const auto& c : cells) {
        out << c.width << ',' << c.seed << ',' << format_double(cfg.kappa);
        if (c.trajectory) {
          const auto& first = c.trajectory->records.front();
          const auto& last = c.trajectory->records.back();
          out << ',' << format_double(first.max_train_diff) << ','
              << format_double(first.max_test_diff) << ','
              << format_double(last.max_train_diff) << ','
              << format_double(last.max_test_diff);
        } else {
          for (int k = 0; k < 4; ++k) out << ',' << format_double(kNaN);
        }
        out << csv_row_end(c.failed);
      }
      write_runs(cells, out_dir / "runs");
      meta["runs"] = ordered_json::array();
      for (const auto& c : cells) meta["runs"].push_back(cell_meta(c));
      break;
    }
    case Command::kernel_probe: {
      const auto gram_dir = out_dir / "gram";
      std::filesystem::create_directories(gram_dir);
      auto out = open_out(out_dir / "kernel_probe.csv");
      out << "width,seed,mode,lambda_min,lambda_max,frobenius_norm\n";
      for (std::size_t width : cfg.widths) {
        for (std::uint64_t seed : cfg.seeds) {
          const auto prepared = prepare_data(cfg, seed);
          const auto init = net::init_network(prepared.train.dim(), width, cfg.kappa,
                                              network_seed(seed, width), cfg.sigma);
          for (auto mode : {net::GateMode::one_bit, net::GateMode::full_precision}) {
            const auto g = kernel::gram_matrix(prepared.train.x, init, mode);
            const auto range = kernel::min_max_eigenvalues(g);
            out << width << ',' << seed << ',' << net::to_string(mode) << ','
                << format_double(range.min) << ',' << format_double(range.max) << ','
                << format_double(kernel::frobenius_norm(g.entries)) << '\n';
            auto gf = open_out(gram_dir / ("gram_w" + std::to_string(width) + "_s" +
                                           std::to_string(seed) + "_" + net::to_string(mode) +
                                           ".csv"));
            for (std::size_t i = 0; i < g.size(); ++i) {
              for (std::size_t j = 0; j < g.size(); ++j) {
                gf << (j ? "," : "") << format_double(g(i, j));
              }
              gf << '\n';
            }
          }
        }
      }
      break;
    }
    case Command::generate_data: {
      for (std::uint64_t seed : cfg.seeds) {
        const auto prepared = prepare_data(cfg, seed);
        const std::string stem = "data_s" + std::to_string(seed);
        data::persist_dataset(prepared.train, out_dir / (stem + "_train.csv"));
        data::persist_dataset(prepared.test, out_dir / (stem + "_test.csv"));
      }
      break;
    }
    case Command::compare_1d: {
      const auto res = compare_1d(cfg);
      auto out = open_out(out_dir / "compare1d.csv");
      out << "x,y_true,y_1bit,y_fp\n";
      for (std::size_t i = 0; i < res.x.size(); ++i) {
        out << format_double(res.x[i]) << ',' << format_double(res.y_true[i]) << ','
            << format_double(res.y_1bit[i]) << ',' << format_double(res.y_fp[i]) << '\n';
      }
      ordered_json run;
      run["width"] = cfg.widths.front();
      run["seed"] = cfg.seeds.front();
      run["eta"] = res.eta;
      run["grid_rows"] = res.grid_rows;
      run["test_rows"] = res.x.size() - res.grid_rows;
      run["max_test_gap"] = res.max_test_gap;
      run["final_loss_1bit"] = res.train_loss_1bit;
      run["final_loss_fp"] = res.train_loss_fp;
      meta["runs"] = ordered_json::array({run});
      break;
    }
  }

  meta["wall_time_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  auto mout = open_out(out_dir / "meta.json");
  mout << meta.dump(2) << '\n';
}

}  // namespace bitkernel::experiment
