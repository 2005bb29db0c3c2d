#include "locml/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "locml/bayes.hpp"
#include "locml/dataset.hpp"
#include "locml/ensemble.hpp"
#include "locml/instance.hpp"
#include "locml/learners.hpp"
#include "locml/linear.hpp"
#include "locml/nn.hpp"
#include "locml/optim.hpp"
#include "locml/trace.hpp"
#include "locml/version.hpp"

namespace locml {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

fs::path prepare_out_dir(const RunConfig& config) {
  const fs::path dir(config.out_dir());
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failure: " + path.string());
}

std::string csv_header(const RunConfig& config, const std::string& name) {
  std::string header = "# locml " + name + " csv v1\n";
  header += "# locml-version " + std::string(version) + "\n";
  for (const auto& line : config.echo_lines()) header += "# config " + line + "\n";
  return header;
}

nlohmann::json config_json(const RunConfig& config) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : config.kv) j[k] = v;
  return j;
}

nlohmann::json payload_shell(const RunConfig& config, const std::string& name) {
  nlohmann::json j;
  j["schema"] = "locml " + name + " json v1";
  j["locml_version"] = version;
  j["config"] = config_json(config);
  return j;
}

void write_meta(const RunConfig& config, const fs::path& dir, const std::string& name,
                nlohmann::json timings) {
  nlohmann::json meta;
  meta["schema"] = "locml meta json v1";
  meta["subcommand"] = name;
  meta["timestamp_utc"] = timestamp_utc();
  meta["timings"] = std::move(timings);
  meta["repeat"] = config.repeat();
  write_file(dir / (name + ".meta.json"), meta.dump(2) + "\n");
}

std::vector<std::vector<double>> synth_centers(std::size_t n_classes,
                                               std::size_t n_features, double spread,
                                               std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0xCE17));
  std::vector<std::vector<double>> centers(n_classes, std::vector<double>(n_features));
  for (auto& center : centers)
    for (double& c : center) c = spread * (2.0 * rng.next_double() - 1.0);
  return centers;
}

std::size_t csv_column_count(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::string line;
  while (std::getline(in, line))
    if (!trim(line).empty())
      return static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  throw std::runtime_error("empty input: " + path);
}

/// Synthetic blobs from the config, or a CSV file when `data` is set.
Dataset dataset_from_config(const RunConfig& config, std::uint64_t data_seed) {
  if (config.has("data")) {
    const std::string path = config.get_string("data", "");
    const bool header = config.get_bool("header", false);
    std::size_t label_column = config.get_u64("label_column", UINT64_MAX);
    if (label_column == UINT64_MAX) label_column = csv_column_count(path) - 1;
    return load_csv(path, label_column, LabelKind::classification, header);
  }
  const auto classes = config.get_u64("classes", 2);
  const auto per_class = config.get_u64("per_class", 200);
  const auto features = config.get_u64("features", 10);
  const double sigma = config.get_double("sigma", 1.0);
  const double spread = config.get_double("spread", 5.0);
  return generate_blobs(per_class, classes, features,
                        synth_centers(classes, features, spread, data_seed), sigma,
                        derive_seed(data_seed, 0xB10B));
}

OptimizerConfig optimizer_from_config(const RunConfig& config) {
  OptimizerConfig opt;
  opt.batch_size = config.get_u64("batch", 16);
  opt.epochs = config.get_u64("epochs", 10);
  opt.step_size = config.get_double("eta", 0.1);
  opt.weight_decay = config.get_double("lambda", 0.0);
  opt.rule = update_kind_from_string(config.get_string("rule", "vanilla"));
  opt.shuffle = config.get_bool("shuffle", true);
  opt.validate();
  return opt;
}

const std::vector<std::string> common_keys = {"out", "format", "repeat", "seed", "seeds"};

std::vector<std::string> with_common(std::vector<std::string> keys) {
  keys.insert(keys.end(), common_keys.begin(), common_keys.end());
  return keys;
}

}  // namespace

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  RunConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::runtime_error("config line " + std::to_string(line_no) + ": empty key");
    config.kv[key] = value;
  }
  return config;
}

std::string RunConfig::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = kv.find(key);
  return it == kv.end() ? fallback : it->second;
}

std::uint64_t RunConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    return std::stoull(it->second);
  } catch (const std::exception&) {
    throw std::runtime_error("config key '" + key + "': expected an integer, got '" +
                             it->second + "'");
  }
}

double RunConfig::get_double(const std::string& key, double fallback) const {
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw std::runtime_error("config key '" + key + "': expected a number, got '" +
                             it->second + "'");
  }
}

bool RunConfig::get_bool(const std::string& key, bool fallback) const {
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw std::runtime_error("config key '" + key + "': expected true/false");
}

std::vector<std::uint64_t> RunConfig::get_u64_list(
    const std::string& key, const std::vector<std::uint64_t>& fallback) const {
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  std::vector<std::uint64_t> out;
  for (const auto& item : split_list(it->second)) out.push_back(std::stoull(item));
  if (out.empty()) throw std::runtime_error("config key '" + key + "': empty list");
  return out;
}

std::vector<std::string> RunConfig::get_string_list(
    const std::string& key, const std::vector<std::string>& fallback) const {
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  const auto out = split_list(it->second);
  if (out.empty()) throw std::runtime_error("config key '" + key + "': empty list");
  return out;
}

std::vector<std::uint64_t> RunConfig::seeds(
    const std::vector<std::uint64_t>& fallback) const {
  if (has("seeds")) return get_u64_list("seeds", fallback);
  if (has("seed")) return {get_u64("seed", 0)};
  return fallback;
}

void RunConfig::validate_keys(const std::vector<std::string>& allowed) const {
  for (const auto& [key, value] : kv) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw std::runtime_error("unknown config key for subcommand '" + subcommand +
                               "': " + key);
  }
}

std::vector<std::string> RunConfig::echo_lines() const {
  std::vector<std::string> lines;
  lines.reserve(kv.size() + 1);
  lines.push_back("subcommand=" + subcommand);
  for (const auto& [key, value] : kv) lines.push_back(key + "=" + value);
  return lines;
}

void cmd_swsgd_bench(const RunConfig& config) {
  config.validate_keys(with_common({"optimizers", "epochs", "batch", "eta", "lambda",
                                    "loss", "classes", "per_class", "features", "sigma",
                                    "spread", "data_seed", "windows", "data", "header",
                                    "label_column"}));
  const auto optimizers =
      config.get_string_list("optimizers", {"vanilla", "momentum", "adagrad", "adam"});
  const auto windows = config.get_u64_list("windows", {0, 1, 2});
  const auto seeds = config.seeds({1, 2, 3, 4, 5});
  const auto epochs = config.get_u64("epochs", 15);
  const auto loss = linear_loss_from_string(config.get_string("loss", "logistic"));
  const Dataset data = dataset_from_config(config, config.get_u64("data_seed", 12345));
  if (loss == LinearLoss::hinge)
    throw std::runtime_error("swsgd-bench: hinge labels need remapping; use loss=logistic");

  struct Cell {
    std::vector<double> median_loss;  // per epoch
    std::uint64_t point_loads = 0;
    bool diverged = false;
  };
  std::map<std::pair<std::string, std::uint64_t>, Cell> cells;

  const auto start = Clock::now();
  for (const auto& name : optimizers) {
    const UpdateKind rule = update_kind_from_string(name);
    for (const auto w : windows) {
      Cell cell;
      std::vector<std::vector<double>> curves;
      for (const auto seed : seeds) {
        OptimizerConfig opt = optimizer_from_config(config);
        opt.rule = rule;
        opt.epochs = epochs;
        opt.window_batches = w;
        opt.seed = seed;
        std::vector<double> weights(data.n_features, 0.0);
        try {
          const auto report = train_swsgd(weights, linear_grad_fn(loss),
                                          linear_loss_fn(loss), data, opt);
          curves.push_back(report.epoch_loss);
          cell.point_loads = report.point_loads();
        } catch (const DivergenceError&) {
          cell.diverged = true;
          break;
        }
      }
      if (!cell.diverged) {
        for (std::size_t e = 0; e < epochs; ++e) {
          std::vector<double> at_epoch;
          at_epoch.reserve(curves.size());
          for (const auto& c : curves) at_epoch.push_back(c[e]);
          cell.median_loss.push_back(median(std::move(at_epoch)));
        }
      }
      cells[{name, w}] = std::move(cell);
    }
  }
  const double elapsed = seconds_since(start);

  const fs::path dir = prepare_out_dir(config);
  if (config.format() == "json") {
    nlohmann::json j = payload_shell(config, "swsgd-bench");
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& [key, cell] : cells) {
      nlohmann::json row;
      row["optimizer"] = key.first;
      row["window"] = key.second;
      row["status"] = cell.diverged ? "diverged" : "ok";
      row["point_loads"] = cell.point_loads;
      row["median_loss"] = cell.median_loss;
      rows.push_back(std::move(row));
    }
    j["data"] = std::move(rows);
    write_file(dir / "swsgd_bench.json", j.dump(2) + "\n");
  } else {
    std::string out = csv_header(config, "swsgd-bench");
    out += "optimizer,window,epoch,mean_loss,point_loads,status\n";
    for (const auto& name : optimizers) {
      for (const auto w : windows) {
        const Cell& cell = cells.at({name, w});
        for (std::size_t e = 0; e < epochs; ++e) {
          out += name + "," + std::to_string(w) + "," + std::to_string(e) + ",";
          if (cell.diverged)
            out += "nan,0,diverged\n";
          else
            out += fmt(cell.median_loss[e]) + "," + std::to_string(cell.point_loads) +
                   ",ok\n";
        }
      }
    }
    write_file(dir / "swsgd_bench.csv", out);
  }
  write_meta(config, dir, "swsgd_bench", {{"total_s", elapsed}});
}

void cmd_joint_instance_bench(const RunConfig& config) {
  config.validate_keys(with_common({"classes", "rt_per_class", "queries_per_class",
                                    "features", "sigma", "spread", "k", "bandwidth",
                                    "query_batch", "data_seed"}));
  const auto classes = config.get_u64("classes", 2);
  const auto rt_per_class = config.get_u64("rt_per_class", 2500);
  const auto q_per_class = config.get_u64("queries_per_class", 250);
  const auto features = config.get_u64("features", 20);
  const double sigma = config.get_double("sigma", 1.5);
  const double spread = config.get_double("spread", 5.0);
  const auto k = config.get_u64("k", 5);
  const KernelSpec kernel{KernelSpec::Kind::gaussian, config.get_double("bandwidth", 2.0)};
  const auto query_batch = config.get_u64("query_batch", 8);
  const auto data_seed = config.get_u64("data_seed", config.seeds({7}).front());
  const auto repeats = std::max<std::uint64_t>(1, config.repeat());

  const auto centers = synth_centers(classes, features, spread, data_seed);
  const auto make_rt = [&] {
    return generate_blobs(rt_per_class, classes, features, centers, sigma,
                          derive_seed(data_seed, 1));
  };
  const auto make_queries = [&] {
    return generate_blobs(q_per_class, classes, features, centers, sigma,
                          derive_seed(data_seed, 2));
  };

  // Separate mode stands for two independent runs, so it pays the data
  // load twice; joint pays it once.
  std::vector<double> sep_load_s, sep_test_s, joint_load_s, joint_test_s;
  KnnResult knn;
  PrwResult prw;
  JointResult joint;
  for (std::uint64_t r = 0; r <= repeats; ++r) {  // first iteration is warm-up
    auto t0 = Clock::now();
    const Dataset rt_a = make_rt();
    const Dataset queries_a = make_queries();
    const Dataset rt_b = make_rt();
    const Dataset queries_b = make_queries();
    const double sep_load = seconds_since(t0);
    knn = knn_classify(rt_a, queries_a, k, query_batch);
    prw = prw_classify(rt_b, queries_b, kernel);
    const double sep_test =
        1e-9 * static_cast<double>(knn.report.wall_ns + prw.report.wall_ns);

    t0 = Clock::now();
    const Dataset rt = make_rt();
    const Dataset queries = make_queries();
    const double joint_load = seconds_since(t0);
    joint = joint_classify(rt, queries, k, kernel, query_batch);

    if (r == 0) continue;
    sep_load_s.push_back(sep_load);
    sep_test_s.push_back(sep_test);
    joint_load_s.push_back(joint_load);
    joint_test_s.push_back(1e-9 * static_cast<double>(joint.report.wall_ns));
  }

  const bool labels_equal =
      joint.knn_labels == knn.labels && joint.prw_labels == prw.labels;
  if (!labels_equal)
    throw std::runtime_error(
        "joint-instance-bench: joint labels differ from separate labels");

  const std::uint64_t sep_distances =
      knn.report.distance_computations + prw.report.distance_computations;

  nlohmann::json j = payload_shell(config, "joint-instance-bench");
  j["data"]["separate"]["distance_computations"] = sep_distances;
  j["data"]["separate"]["train_point_loads"] =
      knn.report.train_point_loads + prw.report.train_point_loads;
  j["data"]["joint"]["distance_computations"] = joint.report.distance_computations;
  j["data"]["joint"]["train_point_loads"] = joint.report.train_point_loads;
  j["data"]["labels_equal"] = labels_equal;
  j["data"]["distance_ratio"] =
      static_cast<double>(joint.report.distance_computations) /
      static_cast<double>(sep_distances);

  const fs::path dir = prepare_out_dir(config);
  write_file(dir / "joint_instance_bench.json", j.dump(2) + "\n");
  std::string labels = csv_header(config, "joint-instance-labels");
  labels += "query,knn_label,prw_label\n";
  for (std::size_t i = 0; i < joint.knn_labels.size(); ++i)
    labels += std::to_string(i) + "," + std::to_string(joint.knn_labels[i]) + "," +
              std::to_string(joint.prw_labels[i]) + "\n";
  write_file(dir / "joint_instance_labels.csv", labels);

  nlohmann::json timings;
  timings["separate"]["load_s"] = median(sep_load_s);
  timings["separate"]["test_s"] = median(sep_test_s);
  timings["joint"]["load_s"] = median(joint_load_s);
  timings["joint"]["test_s"] = median(joint_test_s);
  timings["test_time_ratio"] = median(joint_test_s) / median(sep_test_s);
  write_meta(config, dir, "joint_instance_bench", std::move(timings));
}

void cmd_cv_bench(const RunConfig& config) {
  config.validate_keys(with_common({"learner", "k", "epochs", "batch", "eta", "lambda",
                                    "rule", "shuffle", "knn_k", "classes", "per_class",
                                    "features", "sigma", "spread", "data_seed", "data",
                                    "header", "label_column"}));
  const auto learner_name = config.get_string("learner", "logistic");
  const auto k = config.get_u64("k", 5);
  const auto epochs = config.get_u64("epochs", 1);
  const auto seed = config.seeds({3}).front();
  const Dataset data = dataset_from_config(config, config.get_u64("data_seed", 99));

  OptimizerConfig opt = optimizer_from_config(config);
  opt.epochs = epochs;
  const auto factory =
      make_learner_factory(learner_name, opt, config.get_u64("knn_k", 1), 0);

  const auto start_naive = Clock::now();
  const CVReport naive = cross_validate(factory, data, k, seed);
  const double naive_s = seconds_since(start_naive);

  bool streamed_supported = factory(0)->supports_incremental();
  CVReport streamed;
  double streamed_s = 0.0;
  if (streamed_supported) {
    const auto start_streamed = Clock::now();
    streamed = cross_validate_streamed(factory, data, k, epochs, seed);
    streamed_s = seconds_since(start_streamed);
  }

  const auto emit_rows = [&](const std::string& mode, const CVReport& report,
                             std::string& out) {
    for (std::size_t f = 0; f < report.fold_accuracy.size(); ++f)
      out += mode + ",fold_accuracy," + std::to_string(f) + "," +
             fmt(report.fold_accuracy[f]) + "\n";
    out += mode + ",mean_accuracy,," + fmt(report.mean_accuracy) + "\n";
    out += mode + ",point_loads,," + std::to_string(report.train_point_loads) + "\n";
  };

  const fs::path dir = prepare_out_dir(config);
  if (config.format() == "json") {
    nlohmann::json j = payload_shell(config, "cv-bench");
    j["data"]["naive"] = nlohmann::json::parse(naive.to_json());
    if (streamed_supported)
      j["data"]["streamed"] = nlohmann::json::parse(streamed.to_json());
    else
      j["data"]["streamed"] = "unsupported";
    write_file(dir / "cv_bench.json", j.dump(2) + "\n");
  } else {
    std::string out = csv_header(config, "cv-bench");
    out += "mode,metric,index,value\n";
    emit_rows("naive", naive, out);
    if (streamed_supported)
      emit_rows("streamed", streamed, out);
    else
      out += "streamed,status,,unsupported\n";
    write_file(dir / "cv_bench.csv", out);
  }
  write_meta(config, dir, "cv_bench",
             {{"naive_s", naive_s}, {"streamed_s", streamed_s}});
}

void cmd_trace(const RunConfig& config) {
  config.validate_keys(with_common({"kind", "n", "m", "capacity", "line_size", "hit_cost",
                                    "miss_cost", "points", "epochs", "batch", "shuffle",
                                    "rt", "queries", "query_batch", "k", "n_boot",
                                    "emit_traces"}));
  const auto kind = config.get_string("kind", "stencil");
  const CacheConfig cache{config.get_u64("capacity", 64), config.get_u64("line_size", 4)};
  const auto hit_cost = config.get_u64("hit_cost", 4);
  const auto miss_cost = config.get_u64("miss_cost", 40);
  const bool emit_traces = config.get_bool("emit_traces", true);
  const auto seed = config.seeds({0}).front();

  std::vector<std::pair<std::string, AccessTrace>> scenarios;
  std::map<std::uint32_t, std::string> names = {{object_id::train_set, "train_set"},
                                                {object_id::model, "model"},
                                                {object_id::query_set, "query_set"},
                                                {object_id::stencil_a, "stencil_a"},
                                                {object_id::stencil_b, "stencil_b"}};

  if (kind == "stencil") {
    const auto n = config.get_u64("n", 64);
    const auto m = config.get_u64("m", 64);
    scenarios.emplace_back("stencil_ij", gen_stencil_trace(n, m, LoopOrder::ij));
    scenarios.emplace_back("stencil_ji", gen_stencil_trace(n, m, LoopOrder::ji));
  } else if (kind == "sgd") {
    scenarios.emplace_back(
        "sgd", gen_sgd_trace(config.get_u64("points", 100), config.get_u64("epochs", 2),
                             config.get_u64("batch", 1), config.get_bool("shuffle", false),
                             seed));
  } else if (kind == "knn") {
    scenarios.emplace_back(
        "knn", gen_knn_trace(config.get_u64("rt", 100), config.get_u64("queries", 30),
                             config.get_u64("query_batch", 1)));
  } else if (kind == "cv") {
    scenarios.emplace_back("cv_naive",
                           gen_cv_trace(config.get_u64("points", 99),
                                        config.get_u64("k", 3), false));
    scenarios.emplace_back("cv_streamed",
                           gen_cv_trace(config.get_u64("points", 99),
                                        config.get_u64("k", 3), true));
  } else if (kind == "bootstrap") {
    scenarios.emplace_back("bootstrap",
                           gen_bootstrap_trace(config.get_u64("points", 100),
                                               config.get_u64("n_boot", 10), seed));
  } else {
    throw std::runtime_error("unknown trace kind: " + kind);
  }

  const fs::path dir = prepare_out_dir(config);
  const auto start = Clock::now();
  std::string out = csv_header(config, "trace");
  out += "scenario,events,cold_misses,hits,misses,hit_rate,cost_cycles\n";
  for (const auto& [name, trace] : scenarios) {
    const ReuseStats stats = stack_distances(trace);
    const CacheResult sim = simulate_cache(trace, cache, hit_cost, miss_cost);
    out += name + "," + std::to_string(trace.size()) + "," +
           std::to_string(stats.cold_misses) + "," + std::to_string(sim.hits) + "," +
           std::to_string(sim.misses) + "," + fmt(sim.hit_rate) + "," +
           std::to_string(sim.cost_cycles) + "\n";
    write_histogram_csv(stats, (dir / ("trace_" + name + "_hist.csv")).string());
    if (emit_traces) write_trace(trace, (dir / ("trace_" + name + ".trace")).string(), names);
  }
  write_file(dir / "trace.csv", out);
  write_meta(config, dir, "trace", {{"total_s", seconds_since(start)}});
}

namespace {

double linear_fd_max_error(LinearLoss loss, std::size_t features, std::size_t trials,
                           double eps, std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    LinearModel model;
    model.loss = loss;
    model.weights.resize(features);
    std::vector<double> x(features);
    for (auto& w : model.weights) w = rng.normal();
    for (auto& v : x) v = rng.normal();
    double y;
    for (;;) {
      y = loss == LinearLoss::logistic ? static_cast<double>(rng.below(2))
                                       : (rng.below(2) == 0 ? -1.0 : 1.0);
      if (loss == LinearLoss::logistic) break;
      // Stay away from the hinge kink so the loss is differentiable there.
      const double margin = y * decision_value(model, x);
      if (std::abs(1.0 - margin) > 1e-3) break;
      for (auto& w : model.weights) w = rng.normal();
    }
    const auto grad = point_gradient(model, x, y);
    for (std::size_t i = 0; i < features; ++i) {
      const double saved = model.weights[i];
      model.weights[i] = saved + eps;
      const double up = point_loss(model, x, y);
      model.weights[i] = saved - eps;
      const double down = point_loss(model, x, y);
      model.weights[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double rel = std::abs(grad[i] - numeric) /
                         std::max({1.0, std::abs(grad[i]), std::abs(numeric)});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

double mlp_fd_max_error(const std::vector<std::size_t>& layers, std::size_t trials,
                        double eps, std::uint64_t seed) {
  double worst = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    MLP mlp = MLP::init(layers, OutputHead::softmax_cross_entropy, derive_seed(seed, t));
    Rng rng(derive_seed(seed, 1000 + t));
    Matrix batch(layers.front(), 2);
    for (double& v : batch.data) v = rng.normal();
    Matrix targets(layers.back(), 2);
    for (std::size_t c = 0; c < targets.cols; ++c)
      targets(static_cast<std::size_t>(rng.below(targets.rows)), c) = 1.0;
    worst = std::max(worst, grad_check(mlp, batch, targets, eps));
  }
  return worst;
}

}  // namespace

void cmd_grad_check(const RunConfig& config) {
  config.validate_keys(
      with_common({"trials", "eps", "features", "layers", "threshold", "mlp_trials"}));
  const auto trials = config.get_u64("trials", 100);
  const auto mlp_trials = config.get_u64("mlp_trials", 20);
  const double eps = config.get_double("eps", 1e-5);
  const double threshold = config.get_double("threshold", 1e-5);
  const auto features = config.get_u64("features", 8);
  const auto layer_list = config.get_u64_list("layers", {6, 8, 7, 3});
  const auto seed = config.seeds({42}).front();
  std::vector<std::size_t> layers(layer_list.begin(), layer_list.end());

  const auto start = Clock::now();
  struct Row {
    std::string model;
    std::uint64_t evaluations;
    double max_rel_error;
  };
  const std::vector<Row> rows = {
      {"logistic", trials,
       linear_fd_max_error(LinearLoss::logistic, features, trials, eps, derive_seed(seed, 1))},
      {"hinge", trials,
       linear_fd_max_error(LinearLoss::hinge, features, trials, eps, derive_seed(seed, 2))},
      {"mlp", mlp_trials, mlp_fd_max_error(layers, mlp_trials, eps, derive_seed(seed, 3))},
  };

  const fs::path dir = prepare_out_dir(config);
  if (config.format() == "json") {
    nlohmann::json j = payload_shell(config, "grad-check");
    nlohmann::json data = nlohmann::json::array();
    for (const auto& row : rows) {
      nlohmann::json r;
      r["model"] = row.model;
      r["evaluations"] = row.evaluations;
      r["max_rel_error"] = row.max_rel_error;
      r["threshold"] = threshold;
      r["status"] = row.max_rel_error <= threshold ? "pass" : "fail";
      data.push_back(std::move(r));
    }
    j["data"] = std::move(data);
    write_file(dir / "grad_check.json", j.dump(2) + "\n");
  } else {
    std::string out = csv_header(config, "grad-check");
    out += "model,evaluations,max_rel_error,threshold,status\n";
    for (const auto& row : rows)
      out += row.model + "," + std::to_string(row.evaluations) + "," +
             fmt(row.max_rel_error) + "," + fmt(threshold) + "," +
             (row.max_rel_error <= threshold ? "pass" : "fail") + "\n";
    write_file(dir / "grad_check.csv", out);
  }
  write_meta(config, dir, "grad_check", {{"total_s", seconds_since(start)}});
}

void cmd_data_gen(const RunConfig& config) {
  config.validate_keys(
      with_common({"classes", "per_class", "features", "sigma", "spread", "header",
                   "name", "data_seed"}));
  const auto start = Clock::now();
  const Dataset data =
      dataset_from_config(config, config.get_u64("data_seed", config.seeds({0}).front()));
  const fs::path dir = prepare_out_dir(config);
  const std::string name = config.get_string("name", "dataset.csv");
  save_csv(data, (dir / name).string(), config.get_bool("header", false));
  // The dataset file stays in the plain CSV dialect; the config echo lives
  // in a companion payload.
  nlohmann::json j = payload_shell(config, "data-gen");
  j["data"]["file"] = name;
  j["data"]["n_points"] = data.n_points;
  j["data"]["n_features"] = data.n_features;
  j["data"]["n_classes"] = data.n_classes();
  write_file(dir / "data_gen.json", j.dump(2) + "\n");
  write_meta(config, dir, "data_gen", {{"total_s", seconds_since(start)}});
}

bool run_subcommand(const RunConfig& config) {
  if (config.subcommand == "swsgd-bench") cmd_swsgd_bench(config);
  else if (config.subcommand == "joint-instance-bench") cmd_joint_instance_bench(config);
  else if (config.subcommand == "cv-bench") cmd_cv_bench(config);
  else if (config.subcommand == "trace") cmd_trace(config);
  else if (config.subcommand == "grad-check") cmd_grad_check(config);
  else if (config.subcommand == "data-gen") cmd_data_gen(config);
  else return false;
  return true;
}

std::vector<std::string> subcommand_names() {
  return {"swsgd-bench", "joint-instance-bench", "cv-bench",
          "trace",       "grad-check",           "data-gen"};
}

}  // namespace locml
