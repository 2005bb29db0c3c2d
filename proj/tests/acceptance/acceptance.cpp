// Acceptance suite: one pass/fail line per criterion. Takes the benchmark
// CLI path as argv[1] (used by the determinism criterion).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "locml/bayes.hpp"
#include "locml/cli.hpp"
#include "locml/dataset.hpp"
#include "locml/ensemble.hpp"
#include "locml/instance.hpp"
#include "locml/learners.hpp"
#include "locml/linear.hpp"
#include "locml/nn.hpp"
#include "locml/optim.hpp"
#include "locml/trace.hpp"

using namespace locml;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

struct Check {
  bool ok = true;
  std::string detail;

  void expect(bool condition, const std::string& what) {
    if (!condition && ok) {
      ok = false;
      detail = what;
    }
  }
};

void report(int id, const std::string& name, const Check& check, double seconds) {
  if (check.ok) {
    std::printf("[PASS] criterion %2d: %s (%.2fs)\n", id, name.c_str(), seconds);
  } else {
    ++failures;
    std::printf("[FAIL] criterion %2d: %s (%.2fs) -- %s\n", id, name.c_str(), seconds,
                check.detail.c_str());
  }
  std::fflush(stdout);
}

template <typename Fn>
void criterion(int id, const std::string& name, Fn&& body) {
  Check check;
  const auto start = Clock::now();
  try {
    body(check);
  } catch (const std::exception& e) {
    check.expect(false, std::string("exception: ") + e.what());
  }
  report(id, name, check, std::chrono::duration<double>(Clock::now() - start).count());
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<std::vector<double>> two_centers(std::size_t features, double offset) {
  return {std::vector<double>(features, -offset), std::vector<double>(features, offset)};
}

// ---- criterion 1 ------------------------------------------------------

void joint_instance_equivalence(Check& check) {
  const std::size_t features = 20;
  const Dataset rt = generate_blobs(2500, 2, features, two_centers(features, 1.0), 1.5, 101);
  const Dataset queries =
      generate_blobs(250, 2, features, two_centers(features, 1.0), 1.5, 102);
  const std::size_t k = 5;
  const KernelSpec kernel{KernelSpec::Kind::gaussian, 2.0};
  const std::size_t batch = 16;

  std::vector<double> knn_s, prw_s, joint_s;
  KnnResult knn;
  PrwResult prw;
  JointResult joint;
  for (int rep = 0; rep < 6; ++rep) {  // first repetition warms up
    knn = knn_classify(rt, queries, k, batch);
    prw = prw_classify(rt, queries, kernel);
    joint = joint_classify(rt, queries, k, kernel, batch);
    if (rep == 0) continue;
    knn_s.push_back(1e-9 * static_cast<double>(knn.report.wall_ns));
    prw_s.push_back(1e-9 * static_cast<double>(prw.report.wall_ns));
    joint_s.push_back(1e-9 * static_cast<double>(joint.report.wall_ns));
  }

  check.expect(joint.knn_labels == knn.labels, "joint knn labels differ from separate run");
  check.expect(joint.prw_labels == prw.labels, "joint prw labels differ from separate run");
  const std::uint64_t separate =
      knn.report.distance_computations + prw.report.distance_computations;
  check.expect(joint.report.distance_computations * 2 == separate,
               "distance counter not exactly halved");
  check.expect(joint.report.distance_computations ==
                   rt.n_points * queries.n_points,
               "unexpected joint distance count");
  const double joint_med = median_of(joint_s);
  const double separate_med = median_of(knn_s) + median_of(prw_s);
  std::ostringstream detail;
  detail << "joint " << joint_med << "s vs separate " << separate_med << "s (ratio "
         << joint_med / separate_med << ", bound 0.75)";
  std::printf("       %s\n", detail.str().c_str());
  check.expect(joint_med <= 0.75 * separate_med, detail.str());
}

// ---- criterion 2 ------------------------------------------------------

void swsgd_degeneracy(Check& check) {
  const Dataset data = generate_blobs(30, 2, 5, two_centers(5, 1.0), 1.0, 7);
  Rng rng(2718);
  for (int trial = 0; trial < 20; ++trial) {
    OptimizerConfig config;
    config.batch_size = 1 + rng.below(data.n_points);
    config.epochs = 1 + rng.below(4);
    config.step_size = 0.01 + 0.4 * rng.next_double();
    config.rule = static_cast<UpdateKind>(rng.below(4));
    config.weight_decay = (trial % 3 == 0) ? 0.01 : 0.0;
    config.shuffle = rng.below(2) == 0;
    config.seed = rng.next_u64();
    config.window_batches = 0;

    std::vector<double> w_plain(data.n_features, 0.0);
    std::vector<double> w_window(data.n_features, 0.0);
    const auto grad = linear_grad_fn(LinearLoss::logistic);
    const auto loss = linear_loss_fn(LinearLoss::logistic);
    const auto r_plain = train(w_plain, grad, loss, data, config);
    const auto r_window = train_swsgd(w_window, grad, loss, data, config);
    check.expect(w_plain == w_window, "weights differ at trial " + std::to_string(trial));
    check.expect(r_plain.epoch_loss == r_window.epoch_loss,
                 "loss history differs at trial " + std::to_string(trial));
  }
}

// ---- criterion 3 ------------------------------------------------------

void swsgd_benefit(Check& check) {
  const std::size_t features = 20;
  const Dataset data =
      generate_blobs(1000, 2, features, two_centers(features, 0.25), 1.5, 404);
  const double eta = 0.8;  // tuned once, shared by every scenario
  const std::size_t epochs = 12;

  std::map<std::size_t, std::vector<double>> loss_at_10;
  for (const std::size_t w : {0, 1, 2}) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      OptimizerConfig config;
      config.batch_size = 16;
      config.epochs = epochs;
      config.step_size = eta;
      config.window_batches = w;
      config.seed = seed;
      std::vector<double> weights(features, 0.0);
      const auto report =
          train_swsgd(weights, linear_grad_fn(LinearLoss::logistic),
                      linear_loss_fn(LinearLoss::logistic), data, config);
      loss_at_10[w].push_back(report.epoch_loss[10]);
    }
  }
  const double w0 = median_of(loss_at_10[0]);
  const double w1 = median_of(loss_at_10[1]);
  const double w2 = median_of(loss_at_10[2]);
  std::ostringstream detail;
  detail << "median epoch-10 loss: w0=" << w0 << " w1=" << w1 << " w2=" << w2;
  std::printf("       %s\n", detail.str().c_str());
  check.expect(w2 <= w0, detail.str());
}

// ---- criterion 4 ------------------------------------------------------

void gradient_correctness(Check& check) {
  const double eps = 1e-5;
  const double bound = 1e-5;
  Rng rng(555);

  for (const LinearLoss loss : {LinearLoss::logistic, LinearLoss::hinge}) {
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      LinearModel model = LinearModel::zeros(loss, 6);
      std::vector<double> x(6);
      double y = 0.0;
      for (;;) {
        for (auto& w : model.weights) w = rng.normal();
        for (auto& v : x) v = rng.normal();
        y = loss == LinearLoss::logistic ? static_cast<double>(rng.below(2))
                                         : (rng.below(2) == 0 ? -1.0 : 1.0);
        if (loss == LinearLoss::logistic) break;
        if (std::abs(1.0 - y * decision_value(model, x)) > 1e-3) break;
      }
      const auto grad = point_gradient(model, x, y);
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = model.weights[i];
        model.weights[i] = saved + eps;
        const double up = point_loss(model, x, y);
        model.weights[i] = saved - eps;
        const double down = point_loss(model, x, y);
        model.weights[i] = saved;
        const double numeric = (up - down) / (2.0 * eps);
        worst = std::max(worst, std::abs(grad[i] - numeric) /
                                    std::max({1.0, std::abs(grad[i]), std::abs(numeric)}));
      }
    }
    check.expect(worst <= bound,
                 to_string(loss) + " gradient error " + std::to_string(worst));
  }

  double worst_mlp = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    MLP mlp = MLP::init({5, 8, 6, 3}, OutputHead::softmax_cross_entropy,
                        derive_seed(999, trial));
    Matrix batch(5, 2);
    for (double& v : batch.data) v = rng.normal();
    Matrix targets(3, 2);
    for (std::size_t c = 0; c < 2; ++c) targets(rng.below(3), c) = 1.0;
    worst_mlp = std::max(worst_mlp, grad_check(mlp, batch, targets, eps));
  }
  check.expect(worst_mlp <= bound, "mlp gradient error " + std::to_string(worst_mlp));
}

// ---- criterion 5 ------------------------------------------------------

void reuse_distance_claims(Check& check) {
  // Fixed-order SGD: gap |T|, stack distance |T| - 1, for every point.
  const std::size_t points = 32;
  const auto sgd = gen_sgd_trace(points, 3, 1, false);
  const auto sgd_stats = stack_distances(sgd);
  check.expect(sgd_stats.stack_histogram.size() == 1 &&
                   sgd_stats.stack_histogram.begin()->first == points - 1,
               "sgd stack distance not |T|-1");
  for (const auto& [key, gap] : sgd_stats.per_element)
    check.expect(gap.min == points && gap.max == points, "sgd iteration gap not |T|");

  // k-NN: query reuse is adjacent (gap 1 / stack 0 in its own stream), RT
  // elements are |RT|-1 distinct elements apart.
  const std::size_t rt_n = 20, queries_n = 7;
  const auto knn = gen_knn_trace(rt_n, queries_n, 1);
  const auto rt_stats = stack_distances(filter_object(knn, object_id::train_set));
  check.expect(rt_stats.stack_histogram.size() == 1 &&
                   rt_stats.stack_histogram.begin()->first == rt_n - 1,
               "knn RT stack distance not |RT|-1");
  const auto query_stats = stack_distances(filter_object(knn, object_id::query_set));
  for (const auto& [key, gap] : query_stats.per_element)
    check.expect(gap.min == 1 && gap.max == 1, "query reuse distance not 1");
  check.expect(query_stats.stack_histogram.size() == 1 &&
                   query_stats.stack_histogram.begin()->first == 0,
               "query stack distance not 0");

  // Naive CV: per round the test fold is read after the k-1 training folds;
  // over all rounds each fold trains k-1 times and tests once.
  const std::size_t cv_points = 24, k = 4;
  const auto cv = gen_cv_trace(cv_points, k, false);
  const std::size_t fold_size = cv_points / k;
  std::vector<std::size_t> train_rounds(k, 0), test_rounds(k, 0);
  for (std::size_t round = 0; round < k; ++round) {
    std::set<std::size_t> train_folds, test_folds;
    for (std::size_t pos = 0; pos < cv_points; ++pos) {
      const auto fold = cv.events()[round * cv_points + pos].element / fold_size;
      (pos < cv_points - fold_size ? train_folds : test_folds).insert(fold);
    }
    check.expect(test_folds == std::set<std::size_t>{round}, "test fold mismatch");
    check.expect(train_folds.size() == k - 1 && !train_folds.count(round),
                 "training folds mismatch");
    for (std::size_t f : train_folds) ++train_rounds[f];
    for (std::size_t f : test_folds) ++test_rounds[f];
  }
  for (std::size_t f = 0; f < k; ++f) {
    check.expect(train_rounds[f] == k - 1, "fold not read k-1 times for training");
    check.expect(test_rounds[f] == 1, "fold not read once for testing");
  }

  // Streamed CV loads |T| per sweep; naive loads (k-1)|T| per epoch.
  const Dataset data = generate_blobs(50, 2, 4, two_centers(4, 1.0), 1.0, 61);
  OptimizerConfig opt;
  opt.epochs = 1;
  opt.batch_size = 5;
  opt.step_size = 0.1;
  const auto factory = make_learner_factory("logistic", opt, 1, 0);
  const auto naive = cross_validate(factory, data, 5, 17);
  const auto streamed = cross_validate_streamed(factory, data, 5, 1, 17);
  check.expect(streamed.train_point_loads == data.n_points,
               "streamed loads not |T| per sweep");
  check.expect(naive.train_point_loads == (5 - 1) * data.n_points,
               "naive loads not (k-1)|T|");
}

// ---- criterion 6 ------------------------------------------------------

void loop_interchange(Check& check) {
  const auto ij = gen_stencil_trace(64, 64, LoopOrder::ij);
  const auto ji = gen_stencil_trace(64, 64, LoopOrder::ji);
  const CacheConfig cache{64, 4};
  const auto sim_ij = simulate_cache(ij, cache);
  const auto sim_ji = simulate_cache(ji, cache);
  std::ostringstream detail;
  detail << "hit rate ji " << sim_ji.hit_rate << " vs ij " << sim_ij.hit_rate;
  check.expect(sim_ji.hit_rate > sim_ij.hit_rate, detail.str());
}

// ---- criterion 7 ------------------------------------------------------

void cache_simulator_correctness(Check& check) {
  Rng rng(31337);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t length = 100 + rng.below(9900);
    const std::size_t universe = 2 + rng.below(127);
    AccessTrace trace;
    for (std::size_t i = 0; i < length; ++i)
      trace.record(static_cast<std::uint32_t>(rng.below(2)), rng.below(universe));

    // Quadratic set-counting oracle.
    const auto& events = trace.events();
    std::map<std::uint64_t, std::uint64_t> brute;
    std::uint64_t brute_cold = 0;
    std::set<std::pair<std::uint32_t, std::uint64_t>> seen;
    for (std::size_t t = 0; t < events.size(); ++t) {
      const std::pair<std::uint32_t, std::uint64_t> key{events[t].object,
                                                        events[t].element};
      if (!seen.count(key)) {
        ++brute_cold;
        seen.insert(key);
        continue;
      }
      std::set<std::pair<std::uint32_t, std::uint64_t>> between;
      for (std::size_t back = t; back-- > 0;) {
        const std::pair<std::uint32_t, std::uint64_t> other{events[back].object,
                                                            events[back].element};
        if (other == key) break;
        between.insert(other);
      }
      ++brute[between.size()];
    }
    const auto fast = stack_distances(trace);
    check.expect(fast.stack_histogram == brute && fast.cold_misses == brute_cold,
                 "histogram mismatch at trial " + std::to_string(trial));

    double prev = -1.0;
    for (std::size_t cap = 1; cap <= 256; cap *= 2) {
      const auto sim = simulate_cache(trace, {cap, 1});
      check.expect(sim.hit_rate >= prev, "hit rate decreased with capacity");
      prev = sim.hit_rate;
    }
    if (!check.ok) break;
  }
}

// ---- criterion 8 ------------------------------------------------------

void naive_bayes_single_epoch(Check& check) {
  Rng rng(808);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 4 + rng.below(120);
    const std::size_t features = 1 + rng.below(6);
    std::vector<double> values(n * features);
    std::vector<int> labels(n);
    for (auto& v : values) v = rng.normal();
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(rng.below(3));
    for (int c = 0; c < 3; ++c) labels[c] = c;
    const Dataset ds = Dataset::classification(features, std::move(values),
                                               std::move(labels));
    const auto fit = fit_nb(ds);
    check.expect(fit.point_reads == n, "fit read counter differs from n_points");
  }

  // 3 classes x 10 points, one feature pair; compare against the direct
  // posterior numerators computed in the probability domain.
  const Dataset inst = generate_blobs(10, 3, 2, {{0, 0}, {4, 0}, {0, 4}}, 1.0, 313);
  const auto model = fit_nb(inst).model;
  for (std::size_t i = 0; i < inst.n_points; ++i) {
    const auto pred = predict_nb(model, inst.point(i));
    std::vector<double> numerator(model.n_classes, 0.0);
    for (std::size_t c = 0; c < model.n_classes; ++c) {
      double density = 1.0;
      for (std::size_t f = 0; f < model.n_features; ++f) {
        const double var = model.variance(c, f);
        const double d = inst.point(i)[f] - model.mean(c, f);
        density *= std::exp(-d * d / (2.0 * var)) /
                   std::sqrt(2.0 * 3.141592653589793 * var);
      }
      numerator[c] = model.priors[c] * density;
    }
    const auto best = std::max_element(numerator.begin(), numerator.end()) -
                      numerator.begin();
    check.expect(pred.label == static_cast<int>(best),
                 "prediction differs from direct numerator at point " + std::to_string(i));
  }
}

// ---- criterion 9 ------------------------------------------------------

void blocked_gemm(Check& check) {
  Rng rng(909);
  const auto naive = [](const Matrix& a, const Matrix& b) {
    Matrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
      for (std::size_t j = 0; j < b.cols; ++j)
        for (std::size_t k = 0; k < a.cols; ++k) c(i, j) += a(i, k) * b(k, j);
    return c;
  };
  const std::vector<std::array<std::size_t, 3>> shapes = {
      {128, 128, 128}, {97, 64, 33}, {64, 48, 32}, {5, 7, 3}, {1, 128, 1}};
  for (const auto& [rows, inner, cols] : shapes) {
    Matrix a(rows, inner), b(inner, cols);
    for (double& v : a.data) v = rng.normal();
    for (double& v : b.data) v = rng.normal();
    const Matrix expected = naive(a, b);
    for (const std::size_t tile : {1, 4, 16, 64}) {
      const Matrix c = gemm_blocked(a, b, tile);
      double worst = 0.0;
      for (std::size_t i = 0; i < c.data.size(); ++i)
        worst = std::max(worst, std::abs(c.data[i] - expected.data[i]));
      check.expect(worst <= 1e-12, "tile " + std::to_string(tile) + " deviates by " +
                                       std::to_string(worst));
    }
  }
}

// ---- criterion 10 -----------------------------------------------------

void boosting_memoization(Check& check) {
  OptimizerConfig opt;
  opt.epochs = 2;
  opt.batch_size = 8;
  opt.step_size = 0.1;
  const auto factory = make_learner_factory("logistic", opt, 1, 0);
  const Dataset test_set = generate_blobs(20, 2, 3, two_centers(3, 1.0), 1.5, 1001);

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Dataset ds =
        generate_blobs(60, 2, 3, two_centers(3, 1.0), 1.5, derive_seed(1002, seed));
    const auto result = boost3(factory, ds, test_set, 40, seed);
    check.expect(result.m1_evaluations <= ds.n_points,
                 "M1 evaluated more than |T| times");
    check.expect(result.m2_evaluations <= ds.n_points,
                 "M2 evaluated more than |T| times");
  }

  // Degenerate branch: perfect M1 (memorizing learner, full-size sample).
  std::vector<double> values;
  std::vector<int> labels;
  for (int i = 0; i < 16; ++i) {
    values.push_back(static_cast<double>(i % 4));
    labels.push_back((i % 4) < 2 ? 0 : 1);
  }
  const Dataset consistent =
      Dataset::classification(1, std::move(values), std::move(labels));
  const auto knn_factory = make_learner_factory("knn", opt, 1, 0);
  const auto perfect = boost3(knn_factory, consistent, test_set, consistent.n_points, 5);
  check.expect(perfect.ensemble.degeneracy == BoostDegeneracy::m1_perfect,
               "perfect M1 not flagged");
  check.expect(perfect.ensemble.members.size() == 1, "perfect M1 ensemble size");

  // Degenerate branch: empty disagreement (constant learners always agree).
  std::vector<double> cv2;
  std::vector<int> cl2;
  for (int i = 0; i < 16; ++i) {
    cv2.push_back(static_cast<double>(i));
    cl2.push_back(i % 2);
  }
  const Dataset mixed = Dataset::classification(1, std::move(cv2), std::move(cl2));
  const auto const_factory = make_learner_factory("constant", opt, 1, 0);
  const auto agree = boost3(const_factory, mixed, test_set, 8, 5);
  check.expect(agree.ensemble.degeneracy == BoostDegeneracy::empty_disagreement,
               "empty disagreement not flagged");
  check.expect(agree.ensemble.members.size() == 2, "two-model ensemble expected");
}

// ---- criterion 11 -----------------------------------------------------

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void cli_determinism(Check& check, const std::string& cli) {
  const fs::path root = fs::temp_directory_path() / "locml_acceptance_cli";
  fs::remove_all(root);
  fs::create_directories(root);

  const fs::path data_csv = root / "data.csv";
  const std::vector<std::pair<std::string, std::string>> runs = {
      {"data-gen", "per_class=50 features=4 seed=3 name=" + data_csv.filename().string()},
      {"swsgd-bench", "per_class=100 features=8 epochs=6 seeds=1,2,3"},
      {"joint-instance-bench",
       "rt_per_class=250 queries_per_class=50 features=20 repeat=2"},
      {"cv-bench", "per_class=60 features=4 k=4 epochs=2 seed=5"},
      {"trace", "kind=stencil n=32 m=32"},
      {"grad-check", "trials=30 mlp_trials=5 seed=11"},
  };

  for (const auto& [sub, extra] : runs) {
    const fs::path out = root / sub;
    const std::string command =
        cli + " " + sub + " --out " + out.string() + " " + extra + " > /dev/null 2>&1";
    check.expect(std::system(command.c_str()) == 0, sub + ": first run failed");
    if (!check.ok) return;

    std::map<std::string, std::string> first;
    for (const auto& entry : fs::directory_iterator(out)) {
      const auto name = entry.path().filename().string();
      if (name.find(".meta.json") != std::string::npos) continue;
      first[name] = slurp(entry.path());
    }
    check.expect(!first.empty(), sub + ": no payload files written");

    check.expect(std::system(command.c_str()) == 0, sub + ": second run failed");
    for (const auto& [name, content] : first) {
      const std::string again = slurp(out / name);
      check.expect(again == content, sub + ": payload " + name + " differs across reruns");
    }
    if (!check.ok) return;
  }
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: locml_acceptance <path-to-locml-cli>\n");
    return 2;
  }
  const std::string cli = argv[1];

  criterion(1, "joint PRW+k-NN equivalence and savings", joint_instance_equivalence);
  criterion(2, "SW-SGD(w=0) is bitwise MB-GD", swsgd_degeneracy);
  criterion(3, "SW-SGD window improves epoch-10 loss", swsgd_benefit);
  criterion(4, "analytic gradients match finite differences", gradient_correctness);
  criterion(5, "reuse-distance claims", reuse_distance_claims);
  criterion(6, "loop interchange raises the hit rate", loop_interchange);
  criterion(7, "stack distances and LRU monotonicity", cache_simulator_correctness);
  criterion(8, "naive Bayes single-epoch fit and posteriors", naive_bayes_single_epoch);
  criterion(9, "blocked GEMM equals the naive product", blocked_gemm);
  criterion(10, "boosting memoization and degenerate branches", boosting_memoization);
  criterion(11, "CLI payload determinism",
            [&](Check& check) { cli_determinism(check, cli); });

  if (failures > 0) {
    std::printf("%d criterion(s) failed\n", failures);
    return 1;
  }
  std::printf("all acceptance criteria passed\n");
  return 0;
}
